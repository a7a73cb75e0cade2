// Minimal use of the library: build a 4-block problem by hand, solve it
// block-wise, and compare with the ground truth.

#include <cstdio>
#include <vector>

#include "bpr/bpr.hpp"

int main() {
    using namespace bpr;
    constexpr std::size_t N = 256, K = 4, n = N / K, m = 6 * n, L = 20 * K;

    const ComplexVec x = random_complex_gaussian(N, 1);
    std::vector<DenseMatrix> blocks;
    for (std::size_t i = 0; i < K; ++i) blocks.push_back(random_gaussian_matrix(m, n, 100 + i));

    BlockPRInstance inst;
    inst.op = make_krbd(std::move(blocks));
    inst.measurements = measure(inst.op, x, MeasurementKind::intensity);
    inst.tuning_matrix = random_gaussian_matrix(L, N, 7);
    inst.tuning_measurements = measure(inst.tuning_matrix, x, MeasurementKind::intensity);
    inst.beta = 20.0;

    SolverSpec wf;
    wf.restarts = 3;
    auto [x_hat, out] = block_pr_solve(inst, wf, SolverSpec::tuner(), K);

    std::printf("NMSE %.3e  blocking %.3fs  tuning %.3fs\n", nmse(x, x_hat), out.stage_times.blocking_s,
                out.stage_times.tuning_s);
    for (std::size_t i = 0; i < K; ++i)
        std::printf("block %zu: %d iterations, residual %.2e\n", i, out.per_block_reports[i].iterations,
                    out.per_block_reports[i].final_residual);
    return 0;
}

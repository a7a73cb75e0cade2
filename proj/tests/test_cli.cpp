#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
};

CliResult run(const std::string& args) {
    const std::string cmd = std::string(BPR_CLI_PATH) + " " + args + " 2>/dev/null";
    CliResult r{-1, {}};
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("bpr_cli_test_" + name);
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST(Cli, GenThenSolve) {
    const auto dir = scratch("gen");
    const CliResult g = run("gen --n 32 --k 4 --snr inf --seed 3 --out " + dir.string());
    ASSERT_EQ(g.code, 0);
    for (const char* f : {"H.bpr", "y.bpr", "x_true.bpr", "A.bpr", "y_tuning.bpr", "config.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;

    const CliResult s = run("solve --in " + dir.string() + " --restarts 3");
    ASSERT_EQ(s.code, 0) << s.out;
    const auto j = nlohmann::json::parse(s.out);
    EXPECT_EQ(j.at("N").get<int>(), 32);
    EXPECT_EQ(j.at("K").get<int>(), 4);
    EXPECT_LE(j.at("nmse").get<double>(), 1e-6);
    EXPECT_EQ(j.at("block_reports").size(), 4u);
    fs::remove_all(dir);
}

TEST(Cli, SolveGeneratedInstanceWithBaseline) {
    const CliResult s = run("solve --n 32 --k 2 --seed 1 --compare-monolithic");
    ASSERT_EQ(s.code, 0);
    const auto j = nlohmann::json::parse(s.out);
    EXPECT_TRUE(j.contains("speedup"));
    EXPECT_TRUE(j.contains("monolithic_nmse"));
}

TEST(Cli, SweepWritesCsv) {
    const auto dir = scratch("sweep");
    fs::create_directories(dir);
    const auto out = dir / "k.csv";
    const CliResult s = run("sweep-k --n 32 --k-list 1,2 --trials 1 --out " + out.string());
    ASSERT_EQ(s.code, 0);
    std::ifstream is(out);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header.substr(0, 4), "N,K,");
    int rows = 0;
    for (std::string line; std::getline(is, line);) ++rows;
    EXPECT_EQ(rows, 2);
    fs::remove_all(dir);
}

TEST(Cli, ConfigFileAndOverride) {
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    const auto cfg = dir / "c.json";
    std::ofstream(cfg) << R"({"N": 16, "K": 2, "snr_db": "inf", "restarts": 3})";
    const CliResult s = run("solve --config " + cfg.string() + " --n 32");
    ASSERT_EQ(s.code, 0);
    EXPECT_EQ(nlohmann::json::parse(s.out).at("N").get<int>(), 32);
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("solve --n 30 --k 4").code, 2);          // N not divisible by K
    EXPECT_EQ(run("solve --solver magic").code, 2);        // unknown solver
    EXPECT_EQ(run("solve --snr loud").code, 2);            // bad number
    EXPECT_EQ(run("nonsense").code, 2);                    // unknown subcommand
    EXPECT_EQ(run("solve --in /nonexistent/instance").code, 3);
    EXPECT_EQ(run("sweep-n --n-list 32 --k 2 --trials 1 --out /nonexistent/dir/x.csv").code, 3);
}

#pragma once
// BPR1 binary container for vectors, dense matrices and K-RBD matrices:
//
//   "BPR1" | u32 rows | u32 cols | u8 kind (0 vector, 1 dense, 2 krbd)
//   krbd only: u32 K, then K x (u32 block_rows, u32 block_cols)
//   float64 (re, im) pairs, row-major; krbd stores its blocks in order.
//
// All integers and floats are little-endian. A vector is stored with cols = 1.
// The CSV text form writes one matrix row per line, entries as `a+bi`.

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>

#include "bpr/core.hpp"
#include "bpr/errors.hpp"

namespace bpr::io {

enum class BprKind : std::uint8_t { vector = 0, dense = 1, krbd = 2 };

using BprObject = std::variant<ComplexVec, DenseMatrix, KRBDMatrix>;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    os.write(b, 4);
}

inline void put_f64(std::ostream& os, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

inline void get_bytes(std::istream& is, char* dst, std::size_t n) {
    if (!is.read(dst, static_cast<std::streamsize>(n))) throw IoError("BPR1: truncated stream");
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    get_bytes(is, reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double get_f64(std::istream& is) {
    unsigned char b[8];
    get_bytes(is, reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return std::bit_cast<double>(v);
}

inline std::uint32_t checked_u32(std::size_t v) {
    if (v > 0xFFFFFFFFu) throw IoError("BPR1: dimension exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
}

inline void put_header(std::ostream& os, std::size_t rows, std::size_t cols, BprKind kind) {
    os.write("BPR1", 4);
    put_u32(os, checked_u32(rows));
    put_u32(os, checked_u32(cols));
    const char k = static_cast<char>(kind);
    os.write(&k, 1);
}

inline void put_entries(std::ostream& os, std::span<const cplx> v) {
    for (const auto& e : v) {
        put_f64(os, e.real());
        put_f64(os, e.imag());
    }
}

inline std::vector<cplx> get_entries(std::istream& is, std::size_t n) {
    std::vector<cplx> v(n);
    for (auto& e : v) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        e = {re, im};
    }
    return v;
}

}  // namespace detail

inline void write_bpr1(std::ostream& os, std::span<const cplx> v) {
    detail::put_header(os, v.size(), 1, BprKind::vector);
    detail::put_entries(os, v);
}

/// Real vectors (measurements) are stored with zero imaginary parts.
inline void write_bpr1(std::ostream& os, std::span<const double> v) {
    ComplexVec c(v.begin(), v.end());
    write_bpr1(os, std::span<const cplx>(c));
}

inline void write_bpr1(std::ostream& os, const DenseMatrix& m) {
    detail::put_header(os, m.rows(), m.cols(), BprKind::dense);
    detail::put_entries(os, m.entries());
}

inline void write_bpr1(std::ostream& os, const KRBDMatrix& m) {
    detail::put_header(os, m.rows(), m.cols(), BprKind::krbd);
    detail::put_u32(os, detail::checked_u32(m.num_blocks()));
    for (const auto& b : m.blocks()) {
        detail::put_u32(os, detail::checked_u32(b.rows()));
        detail::put_u32(os, detail::checked_u32(b.cols()));
    }
    for (const auto& b : m.blocks()) detail::put_entries(os, b.entries());
}

inline BprObject read_bpr1(std::istream& is) {
    char magic[4];
    detail::get_bytes(is, magic, 4);
    if (std::memcmp(magic, "BPR1", 4) != 0) throw IoError("BPR1: bad magic");
    const std::size_t rows = detail::get_u32(is);
    const std::size_t cols = detail::get_u32(is);
    char kind;
    detail::get_bytes(is, &kind, 1);
    try {
        switch (static_cast<BprKind>(kind)) {
            case BprKind::vector:
                if (cols != 1) throw IoError("BPR1: vector must have one column");
                return detail::get_entries(is, rows);
            case BprKind::dense:
                return DenseMatrix(rows, cols, detail::get_entries(is, rows * cols));
            case BprKind::krbd: {
                const std::size_t k = detail::get_u32(is);
                if (k == 0) throw IoError("BPR1: krbd with zero blocks");
                std::vector<std::pair<std::size_t, std::size_t>> shapes(k);
                for (auto& s : shapes) {
                    s.first = detail::get_u32(is);
                    s.second = detail::get_u32(is);
                }
                std::vector<DenseMatrix> blocks;
                blocks.reserve(k);
                for (const auto& [r, c] : shapes) blocks.emplace_back(r, c, detail::get_entries(is, r * c));
                KRBDMatrix m = make_krbd(std::move(blocks));
                if (m.rows() != rows || m.cols() != cols) throw IoError("BPR1: krbd header disagrees with blocks");
                return m;
            }
        }
    } catch (const IoError&) {
        throw;
    } catch (const Error& e) {
        throw IoError(std::string("BPR1: invalid payload: ") + e.what());
    }
    throw IoError("BPR1: unknown kind flag " + std::to_string(static_cast<int>(kind)));
}

template <typename T>
T read_bpr1_as(std::istream& is) {
    BprObject obj = read_bpr1(is);
    if (auto* p = std::get_if<T>(&obj)) return std::move(*p);
    throw IoError("BPR1: stored object has a different kind");
}

inline RealVec to_real(const ComplexVec& v) {
    RealVec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
    return r;
}

template <typename T>
void save_bpr1(const std::string& path, const T& obj) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_bpr1(os, obj);
    if (!os) throw IoError("write failed: " + path);
}

template <typename T>
T load_bpr1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return read_bpr1_as<T>(is);
}

inline std::string format_complex(cplx z) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
    return buf;
}

inline cplx parse_complex(const std::string& text) {
    std::string s;
    for (char c : text)
        if (c != ' ' && c != '\t' && c != '\r') s += c;
    if (s.empty()) throw IoError("CSV: empty entry");
    if (s.back() != 'i') {
        char* end = nullptr;
        const double re = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size()) throw IoError("CSV: malformed entry '" + text + "'");
        return {re, 0.0};
    }
    s.pop_back();
    // split at the last sign that is not a leading sign or part of an exponent
    std::size_t split = std::string::npos;
    for (std::size_t i = s.size(); i-- > 1;) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    auto num = [&](const std::string& part) {
        if (part == "+" || part.empty()) return 1.0;
        if (part == "-") return -1.0;
        char* end = nullptr;
        const double v = std::strtod(part.c_str(), &end);
        if (end != part.c_str() + part.size()) throw IoError("CSV: malformed entry '" + text + "'");
        return v;
    };
    if (split == std::string::npos) return {0.0, num(s)};
    return {num(s.substr(0, split)), num(s.substr(split))};
}

inline void write_csv(std::ostream& os, const DenseMatrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) os << ',';
            os << format_complex(m(r, c));
        }
        os << '\n';
    }
}

/// Vectors are written as a column: one entry per line.
inline void write_csv(std::ostream& os, std::span<const cplx> v) {
    for (const auto& e : v) os << format_complex(e) << '\n';
}

inline DenseMatrix read_csv_matrix(std::istream& is) {
    std::vector<cplx> entries;
    std::size_t cols = 0, rows = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            entries.push_back(parse_complex(cell));
            ++n;
        }
        if (rows == 0) cols = n;
        else if (n != cols) throw IoError("CSV: ragged rows");
        ++rows;
    }
    if (rows == 0) throw IoError("CSV: no data");
    return {rows, cols, std::move(entries)};
}

}  // namespace bpr::io

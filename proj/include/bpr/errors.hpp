#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bpr {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A dense matrix has mass outside the diagonal blocks of the requested partition.
class OffBlockMass : public Error {
public:
    OffBlockMass(std::size_t row, std::size_t col, double modulus)
        : Error("off-block entry at (" + std::to_string(row) + "," + std::to_string(col) +
                ") has modulus " + std::to_string(modulus)),
          row_(row), col_(col), modulus_(modulus) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }
    double modulus() const noexcept { return modulus_; }

private:
    std::size_t row_;
    std::size_t col_;
    double modulus_;
};

class RankDeficient : public Error {
public:
    using Error::Error;
};

/// Measurement vector is identically zero where a solver needs signal energy.
class ZeroMeasurements : public Error {
public:
    using Error::Error;
};

/// The truncated gradient kept no measurement for too many consecutive iterations.
class NonProgress : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace bpr

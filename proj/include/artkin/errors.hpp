#pragma once

#include <stdexcept>
#include <string>

namespace artkin {

// Malformed or insufficient input data (files, schemas, empty sets).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure or geometric degeneracy (singular inputs, collinear
// point sets, ill-conditioned systems, NaN in an objective).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace artkin

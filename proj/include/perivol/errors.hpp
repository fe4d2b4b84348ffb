#pragma once

#include <stdexcept>
#include <string>

namespace perivol {

// malformed or degenerate input data (bad CSV row, zero-variance series, ...)
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// numerical failure (non-finite filter state, singular Hessian, non-convergence)
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace perivol

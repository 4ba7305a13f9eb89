#pragma once

#include <stdexcept>

namespace kroncov {

// Bad input: dimension mismatches, malformed files, inadmissible sample
// sizes, and other contract violations detectable from the arguments.
// The CLI maps this to exit code 2.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure while iterating: a factor update that is not positive
// definite, a Cholesky breakdown, or a non-finite intermediate.
// The CLI maps this to exit code 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kroncov

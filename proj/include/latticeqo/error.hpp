#pragma once

#include <stdexcept>
#include <string>

namespace latticeqo {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed specs, unknown labels, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: eigensolver did not converge, unreachable tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace latticeqo

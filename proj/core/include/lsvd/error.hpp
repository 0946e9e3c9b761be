#pragma once

#include <stdexcept>
#include <string>

namespace lsvd {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: shapes, ranges, malformed flags. Maps to CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem and file-format failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-convergence, divergence, non-finite intermediates.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace lsvd

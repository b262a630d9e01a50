#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gvf {

/// Bad input: malformed records, shape mismatches, unresolvable ids.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed stream record; carries the zero-based record index.
class RecordError : public ValidationError {
 public:
  RecordError(std::size_t index, const std::string& what)
      : ValidationError("record " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Numerical failure: solver non-convergence, training divergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CgNonConvergence : public NumericalError {
 public:
  CgNonConvergence(int iterations, double residual)
      : NumericalError("conjugate gradient did not converge after " + std::to_string(iterations) +
                       " iterations (relative residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace gvf

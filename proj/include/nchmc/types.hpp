#ifndef NCHMC_TYPES_HPP
#define NCHMC_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace nchmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy. Everything thrown by the library derives from Error so
// callers (the CLI in particular) can map failures to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A Poisson/symplectic matrix that is singular or too ill-conditioned to use.
class DegenerateStructure : public Error {
 public:
  DegenerateStructure(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

// Diagnostics asked to summarize data that carries no information
// (constant chains, duplicated chains).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Potential or gradient evaluated to a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, Vector at)
      : Error(what), at_(std::move(at)) {}
  const Vector& at() const { return at_; }

 private:
  Vector at_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline bool all_finite(const Eigen::Ref<const Vector>& v) {
  return v.allFinite();
}

}  // namespace nchmc

#endif  // NCHMC_TYPES_HPP

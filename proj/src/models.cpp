#include "nchmc/models.hpp"

#include "nchmc/symplectic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace nchmc {

namespace {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Vector PhasePoint::stacked() const {
  Vector z(q.size() + p.size());
  z << q, p;
  return z;
}

PhasePoint PhasePoint::from_stacked(const Vector& z) {
  const Eigen::Index n = z.size() / 2;
  return PhasePoint{z.head(n), z.tail(n)};
}

double hamiltonian(const TargetModel& model, const PhasePoint& z) {
  if (z.q.size() != model.dim() || z.p.size() != model.dim())
    throw InvalidArgument("hamiltonian: phase point dimension does not match model");
  const double U = model.potential(z.q);
  if (!std::isfinite(U))
    throw EvaluationError("potential is not finite", z.q);
  return U + 0.5 * z.p.squaredNorm();
}

Vector grad_hamiltonian(const TargetModel& model, const PhasePoint& z) {
  if (z.q.size() != model.dim() || z.p.size() != model.dim())
    throw InvalidArgument("grad_hamiltonian: phase point dimension does not match model");
  Vector g = model.grad_potential(z.q);
  if (!g.allFinite()) throw EvaluationError("potential gradient is not finite", z.q);
  Vector out(2 * z.q.size());
  out << g, z.p;
  return out;
}

// --- Gaussian ---------------------------------------------------------------

GaussianTarget::GaussianTarget(Matrix precision) : precision_(std::move(precision)) {
  if (precision_.rows() < 1 || precision_.rows() != precision_.cols())
    throw InvalidArgument("Gaussian precision must be a non-empty square matrix");
  if (max_abs(precision_ - precision_.transpose()) > 1e-12)
    throw InvalidArgument("Gaussian precision must be symmetric");
}

GaussianTarget GaussianTarget::standard(Eigen::Index n) {
  return GaussianTarget(Matrix::Identity(n, n));
}

double GaussianTarget::potential(const Vector& q) const {
  return 0.5 * q.dot(precision_ * q);
}

Vector GaussianTarget::grad_potential(const Vector& q) const { return precision_ * q; }

std::string GaussianTarget::description() const {
  return "gaussian(n=" + std::to_string(dim()) + ")";
}

// --- Gaussian mixture -------------------------------------------------------

GaussianMixture::GaussianMixture(std::vector<Vector> centers, double variance)
    : centers_(std::move(centers)), variance_(variance) {
  if (centers_.empty()) throw InvalidArgument("Gaussian mixture needs at least one center");
  if (!(variance_ > 0.0)) throw InvalidArgument("mixture variance must be positive");
  const Eigen::Index n = centers_.front().size();
  if (n < 1) throw InvalidArgument("mixture centers must be non-empty vectors");
  for (const auto& c : centers_)
    if (c.size() != n) throw InvalidArgument("mixture centers differ in dimension");
}

GaussianMixture GaussianMixture::bimodal_benchmark() {
  Vector a(2), b(2);
  a << 2.5, -2.5;
  b << -2.5, 2.5;
  return GaussianMixture({a, b}, 1.0);
}

double GaussianMixture::potential(const Vector& q) const {
  const double K = static_cast<double>(centers_.size());
  const double d = static_cast<double>(dim());
  Vector logs(centers_.size());
  for (std::size_t i = 0; i < centers_.size(); ++i)
    logs(static_cast<Eigen::Index>(i)) = -(q - centers_[i]).squaredNorm() / (2.0 * variance_);
  const double m = logs.maxCoeff();
  const double lse = m + std::log((logs.array() - m).exp().sum());
  return -(lse - std::log(K) - 0.5 * d * std::log(2.0 * std::numbers::pi * variance_));
}

Vector GaussianMixture::grad_potential(const Vector& q) const {
  Vector logs(centers_.size());
  for (std::size_t i = 0; i < centers_.size(); ++i)
    logs(static_cast<Eigen::Index>(i)) = -(q - centers_[i]).squaredNorm() / (2.0 * variance_);
  const double m = logs.maxCoeff();
  const Vector w = (logs.array() - m).exp().matrix();
  const double total = w.sum();
  Vector g = Vector::Zero(q.size());
  for (std::size_t i = 0; i < centers_.size(); ++i)
    g += (w(static_cast<Eigen::Index>(i)) / total) * (q - centers_[i]);
  return g / variance_;
}

std::string GaussianMixture::description() const {
  std::ostringstream os;
  os << "gaussian-mixture(components=" << centers_.size() << ", n=" << dim()
     << ", variance=" << variance_ << ")";
  return os.str();
}

// --- Logistic regression ----------------------------------------------------

LogisticRegression::LogisticRegression(Matrix X, Vector y)
    : X_(std::move(X)), y_(std::move(y)) {
  if (X_.rows() == 0) throw InvalidArgument("logistic regression needs at least one observation");
  if (X_.cols() == 0) throw InvalidArgument("logistic regression needs at least one feature");
  if (y_.size() != X_.rows())
    throw InvalidArgument("label count does not match feature rows");
  for (Eigen::Index i = 0; i < y_.size(); ++i)
    if (y_(i) != 0.0 && y_(i) != 1.0)
      throw InvalidArgument("label at row " + std::to_string(i) + " is not 0 or 1");
}

LogisticRegression::LogisticRegression(Eigen::Index n) : X_(0, n), y_(0) {
  if (n < 1) throw InvalidArgument("logistic regression needs at least one feature");
}

LogisticRegression LogisticRegression::prior_only(Eigen::Index n) {
  return LogisticRegression(n);
}

double LogisticRegression::potential(const Vector& theta) const {
  const Vector t = X_ * theta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    nll += y_(i) * softplus(-t(i)) + (1.0 - y_(i)) * softplus(t(i));
  return 0.5 * theta.squaredNorm() + nll;
}

Vector LogisticRegression::grad_potential(const Vector& theta) const {
  const Vector t = X_ * theta;
  Vector residual(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) residual(i) = y_(i) - sigmoid(t(i));
  return theta - X_.transpose() * residual;
}

Matrix LogisticRegression::hessian(const Vector& theta) const {
  const Vector t = X_ * theta;
  Vector w(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double s = sigmoid(t(i));
    w(i) = s * (1.0 - s);
  }
  Matrix H = X_.transpose() * w.asDiagonal() * X_;
  H.diagonal().array() += 1.0;
  return H;
}

std::string LogisticRegression::description() const {
  return "logistic-regression(m=" + std::to_string(X_.rows()) +
         ", n=" + std::to_string(X_.cols()) + ")";
}

PosteriorMode find_posterior_mode(const LogisticRegression& model, double tol,
                                  int max_iterations) {
  PosteriorMode mode;
  mode.theta = Vector::Zero(model.dim());
  Vector g = model.grad_potential(mode.theta);
  double U = model.potential(mode.theta);
  for (int it = 0; it < max_iterations; ++it) {
    mode.gradient_norm = g.norm();
    mode.iterations = it;
    if (mode.gradient_norm < tol) {
      mode.information = model.hessian(mode.theta);
      return mode;
    }
    const Vector step = model.hessian(mode.theta).llt().solve(-g);
    // Backtracking on U; the Newton direction is a descent direction since
    // U is strictly convex.
    double t = 1.0;
    Vector next = mode.theta + step;
    double U_next = model.potential(next);
    while (!(U_next <= U + 1e-4 * t * g.dot(step)) && t > 1e-10) {
      t *= 0.5;
      next = mode.theta + t * step;
      U_next = model.potential(next);
    }
    mode.theta = next;
    U = U_next;
    g = model.grad_potential(mode.theta);
  }
  mode.gradient_norm = g.norm();
  if (mode.gradient_norm < tol) {
    mode.iterations = max_iterations;
    mode.information = model.hessian(mode.theta);
    return mode;
  }
  std::ostringstream os;
  os << "Newton mode search did not converge in " << max_iterations
     << " iterations (gradient norm " << mode.gradient_norm << ")";
  throw ConvergenceError(os.str(), mode.gradient_norm);
}

Matrix fisher_sqrt_at_mode(const LogisticRegression& model) {
  return spd_sqrt(find_posterior_mode(model).information);
}

}  // namespace nchmc

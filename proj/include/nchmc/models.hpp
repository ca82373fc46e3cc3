#ifndef NCHMC_MODELS_HPP
#define NCHMC_MODELS_HPP

#include "nchmc/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace nchmc {

struct PhasePoint {
  Vector q;
  Vector p;

  Eigen::Index dim() const { return q.size(); }

  /// (q, p) stacked into one 2n vector.
  Vector stacked() const;
  static PhasePoint from_stacked(const Vector& z);
};

/// Differentiable potential U(q). The Hamiltonian is always
/// H(q, p) = U(q) + p^T p / 2.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double potential(const Vector& q) const = 0;
  virtual Vector grad_potential(const Vector& q) const = 0;
  virtual std::string description() const = 0;
};

using ModelPtr = std::shared_ptr<const TargetModel>;

/// U(q) + |p|^2 / 2. Throws EvaluationError carrying q when U is not finite.
double hamiltonian(const TargetModel& model, const PhasePoint& z);

/// (grad U(q), p). Throws EvaluationError on a non-finite gradient.
Vector grad_hamiltonian(const TargetModel& model, const PhasePoint& z);

/// Wraps a model and counts potential/gradient calls. The counters are plain
/// members: one instance per trajectory or thread.
class CountingModel final : public TargetModel {
 public:
  explicit CountingModel(const TargetModel& inner) : inner_(inner) {}

  Eigen::Index dim() const override { return inner_.dim(); }
  double potential(const Vector& q) const override {
    ++potential_calls_;
    return inner_.potential(q);
  }
  Vector grad_potential(const Vector& q) const override {
    ++gradient_calls_;
    return inner_.grad_potential(q);
  }
  std::string description() const override { return inner_.description(); }

  std::size_t gradient_calls() const { return gradient_calls_; }
  std::size_t potential_calls() const { return potential_calls_; }
  void reset() { gradient_calls_ = potential_calls_ = 0; }

 private:
  const TargetModel& inner_;
  mutable std::size_t gradient_calls_ = 0;
  mutable std::size_t potential_calls_ = 0;
};

/// U(q) = q^T P q / 2 with no normalizing constant.
class GaussianTarget final : public TargetModel {
 public:
  explicit GaussianTarget(Matrix precision);
  static GaussianTarget standard(Eigen::Index n);

  Eigen::Index dim() const override { return precision_.rows(); }
  double potential(const Vector& q) const override;
  Vector grad_potential(const Vector& q) const override;
  std::string description() const override;

  const Matrix& precision() const { return precision_; }

 private:
  Matrix precision_;
};

/// Equal-weight isotropic Gaussian mixture,
/// U(q) = -log sum_i (1/K) N(q; c_i, variance * Id), normalizing constants kept.
class GaussianMixture final : public TargetModel {
 public:
  GaussianMixture(std::vector<Vector> centers, double variance);

  /// Two unit-variance components at (2.5, -2.5) and (-2.5, 2.5).
  static GaussianMixture bimodal_benchmark();

  Eigen::Index dim() const override { return centers_.front().size(); }
  double potential(const Vector& q) const override;
  Vector grad_potential(const Vector& q) const override;
  std::string description() const override;

  const std::vector<Vector>& centers() const { return centers_; }
  double variance() const { return variance_; }

 private:
  std::vector<Vector> centers_;
  double variance_;
};

/// Bayesian logistic regression with a standard normal prior on the
/// coefficients:
///   U(theta) = |theta|^2 / 2 - sum_i [y_i log s(x_i.theta) + (1-y_i) log(1-s(x_i.theta))].
/// The prior's normalizing constant is dropped.
class LogisticRegression final : public TargetModel {
 public:
  LogisticRegression(Matrix X, Vector y);

  /// No observations: the posterior is the prior.
  static LogisticRegression prior_only(Eigen::Index n);

  Eigen::Index dim() const override { return X_.cols(); }
  double potential(const Vector& theta) const override;
  Vector grad_potential(const Vector& theta) const override;
  std::string description() const override;

  /// Hessian of U: Id + X^T diag(s (1 - s)) X.
  Matrix hessian(const Vector& theta) const;

  Eigen::Index num_observations() const { return X_.rows(); }
  const Matrix& features() const { return X_; }
  const Vector& labels() const { return y_; }

 private:
  LogisticRegression(Eigen::Index n);

  Matrix X_;
  Vector y_;
};

struct PosteriorMode {
  Vector theta;
  Matrix information;  // Hessian of U at the mode
  double gradient_norm = 0.0;
  int iterations = 0;
};

/// Damped Newton from the origin until |grad U| < tol. Throws
/// ConvergenceError after max_iterations with the last gradient norm.
PosteriorMode find_posterior_mode(const LogisticRegression& model,
                                  double tol = 1e-8, int max_iterations = 200);

/// Symmetric square root of the observed information at the posterior mode.
Matrix fisher_sqrt_at_mode(const LogisticRegression& model);

// ---------------------------------------------------------------------------
// Fitzhugh-Nagumo ODE model
//
//   dV/dt = c (V - V^3/3 + R)
//   dR/dt = -(V - a + b R) / c

struct FitzhughNagumoParams {
  double a = 0.2;
  double b = 0.2;
  double c = 3.0;

  Vector as_vector() const;
  static FitzhughNagumoParams from_vector(const Vector& theta);
};

struct FitzhughNagumoData {
  std::vector<double> times;
  std::vector<double> obsV;
  std::vector<double> obsR;
  double sigma_noise = 0.1;
  double V0 = -1.0;
  double R0 = 1.0;
  FitzhughNagumoParams true_params;
  std::uint64_t seed = 0;

  std::size_t size() const { return times.size(); }
  /// Times strictly increasing and within [0, inf), observation lengths equal.
  void validate() const;
};

inline constexpr double kFitzhughNagumoStep = 0.005;

/// Solution and (optionally) forward sensitivities at the requested times.
struct FitzhughNagumoSolution {
  std::vector<double> V;
  std::vector<double> R;
  // d(V, R)/d(a, b, c) at each time: row 0 is V, row 1 is R.
  std::vector<Eigen::Matrix<double, 2, 3>> sensitivity;
};

/// Fixed-step classical RK4 from (V0, R0) at t = 0, landing exactly on each
/// observation time. With `sensitivities` the 2x3 forward sensitivity system
/// is integrated on the same grid. Throws EvaluationError if the state
/// leaves the finite range.
FitzhughNagumoSolution solve_fitzhugh_nagumo(const FitzhughNagumoParams& params,
                                             double V0, double R0,
                                             const std::vector<double>& times,
                                             bool sensitivities,
                                             double step = kFitzhughNagumoStep);

/// Posterior over (a, b, c) with Normal(0, 1/2) priors (variance 1/2) and a
/// Gaussian likelihood with variance 1/2 on both observed channels.
/// Normalizing constants are kept in U.
class FitzhughNagumoModel final : public TargetModel {
 public:
  explicit FitzhughNagumoModel(FitzhughNagumoData data,
                               double step = kFitzhughNagumoStep);

  Eigen::Index dim() const override { return 3; }
  double potential(const Vector& theta) const override;
  Vector grad_potential(const Vector& theta) const override;
  std::string description() const override;

  /// Additive constant contained in U: Gaussian normalizers of the prior and
  /// likelihood terms.
  double log_normalizer() const { return log_normalizer_; }
  const FitzhughNagumoData& data() const { return data_; }

  static constexpr double kPriorVariance = 0.5;
  static constexpr double kLikelihoodVariance = 0.5;

 private:
  FitzhughNagumoData data_;
  double step_;
  double log_normalizer_;
};

/// `count` equispaced observation times t_i = 10 i / count on [0, 10),
/// states from RK4 at the true parameters (0.2, 0.2, 3) from (V0, R0) =
/// (-1, 1), and additive N(0, 0.1^2) noise from the stream for `seed`.
FitzhughNagumoData simulate_fn_data(std::uint64_t seed, std::size_t count,
                                    bool noiseless = false);

}  // namespace nchmc

#endif  // NCHMC_MODELS_HPP

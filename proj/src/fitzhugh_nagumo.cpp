#include "nchmc/models.hpp"

#include "nchmc/rng.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nchmc {

namespace {

// State layout: V, R, dV/da, dV/db, dV/dc, dR/da, dR/db, dR/dc.
using State = std::array<double, 8>;

State rhs(const FitzhughNagumoParams& th, const State& y, bool sens) {
  const double V = y[0], R = y[1];
  const double a = th.a, b = th.b, c = th.c;
  State dy{};
  dy[0] = c * (V - V * V * V / 3.0 + R);
  dy[1] = -(V - a + b * R) / c;
  if (!sens) return dy;
  // Jacobian with respect to the state.
  const double fVV = c * (1.0 - V * V), fVR = c;
  const double fRV = -1.0 / c, fRR = -b / c;
  // Jacobian with respect to (a, b, c).
  const double fVa = 0.0, fVb = 0.0, fVc = V - V * V * V / 3.0 + R;
  const double fRa = 1.0 / c, fRb = -R / c, fRc = (V - a + b * R) / (c * c);
  const double pV[3] = {fVa, fVb, fVc};
  const double pR[3] = {fRa, fRb, fRc};
  for (int j = 0; j < 3; ++j) {
    const double SV = y[2 + j], SR = y[5 + j];
    dy[2 + j] = fVV * SV + fVR * SR + pV[j];
    dy[5 + j] = fRV * SV + fRR * SR + pR[j];
  }
  return dy;
}

State axpy(const State& y, double h, const State& k) {
  State out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i] + h * k[i];
  return out;
}

void rk4_step(const FitzhughNagumoParams& th, State& y, double h, bool sens) {
  const State k1 = rhs(th, y, sens);
  const State k2 = rhs(th, axpy(y, 0.5 * h, k1), sens);
  const State k3 = rhs(th, axpy(y, 0.5 * h, k2), sens);
  const State k4 = rhs(th, axpy(y, h, k3), sens);
  const std::size_t len = sens ? 8 : 2;
  for (std::size_t i = 0; i < len; ++i)
    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace

Vector FitzhughNagumoParams::as_vector() const {
  Vector v(3);
  v << a, b, c;
  return v;
}

FitzhughNagumoParams FitzhughNagumoParams::from_vector(const Vector& theta) {
  if (theta.size() != 3) throw InvalidArgument("Fitzhugh-Nagumo parameters are (a, b, c)");
  return {theta(0), theta(1), theta(2)};
}

void FitzhughNagumoData::validate() const {
  if (times.empty()) throw InvalidArgument("Fitzhugh-Nagumo data has no observations");
  if (obsV.size() != times.size() || obsR.size() != times.size())
    throw InvalidArgument("Fitzhugh-Nagumo observation lengths do not match times");
  if (times.front() < 0.0) throw InvalidArgument("observation times must be non-negative");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw InvalidArgument("observation times must be strictly increasing");
}

FitzhughNagumoSolution solve_fitzhugh_nagumo(const FitzhughNagumoParams& params,
                                             double V0, double R0,
                                             const std::vector<double>& times,
                                             bool sensitivities, double step) {
  if (!(step > 0.0)) throw InvalidArgument("RK4 step must be positive");
  FitzhughNagumoSolution sol;
  sol.V.reserve(times.size());
  sol.R.reserve(times.size());
  if (sensitivities) sol.sensitivity.reserve(times.size());

  State y{};
  y[0] = V0;
  y[1] = R0;
  double t = 0.0;
  for (double target : times) {
    if (target < t) throw InvalidArgument("observation times must be increasing and >= 0");
    const double span = target - t;
    if (span > 0.0) {
      // Uniform sub-steps no longer than `step` that land exactly on target.
      const auto count = static_cast<long>(std::ceil(span / step - 1e-9));
      const double h = span / static_cast<double>(std::max(count, 1L));
      for (long k = 0; k < std::max(count, 1L); ++k) rk4_step(params, y, h, sensitivities);
      t = target;
    }
    for (std::size_t i = 0; i < (sensitivities ? 8u : 2u); ++i) {
      if (!std::isfinite(y[i])) {
        throw EvaluationError("Fitzhugh-Nagumo solution became non-finite at t=" +
                                  std::to_string(target),
                              params.as_vector());
      }
    }
    sol.V.push_back(y[0]);
    sol.R.push_back(y[1]);
    if (sensitivities) {
      Eigen::Matrix<double, 2, 3> S;
      S << y[2], y[3], y[4], y[5], y[6], y[7];
      sol.sensitivity.push_back(S);
    }
  }
  return sol;
}

FitzhughNagumoModel::FitzhughNagumoModel(FitzhughNagumoData data, double step)
    : data_(std::move(data)), step_(step) {
  data_.validate();
  if (!(step_ > 0.0)) throw InvalidArgument("RK4 step must be positive");
  const double log_norm_prior = 0.5 * std::log(2.0 * std::numbers::pi * kPriorVariance);
  const double log_norm_lik = 0.5 * std::log(2.0 * std::numbers::pi * kLikelihoodVariance);
  log_normalizer_ = 3.0 * log_norm_prior +
                    2.0 * static_cast<double>(data_.size()) * log_norm_lik;
}

double FitzhughNagumoModel::potential(const Vector& theta) const {
  const auto params = FitzhughNagumoParams::from_vector(theta);
  const auto sol = solve_fitzhugh_nagumo(params, data_.V0, data_.R0, data_.times,
                                         false, step_);
  double misfit = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double rV = sol.V[i] - data_.obsV[i];
    const double rR = sol.R[i] - data_.obsR[i];
    misfit += rV * rV + rR * rR;
  }
  return theta.squaredNorm() / (2.0 * kPriorVariance) +
         misfit / (2.0 * kLikelihoodVariance) + log_normalizer_;
}

Vector FitzhughNagumoModel::grad_potential(const Vector& theta) const {
  const auto params = FitzhughNagumoParams::from_vector(theta);
  const auto sol = solve_fitzhugh_nagumo(params, data_.V0, data_.R0, data_.times,
                                         true, step_);
  Eigen::Vector3d g = theta / kPriorVariance;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double rV = sol.V[i] - data_.obsV[i];
    const double rR = sol.R[i] - data_.obsR[i];
    g += (rV * sol.sensitivity[i].row(0).transpose() +
          rR * sol.sensitivity[i].row(1).transpose()) /
         kLikelihoodVariance;
  }
  return g;
}

std::string FitzhughNagumoModel::description() const {
  std::ostringstream os;
  os << "fitzhugh-nagumo(observations=" << data_.size() << ", step=" << step_ << ")";
  return os.str();
}

FitzhughNagumoData simulate_fn_data(std::uint64_t seed, std::size_t count,
                                    bool noiseless) {
  if (count < 1) throw InvalidArgument("simulate_fn_data: count must be >= 1");
  FitzhughNagumoData data;
  data.seed = seed;
  data.times.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    data.times[i] = 10.0 * static_cast<double>(i) / static_cast<double>(count);
  const auto sol = solve_fitzhugh_nagumo(data.true_params, data.V0, data.R0,
                                         data.times, false);
  data.obsV = sol.V;
  data.obsR = sol.R;
  if (!noiseless) {
    RandomStream stream(seed);
    for (std::size_t i = 0; i < count; ++i) {
      data.obsV[i] += data.sigma_noise * stream.normal();
      data.obsR[i] += data.sigma_noise * stream.normal();
    }
  } else {
    data.sigma_noise = 0.0;
  }
  return data;
}

}  // namespace nchmc

#include "nchmc/diagnostics.hpp"

#include "nchmc/serialization.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace nchmc {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

Vector autocorrelation(const Eigen::Ref<const Vector>& chain) {
  const Eigen::Index n = chain.size();
  if (n < 1) throw InvalidArgument("autocorrelation of an empty chain");
  std::size_t padded = 1;
  while (padded < static_cast<std::size_t>(2 * n)) padded <<= 1;

  const double mean = chain.mean();
  std::vector<double> x(padded, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = chain(i) - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, x);
  for (auto& f : freq) f = std::complex<double>(std::norm(f), 0.0);
  std::vector<double> acov;
  fft.inv(acov, freq);

  Vector rho(n);
  const double c0 = acov[0];
  if (!(c0 > 0.0)) {
    rho.setZero();
    rho(0) = 1.0;
    return rho;
  }
  for (Eigen::Index k = 0; k < n; ++k) rho(k) = acov[static_cast<std::size_t>(k)] / c0;
  return rho;
}

EssEstimate effective_sample_size(const Eigen::Ref<const Vector>& chain) {
  const Eigen::Index n = chain.size();
  if (n < kMinEssLength)
    throw InvalidArgument("effective sample size needs at least " +
                          std::to_string(kMinEssLength) + " draws, got " + std::to_string(n));
  if (!chain.allFinite()) throw InvalidArgument("effective sample size of a non-finite chain");
  const double N = static_cast<double>(n);
  if (chain.maxCoeff() == chain.minCoeff()) return {N, true};

  const Vector rho = autocorrelation(chain);
  // tau = -1 + 2 * sum of positive pair sums (rho_2m + rho_2m+1).
  double pair_total = 0.0;
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    const double pair = rho(2 * m) + rho(2 * m + 1);
    if (!(pair > 0.0)) break;
    pair_total += pair;
  }
  const double tau = -1.0 + 2.0 * pair_total;
  if (!(tau > 0.0)) return {N, false};
  return {std::min(N, N / tau), false};
}

double rhat(const std::vector<Vector>& chains) {
  if (chains.size() < 2) throw InvalidArgument("R-hat needs at least two chains");
  const Eigen::Index len = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != len) throw InvalidArgument("R-hat chains must have equal length");
  if (len < kMinRhatLength)
    throw InvalidArgument("R-hat chains must have at least " + std::to_string(kMinRhatLength) +
                          " draws");

  bool all_identical = true;
  for (std::size_t i = 1; i < chains.size() && all_identical; ++i)
    all_identical = chains[i] == chains.front();
  if (all_identical) throw DegenerateInput("R-hat of identical chains is undefined");

  // Split each chain in half; an odd middle draw is dropped.
  const Eigen::Index half = len / 2;
  std::vector<Vector> parts;
  parts.reserve(2 * chains.size());
  for (const auto& c : chains) {
    parts.emplace_back(c.head(half));
    parts.emplace_back(c.tail(half));
  }
  const double n = static_cast<double>(half);
  const double m = static_cast<double>(parts.size());

  Vector means(parts.size());
  double W = 0.0;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const double mu = parts[j].mean();
    means(static_cast<Eigen::Index>(j)) = mu;
    W += (parts[j].array() - mu).square().sum() / (n - 1.0);
  }
  W /= m;
  if (!(W > 0.0)) throw DegenerateInput("R-hat of constant chains is undefined");
  const double grand = means.mean();
  const double B = n * (means.array() - grand).square().sum() / (m - 1.0);
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

DiagnosticsSummary summarize(const std::vector<ChainResult>& results, const std::string& method) {
  if (results.empty()) throw InvalidArgument("summarize needs at least one chain");
  const Eigen::Index dim = results.front().dim();
  const Eigen::Index len = results.front().size();
  for (std::size_t c = 0; c < results.size(); ++c) {
    if (results[c].dim() != dim)
      throw InvalidArgument("chain " + std::to_string(c) + " has dimension " +
                            std::to_string(results[c].dim()) + ", expected " +
                            std::to_string(dim));
    if (results[c].size() < 1)
      throw InvalidArgument("chain " + std::to_string(c) + " has no samples");
  }

  DiagnosticsSummary s;
  s.method = method;
  s.n_chains = static_cast<Eigen::Index>(results.size());
  s.n_samples = len;

  Eigen::Index total_rows = 0;
  for (const auto& r : results) total_rows += r.size();
  s.posterior_mean.resize(dim);
  s.posterior_std.resize(dim);
  s.posterior_median.resize(dim);
  s.ess.resize(dim);
  s.ess_degenerate.assign(static_cast<std::size_t>(dim), 0);
  for (Eigen::Index j = 0; j < dim; ++j) {
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(total_rows));
    for (const auto& r : results)
      for (Eigen::Index i = 0; i < r.size(); ++i) pooled.push_back(r.samples(i, j));
    // Sorting first makes the pooled moments independent of chain order.
    std::sort(pooled.begin(), pooled.end());
    double sum = 0.0;
    for (double x : pooled) sum += x;
    const double mean = sum / static_cast<double>(pooled.size());
    double ss = 0.0;
    for (double x : pooled) ss += (x - mean) * (x - mean);
    s.posterior_mean(j) = mean;
    // Population form, so duplicating chains leaves it unchanged.
    s.posterior_std(j) = std::sqrt(ss / static_cast<double>(pooled.size()));
    s.posterior_median(j) = median_of(pooled);

    double ess_sum = 0.0;
    bool degenerate = false;
    for (const auto& r : results) {
      if (r.size() >= kMinEssLength) {
        const auto est = effective_sample_size(r.samples.col(j));
        ess_sum += est.value;
        degenerate = degenerate || est.degenerate;
      } else {
        ess_sum += static_cast<double>(r.size());
        degenerate = true;
      }
    }
    s.ess(j) = ess_sum / static_cast<double>(results.size());
    s.ess_degenerate[static_cast<std::size_t>(j)] = degenerate ? 1 : 0;
  }
  s.ess_mean = s.ess.mean();
  s.ess_min = s.ess.minCoeff();

  std::size_t accepted = 0, iterations = 0;
  for (const auto& r : results) {
    s.wall_seconds += r.wall_seconds;
    s.gradient_evals += r.gradient_evals;
    for (auto a : r.accepted) accepted += a ? 1 : 0;
    iterations += r.accepted.size();
  }
  s.accept_rate = iterations ? static_cast<double>(accepted) / static_cast<double>(iterations) : 0.0;
  s.ess_min_per_sec = s.wall_seconds > 0.0 ? s.ess_min / s.wall_seconds
                                           : std::numeric_limits<double>::quiet_NaN();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.rhat = Vector::Constant(dim, nan);
  s.rhat_max = nan;
  bool equal_lengths = true;
  for (const auto& r : results) equal_lengths = equal_lengths && r.size() == len;
  if (results.size() >= 2 && equal_lengths && len >= kMinRhatLength) {
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < dim; ++j) {
      std::vector<Vector> cols;
      for (const auto& r : results) cols.emplace_back(r.samples.col(j));
      try {
        s.rhat(j) = rhat(cols);
        worst = std::max(worst, s.rhat(j));
      } catch (const DegenerateInput&) {
        s.ess_degenerate[static_cast<std::size_t>(j)] = 1;
      }
    }
    if (std::isfinite(worst)) s.rhat_max = worst;
  }
  return s;
}

nlohmann::json DiagnosticsSummary::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["ess_mean"] = ess_mean;
  j["ess_min"] = ess_min;
  j["ess_min_per_sec"] = ess_min_per_sec;
  j["rhat_max"] = rhat_max;
  j["accept_rate"] = accept_rate;
  j["wall_seconds"] = wall_seconds;
  j["gradient_evals"] = gradient_evals;
  return j;
}

std::string coordinate_csv(const DiagnosticsSummary& s) {
  std::ostringstream os;
  os << "coordinate,mean,std,median,ess,rhat\n";
  for (Eigen::Index j = 0; j < s.ess.size(); ++j) {
    os << (j + 1) << ',' << format_double(s.posterior_mean(j)) << ','
       << format_double(s.posterior_std(j)) << ',' << format_double(s.posterior_median(j))
       << ',' << format_double(s.ess(j)) << ',' << format_double(s.rhat(j)) << '\n';
  }
  return os.str();
}

void write_coordinate_csv(const std::filesystem::path& path, const DiagnosticsSummary& s) {
  write_text_file(path, coordinate_csv(s));
}

}  // namespace nchmc

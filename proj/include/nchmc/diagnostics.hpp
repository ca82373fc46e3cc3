#ifndef NCHMC_DIAGNOSTICS_HPP
#define NCHMC_DIAGNOSTICS_HPP

#include "nchmc/chain.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace nchmc {

inline constexpr Eigen::Index kMinEssLength = 10;
inline constexpr Eigen::Index kMinRhatLength = 4;

struct EssEstimate {
  double value = 0.0;
  bool degenerate = false;  // zero variance; value is then the chain length
};

/// Effective sample size with the initial positive sequence estimator:
/// autocorrelations are summed in adjacent pairs until the first pair whose
/// sum is non-positive. Clamped to (0, N]. Requires N >= 10.
EssEstimate effective_sample_size(const Eigen::Ref<const Vector>& chain);

inline double ess(const Eigen::Ref<const Vector>& chain) {
  return effective_sample_size(chain).value;
}

/// Normalized autocorrelation at lags 0..N-1 (biased autocovariance, FFT).
Vector autocorrelation(const Eigen::Ref<const Vector>& chain);

/// Split-chain potential scale reduction. Requires at least two chains of
/// equal length >= 4. Throws DegenerateInput when every chain is constant or
/// all chains are identical.
double rhat(const std::vector<Vector>& chains);

struct DiagnosticsSummary {
  std::string method;
  Eigen::Index n_chains = 0;
  Eigen::Index n_samples = 0;  // per chain

  Vector ess;  // per coordinate, averaged over chains
  std::vector<std::uint8_t> ess_degenerate;
  double ess_mean = 0.0;
  double ess_min = 0.0;
  double ess_min_per_sec = 0.0;

  Vector rhat;  // per coordinate; NaN where not computable
  double rhat_max = 0.0;  // NaN when R-hat was not computed

  Vector posterior_mean;
  Vector posterior_std;
  Vector posterior_median;

  double accept_rate = 0.0;
  double wall_seconds = 0.0;  // summed over chains
  std::size_t gradient_evals = 0;

  /// {method, ess_mean, ess_min, ess_min_per_sec, rhat_max, accept_rate,
  ///  wall_seconds, gradient_evals}; NaN becomes null.
  nlohmann::json to_json() const;
};

/// Pooled moments over all chains, per-chain ESS averaged over chains, and
/// R-hat when there are at least two chains. Invariant to the order of
/// `results` up to floating-point summation order in the ESS average.
DiagnosticsSummary summarize(const std::vector<ChainResult>& results,
                             const std::string& method = "");

/// CSV with columns coordinate,mean,std,median,ess,rhat.
std::string coordinate_csv(const DiagnosticsSummary& s);
void write_coordinate_csv(const std::filesystem::path& path, const DiagnosticsSummary& s);

}  // namespace nchmc

#endif  // NCHMC_DIAGNOSTICS_HPP

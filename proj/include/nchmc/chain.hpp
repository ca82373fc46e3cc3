#ifndef NCHMC_CHAIN_HPP
#define NCHMC_CHAIN_HPP

#include "nchmc/types.hpp"

#include <cstdint>
#include <vector>

namespace nchmc {

/// Output of one Markov chain. Row i of `samples`/`momenta` is the state
/// yielded at iteration i (the retained state when the proposal was rejected).
struct ChainResult {
  Matrix samples;
  Matrix momenta;
  std::vector<double> h_before;
  std::vector<double> h_after;  // +inf when the proposal was non-finite
  std::vector<std::uint8_t> accepted;
  std::vector<double> defect;  // explicit integrator only: copy separation per proposal
  double wall_seconds = 0.0;
  std::size_t gradient_evals = 0;
  std::size_t unconverged = 0;  // implicit solves that hit the iteration cap
  std::size_t non_finite = 0;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
  double accept_rate() const;
};

inline double ChainResult::accept_rate() const {
  if (accepted.empty()) return 0.0;
  std::size_t n = 0;
  for (auto a : accepted) n += a ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(accepted.size());
}

}  // namespace nchmc

#endif  // NCHMC_CHAIN_HPP

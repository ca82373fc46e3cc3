#ifndef NCHMC_SAMPLER_HPP
#define NCHMC_SAMPLER_HPP

#include "nchmc/chain.hpp"
#include "nchmc/diagnostics.hpp"
#include "nchmc/integrators.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nchmc {

enum class IntegratorKind { Leapfrog, ImplicitMidpoint, Explicit };

std::string_view to_string(IntegratorKind kind);
IntegratorKind parse_integrator_kind(std::string_view name);

struct SamplerConfig {
  IntegratorKind integrator = IntegratorKind::ImplicitMidpoint;
  StructureVariant variant;
  std::uint64_t structure_seed = 0;
  IntegratorConfig integration;  // step size, steps per proposal, omega, solver
  int n_samples = 1000;
  std::uint64_t chain_seed = 0;
  // On rejection, switch between the structure and its time reversal and
  // negate the step size. The switch persists across later iterations.
  bool flip_on_reject = false;
  Vector initial_q;

  void validate() const;
};

/// Structures and bases a chain integrates with. Built once and shared
/// read-only between chains.
struct ChainGeometry {
  PoissonStructure structure;
  PoissonStructure reversed;
  std::optional<DarbouxBasis> basis;           // explicit integrator only
  std::optional<DarbouxBasis> reversed_basis;  // explicit integrator only
};

/// Builds the structure from cfg.variant and cfg.structure_seed (the same
/// seed drives Gram-Schmidt when no closed-form basis exists).
ChainGeometry prepare_geometry(const SamplerConfig& cfg, Eigen::Index n);

/// One chain. Each iteration draws p ~ N(0, Id), integrates, then draws
/// u ~ U(0, 1) and accepts iff log u < min(0, H - H'). Non-finite proposals
/// and unconverged implicit solves are rejected.
ChainResult run_chain(const TargetModel& model, const SamplerConfig& cfg);
ChainResult run_chain(const TargetModel& model, const SamplerConfig& cfg,
                      const ChainGeometry& geometry);

struct ExperimentResult {
  std::vector<ChainResult> chains;
  DiagnosticsSummary summary;
};

/// n_chains chains with seeds chain_seed + i, run concurrently. A failing
/// chain fails the whole experiment with its index in the message. The
/// summary's wall_seconds is the elapsed time of the whole experiment.
ExperimentResult run_experiment(const TargetModel& model, const SamplerConfig& base,
                                int n_chains, bool require_rhat = true,
                                const std::string& method = "");

/// CSV with columns iteration,accepted,H_before,H_after,q_1..q_n.
std::string chain_csv(const ChainResult& chain);

}  // namespace nchmc

#endif  // NCHMC_SAMPLER_HPP

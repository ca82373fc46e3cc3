#include "nchmc/sampler.hpp"

#include "nchmc/rng.hpp"
#include "nchmc/serialization.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace nchmc {

std::string_view to_string(IntegratorKind kind) {
  switch (kind) {
    case IntegratorKind::Leapfrog: return "leapfrog";
    case IntegratorKind::ImplicitMidpoint: return "implicit-midpoint";
    case IntegratorKind::Explicit: return "explicit";
  }
  return "unknown";
}

IntegratorKind parse_integrator_kind(std::string_view name) {
  for (auto kind : {IntegratorKind::Leapfrog, IntegratorKind::ImplicitMidpoint,
                    IntegratorKind::Explicit})
    if (to_string(kind) == name) return kind;
  throw InvalidArgument("unknown integrator '" + std::string(name) + "'");
}

void SamplerConfig::validate() const {
  integration.validate();
  if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
  if (initial_q.size() < 1) throw InvalidArgument("initial position must be non-empty");
  if (!initial_q.allFinite()) throw InvalidArgument("initial position must be finite");
  if (integrator == IntegratorKind::Leapfrog && variant.tag != VariantTag::Canonical &&
      variant.tag != VariantTag::MassPreconditioned)
    throw InvalidArgument("leapfrog is only available for the canonical structure, not '" +
                          std::string(to_string(variant.tag)) + "'");
}

ChainGeometry prepare_geometry(const SamplerConfig& cfg, Eigen::Index n) {
  PoissonStructure s = build_structure(cfg.variant, n, cfg.structure_seed);
  PoissonStructure r = time_reversal(s);
  ChainGeometry g{std::move(s), std::move(r), std::nullopt, std::nullopt};
  if (cfg.integrator == IntegratorKind::Explicit) {
    g.basis = darboux_basis_for(cfg.variant, g.structure, cfg.structure_seed);
    g.reversed_basis = time_reversal(*g.basis);
  }
  return g;
}

ChainResult run_chain(const TargetModel& model, const SamplerConfig& cfg) {
  cfg.validate();
  return run_chain(model, cfg, prepare_geometry(cfg, model.dim()));
}

ChainResult run_chain(const TargetModel& model, const SamplerConfig& cfg,
                      const ChainGeometry& geometry) {
  cfg.validate();
  const Eigen::Index n = model.dim();
  if (cfg.initial_q.size() != n || geometry.structure.dim() != n)
    throw InvalidArgument("sampler: model dimension " + std::to_string(n) +
                          " does not match the initial position (" +
                          std::to_string(cfg.initial_q.size()) + ") or structure (" +
                          std::to_string(geometry.structure.dim()) + ")");
  if (cfg.integrator == IntegratorKind::Leapfrog && !geometry.structure.separable_blocks())
    throw InvalidArgument("leapfrog requires a canonical structure (E = G = 0)");
  if (cfg.integrator == IntegratorKind::Explicit && !geometry.basis)
    throw InvalidArgument("explicit integrator requires a Darboux basis");

  RandomStream stream(cfg.chain_seed);
  ChainResult out;
  const auto rows = static_cast<Eigen::Index>(cfg.n_samples);
  out.samples.resize(rows, n);
  out.momenta.resize(rows, n);
  out.h_before.reserve(static_cast<std::size_t>(rows));
  out.h_after.reserve(static_cast<std::size_t>(rows));
  out.accepted.reserve(static_cast<std::size_t>(rows));

  const auto start = std::chrono::steady_clock::now();
  Vector q = cfg.initial_q;
  bool reversed = false;
  IntegratorConfig ic = cfg.integration;
  for (Eigen::Index it = 0; it < rows; ++it) {
    const PhasePoint current{q, stream.normal_vector(n)};
    const double H = hamiltonian(model, current);

    ic.step_size = reversed ? -cfg.integration.step_size : cfg.integration.step_size;
    TrajectoryResult traj;
    switch (cfg.integrator) {
      case IntegratorKind::Leapfrog:
        traj = leapfrog_trajectory(model, reversed ? geometry.reversed : geometry.structure,
                                   current, ic);
        break;
      case IntegratorKind::ImplicitMidpoint:
        traj = implicit_trajectory(model, reversed ? geometry.reversed : geometry.structure,
                                   current, ic);
        break;
      case IntegratorKind::Explicit:
        traj = explicit_trajectory(model, reversed ? *geometry.reversed_basis : *geometry.basis,
                                   current, ic);
        break;
    }
    out.gradient_evals += traj.gradient_evals;
    if (cfg.integrator == IntegratorKind::Explicit) out.defect.push_back(traj.defect);

    double H_new = std::numeric_limits<double>::infinity();
    if (traj.status == StepStatus::Ok) {
      try {
        H_new = hamiltonian(model, traj.end);
      } catch (const EvaluationError&) {
        ++out.non_finite;
      }
    } else if (traj.status == StepStatus::Unconverged) {
      ++out.unconverged;
    } else {
      ++out.non_finite;
    }

    const double u = stream.uniform();
    const double log_ratio = std::min(0.0, H - H_new);
    const bool accept = std::isfinite(H_new) && std::log(u) < log_ratio;

    if (accept) {
      q = traj.end.q;
      out.momenta.row(it) = traj.end.p.transpose();
    } else {
      out.momenta.row(it) = current.p.transpose();
      if (cfg.flip_on_reject) reversed = !reversed;
    }
    out.samples.row(it) = q.transpose();
    out.h_before.push_back(H);
    out.h_after.push_back(H_new);
    out.accepted.push_back(accept ? 1 : 0);
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ExperimentResult run_experiment(const TargetModel& model, const SamplerConfig& base,
                                int n_chains, bool require_rhat, const std::string& method) {
  if (n_chains < 1) throw InvalidArgument("n_chains must be >= 1");
  if (require_rhat && n_chains < 2)
    throw InvalidArgument("R-hat needs at least two chains; got n_chains = " +
                          std::to_string(n_chains));
  base.validate();
  const ChainGeometry geometry = prepare_geometry(base, model.dim());
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::future<ChainResult>> futures;
  futures.reserve(static_cast<std::size_t>(n_chains));
  for (int i = 0; i < n_chains; ++i) {
    SamplerConfig cfg = base;
    cfg.chain_seed = base.chain_seed + static_cast<std::uint64_t>(i);
    futures.push_back(std::async(std::launch::async, [&model, &geometry, cfg]() {
      return run_chain(model, cfg, geometry);
    }));
  }
  ExperimentResult result;
  result.chains.reserve(futures.size());
  std::string failure;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    try {
      result.chains.push_back(futures[i].get());
    } catch (const std::exception& e) {
      if (failure.empty()) failure = "chain " + std::to_string(i) + " failed: " + e.what();
    }
  }
  if (!failure.empty()) throw Error(failure);
  result.summary = summarize(result.chains, method);
  // Concurrent chains overlap in time, so the experiment's elapsed time
  // replaces the per-chain sum.
  result.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.summary.ess_min_per_sec = result.summary.ess_min / result.summary.wall_seconds;
  if (require_rhat && std::isnan(result.summary.rhat_max))
    throw DegenerateInput("R-hat is undefined for every coordinate of this experiment");
  return result;
}

std::string chain_csv(const ChainResult& chain) {
  std::ostringstream os;
  os << "iteration,accepted,H_before,H_after";
  for (Eigen::Index j = 0; j < chain.dim(); ++j) os << ",q_" << (j + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < chain.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    os << i << ',' << static_cast<int>(chain.accepted[k]) << ','
       << format_double(chain.h_before[k]) << ',' << format_double(chain.h_after[k]);
    for (Eigen::Index j = 0; j < chain.dim(); ++j) os << ',' << format_double(chain.samples(i, j));
    os << '\n';
  }
  return os.str();
}

}  // namespace nchmc

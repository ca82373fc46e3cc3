#ifndef NCHMC_EXPERIMENTS_HPP
#define NCHMC_EXPERIMENTS_HPP

#include "nchmc/sampler.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace nchmc {

enum class Task { Gaussian, Mixture, Logistic, FitzhughNagumo, OmegaSweep, Trajectory };

enum class Method { CanLeapfrog, MagPosExp, MagMomImp, MagMomExp, CmagImp, CmagExp, CanImp };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);
std::string_view to_string(Method method);
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

/// Integrator and structure family behind a method name. `preconditioned`
/// selects the preconditioned magnetic-position family when A is not Id.
struct MethodTraits {
  IntegratorKind integrator;
  VariantTag tag;
};
MethodTraits method_traits(Method method, bool preconditioned = false);

/// Flat description of one run. Optional fields are filled with the
/// task's protocol defaults by resolve_problem; the resolved spec is what a
/// manifest records, so replaying it needs no further defaults.
struct ExperimentSpec {
  Task task = Task::Gaussian;
  Method method = Method::CanImp;
  std::string dataset;
  std::optional<double> step_size;
  std::optional<int> n_steps;
  std::optional<int> n_samples;
  std::optional<int> n_chains;
  std::optional<int> skew_divisor;
  double binding = 1.0;
  std::uint64_t seed = 1;            // chain i uses seed + i
  std::uint64_t structure_seed = 7;  // random skew blocks and Gram-Schmidt
  std::uint64_t data_seed = 11;      // simulated Fitzhugh-Nagumo data
  int dim = 2;                       // Gaussian and trajectory tasks
  int fn_observations = 200;
  bool flip_on_reject = false;
  double fp_tol = 1e-6;
  int fp_max_iters = 100;
  std::vector<double> omegas;  // omega-sweep grid

  nlohmann::json to_json() const;
  static ExperimentSpec from_json(const nlohmann::json& j);
};

inline const std::vector<double> kDefaultOmegaGrid = {1e-2, 1e-1, 1.0, 1e1, 1e2};

/// Model, sampler configuration and chain count for a sampling task.
struct Problem {
  ModelPtr model;
  SamplerConfig sampler;
  int n_chains = 1;
  Eigen::Index n_train = 0;  // logistic only
  std::string coupling;      // "identity" or "fisher-sqrt-at-mode"
};

/// Fills spec defaults in place and builds the problem. Throws
/// InvalidArgument for anything the caller got wrong (unknown combination,
/// unreadable dataset, bad sizes).
Problem resolve_problem(ExperimentSpec& spec);

struct OmegaSweepRow {
  double omega = 0.0;
  double median_discrepancy = 0.0;  // per-sample |q_explicit - q_implicit|_inf
  double mean_discrepancy = 0.0;
  double max_discrepancy = 0.0;
  double median_defect = 0.0;
  double mean_defect = 0.0;
  double accept_rate_implicit = 0.0;
  double accept_rate_explicit = 0.0;
};

/// Poisson structure with every block random: (X - X^T) / 2 for a standard
/// normal 2n x 2n matrix X drawn from `seed`.
PoissonStructure random_full_structure(Eigen::Index n, std::uint64_t seed);

/// Mixture target, random 4x4 skew Poisson matrix and Darboux basis used by
/// the binding-strength study. The explicit chain of a sweep row reuses the
/// implicit chain's seed, so both see identical momentum and uniform draws.
struct SweepSetup {
  ModelPtr model;
  ChainGeometry geometry;
  SamplerConfig implicit_cfg;
};
SweepSetup prepare_sweep(ExperimentSpec& spec);
OmegaSweepRow sweep_row(const SweepSetup& setup, const ChainResult& implicit_chain,
                        double omega, ChainResult* explicit_out = nullptr);
std::vector<OmegaSweepRow> omega_sweep(ExperimentSpec& spec);

/// Writes files into a hidden staging directory and moves them into place
/// on commit in the order written, so the last file written (the summary)
/// appears last. fail() discards staged files and leaves a
/// `.failed` marker holding the error.
class OutputDirectory {
 public:
  explicit OutputDirectory(std::filesystem::path dir);
  void write(const std::string& name, std::string_view text);
  void commit();
  void fail(const std::string& message);
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::filesystem::path staging_;
  std::vector<std::string> names_;
};

std::string version_string();
nlohmann::json make_manifest(std::string_view subcommand, const ExperimentSpec& spec);

/// CSV with columns step,t,q_1..q_n,p_1..p_n,H.
std::string trajectory_csv(const TargetModel& model, const std::vector<PhasePoint>& path,
                           double step_size);

// Subcommands. Each returns a process exit status: 0 ok, 1 runtime failure
// (with a `.failed` marker in the output directory), 2 usage error (nothing
// written). Messages go to `err`.
int cmd_sample(ExperimentSpec spec, const std::filesystem::path& out, std::ostream& err);
int cmd_omega_sweep(ExperimentSpec spec, const std::filesystem::path& out, std::ostream& err);
int cmd_trajectory(ExperimentSpec spec, const std::filesystem::path& out, std::ostream& err);
int cmd_fn_data(std::uint64_t seed, int count, bool noiseless,
                const std::filesystem::path& csv_path, std::ostream& err);
int cmd_diagnose(const std::vector<std::filesystem::path>& chain_csvs,
                 const std::filesystem::path& out, const std::string& method, std::ostream& err);

/// Reads q_1..q_n (and the accepted column) back from a chain CSV.
ChainResult read_chain_csv(const std::filesystem::path& path);

}  // namespace nchmc

#endif  // NCHMC_EXPERIMENTS_HPP

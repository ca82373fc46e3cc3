#include "nchmc/experiments.hpp"

#include "nchmc/dataset.hpp"
#include "nchmc/rng.hpp"
#include "nchmc/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef NCHMC_VERSION
#define NCHMC_VERSION "0.1.0"
#endif

namespace nchmc {

namespace {

constexpr Task kTasks[] = {Task::Gaussian,       Task::Mixture,    Task::Logistic,
                           Task::FitzhughNagumo, Task::OmegaSweep, Task::Trajectory};
constexpr Method kMethods[] = {Method::CanLeapfrog, Method::MagPosExp, Method::MagMomImp,
                               Method::MagMomExp,   Method::CmagImp,   Method::CmagExp,
                               Method::CanImp};

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

template <class T>
void set_default(std::optional<T>& field, T value) {
  if (!field) field = value;
}

void require_positive(const std::optional<int>& v, const char* name) {
  if (v && *v < 1) throw InvalidArgument(std::string(name) + " must be >= 1");
}

void check_common(const ExperimentSpec& spec) {
  require_positive(spec.n_steps, "n_steps");
  require_positive(spec.n_samples, "n_samples");
  require_positive(spec.n_chains, "n_chains");
  require_positive(spec.skew_divisor, "k");
  if (spec.step_size && !(std::isfinite(*spec.step_size) && *spec.step_size > 0.0))
    throw InvalidArgument("step size must be a positive finite number");
  if (!(spec.binding > 0.0)) throw InvalidArgument("omega must be positive");
  if (spec.dim < 1) throw InvalidArgument("dim must be >= 1");
  if (spec.fn_observations < 1) throw InvalidArgument("fn observations must be >= 1");
  if (!(spec.fp_tol > 0.0)) throw InvalidArgument("fixed-point tolerance must be positive");
  if (spec.fp_max_iters < 1) throw InvalidArgument("fixed-point iteration cap must be >= 1");
  for (double w : spec.omegas)
    if (!(w > 0.0)) throw InvalidArgument("omega grid values must be positive");
}

IntegratorConfig integration_of(const ExperimentSpec& spec) {
  IntegratorConfig ic;
  ic.step_size = *spec.step_size;
  ic.n_steps = *spec.n_steps;
  ic.binding = spec.binding;
  ic.fp_tol = spec.fp_tol;
  ic.fp_max_iters = spec.fp_max_iters;
  return ic;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    out.push_back(field);
  }
  return out;
}

template <class Body>
int run_guarded(OutputDirectory& dir, std::ostream& err, Body&& body) {
  try {
    body();
    dir.commit();
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    try {
      dir.fail(e.what());
    } catch (const std::exception& inner) {
      err << "error: could not mark output as failed: " << inner.what() << '\n';
    }
    return 1;
  }
}

// Resolves a spec before any output exists; maps errors to exit codes.
template <class Body>
int resolve_guarded(std::ostream& err, Body&& body) {
  try {
    body();
    return 0;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

// --- Names ------------------------------------------------------------------

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Gaussian: return "gaussian";
    case Task::Mixture: return "mixture";
    case Task::Logistic: return "logistic";
    case Task::FitzhughNagumo: return "fitzhugh-nagumo";
    case Task::OmegaSweep: return "omega-sweep";
    case Task::Trajectory: return "trajectory";
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (auto t : kTasks)
    if (to_string(t) == name) return t;
  throw InvalidArgument("unknown task '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::CanLeapfrog: return "can-leapfrog";
    case Method::MagPosExp: return "mag-pos-exp";
    case Method::MagMomImp: return "mag-mom-imp";
    case Method::MagMomExp: return "mag-mom-exp";
    case Method::CmagImp: return "cmag-imp";
    case Method::CmagExp: return "cmag-exp";
    case Method::CanImp: return "can-imp";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto m : kMethods)
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() { return {std::begin(kMethods), std::end(kMethods)}; }

MethodTraits method_traits(Method method, bool preconditioned) {
  switch (method) {
    case Method::CanLeapfrog: return {IntegratorKind::Leapfrog, VariantTag::Canonical};
    case Method::CanImp: return {IntegratorKind::ImplicitMidpoint, VariantTag::Canonical};
    case Method::MagPosExp:
      return {IntegratorKind::Explicit, preconditioned ? VariantTag::MagneticPositionPreconditioned
                                                       : VariantTag::MagneticPosition};
    case Method::MagMomImp: return {IntegratorKind::ImplicitMidpoint, VariantTag::MagneticMomentum};
    case Method::MagMomExp: return {IntegratorKind::Explicit, VariantTag::MagneticMomentum};
    case Method::CmagImp: return {IntegratorKind::ImplicitMidpoint, VariantTag::CoupledMagnet};
    case Method::CmagExp: return {IntegratorKind::Explicit, VariantTag::CoupledMagnet};
  }
  throw InvalidArgument("unhandled method");
}

// --- Spec -------------------------------------------------------------------

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json j;
  j["task"] = std::string(to_string(task));
  j["method"] = std::string(to_string(method));
  j["dataset"] = dataset;
  j["step_size"] = step_size ? nlohmann::json(*step_size) : nlohmann::json(nullptr);
  j["n_steps"] = n_steps ? nlohmann::json(*n_steps) : nlohmann::json(nullptr);
  j["n_samples"] = n_samples ? nlohmann::json(*n_samples) : nlohmann::json(nullptr);
  j["n_chains"] = n_chains ? nlohmann::json(*n_chains) : nlohmann::json(nullptr);
  j["k"] = skew_divisor ? nlohmann::json(*skew_divisor) : nlohmann::json(nullptr);
  j["omega"] = binding;
  j["seed"] = seed;
  j["structure_seed"] = structure_seed;
  j["data_seed"] = data_seed;
  j["dim"] = dim;
  j["fn_observations"] = fn_observations;
  j["flip_on_reject"] = flip_on_reject;
  j["fp_tol"] = fp_tol;
  j["fp_max_iters"] = fp_max_iters;
  j["omegas"] = omegas;
  return j;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("experiment spec must be a JSON object");
  ExperimentSpec s;
  try {
    auto opt_int = [&](const char* key, std::optional<int>& out) {
      if (j.contains(key) && !j[key].is_null()) out = j[key].get<int>();
    };
    if (j.contains("task")) s.task = parse_task(j["task"].get<std::string>());
    if (j.contains("method")) s.method = parse_method(j["method"].get<std::string>());
    s.dataset = j.value("dataset", std::string{});
    if (j.contains("step_size") && !j["step_size"].is_null())
      s.step_size = j["step_size"].get<double>();
    opt_int("n_steps", s.n_steps);
    opt_int("n_samples", s.n_samples);
    opt_int("n_chains", s.n_chains);
    opt_int("k", s.skew_divisor);
    s.binding = j.value("omega", s.binding);
    s.seed = j.value("seed", s.seed);
    s.structure_seed = j.value("structure_seed", s.structure_seed);
    s.data_seed = j.value("data_seed", s.data_seed);
    s.dim = j.value("dim", s.dim);
    s.fn_observations = j.value("fn_observations", s.fn_observations);
    s.flip_on_reject = j.value("flip_on_reject", s.flip_on_reject);
    s.fp_tol = j.value("fp_tol", s.fp_tol);
    s.fp_max_iters = j.value("fp_max_iters", s.fp_max_iters);
    if (j.contains("omegas")) s.omegas = j["omegas"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed experiment spec: ") + e.what());
  }
  return s;
}

// --- Problems ---------------------------------------------------------------

Problem resolve_problem(ExperimentSpec& spec) {
  check_common(spec);
  Problem problem;
  problem.coupling = "identity";
  Vector initial;
  std::optional<Matrix> coupling;

  switch (spec.task) {
    case Task::Gaussian:
    case Task::Mixture: {
      set_default(spec.step_size, 0.1);
      set_default(spec.n_steps, 20);
      set_default(spec.n_samples, 1000);
      set_default(spec.n_chains, 1);
      set_default(spec.skew_divisor, 2);
      if (spec.task == Task::Gaussian) {
        problem.model = std::make_shared<GaussianTarget>(GaussianTarget::standard(spec.dim));
      } else {
        problem.model = std::make_shared<GaussianMixture>(GaussianMixture::bimodal_benchmark());
      }
      initial = Vector::Zero(problem.model->dim());
      break;
    }
    case Task::Logistic: {
      if (spec.dataset.empty()) throw InvalidArgument("the logistic task needs --dataset");
      if (!std::filesystem::is_regular_file(spec.dataset))
        throw InvalidArgument("dataset '" + spec.dataset + "' does not exist");
      const LabelledDataset data = load_logistic_dataset(spec.dataset);
      auto model = std::make_shared<LogisticRegression>(data.X, data.y);
      const PosteriorMode mode = find_posterior_mode(*model);
      problem.n_train = data.rows();
      coupling = spd_sqrt(mode.information);
      problem.coupling = "fisher-sqrt-at-mode";
      set_default(spec.step_size, 1.0 / (10.0 * static_cast<double>(problem.n_train)));
      set_default(spec.n_steps, 100);
      set_default(spec.n_samples, 1000);
      set_default(spec.n_chains, 10);
      set_default(spec.skew_divisor, 2);
      initial = mode.theta;
      problem.model = std::move(model);
      break;
    }
    case Task::FitzhughNagumo: {
      FitzhughNagumoData data;
      if (!spec.dataset.empty()) {
        if (!std::filesystem::is_regular_file(spec.dataset))
          throw InvalidArgument("dataset '" + spec.dataset + "' does not exist");
        data = read_fn_data(spec.dataset);
      } else {
        data = simulate_fn_data(spec.data_seed, static_cast<std::size_t>(spec.fn_observations));
      }
      set_default(spec.step_size, 0.005);
      set_default(spec.n_steps, 100);
      set_default(spec.n_samples, 1000);
      set_default(spec.n_chains, 1);
      set_default(spec.skew_divisor, 50);
      initial = data.true_params.as_vector();
      problem.model = std::make_shared<FitzhughNagumoModel>(std::move(data));
      break;
    }
    case Task::OmegaSweep:
    case Task::Trajectory:
      throw InvalidArgument("task '" + std::string(to_string(spec.task)) +
                            "' has its own subcommand");
  }
  check_common(spec);

  const MethodTraits traits = method_traits(spec.method, coupling.has_value());
  SamplerConfig& cfg = problem.sampler;
  cfg.integrator = traits.integrator;
  cfg.variant = StructureVariant{traits.tag, coupling, std::nullopt, *spec.skew_divisor};
  cfg.structure_seed = spec.structure_seed;
  cfg.integration = integration_of(spec);
  cfg.n_samples = *spec.n_samples;
  cfg.chain_seed = spec.seed;
  cfg.flip_on_reject = spec.flip_on_reject;
  cfg.initial_q = initial;
  cfg.validate();
  problem.n_chains = *spec.n_chains;
  return problem;
}

// --- Binding-strength study -------------------------------------------------

PoissonStructure random_full_structure(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_full_structure: dimension must be >= 1");
  RandomStream stream(seed);
  const Matrix X = stream.normal_matrix(2 * n, 2 * n);
  return PoissonStructure::from_poisson_matrix((X - X.transpose()) / 2.0);
}

SweepSetup prepare_sweep(ExperimentSpec& spec) {
  spec.task = Task::OmegaSweep;
  check_common(spec);
  set_default(spec.step_size, 1e-2);
  set_default(spec.n_steps, 1000);
  set_default(spec.n_samples, 1000);
  if (spec.omegas.empty()) spec.omegas = kDefaultOmegaGrid;

  ModelPtr model = std::make_shared<GaussianMixture>(GaussianMixture::bimodal_benchmark());
  PoissonStructure s = random_full_structure(model->dim(), spec.structure_seed);
  PoissonStructure r = time_reversal(s);
  DarbouxBasis basis = symplectic_gram_schmidt(s.symplectic(), spec.structure_seed);
  DarbouxBasis reversed_basis = time_reversal(basis);
  ChainGeometry geometry{std::move(s), std::move(r), std::move(basis), std::move(reversed_basis)};

  SamplerConfig cfg;
  cfg.integrator = IntegratorKind::ImplicitMidpoint;
  cfg.structure_seed = spec.structure_seed;
  cfg.integration = integration_of(spec);
  cfg.n_samples = *spec.n_samples;
  cfg.chain_seed = spec.seed;
  cfg.flip_on_reject = spec.flip_on_reject;
  cfg.initial_q = Vector::Zero(model->dim());
  cfg.validate();
  return SweepSetup{std::move(model), std::move(geometry), std::move(cfg)};
}

OmegaSweepRow sweep_row(const SweepSetup& setup, const ChainResult& implicit_chain,
                        double omega, ChainResult* explicit_out) {
  SamplerConfig cfg = setup.implicit_cfg;
  cfg.integrator = IntegratorKind::Explicit;
  cfg.integration.binding = omega;
  ChainResult explicit_chain = run_chain(*setup.model, cfg, setup.geometry);

  std::vector<double> discrepancy;
  discrepancy.reserve(static_cast<std::size_t>(explicit_chain.size()));
  for (Eigen::Index i = 0; i < explicit_chain.size(); ++i)
    discrepancy.push_back(
        (explicit_chain.samples.row(i) - implicit_chain.samples.row(i)).cwiseAbs().maxCoeff());

  OmegaSweepRow row;
  row.omega = omega;
  row.median_discrepancy = median_of(discrepancy);
  row.mean_discrepancy = mean_of(discrepancy);
  row.max_discrepancy = *std::max_element(discrepancy.begin(), discrepancy.end());
  row.median_defect = median_of(explicit_chain.defect);
  row.mean_defect = mean_of(explicit_chain.defect);
  row.accept_rate_implicit = implicit_chain.accept_rate();
  row.accept_rate_explicit = explicit_chain.accept_rate();
  if (explicit_out) *explicit_out = std::move(explicit_chain);
  return row;
}

std::vector<OmegaSweepRow> omega_sweep(ExperimentSpec& spec) {
  const SweepSetup setup = prepare_sweep(spec);
  const ChainResult implicit_chain = run_chain(*setup.model, setup.implicit_cfg, setup.geometry);
  std::vector<OmegaSweepRow> rows;
  for (double omega : spec.omegas) rows.push_back(sweep_row(setup, implicit_chain, omega));
  return rows;
}

// --- Output -----------------------------------------------------------------

OutputDirectory::OutputDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {
  namespace fs = std::filesystem;
  fs::create_directories(dir_);
  staging_ = dir_ / ".staging";
  fs::remove_all(staging_);
  fs::create_directory(staging_);
  fs::remove(dir_ / ".failed");
}

void OutputDirectory::write(const std::string& name, std::string_view text) {
  write_text_file(staging_ / name, text);
  if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
}

void OutputDirectory::commit() {
  namespace fs = std::filesystem;
  for (const auto& name : names_) fs::rename(staging_ / name, dir_ / name);
  fs::remove_all(staging_);
}

void OutputDirectory::fail(const std::string& message) {
  namespace fs = std::filesystem;
  fs::remove_all(staging_);
  fs::remove(dir_ / "summary.json");
  write_text_file(dir_ / ".failed", message + "\n");
}

std::string version_string() { return NCHMC_VERSION; }

nlohmann::json make_manifest(std::string_view subcommand, const ExperimentSpec& spec) {
  nlohmann::json m;
  m["tool"] = "nchmc";
  m["version"] = version_string();
  m["subcommand"] = std::string(subcommand);
  m["spec"] = spec.to_json();
  return m;
}

std::string trajectory_csv(const TargetModel& model, const std::vector<PhasePoint>& path,
                           double step_size) {
  std::ostringstream os;
  const Eigen::Index n = model.dim();
  os << "step,t";
  for (Eigen::Index j = 0; j < n; ++j) os << ",q_" << (j + 1);
  for (Eigen::Index j = 0; j < n; ++j) os << ",p_" << (j + 1);
  os << ",H\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    os << i << ',' << format_double(static_cast<double>(i) * step_size);
    for (Eigen::Index j = 0; j < n; ++j) os << ',' << format_double(path[i].q(j));
    for (Eigen::Index j = 0; j < n; ++j) os << ',' << format_double(path[i].p(j));
    os << ',' << format_double(hamiltonian(model, path[i])) << '\n';
  }
  return os.str();
}

// --- Subcommands ------------------------------------------------------------

int cmd_sample(ExperimentSpec spec, const std::filesystem::path& out, std::ostream& err) {
  Problem problem;
  if (int rc = resolve_guarded(err, [&] { problem = resolve_problem(spec); })) return rc;
  if (out.empty()) {
    err << "usage error: an output directory is required\n";
    return 2;
  }
  std::optional<OutputDirectory> dir;
  if (int rc = resolve_guarded(err, [&] { dir.emplace(out); })) return rc == 2 ? 1 : rc;

  return run_guarded(*dir, err, [&] {
    nlohmann::json manifest = make_manifest("sample", spec);
    manifest["derived"] = {{"n_train", problem.n_train},
                           {"coupling", problem.coupling},
                           {"dim", problem.model->dim()},
                           {"model", problem.model->description()}};
    dir->write("manifest.json", manifest.dump(2) + "\n");
    const bool want_rhat = problem.n_chains >= 2;
    ExperimentResult result = run_experiment(*problem.model, problem.sampler, problem.n_chains,
                                             want_rhat, std::string(to_string(spec.method)));
    for (std::size_t i = 0; i < result.chains.size(); ++i)
      dir->write("chain_" + std::to_string(i) + ".csv", chain_csv(result.chains[i]));
    dir->write("coordinates.csv", coordinate_csv(result.summary));
    dir->write("summary.json", result.summary.to_json().dump(2) + "\n");
  });
}

int cmd_omega_sweep(ExperimentSpec spec, const std::filesystem::path& out, std::ostream& err) {
  std::optional<SweepSetup> setup;
  if (int rc = resolve_guarded(err, [&] { setup.emplace(prepare_sweep(spec)); })) return rc;
  if (out.empty()) {
    err << "usage error: an output directory is required\n";
    return 2;
  }
  std::optional<OutputDirectory> dir;
  if (int rc = resolve_guarded(err, [&] { dir.emplace(out); })) return rc == 2 ? 1 : rc;

  return run_guarded(*dir, err, [&] {
    dir->write("manifest.json", make_manifest("omega-sweep", spec).dump(2) + "\n");
    const ChainResult implicit_chain =
        run_chain(*setup->model, setup->implicit_cfg, setup->geometry);
    dir->write("chain_implicit.csv", chain_csv(implicit_chain));
    std::ostringstream os;
    os << "omega,median_discrepancy,mean_discrepancy,max_discrepancy,median_defect,"
          "mean_defect,accept_rate_implicit,accept_rate_explicit\n";
    for (std::size_t i = 0; i < spec.omegas.size(); ++i) {
      ChainResult explicit_chain;
      const OmegaSweepRow row = sweep_row(*setup, implicit_chain, spec.omegas[i], &explicit_chain);
      dir->write("chain_explicit_" + std::to_string(i) + ".csv", chain_csv(explicit_chain));
      os << format_double(row.omega) << ',' << format_double(row.median_discrepancy) << ','
         << format_double(row.mean_discrepancy) << ',' << format_double(row.max_discrepancy)
         << ',' << format_double(row.median_defect) << ',' << format_double(row.mean_defect)
         << ',' << format_double(row.accept_rate_implicit) << ','
         << format_double(row.accept_rate_explicit) << '\n';
    }
    dir->write("omega_sweep.csv", os.str());
  });
}

int cmd_trajectory(ExperimentSpec spec, const std::filesystem::path& out, std::ostream& err) {
  spec.task = Task::Trajectory;
  if (int rc = resolve_guarded(err, [&] {
        check_common(spec);
        set_default(spec.step_size, 0.05);
        set_default(spec.n_steps, 200);
        set_default(spec.skew_divisor, 2);
        if (out.empty()) throw InvalidArgument("an output directory is required");
      }))
    return rc;
  std::optional<OutputDirectory> dir;
  if (int rc = resolve_guarded(err, [&] { dir.emplace(out); })) return rc == 2 ? 1 : rc;

  return run_guarded(*dir, err, [&] {
    dir->write("manifest.json", make_manifest("trajectory", spec).dump(2) + "\n");
    const Eigen::Index n = spec.dim;
    const GaussianTarget model = GaussianTarget::standard(n);
    PhasePoint start{Vector::Zero(n), Vector::Zero(n)};
    start.q(0) = 1.0;
    start.p(n > 1 ? 1 : 0) = 1.0;

    IntegratorConfig ic = integration_of(spec);
    auto trace = [&](const PoissonStructure& s) {
      std::vector<PhasePoint> path{start};
      const auto result =
          implicit_trajectory(model, s, start, ic, [&](int, const PhasePoint& z) {
            path.push_back(z);
          });
      if (result.status == StepStatus::NonFinite)
        throw EvaluationError("trajectory became non-finite", start.q);
      return path;
    };

    StructureVariant canonical{VariantTag::Canonical, std::nullopt, std::nullopt,
                               *spec.skew_divisor};
    StructureVariant magnetic{VariantTag::MagneticPosition, std::nullopt, std::nullopt,
                              *spec.skew_divisor};
    const PoissonStructure s_can = build_structure(canonical, n, spec.structure_seed);
    const PoissonStructure s_mag = build_structure(magnetic, n, spec.structure_seed);
    const PoissonStructure s_full = random_full_structure(n, spec.structure_seed);

    dir->write("trajectory_canonical.csv", trajectory_csv(model, trace(s_can), ic.step_size));
    dir->write("trajectory_magnetic.csv", trajectory_csv(model, trace(s_mag), ic.step_size));
    const auto full_path = trace(s_full);
    dir->write("trajectory_noncanonical.csv", trajectory_csv(model, full_path, ic.step_size));

    // Same non-canonical trajectory expressed in the Darboux coordinates.
    const DarbouxBasis basis = symplectic_gram_schmidt(s_full.symplectic(), spec.structure_seed);
    std::ostringstream os;
    os << "step,t";
    for (Eigen::Index j = 0; j < n; ++j) os << ",q_" << (j + 1);
    for (Eigen::Index j = 0; j < n; ++j) os << ",p_" << (j + 1);
    for (Eigen::Index j = 0; j < n; ++j) os << ",qt_" << (j + 1);
    for (Eigen::Index j = 0; j < n; ++j) os << ",pt_" << (j + 1);
    os << ",roundtrip_error\n";
    for (std::size_t i = 0; i < full_path.size(); ++i) {
      const Vector z = full_path[i].stacked();
      const Vector zt = basis.to_canonical(z);
      const double roundtrip = (basis.from_canonical(zt) - z).cwiseAbs().maxCoeff();
      os << i << ',' << format_double(static_cast<double>(i) * ic.step_size);
      for (Eigen::Index j = 0; j < 2 * n; ++j) os << ',' << format_double(z(j));
      for (Eigen::Index j = 0; j < 2 * n; ++j) os << ',' << format_double(zt(j));
      os << ',' << format_double(roundtrip) << '\n';
    }
    dir->write("darboux_noncanonical.csv", os.str());
    dir->write("structures.json",
               nlohmann::json{{"canonical", structure_to_json(s_can)},
                              {"magnetic", structure_to_json(s_mag)},
                              {"noncanonical", structure_to_json(s_full, &basis)}}
                       .dump(2) +
                   "\n");
  });
}

int cmd_fn_data(std::uint64_t seed, int count, bool noiseless,
                const std::filesystem::path& csv_path, std::ostream& err) {
  if (count < 1) {
    err << "usage error: count must be >= 1\n";
    return 2;
  }
  if (csv_path.empty()) {
    err << "usage error: an output CSV path is required\n";
    return 2;
  }
  try {
    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    write_fn_data(csv_path, simulate_fn_data(seed, static_cast<std::size_t>(count), noiseless));
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

ChainResult read_chain_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open chain CSV '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("chain CSV '" + path.string() + "' is empty");
  const auto header = split_fields(line);
  if (header.size() < 5 || header[0] != "iteration" || header[1] != "accepted" ||
      header[2] != "H_before" || header[3] != "H_after")
    throw InvalidArgument("chain CSV '" + path.string() +
                          "' must start with iteration,accepted,H_before,H_after,q_1");
  const std::size_t n = header.size() - 4;
  std::vector<std::vector<double>> rows;
  ChainResult chain;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields");
    std::vector<double> q(n);
    try {
      chain.accepted.push_back(parse_double(fields[1]) != 0.0 ? 1 : 0);
      chain.h_before.push_back(parse_double(fields[2]));
      chain.h_after.push_back(parse_double(fields[3]));
      for (std::size_t j = 0; j < n; ++j) q[j] = parse_double(fields[4 + j]);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(std::move(q));
  }
  if (rows.empty()) throw InvalidArgument("chain CSV '" + path.string() + "' has no rows");
  chain.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      chain.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  chain.momenta = Matrix::Zero(chain.samples.rows(), chain.samples.cols());
  return chain;
}

int cmd_diagnose(const std::vector<std::filesystem::path>& chain_csvs,
                 const std::filesystem::path& out, const std::string& method, std::ostream& err) {
  std::vector<ChainResult> chains;
  if (int rc = resolve_guarded(err, [&] {
        if (chain_csvs.empty()) throw InvalidArgument("no chain CSV files given");
        for (const auto& p : chain_csvs) chains.push_back(read_chain_csv(p));
      }))
    return rc;

  DiagnosticsSummary summary;
  if (int rc = resolve_guarded(err, [&] { summary = summarize(chains, method); })) return rc;
  if (out.empty()) {
    std::cout << summary.to_json().dump(2) << '\n';
    return 0;
  }
  std::optional<OutputDirectory> dir;
  if (int rc = resolve_guarded(err, [&] { dir.emplace(out); })) return rc == 2 ? 1 : rc;
  return run_guarded(*dir, err, [&] {
    dir->write("coordinates.csv", coordinate_csv(summary));
    dir->write("summary.json", summary.to_json().dump(2) + "\n");
  });
}

}  // namespace nchmc

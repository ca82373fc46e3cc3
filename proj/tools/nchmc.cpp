// Command-line front end: sample, omega-sweep, trajectory, fn-data, diagnose.
#include "nchmc/experiments.hpp"
#include "nchmc/serialization.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using nchmc::ExperimentSpec;

// Flags shared by the sampling-style subcommands. Optional spec fields are
// only set when the flag was given, so protocol defaults still apply.
struct SpecFlags {
  std::string task, method, dataset, manifest, output;
  double step_size = 0.0, omega = 1.0, fp_tol = 1e-6;
  int n_steps = 0, n_samples = 0, n_chains = 0, k = 0, dim = 2, fn_observations = 200;
  int fp_max_iters = 100;
  std::uint64_t seed = 1, structure_seed = 7, data_seed = 11;
  bool flip_on_reject = false;
  std::vector<double> omegas;

  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App& app, bool sampling, bool sweep) {
    if (sampling) {
      opts["task"] = app.add_option("--task", task, "gaussian | mixture | logistic | fitzhugh-nagumo");
      opts["method"] = app.add_option(
          "--method", method,
          "can-leapfrog | can-imp | mag-pos-exp | mag-mom-imp | mag-mom-exp | cmag-imp | cmag-exp");
      opts["dataset"] = app.add_option("--dataset", dataset, "CSV dataset (logistic, fitzhugh-nagumo)");
      opts["n-chains"] = app.add_option("--n-chains", n_chains, "Independent chains");
      opts["data-seed"] = app.add_option("--data-seed", data_seed, "Seed for simulated Fitzhugh-Nagumo data");
      opts["fn-observations"] =
          app.add_option("--fn-observations", fn_observations, "Simulated Fitzhugh-Nagumo observations");
    }
    if (sampling || sweep) {
      opts["n-samples"] = app.add_option("--n-samples", n_samples, "Samples per chain");
      opts["seed"] = app.add_option("--seed", seed, "Chain seed (chain i uses seed + i)");
      opts["flip"] = app.add_flag("--flip-on-reject", flip_on_reject,
                                  "Switch to the time-reversed structure after each rejection");
      if (!sweep)
        opts["omega"] = app.add_option("--omega", omega, "Binding strength of the explicit integrator");
      opts["fp-tol"] = app.add_option("--fp-tol", fp_tol, "Implicit midpoint tolerance");
      opts["fp-max-iters"] = app.add_option("--fp-max-iters", fp_max_iters, "Implicit midpoint iteration cap");
    }
    if (sweep) opts["omegas"] = app.add_option("--omegas", omegas, "Binding strength grid");
    opts["step-size"] = app.add_option("--step-size", step_size, "Integration step size");
    opts["n-steps"] = app.add_option("--n-steps", n_steps, "Integration steps per proposal");
    if (!sweep)
      opts["k"] = app.add_option("-k,--skew-divisor", k, "Divisor in the skew-symmetrization of random blocks");
    opts["structure-seed"] = app.add_option("--structure-seed", structure_seed, "Seed for random structure blocks");
    if (!sweep) opts["dim"] = app.add_option("--dim", dim, "Dimension of the Gaussian target");
    app.add_option("-o,--output", output, "Output directory (default: $NCHMC_OUTPUT_ROOT/<name>)");
    app.add_option("--manifest", manifest, "Replay the spec stored in a previous run's manifest.json");
  }

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  ExperimentSpec spec(const std::string& subcommand) const {
    if (!manifest.empty()) {
      const auto m = nlohmann::json::parse(nchmc::read_text_file(manifest));
      if (m.value("subcommand", std::string{}) != subcommand)
        throw nchmc::InvalidArgument("manifest '" + manifest + "' was written by '" +
                                     m.value("subcommand", std::string{"?"}) + "', not '" +
                                     subcommand + "'");
      return ExperimentSpec::from_json(m.at("spec"));
    }
    ExperimentSpec s;
    if (given("task")) s.task = nchmc::parse_task(task);
    if (given("method")) s.method = nchmc::parse_method(method);
    s.dataset = dataset;
    if (given("step-size")) s.step_size = step_size;
    if (given("n-steps")) s.n_steps = n_steps;
    if (given("n-samples")) s.n_samples = n_samples;
    if (given("n-chains")) s.n_chains = n_chains;
    if (given("k")) s.skew_divisor = k;
    s.binding = omega;
    s.seed = seed;
    s.structure_seed = structure_seed;
    s.data_seed = data_seed;
    s.dim = dim;
    s.fn_observations = fn_observations;
    s.flip_on_reject = flip_on_reject;
    s.fp_tol = fp_tol;
    s.fp_max_iters = fp_max_iters;
    s.omegas = omegas;
    return s;
  }
};

std::filesystem::path output_root() {
  const char* env = std::getenv("NCHMC_OUTPUT_ROOT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

std::filesystem::path output_for(const std::string& explicit_path, const std::string& name) {
  if (!explicit_path.empty()) return explicit_path;
  return output_root() / name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian Monte Carlo with non-canonical symplectic structures"};
  app.set_version_flag("--version", nchmc::version_string());
  app.require_subcommand(1);

  SpecFlags sample_flags, sweep_flags, traj_flags;
  auto* sample = app.add_subcommand("sample", "Run sampling chains and write chains, summary and manifest");
  sample_flags.add(*sample, true, false);
  auto* sweep = app.add_subcommand("omega-sweep", "Explicit vs implicit agreement over binding strengths");
  sweep_flags.add(*sweep, false, true);
  auto* traj = app.add_subcommand("trajectory", "Position traces of a Gaussian Hamiltonian under several structures");
  traj_flags.add(*traj, false, false);

  std::uint64_t fn_seed = 11;
  int fn_count = 200;
  bool fn_noiseless = false;
  std::string fn_output;
  auto* fn = app.add_subcommand("fn-data", "Simulate Fitzhugh-Nagumo observations");
  fn->add_option("--seed", fn_seed, "Noise seed");
  fn->add_option("--count", fn_count, "Number of observations on [0, 10)");
  fn->add_flag("--noiseless", fn_noiseless, "Write the exact solution");
  fn->add_option("-o,--output", fn_output, "Output CSV path (a .json sidecar is written next to it)")
      ->required();

  std::vector<std::string> diag_inputs;
  std::string diag_output, diag_method;
  auto* diag = app.add_subcommand("diagnose", "ESS and R-hat for existing chain CSV files");
  diag->add_option("chains", diag_inputs, "Chain CSV files")->required();
  diag->add_option("-o,--output", diag_output, "Output directory (default: print summary JSON)");
  diag->add_option("--method", diag_method, "Label stored in the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sample) {
      const ExperimentSpec spec = sample_flags.spec("sample");
      const std::string name = std::string(nchmc::to_string(spec.task)) + "-" +
                               std::string(nchmc::to_string(spec.method)) + "-seed" +
                               std::to_string(spec.seed);
      return nchmc::cmd_sample(spec, output_for(sample_flags.output, name), std::cerr);
    }
    if (*sweep) {
      const ExperimentSpec spec = sweep_flags.spec("omega-sweep");
      return nchmc::cmd_omega_sweep(spec, output_for(sweep_flags.output, "omega-sweep"), std::cerr);
    }
    if (*traj) {
      const ExperimentSpec spec = traj_flags.spec("trajectory");
      return nchmc::cmd_trajectory(spec, output_for(traj_flags.output, "trajectory"), std::cerr);
    }
    if (*fn) return nchmc::cmd_fn_data(fn_seed, fn_count, fn_noiseless, fn_output, std::cerr);
    if (*diag) {
      std::vector<std::filesystem::path> paths(diag_inputs.begin(), diag_inputs.end());
      return nchmc::cmd_diagnose(paths, diag_output, diag_method, std::cerr);
    }
  } catch (const nchmc::InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

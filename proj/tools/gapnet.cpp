// gapnet: dataset generation, surrogate training and evaluation for
// spectral-gap trajectories of annealing Hamiltonians.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gapnet/errors.hpp"
#include "gapnet/experiments/calculators.hpp"
#include "gapnet/experiments/commands.hpp"
#include "gapnet/experiments/config.hpp"

namespace fs = std::filesystem;
using namespace gapnet;
using namespace gapnet::experiments;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::string> precision;
  std::optional<double> constraint_strength;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--precision", f.precision, "network precision")->check(CLI::IsMember({"f32", "f64"}));
  cmd->add_option("--constraint-strength", f.constraint_strength, "LHZ constraint strength C")
      ->check(CLI::NonNegativeNumber);
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  Overrides o;
  o.seed = f.seed;
  if (f.out) o.output = fs::path(*f.out);
  o.threads = f.threads;
  o.precision = f.precision;
  if (f.constraint_strength) c.constraint_strength = *f.constraint_strength;
  apply(o, c);
  return c;
}

void write_report(const std::optional<std::string>& out, const std::string& name, const nlohmann::ordered_json& j) {
  std::cout << j.dump(2) << '\n';
  if (!out) return;
  fs::create_directories(*out);
  std::ofstream file(fs::path(*out) / name);
  file << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-gap datasets and neural surrogates for annealing Hamiltonians"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  CommonFlags generate_flags;
  auto* generate = app.add_subcommand("generate", "sample instances and solve their gap trajectories");
  add_common(generate, generate_flags);

  CommonFlags train_flags;
  auto* train = app.add_subcommand("train", "train a network on a generated dataset");
  add_common(train, train_flags);

  CommonFlags evaluate_flags;
  std::optional<std::string> evaluate_checkpoint;
  std::optional<std::string> evaluate_dataset;
  auto* evaluate = app.add_subcommand("evaluate", "test-split MSE of a checkpoint");
  add_common(evaluate, evaluate_flags);
  evaluate->add_option("--checkpoint", evaluate_checkpoint, "checkpoint directory (default <out>/model)");
  evaluate->add_option("--dataset", evaluate_dataset, "dataset directory (default <out>/dataset)");

  CommonFlags extrapolate_flags;
  std::optional<std::string> extrapolate_checkpoint;
  std::vector<int> extrapolate_sizes;
  auto* extrapolate = app.add_subcommand("extrapolate", "per-size error of a grid-encoded checkpoint");
  add_common(extrapolate, extrapolate_flags);
  extrapolate->add_option("--checkpoint", extrapolate_checkpoint, "checkpoint directory (default <out>/model)");
  extrapolate->add_option("--sizes", extrapolate_sizes, "evaluation sizes (default from config)")->delimiter(',');

  CommonFlags diagnostics_flags;
  auto* diagnostics = app.add_subcommand("diagnostics", "gap histogram and minimum-gap landscape");
  add_common(diagnostics, diagnostics_flags);

  SpeedupInputs speed;
  std::optional<std::uint64_t> n_use;
  std::optional<std::string> speedup_out;
  auto* speedup_cmd = app.add_subcommand("speedup", "break-even count for replacing the solver by a network");
  speedup_cmd->add_option("--n-train", speed.n_train, "training samples")->required()->check(CLI::NonNegativeNumber);
  speedup_cmd->add_option("--tau-alg", speed.tau_alg, "solver seconds per training instance")->required();
  speedup_cmd->add_option("--tau-train", speed.tau_train, "training seconds per training sample")->required();
  speedup_cmd->add_option("--tau-nn", speed.tau_nn, "network seconds per instance")->required();
  speedup_cmd->add_option("--tau-alg-large", speed.tau_alg_large, "solver seconds per deployed instance");
  speedup_cmd->add_option("--n-use", n_use, "deployed instances to assess");
  speedup_cmd->add_option("--out", speedup_out, "directory for speedup.json");

  std::uint64_t runs_n = 0;
  std::uint64_t runs_nt = 0;
  std::uint64_t runs_shots = 0;
  std::vector<double> per_run{1e-6, 5e-6};
  std::optional<std::string> runs_out;
  auto* runs_cmd = app.add_subcommand("estimate-runs", "experimental runs for a measured-gap training set");
  runs_cmd->add_option("-n,--instances", runs_n, "instances")->required();
  runs_cmd->add_option("--steps", runs_nt, "sweep points per instance")->required();
  runs_cmd->add_option("--shots", runs_shots, "shots per point")->required();
  runs_cmd->add_option("--seconds-per-run", per_run, "run durations to report")->delimiter(',');
  runs_cmd->add_option("--out", runs_out, "directory for runs.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) return cmd_generate(resolve(generate_flags), std::cerr);
    if (*train) return cmd_train(resolve(train_flags), std::cerr);
    if (*evaluate) {
      std::optional<fs::path> ck;
      std::optional<fs::path> ds;
      if (evaluate_checkpoint) ck = *evaluate_checkpoint;
      if (evaluate_dataset) ds = *evaluate_dataset;
      return cmd_evaluate(resolve(evaluate_flags), std::cerr, ck, ds);
    }
    if (*extrapolate) {
      std::optional<fs::path> ck;
      if (extrapolate_checkpoint) ck = *extrapolate_checkpoint;
      return cmd_extrapolate(resolve(extrapolate_flags), std::cerr, ck, extrapolate_sizes);
    }
    if (*diagnostics) return cmd_diagnostics(resolve(diagnostics_flags), std::cerr);
    if (*speedup_cmd) {
      speed.n_use = n_use;
      const SpeedupVerdict v = experiments::speedup(speed);
      write_report(speedup_out, "speedup.json", to_json(speed, v));
      return 0;
    }
    if (*runs_cmd) {
      const std::uint64_t runs = estimate_runs(runs_n, runs_nt, runs_shots);
      nlohmann::ordered_json j;
      j["instances"] = runs_n;
      j["steps"] = runs_nt;
      j["shots"] = runs_shots;
      j["runs"] = runs;
      nlohmann::ordered_json times = nlohmann::ordered_json::array();
      for (double s : per_run) {
        const double total = run_time_seconds(runs, s);
        times.push_back({{"seconds_per_run", s}, {"total_seconds", total}, {"total_days", total / 86400.0}});
      }
      j["wall_time"] = std::move(times);
      write_report(runs_out, "runs.json", j);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

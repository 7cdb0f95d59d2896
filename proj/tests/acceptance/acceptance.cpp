// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gapnet/dataset.hpp"
#include "gapnet/errors.hpp"
#include "gapnet/experiments/calculators.hpp"
#include "gapnet/experiments/commands.hpp"
#include "gapnet/experiments/config.hpp"
#include "gapnet/nn/checkpoint.hpp"
#include "gapnet/nn/layers.hpp"
#include "gapnet/spectrum.hpp"
#include "gapnet/spinmodel.hpp"
#include "oracles.hpp"

using namespace gapnet;
using namespace gapnet::experiments;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs a config through generate and train.
nn::Checkpoint generate_and_train(const ExperimentConfig& c, std::ostream& log) {
  if (cmd_generate(c, log) != 0) throw gapnet::Error("generate failed for " + c.name);
  if (cmd_train(c, log) != 0) throw gapnet::Error("training diverged for " + c.name);
  return nn::load_checkpoint(model_dir(c));
}

ExperimentConfig make_config(const json& j, const fs::path& out) {
  auto c = config_from_json(j);
  c.output = out / c.name;
  c.timing_repeats = 1;
  return c;
}

// --- 1: Lanczos against dense diagonalisation --------------------------------

Outcome spectral_equivalence(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng pick(101);
  double worst = 0.0;
  int count = 0;
  for (Family f : {Family::NearestNeighbor1D, Family::AllToAll, Family::LhzPhysical}) {
    for (int n = 0; n < 100; ++n) {
      const std::uint64_t seed = derive_seed(1000 + static_cast<std::uint64_t>(f), n);
      ProblemInstance inst;
      if (f == Family::LhzPhysical) {
        inst = lhz_encode(sample_instance(Family::AllToAll, 3 + n % 3, seed)).physical;  // 6, 10 or 15 qubits
        if (inst.n_qubits() > 10) inst = lhz_encode(sample_instance(Family::AllToAll, 3, seed)).physical;
      } else {
        inst = sample_instance(f, 2 + n % 9, seed);
      }
      const double lambda = n % 10 == 0 ? 1.0 : pick.uniform(0.0, 1.0);
      const auto op = build_operator(inst, lambda);
      const auto dense = dense_two_lowest(op);
      const auto lz = lanczos_two_lowest(op);
      worst = std::max({worst, std::abs(lz.e0 - dense.e0), std::abs(lz.e1 - dense.e1)});
      ++count;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 300.0, std::to_string(count) + " instances, worst |dE| " + num(worst) + ", " +
                                             num(secs) + " s"};
}

// --- 2: trajectory endpoints ---------------------------------------------------

Outcome endpoint_identities(const fs::path&) {
  const auto schedule = make_schedule();
  double worst0 = 0.0;
  double worst1 = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Family f = n % 2 == 0 ? Family::NearestNeighbor1D : Family::AllToAll;
    const auto inst = sample_instance(f, 2 + n % 7, derive_seed(2000, n));
    const auto t = gap_trajectory(inst, schedule);
    const auto levels = oracle::logical_energies(inst);
    worst0 = std::max(worst0, std::abs(t.gaps.front() - 2.0));
    worst1 = std::max(worst1, std::abs(t.gaps.back() - (levels[1] - levels[0])));
  }
  return {worst0 <= 1e-9 && worst1 <= 1e-9,
          "1000 trajectories, worst |g(0)-2| " + num(worst0) + ", worst |g(1)-enum| " + num(worst1)};
}

// --- 3: LHZ sector ------------------------------------------------------------

Outcome lhz_correctness(const fs::path&) {
  double worst = 0.0;
  bool sizes_ok = true;
  for (int m = 3; m <= 5; ++m) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto logical = sample_instance(Family::AllToAll, m, derive_seed(3000 + m, s));
      const auto r = lhz_encode(logical);
      const double offset = -r.physical.constraint_strength * r.encoding.n_constraints();
      std::vector<double> sector;
      for (std::uint64_t state = 0; state < (1ULL << r.encoding.n_physical()); ++state) {
        bool ok = true;
        for (const auto& p : r.encoding.plaquettes) {
          double prod = 1.0;
          for (int q : p.members()) prod *= oracle::spin_of(state, q);
          ok = ok && prod > 0.0;
        }
        if (ok) sector.push_back(classical_energy(r.physical, state) - offset);
      }
      std::sort(sector.begin(), sector.end());
      const auto expected = oracle::logical_energies(logical);
      if (sector.size() != expected.size()) return {false, "sector size mismatch at M=" + std::to_string(m)};
      for (std::size_t k = 0; k < sector.size(); ++k) worst = std::max(worst, std::abs(sector[k] - expected[k]));
    }
  }
  const int q5 = lhz_physical_count(5, true);
  const int q6 = lhz_physical_count(6, true);
  sizes_ok = q5 == 15 && q6 == 21 &&
             lhz_encode(sample_instance(Family::AllToAll, 6, 1)).physical.n_qubits() == 21;
  return {worst <= 1e-12 && sizes_ok,
          "M=3..5 worst level error " + num(worst) + ", qubits(M=5)=" + std::to_string(q5) +
              ", qubits(M=6)=" + std::to_string(q6)};
}

// --- 4: gradient suite --------------------------------------------------------

Outcome gradient_suite(const fs::path&) {
  using nn::Activation;
  using nn::Mat;
  using nn::RowVec;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4);
  double worst = 0.0;
  std::vector<std::string> failed;
  auto record = [&](const std::string& name, double err) {
    worst = std::max(worst, err);
    if (!(err < 1e-5)) failed.push_back(name);
  };

  for (Activation a : {Activation::Linear, Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
    Mat<double> x(5, 3), w(3, 4), b(1, 4), target(5, 4);
    for (auto* m : {&x, &w, &b, &target}) oracle::fill(*m, rng);
    auto loss = [&] {
      Mat<double> y;
      nn::dense_forward<double>(x, w, RowVec<double>(b.row(0)), a, y);
      return nn::mse_loss<double>(y, target);
    };
    Mat<double> y, dy, dx, dw = Mat<double>::Zero(3, 4);
    RowVec<double> db = RowVec<double>::Zero(4);
    nn::dense_forward<double>(x, w, RowVec<double>(b.row(0)), a, y);
    nn::mse_loss<double>(y, target, &dy);
    nn::dense_backward<double>(x, w, y, a, dy, dx, dw, db);
    record("dense/" + std::string(nn::to_string(a)), oracle::compare(loss, {x, w, b}, {dx, dw, Mat<double>(db)}).worst_relative);
  }
  {
    Mat<double> x(8, 3), target(2, 3);
    oracle::fill(x, rng);
    oracle::fill(target, rng);
    Mat<double> y, dy, dx = Mat<double>::Zero(8, 3);
    std::vector<int> arg;
    nn::global_max_pool<double>(x, 4, y, arg);
    nn::mse_loss<double>(y, target, &dy);
    nn::global_max_pool_backward<double>(dy, 4, arg, dx);
    auto loss = [&] {
      Mat<double> out;
      std::vector<int> a;
      nn::global_max_pool<double>(x, 4, out, a);
      return nn::mse_loss<double>(out, target);
    };
    record("pooling", oracle::compare(loss, {x}, {dx}).worst_relative);
  }
  {
    Mat<double> p(4, 5), t(4, 5), grad;
    oracle::fill(p, rng);
    oracle::fill(t, rng);
    nn::mse_loss<double>(p, t, &grad);
    auto loss = [&] { return nn::mse_loss<double>(p, t); };
    record("mse", oracle::compare(loss, {p}, {grad}).worst_relative);
  }
  record("fcnn", oracle::check_network(nn::fcnn_spec(2, 6, 4), {5}, 3, 1));
  record("lstm 1x4, 5 steps", oracle::check_network(nn::lstm_spec(1, 4), {5, 3}, 3, 2));
  record("lstm 2x4, 5 steps", oracle::check_network(nn::lstm_spec(2, 4), {5, 3}, 3, 3));
  record("convlstm1d, 5 steps", oracle::check_network(nn::convlstm_spec(1, {3, 2}, 5), {5, 4, 4}, 2, 4));
  record("convlstm2d, 5 steps", oracle::check_network(nn::convlstm_spec(2, {2, 3}, 4), {5, 3, 3, 2}, 2, 5));
  for (Activation a : {Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
    auto spec = nn::convlstm_spec(1, {2}, 4);
    for (auto& layer : spec.layers) {
      if (layer.kind == nn::LayerKind::Dense && layer.units == 4) layer.activation = a;
    }
    record("head/" + std::string(nn::to_string(a)), oracle::check_network(spec, {4, 5, 4}, 2, 6));
  }
  const double secs = seconds_since(t0);
  std::string detail = "worst relative error " + num(worst) + ", " + num(secs) + " s";
  for (const auto& f : failed) detail += ", failed " + f;
  return {failed.empty() && secs < 120.0, detail};
}

// --- 5: LSTM against FCNN on the nearest-neighbour model ----------------------

bool decreasing(const std::vector<nn::EpochRecord>& h) {
  // Last validation value clearly below the first, and the tail below the head.
  if (h.size() < 4) return false;
  const std::size_t q = h.size() / 4;
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t k = 0; k < q; ++k) {
    head += h[k].val_mse;
    tail += h[h.size() - 1 - k].val_mse;
  }
  return tail < head && h.back().val_mse < h.front().val_mse;
}

Outcome learning_order(const fs::path& out) {
  const json common = {{"family", "nearest_neighbor"},
                       {"sizes", {5}},
                       {"samples_per_size", 11112},
                       {"split", {{"train", 0.9}, {"validation", 0.1}, {"test", 0.0}}},
                       {"seed", 5}};
  // Same data, epochs and batch size; each learning rate is the best of
  // {3e-4, 1e-3, 3e-3, 1e-2} on the validation split.
  json lstm = common;
  lstm["name"] = "c5-lstm";
  lstm["encoder"] = "lstm";
  lstm["network"] = {{"preset", "lstm"}, {"layers", 2}, {"units", 32}};
  lstm["training"] = {{"epochs", 80}, {"batch_size", 64}, {"learning_rate", 1e-2}};
  json fcnn = common;
  fcnn["name"] = "c5-fcnn";
  fcnn["encoder"] = "fcnn";
  fcnn["network"] = "fcnn";
  fcnn["training"] = {{"epochs", 80}, {"batch_size", 64}, {"learning_rate", 3e-3}};
  std::ofstream log(out / "c5.log");
  const auto l = generate_and_train(make_config(lstm, out), log);
  const auto f = generate_and_train(make_config(fcnn, out), log);
  const double vl = l.history.back().val_mse;
  const double vf = f.history.back().val_mse;
  const bool ok = vl < vf && decreasing(l.history) && decreasing(f.history);
  return {ok, "final val MSE lstm " + num(vl) + " vs fcnn " + num(vf) + ", decreasing " +
                  (decreasing(l.history) ? "yes" : "no") + "/" + (decreasing(f.history) ? "yes" : "no")};
}

// --- 6: overfitting on the all-to-all model -----------------------------------

Outcome overfitting(const fs::path& out) {
  const json j = {{"name", "c6-overfit"},
                  {"family", "all_to_all"},
                  {"sizes", {6}},
                  {"samples_per_size", 2500},
                  {"split", {{"train", 0.8}, {"validation", 0.2}, {"test", 0.0}}},
                  {"encoder", "fcnn"},
                  {"network", "fcnn"},
                  {"training", {{"epochs", 60}, {"batch_size", 64}, {"learning_rate", 1e-3}}},
                  {"seed", 6}};
  std::ofstream log(out / "c6.log");
  const auto ck = generate_and_train(make_config(j, out), log);
  const auto& h = ck.history;
  const std::size_t tail = std::max<std::size_t>(1, h.size() / 10);
  double val = 0.0;
  for (std::size_t k = h.size() - tail; k < h.size(); ++k) val += h[k].val_mse;
  val /= static_cast<double>(tail);
  const double train = h.back().train_mse;
  const double ratio = val / train;
  return {ratio >= 3.0, "2000 training samples, final train MSE " + num(train) + ", validation plateau " + num(val) +
                            ", ratio " + num(ratio)};
}

// --- 7: extrapolation with the 1D ConvLSTM -----------------------------------

Outcome extrapolation(const fs::path& out) {
  auto c = load_config(fs::path(GAPNET_SOURCE_DIR) / "configs" / "fig3-desk.json");
  c.output = out / c.name;
  c.timing_repeats = 1;
  std::ofstream log(out / "c7.log");
  generate_and_train(c, log);
  if (cmd_extrapolate(c, log) != 0) throw gapnet::Error("extrapolation failed");
  const auto report = json::parse(slurp(c.output / "extrapolation.json"));
  double m6 = NAN;
  double m8 = NAN;
  std::string curve;
  for (const auto& row : report.at("per_size")) {
    const int m = row.at("M").get<int>();
    const double mse = row.at("mse_gap").get<double>();
    if (m == 6) m6 = mse;
    if (m == 8) m8 = mse;
    curve += " " + std::to_string(m) + ":" + num(mse);
  }
  const bool scatter = fs::exists(c.output / "extrapolation_scatter.csv");
  const bool ok = std::isfinite(m6) && std::isfinite(m8) && m8 <= 10.0 * m6 && scatter;
  return {ok, "MSE_gap(8)/MSE_gap(6) = " + num(m8 / m6) + ", curve" + curve +
                  (scatter ? ", scatter " + (c.output / "extrapolation_scatter.csv").string() : ", scatter missing")};
}

// --- 8, 9: calculators ----------------------------------------------------------

Outcome speedup_break_even(const fs::path&) {
  SpeedupInputs in;
  in.n_train = 90000;
  in.tau_alg = 6.0 * 3600.0 / 90000.0;  // 6 h to solve the training set
  in.tau_train = 86400.0 / 90000.0;  // 1 day of training
  in.tau_alg_large = 1.5 * 3600.0;
  in.tau_nn = 0.005;
  const auto v = speedup(in);
  in.n_use = 20;
  const bool at20 = *speedup(in).beneficial;
  in.n_use = 21;
  const bool at21 = *speedup(in).beneficial;
  return {!v.never_beneficial && v.min_n_use == 21 && !at20 && at21,
          "minimal beneficial N_use = " + std::to_string(v.min_n_use) + " (beneficial for N_use > 20)"};
}

Outcome run_budget(const fs::path&) {
  const auto runs = estimate_runs(10000, 50, 200000);
  return {runs == 100000000000ULL, std::to_string(runs) + " runs; " + num(run_time_seconds(runs, 1e-6) / 86400.0) +
                                       " days at 1 us, " + num(run_time_seconds(runs, 5e-6) / 86400.0) +
                                       " days at 5 us"};
}

// --- 10: determinism ------------------------------------------------------------

Outcome determinism(const fs::path& out) {
  std::vector<std::string> mismatched;
  int presets = 0;
  const fs::path dir = fs::path(GAPNET_SOURCE_DIR) / "configs";
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    ++presets;
    auto base = load_config(entry.path());
    base.samples_per_size = std::min(base.samples_per_size, 40);
    base.training.epochs = std::min(base.training.epochs, 2);
    base.timing_repeats = 1;
    base.precision = "f64";
    std::ostringstream log;
    std::vector<std::string> files[2];
    for (int run = 0; run < 2; ++run) {
      auto c = base;
      c.output = out / "c10" / (base.name + "-" + std::to_string(run));
      c.threads = run + 1;
      fs::remove_all(c.output);
      cmd_generate(c, log);
      cmd_train(c, log);
      for (const char* f : {"dataset/samples.jsonl", "dataset/manifest.json", "history.csv"}) {
        files[run].push_back(slurp(c.output / f));
      }
    }
    if (files[0] != files[1]) mismatched.push_back(base.name);
  }
  std::string detail = std::to_string(presets) + " presets rerun with 1 and 2 threads";
  for (const auto& m : mismatched) detail += ", differs: " + m;
  return {presets > 0 && mismatched.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gapnet acceptance criteria"};
  std::vector<int> only;
  std::string out = "acceptance_out";
  app.add_option("--only", only, "criteria to run (1-10)")->check(CLI::Range(1, 10));
  app.add_option("--out", out, "directory for logs and artifacts");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(const fs::path&)>>> criteria = {
      {"spectral oracle equivalence", spectral_equivalence},
      {"endpoint identities", endpoint_identities},
      {"LHZ correctness", lhz_correctness},
      {"gradient suite", gradient_suite},
      {"learning order LSTM < FCNN", learning_order},
      {"overfitting signature", overfitting},
      {"extrapolation", extrapolation},
      {"speedup break-even", speedup_break_even},
      {"run budget", run_budget},
      {"determinism", determinism},
  };
  fs::create_directories(out);
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second(out);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[k].first << ": "
              << o.detail << " [" << num(seconds_since(t0)) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

#include "gapnet/experiments/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>

#include "gapnet/errors.hpp"
#include "gapnet/experiments/calculators.hpp"
#include "gapnet/nn/train.hpp"

namespace gapnet::experiments {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class F>
double median_seconds(int repeats, F&& f) {
  std::vector<double> times;
  for (int r = 0; r < std::max(repeats, 1); ++r) {
    const auto start = Clock::now();
    f();
    times.push_back(seconds_since(start));
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

// Timings vary from run to run, so they live in their own file and never
// enter the deterministic reports.
void record_timing(const ExperimentConfig& config, const std::string& key, const ordered_json& value) {
  const fs::path path = config.output / "timing.json";
  ordered_json j = ordered_json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      j = ordered_json::parse(in);
    } catch (const json::exception&) {
      j = ordered_json::object();
    }
  }
  j[key] = value;
  write_json(path, j);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

ordered_json provenance(const ExperimentConfig& config) {
  ordered_json j;
  j["experiment"] = config.name;
  j["config_checksum"] = config_checksum(config);
  j["code_version"] = code_version();
  j["seed"] = config.seed;
  j["solver"] = solver_to_json(config.solver);
  j["precision"] = config.precision;
  return j;
}

ordered_json metrics_json(const SizeMetrics& m) {
  ordered_json j;
  j["M"] = m.size;
  j["count"] = m.count;
  j["mse_log"] = m.mse_log;
  j["mse_gap"] = m.mse_gap;
  j["worst_instance_id"] = m.worst_id;
  j["worst_mse_gap"] = m.worst_mse_gap;
  j["trained"] = m.trained;
  return j;
}

ProblemInstance draw_instance(const ExperimentConfig& config, int size, std::uint64_t seed) {
  if (config.family == Family::LhzPhysical) {
    const ProblemInstance logical = sample_instance(Family::AllToAll, size, seed);
    std::optional<double> c;
    if (config.constraint_strength >= 0.0) c = config.constraint_strength;
    ProblemInstance physical = lhz_encode(logical, c).physical;
    physical.seed = seed;
    return physical;
  }
  return sample_instance(config.family, size, seed);
}

std::uint64_t instance_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t id) {
  return derive_seed(derive_seed(seed, stream), id);
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template <class S>
Evaluation evaluate_impl(const nn::Checkpoint& ck, std::span<const Sample> samples, const EncoderConfig& encoder,
                         const std::vector<int>& trained_sizes) {
  const nn::Network<S> net(ck.spec, ck.input_shape);
  const nn::ParameterStore<S> store = ck.weights.template cast<S>();

  Evaluation ev;
  ev.predicted_gaps.resize(samples.size());
  std::vector<double> sample_log(samples.size());
  std::vector<double> sample_gap(samples.size());

  // Samples of one size share an input shape, so they are batched per size.
  std::map<int, std::vector<std::size_t>> by_size;
  for (std::size_t i = 0; i < samples.size(); ++i) by_size[samples[i].instance.size].push_back(i);
  for (const auto& [size, indices] : by_size) {
    std::vector<EncodedSample> encoded;
    encoded.reserve(indices.size());
    for (std::size_t i : indices) encoded.push_back(encode_fixed(samples[i], encoder));
    const nn::Mat<double> out = nn::predict_log(net, store, std::span<const EncodedSample>(encoded));
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const Sample& s = samples[indices[k]];
      const auto& truth = s.trajectory;
      if (out.cols() != truth.n_steps()) throw ShapeError("prediction length differs from the sweep grid");
      std::vector<double> log_out(out.row(static_cast<Eigen::Index>(k)).data(),
                                  out.row(static_cast<Eigen::Index>(k)).data() + out.cols());
      std::vector<double> gaps = nn::to_gap(log_out);
      double se_log = 0.0;
      double se_gap = 0.0;
      for (int t = 0; t < truth.n_steps(); ++t) {
        se_log += std::pow(log_out[t] - truth.log_gaps[t], 2);
        se_gap += std::pow(gaps[t] - truth.gaps[t], 2);
      }
      sample_log[indices[k]] = se_log / truth.n_steps();
      sample_gap[indices[k]] = se_gap / truth.n_steps();
      ev.predicted_gaps[indices[k]] = std::move(gaps);
    }
  }

  auto summarize = [&](const std::vector<std::size_t>& indices, int size) {
    SizeMetrics m;
    m.size = size;
    m.count = indices.size();
    m.trained = std::find(trained_sizes.begin(), trained_sizes.end(), size) != trained_sizes.end();
    bool first = true;
    for (std::size_t i : indices) {
      m.mse_log += sample_log[i];
      m.mse_gap += sample_gap[i];
      if (first || sample_gap[i] > m.worst_mse_gap) {
        m.worst_mse_gap = sample_gap[i];
        m.worst_id = samples[i].id;
        first = false;
      }
    }
    m.mse_log /= static_cast<double>(indices.size());
    m.mse_gap /= static_cast<double>(indices.size());
    return m;
  };
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (const auto& [size, indices] : by_size) ev.per_size.push_back(summarize(indices, size));
  ev.overall = summarize(all, 0);
  ev.overall.trained = false;
  return ev;
}

template <class S>
TrainedModel train_impl(const ExperimentConfig& config, const Dataset& dataset, const std::string& checksum,
                        std::ostream* log) {
  const EncoderConfig& encoder = dataset.manifest.encoder;
  if (encoder.kind != config.encoder.kind) {
    throw ConfigError(std::string("dataset was encoded for ") + std::string(to_string(encoder.kind)) +
                      ", the config asks for " + std::string(to_string(config.encoder.kind)));
  }
  std::vector<const Sample*> train_samples;
  std::vector<const Sample*> val_samples;
  for (const auto& s : dataset.samples) {
    if (s.split == SplitTag::Train) train_samples.push_back(&s);
    if (s.split == SplitTag::Validation) val_samples.push_back(&s);
  }
  if (train_samples.empty()) throw InvalidArgument("dataset has no training samples");
  if (encoder.kind == EncoderKind::Fcnn || encoder.kind == EncoderKind::Lstm) {
    for (const auto* s : train_samples) {
      if (s->instance.size != train_samples.front()->instance.size) {
        throw ConfigError("fcnn and lstm networks need a dataset with a single system size");
      }
    }
  }

  std::vector<EncodedSample> val_encoded;
  for (const auto* s : val_samples) val_encoded.push_back(encode_fixed(*s, encoder));

  const EncodedSample probe = encode_fixed(*train_samples.front(), encoder);
  const nn::Shape shape = nn::input_shape_of(probe.input);
  const nn::NetworkSpec spec = resolve_network(config);
  const nn::Network<S> net(spec, shape);
  if (net.output_length() != dataset.manifest.n_steps) {
    throw ConfigError("network predicts " + std::to_string(net.output_length()) + " values, the sweep has " +
                      std::to_string(dataset.manifest.n_steps) + " points");
  }

  nn::TrainingSet train_set;
  train_set.size = train_samples.size();
  train_set.encode = [&](std::size_t i, int epoch) {
    const Sample& s = *train_samples[i];
    Rng placement(derive_seed(s.placement_seed, static_cast<std::uint64_t>(epoch)), stream_tag::kPlacement);
    return encode(s, encoder, placement);
  };
  const nn::TrainingSet val_set = nn::fixed_set(val_encoded);

  nn::TrainOptions options;
  options.epochs = config.training.epochs;
  options.batch_size = config.training.batch_size;
  options.seed = config.seed;
  options.adam.alpha = config.training.learning_rate;
  options.patience = config.training.patience;
  options.threads = config.threads;
  options.chunk_size = config.training.chunk_size;
  if (log != nullptr) {
    options.on_epoch = [log](const nn::EpochRecord& r) {
      *log << "epoch " << r.epoch << "  train_mse " << fmt(r.train_mse) << "  val_mse " << fmt(r.val_mse) << '\n'
           << std::flush;
    };
  }

  if (log != nullptr) {
    *log << "training " << spec.name << " (" << net.init(config.seed).scalar_count() << " parameters, "
         << config.precision << ") on " << train_samples.size() << " samples, validating on " << val_samples.size()
         << '\n';
  }
  const auto start = Clock::now();
  auto result = nn::train(net, train_set, val_encoded.empty() ? nullptr : &val_set, options,
                          nn::initial_state(net, config.seed, options.adam));
  TrainedModel model;
  model.seconds = seconds_since(start);
  model.diverged = result.diverged;
  model.stopped_early = result.stopped_early;
  model.message = result.message;

  auto& ck = model.checkpoint;
  ck.spec = spec;
  ck.input_shape = shape;
  ck.encoder = encoder;
  ck.family = dataset.manifest.family;
  ck.precision = config.precision;
  ck.weights = result.state.store.template cast<double>();
  ck.adam.config = result.state.adam.config;
  ck.adam.step = result.state.adam.step;
  for (const auto& m : result.state.adam.m) ck.adam.m.push_back(m.template cast<double>());
  for (const auto& v : result.state.adam.v) ck.adam.v.push_back(v.template cast<double>());
  ck.seed = config.seed;
  ck.epochs_completed = result.state.epochs_completed;
  ck.dataset_checksum = checksum;
  ck.history = result.state.history;
  ck.code_version = code_version();
  return model;
}

std::vector<int> training_sizes(const nn::Checkpoint& ck, const Dataset* dataset) {
  if (dataset != nullptr) return sorted_unique(dataset->manifest.sizes);
  (void)ck;
  return {};
}

void write_scatter(const fs::path& path, std::span<const Sample> samples, const Evaluation& ev) {
  std::ostringstream csv;
  csv << "instance_id,M,step,lambda,true_gap,predicted_gap\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& t = samples[i].trajectory;
    for (int k = 0; k < t.n_steps(); ++k) {
      csv << samples[i].id << ',' << samples[i].instance.size << ',' << k << ',' << fmt(t.lambdas[k]) << ','
          << fmt(t.gaps[k]) << ',' << fmt(ev.predicted_gaps[i][k]) << '\n';
    }
  }
  write_text(path, csv.str());
}

Dataset load_for(const ExperimentConfig& config) {
  const fs::path dir = dataset_dir(config);
  if (!fs::exists(dir / "manifest.json")) {
    throw ConfigError("no dataset at " + dir.string() + "; run 'generate' first");
  }
  return load_dataset(dir);
}

nn::Checkpoint load_model(const ExperimentConfig& config, const std::optional<fs::path>& path) {
  const fs::path dir = path ? *path : model_dir(config);
  if (!fs::exists(dir / "checkpoint.json")) throw ConfigError("no checkpoint at " + dir.string() + "; run 'train' first");
  return nn::load_checkpoint(dir);
}

double tau_nn(const nn::Checkpoint& ck, const Sample& sample, const EncoderConfig& encoder, int repeats) {
  const EncodedSample e = encode_fixed(sample, encoder);
  if (ck.precision == "f32") {
    const nn::Network<float> net(ck.spec, ck.input_shape);
    const auto store = ck.weights.cast<float>();
    return median_seconds(repeats, [&] { (void)nn::predict(net, store, e); });
  }
  const nn::Network<double> net(ck.spec, ck.input_shape);
  return median_seconds(repeats, [&] { (void)nn::predict(net, ck.weights, e); });
}

}  // namespace

fs::path dataset_dir(const ExperimentConfig& config) { return config.output / "dataset"; }
fs::path model_dir(const ExperimentConfig& config) { return config.output / "model"; }

std::vector<Sample> generate_samples(const ExperimentConfig& config, const std::vector<int>& sizes, int per_size,
                                     std::uint64_t stream, std::ostream* log, GenerationStats* stats) {
  struct Job {
    std::uint64_t id;
    int size;
  };
  std::vector<Job> jobs;
  std::uint64_t id = 0;
  for (int m : sizes) {
    for (int k = 0; k < per_size; ++k) jobs.push_back({id++, m});
  }
  const SweepSchedule schedule = make_schedule(config.n_steps);
  std::vector<std::optional<Sample>> slots(jobs.size());
  std::vector<std::string> errors(jobs.size());
  nn::parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    try {
      Sample s;
      s.id = job.id;
      const std::uint64_t seed = instance_seed(config.seed, stream, job.id);
      s.instance = draw_instance(config, job.size, seed);
      s.trajectory = gap_trajectory(s.instance, schedule, config.solver);
      s.placement_seed = derive_seed(seed, stream_tag::kPlacement);
      slots[j] = std::move(s);
    } catch (const ConvergenceError& e) {
      errors[j] = "instance " + std::to_string(job.id) + " (M=" + std::to_string(job.size) +
                  "): " + e.what() + " at lambda " + fmt(e.lambda());
    }
  });

  GenerationStats local;
  GenerationStats& st = stats != nullptr ? *stats : local;
  st.attempted += jobs.size();
  std::vector<Sample> samples;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (slots[j]) {
      samples.push_back(std::move(*slots[j]));
    } else {
      ++st.failed;
      st.failures.push_back(errors[j]);
      if (log != nullptr) *log << "solver failure: " << errors[j] << '\n';
    }
  }
  const double rate = jobs.empty() ? 0.0 : static_cast<double>(jobs.size() - samples.size()) / jobs.size();
  if (rate > config.max_failure_rate) {
    throw Error("solver failed on " + std::to_string(jobs.size() - samples.size()) + " of " +
                std::to_string(jobs.size()) + " instances, above the allowed rate " + fmt(config.max_failure_rate));
  }
  if (log != nullptr) *log << "solved " << samples.size() << " of " << jobs.size() << " instances\n";
  return samples;
}

Dataset build_dataset(const ExperimentConfig& config, std::ostream* log, GenerationStats* stats) {
  Dataset ds;
  ds.samples = generate_samples(config, config.sizes, config.samples_per_size, stream_tag::kInstances, log, stats);
  if (ds.samples.empty()) throw Error("no instances could be solved");
  split_dataset(ds.samples, config.split, config.seed);
  auto& m = ds.manifest;
  m.family = config.family;
  m.sizes = config.sizes;
  m.counts = count_splits(ds.samples);
  m.n_steps = config.n_steps;
  m.encoder = resolve_encoder(config);
  m.seed = config.seed;
  m.constraint_strength = config.constraint_strength;
  m.solver = config.solver;
  m.code_version = code_version();
  m.records = ds.samples.size();
  return ds;
}

TrainedModel train_model(const ExperimentConfig& config, const Dataset& dataset, const std::string& checksum,
                         std::ostream* log) {
  if (config.precision == "f32") return train_impl<float>(config, dataset, checksum, log);
  return train_impl<double>(config, dataset, checksum, log);
}

Evaluation evaluate_samples(const nn::Checkpoint& checkpoint, std::span<const Sample> samples,
                            const EncoderConfig& encoder, const std::vector<int>& trained_sizes, int threads) {
  (void)threads;
  if (samples.empty()) throw InvalidArgument("cannot evaluate on an empty test set");
  if (checkpoint.precision == "f32") return evaluate_impl<float>(checkpoint, samples, encoder, trained_sizes);
  return evaluate_impl<double>(checkpoint, samples, encoder, trained_sizes);
}

EncoderConfig evaluation_encoder(const ExperimentConfig& config, const nn::Checkpoint& checkpoint, int largest) {
  EncoderConfig e = checkpoint.encoder;
  switch (e.kind) {
    case EncoderKind::Fcnn:
    case EncoderKind::Lstm:
      break;
    case EncoderKind::ConvLstm1D:
      if (config.evaluation.width > 0) e.width = config.evaluation.width;
      if (largest > e.width) {
        throw SizeError("size " + std::to_string(largest) + " exceeds the padded width " + std::to_string(e.width));
      }
      break;
    case EncoderKind::ConvLstm2D:
      if (config.evaluation.width > 0) e.pad_height = e.pad_width = config.evaluation.width;
      if (largest > e.pad_height || largest > e.pad_width) {
        throw SizeError("size " + std::to_string(largest) + " exceeds the padded grid");
      }
      break;
  }
  return e;
}

int cmd_generate(const ExperimentConfig& config, std::ostream& log) {
  GenerationStats stats;
  Dataset ds = build_dataset(config, &log, &stats);
  save_dataset(dataset_dir(config), ds);

  std::ostringstream csv;
  csv << "instance_id,M,split,min_gap\n";
  for (const auto& s : ds.samples) {
    csv << s.id << ',' << s.instance.size << ',' << to_string(s.split) << ',' << fmt(s.trajectory.min_gap()) << '\n';
  }
  write_text(config.output / "generation.csv", csv.str());

  ordered_json report = provenance(config);
  report["records"] = ds.samples.size();
  report["counts"] = {{"train", ds.manifest.counts.train},
                      {"validation", ds.manifest.counts.validation},
                      {"test", ds.manifest.counts.test}};
  report["failures"] = stats.failures;
  report["samples_crc32"] = ds.manifest.samples_crc32;
  report["manifest_checksum"] = manifest_checksum(dataset_dir(config));
  write_json(config.output / "generate_report.json", report);

  // Per-instance solver time on the first instance of every size.
  ordered_json timing = ordered_json::object();
  const SweepSchedule schedule = make_schedule(config.n_steps);
  for (int m : sorted_unique(config.sizes)) {
    const auto it = std::find_if(ds.samples.begin(), ds.samples.end(),
                                 [m](const Sample& s) { return s.instance.size == m; });
    if (it == ds.samples.end()) continue;
    const double t = median_seconds(config.timing_repeats,
                                    [&] { (void)gap_trajectory(it->instance, schedule, config.solver); });
    timing[std::to_string(m)] = t;
  }
  record_timing(config, "tau_alg_seconds", timing);
  log << "dataset written to " << dataset_dir(config).string() << " (" << ds.samples.size() << " records, crc32 "
      << ds.manifest.samples_crc32 << ")\n";
  return 0;
}

int cmd_train(const ExperimentConfig& config, std::ostream& log) {
  const Dataset ds = load_for(config);
  const std::string checksum = manifest_checksum(dataset_dir(config));
  TrainedModel model = train_model(config, ds, checksum, &log);
  nn::save_checkpoint(model_dir(config), model.checkpoint);
  nn::write_history_csv(config.output / "history.csv", model.checkpoint.history);

  ordered_json report = provenance(config);
  report["network"] = nn::network_spec_to_json(model.checkpoint.spec);
  report["parameters"] = model.checkpoint.weights.scalar_count();
  report["dataset_checksum"] = checksum;
  report["epochs_completed"] = model.checkpoint.epochs_completed;
  report["diverged"] = model.diverged;
  report["stopped_early"] = model.stopped_early;
  report["message"] = model.message;
  if (!model.checkpoint.history.empty()) {
    const auto& last = model.checkpoint.history.back();
    report["final_train_mse"] = last.train_mse;
    report["final_val_mse"] = std::isfinite(last.val_mse) ? ordered_json(last.val_mse) : ordered_json(nullptr);
  }
  write_json(config.output / "train_report.json", report);

  const std::size_t n_train = ds.manifest.counts.train;
  record_timing(config, "tau_train_seconds", n_train > 0 ? model.seconds / static_cast<double>(n_train) : 0.0);
  record_timing(config, "train_wall_seconds", model.seconds);
  if (model.diverged) {
    log << "training diverged: " << model.message << "; last good weights saved to " << model_dir(config).string()
        << '\n';
    return 2;
  }
  if (!model.message.empty()) log << model.message << '\n';
  log << "checkpoint written to " << model_dir(config).string() << '\n';
  return 0;
}

int cmd_evaluate(const ExperimentConfig& config, std::ostream& log, const std::optional<fs::path>& checkpoint,
                 const std::optional<fs::path>& dataset) {
  const nn::Checkpoint ck = load_model(config, checkpoint);
  const fs::path data_path = dataset ? *dataset : dataset_dir(config);
  const Dataset ds = load_dataset(data_path);
  const std::string checksum = manifest_checksum(data_path);
  if (!dataset && checksum != ck.dataset_checksum) {
    throw ChecksumError("checkpoint was trained on dataset " + ck.dataset_checksum + ", found " + checksum);
  }
  if (ds.manifest.family != ck.family || ds.manifest.encoder.kind != ck.encoder.kind) {
    throw ConfigError("dataset and checkpoint disagree on family or encoder");
  }

  std::vector<Sample> test;
  for (const auto& s : ds.samples) {
    if (s.split == SplitTag::Test) test.push_back(s);
  }
  if (test.empty()) throw InvalidArgument("dataset " + data_path.string() + " has no test samples");

  int largest = 0;
  for (const auto& s : test) largest = std::max(largest, s.instance.size);
  const EncoderConfig encoder = evaluation_encoder(config, ck, largest);
  const Evaluation ev = evaluate_samples(ck, test, encoder, training_sizes(ck, &ds), config.threads);

  ordered_json report = provenance(config);
  report["dataset_checksum"] = checksum;
  report["checkpoint_dataset_checksum"] = ck.dataset_checksum;
  report["test_samples"] = test.size();
  report["overall"] = metrics_json(ev.overall);
  ordered_json per = ordered_json::array();
  for (const auto& m : ev.per_size) per.push_back(metrics_json(m));
  report["per_size"] = std::move(per);
  write_json(config.output / "evaluation.json", report);
  write_scatter(config.output / "scatter.csv", test, ev);

  const double t_nn = tau_nn(ck, test.front(), encoder, config.timing_repeats);
  record_timing(config, "tau_nn_seconds", t_nn);

  log << "test MSE  log-space " << fmt(ev.overall.mse_log) << "  gap-space " << fmt(ev.overall.mse_gap) << " over "
      << test.size() << " instances\n";
  return 0;
}

int cmd_extrapolate(const ExperimentConfig& config, std::ostream& log, const std::optional<fs::path>& checkpoint,
                    const std::vector<int>& sizes_override) {
  const nn::Checkpoint ck = load_model(config, checkpoint);
  std::vector<int> sizes = sorted_unique(sizes_override.empty() ? config.evaluation.sizes : sizes_override);
  if (sizes.empty()) throw ConfigError("no evaluation sizes given");
  if (ck.encoder.kind == EncoderKind::Fcnn || ck.encoder.kind == EncoderKind::Lstm) {
    throw ConfigError("extrapolation needs a convolutional (grid encoded) checkpoint");
  }
  const EncoderConfig encoder = evaluation_encoder(config, ck, sizes.back());

  ExperimentConfig eval_config = config;
  eval_config.family = ck.family;
  const std::vector<Sample> samples =
      generate_samples(eval_config, sizes, config.evaluation.samples_per_size, stream_tag::kEvaluation, &log);
  const Evaluation ev = evaluate_samples(ck, samples, encoder, sorted_unique(config.sizes), config.threads);

  std::ostringstream csv;
  csv << "M,trained,count,mse_log,mse_gap\n";
  for (const auto& m : ev.per_size) {
    csv << m.size << ',' << (m.trained ? 1 : 0) << ',' << m.count << ',' << fmt(m.mse_log) << ',' << fmt(m.mse_gap)
        << '\n';
  }
  write_text(config.output / "extrapolation.csv", csv.str());
  write_scatter(config.output / "extrapolation_scatter.csv", samples, ev);

  ordered_json report = provenance(config);
  report["padded_width"] = encoder.kind == EncoderKind::ConvLstm1D ? encoder.width : encoder.pad_width;
  ordered_json per = ordered_json::array();
  for (const auto& m : ev.per_size) per.push_back(metrics_json(m));
  report["per_size"] = std::move(per);
  write_json(config.output / "extrapolation.json", report);

  for (const auto& m : ev.per_size) {
    log << "M=" << m.size << (m.trained ? " (trained)" : " (extrapolated)") << "  mse_gap " << fmt(m.mse_gap)
        << "  mse_log " << fmt(m.mse_log) << '\n';
  }
  return 0;
}

int cmd_diagnostics(const ExperimentConfig& config, std::ostream& log) {
  const int size = config.diagnostics.size > 0 ? config.diagnostics.size : config.sizes.front();
  const std::vector<Sample> samples = generate_samples(config, {size}, config.diagnostics.instances,
                                                       stream_tag::kEvaluation + 1, &log);
  std::vector<GapTrajectory> trajectories;
  for (const auto& s : samples) trajectories.push_back(s.trajectory);
  const Histogram h = gap_histogram(std::span<const GapTrajectory>(trajectories), config.diagnostics.bins);

  std::ostringstream hist;
  hist << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    hist << fmt(h.lo + h.bin_width() * b) << ',' << fmt(h.lo + h.bin_width() * (b + 1)) << ',' << h.counts[b] << '\n';
  }
  write_text(config.output / "histogram.csv", hist.str());

  std::vector<double> values = config.diagnostics.scan_values;
  if (values.empty()) {
    for (int k = 0; k <= 10; ++k) values.push_back(-1.0 + 0.2 * k);
  }
  const ProblemInstance& base = samples.front().instance;
  const SweepSchedule schedule = make_schedule(config.n_steps);
  const auto grid = min_gap_scan(base, config.diagnostics.coupling_a, config.diagnostics.coupling_b, values, values,
                                 schedule, config.solver);

  // Predicted landscape when a compatible coefficient-input model exists.
  std::optional<nn::Checkpoint> model;
  if (fs::exists(model_dir(config) / "checkpoint.json")) {
    nn::Checkpoint ck = nn::load_checkpoint(model_dir(config));
    if (ck.family == base.family && (ck.encoder.kind == EncoderKind::Fcnn || ck.encoder.kind == EncoderKind::Lstm) &&
        nn::input_shape_of(encode_fixed(samples.front(), ck.encoder).input) == ck.input_shape) {
      model = std::move(ck);
    }
  }
  std::ostringstream land;
  land << "J_a,J_b,true_min_gap" << (model ? ",predicted_min_gap" : "") << '\n';
  for (std::size_t r = 0; r < values.size(); ++r) {
    for (std::size_t c = 0; c < values.size(); ++c) {
      land << fmt(values[r]) << ',' << fmt(values[c]) << ',' << fmt(grid[r][c]);
      if (model) {
        Sample probe = samples.front();
        probe.instance.couplings[config.diagnostics.coupling_a].value = values[r];
        probe.instance.couplings[config.diagnostics.coupling_b].value = values[c];
        const auto ev = evaluate_samples(*model, std::span<const Sample>(&probe, 1), model->encoder, {});
        const auto& g = ev.predicted_gaps.front();
        land << ',' << fmt(*std::min_element(g.begin(), g.end()));
      }
      land << '\n';
    }
  }
  write_text(config.output / "landscape.csv", land.str());

  ordered_json report = provenance(config);
  report["size"] = size;
  report["instances"] = samples.size();
  report["histogram"] = {{"lo", h.lo}, {"hi", h.hi}, {"bins", h.counts.size()}, {"total", h.total()}};
  report["landscape"] = {{"instance_id", samples.front().id},
                         {"coupling_a", config.diagnostics.coupling_a},
                         {"coupling_b", config.diagnostics.coupling_b},
                         {"values", values},
                         {"predicted", model.has_value()}};
  write_json(config.output / "diagnostics.json", report);
  log << "histogram of " << h.total() << " gap values and a " << values.size() << "x" << values.size()
      << " landscape written to " << config.output.string() << '\n';
  return 0;
}

}  // namespace gapnet::experiments

#include "gapnet/experiments/config.hpp"

#include <algorithm>
#include <fstream>

#include "gapnet/errors.hpp"
#include "gapnet/nn/checkpoint.hpp"

namespace gapnet::experiments {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Default padded chain length for the 1D grid encoder.
constexpr int kDefaultChainWidth = 22;

template <class T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

int largest(const std::vector<int>& v) { return v.empty() ? 0 : *std::max_element(v.begin(), v.end()); }

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    reject_unknown(j,
                   {"name", "family", "sizes", "samples_per_size", "n_steps", "split", "encoder", "network",
                    "training", "solver", "constraint_strength", "evaluation", "diagnostics", "seed", "precision",
                    "threads", "output", "max_failure_rate", "timing_repeats"},
                   "experiment config");
    read(j, "name", c.name);
    if (j.contains("family")) c.family = family_from_string(j.at("family").get<std::string>());
    read(j, "sizes", c.sizes);
    read(j, "samples_per_size", c.samples_per_size);
    read(j, "n_steps", c.n_steps);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      reject_unknown(s, {"train", "validation", "test"}, "split");
      c.split = {s.value("train", 0.0), s.value("validation", 0.0), s.value("test", 0.0)};
    }
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      if (e.is_string()) {
        c.encoder.kind = encoder_from_string(e.get<std::string>());
      } else {
        reject_unknown(e, {"kind", "width", "pad"}, "encoder");
        c.encoder = encoder_from_json(e);
      }
    }
    if (j.contains("network")) c.network = j.at("network");
    if (j.contains("training")) {
      const auto& t = j.at("training");
      reject_unknown(t, {"epochs", "batch_size", "learning_rate", "patience", "chunk_size"}, "training");
      read(t, "epochs", c.training.epochs);
      read(t, "batch_size", c.training.batch_size);
      read(t, "learning_rate", c.training.learning_rate);
      read(t, "patience", c.training.patience);
      read(t, "chunk_size", c.training.chunk_size);
    }
    if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
    read(j, "constraint_strength", c.constraint_strength);
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      reject_unknown(e, {"sizes", "samples_per_size", "width"}, "evaluation");
      read(e, "sizes", c.evaluation.sizes);
      read(e, "samples_per_size", c.evaluation.samples_per_size);
      read(e, "width", c.evaluation.width);
    }
    if (j.contains("diagnostics")) {
      const auto& d = j.at("diagnostics");
      reject_unknown(d, {"size", "instances", "bins", "coupling_a", "coupling_b", "scan_values"}, "diagnostics");
      read(d, "size", c.diagnostics.size);
      read(d, "instances", c.diagnostics.instances);
      read(d, "bins", c.diagnostics.bins);
      read(d, "coupling_a", c.diagnostics.coupling_a);
      read(d, "coupling_b", c.diagnostics.coupling_b);
      read(d, "scan_values", c.diagnostics.scan_values);
    }
    read(j, "seed", c.seed);
    read(j, "precision", c.precision);
    read(j, "threads", c.threads);
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    read(j, "max_failure_rate", c.max_failure_rate);
    read(j, "timing_repeats", c.timing_repeats);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["name"] = c.name;
  j["family"] = std::string(to_string(c.family));
  j["sizes"] = c.sizes;
  j["samples_per_size"] = c.samples_per_size;
  j["n_steps"] = c.n_steps;
  j["split"] = {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}};
  j["encoder"] = encoder_to_json(c.encoder);
  j["network"] = c.network;
  j["training"] = {{"epochs", c.training.epochs},
                   {"batch_size", c.training.batch_size},
                   {"learning_rate", c.training.learning_rate},
                   {"patience", c.training.patience},
                   {"chunk_size", c.training.chunk_size}};
  j["solver"] = solver_to_json(c.solver);
  j["constraint_strength"] = c.constraint_strength;
  j["evaluation"] = {{"sizes", c.evaluation.sizes},
                     {"samples_per_size", c.evaluation.samples_per_size},
                     {"width", c.evaluation.width}};
  j["diagnostics"] = {{"size", c.diagnostics.size},
                      {"instances", c.diagnostics.instances},
                      {"bins", c.diagnostics.bins},
                      {"coupling_a", c.diagnostics.coupling_a},
                      {"coupling_b", c.diagnostics.coupling_b},
                      {"scan_values", c.diagnostics.scan_values}};
  j["seed"] = c.seed;
  j["precision"] = c.precision;
  j["threads"] = c.threads;
  j["output"] = c.output.string();
  j["max_failure_rate"] = c.max_failure_rate;
  j["timing_repeats"] = c.timing_repeats;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void validate(const ExperimentConfig& c) {
  if (c.sizes.empty()) throw ConfigError("sizes must not be empty");
  for (int m : c.sizes) {
    if (m < 2) throw ConfigError("system sizes must be at least 2");
  }
  if (c.samples_per_size < 1) throw ConfigError("samples_per_size must be positive");
  if (c.n_steps < 2) throw ConfigError("n_steps must be at least 2");
  if (c.training.epochs < 0 || c.training.batch_size < 1 || c.training.chunk_size < 1 ||
      !(c.training.learning_rate > 0.0) || c.training.patience < 0) {
    throw ConfigError("training settings out of range");
  }
  if (c.precision != "f32" && c.precision != "f64") throw ConfigError("precision must be f32 or f64");
  if (c.threads < 1) throw ConfigError("threads must be positive");
  if (c.max_failure_rate < 0.0 || c.max_failure_rate > 1.0) throw ConfigError("max_failure_rate must be in [0, 1]");
  if (c.timing_repeats < 1) throw ConfigError("timing_repeats must be positive");
  const double sum = c.split.train + c.split.validation + c.split.test;
  if (c.split.train < 0.0 || c.split.validation < 0.0 || c.split.test < 0.0 || std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be non-negative and sum to 1");
  }
  const bool logical = c.family != Family::LhzPhysical;
  switch (c.encoder.kind) {
    case EncoderKind::Fcnn:
    case EncoderKind::Lstm:
      if (!logical) throw ConfigError("fcnn and lstm encoders take chain or all-to-all instances");
      break;
    case EncoderKind::ConvLstm1D:
      if (c.family != Family::NearestNeighbor1D) throw ConfigError("convlstm1d encoder takes chain instances");
      break;
    case EncoderKind::ConvLstm2D:
      if (logical) throw ConfigError("convlstm2d encoder takes LHZ instances");
      break;
  }
  for (int m : c.evaluation.sizes) {
    if (m < 2) throw ConfigError("evaluation sizes must be at least 2");
  }
  if (c.evaluation.samples_per_size < 1) throw ConfigError("evaluation.samples_per_size must be positive");
  if (c.diagnostics.instances < 1 || c.diagnostics.bins < 1) throw ConfigError("diagnostics settings out of range");
}

std::string config_checksum(const ExperimentConfig& config) { return crc32_hex(config_to_json(config).dump()); }

void apply(const Overrides& o, ExperimentConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.output) c.output = *o.output;
  if (o.threads) c.threads = *o.threads;
  if (o.precision) c.precision = *o.precision;
  validate(c);
}

EncoderConfig resolve_encoder(const ExperimentConfig& c) {
  EncoderConfig e = c.encoder;
  const int needed = std::max(largest(c.sizes), largest(c.evaluation.sizes));
  if (e.kind == EncoderKind::ConvLstm1D && e.width == 0) e.width = std::max(kDefaultChainWidth, needed);
  if (e.kind == EncoderKind::ConvLstm2D) {
    // With fields the LHZ square of M logical spins has extent M.
    if (e.pad_height == 0) e.pad_height = largest(c.sizes);
    if (e.pad_width == 0) e.pad_width = largest(c.sizes);
  }
  if (e.kind == EncoderKind::ConvLstm1D && e.width < largest(c.sizes)) {
    throw ConfigError("encoder width " + std::to_string(e.width) + " is smaller than the largest training size");
  }
  return e;
}

nn::NetworkSpec resolve_network(const ExperimentConfig& c) {
  const EncoderKind kind = c.encoder.kind;
  std::string preset;
  json options = json::object();
  if (c.network.is_string()) {
    preset = c.network.get<std::string>();
  } else if (c.network.is_object() && c.network.contains("layers") && c.network.at("layers").is_array()) {
    try {
      return nn::network_spec_from_json(c.network);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid network layers: ") + e.what());
    }
  } else if (c.network.is_object()) {
    preset = c.network.value("preset", std::string("auto"));
    options = c.network;
  } else {
    throw ConfigError("network must be a preset name or an object");
  }
  if (preset == "auto") preset = std::string(to_string(kind));

  try {
    if (preset == "fcnn") {
      if (kind != EncoderKind::Fcnn) throw ConfigError("fcnn network needs the fcnn encoder");
      if (options.contains("hidden_layers") || options.contains("neurons")) {
        return nn::fcnn_spec(options.value("hidden_layers", 5), options.value("neurons", 500), c.n_steps);
      }
      return nn::fcnn_spec(c.family, largest(c.sizes), c.n_steps);
    }
    if (preset == "lstm") {
      if (kind != EncoderKind::Lstm) throw ConfigError("lstm network needs the lstm encoder");
      return nn::lstm_spec(options.value("layers", 2), options.value("units", 128));
    }
    if (preset == "convlstm1d" || preset == "convlstm2d") {
      const int dims = preset == "convlstm1d" ? 1 : 2;
      if ((dims == 1 && kind != EncoderKind::ConvLstm1D) || (dims == 2 && kind != EncoderKind::ConvLstm2D)) {
        throw ConfigError(preset + " network needs the " + preset + " encoder");
      }
      const auto filters = options.value("filters", std::vector<int>{20, 40, 60, 40, 20});
      return nn::convlstm_spec(dims, filters, options.value("head", 100));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid network options: ") + e.what());
  }
  throw ConfigError("unknown network preset '" + preset + "'");
}

}  // namespace gapnet::experiments

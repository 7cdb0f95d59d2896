#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gapnet/dataset.hpp"
#include "gapnet/nn/network.hpp"
#include "gapnet/spectrum.hpp"

namespace gapnet::experiments {

struct TrainingConfig {
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int patience = 0;
  int chunk_size = 16;
};

// Sizes and sample counts for extrapolation studies. Instances are drawn on a
// stream of their own, so they never coincide with the training data.
struct EvaluationConfig {
  std::vector<int> sizes;
  int samples_per_size = 100;
  int width = 0;  // padded width at evaluation; 0 keeps the training geometry
};

struct DiagnosticsConfig {
  int size = 0;  // 0: first entry of `sizes`
  int instances = 100;
  int bins = 50;
  std::size_t coupling_a = 0;
  std::size_t coupling_b = 1;
  std::vector<double> scan_values;  // landscape grid for both couplings
};

// One experiment, fully specified. Every field has a default so configs only
// list what they change; see configs/ for the shipped presets.
struct ExperimentConfig {
  std::string name = "experiment";
  Family family = Family::NearestNeighbor1D;
  std::vector<int> sizes{5};
  int samples_per_size = 100;
  int n_steps = kDefaultSweepSteps;
  SplitFractions split{0.8, 0.1, 0.1};
  EncoderConfig encoder;
  nlohmann::json network = "auto";  // preset name or {"preset": ..., options} or {"layers": [...]}
  TrainingConfig training;
  SolverPolicy solver;
  double constraint_strength = -1.0;  // LHZ only; negative selects the default
  EvaluationConfig evaluation;
  DiagnosticsConfig diagnostics;
  std::uint64_t seed = 1;
  std::string precision = "f64";
  int threads = 1;
  std::filesystem::path output = "out";
  double max_failure_rate = 0.0;
  int timing_repeats = 5;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

// Validates ranges and cross-field consistency; throws ConfigError.
void validate(const ExperimentConfig& config);

// CRC-32 of the canonical JSON form, recorded in every report.
std::string config_checksum(const ExperimentConfig& config);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  std::optional<int> threads;
  std::optional<std::string> precision;
};

void apply(const Overrides& overrides, ExperimentConfig& config);

// Encoder geometry with unset widths filled in for the configured sizes.
EncoderConfig resolve_encoder(const ExperimentConfig& config);

// Network described by config.network for inputs of the given encoder.
nn::NetworkSpec resolve_network(const ExperimentConfig& config);

}  // namespace gapnet::experiments

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapnet/dataset.hpp"
#include "gapnet/experiments/config.hpp"
#include "gapnet/nn/checkpoint.hpp"

namespace gapnet::experiments {

struct GenerationStats {
  std::size_t attempted = 0;
  std::size_t failed = 0;
  std::vector<std::string> failures;  // one line per failed instance
};

// Instances `first_id ..` for every size, solved on the sweep grid. Instance
// i is seeded from (seed, stream, i) alone. Solver failures are logged and
// skipped; more than max_failure_rate of them aborts with an Error.
std::vector<Sample> generate_samples(const ExperimentConfig& config, const std::vector<int>& sizes, int per_size,
                                     std::uint64_t stream, std::ostream* log = nullptr,
                                     GenerationStats* stats = nullptr);

// Samples for config.sizes, split and wrapped with a manifest.
Dataset build_dataset(const ExperimentConfig& config, std::ostream* log = nullptr, GenerationStats* stats = nullptr);

struct TrainedModel {
  nn::Checkpoint checkpoint;
  bool diverged = false;
  bool stopped_early = false;
  std::string message;
  double seconds = 0.0;  // wall time, excluded from every deterministic output
};

TrainedModel train_model(const ExperimentConfig& config, const Dataset& dataset, const std::string& dataset_checksum,
                         std::ostream* log = nullptr);

struct SizeMetrics {
  int size = 0;
  std::size_t count = 0;
  double mse_log = 0.0;  // on log(1 + g)
  double mse_gap = 0.0;  // on g
  std::uint64_t worst_id = 0;
  double worst_mse_gap = 0.0;
  bool trained = false;  // size seen during training
};

struct Evaluation {
  std::vector<SizeMetrics> per_size;  // ascending size
  SizeMetrics overall;
  std::vector<std::vector<double>> predicted_gaps;  // per sample, same order as the input
};

// Fixed-placement predictions of a checkpoint on the given samples. An empty
// sample list is an error.
Evaluation evaluate_samples(const nn::Checkpoint& checkpoint, std::span<const Sample> samples,
                            const EncoderConfig& encoder, const std::vector<int>& trained_sizes, int threads = 1);

// Evaluation encoder for sizes up to `largest` (rejects sizes beyond the
// configured evaluation width).
EncoderConfig evaluation_encoder(const ExperimentConfig& config, const nn::Checkpoint& checkpoint, int largest);

// Layout of the output directory.
std::filesystem::path dataset_dir(const ExperimentConfig& config);
std::filesystem::path model_dir(const ExperimentConfig& config);

// Subcommands. Each writes its files below config.output and returns a
// process exit code.
int cmd_generate(const ExperimentConfig& config, std::ostream& log);
int cmd_train(const ExperimentConfig& config, std::ostream& log);
int cmd_evaluate(const ExperimentConfig& config, std::ostream& log,
                 const std::optional<std::filesystem::path>& checkpoint = std::nullopt,
                 const std::optional<std::filesystem::path>& dataset = std::nullopt);
int cmd_extrapolate(const ExperimentConfig& config, std::ostream& log,
                    const std::optional<std::filesystem::path>& checkpoint = std::nullopt,
                    const std::vector<int>& sizes = {});
int cmd_diagnostics(const ExperimentConfig& config, std::ostream& log);

}  // namespace gapnet::experiments

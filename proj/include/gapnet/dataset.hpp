#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gapnet/encoded.hpp"
#include "gapnet/rng.hpp"
#include "gapnet/spectrum.hpp"
#include "gapnet/spinmodel.hpp"

namespace gapnet {

enum class SplitTag { Train, Validation, Test };

std::string_view to_string(SplitTag tag);
SplitTag split_from_string(std::string_view name);

struct Sample {
  std::uint64_t id = 0;
  ProblemInstance instance;
  GapTrajectory trajectory;
  SplitTag split = SplitTag::Train;
  // Seeds the fixed grid placement used outside training.
  std::uint64_t placement_seed = 0;

  bool operator==(const Sample&) const = default;
};

EncodedSample encode_fcnn(const Sample& sample);
EncodedSample encode_lstm(const Sample& sample);

// Chain of M sites placed at `offset` inside a zero-padded chain of `width`.
// Physical channels are scaled by lambda_k, the mask channel is not.
EncodedSample encode_convlstm1d(const Sample& sample, int width, int offset);

// LHZ square (see lhz_grid_position) translated by (row_offset, col_offset)
// inside a pad_height x pad_width grid.
EncodedSample encode_convlstm2d(const Sample& sample, int pad_height, int pad_width, int row_offset,
                                int col_offset);

// Uniform offset in [0, width - occupied].
int draw_offset(Rng& rng, int occupied, int width);

// Dispatches on config.kind; grid encoders draw their placement from `placement`.
EncodedSample encode(const Sample& sample, const EncoderConfig& config, Rng& placement);

// Fixed placement derived from sample.placement_seed.
EncodedSample encode_fixed(const Sample& sample, const EncoderConfig& config);

// Smallest grid geometry that holds every sample of the given family and sizes.
EncoderConfig minimal_encoder(EncoderKind kind, Family family, const std::vector<int>& sizes);

struct SplitFractions {
  double train = 1.0;
  double validation = 0.0;
  double test = 0.0;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;

  bool operator==(const SplitCounts&) const = default;
};

// Deterministic shuffled partition: tags every sample and returns the counts.
SplitCounts split_dataset(std::vector<Sample>& samples, const SplitFractions& fractions, std::uint64_t seed);

SplitCounts count_splits(const std::vector<Sample>& samples);

inline constexpr int kDatasetVersion = 1;

struct DatasetManifest {
  int version = kDatasetVersion;
  Family family = Family::NearestNeighbor1D;
  std::vector<int> sizes;
  SplitCounts counts;
  int n_steps = kDefaultSweepSteps;
  EncoderConfig encoder;
  std::uint64_t seed = 0;
  double constraint_strength = -1.0;  // LHZ only; negative selects the default
  SolverPolicy solver;
  std::string code_version;
  std::string samples_file = "samples.jsonl";
  std::string samples_crc32;
  std::size_t records = 0;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Sample> samples;
};

// Writes <dir>/manifest.json and <dir>/samples.jsonl. Fills in the record
// count and checksum of the manifest it is given.
void save_dataset(const std::filesystem::path& dir, Dataset& dataset);

// Verifies version, checksum, record and split counts, and that every chain
// fits the recorded padding width.
Dataset load_dataset(const std::filesystem::path& dir);

// CRC-32 of a byte string as 8 lowercase hex digits.
std::string crc32_hex(std::string_view bytes);

// Checksum of a dataset's manifest file; checkpoints record it.
std::string manifest_checksum(const std::filesystem::path& dir);

std::string code_version();

// JSON forms. Keys keep a fixed order; doubles are written in shortest
// round-trip form, so a save/load cycle is bit exact.
nlohmann::ordered_json instance_to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const nlohmann::json& j);
nlohmann::ordered_json sample_to_json(const Sample& sample);
Sample sample_from_json(const nlohmann::json& j);
nlohmann::ordered_json solver_to_json(const SolverPolicy& policy);
SolverPolicy solver_from_json(const nlohmann::json& j);
nlohmann::ordered_json encoder_to_json(const EncoderConfig& config);
EncoderConfig encoder_from_json(const nlohmann::json& j);

}  // namespace gapnet

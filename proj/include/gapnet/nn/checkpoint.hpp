#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gapnet/encoded.hpp"
#include "gapnet/nn/network.hpp"
#include "gapnet/nn/train.hpp"
#include "gapnet/spinmodel.hpp"

namespace gapnet::nn {

inline constexpr int kCheckpointVersion = 1;

// A trained model plus everything needed to resume or audit it.
//
// On disk a checkpoint is a directory: checkpoint.json holds the metadata,
// weights.bin the parameters followed by the Adam first and second moments,
// each as little-endian float64 in the parameter order listed in the JSON.
// The shuffle and placement streams are pure functions of (seed, epoch), so
// the seed and epoch count are the complete random state.
struct Checkpoint {
  NetworkSpec spec;
  Shape input_shape;
  EncoderConfig encoder;
  Family family = Family::NearestNeighbor1D;
  std::string precision = "f64";
  ParameterStore<double> weights;
  AdamState<double> adam;
  std::uint64_t seed = 0;
  int epochs_completed = 0;
  std::string dataset_checksum;  // crc32 of the training dataset's manifest
  std::vector<EpochRecord> history;
  std::string code_version;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

nlohmann::ordered_json network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

// Writes epoch,train_mse,val_mse rows.
void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace gapnet::nn

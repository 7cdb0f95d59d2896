#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gapnet/encoded.hpp"
#include "gapnet/nn/network.hpp"

namespace gapnet::nn {

// Samples are produced on demand so grid encoders can redraw their
// placement every epoch. `encode` must be deterministic in (index, epoch)
// and safe to call from several threads.
struct TrainingSet {
  std::size_t size = 0;
  std::function<EncodedSample(std::size_t index, int epoch)> encode;
};

// Wraps already encoded samples (placement fixed); they must outlive the set.
TrainingSet fixed_set(std::span<const EncodedSample> samples);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_mse = 0.0;  // mean batch loss seen during the epoch
  double val_mse = 0.0;  // full validation pass after the epoch; NaN without validation data

  bool operator==(const EpochRecord&) const = default;
};

struct TrainOptions {
  int epochs = 10;
  int batch_size = 64;
  std::uint64_t seed = 0;
  AdamConfig adam;
  int patience = 0;  // stop after this many epochs without a better val_mse; 0 disables
  int threads = 1;
  // Samples per gradient chunk. Chunk gradients are summed in a fixed order,
  // so results do not depend on the thread count.
  int chunk_size = 16;
  std::function<void(const EpochRecord&)> on_epoch;
};

template <class S>
struct TrainState {
  ParameterStore<S> store;
  AdamState<S> adam;
  int epochs_completed = 0;
  std::vector<EpochRecord> history;
};

template <class S>
struct TrainResult {
  TrainState<S> state;
  bool diverged = false;  // state then holds the last finite weights
  bool stopped_early = false;  // state then holds the best validation weights
  std::string message;
};

template <class S>
TrainState<S> initial_state(const Network<S>& net, std::uint64_t seed, const AdamConfig& adam = {});

// Mini-batch Adam on the MSE of log(1 + g). Continues from `start`, so a
// resumed run sees the same shuffles and placements as an uninterrupted one.
template <class S>
TrainResult<S> train(const Network<S>& net, const TrainingSet& train_set, const TrainingSet* validation,
                     const TrainOptions& options, TrainState<S> start);

// Mean squared error over every sample and step of a set, in log space.
template <class S>
double evaluate_mse(const Network<S>& net, const ParameterStore<S>& store, const TrainingSet& set, int epoch = 0,
                    int batch_size = 256, int threads = 1);

// Raw network outputs (log(1 + g) space), one row per sample.
template <class S>
Mat<double> predict_log(const Network<S>& net, const ParameterStore<S>& store,
                        std::span<const EncodedSample> samples, int batch_size = 256);

// exp(out) - 1 clipped at zero.
std::vector<double> to_gap(std::span<const double> log_output);

template <class S>
std::vector<double> predict(const Network<S>& net, const ParameterStore<S>& store, const EncodedSample& sample);

// Runs fn(0..n-1) on up to `threads` workers; fn must only touch slot i.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace gapnet::nn

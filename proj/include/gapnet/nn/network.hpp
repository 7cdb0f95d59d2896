#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gapnet/encoded.hpp"
#include "gapnet/nn/layers.hpp"
#include "gapnet/spinmodel.hpp"

namespace gapnet::nn {

enum class LayerKind { Dense, Lstm, ConvLstm, GlobalMaxPool };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int units = 0;  // neurons, LSTM width or ConvLSTM filters
  int kernel_h = 1;
  int kernel_w = 1;
  Activation activation = Activation::Linear;  // Dense only

  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;

  bool operator==(const NetworkSpec&) const = default;
};

// Per-sample extents of a layer's input or output.
struct Shape {
  int steps = 1;
  int height = 1;
  int width = 1;
  int channels = 0;

  int sites() const { return height * width; }
  bool operator==(const Shape&) const = default;
};

// Network input shape implied by an encoded tensor:
// [P] -> (1,1,1,P), [T,P] -> (T,1,1,P), [T,W,C] -> (T,1,W,C), [T,H,W,C] as is.
Shape input_shape_of(const Tensor& input);

// FCNN with the hidden layout used for each family and size; relu hidden
// layers and a linear Dense(n_steps) output.
NetworkSpec fcnn_spec(Family family, int size, int n_steps);
NetworkSpec fcnn_spec(int hidden_layers, int neurons, int n_steps);
// Stacked LSTM layers followed by a time-distributed linear Dense(1).
NetworkSpec lstm_spec(int layers = 2, int units = 128);
// ConvLSTM stack (1D kernel 3, 2D kernel 2x2) with global max pooling and a
// Dense(head) -> Dense(1) linear head applied at every step.
NetworkSpec convlstm_spec(int dimensions, const std::vector<int>& filters = {20, 40, 60, 40, 20}, int head = 100);

// Batch of sequences. Rows are ordered (step, sample, y, x), so every frame
// is a contiguous row block; columns are channels.
template <class S>
struct Sequence {
  int steps = 1;
  int batch = 0;
  int height = 1;
  int width = 1;
  int channels = 0;
  Mat<S> data;

  int frame_rows() const { return batch * height * width; }
  auto frame(int t) { return data.middleRows(static_cast<Eigen::Index>(t) * frame_rows(), frame_rows()); }
  auto frame(int t) const { return data.middleRows(static_cast<Eigen::Index>(t) * frame_rows(), frame_rows()); }
};

// Packs encoded inputs into one batch; all inputs must share a shape.
template <class S>
Sequence<S> make_batch(std::span<const Tensor* const> inputs);

template <class S>
struct ParameterStore {
  std::vector<std::string> names;
  std::vector<Mat<S>> values;

  std::size_t size() const { return values.size(); }
  std::size_t scalar_count() const;
  std::size_t index_of(const std::string& name) const;

  template <class T>
  ParameterStore<T> cast() const {
    ParameterStore<T> out;
    out.names = names;
    for (const auto& v : values) out.values.push_back(v.template cast<T>());
    return out;
  }
};

// Zero-filled store with the same names and shapes.
template <class S>
ParameterStore<S> zeros_like(const ParameterStore<S>& store);

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class S>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Mat<S>> m;
  std::vector<Mat<S>> v;
};

template <class S>
AdamState<S> make_adam(const ParameterStore<S>& store, const AdamConfig& config = {});

// theta -= alpha * mhat / (sqrt(vhat) + eps) with bias-corrected moments.
// Throws TrainingError naming the first parameter whose gradient is not finite.
template <class S>
void adam_step(ParameterStore<S>& store, AdamState<S>& adam, const ParameterStore<S>& grads);

template <class S>
struct LayerCache {
  Sequence<S> output;
  std::vector<CellStep<S>> steps;  // recurrent layers
  std::vector<int> argmax;  // pooling
};

// Everything backward() needs from one forward pass.
template <class S>
struct Tape {
  Sequence<S> input;
  std::vector<LayerCache<S>> layers;
};

template <class S>
class Network {
 public:
  Network(NetworkSpec spec, Shape input);

  const NetworkSpec& spec() const { return spec_; }
  Shape input_shape() const { return shapes_.front(); }
  Shape output_shape() const { return shapes_.back(); }
  // Length of the per-sample output once flattened over steps and channels.
  int output_length() const { return output_shape().steps * output_shape().channels; }

  // Uniform fan-in scaled initialisation: U(-l, l) with l = sqrt(3 / fan_in),
  // times sqrt(2) before a relu. Biases start at zero except the LSTM forget
  // gate, which starts at one.
  ParameterStore<S> init(std::uint64_t seed) const;

  // Input shapes are checked against the network; the spatial extent of
  // convolutional networks may differ from the one given at construction.
  Sequence<S> forward(const ParameterStore<S>& store, const Sequence<S>& x, Tape<S>* tape = nullptr) const;

  // Accumulates parameter gradients into grads given dL/d(output).
  void backward(const ParameterStore<S>& store, const Tape<S>& tape, const Sequence<S>& d_out,
                ParameterStore<S>& grads) const;

  // Output as a batch x output_length() matrix, one row per sample.
  Mat<S> flatten_output(const Sequence<S>& out) const;
  Sequence<S> unflatten_gradient(const Mat<S>& grad, const Sequence<S>& like) const;

 private:
  struct Slot {
    std::size_t first = 0;  // index of the layer's first parameter
  };

  NetworkSpec spec_;
  std::vector<Shape> shapes_;  // shapes_[l] feeds layer l
  std::vector<Slot> slots_;
  std::size_t n_params_ = 0;
};

}  // namespace gapnet::nn

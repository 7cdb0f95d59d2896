#include "gapnet/nn/network.hpp"

#include <cmath>
#include <string>

#include "gapnet/errors.hpp"
#include "gapnet/rng.hpp"

namespace gapnet::nn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense:
      return "dense";
    case LayerKind::Lstm:
      return "lstm";
    case LayerKind::ConvLstm:
      return "convlstm";
    case LayerKind::GlobalMaxPool:
      return "global_max_pool";
  }
  return "dense";
}

LayerKind layer_kind_from_string(std::string_view name) {
  if (name == "dense") return LayerKind::Dense;
  if (name == "lstm") return LayerKind::Lstm;
  if (name == "convlstm") return LayerKind::ConvLstm;
  if (name == "global_max_pool") return LayerKind::GlobalMaxPool;
  throw InvalidArgument("unknown layer kind '" + std::string(name) + "'");
}

Shape input_shape_of(const Tensor& input) {
  const auto& s = input.shape;
  switch (s.size()) {
    case 1:
      return {1, 1, 1, s[0]};
    case 2:
      return {s[0], 1, 1, s[1]};
    case 3:
      return {s[0], 1, s[1], s[2]};
    case 4:
      return {s[0], s[1], s[2], s[3]};
    default:
      throw ShapeError("network inputs have rank 1 to 4, got rank " + std::to_string(s.size()));
  }
}

NetworkSpec fcnn_spec(int hidden_layers, int neurons, int n_steps) {
  if (hidden_layers < 0 || neurons < 1 || n_steps < 1) throw InvalidArgument("fcnn: invalid layout");
  NetworkSpec spec;
  spec.name = "fcnn";
  for (int l = 0; l < hidden_layers; ++l) spec.layers.push_back({LayerKind::Dense, neurons, 1, 1, Activation::Relu});
  spec.layers.push_back({LayerKind::Dense, n_steps, 1, 1, Activation::Linear});
  return spec;
}

NetworkSpec fcnn_spec(Family family, int size, int n_steps) {
  // Hidden layers x neurons per layer, by family and system size.
  int layers = 0;
  int neurons = 0;
  switch (family) {
    case Family::NearestNeighbor1D:
      if (size <= 6) {
        layers = 5;
        neurons = 500;
      } else {
        layers = 6;
        neurons = 700;
      }
      break;
    case Family::AllToAll:
      if (size <= 5) {
        layers = 5;
        neurons = 500;
      } else {
        layers = 7;
        neurons = 700;
      }
      break;
    case Family::LhzPhysical:
      layers = size <= 5 ? 3 : 4;
      neurons = 500;
      break;
  }
  return fcnn_spec(layers, neurons, n_steps);
}

NetworkSpec lstm_spec(int layers, int units) {
  if (layers < 1 || units < 1) throw InvalidArgument("lstm: invalid layout");
  NetworkSpec spec;
  spec.name = "lstm";
  for (int l = 0; l < layers; ++l) spec.layers.push_back({LayerKind::Lstm, units, 1, 1, Activation::Linear});
  spec.layers.push_back({LayerKind::Dense, 1, 1, 1, Activation::Linear});
  return spec;
}

NetworkSpec convlstm_spec(int dimensions, const std::vector<int>& filters, int head) {
  if (dimensions != 1 && dimensions != 2) throw InvalidArgument("convlstm: 1 or 2 spatial dimensions");
  if (filters.empty() || head < 1) throw InvalidArgument("convlstm: invalid layout");
  NetworkSpec spec;
  spec.name = dimensions == 1 ? "convlstm1d" : "convlstm2d";
  for (int f : filters) {
    if (dimensions == 1) {
      spec.layers.push_back({LayerKind::ConvLstm, f, 1, 3, Activation::Linear});
    } else {
      spec.layers.push_back({LayerKind::ConvLstm, f, 2, 2, Activation::Linear});
    }
  }
  spec.layers.push_back({LayerKind::GlobalMaxPool, 0, 1, 1, Activation::Linear});
  spec.layers.push_back({LayerKind::Dense, head, 1, 1, Activation::Linear});
  spec.layers.push_back({LayerKind::Dense, 1, 1, 1, Activation::Linear});
  return spec;
}

template <class S>
Sequence<S> make_batch(std::span<const Tensor* const> inputs) {
  if (inputs.empty()) throw ShapeError("empty batch");
  const Shape shape = input_shape_of(*inputs.front());
  Sequence<S> seq;
  seq.steps = shape.steps;
  seq.batch = static_cast<int>(inputs.size());
  seq.height = shape.height;
  seq.width = shape.width;
  seq.channels = shape.channels;
  seq.data.resize(static_cast<Eigen::Index>(seq.steps) * seq.frame_rows(), seq.channels);
  const Eigen::Index sites = shape.sites();
  const std::size_t frame_values = static_cast<std::size_t>(sites) * shape.channels;
  for (int b = 0; b < seq.batch; ++b) {
    const Tensor& t = *inputs[static_cast<std::size_t>(b)];
    if (!(input_shape_of(t) == shape)) throw ShapeError("batch inputs differ in shape");
    for (int k = 0; k < seq.steps; ++k) {
      const double* src = t.data.data() + static_cast<std::size_t>(k) * frame_values;
      const Eigen::Index row0 = (static_cast<Eigen::Index>(k) * seq.batch + b) * sites;
      for (Eigen::Index r = 0; r < sites; ++r) {
        for (Eigen::Index c = 0; c < shape.channels; ++c) {
          seq.data(row0 + r, c) = static_cast<S>(src[r * shape.channels + c]);
        }
      }
    }
  }
  return seq;
}

template <class S>
std::size_t ParameterStore<S>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values) n += static_cast<std::size_t>(v.size());
  return n;
}

template <class S>
std::size_t ParameterStore<S>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw InvalidArgument("no parameter named '" + name + "'");
}

template <class S>
ParameterStore<S> zeros_like(const ParameterStore<S>& store) {
  ParameterStore<S> out;
  out.names = store.names;
  for (const auto& v : store.values) out.values.push_back(Mat<S>::Zero(v.rows(), v.cols()));
  return out;
}

template <class S>
AdamState<S> make_adam(const ParameterStore<S>& store, const AdamConfig& config) {
  AdamState<S> adam;
  adam.config = config;
  for (const auto& v : store.values) {
    adam.m.push_back(Mat<S>::Zero(v.rows(), v.cols()));
    adam.v.push_back(Mat<S>::Zero(v.rows(), v.cols()));
  }
  return adam;
}

template <class S>
void adam_step(ParameterStore<S>& store, AdamState<S>& adam, const ParameterStore<S>& grads) {
  if (grads.size() != store.size() || adam.m.size() != store.size()) {
    throw ShapeError("adam: gradient and parameter stores differ");
  }
  for (std::size_t p = 0; p < store.size(); ++p) {
    if (grads.values[p].rows() != store.values[p].rows() || grads.values[p].cols() != store.values[p].cols()) {
      throw ShapeError("adam: gradient shape mismatch for " + store.names[p]);
    }
    if (!grads.values[p].allFinite()) throw TrainingError("non-finite gradient for parameter " + store.names[p]);
  }
  const auto& c = adam.config;
  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const S b1 = static_cast<S>(c.beta1);
  const S b2 = static_cast<S>(c.beta2);
  const S corr1 = static_cast<S>(1.0 - std::pow(c.beta1, t));
  const S corr2 = static_cast<S>(1.0 - std::pow(c.beta2, t));
  const S alpha = static_cast<S>(c.alpha);
  const S eps = static_cast<S>(c.epsilon);
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto m = adam.m[p].array();
    auto v = adam.v[p].array();
    const auto g = grads.values[p].array();
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    store.values[p].array() -= alpha * (m / corr1) / ((v / corr2).sqrt() + eps);
  }
}

namespace {

Shape propagate(const LayerSpec& layer, const Shape& in) {
  Shape out = in;
  switch (layer.kind) {
    case LayerKind::Dense:
      if (layer.units < 1) throw InvalidArgument("dense layer needs at least one unit");
      out.channels = layer.units;
      break;
    case LayerKind::Lstm:
      if (layer.units < 1) throw InvalidArgument("lstm layer needs at least one unit");
      if (in.sites() != 1) throw ShapeError("lstm layer expects inputs without spatial extent");
      out.channels = layer.units;
      break;
    case LayerKind::ConvLstm:
      if (layer.units < 1) throw InvalidArgument("convlstm layer needs at least one filter");
      if (layer.kernel_h < 1 || layer.kernel_w < 1) throw InvalidArgument("convlstm kernel must be positive");
      out.channels = layer.units;
      break;
    case LayerKind::GlobalMaxPool:
      if (in.sites() < 1) throw ShapeError("global max pooling needs a non-empty grid");
      out.height = 1;
      out.width = 1;
      break;
  }
  return out;
}

template <class S>
void fill_uniform(Mat<S>& m, double limit, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<S>(rng.uniform(-limit, limit));
  }
}

double init_limit(int fan_in, Activation a) {
  const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
  return a == Activation::Relu ? limit * std::sqrt(2.0) : limit;
}

template <class S>
ConvGeometry geometry(const LayerSpec& layer, const Sequence<S>& x) {
  return {x.batch, x.height, x.width, layer.kernel_h, layer.kernel_w};
}

template <class S>
Sequence<S> like(const Sequence<S>& x, int channels) {
  Sequence<S> out;
  out.steps = x.steps;
  out.batch = x.batch;
  out.height = x.height;
  out.width = x.width;
  out.channels = channels;
  out.data.resize(x.data.rows(), channels);
  return out;
}

}  // namespace

template <class S>
Network<S>::Network(NetworkSpec spec, Shape input) : spec_(std::move(spec)) {
  if (spec_.layers.empty()) throw InvalidArgument("network has no layers");
  if (input.steps < 1 || input.sites() < 1 || input.channels < 1) throw ShapeError("network input shape is empty");
  const auto& last = spec_.layers.back();
  if (last.kind != LayerKind::Dense || last.activation != Activation::Linear) {
    throw InvalidArgument("the output layer must be a linear dense layer");
  }
  shapes_.push_back(input);
  std::size_t next = 0;
  for (const auto& layer : spec_.layers) {
    slots_.push_back({next});
    switch (layer.kind) {
      case LayerKind::Dense:
      case LayerKind::Lstm:
        next += 2;
        break;
      case LayerKind::ConvLstm:
        next += 3;
        break;
      case LayerKind::GlobalMaxPool:
        break;
    }
    shapes_.push_back(propagate(layer, shapes_.back()));
  }
  n_params_ = next;
  if (output_shape().sites() != 1) throw ShapeError("network output must not have spatial extent");
}

template <class S>
ParameterStore<S> Network<S>::init(std::uint64_t seed) const {
  Rng rng(seed, stream_tag::kInit);
  ParameterStore<S> store;
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const auto& layer = spec_.layers[l];
    const int cin = shapes_[l].channels;
    const int f = layer.units;
    const std::string prefix = "layer" + std::to_string(l) + "." + std::string(to_string(layer.kind));
    switch (layer.kind) {
      case LayerKind::Dense: {
        Mat<S> w(cin, f);
        fill_uniform(w, init_limit(cin, layer.activation), rng);
        store.names.push_back(prefix + ".W");
        store.values.push_back(std::move(w));
        store.names.push_back(prefix + ".b");
        store.values.push_back(Mat<S>::Zero(1, f));
        break;
      }
      case LayerKind::Lstm: {
        Mat<S> w(f + cin, 4 * f);
        fill_uniform(w, init_limit(f + cin, Activation::Linear), rng);
        Mat<S> b = Mat<S>::Zero(1, 4 * f);
        b.leftCols(f).setOnes();
        store.names.push_back(prefix + ".W");
        store.values.push_back(std::move(w));
        store.names.push_back(prefix + ".b");
        store.values.push_back(std::move(b));
        break;
      }
      case LayerKind::ConvLstm: {
        const int taps = layer.kernel_h * layer.kernel_w;
        const double limit = init_limit(taps * (cin + f), Activation::Linear);
        Mat<S> wx(taps * cin, 4 * f);
        Mat<S> wh(taps * f, 4 * f);
        fill_uniform(wx, limit, rng);
        fill_uniform(wh, limit, rng);
        Mat<S> b = Mat<S>::Zero(1, 4 * f);
        b.leftCols(f).setOnes();
        store.names.push_back(prefix + ".Wx");
        store.values.push_back(std::move(wx));
        store.names.push_back(prefix + ".Wh");
        store.values.push_back(std::move(wh));
        store.names.push_back(prefix + ".b");
        store.values.push_back(std::move(b));
        break;
      }
      case LayerKind::GlobalMaxPool:
        break;
    }
  }
  return store;
}

template <class S>
Sequence<S> Network<S>::forward(const ParameterStore<S>& store, const Sequence<S>& x, Tape<S>* tape) const {
  const Shape in = input_shape();
  if (x.steps != in.steps || x.channels != in.channels) {
    throw ShapeError("network expects " + std::to_string(in.steps) + " steps of " + std::to_string(in.channels) +
                     " channels, got " + std::to_string(x.steps) + " of " + std::to_string(x.channels));
  }
  if (x.batch < 1 || x.height < 1 || x.width < 1) throw ShapeError("empty network input");
  if (x.data.rows() != static_cast<Eigen::Index>(x.steps) * x.frame_rows() || x.data.cols() != x.channels) {
    throw ShapeError("sequence data does not match its declared extents");
  }
  if (store.size() != n_params_) throw ShapeError("parameter store does not belong to this network");

  if (tape != nullptr) {
    tape->input = x;
    tape->layers.assign(spec_.layers.size(), {});
  }
  Sequence<S> cur = x;
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const auto& layer = spec_.layers[l];
    const std::size_t p = slots_[l].first;
    LayerCache<S> cache;
    Sequence<S> out;
    switch (layer.kind) {
      case LayerKind::Dense: {
        out = like(cur, layer.units);
        dense_forward<S>(cur.data, store.values[p], store.values[p + 1], layer.activation, out.data);
        break;
      }
      case LayerKind::Lstm:
      case LayerKind::ConvLstm: {
        if (layer.kind == LayerKind::Lstm && cur.height * cur.width != 1) {
          throw ShapeError("lstm layer expects inputs without spatial extent");
        }
        const int f = layer.units;
        out = like(cur, f);
        const int rows = cur.frame_rows();
        Mat<S> h = Mat<S>::Zero(rows, f);
        Mat<S> c = Mat<S>::Zero(rows, f);
        cache.steps.resize(static_cast<std::size_t>(cur.steps));
        const ConvGeometry g = geometry(layer, cur);
        for (int t = 0; t < cur.steps; ++t) {
          CellStep<S>& step = cache.steps[static_cast<std::size_t>(t)];
          const Mat<S> xt = cur.frame(t);
          if (layer.kind == LayerKind::Lstm) {
            lstm_cell<S>(xt, h, c, store.values[p], store.values[p + 1], step);
          } else {
            convlstm_cell<S>(xt, h, c, store.values[p], store.values[p + 1], store.values[p + 2], g, step);
          }
          h = step.h;
          c = step.c;
          out.frame(t) = step.h;
          // h is kept in the output sequence, no need to store it twice.
          step.h.resize(0, 0);
        }
        break;
      }
      case LayerKind::GlobalMaxPool: {
        out = like(cur, cur.channels);
        out.height = 1;
        out.width = 1;
        global_max_pool<S>(cur.data, cur.height * cur.width, out.data, cache.argmax);
        break;
      }
    }
    if (tape != nullptr) {
      cache.output = out;
      tape->layers[l] = std::move(cache);
    }
    cur = std::move(out);
  }
  return cur;
}

template <class S>
void Network<S>::backward(const ParameterStore<S>& store, const Tape<S>& tape, const Sequence<S>& d_out,
                          ParameterStore<S>& grads) const {
  if (tape.layers.size() != spec_.layers.size()) throw ShapeError("tape does not belong to this network");
  if (grads.size() != n_params_) throw ShapeError("gradient store does not belong to this network");
  Mat<S> grad = d_out.data;
  for (std::size_t li = spec_.layers.size(); li-- > 0;) {
    const auto& layer = spec_.layers[li];
    const auto& cache = tape.layers[li];
    const Sequence<S>& in = li == 0 ? tape.input : tape.layers[li - 1].output;
    const std::size_t p = slots_[li].first;
    if (grad.rows() != cache.output.data.rows() || grad.cols() != cache.output.data.cols()) {
      throw ShapeError("output gradient does not match the network output");
    }
    Mat<S> d_in;
    switch (layer.kind) {
      case LayerKind::Dense: {
        RowVec<S> db = RowVec<S>::Zero(layer.units);
        dense_backward<S>(in.data, store.values[p], cache.output.data, layer.activation, std::move(grad), d_in,
                          grads.values[p], db);
        grads.values[p + 1].row(0) += db;
        break;
      }
      case LayerKind::Lstm:
      case LayerKind::ConvLstm: {
        const int f = layer.units;
        const int rows = in.frame_rows();
        const bool conv = layer.kind == LayerKind::ConvLstm;
        const ConvGeometry g = geometry(layer, in);
        d_in.setZero(in.data.rows(), in.channels);
        Mat<S> dh_next = Mat<S>::Zero(rows, f);
        Mat<S> dc = Mat<S>::Zero(rows, f);
        Mat<S> dz;
        Mat<S> dh;
        Mat<S> cols;
        Mat<S> dcols;
        const Mat<S> zero = Mat<S>::Zero(rows, f);
        for (int t = in.steps - 1; t >= 0; --t) {
          const CellStep<S>& step = cache.steps[static_cast<std::size_t>(t)];
          const Mat<S>& c_prev = t > 0 ? cache.steps[static_cast<std::size_t>(t - 1)].c : zero;
          const Mat<S> h_prev = t > 0 ? Mat<S>(cache.output.frame(t - 1)) : zero;
          const Mat<S> xt = in.frame(t);
          dh = grad.middleRows(static_cast<Eigen::Index>(t) * rows, rows) + dh_next;
          cell_backward<S>(step, c_prev, dh, dc, dz);
          grads.values[p + (conv ? 2 : 1)].row(0) += dz.colwise().sum();
          if (!conv) {
            const Mat<S>& w = store.values[p];
            grads.values[p].topRows(f).noalias() += h_prev.transpose() * dz;
            grads.values[p].bottomRows(in.channels).noalias() += xt.transpose() * dz;
            dh_next.noalias() = dz * w.topRows(f).transpose();
            d_in.middleRows(static_cast<Eigen::Index>(t) * rows, rows).noalias() =
                dz * w.bottomRows(in.channels).transpose();
          } else {
            const Mat<S>& wx = store.values[p];
            const Mat<S>& wh = store.values[p + 1];
            im2col(xt, g, cols);
            grads.values[p].noalias() += cols.transpose() * dz;
            im2col(h_prev, g, cols);
            grads.values[p + 1].noalias() += cols.transpose() * dz;
            dcols.noalias() = dz * wx.transpose();
            Mat<S> dxt = Mat<S>::Zero(rows, in.channels);
            col2im_add(dcols, g, dxt);
            d_in.middleRows(static_cast<Eigen::Index>(t) * rows, rows) = dxt;
            dcols.noalias() = dz * wh.transpose();
            dh_next.setZero();
            col2im_add(dcols, g, dh_next);
          }
        }
        break;
      }
      case LayerKind::GlobalMaxPool:
        global_max_pool_backward<S>(grad, in.height * in.width, cache.argmax, d_in);
        break;
    }
    grad = std::move(d_in);
  }
}

template <class S>
Mat<S> Network<S>::flatten_output(const Sequence<S>& out) const {
  if (out.height * out.width != 1) throw ShapeError("network output must not have spatial extent");
  Mat<S> flat(out.batch, static_cast<Eigen::Index>(out.steps) * out.channels);
  for (int t = 0; t < out.steps; ++t) {
    for (int b = 0; b < out.batch; ++b) {
      flat.row(b).segment(static_cast<Eigen::Index>(t) * out.channels, out.channels) =
          out.data.row(static_cast<Eigen::Index>(t) * out.batch + b);
    }
  }
  return flat;
}

template <class S>
Sequence<S> Network<S>::unflatten_gradient(const Mat<S>& grad, const Sequence<S>& like_out) const {
  Sequence<S> seq = like(like_out, like_out.channels);
  seq.height = like_out.height;
  seq.width = like_out.width;
  if (grad.rows() != like_out.batch || grad.cols() != static_cast<Eigen::Index>(like_out.steps) * like_out.channels) {
    throw ShapeError("output gradient does not match the network output");
  }
  for (int t = 0; t < like_out.steps; ++t) {
    for (int b = 0; b < like_out.batch; ++b) {
      seq.data.row(static_cast<Eigen::Index>(t) * like_out.batch + b) =
          grad.row(b).segment(static_cast<Eigen::Index>(t) * like_out.channels, like_out.channels);
    }
  }
  return seq;
}

#define GAPNET_INSTANTIATE_NETWORK(S)                                                                      \
  template Sequence<S> make_batch<S>(std::span<const Tensor* const>);                                      \
  template struct ParameterStore<S>;                                                                       \
  template ParameterStore<S> zeros_like<S>(const ParameterStore<S>&);                                      \
  template AdamState<S> make_adam<S>(const ParameterStore<S>&, const AdamConfig&);                         \
  template void adam_step<S>(ParameterStore<S>&, AdamState<S>&, const ParameterStore<S>&);                 \
  template class Network<S>;

GAPNET_INSTANTIATE_NETWORK(float)
GAPNET_INSTANTIATE_NETWORK(double)

}  // namespace gapnet::nn

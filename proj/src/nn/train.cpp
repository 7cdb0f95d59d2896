#include "gapnet/nn/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "gapnet/errors.hpp"
#include "gapnet/rng.hpp"

namespace gapnet::nn {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

TrainingSet fixed_set(std::span<const EncodedSample> samples) {
  return {samples.size(), [samples](std::size_t i, int) { return samples[i]; }};
}

std::vector<double> to_gap(std::span<const double> log_output) {
  std::vector<double> out(log_output.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, std::expm1(log_output[i]));
  return out;
}

namespace {

template <class S>
Mat<S> target_matrix(std::span<const EncodedSample> samples, int length) {
  Mat<S> t(static_cast<Eigen::Index>(samples.size()), length);
  for (std::size_t b = 0; b < samples.size(); ++b) {
    if (static_cast<int>(samples[b].target.size()) != length) {
      throw ShapeError("target has " + std::to_string(samples[b].target.size()) + " steps, network predicts " +
                       std::to_string(length));
    }
    for (int k = 0; k < length; ++k) t(static_cast<Eigen::Index>(b), k) = static_cast<S>(samples[b].target[k]);
  }
  return t;
}

template <class S>
Sequence<S> batch_of(std::span<const EncodedSample> samples) {
  std::vector<const Tensor*> inputs;
  inputs.reserve(samples.size());
  for (const auto& s : samples) inputs.push_back(&s.input);
  return make_batch<S>(inputs);
}

// Sum of squared errors over one chunk; adds the chunk's share of the batch
// gradient (scaled by 1 / (batch_total * steps)) into grads.
template <class S>
double chunk_gradient(const Network<S>& net, const ParameterStore<S>& store, std::span<const EncodedSample> chunk,
                      std::size_t batch_total, ParameterStore<S>& grads) {
  Tape<S> tape;
  const Sequence<S> out = net.forward(store, batch_of<S>(chunk), &tape);
  const Mat<S> pred = net.flatten_output(out);
  const Mat<S> diff = pred - target_matrix<S>(chunk, net.output_length());
  const S scale = S(2) / static_cast<S>(static_cast<double>(batch_total) * net.output_length());
  net.backward(store, tape, net.unflatten_gradient((scale * diff).eval(), out), grads);
  return diff.template cast<double>().squaredNorm();
}

}  // namespace

template <class S>
TrainState<S> initial_state(const Network<S>& net, std::uint64_t seed, const AdamConfig& adam) {
  TrainState<S> state;
  state.store = net.init(seed);
  state.adam = make_adam(state.store, adam);
  return state;
}

template <class S>
double evaluate_mse(const Network<S>& net, const ParameterStore<S>& store, const TrainingSet& set, int epoch,
                    int batch_size, int threads) {
  if (set.size == 0) throw InvalidArgument("cannot evaluate on an empty set");
  const std::size_t bs = static_cast<std::size_t>(std::max(batch_size, 1));
  const std::size_t n_batches = (set.size + bs - 1) / bs;
  std::vector<double> sse(n_batches, 0.0);
  parallel_for(n_batches, threads, [&](std::size_t k) {
    const std::size_t lo = k * bs;
    const std::size_t hi = std::min(set.size, lo + bs);
    std::vector<EncodedSample> samples;
    for (std::size_t i = lo; i < hi; ++i) samples.push_back(set.encode(i, epoch));
    const Mat<S> pred = net.flatten_output(net.forward(store, batch_of<S>(samples)));
    sse[k] = (pred - target_matrix<S>(samples, net.output_length())).template cast<double>().squaredNorm();
  });
  const double total = std::accumulate(sse.begin(), sse.end(), 0.0);
  return total / (static_cast<double>(set.size) * net.output_length());
}

template <class S>
TrainResult<S> train(const Network<S>& net, const TrainingSet& train_set, const TrainingSet* validation,
                     const TrainOptions& options, TrainState<S> start) {
  if (options.epochs < 0) throw InvalidArgument("epoch count must be non-negative");
  if (options.batch_size < 1 || options.chunk_size < 1) throw InvalidArgument("batch and chunk sizes must be positive");
  if (options.epochs > 0 && train_set.size == 0) throw InvalidArgument("training set is empty");
  if (validation != nullptr && validation->size == 0) validation = nullptr;

  TrainResult<S> result;
  result.state = std::move(start);
  auto& state = result.state;
  if (state.adam.m.size() != state.store.size()) state.adam = make_adam(state.store, options.adam);

  double best_val = std::numeric_limits<double>::infinity();
  for (const auto& r : state.history) best_val = std::min(best_val, r.val_mse);
  ParameterStore<S> best_store = state.store;
  AdamState<S> best_adam = state.adam;
  int best_epochs = state.epochs_completed;
  int stale = 0;

  std::vector<std::size_t> order(train_set.size);
  const std::size_t bs = static_cast<std::size_t>(options.batch_size);
  const std::size_t cs = static_cast<std::size_t>(options.chunk_size);

  for (int e = 0; e < options.epochs; ++e) {
    const int epoch = state.epochs_completed;  // 0-based index of the epoch being run
    ParameterStore<S> good_store = state.store;
    AdamState<S> good_adam = state.adam;

    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(options.seed, stream_tag::kShuffle), static_cast<std::uint64_t>(epoch));
    shuffle.shuffle(order);

    double sse = 0.0;
    std::size_t seen = 0;
    try {
      for (std::size_t lo = 0; lo < order.size(); lo += bs) {
        const std::size_t hi = std::min(order.size(), lo + bs);
        const std::size_t n = hi - lo;
        std::vector<EncodedSample> batch(n);
        parallel_for(n, options.threads, [&](std::size_t i) { batch[i] = train_set.encode(order[lo + i], epoch); });

        const std::size_t n_chunks = (n + cs - 1) / cs;
        std::vector<ParameterStore<S>> chunk_grads(n_chunks);
        std::vector<double> chunk_sse(n_chunks, 0.0);
        parallel_for(n_chunks, options.threads, [&](std::size_t k) {
          chunk_grads[k] = zeros_like(state.store);
          const std::size_t c_lo = k * cs;
          const std::size_t c_hi = std::min(n, c_lo + cs);
          chunk_sse[k] = chunk_gradient(net, state.store,
                                        std::span<const EncodedSample>(batch).subspan(c_lo, c_hi - c_lo), n,
                                        chunk_grads[k]);
        });
        for (std::size_t k = 1; k < n_chunks; ++k) {
          for (std::size_t p = 0; p < chunk_grads[0].size(); ++p) chunk_grads[0].values[p] += chunk_grads[k].values[p];
        }
        const double batch_sse = std::accumulate(chunk_sse.begin(), chunk_sse.end(), 0.0);
        if (!std::isfinite(batch_sse)) throw TrainingError("training loss became non-finite");
        adam_step(state.store, state.adam, chunk_grads[0]);
        sse += batch_sse;
        seen += n;
      }
    } catch (const TrainingError& err) {
      state.store = std::move(good_store);
      state.adam = std::move(good_adam);
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch + 1) + ": " + err.what();
      return result;
    }

    EpochRecord record;
    record.epoch = epoch + 1;
    record.train_mse = sse / (static_cast<double>(seen) * net.output_length());
    record.val_mse = validation != nullptr
                         ? evaluate_mse(net, state.store, *validation, epoch, 256, options.threads)
                         : std::numeric_limits<double>::quiet_NaN();
    ++state.epochs_completed;
    state.history.push_back(record);
    if (options.on_epoch) options.on_epoch(record);

    if (options.patience > 0 && validation != nullptr) {
      if (record.val_mse < best_val) {
        best_val = record.val_mse;
        best_store = state.store;
        best_adam = state.adam;
        best_epochs = state.epochs_completed;
        stale = 0;
      } else if (++stale >= options.patience) {
        state.store = std::move(best_store);
        state.adam = std::move(best_adam);
        result.stopped_early = true;
        result.message = "no validation improvement for " + std::to_string(options.patience) +
                         " epochs; keeping weights from epoch " + std::to_string(best_epochs);
        return result;
      }
    }
  }
  return result;
}

template <class S>
Mat<double> predict_log(const Network<S>& net, const ParameterStore<S>& store, std::span<const EncodedSample> samples,
                        int batch_size) {
  Mat<double> out(static_cast<Eigen::Index>(samples.size()), net.output_length());
  const std::size_t bs = static_cast<std::size_t>(std::max(batch_size, 1));
  for (std::size_t lo = 0; lo < samples.size(); lo += bs) {
    const std::size_t n = std::min(samples.size(), lo + bs) - lo;
    const Mat<S> pred = net.flatten_output(net.forward(store, batch_of<S>(samples.subspan(lo, n))));
    out.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(n)) = pred.template cast<double>();
  }
  return out;
}

template <class S>
std::vector<double> predict(const Network<S>& net, const ParameterStore<S>& store, const EncodedSample& sample) {
  const Mat<double> out = predict_log(net, store, std::span<const EncodedSample>(&sample, 1));
  return to_gap(std::span<const double>(out.data(), static_cast<std::size_t>(out.size())));
}

#define GAPNET_INSTANTIATE_TRAIN(S)                                                                           \
  template TrainState<S> initial_state<S>(const Network<S>&, std::uint64_t, const AdamConfig&);               \
  template TrainResult<S> train<S>(const Network<S>&, const TrainingSet&, const TrainingSet*,                 \
                                   const TrainOptions&, TrainState<S>);                                       \
  template double evaluate_mse<S>(const Network<S>&, const ParameterStore<S>&, const TrainingSet&, int, int,  \
                                  int);                                                                       \
  template Mat<double> predict_log<S>(const Network<S>&, const ParameterStore<S>&,                            \
                                      std::span<const EncodedSample>, int);                                   \
  template std::vector<double> predict<S>(const Network<S>&, const ParameterStore<S>&, const EncodedSample&);

GAPNET_INSTANTIATE_TRAIN(float)
GAPNET_INSTANTIATE_TRAIN(double)

}  // namespace gapnet::nn

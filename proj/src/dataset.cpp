#include "gapnet/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "gapnet/errors.hpp"

namespace gapnet {

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Fcnn:
      return "fcnn";
    case EncoderKind::Lstm:
      return "lstm";
    case EncoderKind::ConvLstm1D:
      return "convlstm1d";
    case EncoderKind::ConvLstm2D:
      return "convlstm2d";
  }
  return "unknown";
}

EncoderKind encoder_from_string(std::string_view name) {
  if (name == "fcnn") return EncoderKind::Fcnn;
  if (name == "lstm") return EncoderKind::Lstm;
  if (name == "convlstm1d") return EncoderKind::ConvLstm1D;
  if (name == "convlstm2d") return EncoderKind::ConvLstm2D;
  throw InvalidArgument("unknown encoder '" + std::string(name) + "'");
}

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train:
      return "train";
    case SplitTag::Validation:
      return "validation";
    case SplitTag::Test:
      return "test";
  }
  return "unknown";
}

SplitTag split_from_string(std::string_view name) {
  if (name == "train") return SplitTag::Train;
  if (name == "validation") return SplitTag::Validation;
  if (name == "test") return SplitTag::Test;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

namespace {

void check_trajectory(const Sample& sample) {
  const auto& t = sample.trajectory;
  if (t.gaps.empty() || t.lambdas.size() != t.gaps.size() || t.log_gaps.size() != t.gaps.size()) {
    throw ShapeError("sample " + std::to_string(sample.id) + ": trajectory length mismatch");
  }
}

void require_logical(const Sample& sample, const char* encoder) {
  const auto family = sample.instance.family;
  if (family != Family::NearestNeighbor1D && family != Family::AllToAll) {
    throw InvalidArgument(std::string(encoder) + " encoder expects a chain or all-to-all instance");
  }
}

}  // namespace

EncodedSample encode_fcnn(const Sample& sample) {
  require_logical(sample, "fcnn");
  check_trajectory(sample);
  EncodedSample out;
  out.kind = EncoderKind::Fcnn;
  const auto flat = parameter_vector(sample.instance);
  out.input = Tensor({static_cast<int>(flat.size())});
  out.input.data = flat;
  out.target = sample.trajectory.log_gaps;
  return out;
}

EncodedSample encode_lstm(const Sample& sample) {
  require_logical(sample, "lstm");
  check_trajectory(sample);
  EncodedSample out;
  out.kind = EncoderKind::Lstm;
  const auto flat = parameter_vector(sample.instance);
  const auto& lambdas = sample.trajectory.lambdas;
  out.input = Tensor({static_cast<int>(lambdas.size()), static_cast<int>(flat.size())});
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    for (std::size_t p = 0; p < flat.size(); ++p) out.input.at(k, p) = lambdas[k] * flat[p];
  }
  out.target = sample.trajectory.log_gaps;
  return out;
}

EncodedSample encode_convlstm1d(const Sample& sample, int width, int offset) {
  const auto& instance = sample.instance;
  if (instance.family != Family::NearestNeighbor1D) {
    throw InvalidArgument("convlstm1d encoder expects a nearest-neighbour chain");
  }
  check_trajectory(sample);
  const int m = instance.size;
  if (m > width) {
    throw SizeError("chain of " + std::to_string(m) + " sites does not fit padded width " + std::to_string(width));
  }
  if (offset < 0 || offset > width - m) throw InvalidArgument("placement offset out of range");

  const auto& lambdas = sample.trajectory.lambdas;
  const auto steps = lambdas.size();
  EncodedSample out;
  out.kind = EncoderKind::ConvLstm1D;
  out.input = Tensor({static_cast<int>(steps), width, 4});
  for (std::size_t k = 0; k < steps; ++k) {
    const double lambda = lambdas[k];
    for (int i = 0; i < m; ++i) {
      const std::size_t site = static_cast<std::size_t>(offset + i);
      const double field = instance.fields.empty() ? 0.0 : instance.fields[i];
      const double left = i > 0 ? instance.couplings[i - 1].value : 0.0;
      const double right = i + 1 < m ? instance.couplings[i].value : 0.0;
      out.input.at(k, site, 0) = lambda * field;
      out.input.at(k, site, 1) = lambda * left;
      out.input.at(k, site, 2) = lambda * right;
      out.input.at(k, site, 3) = 1.0;
    }
  }
  out.target = sample.trajectory.log_gaps;
  return out;
}

EncodedSample encode_convlstm2d(const Sample& sample, int pad_height, int pad_width, int row_offset,
                                int col_offset) {
  const auto& instance = sample.instance;
  if (instance.family != Family::LhzPhysical) {
    throw InvalidArgument("convlstm2d encoder expects an LHZ instance");
  }
  check_trajectory(sample);
  const int extent = lhz_grid_extent(instance);
  if (extent > pad_height || extent > pad_width) {
    throw SizeError("LHZ square of extent " + std::to_string(extent) + " does not fit a " +
                    std::to_string(pad_height) + "x" + std::to_string(pad_width) + " grid");
  }
  if (row_offset < 0 || row_offset > pad_height - extent || col_offset < 0 || col_offset > pad_width - extent) {
    throw InvalidArgument("placement offset out of range");
  }

  const auto& lambdas = sample.trajectory.lambdas;
  const auto steps = lambdas.size();
  EncodedSample out;
  out.kind = EncoderKind::ConvLstm2D;
  out.input = Tensor({static_cast<int>(steps), pad_height, pad_width, 2});
  for (std::size_t k = 0; k < steps; ++k) {
    for (const auto& qubit : instance.couplings) {
      const auto [row, col] = lhz_grid_position(qubit.i, qubit.j);
      const auto r = static_cast<std::size_t>(row + row_offset);
      const auto c = static_cast<std::size_t>(col + col_offset);
      out.input.at(k, r, c, 0) = lambdas[k] * qubit.value;
      out.input.at(k, r, c, 1) = 1.0;
    }
  }
  out.target = sample.trajectory.log_gaps;
  return out;
}

int draw_offset(Rng& rng, int occupied, int width) {
  if (occupied > width) throw SizeError("occupied block larger than padded width");
  return static_cast<int>(rng.below(static_cast<std::uint64_t>(width - occupied + 1)));
}

EncodedSample encode(const Sample& sample, const EncoderConfig& config, Rng& placement) {
  switch (config.kind) {
    case EncoderKind::Fcnn:
      return encode_fcnn(sample);
    case EncoderKind::Lstm:
      return encode_lstm(sample);
    case EncoderKind::ConvLstm1D: {
      const int offset = draw_offset(placement, sample.instance.size, config.width);
      return encode_convlstm1d(sample, config.width, offset);
    }
    case EncoderKind::ConvLstm2D: {
      const int extent = lhz_grid_extent(sample.instance);
      const int row = draw_offset(placement, extent, config.pad_height);
      const int col = draw_offset(placement, extent, config.pad_width);
      return encode_convlstm2d(sample, config.pad_height, config.pad_width, row, col);
    }
  }
  throw InvalidArgument("unknown encoder");
}

EncodedSample encode_fixed(const Sample& sample, const EncoderConfig& config) {
  Rng placement(sample.placement_seed, stream_tag::kPlacement);
  return encode(sample, config, placement);
}

EncoderConfig minimal_encoder(EncoderKind kind, Family /*family*/, const std::vector<int>& sizes) {
  EncoderConfig config;
  config.kind = kind;
  if (sizes.empty()) return config;
  const int largest = *std::max_element(sizes.begin(), sizes.end());
  if (kind == EncoderKind::ConvLstm1D) config.width = largest;
  if (kind == EncoderKind::ConvLstm2D) {
    // With the auxiliary field spin the LHZ square of M logical spins has extent M.
    config.pad_height = largest;
    config.pad_width = largest;
  }
  return config;
}

SplitCounts split_dataset(std::vector<Sample>& samples, const SplitFractions& fractions, std::uint64_t seed) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (fractions.train < 0.0 || fractions.validation < 0.0 || fractions.test < 0.0 || std::abs(sum - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must be non-negative and sum to 1");
  }
  const std::size_t n = samples.size();
  SplitCounts counts;
  counts.train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fractions.train * n)));
  counts.validation =
      std::min<std::size_t>(n - counts.train, static_cast<std::size_t>(std::llround(fractions.validation * n)));
  counts.test = n - counts.train - counts.validation;
  if ((fractions.train > 0.0 && counts.train == 0) || (fractions.validation > 0.0 && counts.validation == 0) ||
      (fractions.test > 0.0 && counts.test == 0)) {
    throw InvalidArgument("split of " + std::to_string(n) + " samples leaves a requested split empty");
  }
  if (fractions.test == 0.0 && counts.test > 0) {
    (fractions.validation > 0.0 ? counts.validation : counts.train) += counts.test;
    counts.test = 0;
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed, stream_tag::kSplit);
  rng.shuffle(order);
  for (std::size_t k = 0; k < n; ++k) {
    SplitTag tag = SplitTag::Test;
    if (k < counts.train) {
      tag = SplitTag::Train;
    } else if (k < counts.train + counts.validation) {
      tag = SplitTag::Validation;
    }
    samples[order[k]].split = tag;
  }
  return counts;
}

SplitCounts count_splits(const std::vector<Sample>& samples) {
  SplitCounts counts;
  for (const auto& s : samples) {
    switch (s.split) {
      case SplitTag::Train:
        ++counts.train;
        break;
      case SplitTag::Validation:
        ++counts.validation;
        break;
      case SplitTag::Test:
        ++counts.test;
        break;
    }
  }
  return counts;
}

}  // namespace gapnet

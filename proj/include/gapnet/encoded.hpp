#pragma once

#include <cstddef>
#include <numeric>
#include <string_view>
#include <utility>
#include <vector>

namespace gapnet {

// Dense row-major array of doubles.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> extents)
      : shape(std::move(extents)), data(element_count(shape), 0.0) {}

  static std::size_t element_count(const std::vector<int>& extents) {
    return std::accumulate(extents.begin(), extents.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  }
  std::size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }

  double& at(std::size_t i0, std::size_t i1) { return data[i0 * shape[1] + i1]; }
  double at(std::size_t i0, std::size_t i1) const { return data[i0 * shape[1] + i1]; }
  double& at(std::size_t i0, std::size_t i1, std::size_t i2) {
    return data[(i0 * shape[1] + i1) * shape[2] + i2];
  }
  double at(std::size_t i0, std::size_t i1, std::size_t i2) const {
    return data[(i0 * shape[1] + i1) * shape[2] + i2];
  }
  double& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
    return data[((i0 * shape[1] + i1) * shape[2] + i2) * shape[3] + i3];
  }
  double at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
    return data[((i0 * shape[1] + i1) * shape[2] + i2) * shape[3] + i3];
  }

  bool operator==(const Tensor&) const = default;
};

enum class EncoderKind { Fcnn, Lstm, ConvLstm1D, ConvLstm2D };

std::string_view to_string(EncoderKind kind);
EncoderKind encoder_from_string(std::string_view name);

// Network input layouts:
//   Fcnn        [P]               bare coefficients
//   Lstm        [N_t, P]          row k = lambda_k * coefficients
//   ConvLstm1D  [N_t, width, 4]   per site (K_i, J_left, J_right, mask)
//   ConvLstm2D  [N_t, H, W, 2]    per cell (J_k, mask) on the LHZ square
// The target is always log(1 + g) on the sweep grid, length N_t.
struct EncodedSample {
  EncoderKind kind = EncoderKind::Fcnn;
  Tensor input;
  std::vector<double> target;
};

// Geometry an encoder needs beyond the sample itself.
struct EncoderConfig {
  EncoderKind kind = EncoderKind::Fcnn;
  int width = 0;  // ConvLstm1D padded chain length M_E
  int pad_height = 0;  // ConvLstm2D grid
  int pad_width = 0;

  bool operator==(const EncoderConfig&) const = default;
};

}  // namespace gapnet

#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gapnet::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

enum class Activation { Linear, Relu, Sigmoid, Tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

template <class S>
void activate(Activation a, Mat<S>& x);

// Multiplies dy in place by act'(.), expressed through the activation output y.
template <class S>
void activation_backward(Activation a, const Mat<S>& y, Mat<S>& dy);

// y = act(x W + b), one row per sample (or per time step / grid site).
template <class S>
void dense_forward(const Mat<S>& x, const Mat<S>& w, const RowVec<S>& b, Activation a, Mat<S>& y);

// Accumulates into dw and db; overwrites dx. `dy` is the gradient w.r.t. y.
template <class S>
void dense_backward(const Mat<S>& x, const Mat<S>& w, const Mat<S>& y, Activation a, Mat<S> dy, Mat<S>& dx,
                    Mat<S>& dw, RowVec<S>& db);

// Gate order in every pre-activation block of width 4F: forget, input,
// candidate, output.
template <class S>
struct CellStep {
  Mat<S> gates;  // activated gates, R x 4F
  Mat<S> c;  // cell state C_t
  Mat<S> tanh_c;
  Mat<S> h;  // hidden state h_t
};

// Elementwise LSTM update from pre-activations z (R x 4F) and C_prev (R x F).
template <class S>
void cell_forward(const Mat<S>& z, const Mat<S>& c_prev, CellStep<S>& out);

// Given dh (gradient into h_t) and dc (gradient into C_t from later steps),
// writes dz and replaces dc by the gradient w.r.t. C_prev.
template <class S>
void cell_backward(const CellStep<S>& step, const Mat<S>& c_prev, const Mat<S>& dh, Mat<S>& dc, Mat<S>& dz);

// One LSTM step. w is (F + Cin) x 4F acting on the concatenation [h_prev, x].
template <class S>
void lstm_cell(const Mat<S>& x, const Mat<S>& h_prev, const Mat<S>& c_prev, const Mat<S>& w, const RowVec<S>& b,
               CellStep<S>& out);

// Spatial layout of one frame: rows ordered (sample, y, x), channels as columns.
struct ConvGeometry {
  int batch = 1;
  int height = 1;
  int width = 1;
  int kernel_h = 1;
  int kernel_w = 1;

  int rows() const { return batch * height * width; }
  int taps() const { return kernel_h * kernel_w; }
  // "Same" padding: (k - 1) / 2 cells before, the rest after. A 2-wide kernel
  // therefore pads nothing on the top/left and one cell on the bottom/right.
  int pad_top() const { return (kernel_h - 1) / 2; }
  int pad_left() const { return (kernel_w - 1) / 2; }
};

// Patch matrix: row r holds the kernel window around site r, taps ordered
// (dy, dx) then channel. Out-of-grid cells read as zero.
template <class S>
void im2col(const Mat<S>& frame, const ConvGeometry& g, Mat<S>& cols);

// Adjoint of im2col: scatters patch gradients back onto the frame (accumulates).
template <class S>
void col2im_add(const Mat<S>& cols, const ConvGeometry& g, Mat<S>& frame);

// One ConvLSTM step: z = conv(x; wx) + conv(h_prev; wh) + b, then the LSTM
// update at every site. wx is (taps*Cin) x 4F, wh is (taps*F) x 4F.
template <class S>
void convlstm_cell(const Mat<S>& x, const Mat<S>& h_prev, const Mat<S>& c_prev, const Mat<S>& wx,
                   const Mat<S>& wh, const RowVec<S>& b, const ConvGeometry& g, CellStep<S>& out);

// Max over `sites` consecutive rows per group; argmax records the winning row.
template <class S>
void global_max_pool(const Mat<S>& x, int sites, Mat<S>& y, std::vector<int>& argmax);

template <class S>
void global_max_pool_backward(const Mat<S>& dy, int sites, const std::vector<int>& argmax, Mat<S>& dx);

// Mean over every entry of (pred - target)^2; grad = 2 (pred - target) / count.
template <class S>
S mse_loss(const Mat<S>& pred, const Mat<S>& target, Mat<S>* grad = nullptr);

}  // namespace gapnet::nn

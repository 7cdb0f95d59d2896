#include "gapnet/nn/layers.hpp"

#include <cmath>
#include <string>

#include "gapnet/errors.hpp"

namespace gapnet::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Linear:
      return "linear";
    case Activation::Relu:
      return "relu";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Tanh:
      return "tanh";
  }
  return "linear";
}

Activation activation_from_string(std::string_view name) {
  if (name == "linear") return Activation::Linear;
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

namespace {

template <class S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

template <class M>
void require_shape(const M& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

template <class S>
void activate(Activation a, Mat<S>& x) {
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      x = x.cwiseMax(S(0));
      break;
    case Activation::Sigmoid:
      x = x.unaryExpr([](S v) { return sigmoid(v); });
      break;
    case Activation::Tanh:
      x = x.array().tanh().matrix();
      break;
  }
}

template <class S>
void activation_backward(Activation a, const Mat<S>& y, Mat<S>& dy) {
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      dy = (y.array() > S(0)).select(dy, S(0));
      break;
    case Activation::Sigmoid:
      dy.array() *= y.array() * (S(1) - y.array());
      break;
    case Activation::Tanh:
      dy.array() *= S(1) - y.array().square();
      break;
  }
}

template <class S>
void dense_forward(const Mat<S>& x, const Mat<S>& w, const RowVec<S>& b, Activation a, Mat<S>& y) {
  if (x.cols() != w.rows() || b.cols() != w.cols()) {
    throw ShapeError("dense: input width " + std::to_string(x.cols()) + " does not match weights " +
                     std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
  y.noalias() = x * w;
  y.rowwise() += b;
  activate(a, y);
}

template <class S>
void dense_backward(const Mat<S>& x, const Mat<S>& w, const Mat<S>& y, Activation a, Mat<S> dy, Mat<S>& dx,
                    Mat<S>& dw, RowVec<S>& db) {
  require_shape(dy, y.rows(), y.cols(), "dense gradient");
  activation_backward(a, y, dy);
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();
  dx.noalias() = dy * w.transpose();
}

template <class S>
void cell_forward(const Mat<S>& z, const Mat<S>& c_prev, CellStep<S>& out) {
  const Eigen::Index f = c_prev.cols();
  require_shape(z, c_prev.rows(), 4 * f, "lstm pre-activation");
  out.gates.resize(z.rows(), z.cols());
  auto g = out.gates.array();
  const auto za = z.array();
  g.leftCols(2 * f) = za.leftCols(2 * f).unaryExpr([](S v) { return sigmoid(v); });
  g.middleCols(2 * f, f) = za.middleCols(2 * f, f).tanh();
  g.rightCols(f) = za.rightCols(f).unaryExpr([](S v) { return sigmoid(v); });
  out.c = (g.leftCols(f) * c_prev.array() + g.middleCols(f, f) * g.middleCols(2 * f, f)).matrix();
  out.tanh_c = out.c.array().tanh().matrix();
  out.h = (g.rightCols(f) * out.tanh_c.array()).matrix();
}

template <class S>
void cell_backward(const CellStep<S>& step, const Mat<S>& c_prev, const Mat<S>& dh, Mat<S>& dc, Mat<S>& dz) {
  const Eigen::Index f = c_prev.cols();
  const auto g = step.gates.array();
  const auto fg = g.leftCols(f);
  const auto ig = g.middleCols(f, f);
  const auto cg = g.middleCols(2 * f, f);
  const auto og = g.rightCols(f);
  const auto tc = step.tanh_c.array();

  dz.resize(dh.rows(), 4 * f);
  auto d = dz.array();
  d.rightCols(f) = dh.array() * tc * og * (S(1) - og);
  dc.array() += dh.array() * og * (S(1) - tc.square());
  const auto dca = dc.array();
  d.leftCols(f) = dca * c_prev.array() * fg * (S(1) - fg);
  d.middleCols(f, f) = dca * cg * ig * (S(1) - ig);
  d.middleCols(2 * f, f) = dca * ig * (S(1) - cg.square());
  dc.array() *= fg;
}

template <class S>
void lstm_cell(const Mat<S>& x, const Mat<S>& h_prev, const Mat<S>& c_prev, const Mat<S>& w, const RowVec<S>& b,
               CellStep<S>& out) {
  const Eigen::Index f = h_prev.cols();
  require_shape(c_prev, h_prev.rows(), f, "lstm cell state");
  require_shape(w, f + x.cols(), 4 * f, "lstm weights");
  require_shape(b, 1, 4 * f, "lstm bias");
  if (x.rows() != h_prev.rows()) throw ShapeError("lstm: input and hidden state disagree on batch size");
  Mat<S> z = h_prev * w.topRows(f);
  z.noalias() += x * w.bottomRows(x.cols());
  z.rowwise() += b;
  cell_forward(z, c_prev, out);
}

template <class S>
void im2col(const Mat<S>& frame, const ConvGeometry& g, Mat<S>& cols) {
  const Eigen::Index channels = frame.cols();
  if (frame.rows() != g.rows()) throw ShapeError("convolution: frame rows do not match the grid");
  cols.setZero(g.rows(), g.taps() * channels);
  const int top = g.pad_top();
  const int left = g.pad_left();
  for (int b = 0; b < g.batch; ++b) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        const int row = (b * g.height + y) * g.width + x;
        for (int dy = 0; dy < g.kernel_h; ++dy) {
          const int sy = y - top + dy;
          if (sy < 0 || sy >= g.height) continue;
          for (int dx = 0; dx < g.kernel_w; ++dx) {
            const int sx = x - left + dx;
            if (sx < 0 || sx >= g.width) continue;
            const int src = (b * g.height + sy) * g.width + sx;
            cols.row(row).segment((dy * g.kernel_w + dx) * channels, channels) = frame.row(src);
          }
        }
      }
    }
  }
}

template <class S>
void col2im_add(const Mat<S>& cols, const ConvGeometry& g, Mat<S>& frame) {
  const Eigen::Index channels = frame.cols();
  if (cols.rows() != g.rows() || cols.cols() != g.taps() * channels || frame.rows() != g.rows()) {
    throw ShapeError("col2im: patch matrix does not match the grid");
  }
  const int top = g.pad_top();
  const int left = g.pad_left();
  for (int b = 0; b < g.batch; ++b) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        const int row = (b * g.height + y) * g.width + x;
        for (int dy = 0; dy < g.kernel_h; ++dy) {
          const int sy = y - top + dy;
          if (sy < 0 || sy >= g.height) continue;
          for (int dx = 0; dx < g.kernel_w; ++dx) {
            const int sx = x - left + dx;
            if (sx < 0 || sx >= g.width) continue;
            const int src = (b * g.height + sy) * g.width + sx;
            frame.row(src) += cols.row(row).segment((dy * g.kernel_w + dx) * channels, channels);
          }
        }
      }
    }
  }
}

template <class S>
void convlstm_cell(const Mat<S>& x, const Mat<S>& h_prev, const Mat<S>& c_prev, const Mat<S>& wx,
                   const Mat<S>& wh, const RowVec<S>& b, const ConvGeometry& g, CellStep<S>& out) {
  const Eigen::Index f = h_prev.cols();
  require_shape(h_prev, g.rows(), f, "convlstm hidden state");
  require_shape(c_prev, g.rows(), f, "convlstm cell state");
  require_shape(wx, g.taps() * x.cols(), 4 * f, "convlstm input kernel");
  require_shape(wh, g.taps() * f, 4 * f, "convlstm recurrent kernel");
  require_shape(b, 1, 4 * f, "convlstm bias");
  Mat<S> cols;
  im2col(x, g, cols);
  Mat<S> z = cols * wx;
  im2col(h_prev, g, cols);
  z.noalias() += cols * wh;
  z.rowwise() += b;
  cell_forward(z, c_prev, out);
}

template <class S>
void global_max_pool(const Mat<S>& x, int sites, Mat<S>& y, std::vector<int>& argmax) {
  if (sites <= 0 || x.rows() == 0) throw ShapeError("global max pooling needs a non-empty grid");
  if (x.rows() % sites != 0) throw ShapeError("global max pooling: rows are not a multiple of the grid size");
  const Eigen::Index groups = x.rows() / sites;
  const Eigen::Index channels = x.cols();
  y.resize(groups, channels);
  argmax.assign(static_cast<std::size_t>(groups * channels), 0);
  for (Eigen::Index gi = 0; gi < groups; ++gi) {
    const Eigen::Index base = gi * sites;
    for (Eigen::Index c = 0; c < channels; ++c) {
      Eigen::Index best = base;
      S value = x(base, c);
      for (Eigen::Index r = base + 1; r < base + sites; ++r) {
        if (x(r, c) > value) {
          value = x(r, c);
          best = r;
        }
      }
      y(gi, c) = value;
      argmax[static_cast<std::size_t>(gi * channels + c)] = static_cast<int>(best);
    }
  }
}

template <class S>
void global_max_pool_backward(const Mat<S>& dy, int sites, const std::vector<int>& argmax, Mat<S>& dx) {
  const Eigen::Index channels = dy.cols();
  dx.setZero(dy.rows() * sites, channels);
  for (Eigen::Index gi = 0; gi < dy.rows(); ++gi) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      dx(argmax[static_cast<std::size_t>(gi * channels + c)], c) += dy(gi, c);
    }
  }
}

template <class S>
S mse_loss(const Mat<S>& pred, const Mat<S>& target, Mat<S>* grad) {
  require_shape(target, pred.rows(), pred.cols(), "mse target");
  if (pred.size() == 0) throw ShapeError("mse of an empty batch");
  const S count = static_cast<S>(pred.size());
  const Mat<S> diff = pred - target;
  if (grad != nullptr) *grad = (S(2) / count) * diff;
  return diff.squaredNorm() / count;
}

#define GAPNET_INSTANTIATE_LAYERS(S)                                                                           \
  template void activate<S>(Activation, Mat<S>&);                                                              \
  template void activation_backward<S>(Activation, const Mat<S>&, Mat<S>&);                                    \
  template void dense_forward<S>(const Mat<S>&, const Mat<S>&, const RowVec<S>&, Activation, Mat<S>&);         \
  template void dense_backward<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&, Activation, Mat<S>, Mat<S>&,    \
                                  Mat<S>&, RowVec<S>&);                                                        \
  template void cell_forward<S>(const Mat<S>&, const Mat<S>&, CellStep<S>&);                                   \
  template void cell_backward<S>(const CellStep<S>&, const Mat<S>&, const Mat<S>&, Mat<S>&, Mat<S>&);          \
  template void lstm_cell<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&, const Mat<S>&, const RowVec<S>&,     \
                             CellStep<S>&);                                                                    \
  template void im2col<S>(const Mat<S>&, const ConvGeometry&, Mat<S>&);                                        \
  template void col2im_add<S>(const Mat<S>&, const ConvGeometry&, Mat<S>&);                                    \
  template void convlstm_cell<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&, const Mat<S>&, const Mat<S>&,    \
                                 const RowVec<S>&, const ConvGeometry&, CellStep<S>&);                         \
  template void global_max_pool<S>(const Mat<S>&, int, Mat<S>&, std::vector<int>&);                            \
  template void global_max_pool_backward<S>(const Mat<S>&, int, const std::vector<int>&, Mat<S>&);             \
  template S mse_loss<S>(const Mat<S>&, const Mat<S>&, Mat<S>*);

GAPNET_INSTANTIATE_LAYERS(float)
GAPNET_INSTANTIATE_LAYERS(double)

}  // namespace gapnet::nn

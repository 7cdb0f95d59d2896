#include <cmath>

#include "doctest.h"
#include "gapnet/errors.hpp"
#include "gapnet/nn/layers.hpp"
#include "oracles.hpp"

using namespace gapnet;
using namespace gapnet::nn;
using M = Mat<double>;
using V = RowVec<double>;

namespace {

M random(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  M m(r, c);
  oracle::fill(m, rng, scale);
  return m;
}

// Scalar reference of one LSTM step, written gate by gate.
struct ScalarCell {
  double c;
  double h;
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ScalarCell scalar_lstm(double x, double h_prev, double c_prev, const double (&wx)[4], const double (&wh)[4],
                       const double (&b)[4]) {
  const double f = sigmoid(wx[0] * x + wh[0] * h_prev + b[0]);
  const double i = sigmoid(wx[1] * x + wh[1] * h_prev + b[1]);
  const double g = std::tanh(wx[2] * x + wh[2] * h_prev + b[2]);
  const double o = sigmoid(wx[3] * x + wh[3] * h_prev + b[3]);
  const double c = f * c_prev + i * g;
  return {c, o * std::tanh(c)};
}

}  // namespace

TEST_CASE("dense: identity and activations") {
  Rng rng(1);
  const M x = random(3, 4, rng);
  M y;
  dense_forward<double>(x, M::Identity(4, 4), V::Zero(4), Activation::Linear, y);
  CHECK((y - x).norm() == 0.0);

  M r(1, 2);
  r << -1.0, 2.0;
  activate(Activation::Relu, r);
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 2.0);
  CHECK(activation_from_string("tanh") == Activation::Tanh);
  CHECK_THROWS(activation_from_string("gelu"));
}

TEST_CASE("dense: gradients against central differences") {
  Rng rng(2);
  for (Activation a : {Activation::Linear, Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
    M x = random(5, 3, rng);
    M w = random(3, 4, rng);
    M bm = random(1, 4, rng);
    const M target = random(5, 4, rng);
    auto loss = [&] {
      M y;
      dense_forward<double>(x, w, V(bm.row(0)), a, y);
      return mse_loss<double>(y, target);
    };
    M y;
    dense_forward<double>(x, w, V(bm.row(0)), a, y);
    M dy;
    mse_loss<double>(y, target, &dy);
    M dx;
    M dw = M::Zero(3, 4);
    V db = V::Zero(4);
    dense_backward<double>(x, w, y, a, dy, dx, dw, db);
    const M dbm = db;
    const auto check = oracle::compare(loss, {x, w, bm}, {dx, dw, dbm});
    CHECK(check.worst_relative < 1e-6);
  }
}

TEST_CASE("lstm cell: zero weights keep zero state") {
  Rng rng(3);
  const M x = random(2, 3, rng);
  CellStep<double> step;
  lstm_cell<double>(x, M::Zero(2, 4), M::Zero(2, 4), M::Zero(7, 16), V::Zero(16), step);
  CHECK(step.c.norm() == 0.0);
  CHECK(step.h.norm() == 0.0);
}

TEST_CASE("lstm cell: saturated forget gate gives perfect memory") {
  Rng rng(4);
  const M x = random(2, 3, rng);
  const M c_prev = random(2, 4, rng);
  V b = V::Zero(16);
  b.segment(0, 4).setConstant(50.0);  // forget gate
  b.segment(4, 4).setConstant(-50.0);  // input gate closed
  CellStep<double> step;
  lstm_cell<double>(x, M::Zero(2, 4), c_prev, M::Zero(7, 16), b, step);
  CHECK((step.c - c_prev).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lstm cell: matches the gate-by-gate scalar reference") {
  const double wx[4] = {0.3, -0.7, 0.5, 0.2};
  const double wh[4] = {-0.4, 0.1, 0.9, -0.6};
  const double b[4] = {1.0, 0.2, -0.3, 0.05};
  M w(2, 4);
  V bias(4);
  for (int g = 0; g < 4; ++g) {
    w(0, g) = wh[g];  // hidden rows on top
    w(1, g) = wx[g];
    bias(g) = b[g];
  }
  double h = 0.25;
  double c = -0.4;
  M hm = M::Constant(1, 1, h);
  M cm = M::Constant(1, 1, c);
  for (double x : {0.5, -1.0, 2.0, 0.0, 0.7}) {
    const ScalarCell ref = scalar_lstm(x, h, c, wx, wh, b);
    CellStep<double> step;
    lstm_cell<double>(M::Constant(1, 1, x), hm, cm, w, bias, step);
    CHECK(step.c(0, 0) == doctest::Approx(ref.c).epsilon(1e-14));
    CHECK(step.h(0, 0) == doctest::Approx(ref.h).epsilon(1e-14));
    h = ref.h;
    c = ref.c;
    hm = step.h;
    cm = step.c;
  }
}

TEST_CASE("convlstm cell: centre-only kernel reduces to the LSTM cell at every site") {
  Rng rng(5);
  const int cin = 3;
  const int f = 2;
  ConvGeometry g{2, 1, 5, 1, 3};
  const M x = random(g.rows(), cin, rng);
  const M h = random(g.rows(), f, rng);
  const M c = random(g.rows(), f, rng);
  const M w = random(f + cin, 4 * f, rng);
  const V b = random(1, 4 * f, rng);
  M wx = M::Zero(3 * cin, 4 * f);
  M wh = M::Zero(3 * f, 4 * f);
  wx.middleRows(cin, cin) = w.bottomRows(cin);  // tap dx = 1 is the centre
  wh.middleRows(f, f) = w.topRows(f);
  CellStep<double> conv;
  CellStep<double> plain;
  convlstm_cell<double>(x, h, c, wx, wh, b, g, conv);
  lstm_cell<double>(x, h, c, w, b, plain);
  CHECK((conv.h - plain.h).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((conv.c - plain.c).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("convlstm cell: translation covariance in the interior") {
  Rng rng(6);
  const int cin = 2;
  const int f = 3;
  ConvGeometry g{1, 1, 10, 1, 3};
  M x = M::Zero(10, cin);
  M h = M::Zero(10, f);
  M c = M::Zero(10, f);
  x.middleRows(2, 4) = random(4, cin, rng);
  h.middleRows(2, 4) = random(4, f, rng);
  c.middleRows(2, 4) = random(4, f, rng);
  M xs = M::Zero(10, cin), hs = M::Zero(10, f), cs = M::Zero(10, f);
  xs.middleRows(4, 4) = x.middleRows(2, 4);
  hs.middleRows(4, 4) = h.middleRows(2, 4);
  cs.middleRows(4, 4) = c.middleRows(2, 4);
  const M wx = random(3 * cin, 4 * f, rng);
  const M wh = random(3 * f, 4 * f, rng);
  const V b = random(1, 4 * f, rng);
  CellStep<double> a;
  CellStep<double> s;
  convlstm_cell<double>(x, h, c, wx, wh, b, g, a);
  convlstm_cell<double>(xs, hs, cs, wx, wh, b, g, s);
  for (int site = 1; site < 8; ++site) {
    CHECK((a.h.row(site) - s.h.row(site + 2)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("convlstm cell: 2x2 kernel pads bottom and right") {
  ConvGeometry g{1, 2, 2, 2, 2};
  CHECK(g.pad_top() == 0);
  CHECK(g.pad_left() == 0);
  M frame(4, 1);
  frame << 1, 2, 3, 4;
  M cols;
  im2col<double>(frame, g, cols);
  // Site (0,0) sees (0,0) (0,1) (1,0) (1,1); site (1,1) sees itself then zeros.
  CHECK(cols.row(0) == (M(1, 4) << 1, 2, 3, 4).finished());
  CHECK(cols.row(3) == (M(1, 4) << 4, 0, 0, 0).finished());
}

TEST_CASE("im2col and col2im_add are adjoint") {
  Rng rng(7);
  ConvGeometry g{2, 3, 4, 2, 3};
  const M frame = random(g.rows(), 2, rng);
  const M other = random(g.rows(), g.taps() * 2, rng);
  M cols;
  im2col<double>(frame, g, cols);
  M back = M::Zero(g.rows(), 2);
  col2im_add<double>(other, g, back);
  CHECK(std::abs(cols.cwiseProduct(other).sum() - frame.cwiseProduct(back).sum()) < 1e-12);
}

TEST_CASE("global max pooling") {
  Rng rng(8);
  const M single = random(3, 2, rng);
  M y;
  std::vector<int> arg;
  global_max_pool<double>(single, 1, y, arg);
  CHECK(y == single);

  M x = random(8, 3, rng);
  global_max_pool<double>(x, 4, y, arg);
  CHECK(y.rows() == 2);
  for (int gi = 0; gi < 2; ++gi) {
    for (int c = 0; c < 3; ++c) CHECK(y(gi, c) == x.middleRows(4 * gi, 4).col(c).maxCoeff());
  }
  const M target = random(2, 3, rng);
  M dy;
  mse_loss<double>(y, target, &dy);
  M dx = M::Zero(8, 3);
  global_max_pool_backward<double>(dy, 4, arg, dx);
  auto loss = [&] {
    M out;
    std::vector<int> a;
    global_max_pool<double>(x, 4, out, a);
    return mse_loss<double>(out, target);
  };
  CHECK(oracle::compare(loss, {x}, {dx}).worst_relative < 1e-8);
  CHECK_THROWS_AS(global_max_pool<double>(x, 3, y, arg), ShapeError);
}

TEST_CASE("mse loss") {
  Rng rng(9);
  M p = random(4, 5, rng);
  CHECK(mse_loss<double>(p, p) == 0.0);
  CHECK(mse_loss<double>(M(p.array() + 1.0), p) == doctest::Approx(1.0).epsilon(1e-15));
  const M t = random(4, 5, rng);
  CHECK(mse_loss<double>(p, t) > 0.0);
  M grad;
  mse_loss<double>(p, t, &grad);
  auto loss = [&] { return mse_loss<double>(p, t); };
  CHECK(oracle::compare(loss, {p}, {grad}).worst_relative < 1e-8);
  CHECK_THROWS_AS(mse_loss<double>(M(0, 0), M(0, 0)), ShapeError);
  CHECK_THROWS_AS(mse_loss<double>(p, M(2, 2)), ShapeError);
}

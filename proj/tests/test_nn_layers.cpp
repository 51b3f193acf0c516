#include <gtest/gtest.h>

#include "hdrec/error.hpp"
#include "hdrec/nn/featnet.hpp"
#include "hdrec/nn/layers.hpp"
#include "hdrec/nn/loss.hpp"
#include "nn_check.hpp"

using namespace hdrec;
using namespace hdrec::nn;
using test::dot;
using test::expect_gradient;
using test::random_param;
using test::random_tensor;

namespace {

void check_conv(int cin, int cout, int k, int stride, int h, int w) {
  Tensor x = random_tensor(cin, h, w, 1);
  ParamArray wt = random_param({cout, cin, k, k}, 2), b = random_param({cout}, 3);
  const Tensor y0 = conv2d(x, wt, b, stride);
  const Tensor v = random_tensor(y0.channels, y0.height, y0.width, 4);
  ParamArray dw{wt.shape, std::vector<double>(wt.size(), 0.0)}, db{b.shape, std::vector<double>(b.size(), 0.0)};
  const Tensor dx = conv2d_backward(x, wt, stride, v, dw, db);
  auto f = [&] { return dot(conv2d(x, wt, b, stride).data, v.data); };
  const std::string tag = "conv k" + std::to_string(k) + " s" + std::to_string(stride);
  expect_gradient(x.data, dx.data, f, tag + " dx");
  expect_gradient(wt.values, dw.values, f, tag + " dw");
  expect_gradient(b.values, db.values, f, tag + " db");
}

}  // namespace

TEST(Conv2d, OutputShapes) {
  const Tensor x(3, 16, 12);
  EXPECT_TRUE(conv2d(x, random_param({5, 3, 3, 3}, 1), random_param({5}, 2)).same_shape(Tensor(5, 16, 12)));
  EXPECT_TRUE(conv2d(x, random_param({5, 3, 3, 3}, 1), random_param({5}, 2), 2).same_shape(Tensor(5, 8, 6)));
  EXPECT_TRUE(conv2d(x, random_param({2, 3, 1, 1}, 1), random_param({2}, 2)).same_shape(Tensor(2, 16, 12)));
}

TEST(Conv2d, MatchesDirectSum) {
  const Tensor x = random_tensor(2, 7, 6, 5);
  const ParamArray w = random_param({3, 2, 3, 3}, 6), b = random_param({3}, 7);
  for (int stride : {1, 2}) {
    const Tensor y = conv2d(x, w, b, stride);
    for (int o = 0; o < 3; ++o) {
      for (int oy = 0; oy < y.height; ++oy) {
        for (int ox = 0; ox < y.width; ++ox) {
          double acc = b.values[o];
          for (int c = 0; c < 2; ++c) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy * stride + ky - 1, ix = ox * stride + kx - 1;
                if (iy < 0 || iy >= 7 || ix < 0 || ix >= 6) continue;
                acc += w.values[((o * 2 + c) * 3 + ky) * 3 + kx] * x.at(c, iy, ix);
              }
            }
          }
          EXPECT_NEAR(y.at(o, oy, ox), acc, 1e-12);
        }
      }
    }
  }
}

TEST(Conv2d, GradientKernel3) { check_conv(3, 4, 3, 1, 7, 6); }
TEST(Conv2d, GradientKernel5) { check_conv(2, 3, 5, 1, 6, 6); }
TEST(Conv2d, GradientStrided) { check_conv(3, 4, 3, 2, 8, 6); }
TEST(Conv2d, GradientPointwise) { check_conv(4, 1, 1, 1, 5, 5); }

TEST(ConvTranspose, DoublesTheGrid) {
  const Tensor x = random_tensor(3, 4, 5, 8);
  const ParamArray w = random_param({3, 2, 2, 2}, 9), b = random_param({2}, 10);
  const Tensor y = conv_transpose2x(x, w, b);
  ASSERT_TRUE(y.same_shape(Tensor(2, 8, 10)));
  for (int o = 0; o < 2; ++o) {
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 10; ++j) {
        double acc = b.values[o];
        for (int c = 0; c < 3; ++c) acc += w.values[((c * 2 + o) * 2 + i % 2) * 2 + j % 2] * x.at(c, i / 2, j / 2);
        EXPECT_NEAR(y.at(o, i, j), acc, 1e-12);
      }
    }
  }
}

TEST(ConvTranspose, Gradient) {
  Tensor x = random_tensor(3, 4, 3, 11);
  ParamArray w = random_param({3, 2, 2, 2}, 12), b = random_param({2}, 13);
  const Tensor v = random_tensor(2, 8, 6, 14);
  ParamArray dw{w.shape, std::vector<double>(w.size(), 0.0)}, db{b.shape, std::vector<double>(b.size(), 0.0)};
  const Tensor dx = conv_transpose2x_backward(x, w, v, dw, db);
  auto f = [&] { return dot(conv_transpose2x(x, w, b).data, v.data); };
  expect_gradient(x.data, dx.data, f, "convT dx");
  expect_gradient(w.values, dw.values, f, "convT dw");
  expect_gradient(b.values, db.values, f, "convT db");
}

TEST(Activations, LeakyReluValuesAndGradient) {
  Tensor x(1, 1, 4);
  x.data = {-2.0, -0.5, 0.5, 3.0};
  EXPECT_EQ(leaky_relu(x).data, (std::vector<double>{-0.02, -0.005, 0.5, 3.0}));
  // keep samples away from the kink
  Tensor r = random_tensor(2, 5, 5, 15);
  for (double& v : r.data) v += v > 0 ? 0.1 : -0.1;
  const Tensor v = random_tensor(2, 5, 5, 16);
  const Tensor dx = leaky_relu_backward(r, v);
  expect_gradient(r.data, dx.data, [&] { return dot(leaky_relu(r).data, v.data); }, "leaky");
}

TEST(Activations, TanhGradient) {
  Tensor x = random_tensor(2, 4, 4, 17, -2.0, 2.0);
  const Tensor v = random_tensor(2, 4, 4, 18);
  const Tensor dx = tanh_backward(tanh_act(x), v);
  expect_gradient(x.data, dx.data, [&] { return dot(tanh_act(x).data, v.data); }, "tanh");
}

TEST(Pooling, AverageAndGradient) {
  Tensor x = random_tensor(2, 6, 4, 19);
  const Tensor y = avg_pool2(x);
  ASSERT_TRUE(y.same_shape(Tensor(2, 3, 2)));
  EXPECT_NEAR(y.at(1, 2, 1), 0.25 * (x.at(1, 4, 2) + x.at(1, 4, 3) + x.at(1, 5, 2) + x.at(1, 5, 3)), 1e-15);
  const Tensor v = random_tensor(2, 3, 2, 20);
  const Tensor dx = avg_pool2_backward(v, 6, 4);
  expect_gradient(x.data, dx.data, [&] { return dot(avg_pool2(x).data, v.data); }, "pool");
}

TEST(Concat, SplitInvertsConcat) {
  const Tensor a = random_tensor(2, 3, 3, 21), b = random_tensor(3, 3, 3, 22);
  const Tensor c = concat_channels(a, b);
  ASSERT_EQ(c.channels, 5);
  const auto [da, db] = split_channels(c, 2);
  EXPECT_EQ(da, a);
  EXPECT_EQ(db, b);
  EXPECT_THROW(concat_channels(a, Tensor(1, 4, 3)), ShapeError);
}

TEST(Residual, UnitGradientThroughSkipAndProjection) {
  // conv -> leaky -> conv plus a 1x1 projected skip, written out from the primitives
  Tensor x = random_tensor(2, 6, 6, 23);
  ParamArray w1 = random_param({3, 2, 3, 3}, 24), b1 = random_param({3}, 25);
  ParamArray w2 = random_param({3, 3, 3, 3}, 26), b2 = random_param({3}, 27);
  ParamArray wp = random_param({3, 2, 1, 1}, 28), bp = random_param({3}, 29);
  auto unit = [&] {
    Tensor y = conv2d(leaky_relu(conv2d(x, w1, b1)), w2, b2);
    add_inplace(y, conv2d(x, wp, bp));
    return y;
  };
  const Tensor v = random_tensor(3, 6, 6, 30);
  auto zeros = [](const ParamArray& p) { return ParamArray{p.shape, std::vector<double>(p.size(), 0.0)}; };
  ParamArray dw1 = zeros(w1), db1 = zeros(b1), dw2 = zeros(w2), db2 = zeros(b2), dwp = zeros(wp), dbp = zeros(bp);
  const Tensor h1 = conv2d(x, w1, b1), a1 = leaky_relu(h1);
  const Tensor da1 = conv2d_backward(a1, w2, 1, v, dw2, db2);
  Tensor dx = conv2d_backward(x, w1, 1, leaky_relu_backward(h1, da1), dw1, db1);
  add_inplace(dx, conv2d_backward(x, wp, 1, v, dwp, dbp));
  auto f = [&] { return dot(unit().data, v.data); };
  expect_gradient(x.data, dx.data, f, "unit dx");
  expect_gradient(w1.values, dw1.values, f, "unit w1");
  expect_gradient(w2.values, dw2.values, f, "unit w2");
  expect_gradient(wp.values, dwp.values, f, "unit proj");
}

TEST(L1Loss, Values) {
  const Tensor a = random_tensor(1, 8, 8, 31);
  EXPECT_EQ(l1_loss(a, a), 0.0);
  Tensor b = a;
  for (double& v : b.data) v += 0.25;
  EXPECT_NEAR(l1_loss(a, b), 0.25, 1e-15);
  const Tensor c = random_tensor(1, 8, 8, 32);
  double oracle = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) oracle += std::abs(c.data[i] - a.data[i]);
  EXPECT_NEAR(l1_loss(a, c), oracle / 64.0, 1e-12);
  EXPECT_THROW(l1_loss(a, Tensor(1, 8, 7)), ShapeError);
}

TEST(L1Loss, Gradient) {
  Tensor p = random_tensor(1, 6, 6, 33);
  const Tensor t = random_tensor(1, 6, 6, 34);
  expect_gradient(p.data, l1_gradient(p, t).data, [&] { return l1_loss(p, t); }, "l1");
}

TEST(PerceptualLoss, ValuesAndSymmetry) {
  const FeatureNet f = build_featnet(7);
  const Tensor a = random_tensor(1, 16, 16, 35, 0, 1), b = random_tensor(1, 16, 16, 36, 0, 1);
  EXPECT_EQ(perceptual_loss(a, a, f), 0.0);
  EXPECT_GT(perceptual_loss(a, b, f), 0.0);
  EXPECT_EQ(perceptual_loss(a, b, f), perceptual_loss(b, a, f));
  const Tensor fa = f.features(a), fb = f.features(b);
  double oracle = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) oracle += (fa.data[i] - fb.data[i]) * (fa.data[i] - fb.data[i]);
  EXPECT_NEAR(perceptual_loss(a, b, f), oracle / fa.size(), 1e-15);
  EXPECT_THROW(perceptual_loss(a, Tensor(1, 16, 12), f), ShapeError);
}

TEST(PerceptualLoss, Gradient) {
  const FeatureNet f = build_featnet(8);
  Tensor p = random_tensor(1, 16, 16, 37, 0, 1);
  const Tensor t = random_tensor(1, 16, 16, 38, 0, 1);
  double value = 0.0;
  const Tensor g = perceptual_gradient(p, t, f, &value);
  EXPECT_EQ(value, perceptual_loss(p, t, f));
  expect_gradient(p.data, g.data, [&] { return perceptual_loss(p, t, f); }, "perceptual", 24);
}

TEST(TotalLoss, Combination) {
  const FeatureNet f = build_featnet(9);
  const Tensor a = random_tensor(1, 16, 16, 39, 0, 1), b = random_tensor(1, 16, 16, 40, 0, 1);
  const double l1 = l1_loss(a, b), perc = perceptual_loss(a, b, f);
  const LossReport d = total_loss(a, b, 1.0, 0.1, f);
  EXPECT_NEAR(d.total, 1.0 * l1 + 0.1 * perc, 1e-12);
  EXPECT_EQ(d.l1, l1);
  EXPECT_EQ(d.perceptual, perc);
  EXPECT_EQ(total_loss(a, b, 2.5, 0.0, f).total, 2.5 * l1);
  EXPECT_EQ(total_loss(a, b, 0.0, 0.0, f).total, 0.0);
  for (double alpha : {0.0, 0.3, 4.0}) {
    for (double beta : {0.0, 0.05, 2.0}) {
      const LossReport r = total_loss(a, b, alpha, beta, f);
      EXPECT_NEAR(r.total, alpha * r.l1 + beta * r.perceptual, 1e-12);
    }
  }
  EXPECT_THROW(total_loss(a, b, -1.0, 0.1, f), ParameterError);
}

TEST(TotalLoss, CombinedGradient) {
  const FeatureNet f = build_featnet(10);
  Tensor p = random_tensor(1, 16, 16, 41, 0, 1);
  const Tensor t = random_tensor(1, 16, 16, 42, 0, 1);
  Tensor g;
  const LossReport r = loss_with_gradient(p, t, 1.0, 0.1, f, g);
  EXPECT_NEAR(r.total, total_loss(p, t, 1.0, 0.1, f).total, 1e-15);
  expect_gradient(p.data, g.data, [&] { return total_loss(p, t, 1.0, 0.1, f).total; }, "total");
}

TEST(FeatureNet, SeededAndShaped) {
  EXPECT_EQ(build_featnet(3).params(), build_featnet(3).params());
  EXPECT_FALSE(build_featnet(3).params() == build_featnet(4).params());
  const FeatureNet f = build_featnet(3);
  const Tensor y = f.features(random_tensor(1, 32, 24, 43, 0, 1));
  EXPECT_EQ(y.channels, 64);
  EXPECT_EQ(y.height, 8);
  EXPECT_EQ(y.width, 6);
  EXPECT_THROW(f.features(Tensor(1, 30, 32)), ShapeError);
}

TEST(FeatureNet, SeesContrastChanges) {
  const FeatureNet f = build_featnet(11);
  const Tensor a = random_tensor(1, 16, 16, 44, 0, 1);
  Tensor half = a;
  for (double& v : half.data) v *= 0.5;
  EXPECT_GT(perceptual_loss(a, half, f), 0.0);
}

TEST(FeatureNet, InputGradient) {
  const FeatureNet f = build_featnet(12);
  Tensor x = random_tensor(1, 8, 8, 45, 0, 1);
  FeatureNet::Trace tr;
  const Tensor y = f.features(x, &tr);
  const Tensor v = random_tensor(y.channels, y.height, y.width, 46);
  const Tensor dx = f.input_gradient(tr, v);
  expect_gradient(x.data, dx.data, [&] { return dot(f.features(x).data, v.data); }, "featnet");
}

TEST(Conv2d, ResultDoesNotDependOnBufferPlacement) {
  const Tensor x = random_tensor(5, 9, 7, 47);
  const ParamArray w = random_param({6, 5, 3, 3}, 48), b = random_param({6}, 49);
  const Tensor reference = conv2d(x, w, b);
  const Tensor v = random_tensor(6, 9, 7, 50);
  ParamArray dw0{w.shape, std::vector<double>(w.size(), 0.0)}, db0{b.shape, std::vector<double>(b.size(), 0.0)};
  const Tensor dx0 = conv2d_backward(x, w, 1, v, dw0, db0);
  std::vector<std::vector<double>> spacers;
  for (int shift = 1; shift <= 8; ++shift) {
    spacers.emplace_back(static_cast<std::size_t>(shift), 0.0);
    // element offsets inside a larger buffer change the alignment of the copy
    std::vector<double> arena(x.size() + shift, 0.0);
    std::copy(x.data.begin(), x.data.end(), arena.begin() + shift);
    Tensor moved(5, 9, 7);
    moved.data.assign(arena.begin() + shift, arena.end());
    EXPECT_EQ(conv2d(moved, w, b), reference) << shift;
    ParamArray dw{w.shape, std::vector<double>(w.size(), 0.0)}, db{b.shape, std::vector<double>(b.size(), 0.0)};
    EXPECT_EQ(conv2d_backward(moved, w, 1, v, dw, db), dx0) << shift;
    EXPECT_EQ(dw, dw0) << shift;
  }
}

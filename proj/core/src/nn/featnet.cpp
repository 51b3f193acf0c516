#include "hdrec/nn/featnet.hpp"

#include <cmath>
#include <string>

#include "hdrec/error.hpp"
#include "hdrec/nn/layers.hpp"
#include "hdrec/rng.hpp"

namespace hdrec::nn {
namespace {

constexpr int kWidths[] = {1, 16, 32, 64, 64};

std::string layer(int i) { return "feat.conv" + std::to_string(i); }

}  // namespace

FeatureNet::FeatureNet(std::uint64_t seed) : seed_(seed) {
  for (int i = 1; i <= 4; ++i) {
    ParamArray& w = params_.add(layer(i) + ".weight", {kWidths[i], kWidths[i - 1], 3, 3});
    params_.add(layer(i) + ".bias", {kWidths[i]});
    const double bound = std::sqrt(3.0 / (kWidths[i - 1] * 9));
    CounterStream rng(mix_seed(seed, 0xFEA7), Stream::Init, static_cast<std::uint32_t>(i));
    for (double& v : w.values) v = bound * (2.0 * rng.uniform() - 1.0);
  }
}

Tensor FeatureNet::features(const Tensor& image, Trace* trace) const {
  if (image.channels != 1) throw ShapeError("feature network input must have one channel");
  if (image.height % 4 != 0 || image.width % 4 != 0) throw ShapeError("feature network input must be a multiple of 4");
  auto conv = [&](const Tensor& x, int i) {
    return tanh_act(conv2d(x, params_.get(layer(i) + ".weight"), params_.get(layer(i) + ".bias")));
  };
  Tensor a1 = conv(image, 1);
  Tensor a2 = conv(a1, 2);
  Tensor p1 = avg_pool2(a2);
  Tensor a3 = conv(p1, 3);
  Tensor a4 = conv(a3, 4);
  Tensor out = avg_pool2(a4);
  if (trace) *trace = {image, std::move(a1), std::move(a2), std::move(p1), std::move(a3), std::move(a4)};
  return out;
}

Tensor FeatureNet::input_gradient(const Trace& t, const Tensor& d_features) const {
  ParamStore scratch = params_.zeros_like();
  auto back = [&](const Tensor& x, const Tensor& y, const Tensor& dy, int i) {
    return conv2d_backward(x, params_.get(layer(i) + ".weight"), 1, tanh_backward(y, dy),
                           scratch.get(layer(i) + ".weight"), scratch.get(layer(i) + ".bias"));
  };
  Tensor d = avg_pool2_backward(d_features, t.a4.height, t.a4.width);
  d = back(t.a3, t.a4, d, 4);
  d = back(t.p1, t.a3, d, 3);
  d = avg_pool2_backward(d, t.a2.height, t.a2.width);
  d = back(t.a1, t.a2, d, 2);
  return back(t.input, t.a1, d, 1);
}

FeatureNet build_featnet(std::uint64_t seed) { return FeatureNet(seed); }

}  // namespace hdrec::nn

#include "hdrec/nn/loss.hpp"

#include <cmath>

#include "hdrec/error.hpp"

namespace hdrec::nn {
namespace {

void check_pair(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) throw ShapeError("prediction and target shapes differ");
  if (pred.size() == 0) throw ShapeError("loss of an empty tensor");
}

}  // namespace

double l1_loss(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(target.data[i] - pred.data[i]);
  return sum / static_cast<double>(pred.size());
}

Tensor l1_gradient(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target);
  Tensor g(pred.channels, pred.height, pred.width);
  const double scale = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred.data[i] - target.data[i];
    g.data[i] = diff > 0.0 ? scale : (diff < 0.0 ? -scale : 0.0);
  }
  return g;
}

double perceptual_loss(const Tensor& pred, const Tensor& target, const FeatureNet& featnet) {
  check_pair(pred, target);
  const Tensor fp = featnet.features(pred);
  const Tensor ft = featnet.features(target);
  double sum = 0.0;
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const double d = fp.data[i] - ft.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(fp.size());
}

Tensor perceptual_gradient(const Tensor& pred, const Tensor& target, const FeatureNet& featnet, double* value) {
  check_pair(pred, target);
  FeatureNet::Trace trace;
  const Tensor fp = featnet.features(pred, &trace);
  const Tensor ft = featnet.features(target);
  Tensor d(fp.channels, fp.height, fp.width);
  const double n = static_cast<double>(fp.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const double diff = fp.data[i] - ft.data[i];
    sum += diff * diff;
    d.data[i] = 2.0 * diff / n;
  }
  if (value) *value = sum / n;
  return featnet.input_gradient(trace, d);
}

LossReport total_loss(const Tensor& pred, const Tensor& target, double alpha, double beta, const FeatureNet& featnet) {
  if (alpha < 0.0 || beta < 0.0) throw ParameterError("loss weights must be non-negative");
  LossReport r;
  r.l1 = l1_loss(pred, target);
  r.perceptual = perceptual_loss(pred, target, featnet);
  r.total = alpha * r.l1 + beta * r.perceptual;
  return r;
}

LossReport loss_with_gradient(const Tensor& pred, const Tensor& target, double alpha, double beta,
                              const FeatureNet& featnet, Tensor& d_pred) {
  if (alpha < 0.0 || beta < 0.0) throw ParameterError("loss weights must be non-negative");
  LossReport r;
  r.l1 = l1_loss(pred, target);
  d_pred = l1_gradient(pred, target);
  for (double& v : d_pred.data) v *= alpha;
  if (beta > 0.0) {
    const Tensor gp = perceptual_gradient(pred, target, featnet, &r.perceptual);
    for (std::size_t i = 0; i < d_pred.size(); ++i) d_pred.data[i] += beta * gp.data[i];
  } else {
    r.perceptual = perceptual_loss(pred, target, featnet);
  }
  r.total = alpha * r.l1 + beta * r.perceptual;
  return r;
}

}  // namespace hdrec::nn

#pragma once

#include "hdrec/nn/featnet.hpp"
#include "hdrec/nn/tensor.hpp"

namespace hdrec::nn {

struct LossReport {
  double l1 = 0.0;
  double perceptual = 0.0;
  double total = 0.0;
};

/// Mean absolute difference over all channels and pixels.
double l1_loss(const Tensor& pred, const Tensor& target);
/// dL1/d(pred).
Tensor l1_gradient(const Tensor& pred, const Tensor& target);

/// Mean squared difference of FeatureNet features.
double perceptual_loss(const Tensor& pred, const Tensor& target, const FeatureNet& featnet);
/// dLperc/d(pred). Also returns the loss value through `value` when given.
Tensor perceptual_gradient(const Tensor& pred, const Tensor& target, const FeatureNet& featnet,
                           double* value = nullptr);

LossReport total_loss(const Tensor& pred, const Tensor& target, double alpha, double beta, const FeatureNet& featnet);

/// Loss report and dL/d(pred) of alpha * l1 + beta * perceptual in one pass.
/// The perceptual branch is skipped when beta is 0.
LossReport loss_with_gradient(const Tensor& pred, const Tensor& target, double alpha, double beta,
                              const FeatureNet& featnet, Tensor& d_pred);

}  // namespace hdrec::nn

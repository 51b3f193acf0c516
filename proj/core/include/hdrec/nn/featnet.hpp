#pragma once

#include <cstdint>

#include "hdrec/nn/tensor.hpp"

namespace hdrec::nn {

/// Frozen feature extractor for the perceptual loss: conv 1->16, conv 16->32,
/// pool, conv 32->64, conv 64->64, pool. Kernel 3, tanh after every conv.
class FeatureNet {
 public:
  struct Trace {
    Tensor input;
    Tensor a1, a2, p1, a3, a4;
  };

  explicit FeatureNet(std::uint64_t seed);

  const ParamStore& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  /// Input sides must be even twice over (multiples of 4).
  Tensor features(const Tensor& image, Trace* trace = nullptr) const;
  /// dL/d(image) given dL/d(features).
  Tensor input_gradient(const Trace& trace, const Tensor& d_features) const;

 private:
  std::uint64_t seed_;
  ParamStore params_;
};

FeatureNet build_featnet(std::uint64_t seed);

}  // namespace hdrec::nn

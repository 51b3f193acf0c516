#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdrec/nn/tensor.hpp"
#include "hdrec/types.hpp"

namespace hdrec::nn {

struct DenoiserConfig {
  int n_scales = 4;
  int base_channels = 32;
  int residual_units_per_stage = 2;
  int kernel = 3;
  std::uint64_t seed = 0;

  void validate() const;
  /// Input height and width must be multiples of this.
  int size_multiple() const { return 1 << (n_scales - 1); }
  int channels(int stage) const { return base_channels << stage; }
  /// SHA-256 over the architecture fields (the seed is excluded).
  std::string fingerprint() const;

  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

struct LayerShape {
  std::string name;
  std::vector<int> shape;
};

/// Every parameter array of the network, in storage order.
std::vector<LayerShape> architecture(const DenoiserConfig& config);

struct ModelWeights {
  DenoiserConfig config;
  std::string fingerprint;
  ParamStore params;

  /// Shapes match the config, fingerprint matches, all values finite.
  void validate() const;
  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

ModelWeights build_model(const DenoiserConfig& config);

struct ResUnitTrace {
  Tensor x;
  Tensor h1;
  Tensor a1;
};

/// Intermediates kept by a forward pass for the backward pass.
struct ForwardTrace {
  std::vector<std::vector<ResUnitTrace>> encoder;
  std::vector<Tensor> down_inputs;
  std::vector<Tensor> up_inputs;
  std::vector<std::vector<ResUnitTrace>> decoder;
  Tensor head_input;
};

/// Output = input + head(decoder features).
Tensor forward(const ModelWeights& weights, const Tensor& input, ForwardTrace* trace = nullptr);
Image forward(const ModelWeights& weights, const Image& input);

/// Accumulates parameter gradients into `grads` (same layout as weights.params)
/// and returns dL/d(input).
Tensor backward(const ModelWeights& weights, const ForwardTrace& trace, const Tensor& d_output, ParamStore& grads);

}  // namespace hdrec::nn

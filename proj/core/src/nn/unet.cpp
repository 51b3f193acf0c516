#include "hdrec/nn/unet.hpp"

#include <cmath>
#include <sstream>

#include "hdrec/error.hpp"
#include "hdrec/hash.hpp"
#include "hdrec/nn/layers.hpp"
#include "hdrec/rng.hpp"

namespace hdrec::nn {
namespace {

std::string enc_unit(int s, int u) { return "enc" + std::to_string(s) + ".unit" + std::to_string(u); }
std::string dec_unit(int s, int u) { return "dec" + std::to_string(s) + ".unit" + std::to_string(u); }

void add_conv(std::vector<LayerShape>& out, const std::string& name, int c_out, int c_in, int k) {
  out.push_back({name + ".weight", {c_out, c_in, k, k}});
  out.push_back({name + ".bias", {c_out}});
}

void add_unit(std::vector<LayerShape>& out, const std::string& name, int c_in, int c_out, int k) {
  add_conv(out, name + ".conv1", c_out, c_in, k);
  add_conv(out, name + ".conv2", c_out, c_out, k);
  if (c_in != c_out) add_conv(out, name + ".proj", c_out, c_in, 1);
}

const ParamArray& P(const ModelWeights& m, const std::string& name) { return m.params.get(name); }

Tensor unit_forward(const ModelWeights& m, const std::string& name, const Tensor& x, ResUnitTrace* trace) {
  Tensor h1 = conv2d(x, P(m, name + ".conv1.weight"), P(m, name + ".conv1.bias"));
  Tensor a1 = leaky_relu(h1);
  Tensor y = conv2d(a1, P(m, name + ".conv2.weight"), P(m, name + ".conv2.bias"));
  if (m.params.contains(name + ".proj.weight")) {
    add_inplace(y, conv2d(x, P(m, name + ".proj.weight"), P(m, name + ".proj.bias")));
  } else {
    add_inplace(y, x);
  }
  if (trace) *trace = {x, std::move(h1), std::move(a1)};
  return y;
}

Tensor unit_backward(const ModelWeights& m, const std::string& name, const ResUnitTrace& t, const Tensor& dy,
                     ParamStore& g) {
  const Tensor da1 = conv2d_backward(t.a1, P(m, name + ".conv2.weight"), 1, dy, g.get(name + ".conv2.weight"),
                                     g.get(name + ".conv2.bias"));
  const Tensor dh1 = leaky_relu_backward(t.h1, da1);
  Tensor dx = conv2d_backward(t.x, P(m, name + ".conv1.weight"), 1, dh1, g.get(name + ".conv1.weight"),
                              g.get(name + ".conv1.bias"));
  if (m.params.contains(name + ".proj.weight")) {
    add_inplace(dx, conv2d_backward(t.x, P(m, name + ".proj.weight"), 1, dy, g.get(name + ".proj.weight"),
                                    g.get(name + ".proj.bias")));
  } else {
    add_inplace(dx, dy);
  }
  return dx;
}

}  // namespace

void DenoiserConfig::validate() const {
  if (n_scales < 2) throw ParameterError("n_scales must be at least 2");
  if (n_scales > 8) throw ParameterError("n_scales must be at most 8");
  if (base_channels < 1) throw ParameterError("base_channels must be positive");
  if (residual_units_per_stage < 1) throw ParameterError("residual_units_per_stage must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw ParameterError("kernel must be odd and positive");
}

std::string DenoiserConfig::fingerprint() const {
  std::ostringstream s;
  s << "residual-unet;global-skip;n_scales=" << n_scales << ";base_channels=" << base_channels
    << ";residual_units_per_stage=" << residual_units_per_stage << ";kernel=" << kernel;
  return sha256_hex(s.str());
}

std::vector<LayerShape> architecture(const DenoiserConfig& config) {
  config.validate();
  const int k = config.kernel;
  const int units = config.residual_units_per_stage;
  std::vector<LayerShape> out;
  for (int s = 0; s < config.n_scales; ++s) {
    if (s > 0) add_conv(out, "down" + std::to_string(s), config.channels(s), config.channels(s - 1), 3);
    for (int u = 0; u < units; ++u) {
      add_unit(out, enc_unit(s, u), (s == 0 && u == 0) ? 1 : config.channels(s), config.channels(s), k);
    }
  }
  for (int s = config.n_scales - 2; s >= 0; --s) {
    const std::string up = "up" + std::to_string(s);
    out.push_back({up + ".weight", {config.channels(s + 1), config.channels(s), 2, 2}});
    out.push_back({up + ".bias", {config.channels(s)}});
    for (int u = 0; u < units; ++u) {
      add_unit(out, dec_unit(s, u), u == 0 ? 2 * config.channels(s) : config.channels(s), config.channels(s), k);
    }
  }
  add_conv(out, "head", 1, config.channels(0), 1);
  return out;
}

ModelWeights build_model(const DenoiserConfig& config) {
  ModelWeights m{config, config.fingerprint(), {}};
  std::uint32_t layer = 0;
  for (const auto& [name, shape] : architecture(config)) {
    ParamArray& p = m.params.add(name, shape);
    // a zero head makes the untrained network the identity map
    if (shape.size() != 4 || name == "head.weight") continue;
    // Fan-in counts the inputs feeding one output value.
    const int fan_in = name.rfind("up", 0) == 0 ? shape[0] : shape[1] * shape[2] * shape[3];
    const double bound = std::sqrt(3.0 / fan_in);
    CounterStream rng(config.seed, Stream::Init, layer++);
    for (double& v : p.values) v = bound * (2.0 * rng.uniform() - 1.0);
  }
  return m;
}

void ModelWeights::validate() const {
  config.validate();
  if (fingerprint != config.fingerprint()) throw ParameterError("weights fingerprint does not match configuration");
  const auto arch = architecture(config);
  const auto& entries = params.entries();
  if (entries.size() != arch.size()) throw ShapeError("weights do not match the architecture");
  for (std::size_t i = 0; i < arch.size(); ++i) {
    if (entries[i].first != arch[i].name || entries[i].second.shape != arch[i].shape) {
      throw ShapeError("layer " + entries[i].first + " does not match the architecture");
    }
    for (double v : entries[i].second.values) {
      if (!std::isfinite(v)) throw NumericalError("non-finite weight in " + entries[i].first);
    }
  }
}

Tensor forward(const ModelWeights& m, const Tensor& input, ForwardTrace* trace) {
  const DenoiserConfig& cfg = m.config;
  const int mult = cfg.size_multiple();
  if (input.channels != 1) throw ShapeError("network input must have one channel");
  if (input.height % mult != 0 || input.width % mult != 0) {
    throw ShapeError("input " + std::to_string(input.height) + "x" + std::to_string(input.width) +
                     " is not a multiple of " + std::to_string(mult));
  }
  const int units = cfg.residual_units_per_stage;
  if (trace) {
    *trace = {};
    trace->encoder.resize(cfg.n_scales);
    trace->decoder.resize(cfg.n_scales - 1);
    trace->down_inputs.resize(cfg.n_scales);
    trace->up_inputs.resize(cfg.n_scales - 1);
  }
  std::vector<Tensor> skips(cfg.n_scales);
  Tensor t = input;
  for (int s = 0; s < cfg.n_scales; ++s) {
    if (s > 0) {
      const std::string d = "down" + std::to_string(s);
      if (trace) trace->down_inputs[s] = t;
      t = conv2d(t, P(m, d + ".weight"), P(m, d + ".bias"), 2);
    }
    if (trace) trace->encoder[s].resize(units);
    for (int u = 0; u < units; ++u) t = unit_forward(m, enc_unit(s, u), t, trace ? &trace->encoder[s][u] : nullptr);
    skips[s] = t;
  }
  for (int s = cfg.n_scales - 2; s >= 0; --s) {
    const std::string up = "up" + std::to_string(s);
    if (trace) trace->up_inputs[s] = t;
    t = concat_channels(conv_transpose2x(t, P(m, up + ".weight"), P(m, up + ".bias")), skips[s]);
    if (trace) trace->decoder[s].resize(units);
    for (int u = 0; u < units; ++u) t = unit_forward(m, dec_unit(s, u), t, trace ? &trace->decoder[s][u] : nullptr);
  }
  if (trace) trace->head_input = t;
  // global shortcut: the network predicts a correction to its input
  Tensor out = conv2d(t, P(m, "head.weight"), P(m, "head.bias"));
  add_inplace(out, input);
  return out;
}

Image forward(const ModelWeights& weights, const Image& input) { return to_image(forward(weights, from_image(input))); }

Tensor backward(const ModelWeights& m, const ForwardTrace& trace, const Tensor& d_output, ParamStore& g) {
  const DenoiserConfig& cfg = m.config;
  const int units = cfg.residual_units_per_stage;
  Tensor d = conv2d_backward(trace.head_input, P(m, "head.weight"), 1, d_output, g.get("head.weight"),
                             g.get("head.bias"));
  std::vector<Tensor> d_skips(cfg.n_scales);
  for (int s = 0; s <= cfg.n_scales - 2; ++s) {
    for (int u = units - 1; u >= 0; --u) d = unit_backward(m, dec_unit(s, u), trace.decoder[s][u], d, g);
    auto [d_up, d_skip] = split_channels(d, cfg.channels(s));
    d_skips[s] = std::move(d_skip);
    const std::string up = "up" + std::to_string(s);
    d = conv_transpose2x_backward(trace.up_inputs[s], P(m, up + ".weight"), d_up, g.get(up + ".weight"),
                                  g.get(up + ".bias"));
  }
  for (int s = cfg.n_scales - 1; s >= 0; --s) {
    if (s < cfg.n_scales - 1) add_inplace(d, d_skips[s]);
    for (int u = units - 1; u >= 0; --u) d = unit_backward(m, enc_unit(s, u), trace.encoder[s][u], d, g);
    if (s > 0) {
      const std::string dn = "down" + std::to_string(s);
      d = conv2d_backward(trace.down_inputs[s], P(m, dn + ".weight"), 2, d, g.get(dn + ".weight"),
                          g.get(dn + ".bias"));
    }
  }
  add_inplace(d, d_output);
  return d;
}

}  // namespace hdrec::nn

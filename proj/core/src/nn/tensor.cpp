#include "hdrec/nn/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "hdrec/error.hpp"

namespace hdrec::nn {

Tensor from_image(const Image& image) {
  if (image.depth != 1) throw ShapeError("network input must be a single slice");
  Tensor t(1, image.height, image.width);
  t.data = image.values;
  return t;
}

Image to_image(const Tensor& t) {
  if (t.channels != 1) throw ShapeError("only single-channel tensors convert to images");
  return Image(t.width, t.height, 1, t.data);
}

ParamArray& ParamStore::add(const std::string& name, std::vector<int> shape, double fill) {
  if (contains(name)) throw ParameterError("duplicate parameter " + name);
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  entries_.emplace_back(name, ParamArray{std::move(shape), std::vector<double>(n, fill)});
  return entries_.back().second;
}

ParamArray& ParamStore::get(const std::string& name) {
  for (auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw ParameterError("unknown parameter " + name);
}

const ParamArray& ParamStore::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw ParameterError("unknown parameter " + name);
}

bool ParamStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

ParamStore ParamStore::zeros_like() const {
  ParamStore z;
  for (const auto& e : entries_) z.add(e.first, e.second.shape, 0.0);
  return z;
}

void ParamStore::fill(double v) {
  for (auto& e : entries_) std::fill(e.second.values.begin(), e.second.values.end(), v);
}

}  // namespace hdrec::nn

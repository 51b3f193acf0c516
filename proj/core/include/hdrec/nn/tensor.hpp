#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdrec/types.hpp"

namespace hdrec::nn {

/// One sample, channels x height x width, row-major.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }
  double& at(int c, int y, int x) { return data[(c * static_cast<std::size_t>(height) + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(c * static_cast<std::size_t>(height) + y) * width + x]; }

  bool same_shape(const Tensor& o) const { return channels == o.channels && height == o.height && width == o.width; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

Tensor from_image(const Image& image);
Image to_image(const Tensor& t);

/// Named array with a recorded shape.
struct ParamArray {
  std::vector<int> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const ParamArray&, const ParamArray&) = default;
};

/// Insertion-ordered name -> array store.
class ParamStore {
 public:
  ParamArray& add(const std::string& name, std::vector<int> shape, double fill = 0.0);
  ParamArray& get(const std::string& name);
  const ParamArray& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::pair<std::string, ParamArray>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, ParamArray>>& entries() { return entries_; }

  std::size_t parameter_count() const;
  /// Same names and shapes, all zeros.
  ParamStore zeros_like() const;
  void fill(double v);

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<std::pair<std::string, ParamArray>> entries_;
};

}  // namespace hdrec::nn

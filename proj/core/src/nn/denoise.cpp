#include "hdrec/nn/denoise.hpp"

#include <algorithm>
#include <cmath>

#include "hdrec/error.hpp"

namespace hdrec::nn {
namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Image reflect_pad(const Image& image, int width, int height) {
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(x, y) = image.at(reflect(x, image.width), reflect(y, image.height));
  }
  return out;
}

void check(const TileOptions& o, const ModelWeights& w) {
  if (o.tile < 1 || o.stride < 1 || o.stride > o.tile) throw ParameterError("tile stride must lie in [1, tile]");
  if (o.tile % w.config.size_multiple() != 0) {
    throw ShapeError("tile " + std::to_string(o.tile) + " is not a multiple of " +
                     std::to_string(w.config.size_multiple()));
  }
}

}  // namespace

std::vector<int> tile_starts(int length, int tile, int stride) {
  if (length < tile) throw ShapeError("axis shorter than tile");
  std::vector<int> starts;
  for (int s = 0; s + tile <= length; s += stride) starts.push_back(s);
  if (starts.back() + tile < length) starts.push_back(length - tile);
  return starts;
}

double tile_weight(int i, int tile) {
  const double centre = 0.5 * (tile - 1);
  return 1.0 - std::abs(i - centre) / (0.5 * tile);
}

std::vector<std::vector<double>> blend_weights(int height, int width, const TileOptions& o) {
  const auto ys = tile_starts(height, o.tile, o.stride);
  const auto xs = tile_starts(width, o.tile, o.stride);
  std::vector<double> norm(static_cast<std::size_t>(height) * width, 0.0);
  for (int ty : ys) {
    for (int tx : xs) {
      for (int i = 0; i < o.tile; ++i) {
        for (int j = 0; j < o.tile; ++j) {
          norm[static_cast<std::size_t>(ty + i) * width + tx + j] += tile_weight(i, o.tile) * tile_weight(j, o.tile);
        }
      }
    }
  }
  std::vector<std::vector<double>> out;
  for (int ty : ys) {
    for (int tx : xs) {
      std::vector<double> w(static_cast<std::size_t>(o.tile) * o.tile);
      for (int i = 0; i < o.tile; ++i) {
        for (int j = 0; j < o.tile; ++j) {
          w[static_cast<std::size_t>(i) * o.tile + j] = tile_weight(i, o.tile) * tile_weight(j, o.tile) /
                                                        norm[static_cast<std::size_t>(ty + i) * width + tx + j];
        }
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

Image denoise_image(const ModelWeights& weights, const Image& image, const TileOptions& o) {
  check(o, weights);
  if (image.depth != 1) throw ShapeError("denoise_image takes a single slice");
  const int width = std::max(image.width, o.tile);
  const int height = std::max(image.height, o.tile);
  const Image padded = (width == image.width && height == image.height) ? image : reflect_pad(image, width, height);

  const auto ys = tile_starts(height, o.tile, o.stride);
  const auto xs = tile_starts(width, o.tile, o.stride);
  const auto blend = blend_weights(height, width, o);
  Image out(width, height);
  std::size_t t = 0;
  for (int ty : ys) {
    for (int tx : xs) {
      Tensor tile(1, o.tile, o.tile);
      for (int i = 0; i < o.tile; ++i) {
        for (int j = 0; j < o.tile; ++j) tile.at(0, i, j) = padded.at(tx + j, ty + i);
      }
      const Tensor pred = forward(weights, tile);
      const auto& w = blend[t++];
      for (int i = 0; i < o.tile; ++i) {
        for (int j = 0; j < o.tile; ++j) {
          out.at(tx + j, ty + i) += w[static_cast<std::size_t>(i) * o.tile + j] * pred.at(0, i, j);
        }
      }
    }
  }
  if (width == image.width && height == image.height) return out;
  Image cropped(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) cropped.at(x, y) = out.at(x, y);
  }
  return cropped;
}

ProjectionStack denoise_stack(const ModelWeights& weights, const ProjectionStack& p_l, const TileOptions& o) {
  if (p_l.domain() != Domain::Transmission) throw DomainError("denoise_stack expects a transmission stack");
  std::vector<double> values;
  values.reserve(p_l.values().size());
  for (int a = 0; a < p_l.n_angles(); ++a) {
    const Image d = denoise_image(weights, p_l.projection_image(a), o);
    for (double v : d.values) {
      if (!std::isfinite(v)) throw NumericalError("non-finite denoiser output at angle " + std::to_string(a));
      values.push_back(std::clamp(v, 0.0, kTransmissionMax));
    }
  }
  return p_l.with_values(Domain::Transmission, std::move(values));
}

}  // namespace hdrec::nn

#pragma once

#include <vector>

#include "hdrec/nn/unet.hpp"
#include "hdrec/types.hpp"

namespace hdrec::nn {

struct TileOptions {
  int tile = 128;
  int stride = 64;
};

/// Tile start positions along an axis of `length` (>= tile): 0, stride, ...
/// plus a final tile flush with the end.
std::vector<int> tile_starts(int length, int tile, int stride);

/// Triangular blending weight of position i inside a tile, always > 0.
double tile_weight(int i, int tile);

/// Normalized blending weights of every pixel for every tile of a
/// height x width image: entry [t][y * tile + x] for tile t in row-major tile order.
std::vector<std::vector<double>> blend_weights(int height, int width, const TileOptions& options);

/// Denoises one projection image by overlapping tiles. Images smaller than a
/// tile are reflect-padded and cropped back.
Image denoise_image(const ModelWeights& weights, const Image& image, const TileOptions& options = {});

/// Every projection denoised; output clamped to [0, kTransmissionMax].
ProjectionStack denoise_stack(const ModelWeights& weights, const ProjectionStack& p_l,
                              const TileOptions& options = {});

}  // namespace hdrec::nn

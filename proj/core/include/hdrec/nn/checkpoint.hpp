#pragma once

#include <filesystem>

#include "hdrec/nn/unet.hpp"

namespace hdrec::nn {

/// Header (magic=HDRECW, config, fingerprint, one `layer.<i>=name;shape;offset;count`
/// line per array) plus a float32 little-endian payload. Offsets are in bytes.
void write_weights(const ModelWeights& weights, const std::filesystem::path& header);
/// Values come back narrowed to float32 precision.
ModelWeights read_weights(const std::filesystem::path& header);

}  // namespace hdrec::nn

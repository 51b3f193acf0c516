#pragma once

#include "hdrec/types.hpp"

namespace hdrec {

/// Capped value reported for identical images.
inline constexpr double kPsnrCap = 200.0;

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Local SSIM at every position where the Gaussian window fits entirely
/// inside the image; (width - window + 1) x (height - window + 1).
Image ssim_map(const Image& a, const Image& b, double data_range, const SsimOptions& options = {});

/// Mean of the SSIM map. Single-slice images only.
double ssim(const Image& a, const Image& b, double data_range, const SsimOptions& options = {});

/// Mean of the SSIM map over windows centred inside the inscribed circle.
double ssim_inscribed(const Image& a, const Image& b, double data_range, const SsimOptions& options = {});

/// 20 log10(range) - 10 log10(MSE), kPsnrCap when MSE is zero.
double psnr(const Image& a, const Image& b, double data_range);

/// max - min of an image, the data range used for reconstructions.
double dynamic_range(const Image& reference);

/// Per-angle SSIM/PSNR between two stacks, projection images as n_det x n_rows.
QualityReport stack_report(const ProjectionStack& a, const ProjectionStack& b, double data_range);

/// Inscribed-circle SSIM per slice against a reference volume, data range of
/// each reference slice. `slices` empty means every slice.
QualityReport volume_report(const Image& reconstruction, const Image& reference, std::vector<int> slices = {});

}  // namespace hdrec

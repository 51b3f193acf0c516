#pragma once

#include <span>
#include <vector>

#include "hdrec/forward.hpp"
#include "hdrec/types.hpp"

namespace hdrec {

enum class FilterKind { Ramp, Parzen };

/// Parzen (de la Vallee Poussin) window at normalized frequency f in [0, 1]
/// (1 = Nyquist): 1 - 6f^2 + 6f^3 up to 1/2, 2(1 - f)^3 beyond.
double parzen(double f);

/// Window sampled at n evenly spaced frequencies k/(n-1).
std::vector<double> parzen_window(int n);

/// Frequency response of the filter for a padded length: band-limited ramp
/// (spatial Ram-Lak kernel, transformed), optionally times the Parzen window.
std::vector<double> fbp_filter_response(int padded_length, FilterKind filter);

/// Next power of two >= 2 n_det.
int fbp_padded_length(int n_det);

/// Filtered backprojection of every slice of a line-integral stack onto a
/// size x size grid (size x size x n_rows). Rows are ramp filtered in
/// frequency space, backprojected with linear interpolation, scaled by pi/n_angles.
Image fbp_reconstruct(const ProjectionStack& sinogram, int size, FilterKind filter);

/// Single-slice FBP over (angle, row) pairs in any order; rows is
/// angles.size() x n_det. Accumulation runs in ascending angle order, so any
/// relabeling of the pairs gives the same image bit for bit.
Image fbp_rows(std::span<const double> angles, std::span<const double> rows, int n_det, int size, FilterKind filter);

enum class ReconMethod { FbpParzen, FbpRamp, Tv };

struct ReconConfig {
  ReconMethod method = ReconMethod::FbpParzen;
  int tv_iterations = 100;
  double tv_weight = 0.2;
  double tv_step = 0.02;
  int sirt_sweeps_per_iter = 1;

  void validate() const;
};

struct TvLogEntry {
  int iteration = 0;
  double residual = 0.0;
  double tv_value = 0.0;
};

struct TvResult {
  Image image;
  std::vector<TvLogEntry> log;
  bool diverged = false;
};

/// Smoothed isotropic total variation sum sqrt(gx^2 + gy^2 + eps) with
/// forward differences (zero past the last row/column).
double total_variation(std::span<const double> image, int size, double eps = 1e-8);
std::vector<double> total_variation_gradient(std::span<const double> image, int size, double eps = 1e-8);

/// One SIRT update x + C A^T R (p - A x); R and C are inverse row/column sums.
std::vector<double> sirt_step(const SystemMatrix& a, std::span<const double> x, std::span<const double> p);

/// SIRT sweeps alternating with descent on the smoothed TV, non-negativity
/// after each iteration. The descent step is tv_step * tv_weight * max(x) per slice. Stops early (diverged = true) when the data residual
/// grows three iterations in a row. Logged residual and TV are summed over slices.
TvResult tv_reconstruct(const ProjectionStack& sinogram, int size, const ReconConfig& config);

/// Dispatch on config.method.
Image reconstruct(const ProjectionStack& sinogram, int size, const ReconConfig& config);

}  // namespace hdrec

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdrec/types.hpp"

namespace hdrec {

/// Parallel-beam geometry. Detector pitch is one pixel-length and the detector
/// is centred on the rotation axis; bin d sits at offset d + 0.5 - n_det/2.
struct Geometry {
  int n_det = 0;
  std::vector<double> angles;

  int n_angles() const { return static_cast<int>(angles.size()); }
  void validate() const;

  /// Uniform angles over [0, pi).
  static Geometry parallel(int n_angles, int n_det);
};

/// Smallest multiple of 8 that is >= width * sqrt(2): every ray through the image hits the detector.
int covering_detector_count(int width);

/// Non-empty when the detector does not cover the image diagonal.
std::optional<std::string> coverage_warning(const Geometry& geometry, int width);

/// Exact ray/pixel intersection lengths for one ray of a size x size grid
/// (Siddon's method), visited in increasing ray parameter.
void trace_ray(int size, double angle, double offset, const std::function<void(int pixel, double length)>& visit);

/// Sparse system matrix A for one slice: row = angle * n_det + det, column = pixel.
class SystemMatrix {
 public:
  SystemMatrix(const Geometry& geometry, int size);

  int rows() const { return static_cast<int>(row_ptr_.size()) - 1; }
  int cols() const { return size_ * size_; }
  int size() const { return size_; }
  std::size_t nonzeros() const { return values_.size(); }

  /// y = A x
  void forward(std::span<const double> x, std::span<double> y) const;
  /// x = A^T y
  void back(std::span<const double> y, std::span<double> x) const;

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;

  /// Row entries (pixel, length) in traversal order.
  std::span<const int> row_columns(int row) const;
  std::span<const double> row_values(int row) const;

 private:
  int size_;
  std::vector<std::int64_t> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> values_;
};

/// Line integrals of every slice through a square phantom. Rows of each
/// projection are slices, so the result has n_rows = phantom depth.
ProjectionStack siddon_project(const Phantom& phantom, const Geometry& geometry);

/// v -> exp(-v). Requires LineIntegral input.
ProjectionStack beer_transmit(const ProjectionStack& line_integrals);

/// v -> -ln(max(v, floor)). Requires Transmission input and floor > 0.
ProjectionStack log_normalize(const ProjectionStack& transmission, double floor);

/// Zero-count floor used before the logarithm: 1 / (2 b0).
inline double count_floor(double b0) { return 1.0 / (2.0 * b0); }

}  // namespace hdrec

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hdrec {

/// Transmission ceiling: Poisson counts divided by b0 may exceed 1.
inline constexpr double kTransmissionMax = 1.2;

/// Dense real image of width x height x depth, x fastest, then y, then slice.
struct Image {
  int width = 0;
  int height = 0;
  int depth = 1;
  std::vector<double> values;

  Image() = default;
  Image(int width, int height, int depth = 1, double fill = 0.0);
  Image(int width, int height, int depth, std::vector<double> values);

  std::size_t slice_size() const { return static_cast<std::size_t>(width) * height; }
  std::size_t size() const { return values.size(); }

  double& at(int x, int y, int z = 0) { return values[(static_cast<std::size_t>(z) * height + y) * width + x]; }
  double at(int x, int y, int z = 0) const {
    return values[(static_cast<std::size_t>(z) * height + y) * width + x];
  }

  std::span<double> slice(int z) { return {values.data() + z * slice_size(), slice_size()}; }
  std::span<const double> slice(int z) const { return {values.data() + z * slice_size(), slice_size()}; }
  Image slice_image(int z) const;

  friend bool operator==(const Image&, const Image&) = default;
};

/// Attenuation map in 1/pixel-length. Finite, non-negative, at least 8x8 per slice.
class Phantom {
 public:
  explicit Phantom(Image image);

  int width() const { return image_.width; }
  int height() const { return image_.height; }
  int depth() const { return image_.depth; }
  const Image& image() const { return image_; }
  std::span<const double> mu() const { return image_.values; }

  friend bool operator==(const Phantom&, const Phantom&) = default;

 private:
  Image image_;
};

enum class Domain { Transmission, LineIntegral };

std::string to_string(Domain domain);
Domain parse_domain(const std::string& text);

/// Angle-indexed projections. Each projection is an n_rows x n_det image
/// (n_rows = 1 for a plain sinogram of a single slice).
class ProjectionStack {
 public:
  ProjectionStack(Domain domain, std::vector<double> angles, int n_det, int n_rows, std::vector<double> values);

  Domain domain() const { return domain_; }
  int n_angles() const { return static_cast<int>(angles_.size()); }
  int n_det() const { return n_det_; }
  int n_rows() const { return n_rows_; }
  const std::vector<double>& angles() const { return angles_; }
  const std::vector<double>& values() const { return values_; }

  std::size_t projection_size() const { return static_cast<std::size_t>(n_rows_) * n_det_; }
  std::span<const double> projection(int angle) const {
    return {values_.data() + angle * projection_size(), projection_size()};
  }
  double at(int angle, int row, int det) const { return values_[angle * projection_size() + row * n_det_ + det]; }

  /// The projection at `angle` as an n_det x n_rows image.
  Image projection_image(int angle) const;
  /// Row `row` of every projection: the sinogram of slice `row`.
  ProjectionStack sinogram(int row) const;

  ProjectionStack with_values(Domain domain, std::vector<double> values) const;

  /// Throws ParseError(InvariantViolation) when a transmission value exceeds kTransmissionMax.
  void check_transmission_ceiling() const;

  friend bool operator==(const ProjectionStack&, const ProjectionStack&) = default;

 private:
  Domain domain_;
  std::vector<double> angles_;
  int n_det_;
  int n_rows_;
  std::vector<double> values_;
};

/// n angles k*pi/n, k = 0..n-1.
std::vector<double> uniform_angles(int n_angles);

/// Stack of projection images, one per angle, all n_det x n_rows.
ProjectionStack stack_from_images(Domain domain, std::vector<double> angles, const std::vector<Image>& images);

/// Per-angle dose allocation.
struct AcquisitionScheme {
  std::vector<double> b0_per_angle;
  std::vector<int> normal_indices;
  double b0_normal = 0.0;
  double b0_low = 0.0;

  int n_angles() const { return static_cast<int>(b0_per_angle.size()); }
  void validate() const;
};

struct QualityItem {
  int index = 0;
  double ssim = 0.0;
  double psnr = 0.0;
};

struct QualityReport {
  std::vector<QualityItem> per_item;
  double mean_ssim = 0.0;
  double std_ssim = 0.0;
  double mean_psnr = 0.0;
  double std_psnr = 0.0;

  /// Aggregates (mean, population std) recomputed from the items.
  static QualityReport from_items(std::vector<QualityItem> items);
};

}  // namespace hdrec

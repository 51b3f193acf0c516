#include "hdrec/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hdrec/error.hpp"

namespace hdrec {

Image::Image(int w, int h, int d, double fill) : width(w), height(h), depth(d) {
  if (w <= 0 || h <= 0 || d <= 0) throw ShapeError("image dimensions must be positive");
  values.assign(static_cast<std::size_t>(w) * h * d, fill);
}

Image::Image(int w, int h, int d, std::vector<double> v) : width(w), height(h), depth(d), values(std::move(v)) {
  if (w <= 0 || h <= 0 || d <= 0) throw ShapeError("image dimensions must be positive");
  if (values.size() != static_cast<std::size_t>(w) * h * d) throw ShapeError("image value count does not match dimensions");
}

Image Image::slice_image(int z) const {
  auto s = slice(z);
  return Image(width, height, 1, std::vector<double>(s.begin(), s.end()));
}

Phantom::Phantom(Image image) : image_(std::move(image)) {
  if (image_.width < 8 || image_.height < 8) throw ShapeError("phantom must be at least 8x8");
  for (double v : image_.values) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("phantom attenuation must be finite and non-negative");
  }
}

std::string to_string(Domain domain) {
  return domain == Domain::Transmission ? "Transmission" : "LineIntegral";
}

Domain parse_domain(const std::string& text) {
  if (text == "Transmission") return Domain::Transmission;
  if (text == "LineIntegral") return Domain::LineIntegral;
  throw ParseError(ParseError::Kind::UnknownDomain, "unknown domain tag '" + text + "'");
}

ProjectionStack::ProjectionStack(Domain domain, std::vector<double> angles, int n_det, int n_rows,
                                 std::vector<double> values)
    : domain_(domain), angles_(std::move(angles)), n_det_(n_det), n_rows_(n_rows), values_(std::move(values)) {
  if (angles_.empty() || n_det_ <= 0 || n_rows_ <= 0) throw ShapeError("projection stack dimensions must be positive");
  if (values_.size() != angles_.size() * projection_size()) {
    throw ShapeError("projection stack holds " + std::to_string(values_.size()) + " values, expected " +
                     std::to_string(angles_.size() * projection_size()));
  }
  for (std::size_t i = 0; i < angles_.size(); ++i) {
    if (!(angles_[i] >= 0.0 && angles_[i] < std::numbers::pi)) throw ValidationError("angles must lie in [0, pi)");
    if (i > 0 && !(angles_[i] > angles_[i - 1])) throw ValidationError("angles must be strictly increasing");
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("projection values must be finite and non-negative");
  }
}

Image ProjectionStack::projection_image(int angle) const {
  auto p = projection(angle);
  return Image(n_det_, n_rows_, 1, std::vector<double>(p.begin(), p.end()));
}

ProjectionStack ProjectionStack::sinogram(int row) const {
  if (row < 0 || row >= n_rows_) throw ShapeError("sinogram row out of range");
  std::vector<double> v(angles_.size() * n_det_);
  for (int a = 0; a < n_angles(); ++a) {
    auto p = projection(a).subspan(static_cast<std::size_t>(row) * n_det_, n_det_);
    std::copy(p.begin(), p.end(), v.begin() + static_cast<std::ptrdiff_t>(a) * n_det_);
  }
  return ProjectionStack(domain_, angles_, n_det_, 1, std::move(v));
}

ProjectionStack ProjectionStack::with_values(Domain domain, std::vector<double> values) const {
  return ProjectionStack(domain, angles_, n_det_, n_rows_, std::move(values));
}

void ProjectionStack::check_transmission_ceiling() const {
  if (domain_ != Domain::Transmission) return;
  // payloads are float32, so the ceiling is compared at float precision
  const double ceiling = static_cast<float>(kTransmissionMax);
  for (double v : values_) {
    if (v > ceiling) {
      throw ParseError(ParseError::Kind::InvariantViolation,
                       "transmission value " + std::to_string(v) + " exceeds ceiling " + std::to_string(kTransmissionMax));
    }
  }
}

std::vector<double> uniform_angles(int n_angles) {
  if (n_angles <= 0) throw ParameterError("angle count must be positive");
  std::vector<double> a(n_angles);
  for (int k = 0; k < n_angles; ++k) a[k] = std::numbers::pi * k / n_angles;
  return a;
}

ProjectionStack stack_from_images(Domain domain, std::vector<double> angles, const std::vector<Image>& images) {
  if (images.empty() || images.size() != angles.size()) throw ShapeError("need one image per angle");
  const int n_det = images.front().width;
  const int n_rows = images.front().height;
  std::vector<double> v;
  v.reserve(images.size() * images.front().size());
  for (const auto& img : images) {
    if (img.width != n_det || img.height != n_rows || img.depth != 1) throw ShapeError("projection images differ in shape");
    v.insert(v.end(), img.values.begin(), img.values.end());
  }
  return ProjectionStack(domain, std::move(angles), n_det, n_rows, std::move(v));
}

void AcquisitionScheme::validate() const {
  if (b0_per_angle.empty()) throw ParameterError("scheme has no angles");
  if (!(b0_low > 0.0) || !(b0_normal >= b0_low)) throw ParameterError("scheme requires b0_normal >= b0_low > 0");
  for (std::size_t i = 0; i < normal_indices.size(); ++i) {
    if (normal_indices[i] < 0 || normal_indices[i] >= n_angles()) throw ParameterError("normal index out of range");
    if (i > 0 && normal_indices[i] <= normal_indices[i - 1]) throw ParameterError("normal indices must be sorted");
  }
  for (int a = 0; a < n_angles(); ++a) {
    const bool normal = std::binary_search(normal_indices.begin(), normal_indices.end(), a);
    if (b0_per_angle[a] != (normal ? b0_normal : b0_low)) throw ParameterError("b0 entry inconsistent with normal indices");
  }
}

QualityReport QualityReport::from_items(std::vector<QualityItem> items) {
  QualityReport r;
  r.per_item = std::move(items);
  if (r.per_item.empty()) return r;
  const double n = static_cast<double>(r.per_item.size());
  for (const auto& it : r.per_item) {
    r.mean_ssim += it.ssim;
    r.mean_psnr += it.psnr;
  }
  r.mean_ssim /= n;
  r.mean_psnr /= n;
  for (const auto& it : r.per_item) {
    r.std_ssim += (it.ssim - r.mean_ssim) * (it.ssim - r.mean_ssim);
    r.std_psnr += (it.psnr - r.mean_psnr) * (it.psnr - r.mean_psnr);
  }
  r.std_ssim = std::sqrt(r.std_ssim / n);
  r.std_psnr = std::sqrt(r.std_psnr / n);
  return r;
}

}  // namespace hdrec

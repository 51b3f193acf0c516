#include "hdrec/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "hdrec/error.hpp"

namespace hdrec {

namespace {

void check_pair(const Image& a, const Image& b, double data_range) {
  if (a.width != b.width || a.height != b.height || a.depth != b.depth) throw ShapeError("image shapes differ");
  if (a.depth != 1) throw ShapeError("metric expects single-slice images");
  if (!(data_range > 0.0)) throw ParameterError("data_range must be positive");
}

std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> k(window);
  const double c = (window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// separable "valid" filtering
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow), out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += k[t] * src[static_cast<std::size_t>(y) * w + x + t];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += k[t] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

Image ssim_map(const Image& a, const Image& b, double data_range, const SsimOptions& o) {
  check_pair(a, b, data_range);
  if (a.width < o.window || a.height < o.window) {
    throw ShapeError("image " + std::to_string(a.width) + "x" + std::to_string(a.height) + " is smaller than the " +
                     std::to_string(o.window) + "-pixel SSIM window");
  }
  const auto k = gaussian_kernel(o.window, o.sigma);
  const int w = a.width, h = a.height;
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a.values[i] * a.values[i];
    bb[i] = b.values[i] * b.values[i];
    ab[i] = a.values[i] * b.values[i];
  }
  const auto mu_a = filter_valid(a.values, w, h, k);
  const auto mu_b = filter_valid(b.values, w, h, k);
  const auto e_aa = filter_valid(aa, w, h, k);
  const auto e_bb = filter_valid(bb, w, h, k);
  const auto e_ab = filter_valid(ab, w, h, k);
  const double c1 = (o.k1 * data_range) * (o.k1 * data_range);
  const double c2 = (o.k2 * data_range) * (o.k2 * data_range);
  Image map(w - o.window + 1, h - o.window + 1, 1, 0.0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    map.values[i] = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                    ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  return map;
}

double ssim(const Image& a, const Image& b, double data_range, const SsimOptions& options) {
  const Image map = ssim_map(a, b, data_range, options);
  double s = 0.0;
  for (double v : map.values) s += v;
  return s / static_cast<double>(map.size());
}

double ssim_inscribed(const Image& a, const Image& b, double data_range, const SsimOptions& options) {
  const Image map = ssim_map(a, b, data_range, options);
  const double cx = a.width / 2.0, cy = a.height / 2.0;
  const double r = std::min(a.width, a.height) / 2.0;
  const int off = options.window / 2;
  double s = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const double dx = x + off + 0.5 - cx, dy = y + off + 0.5 - cy;
      if (dx * dx + dy * dy < r * r) {
        s += map.at(x, y);
        ++n;
      }
    }
  }
  if (n == 0) throw ShapeError("no SSIM window centre inside the inscribed circle");
  return s / static_cast<double>(n);
}

double psnr(const Image& a, const Image& b, double data_range) {
  check_pair(a, b, data_range);
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return 20.0 * std::log10(data_range) - 10.0 * std::log10(mse);
}

double dynamic_range(const Image& reference) {
  const auto [lo, hi] = std::minmax_element(reference.values.begin(), reference.values.end());
  return *hi - *lo;
}

QualityReport stack_report(const ProjectionStack& a, const ProjectionStack& b, double data_range) {
  if (a.n_angles() != b.n_angles() || a.n_det() != b.n_det() || a.n_rows() != b.n_rows()) {
    throw ShapeError("stack_report: stacks differ in dimensions");
  }
  std::vector<QualityItem> items;
  items.reserve(a.n_angles());
  for (int k = 0; k < a.n_angles(); ++k) {
    const Image pa = a.projection_image(k), pb = b.projection_image(k);
    items.push_back({k, ssim(pa, pb, data_range), psnr(pa, pb, data_range)});
  }
  return QualityReport::from_items(std::move(items));
}

QualityReport volume_report(const Image& reconstruction, const Image& reference, std::vector<int> slices) {
  if (reconstruction.width != reference.width || reconstruction.height != reference.height ||
      reconstruction.depth != reference.depth) {
    throw ShapeError("volume_report: volumes differ in shape");
  }
  if (slices.empty()) {
    for (int z = 0; z < reference.depth; ++z) slices.push_back(z);
  }
  std::vector<QualityItem> items;
  for (int z : slices) {
    if (z < 0 || z >= reference.depth) throw ShapeError("slice index out of range");
    const Image r = reference.slice_image(z), x = reconstruction.slice_image(z);
    double range = dynamic_range(r);
    if (!(range > 0.0)) range = 1.0;
    items.push_back({z, ssim_inscribed(x, r, range), psnr(x, r, range)});
  }
  return QualityReport::from_items(std::move(items));
}

}  // namespace hdrec

#include "hdrec/recon.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <numeric>

#include "hdrec/error.hpp"

namespace hdrec {

namespace {

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

/// Ramp-filters rows in place: zero-pad, r2c, multiply by the response, c2r.
class RowFilter {
 public:
  RowFilter(int n_det, FilterKind kind)
      : n_det_(n_det),
        padded_(fbp_padded_length(n_det)),
        response_(fbp_filter_response(padded_, kind)),
        real_(static_cast<std::size_t>(padded_)),
        spectrum_(static_cast<std::size_t>(padded_ / 2 + 1)) {
    auto* cplx = reinterpret_cast<fftw_complex*>(spectrum_.data());
    forward_.reset(fftw_plan_dft_r2c_1d(padded_, real_.data(), cplx, FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_c2r_1d(padded_, cplx, real_.data(), FFTW_ESTIMATE));
  }

  void apply(std::span<const double> row, std::span<double> out) {
    std::fill(real_.begin(), real_.end(), 0.0);
    std::copy(row.begin(), row.end(), real_.begin());
    fftw_execute(forward_.get());
    for (std::size_t k = 0; k < spectrum_.size(); ++k) spectrum_[k] *= response_[k];
    fftw_execute(inverse_.get());
    for (int d = 0; d < n_det_; ++d) out[d] = real_[d] / padded_;
  }

 private:
  int n_det_;
  int padded_;
  std::vector<double> response_;
  std::vector<double> real_;
  std::vector<std::complex<double>> spectrum_;
  FftwPlan forward_;
  FftwPlan inverse_;
};

void backproject(std::span<const double> angles, std::span<const double> filtered, int n_det, Image& out, int z) {
  const int size = out.width;
  const double half = size / 2.0;
  const double det_center = n_det / 2.0 - 0.5;
  std::vector<std::size_t> order(angles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return angles[a] < angles[b]; });

  auto slice = out.slice(z);
  std::fill(slice.begin(), slice.end(), 0.0);
  for (std::size_t a : order) {
    const double c = std::cos(angles[a]), s = std::sin(angles[a]);
    const double* row = filtered.data() + a * n_det;
    for (int j = 0; j < size; ++j) {
      const double y = j + 0.5 - half;
      for (int i = 0; i < size; ++i) {
        const double u = (i + 0.5 - half) * c + y * s + det_center;
        const double fl = std::floor(u);
        const int k = static_cast<int>(fl);
        const double w = u - fl;
        double v = 0.0;
        if (k >= 0 && k < n_det) v += (1.0 - w) * row[k];
        if (k + 1 >= 0 && k + 1 < n_det) v += w * row[k + 1];
        slice[static_cast<std::size_t>(j) * size + i] += v;
      }
    }
  }
  const double scale = std::numbers::pi / static_cast<double>(angles.size());
  for (double& v : slice) v *= scale;
}

}  // namespace

double parzen(double f) {
  const double q = std::abs(f);
  if (q <= 0.5) return 1.0 - 6.0 * q * q + 6.0 * q * q * q;
  if (q <= 1.0) return 2.0 * (1.0 - q) * (1.0 - q) * (1.0 - q);
  return 0.0;
}

std::vector<double> parzen_window(int n) {
  if (n < 2) throw ParameterError("parzen_window needs n >= 2");
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) w[k] = parzen(static_cast<double>(k) / (n - 1));
  return w;
}

int fbp_padded_length(int n_det) {
  int n = 1;
  while (n < 2 * n_det) n *= 2;
  return n;
}

std::vector<double> fbp_filter_response(int padded_length, FilterKind filter) {
  const int n = padded_length;
  std::vector<double> h(n, 0.0);
  for (int k = 0; k < n; ++k) {
    const int m = k <= n / 2 ? k : k - n;
    if (m == 0) {
      h[k] = 0.25;
    } else if (m % 2 != 0) {
      h[k] = -1.0 / (std::numbers::pi * std::numbers::pi * m * m);
    }
  }
  std::vector<std::complex<double>> spec(n / 2 + 1);
  FftwPlan plan(fftw_plan_dft_r2c_1d(n, h.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE));
  fftw_execute(plan.get());
  std::vector<double> response(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    // the kernel is even, so the spectrum is real
    response[k] = spec[k].real();
    if (filter == FilterKind::Parzen) response[k] *= parzen(static_cast<double>(k) / (n / 2));
  }
  return response;
}

Image fbp_rows(std::span<const double> angles, std::span<const double> rows, int n_det, int size, FilterKind filter) {
  if (angles.empty() || rows.size() != angles.size() * static_cast<std::size_t>(n_det)) {
    throw ShapeError("fbp_rows: row data does not match angle count");
  }
  if (size <= 0) throw ShapeError("reconstruction size must be positive");
  RowFilter rf(n_det, filter);
  std::vector<double> filtered(rows.size());
  for (std::size_t a = 0; a < angles.size(); ++a) {
    rf.apply(rows.subspan(a * n_det, n_det), {filtered.data() + a * n_det, static_cast<std::size_t>(n_det)});
  }
  Image out(size, size, 1, 0.0);
  backproject(angles, filtered, n_det, out, 0);
  return out;
}

Image fbp_reconstruct(const ProjectionStack& sinogram, int size, FilterKind filter) {
  if (sinogram.domain() != Domain::LineIntegral) throw DomainError("fbp_reconstruct expects a LineIntegral stack");
  if (size <= 0) throw ShapeError("reconstruction size must be positive");
  const int n_det = sinogram.n_det();
  RowFilter rf(n_det, filter);
  Image out(size, size, sinogram.n_rows(), 0.0);
  std::vector<double> filtered(static_cast<std::size_t>(sinogram.n_angles()) * n_det);
  for (int z = 0; z < sinogram.n_rows(); ++z) {
    for (int a = 0; a < sinogram.n_angles(); ++a) {
      rf.apply(sinogram.projection(a).subspan(static_cast<std::size_t>(z) * n_det, n_det),
               {filtered.data() + static_cast<std::size_t>(a) * n_det, static_cast<std::size_t>(n_det)});
    }
    backproject(sinogram.angles(), filtered, n_det, out, z);
  }
  return out;
}

void ReconConfig::validate() const {
  if (tv_iterations < 1) throw ParameterError("tv_iterations must be >= 1");
  if (!(tv_weight >= 0.0)) throw ParameterError("tv_weight must be >= 0");
  if (!(tv_step > 0.0)) throw ParameterError("tv_step must be > 0");
  if (sirt_sweeps_per_iter < 1) throw ParameterError("sirt_sweeps_per_iter must be >= 1");
}

double total_variation(std::span<const double> x, int size, double eps) {
  double tv = 0.0;
  for (int j = 0; j < size; ++j) {
    for (int i = 0; i < size; ++i) {
      const double v = x[j * size + i];
      const double gx = i + 1 < size ? x[j * size + i + 1] - v : 0.0;
      const double gy = j + 1 < size ? x[(j + 1) * size + i] - v : 0.0;
      tv += std::sqrt(gx * gx + gy * gy + eps);
    }
  }
  return tv;
}

std::vector<double> total_variation_gradient(std::span<const double> x, int size, double eps) {
  const std::size_t n = static_cast<std::size_t>(size) * size;
  std::vector<double> gx(n), gy(n), norm(n), grad(n, 0.0);
  for (int j = 0; j < size; ++j) {
    for (int i = 0; i < size; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * size + i;
      gx[p] = i + 1 < size ? x[p + 1] - x[p] : 0.0;
      gy[p] = j + 1 < size ? x[p + size] - x[p] : 0.0;
      norm[p] = std::sqrt(gx[p] * gx[p] + gy[p] * gy[p] + eps);
    }
  }
  for (int j = 0; j < size; ++j) {
    for (int i = 0; i < size; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * size + i;
      double g = 0.0;
      if (i + 1 < size) g -= gx[p] / norm[p];
      if (j + 1 < size) g -= gy[p] / norm[p];
      if (i > 0) g += gx[p - 1] / norm[p - 1];
      if (j > 0) g += gy[p - size] / norm[p - size];
      grad[p] = g;
    }
  }
  return grad;
}

namespace {

struct SirtWeights {
  std::vector<double> inv_row;
  std::vector<double> inv_col;

  explicit SirtWeights(const SystemMatrix& a) : inv_row(a.row_sums()), inv_col(a.col_sums()) {
    for (double& v : inv_row) v = v > 0.0 ? 1.0 / v : 0.0;
    for (double& v : inv_col) v = v > 0.0 ? 1.0 / v : 0.0;
  }
};

void sirt_update(const SystemMatrix& a, const SirtWeights& w, std::span<double> x, std::span<const double> p,
                 std::vector<double>& ray_buf, std::vector<double>& pix_buf) {
  a.forward(x, ray_buf);
  for (std::size_t r = 0; r < ray_buf.size(); ++r) ray_buf[r] = w.inv_row[r] * (p[r] - ray_buf[r]);
  a.back(ray_buf, pix_buf);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += w.inv_col[k] * pix_buf[k];
}

double residual_norm_sq(const SystemMatrix& a, std::span<const double> x, std::span<const double> p,
                        std::vector<double>& ray_buf) {
  a.forward(x, ray_buf);
  double s = 0.0;
  for (std::size_t r = 0; r < ray_buf.size(); ++r) s += (ray_buf[r] - p[r]) * (ray_buf[r] - p[r]);
  return s;
}

}  // namespace

std::vector<double> sirt_step(const SystemMatrix& a, std::span<const double> x, std::span<const double> p) {
  if (x.size() != static_cast<std::size_t>(a.cols()) || p.size() != static_cast<std::size_t>(a.rows())) {
    throw ShapeError("sirt_step: dimensions do not match the system matrix");
  }
  const SirtWeights w(a);
  std::vector<double> out(x.begin(), x.end()), ray(a.rows()), pix(a.cols());
  sirt_update(a, w, out, p, ray, pix);
  return out;
}

TvResult tv_reconstruct(const ProjectionStack& sinogram, int size, const ReconConfig& config) {
  if (sinogram.domain() != Domain::LineIntegral) throw DomainError("tv_reconstruct expects a LineIntegral stack");
  if (config.method != ReconMethod::Tv) throw ParameterError("tv_reconstruct requires method TV");
  config.validate();

  const SystemMatrix a(Geometry{sinogram.n_det(), sinogram.angles()}, size);
  const SirtWeights w(a);
  const int n_slices = sinogram.n_rows();
  std::vector<std::vector<double>> sinos;
  for (int z = 0; z < n_slices; ++z) sinos.push_back(sinogram.sinogram(z).values());

  TvResult result{Image(size, size, n_slices, 0.0), {}, false};
  std::vector<double> ray(a.rows()), pix(a.cols());
  double previous = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 1; it <= config.tv_iterations; ++it) {
    double res_sq = 0.0, tv = 0.0;
    for (int z = 0; z < n_slices; ++z) {
      auto x = result.image.slice(z);
      for (int s = 0; s < config.sirt_sweeps_per_iter; ++s) sirt_update(a, w, x, sinos[z], ray, pix);
      if (config.tv_weight > 0.0) {
        const auto g = total_variation_gradient(x, size);
        // the TV gradient is unitless; scaling by the slice peak keeps tv_step dimensionless
        const double peak = *std::max_element(x.begin(), x.end());
        const double step = config.tv_step * config.tv_weight * std::max(peak, 0.0);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] -= step * g[k];
      }
      for (double& v : x) v = std::max(v, 0.0);
      res_sq += residual_norm_sq(a, x, sinos[z], ray);
      tv += total_variation(x, size);
    }
    const double residual = std::sqrt(res_sq);
    result.log.push_back({it, residual, tv});
    growth = residual > previous ? growth + 1 : 0;
    previous = residual;
    if (growth >= 3) {
      result.diverged = true;
      break;
    }
  }
  return result;
}

Image reconstruct(const ProjectionStack& sinogram, int size, const ReconConfig& config) {
  switch (config.method) {
    case ReconMethod::FbpRamp:
      return fbp_reconstruct(sinogram, size, FilterKind::Ramp);
    case ReconMethod::FbpParzen:
      return fbp_reconstruct(sinogram, size, FilterKind::Parzen);
    case ReconMethod::Tv:
      return tv_reconstruct(sinogram, size, config).image;
  }
  throw ParameterError("unknown reconstruction method");
}

}  // namespace hdrec

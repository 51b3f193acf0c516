#include "hdrec/forward.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "hdrec/error.hpp"

namespace hdrec {

void Geometry::validate() const {
  if (n_det <= 0) throw ParameterError("detector count must be positive");
  if (angles.empty()) throw ParameterError("geometry needs at least one angle");
  for (std::size_t i = 1; i < angles.size(); ++i) {
    if (!(angles[i] > angles[i - 1])) throw ParameterError("angles must be strictly increasing");
  }
}

Geometry Geometry::parallel(int n_angles, int n_det) { return Geometry{n_det, uniform_angles(n_angles)}; }

int covering_detector_count(int width) {
  const int n = static_cast<int>(std::ceil(width * std::sqrt(2.0)));
  return (n + 7) / 8 * 8;
}

std::optional<std::string> coverage_warning(const Geometry& geometry, int width) {
  if (geometry.n_det < width * std::sqrt(2.0)) {
    return "detector (" + std::to_string(geometry.n_det) + " bins) does not cover the " + std::to_string(width) +
           "-pixel image diagonal";
  }
  return std::nullopt;
}

void trace_ray(int size, double angle, double offset, const std::function<void(int, double)>& visit) {
  const double half = size / 2.0;
  const double c = std::cos(angle), s = std::sin(angle);
  const double ox = offset * c, oy = offset * s;
  const double dx = -s, dy = c;
  constexpr double kParallel = 1e-15;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  auto slab = [&](double o, double d, double& lo, double& hi) {
    if (std::abs(d) < kParallel) {
      if (!(o > -half && o < half)) return false;
      lo = -kInf;
      hi = kInf;
      return true;
    }
    const double a = (-half - o) / d, b = (half - o) / d;
    lo = std::min(a, b);
    hi = std::max(a, b);
    return true;
  };
  double xlo, xhi, ylo, yhi;
  if (!slab(ox, dx, xlo, xhi) || !slab(oy, dy, ylo, yhi)) return;
  const double enter = std::max(xlo, ylo), exit = std::min(xhi, yhi);
  if (!(exit > enter)) return;

  // plane crossings strictly inside (enter, exit), each list monotone in s
  std::vector<double> xs, ys;
  auto crossings = [&](double o, double d, std::vector<double>& out) {
    if (std::abs(d) < kParallel) return;
    out.reserve(size + 1);
    for (int k = 0; k <= size; ++k) {
      const double t = (k - half - o) / d;
      if (t > enter && t < exit) out.push_back(t);
    }
    if (d < 0) std::reverse(out.begin(), out.end());
  };
  crossings(ox, dx, xs);
  crossings(oy, dy, ys);

  std::vector<double> params;
  params.reserve(xs.size() + ys.size() + 2);
  params.push_back(enter);
  std::merge(xs.begin(), xs.end(), ys.begin(), ys.end(), std::back_inserter(params));
  params.push_back(exit);

  for (std::size_t k = 0; k + 1 < params.size(); ++k) {
    const double len = params[k + 1] - params[k];
    if (!(len > 0.0)) continue;
    const double mid = 0.5 * (params[k] + params[k + 1]);
    const int i = std::clamp(static_cast<int>(std::floor(ox + mid * dx + half)), 0, size - 1);
    const int j = std::clamp(static_cast<int>(std::floor(oy + mid * dy + half)), 0, size - 1);
    visit(j * size + i, len);
  }
}

SystemMatrix::SystemMatrix(const Geometry& geometry, int size) : size_(size) {
  geometry.validate();
  if (size <= 0) throw ShapeError("system matrix size must be positive");
  row_ptr_.reserve(static_cast<std::size_t>(geometry.n_angles()) * geometry.n_det + 1);
  row_ptr_.push_back(0);
  for (double angle : geometry.angles) {
    for (int d = 0; d < geometry.n_det; ++d) {
      const double offset = d + 0.5 - geometry.n_det / 2.0;
      trace_ray(size, angle, offset, [&](int pixel, double len) {
        cols_.push_back(pixel);
        values_.push_back(len);
      });
      row_ptr_.push_back(static_cast<std::int64_t>(values_.size()));
    }
  }
}

void SystemMatrix::forward(std::span<const double> x, std::span<double> y) const {
  for (int r = 0; r < rows(); ++r) {
    double acc = 0.0;
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * x[cols_[k]];
    y[r] = acc;
  }
}

void SystemMatrix::back(std::span<const double> y, std::span<double> x) const {
  std::fill(x.begin(), x.end(), 0.0);
  for (int r = 0; r < rows(); ++r) {
    const double v = y[r];
    if (v == 0.0) continue;
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) x[cols_[k]] += values_[k] * v;
  }
}

std::vector<double> SystemMatrix::row_sums() const {
  std::vector<double> s(rows(), 0.0);
  for (int r = 0; r < rows(); ++r) {
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s[r] += values_[k];
  }
  return s;
}

std::vector<double> SystemMatrix::col_sums() const {
  std::vector<double> s(cols(), 0.0);
  for (std::size_t k = 0; k < values_.size(); ++k) s[cols_[k]] += values_[k];
  return s;
}

std::span<const int> SystemMatrix::row_columns(int row) const {
  return {cols_.data() + row_ptr_[row], static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

std::span<const double> SystemMatrix::row_values(int row) const {
  return {values_.data() + row_ptr_[row], static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

ProjectionStack siddon_project(const Phantom& phantom, const Geometry& geometry) {
  geometry.validate();
  if (phantom.width() != phantom.height()) throw ShapeError("siddon_project requires a square phantom");
  if (auto w = coverage_warning(geometry, phantom.width())) std::clog << "warning: " << *w << "\n";

  const int size = phantom.width();
  const int depth = phantom.depth();
  const int n_det = geometry.n_det;
  const Image& img = phantom.image();
  std::vector<double> out(static_cast<std::size_t>(geometry.n_angles()) * depth * n_det, 0.0);

  // one angle at a time: trace each ray once, apply it to every slice
  for (int a = 0; a < geometry.n_angles(); ++a) {
    Geometry one{n_det, {geometry.angles[a]}};
    const SystemMatrix rows(one, size);
    for (int z = 0; z < depth; ++z) {
      auto slice = img.slice(z);
      double* dst = out.data() + (static_cast<std::size_t>(a) * depth + z) * n_det;
      rows.forward(slice, {dst, static_cast<std::size_t>(n_det)});
    }
  }
  return ProjectionStack(Domain::LineIntegral, geometry.angles, n_det, depth, std::move(out));
}

ProjectionStack beer_transmit(const ProjectionStack& line_integrals) {
  if (line_integrals.domain() != Domain::LineIntegral) throw DomainError("beer_transmit expects a LineIntegral stack");
  std::vector<double> v = line_integrals.values();
  for (double& x : v) x = std::exp(-x);
  return line_integrals.with_values(Domain::Transmission, std::move(v));
}

ProjectionStack log_normalize(const ProjectionStack& transmission, double floor) {
  if (!(floor > 0.0)) throw ParameterError("log_normalize floor must be positive");
  if (transmission.domain() != Domain::Transmission) throw DomainError("log_normalize expects a Transmission stack");
  std::vector<double> v = transmission.values();
  // over-unity noise excursions would give negative line integrals
  for (double& x : v) x = std::max(0.0, -std::log(std::max(x, floor)));
  return transmission.with_values(Domain::LineIntegral, std::move(v));
}

}  // namespace hdrec

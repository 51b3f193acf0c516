#include "hdrec/dose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "hdrec/error.hpp"
#include "hdrec/rng.hpp"

namespace hdrec {

namespace {

ProjectionStack simulate(const ProjectionStack& clean, double b0, std::uint64_t seed, Stream stream) {
  if (clean.domain() != Domain::Transmission) throw DomainError("dose simulation expects a Transmission stack");
  if (!(b0 > 0.0) || !std::isfinite(b0)) throw ParameterError("b0 must be positive");
  const Philox4x32 gen(seed);
  const auto per = static_cast<std::uint32_t>(clean.projection_size());
  std::vector<double> out(clean.values().size());
  for (int a = 0; a < clean.n_angles(); ++a) {
    auto src = clean.projection(a);
    double* dst = out.data() + static_cast<std::size_t>(a) * per;
    for (std::uint32_t p = 0; p < per; ++p) {
      const auto u = gen.uniform_pair({p, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(stream), 0u});
      dst[p] = poisson_deviate(b0 * src[p], u[0], u[1]) / b0;
    }
  }
  return clean.with_values(Domain::Transmission, std::move(out));
}

}  // namespace

double poisson_deviate(double lambda, double u1, double u2) {
  if (!(lambda > 0.0)) return 0.0;
  if (lambda < 30.0) {
    double p = std::exp(-lambda);
    double cdf = p;
    int k = 0;
    while (u1 > cdf && p > 0.0) {
      ++k;
      p *= lambda / k;
      cdf += p;
    }
    return k;
  }
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return std::max(0.0, std::round(lambda + std::sqrt(lambda) * z));
}

ProjectionStack simulate_low_dose(const ProjectionStack& clean, double b0, std::uint64_t seed) {
  return simulate(clean, b0, seed, Stream::LowDose);
}

AcquisitionScheme build_hybrid_scheme(int n_angles, int n_pairs, double b0_normal, double b0_low) {
  if (n_angles <= 0) throw ParameterError("angle count must be positive");
  if (n_pairs < 0 || n_pairs > n_angles) {
    throw ParameterError("pair count " + std::to_string(n_pairs) + " outside [0, " + std::to_string(n_angles) + "]");
  }
  if (!(b0_low > 0.0) || !(b0_normal >= b0_low)) throw ParameterError("need b0_normal >= b0_low > 0");
  AcquisitionScheme s;
  s.b0_normal = b0_normal;
  s.b0_low = b0_low;
  s.b0_per_angle.assign(n_angles, b0_low);
  for (int k = 0; k < n_pairs; ++k) {
    const int idx = static_cast<int>(static_cast<long long>(k) * n_angles / n_pairs);
    s.normal_indices.push_back(idx);
    s.b0_per_angle[idx] = b0_normal;
  }
  return s;
}

AcquisitionScheme build_uniform_scheme(int n_angles, double b0) {
  if (n_angles <= 0) throw ParameterError("angle count must be positive");
  if (!(b0 > 0.0)) throw ParameterError("b0 must be positive");
  AcquisitionScheme s;
  s.b0_normal = b0;
  s.b0_low = b0;
  s.b0_per_angle.assign(n_angles, b0);
  return s;
}

DoseBudget total_photons(const AcquisitionScheme& scheme) {
  return {std::accumulate(scheme.b0_per_angle.begin(), scheme.b0_per_angle.end(), 0.0)};
}

DoseBudget delivered_photons(const AcquisitionScheme& scheme) {
  return {total_photons(scheme).total_photons + static_cast<double>(scheme.normal_indices.size()) * scheme.b0_low};
}

double uniform_equivalent_b0(const DoseBudget& budget, int n_angles) {
  if (n_angles <= 0) throw ParameterError("angle count must be positive");
  return budget.total_photons / n_angles;
}

HybridAcquisition simulate_hybrid_acquisition(const ProjectionStack& clean, const AcquisitionScheme& scheme,
                                              std::uint64_t seed, bool renoise_normal) {
  scheme.validate();
  if (scheme.n_angles() != clean.n_angles()) {
    throw ParameterError("scheme has " + std::to_string(scheme.n_angles()) + " angles, stack has " +
                         std::to_string(clean.n_angles()));
  }
  HybridAcquisition acq{{}, simulate(clean, scheme.b0_low, seed, Stream::LowDose)};
  std::optional<ProjectionStack> normal;
  if (renoise_normal) normal = simulate(clean, scheme.b0_normal, seed, Stream::NormalDose);
  for (int idx : scheme.normal_indices) {
    acq.pairs.push_back({idx, clean.angles()[idx], acq.low_full.projection_image(idx),
                         normal ? normal->projection_image(idx) : clean.projection_image(idx)});
  }
  return acq;
}

std::pair<ProjectionStack, ProjectionStack> pairs_to_stacks(const std::vector<ProjectionPair>& pairs) {
  if (pairs.empty()) throw ParameterError("no projection pairs");
  std::vector<double> angles;
  std::vector<Image> low, normal;
  for (const auto& p : pairs) {
    angles.push_back(p.angle);
    low.push_back(p.low);
    normal.push_back(p.normal);
  }
  return {stack_from_images(Domain::Transmission, angles, low), stack_from_images(Domain::Transmission, angles, normal)};
}

std::vector<ProjectionPair> pairs_from_stacks(const ProjectionStack& low, const ProjectionStack& normal) {
  if (low.angles() != normal.angles() || low.n_det() != normal.n_det() || low.n_rows() != normal.n_rows()) {
    throw ShapeError("low/normal pair stacks disagree in shape or angles");
  }
  std::vector<ProjectionPair> pairs;
  for (int a = 0; a < low.n_angles(); ++a) {
    pairs.push_back({a, low.angles()[a], low.projection_image(a), normal.projection_image(a)});
  }
  return pairs;
}

}  // namespace hdrec

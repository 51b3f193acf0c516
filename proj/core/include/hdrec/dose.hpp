#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hdrec/types.hpp"

namespace hdrec {

/// Photons per detector pixel summed over all projections of a scheme.
struct DoseBudget {
  double total_photons = 0.0;
};

/// Poisson deviate with mean `lambda` from two uniforms in (0, 1): inversion
/// below 30, rounded normal approximation (Box-Muller) from 30 up.
double poisson_deviate(double lambda, double u1, double u2);

/// Low-dose realization of a noiseless transmission stack:
/// v -> Poisson(b0 v) / b0, independent per pixel, keyed by (seed, angle, pixel).
/// Values are not clamped here; write_stack applies the transmission ceiling.
ProjectionStack simulate_low_dose(const ProjectionStack& clean, double b0, std::uint64_t seed);

/// Hybrid scheme: angles floor(k n_angles / n_pairs), k < n_pairs, receive
/// b0_normal; all others b0_low. n_pairs = 0 is the all-low scheme.
AcquisitionScheme build_hybrid_scheme(int n_angles, int n_pairs, double b0_normal, double b0_low);

/// Every angle at the same (possibly fractional) b0.
AcquisitionScheme build_uniform_scheme(int n_angles, double b0);

DoseBudget total_photons(const AcquisitionScheme& scheme);

/// total_photons plus the extra low-dose exposure taken at every paired angle.
DoseBudget delivered_photons(const AcquisitionScheme& scheme);

double uniform_equivalent_b0(const DoseBudget& budget, int n_angles);

struct ProjectionPair {
  int angle_index = 0;
  double angle = 0.0;
  Image low;
  Image normal;
};

struct HybridAcquisition {
  std::vector<ProjectionPair> pairs;
  ProjectionStack low_full;
};

/// Simulates the full-view low-dose stack at b0_low and extracts the training
/// pairs at the scheme's normal angles. The low member of a pair is the very
/// same realization that sits in `low_full`. The normal member is the clean
/// projection unless `renoise_normal` is set, in which case it is a separate
/// Poisson realization at b0_normal.
HybridAcquisition simulate_hybrid_acquisition(const ProjectionStack& clean, const AcquisitionScheme& scheme,
                                              std::uint64_t seed, bool renoise_normal = false);

/// Pairs packed as two stacks over the paired angles (low, normal).
std::pair<ProjectionStack, ProjectionStack> pairs_to_stacks(const std::vector<ProjectionPair>& pairs);
std::vector<ProjectionPair> pairs_from_stacks(const ProjectionStack& low, const ProjectionStack& normal);

}  // namespace hdrec

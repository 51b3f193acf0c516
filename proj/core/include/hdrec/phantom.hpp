#pragma once

#include <cstdint>

#include "hdrec/types.hpp"

namespace hdrec {

/// Glass-bead style sample: a uniform matrix on the inscribed circle with
/// non-overlapping disks of higher attenuation. With depth > 1 the matrix is
/// the inscribed cylinder and the inclusions are spheres, so every slice is a
/// disk pack and neighbouring slices are correlated.
///
/// Radii are drawn from [0.08, 0.2] of the inscribed radius. Placement uses
/// rejection sampling with at most 10 * n_disks attempts; running out throws
/// PlacementError carrying the number actually placed.
Phantom make_disk_pack_phantom(int width, int height, int n_disks, double mu_matrix, double mu_disk,
                               std::uint64_t seed, int depth = 1);

/// Ten-ellipse (modified) Shepp-Logan phantom, square, peak attenuation 0.02.
Phantom make_shepp_logan(int width);

/// Unscaled Shepp-Logan intensity at normalized coordinates in [-1, 1]^2 (y up).
double shepp_logan_intensity(double x, double y);

}  // namespace hdrec

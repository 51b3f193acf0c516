#include "hdrec/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "hdrec/error.hpp"
#include "hdrec/rng.hpp"

namespace hdrec {

namespace {

struct Inclusion {
  double x, y, z, r;
};

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

// Toft's modified intensities, which keep the soft-tissue ellipses visible.
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

constexpr double kSheppLoganPeak = 0.02;

}  // namespace

Phantom make_disk_pack_phantom(int width, int height, int n_disks, double mu_matrix, double mu_disk,
                               std::uint64_t seed, int depth) {
  if (n_disks < 0) throw ParameterError("disk count must be non-negative");
  if (!(mu_matrix >= 0.0) || !(mu_disk >= 0.0)) throw ParameterError("attenuation values must be non-negative");
  if (width < 8 || height < 8 || depth < 1) throw ShapeError("phantom must be at least 8x8");

  const double cx = width / 2.0;
  const double cy = height / 2.0;
  const double big_r = std::min(width, height) / 2.0;

  CounterStream rng(seed, Stream::Phantom);
  std::vector<Inclusion> placed;
  const int budget = 10 * n_disks;
  for (int attempt = 0; attempt < budget && static_cast<int>(placed.size()) < n_disks; ++attempt) {
    const double r = big_r * (0.08 + 0.12 * rng.uniform());
    // uniform over the disk of radius big_r - r
    const double rho = (big_r - r) * std::sqrt(rng.uniform());
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    const double z = depth > 1 ? depth * rng.uniform() : 0.5;
    const Inclusion c{cx + rho * std::cos(theta), cy + rho * std::sin(theta), z, r};
    const bool overlaps = std::any_of(placed.begin(), placed.end(), [&](const Inclusion& o) {
      const double dx = o.x - c.x, dy = o.y - c.y, dz = depth > 1 ? o.z - c.z : 0.0;
      return dx * dx + dy * dy + dz * dz < (o.r + c.r) * (o.r + c.r);
    });
    if (!overlaps) placed.push_back(c);
  }
  if (static_cast<int>(placed.size()) < n_disks) throw PlacementError(static_cast<int>(placed.size()), n_disks);

  Image img(width, height, depth, 0.0);
  for (int z = 0; z < depth; ++z) {
    const double pz = z + 0.5;
    for (int y = 0; y < height; ++y) {
      const double py = y + 0.5;
      for (int x = 0; x < width; ++x) {
        const double px = x + 0.5;
        const double dx = px - cx, dy = py - cy;
        if (dx * dx + dy * dy >= big_r * big_r) continue;
        double mu = mu_matrix;
        for (const auto& c : placed) {
          const double ex = px - c.x, ey = py - c.y, ez = depth > 1 ? pz - c.z : 0.0;
          if (ex * ex + ey * ey + ez * ez < c.r * c.r) {
            mu = mu_disk;
            break;
          }
        }
        img.at(x, y, z) = mu;
      }
    }
  }
  return Phantom(std::move(img));
}

double shepp_logan_intensity(double x, double y) {
  double v = 0.0;
  for (const auto& e : kSheppLogan) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double c = std::cos(phi), s = std::sin(phi);
    const double dx = x - e.x0, dy = y - e.y0;
    const double u = (dx * c + dy * s) / e.a;
    const double w = (-dx * s + dy * c) / e.b;
    if (u * u + w * w <= 1.0) v += e.intensity;
  }
  return v;
}

Phantom make_shepp_logan(int width) {
  if (width < 32) throw ShapeError("Shepp-Logan phantom needs width >= 32");
  Image img(width, width, 1, 0.0);
  double peak = 0.0;
  for (int j = 0; j < width; ++j) {
    const double y = 1.0 - 2.0 * (j + 0.5) / width;
    for (int i = 0; i < width; ++i) {
      const double x = 2.0 * (i + 0.5) / width - 1.0;
      const double v = std::max(0.0, shepp_logan_intensity(x, y));
      img.at(i, j) = v;
      peak = std::max(peak, v);
    }
  }
  const double scale = kSheppLoganPeak / peak;
  for (double& v : img.values) v *= scale;
  return Phantom(std::move(img));
}

}  // namespace hdrec

#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hdrec/types.hpp"

namespace hdrec::test {

/// Fresh, empty scratch directory for one test.
inline std::filesystem::path scratch(const std::string& name) {
  const char* base = std::getenv("HDREC_TEST_TMP");
  const std::filesystem::path root = base ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "hdrec";
  const auto dir = root / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<double> random_values(std::size_t n, unsigned seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

inline Image random_image(int w, int h, unsigned seed, double lo = 0.0, double hi = 1.0) {
  return Image(w, h, 1, random_values(static_cast<std::size_t>(w) * h, seed, lo, hi));
}

/// Values exactly representable in float32, so file round trips are bit-exact.
inline std::vector<double> float_exact_values(std::size_t n, unsigned seed, int denominator = 1024) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> dist(0, denominator);
  std::vector<double> v(n);
  for (double& x : v) x = static_cast<double>(dist(gen)) / denominator;
  return v;
}

}  // namespace hdrec::test

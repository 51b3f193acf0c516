#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hdrec/dose.hpp"
#include "hdrec/nn/denoise.hpp"
#include "hdrec/nn/train.hpp"
#include "hdrec/recon.hpp"
#include "hdrec/types.hpp"

namespace hdrec {

struct PhantomSpec {
  std::string kind = "disk-pack";  // or "shepp-logan"
  int size = 128;
  int depth = 1;
  int n_disks = 12;
  double mu_matrix = 0.005;
  double mu_disk = 0.02;
  std::uint64_t seed = 0;

  Phantom make() const;
};

/// Settings shared by pipeline, sweep and comparison runs beyond the core inputs.
struct ExperimentOptions {
  int n_det = 0;  // 0 picks the covering detector count
  double b0_normal = 5000.0;
  bool renoise_normal = false;
  nn::DenoiserConfig model;
  nn::TileOptions tiles;
  /// Slices to reconstruct and score; empty means every slice.
  std::vector<int> recon_slices;
  std::function<void(const std::string&)> log;
};

struct ManifestEntry {
  std::string stage;
  std::vector<std::string> files;
  std::vector<std::string> sha256;
};

struct Manifest {
  std::vector<ManifestEntry> artifacts;
  std::vector<ManifestEntry> reports;

  void write(const std::filesystem::path& path) const;
  static Manifest read(const std::filesystem::path& path);
};

struct PipelineResult {
  ProjectionStack clean;
  ProjectionStack low;
  ProjectionStack denoised;
  Image reconstruction;
  nn::TrainResult training;
  QualityReport low_report;
  QualityReport denoised_report;
  QualityReport recon_report;
  Manifest manifest;
};

/// project -> transmit -> hybrid-simulate -> train -> denoise -> log-normalize
/// -> reconstruct. With a non-empty `out_dir` every intermediate artifact and
/// report is written there and listed with its SHA-256 in manifest.json.
/// Stage failures are rethrown with the stage name prefixed.
PipelineResult run_pipeline(const Phantom& phantom, const AcquisitionScheme& scheme, const nn::TrainConfig& train_cfg,
                            const ReconConfig& recon_cfg, std::uint64_t seed, const ExperimentOptions& options = {},
                            const std::filesystem::path& out_dir = {});

/// Rows `slices` of every projection (all rows when empty).
ProjectionStack select_rows(const ProjectionStack& stack, const std::vector<int>& slices);
Image select_slices(const Image& volume, const std::vector<int>& slices);

/// FBP/TV reconstruction of selected slices of a transmission stack after
/// log normalization with the count floor of `b0`.
Image reconstruct_transmission(const ProjectionStack& transmission, double b0, int size, const ReconConfig& config,
                               const std::vector<int>& slices);

struct SweepPlan {
  PhantomSpec phantom;
  int n_angles = 360;
  std::vector<int> pair_counts{4, 32, 128, 256};
  std::vector<double> b0_grid{10, 50, 100, 500, 1000};
  nn::TrainConfig train;
  ReconConfig recon;
  ExperimentOptions options;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SweepPoint {
  std::string series;  // "hybrid-<n_pairs>" or "uniform"
  int n_pairs = 0;
  double b0_low = 0.0;
  double total_photons = 0.0;
  double proj_ssim = 0.0;
  double proj_psnr = 0.0;
  double recon_ssim = 0.0;
  bool baseline = false;

  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // sorted by total_photons
  std::vector<std::string> failures;
};

/// One hybrid point per (pair count, b0) and, per b0, one uniform baseline
/// whose budget equals the hybrid point with the first pair count.
SweepResult run_sweep(const SweepPlan& plan);

/// Writes `<stem>.csv` and `<stem>.svg`.
void emit_curves(const std::vector<SweepPoint>& points, const std::filesystem::path& stem);
std::vector<SweepPoint> read_curves_csv(const std::filesystem::path& csv);
std::string curves_svg(const std::vector<SweepPoint>& points);

struct CompareConfig {
  PhantomSpec phantom;
  int n_angles = 360;
  int n_pairs = 4;
  /// Photons per detector pixel delivered over the whole scan.
  double budget = 56000.0;
  nn::TrainConfig train;
  ReconConfig tv;
  ExperimentOptions options;
  std::uint64_t seed = 0;
};

struct CompareReport {
  double budget = 0.0;
  double uniform_b0 = 0.0;
  double hybrid_b0_low = 0.0;
  double uniform_proj_ssim = 0.0;
  double uniform_proj_psnr = 0.0;
  double hybrid_low_proj_ssim = 0.0;
  double denoised_proj_ssim = 0.0;
  double denoised_proj_psnr = 0.0;
  double uniform_fbp_ssim = 0.0;
  double uniform_tv_ssim = 0.0;
  double hybrid_fbp_ssim = 0.0;

  friend bool operator==(const CompareReport&, const CompareReport&) = default;
  std::string to_json() const;
};

/// Low dose of the hybrid arm so that n_angles low exposures plus n_pairs
/// normal exposures spend `budget`. Throws ParameterError when nothing is left.
double hybrid_low_dose(double budget, int n_angles, int n_pairs, double b0_normal);

/// Uniform low dose (FBP and TV) against hybrid-denoised FBP at equal budget.
CompareReport compare_uniform_vs_hybrid(const CompareConfig& config);

}  // namespace hdrec

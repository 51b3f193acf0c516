#include "hdrec/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

#include "hdrec/error.hpp"
#include "hdrec/forward.hpp"
#include "hdrec/hash.hpp"
#include "hdrec/io.hpp"
#include "hdrec/metrics.hpp"
#include "hdrec/nn/checkpoint.hpp"
#include "hdrec/phantom.hpp"
#include "hdrec/rng.hpp"

namespace hdrec {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  }
}

void say(const ExperimentOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

int detector_count(const ExperimentOptions& o, int size) { return o.n_det > 0 ? o.n_det : covering_detector_count(size); }

ProjectionStack clean_transmission(const Phantom& phantom, int n_angles, const ExperimentOptions& o) {
  return beer_transmit(siddon_project(phantom, Geometry::parallel(n_angles, detector_count(o, phantom.width()))));
}

double recon_ssim(const Image& recon, const Phantom& phantom, const std::vector<int>& slices) {
  return volume_report(recon, select_slices(phantom.image(), slices)).mean_ssim;
}

ManifestEntry entry(const fs::path& dir, const std::string& stage_name, std::vector<std::string> files) {
  ManifestEntry e{stage_name, std::move(files), {}};
  for (const auto& f : e.files) e.sha256.push_back(sha256_file(dir / f));
  return e;
}

json to_json(const std::vector<ManifestEntry>& entries) {
  json out = json::array();
  for (const auto& e : entries) out.push_back({{"stage", e.stage}, {"files", e.files}, {"sha256", e.sha256}});
  return out;
}

std::vector<ManifestEntry> from_json(const json& j) {
  std::vector<ManifestEntry> out;
  for (const auto& e : j) {
    out.push_back({e.at("stage").get<std::string>(), e.at("files").get<std::vector<std::string>>(),
                   e.at("sha256").get<std::vector<std::string>>()});
  }
  return out;
}

}  // namespace

Phantom PhantomSpec::make() const {
  if (kind == "disk-pack") return make_disk_pack_phantom(size, size, n_disks, mu_matrix, mu_disk, seed, depth);
  if (kind == "shepp-logan") {
    if (depth != 1) throw ParameterError("shepp-logan phantoms are single-slice");
    return make_shepp_logan(size);
  }
  throw ParameterError("unknown phantom kind '" + kind + "'");
}

void Manifest::write(const fs::path& path) const {
  const json j = {{"format", "hdrec-manifest-1"}, {"artifacts", to_json(artifacts)}, {"reports", to_json(reports)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(ParseError::Kind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Manifest Manifest::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Kind::Io, "cannot open " + path.string());
  try {
    const json j = json::parse(in);
    return {from_json(j.at("artifacts")), from_json(j.at("reports"))};
  } catch (const json::exception& e) {
    throw ParseError(ParseError::Kind::MalformedHeader, path.string() + ": " + e.what());
  }
}

ProjectionStack select_rows(const ProjectionStack& stack, const std::vector<int>& slices) {
  if (slices.empty()) return stack;
  for (int r : slices) {
    if (r < 0 || r >= stack.n_rows()) throw ParameterError("slice " + std::to_string(r) + " out of range");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(stack.n_angles()) * slices.size() * stack.n_det());
  for (int a = 0; a < stack.n_angles(); ++a) {
    for (int r : slices) {
      for (int d = 0; d < stack.n_det(); ++d) values.push_back(stack.at(a, r, d));
    }
  }
  return ProjectionStack(stack.domain(), stack.angles(), stack.n_det(), static_cast<int>(slices.size()),
                         std::move(values));
}

Image select_slices(const Image& volume, const std::vector<int>& slices) {
  if (slices.empty()) return volume;
  Image out(volume.width, volume.height, static_cast<int>(slices.size()));
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (slices[i] < 0 || slices[i] >= volume.depth) throw ParameterError("slice out of range");
    const auto src = volume.slice(slices[i]);
    std::copy(src.begin(), src.end(), out.slice(static_cast<int>(i)).begin());
  }
  return out;
}

Image reconstruct_transmission(const ProjectionStack& transmission, double b0, int size, const ReconConfig& config,
                               const std::vector<int>& slices) {
  return reconstruct(log_normalize(select_rows(transmission, slices), count_floor(b0)), size, config);
}

PipelineResult run_pipeline(const Phantom& phantom, const AcquisitionScheme& scheme, const nn::TrainConfig& train_cfg,
                            const ReconConfig& recon_cfg, std::uint64_t seed, const ExperimentOptions& o,
                            const fs::path& out_dir) {
  scheme.validate();
  recon_cfg.validate();
  const bool persist = !out_dir.empty();
  if (persist) fs::create_directories(out_dir);

  say(o, "project");
  ProjectionStack clean = stage("project", [&] { return clean_transmission(phantom, scheme.n_angles(), o); });
  say(o, "simulate");
  HybridAcquisition acq =
      stage("simulate", [&] { return simulate_hybrid_acquisition(clean, scheme, seed, o.renoise_normal); });
  say(o, "train");
  nn::TrainResult training = stage("train", [&] {
    return nn::train(acq.pairs, o.model, train_cfg, [&](const nn::EpochRecord& r) {
      say(o, "epoch " + std::to_string(r.epoch) + " train " + format_double(r.train.total) + " val " +
                 format_double(r.validation.total));
    });
  });
  say(o, "denoise");
  ProjectionStack denoised = stage("denoise", [&] { return nn::denoise_stack(training.weights, acq.low_full, o.tiles); });
  say(o, "reconstruct");
  Image recon = stage("reconstruct", [&] {
    return reconstruct_transmission(denoised, scheme.b0_low, phantom.width(), recon_cfg, o.recon_slices);
  });

  PipelineResult result{std::move(clean), std::move(acq.low_full), std::move(denoised), std::move(recon),
                        std::move(training), {}, {}, {}, {}};
  stage("metrics", [&] {
    result.low_report = stack_report(result.low, result.clean, 1.0);
    result.denoised_report = stack_report(result.denoised, result.clean, 1.0);
    result.recon_report = volume_report(result.reconstruction, select_slices(phantom.image(), o.recon_slices));
    return 0;
  });
  if (!persist) return result;

  stage("persist", [&] {
    const fs::path& d = out_dir;
    write_image(phantom.image(), d / "phantom.hdr");
    write_stack(result.clean, d / "clean.hdr");
    write_scheme_csv(scheme, d / "scheme.csv");
    write_stack(result.low, d / "low.hdr");
    nn::write_weights(result.training.weights, d / "weights.hdr");
    write_stack(result.denoised, d / "denoised.hdr");
    write_image(result.reconstruction, d / "recon.hdr");
    nn::write_history_csv(d / "history.csv", result.training.history);
    write_report_csv(result.low_report, d / "low_report.csv");
    write_report_csv(result.denoised_report, d / "denoised_report.csv");
    write_report_csv(result.recon_report, d / "recon_report.csv");

    Manifest& m = result.manifest;
    m.artifacts = {entry(d, "phantom", {"phantom.hdr", "phantom.raw"}),
                   entry(d, "project", {"clean.hdr", "clean.raw"}),
                   entry(d, "scheme", {"scheme.csv"}),
                   entry(d, "simulate", {"low.hdr", "low.raw"}),
                   entry(d, "train", {"weights.hdr", "weights.raw"}),
                   entry(d, "denoise", {"denoised.hdr", "denoised.raw"}),
                   entry(d, "reconstruct", {"recon.hdr", "recon.raw"})};
    m.reports = {entry(d, "history", {"history.csv"}), entry(d, "low_report", {"low_report.csv"}),
                 entry(d, "denoised_report", {"denoised_report.csv"}), entry(d, "recon_report", {"recon_report.csv"})};
    m.write(d / "manifest.json");
    return 0;
  });
  return result;
}

void SweepPlan::validate() const {
  if (pair_counts.empty() || b0_grid.empty()) throw ParameterError("sweep grids must be non-empty");
  if (n_angles < 1) throw ParameterError("n_angles must be positive");
  for (double b0 : b0_grid) {
    if (!(b0 > 0.0)) throw ParameterError("b0 values must be positive");
  }
  for (int n : pair_counts) {
    if (n < 1) throw ParameterError("pair counts must be positive");
  }
  train.validate();
  recon.validate();
}

SweepResult run_sweep(const SweepPlan& plan) {
  plan.validate();
  const ExperimentOptions& o = plan.options;
  const Phantom phantom = plan.phantom.make();
  const ProjectionStack clean = clean_transmission(phantom, plan.n_angles, o);
  const int size = phantom.width();
  const std::size_t per_b0 = plan.pair_counts.size() + 1;

  SweepResult result;
  for (std::size_t bi = 0; bi < plan.b0_grid.size(); ++bi) {
    const double b0 = plan.b0_grid[bi];
    for (std::size_t pi = 0; pi < plan.pair_counts.size(); ++pi) {
      const int n_pairs = plan.pair_counts[pi];
      const std::uint64_t point_seed = mix_seed(plan.seed, bi * per_b0 + pi);
      const std::string series = "hybrid-" + std::to_string(n_pairs);
      say(o, series + " b0=" + format_double(b0));
      try {
        const AcquisitionScheme scheme = build_hybrid_scheme(plan.n_angles, n_pairs, o.b0_normal, b0);
        const HybridAcquisition acq = simulate_hybrid_acquisition(clean, scheme, point_seed, o.renoise_normal);
        nn::TrainConfig tcfg = plan.train;
        tcfg.seed = mix_seed(point_seed, 1);
        nn::DenoiserConfig mcfg = o.model;
        mcfg.seed = mix_seed(point_seed, 2);
        const nn::TrainResult tr = nn::train(acq.pairs, mcfg, tcfg);
        const ProjectionStack pd = nn::denoise_stack(tr.weights, acq.low_full, o.tiles);
        const QualityReport rep = stack_report(pd, clean, 1.0);
        const Image recon = reconstruct_transmission(pd, b0, size, plan.recon, o.recon_slices);
        result.points.push_back({series, n_pairs, b0, total_photons(scheme).total_photons, rep.mean_ssim,
                                 rep.mean_psnr, recon_ssim(recon, phantom, o.recon_slices), false});
      } catch (const Error& e) {
        result.failures.push_back(series + " b0=" + format_double(b0) + ": " + e.what());
      }
    }
    say(o, "uniform b0=" + format_double(b0));
    try {
      const std::uint64_t point_seed = mix_seed(plan.seed, bi * per_b0 + plan.pair_counts.size());
      const double budget =
          total_photons(build_hybrid_scheme(plan.n_angles, plan.pair_counts.front(), o.b0_normal, b0)).total_photons;
      const double ub0 = uniform_equivalent_b0({budget}, plan.n_angles);
      const ProjectionStack pl = simulate_low_dose(clean, ub0, point_seed);
      const QualityReport rep = stack_report(pl, clean, 1.0);
      const Image recon = reconstruct_transmission(pl, ub0, size, plan.recon, o.recon_slices);
      result.points.push_back({"uniform", 0, ub0, budget, rep.mean_ssim, rep.mean_psnr,
                               recon_ssim(recon, phantom, o.recon_slices), true});
    } catch (const Error& e) {
      result.failures.push_back("uniform b0=" + format_double(b0) + ": " + e.what());
    }
  }
  std::stable_sort(result.points.begin(), result.points.end(), [](const SweepPoint& a, const SweepPoint& b) {
    if (a.total_photons != b.total_photons) return a.total_photons < b.total_photons;
    if (a.baseline != b.baseline) return a.baseline < b.baseline;
    return a.n_pairs < b.n_pairs;
  });
  return result;
}

double hybrid_low_dose(double budget, int n_angles, int n_pairs, double b0_normal) {
  if (n_angles < 1 || n_pairs < 1 || n_pairs > n_angles) throw ParameterError("need 1 <= n_pairs <= n_angles");
  const double low = (budget - n_pairs * b0_normal) / n_angles;
  if (!(low > 0.0)) {
    throw ParameterError("budget " + format_double(budget) + " cannot pay for " + std::to_string(n_pairs) +
                         " normal projections at " + format_double(b0_normal));
  }
  if (low > b0_normal) throw ParameterError("budget leaves a low dose above the normal dose");
  return low;
}

CompareReport compare_uniform_vs_hybrid(const CompareConfig& c) {
  const ExperimentOptions& o = c.options;
  CompareReport r;
  r.budget = c.budget;
  r.hybrid_b0_low = hybrid_low_dose(c.budget, c.n_angles, c.n_pairs, o.b0_normal);
  r.uniform_b0 = c.budget / c.n_angles;
  ReconConfig tv = c.tv;
  tv.method = ReconMethod::Tv;
  tv.validate();
  ReconConfig fbp;
  fbp.method = ReconMethod::FbpParzen;

  const Phantom phantom = stage("phantom", [&] { return c.phantom.make(); });
  const int size = phantom.width();
  say(o, "project");
  const ProjectionStack clean = stage("project", [&] { return clean_transmission(phantom, c.n_angles, o); });

  say(o, "uniform arm");
  const ProjectionStack uniform =
      stage("simulate", [&] { return simulate_low_dose(clean, r.uniform_b0, mix_seed(c.seed, 1)); });
  const QualityReport urep = stack_report(uniform, clean, 1.0);
  r.uniform_proj_ssim = urep.mean_ssim;
  r.uniform_proj_psnr = urep.mean_psnr;
  r.uniform_fbp_ssim = stage("reconstruct", [&] {
    return recon_ssim(reconstruct_transmission(uniform, r.uniform_b0, size, fbp, o.recon_slices), phantom,
                      o.recon_slices);
  });
  say(o, "uniform TV");
  r.uniform_tv_ssim = stage("reconstruct", [&] {
    return recon_ssim(reconstruct_transmission(uniform, r.uniform_b0, size, tv, o.recon_slices), phantom,
                      o.recon_slices);
  });

  say(o, "hybrid arm");
  const AcquisitionScheme scheme = build_hybrid_scheme(c.n_angles, c.n_pairs, o.b0_normal, r.hybrid_b0_low);
  const HybridAcquisition acq = stage(
      "simulate", [&] { return simulate_hybrid_acquisition(clean, scheme, mix_seed(c.seed, 2), o.renoise_normal); });
  r.hybrid_low_proj_ssim = stack_report(acq.low_full, clean, 1.0).mean_ssim;
  const nn::TrainResult tr = stage("train", [&] {
    return nn::train(acq.pairs, o.model, c.train, [&](const nn::EpochRecord& e) {
      say(o, "epoch " + std::to_string(e.epoch) + " train " + format_double(e.train.total) + " val " +
                 format_double(e.validation.total));
    });
  });
  say(o, "denoise");
  const ProjectionStack pd = stage("denoise", [&] { return nn::denoise_stack(tr.weights, acq.low_full, o.tiles); });
  const QualityReport drep = stack_report(pd, clean, 1.0);
  r.denoised_proj_ssim = drep.mean_ssim;
  r.denoised_proj_psnr = drep.mean_psnr;
  r.hybrid_fbp_ssim = stage("reconstruct", [&] {
    return recon_ssim(reconstruct_transmission(pd, r.hybrid_b0_low, size, fbp, o.recon_slices), phantom,
                      o.recon_slices);
  });
  return r;
}

std::string CompareReport::to_json() const {
  const json j = {{"budget", budget},
                  {"uniform_b0", uniform_b0},
                  {"hybrid_b0_low", hybrid_b0_low},
                  {"uniform_proj_ssim", uniform_proj_ssim},
                  {"uniform_proj_psnr", uniform_proj_psnr},
                  {"hybrid_low_proj_ssim", hybrid_low_proj_ssim},
                  {"denoised_proj_ssim", denoised_proj_ssim},
                  {"denoised_proj_psnr", denoised_proj_psnr},
                  {"uniform_fbp_ssim", uniform_fbp_ssim},
                  {"uniform_tv_ssim", uniform_tv_ssim},
                  {"hybrid_fbp_ssim", hybrid_fbp_ssim}};
  return j.dump(2);
}

}  // namespace hdrec

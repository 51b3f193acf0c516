// hdrec command-line harness: one subcommand per pipeline stage plus the
// end-to-end pipeline, dose sweep and uniform-vs-hybrid comparison.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hdrec/dose.hpp"
#include "hdrec/error.hpp"
#include "hdrec/forward.hpp"
#include "hdrec/io.hpp"
#include "hdrec/metrics.hpp"
#include "hdrec/nn/checkpoint.hpp"
#include "hdrec/nn/denoise.hpp"
#include "hdrec/nn/train.hpp"
#include "hdrec/pipeline.hpp"
#include "hdrec/recon.hpp"
#include "hdrec/rng.hpp"

namespace fs = std::filesystem;
using namespace hdrec;

namespace {

struct Common {
  std::uint64_t seed = 0;
  fs::path out_dir = ".";
  fs::path config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every random stream")->capture_default_str();
  sub->add_option("--out-dir", c.out_dir, "Directory receiving outputs")->capture_default_str();
  sub->add_option("--config", c.config, "TOML-style file of option values (key = value)");
}

void add_phantom(CLI::App* sub, PhantomSpec& p) {
  sub->add_option("--kind", p.kind, "disk-pack or shepp-logan")
      ->check(CLI::IsMember({"disk-pack", "shepp-logan"}))
      ->capture_default_str();
  sub->add_option("--size", p.size, "Phantom width and height in pixels")->capture_default_str();
  sub->add_option("--depth", p.depth, "Number of slices")->capture_default_str();
  sub->add_option("--disks", p.n_disks, "Number of disk or sphere inclusions")->capture_default_str();
  sub->add_option("--mu-matrix", p.mu_matrix, "Matrix attenuation, 1/px")->capture_default_str();
  sub->add_option("--mu-disk", p.mu_disk, "Inclusion attenuation, 1/px")->capture_default_str();
}

void add_model(CLI::App* sub, nn::DenoiserConfig& m) {
  sub->add_option("--scales", m.n_scales, "Encoder stages")->capture_default_str();
  sub->add_option("--base-channels", m.base_channels, "Channels of the first stage")->capture_default_str();
  sub->add_option("--units", m.residual_units_per_stage, "Residual units per stage")->capture_default_str();
  sub->add_option("--kernel", m.kernel, "Convolution kernel size")->capture_default_str();
}

void add_training(CLI::App* sub, nn::TrainConfig& t) {
  sub->add_option("--lr", t.learning_rate, "Adam learning rate")->capture_default_str();
  sub->add_option("--batch", t.batch_size, "Batch size")->capture_default_str();
  sub->add_option("--patch", t.patch_size, "Training patch size")->capture_default_str();
  sub->add_option("--patches-per-pair", t.patches_per_pair, "Patches drawn per pair and epoch")->capture_default_str();
  sub->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--alpha", t.alpha, "L1 loss weight")->capture_default_str();
  sub->add_option("--beta", t.beta, "Perceptual loss weight")->capture_default_str();
  sub->add_option("--split", t.split_fraction, "Training fraction of the pairs")->capture_default_str();
}

void add_tiles(CLI::App* sub, nn::TileOptions& t) {
  sub->add_option("--tile", t.tile, "Inference tile size")->capture_default_str();
  sub->add_option("--stride", t.stride, "Inference tile stride")->capture_default_str();
}

struct ReconOpts {
  std::string method = "fbp-parzen";
  ReconConfig config;
  std::vector<int> slices;

  ReconConfig resolved() const {
    ReconConfig c = config;
    c.method = method == "tv" ? ReconMethod::Tv : method == "fbp-ramp" ? ReconMethod::FbpRamp : ReconMethod::FbpParzen;
    c.validate();
    return c;
  }
};

void add_recon(CLI::App* sub, ReconOpts& r) {
  sub->add_option("--method", r.method, "fbp-parzen, fbp-ramp or tv")
      ->check(CLI::IsMember({"fbp-parzen", "fbp-ramp", "tv"}))
      ->capture_default_str();
  sub->add_option("--tv-iterations", r.config.tv_iterations, "TV iterations")->capture_default_str();
  sub->add_option("--tv-weight", r.config.tv_weight, "TV weight lambda")->capture_default_str();
  sub->add_option("--tv-step", r.config.tv_step, "TV descent step")->capture_default_str();
  sub->add_option("--sirt-sweeps", r.config.sirt_sweeps_per_iter, "SIRT sweeps per TV iteration")->capture_default_str();
  sub->add_option("--slices", r.slices, "Slices to reconstruct (default all)");
}

void log_line(const std::string& msg) { std::clog << "[hdrec] " << msg << std::endl; }

fs::path prepare(const Common& c) {
  fs::create_directories(c.out_dir);
  return c.out_dir;
}

bool has_magic(const fs::path& path, const std::string& magic) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line == "magic=" + magic;
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.starts_with(flag + "="); });
}

/// Expands `--config FILE` of the selected subcommand into command-line
/// arguments. Options spelled out on the command line take precedence.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  if (args.empty()) return args;
  const CLI::App* sub = nullptr;
  for (const CLI::App* s : app.get_subcommands({})) {
    if (s->get_name() == args.front()) sub = s;
  }
  if (sub == nullptr) return args;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    const std::string flag = "--" + name;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr || name == "config") {
      throw CLI::ConfigError("unknown key '" + item.name + "' in " + path + " for " + sub->get_name());
    }
    if (given(args, flag)) continue;
    if (opt->get_expected_max() == 0) {
      if (!item.inputs.empty() && (item.inputs.front() == "true" || item.inputs.front() == "1")) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    args.insert(args.end(), item.inputs.begin(), item.inputs.end());
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hdrec: hybrid-dose tomography experiments"};
  app.require_subcommand(1);
  std::function<void()> action;

  // phantom
  Common phantom_c;
  PhantomSpec phantom_spec;
  auto* phantom_cmd = app.add_subcommand("phantom", "Generate a disk-pack or Shepp-Logan phantom");
  add_common(phantom_cmd, phantom_c);
  add_phantom(phantom_cmd, phantom_spec);
  phantom_cmd->callback([&] {
    action = [&] {
      phantom_spec.seed = phantom_c.seed;
      const fs::path out = prepare(phantom_c) / "phantom.hdr";
      write_image(phantom_spec.make().image(), out);
      log_line("wrote " + out.string());
    };
  });

  // project
  Common project_c;
  fs::path project_in;
  int project_angles = 360, project_det = 0;
  auto* project_cmd = app.add_subcommand("project", "Forward project a phantom into clean projections");
  add_common(project_cmd, project_c);
  project_cmd->add_option("--phantom", project_in, "Phantom header")->required();
  project_cmd->add_option("--angles", project_angles, "Angles over [0, pi)")->capture_default_str();
  project_cmd->add_option("--n-det", project_det, "Detector bins (0 covers the diagonal)")->capture_default_str();
  project_cmd->callback([&] {
    action = [&] {
      const Phantom phantom = read_phantom(project_in);
      const int n_det = project_det > 0 ? project_det : covering_detector_count(phantom.width());
      const ProjectionStack lines = siddon_project(phantom, Geometry::parallel(project_angles, n_det));
      const fs::path dir = prepare(project_c);
      write_stack(lines, dir / "lineint.hdr");
      write_stack(beer_transmit(lines), dir / "clean.hdr");
      log_line("wrote " + (dir / "lineint.hdr").string() + " and " + (dir / "clean.hdr").string());
    };
  });

  // simulate
  Common simulate_c;
  fs::path simulate_in;
  int sim_pairs = 4;
  double sim_normal = 5000.0, sim_low = 100.0, sim_uniform = 0.0;
  bool sim_renoise = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a hybrid or uniform low-dose acquisition");
  add_common(simulate_cmd, simulate_c);
  simulate_cmd->add_option("--clean", simulate_in, "Clean transmission stack header")->required();
  simulate_cmd->add_option("--pairs", sim_pairs, "Normal-dose pairs")->capture_default_str();
  simulate_cmd->add_option("--b0-normal", sim_normal, "Normal dose b0")->capture_default_str();
  simulate_cmd->add_option("--b0-low", sim_low, "Low dose b0")->capture_default_str();
  simulate_cmd->add_option("--uniform-b0", sim_uniform, "Uniform low dose instead of a hybrid scheme");
  simulate_cmd->add_flag("--renoise-normal", sim_renoise, "Noise the normal member at b0-normal");
  simulate_cmd->callback([&] {
    action = [&] {
      const ProjectionStack clean = read_stack(simulate_in);
      const fs::path dir = prepare(simulate_c);
      const std::uint64_t seed = mix_seed(simulate_c.seed, 1);
      if (sim_uniform > 0.0) {
        write_scheme_csv(build_uniform_scheme(clean.n_angles(), sim_uniform), dir / "scheme.csv");
        write_stack(simulate_low_dose(clean, sim_uniform, seed), dir / "low.hdr");
        log_line("uniform b0 " + format_double(sim_uniform));
        return;
      }
      const AcquisitionScheme scheme = build_hybrid_scheme(clean.n_angles(), sim_pairs, sim_normal, sim_low);
      const HybridAcquisition acq = simulate_hybrid_acquisition(clean, scheme, seed, sim_renoise);
      write_scheme_csv(scheme, dir / "scheme.csv");
      write_stack(acq.low_full, dir / "low.hdr");
      const auto [low, normal] = pairs_to_stacks(acq.pairs);
      write_stack(low, dir / "pairs_low.hdr");
      write_stack(normal, dir / "pairs_normal.hdr");
      log_line("total photons " + format_double(total_photons(scheme).total_photons) + ", delivered " +
               format_double(delivered_photons(scheme).total_photons));
    };
  });

  // train
  Common train_c;
  fs::path train_low, train_normal;
  nn::DenoiserConfig train_model;
  nn::TrainConfig train_cfg;
  auto* train_cmd = app.add_subcommand("train", "Train the projection denoiser on low/normal pairs");
  add_common(train_cmd, train_c);
  train_cmd->add_option("--pairs-low", train_low, "Low-dose pair stack")->required();
  train_cmd->add_option("--pairs-normal", train_normal, "Normal-dose pair stack")->required();
  add_model(train_cmd, train_model);
  add_training(train_cmd, train_cfg);
  train_cmd->callback([&] {
    action = [&] {
      const auto pairs = pairs_from_stacks(read_stack(train_low), read_stack(train_normal));
      train_model.seed = mix_seed(train_c.seed, 2);
      train_cfg.seed = mix_seed(train_c.seed, 3);
      const nn::TrainResult result = nn::train(pairs, train_model, train_cfg, [](const nn::EpochRecord& r) {
        log_line("epoch " + std::to_string(r.epoch) + " train " + format_double(r.train.total) + " val " +
                 format_double(r.validation.total));
      });
      const fs::path dir = prepare(train_c);
      nn::write_weights(result.weights, dir / "weights.hdr");
      nn::write_history_csv(dir / "history.csv", result.history);
      log_line("best epoch " + std::to_string(result.best_epoch));
    };
  });

  // denoise
  Common denoise_c;
  fs::path denoise_weights, denoise_in;
  nn::TileOptions denoise_tiles;
  auto* denoise_cmd = app.add_subcommand("denoise", "Denoise a transmission stack with trained weights");
  add_common(denoise_cmd, denoise_c);
  denoise_cmd->add_option("--weights", denoise_weights, "Weights header")->required();
  denoise_cmd->add_option("--input", denoise_in, "Low-dose transmission stack")->required();
  add_tiles(denoise_cmd, denoise_tiles);
  denoise_cmd->callback([&] {
    action = [&] {
      const auto weights = nn::read_weights(denoise_weights);
      const fs::path out = prepare(denoise_c) / "denoised.hdr";
      write_stack(nn::denoise_stack(weights, read_stack(denoise_in), denoise_tiles), out);
      log_line("wrote " + out.string());
    };
  });

  // reconstruct
  Common recon_c;
  fs::path recon_in;
  int recon_size = 128;
  double recon_b0 = 0.0;
  ReconOpts recon_opts;
  auto* recon_cmd = app.add_subcommand("reconstruct", "Reconstruct slices by FBP or TV");
  add_common(recon_cmd, recon_c);
  recon_cmd->add_option("--input", recon_in, "Projection stack (transmission or line integral)")->required();
  recon_cmd->add_option("--size", recon_size, "Output width and height")->capture_default_str();
  recon_cmd->add_option("--b0", recon_b0, "Dose of a transmission input, sets the count floor");
  add_recon(recon_cmd, recon_opts);
  recon_cmd->callback([&] {
    action = [&] {
      const ReconConfig cfg = recon_opts.resolved();
      ProjectionStack stack = select_rows(read_stack(recon_in), recon_opts.slices);
      if (stack.domain() == Domain::Transmission) {
        if (!(recon_b0 > 0.0)) throw ParameterError("--b0 is required for a transmission input");
        stack = log_normalize(stack, count_floor(recon_b0));
      }
      const fs::path dir = prepare(recon_c);
      if (cfg.method == ReconMethod::Tv) {
        const TvResult r = tv_reconstruct(stack, recon_size, cfg);
        write_image(r.image, dir / "recon.hdr");
        std::ofstream log(dir / "tv_log.csv", std::ios::binary);
        log << "iter,residual,tv_value\n";
        for (const auto& e : r.log) {
          log << e.iteration << ',' << format_double(e.residual) << ',' << format_double(e.tv_value) << '\n';
        }
        if (r.diverged) throw NumericalError("TV reconstruction diverged; partial result written");
      } else {
        write_image(reconstruct(stack, recon_size, cfg), dir / "recon.hdr");
      }
      log_line("wrote " + (dir / "recon.hdr").string());
    };
  });

  // metrics
  Common metrics_c;
  fs::path metrics_a, metrics_ref;
  double metrics_range = 0.0;
  std::vector<int> metrics_slices;
  auto* metrics_cmd = app.add_subcommand("metrics", "SSIM/PSNR of stacks or reconstructions against a reference");
  add_common(metrics_cmd, metrics_c);
  metrics_cmd->add_option("--input", metrics_a, "Stack or image header")->required();
  metrics_cmd->add_option("--reference", metrics_ref, "Reference of the same kind")->required();
  metrics_cmd->add_option("--data-range", metrics_range, "Data range (stacks default to 1)");
  metrics_cmd->add_option("--slices", metrics_slices, "Reference slices matching the input slices");
  metrics_cmd->callback([&] {
    action = [&] {
      QualityReport report;
      if (has_magic(metrics_a, "HDREC1")) {
        report = stack_report(read_stack(metrics_a), read_stack(metrics_ref), metrics_range > 0 ? metrics_range : 1.0);
      } else {
        report = volume_report(read_image(metrics_a), select_slices(read_image(metrics_ref), metrics_slices));
      }
      const fs::path out = prepare(metrics_c) / "report.csv";
      write_report_csv(report, out);
      std::cout << "mean_ssim=" << format_double(report.mean_ssim) << " std_ssim=" << format_double(report.std_ssim)
                << " mean_psnr=" << format_double(report.mean_psnr) << " std_psnr=" << format_double(report.std_psnr)
                << '\n';
    };
  });

  // pipeline
  Common pipe_c;
  PhantomSpec pipe_phantom;
  ExperimentOptions pipe_opts;
  nn::TrainConfig pipe_train;
  ReconOpts pipe_recon;
  int pipe_angles = 360, pipe_pairs = 4;
  double pipe_low = 100.0;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage end to end and write a manifest");
  add_common(pipe_cmd, pipe_c);
  add_phantom(pipe_cmd, pipe_phantom);
  add_model(pipe_cmd, pipe_opts.model);
  add_training(pipe_cmd, pipe_train);
  add_tiles(pipe_cmd, pipe_opts.tiles);
  add_recon(pipe_cmd, pipe_recon);
  pipe_cmd->add_option("--angles", pipe_angles, "Angles over [0, pi)")->capture_default_str();
  pipe_cmd->add_option("--n-det", pipe_opts.n_det, "Detector bins (0 covers the diagonal)")->capture_default_str();
  pipe_cmd->add_option("--pairs", pipe_pairs, "Normal-dose pairs")->capture_default_str();
  pipe_cmd->add_option("--b0-normal", pipe_opts.b0_normal, "Normal dose b0")->capture_default_str();
  pipe_cmd->add_option("--b0-low", pipe_low, "Low dose b0")->capture_default_str();
  pipe_cmd->callback([&] {
    action = [&] {
      pipe_phantom.seed = pipe_c.seed;
      pipe_opts.model.seed = mix_seed(pipe_c.seed, 2);
      pipe_train.seed = mix_seed(pipe_c.seed, 3);
      pipe_opts.recon_slices = pipe_recon.slices;
      pipe_opts.log = log_line;
      const auto scheme = build_hybrid_scheme(pipe_angles, pipe_pairs, pipe_opts.b0_normal, pipe_low);
      const auto r = run_pipeline(pipe_phantom.make(), scheme, pipe_train, pipe_recon.resolved(),
                                  mix_seed(pipe_c.seed, 1), pipe_opts, prepare(pipe_c));
      std::cout << "proj_ssim_low=" << format_double(r.low_report.mean_ssim)
                << " proj_ssim_denoised=" << format_double(r.denoised_report.mean_ssim)
                << " recon_ssim=" << format_double(r.recon_report.mean_ssim) << '\n';
    };
  });

  // sweep
  Common sweep_c;
  SweepPlan plan;
  ReconOpts sweep_recon;
  auto* sweep_cmd = app.add_subcommand("sweep", "Dose-allocation sweep over pair counts and b0");
  add_common(sweep_cmd, sweep_c);
  add_phantom(sweep_cmd, plan.phantom);
  add_model(sweep_cmd, plan.options.model);
  add_training(sweep_cmd, plan.train);
  add_tiles(sweep_cmd, plan.options.tiles);
  add_recon(sweep_cmd, sweep_recon);
  sweep_cmd->add_option("--angles", plan.n_angles, "Angles over [0, pi)")->capture_default_str();
  sweep_cmd->add_option("--n-det", plan.options.n_det, "Detector bins (0 covers the diagonal)")->capture_default_str();
  sweep_cmd->add_option("--pair-counts", plan.pair_counts, "Normal-dose pair counts")->capture_default_str();
  sweep_cmd->add_option("--b0-grid", plan.b0_grid, "Low-dose b0 values")->capture_default_str();
  sweep_cmd->add_option("--b0-normal", plan.options.b0_normal, "Normal dose b0")->capture_default_str();
  sweep_cmd->callback([&] {
    action = [&] {
      plan.seed = sweep_c.seed;
      plan.phantom.seed = sweep_c.seed;
      plan.recon = sweep_recon.resolved();
      plan.options.recon_slices = sweep_recon.slices;
      plan.options.log = log_line;
      const SweepResult result = run_sweep(plan);
      const fs::path dir = prepare(sweep_c);
      std::ofstream failures(dir / "failures.log", std::ios::binary);
      for (const auto& f : result.failures) failures << f << '\n';
      if (result.points.empty()) throw NumericalError("every sweep point failed; see failures.log");
      emit_curves(result.points, dir / "sweep");
      log_line(std::to_string(result.points.size()) + " points, " + std::to_string(result.failures.size()) +
               " failures");
    };
  });

  // compare
  Common compare_c;
  CompareConfig compare;
  ReconOpts compare_tv;
  compare_tv.method = "tv";
  auto* compare_cmd = app.add_subcommand("compare", "Uniform low dose (FBP, TV) against hybrid-denoised FBP");
  add_common(compare_cmd, compare_c);
  add_phantom(compare_cmd, compare.phantom);
  add_model(compare_cmd, compare.options.model);
  add_training(compare_cmd, compare.train);
  add_tiles(compare_cmd, compare.options.tiles);
  add_recon(compare_cmd, compare_tv);
  compare_cmd->add_option("--angles", compare.n_angles, "Angles over [0, pi)")->capture_default_str();
  compare_cmd->add_option("--n-det", compare.options.n_det, "Detector bins (0 covers the diagonal)")
      ->capture_default_str();
  compare_cmd->add_option("--pairs", compare.n_pairs, "Normal-dose pairs of the hybrid arm")->capture_default_str();
  compare_cmd->add_option("--budget", compare.budget, "Delivered photons per detector pixel")->capture_default_str();
  compare_cmd->add_option("--b0-normal", compare.options.b0_normal, "Normal dose b0")->capture_default_str();
  compare_cmd->callback([&] {
    action = [&] {
      compare.seed = compare_c.seed;
      compare.phantom.seed = compare_c.seed;
      compare.options.model.seed = mix_seed(compare_c.seed, 2);
      compare.train.seed = mix_seed(compare_c.seed, 3);
      compare.tv = compare_tv.resolved();
      compare.options.recon_slices = compare_tv.slices;
      compare.options.log = log_line;
      const CompareReport report = compare_uniform_vs_hybrid(compare);
      std::ofstream(prepare(compare_c) / "compare.json", std::ios::binary) << report.to_json() << '\n';
      std::cout << report.to_json() << '\n';
    };
  });

  try {
    std::vector<std::string> args = expand_config(app, std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    action();
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

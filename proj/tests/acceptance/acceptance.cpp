// Acceptance suite. `hdrec_acceptance [A1..A7 | all] [--cli PATH] [--work DIR]`
// prints one PASS/FAIL line per criterion; the exit status is 0 only when
// every requested criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hdrec/dose.hpp"
#include "hdrec/forward.hpp"
#include "hdrec/metrics.hpp"
#include "hdrec/nn/featnet.hpp"
#include "hdrec/nn/layers.hpp"
#include "hdrec/nn/loss.hpp"
#include "hdrec/nn/unet.hpp"
#include "hdrec/phantom.hpp"
#include "hdrec/pipeline.hpp"
#include "hdrec/recon.hpp"

namespace fs = std::filesystem;
using namespace hdrec;
using namespace hdrec::nn;

namespace {

struct Context {
  fs::path cli;
  fs::path work;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << v;
  return s.str();
}

ProjectionStack line_integrals(const Phantom& phantom, int n_angles) {
  return siddon_project(phantom, Geometry::parallel(n_angles, covering_detector_count(phantom.width())));
}

ProjectionStack clean_stack(const Phantom& phantom, int n_angles) { return beer_transmit(line_integrals(phantom, n_angles)); }

// A1: moments of v -> Poisson(b0 v) / b0 against 3 sigma of the estimators.
Outcome poisson_moments(const Context&) {
  const int n = 100000;
  Outcome out{true, ""};
  double worst = 0.0;
  for (double b0 : {10.0, 100.0, 1000.0}) {
    for (double v : {0.1, 0.5, 0.9}) {
      const ProjectionStack flat(Domain::Transmission, {0.0}, n, 1, std::vector<double>(n, v));
      const ProjectionStack sample =
          simulate_low_dose(flat, b0, 1000 * static_cast<std::uint64_t>(b0) + static_cast<int>(10 * v));
      const std::vector<double>& x = sample.values();
      double mean = 0.0;
      for (double s : x) mean += s;
      mean /= n;
      double var = 0.0;
      for (double s : x) var += (s - mean) * (s - mean);
      var /= n - 1;
      // scaled Poisson: variance lambda / b0^2, fourth central moment lambda (1 + 3 lambda) / b0^4
      const double lambda = b0 * v;
      const double sigma2 = v / b0;
      const double mu4 = lambda * (1.0 + 3.0 * lambda) / std::pow(b0, 4);
      const double sd_mean = std::sqrt(sigma2 / n);
      const double sd_var = std::sqrt(mu4 / n - sigma2 * sigma2 * (n - 3.0) / (n * (n - 1.0)));
      const double z_mean = std::abs(mean - v) / sd_mean;
      const double z_var = std::abs(var - sigma2) / sd_var;
      worst = std::max({worst, z_mean, z_var});
      if (z_mean > 3.0 || z_var > 3.0) {
        out.pass = false;
        out.detail += " b0=" + fmt(b0, 0) + " v=" + fmt(v, 1) + " z_mean=" + fmt(z_mean, 2) + " z_var=" + fmt(z_var, 2);
      }
    }
  }
  out.detail = "worst |z| " + fmt(worst, 2) + " of 3" + out.detail;
  return out;
}

// Random values in [-scale, scale].
std::vector<double> uniform_values(std::size_t n, std::mt19937_64& gen, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

Tensor random_tensor(int c, int h, int w, std::mt19937_64& gen) {
  Tensor t(c, h, w);
  t.data = uniform_values(t.size(), gen);
  return t;
}

ParamArray random_param(std::vector<int> shape, std::mt19937_64& gen) {
  std::size_t n = 1;
  for (int s : shape) n *= s;
  return {std::move(shape), uniform_values(n, gen, 0.5)};
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class GradientCheck {
 public:
  static constexpr double kTolerance = 1e-4;

  /// Central differences at up to 24 indices of `values`; relative error with
  /// a floor of 1e-3 of the largest analytic entry.
  void check(const std::string& what, std::vector<double>& values, const std::vector<double>& analytic,
             const std::function<double()>& f) {
    double scale = 0.0;
    for (double g : analytic) scale = std::max(scale, std::abs(g));
    if (scale == 0.0) {
      failures_.push_back(what + " has an all-zero gradient");
      return;
    }
    std::mt19937_64 gen(values.size() * 7919u + 17u);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    const std::size_t n = std::min<std::size_t>(24, values.size());
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t k = values.size() <= 24 ? s : pick(gen);
      const double keep = values[k];
      values[k] = keep + kStep;
      const double up = f();
      values[k] = keep - kStep;
      const double down = f();
      values[k] = keep;
      const double fd = (up - down) / (2 * kStep);
      const double err = std::abs(fd - analytic[k]) / std::max({std::abs(fd), std::abs(analytic[k]), 1e-3 * scale});
      worst_ = std::max(worst_, err);
      if (err > kTolerance) failures_.push_back(what + "[" + std::to_string(k) + "] rel " + fmt(err, 6));
    }
    ++checked_;
  }

  double worst() const { return worst_; }
  int checked() const { return checked_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  static constexpr double kStep = 1e-6;
  double worst_ = 0.0;
  int checked_ = 0;
  std::vector<std::string> failures_;
};

void check_conv(GradientCheck& g, std::mt19937_64& gen, int cin, int cout, int k, int stride) {
  Tensor x = random_tensor(cin, 10, 8, gen);
  ParamArray w = random_param({cout, cin, k, k}, gen), b = random_param({cout}, gen);
  const Tensor y = conv2d(x, w, b, stride);
  const Tensor v = random_tensor(y.channels, y.height, y.width, gen);
  ParamArray dw{w.shape, std::vector<double>(w.size(), 0.0)}, db{b.shape, std::vector<double>(b.size(), 0.0)};
  const Tensor dx = conv2d_backward(x, w, stride, v, dw, db);
  auto f = [&] { return dot(conv2d(x, w, b, stride).data, v.data); };
  const std::string tag = "conv k" + std::to_string(k) + " s" + std::to_string(stride);
  g.check(tag + " dx", x.data, dx.data, f);
  g.check(tag + " dw", w.values, dw.values, f);
  g.check(tag + " db", b.values, db.values, f);
}

void check_layers(GradientCheck& g, std::mt19937_64& gen) {
  check_conv(g, gen, 3, 4, 3, 1);
  check_conv(g, gen, 3, 4, 3, 2);
  check_conv(g, gen, 4, 1, 1, 1);

  {
    Tensor x = random_tensor(3, 5, 4, gen);
    ParamArray w = random_param({3, 2, 2, 2}, gen), b = random_param({2}, gen);
    const Tensor v = random_tensor(2, 10, 8, gen);
    ParamArray dw{w.shape, std::vector<double>(w.size(), 0.0)}, db{b.shape, std::vector<double>(b.size(), 0.0)};
    const Tensor dx = conv_transpose2x_backward(x, w, v, dw, db);
    auto f = [&] { return dot(conv_transpose2x(x, w, b).data, v.data); };
    g.check("conv-transpose dx", x.data, dx.data, f);
    g.check("conv-transpose dw", w.values, dw.values, f);
    g.check("conv-transpose db", b.values, db.values, f);
  }
  {
    Tensor x = random_tensor(2, 6, 6, gen);
    for (double& e : x.data) {
      if (std::abs(e) < 1e-3) e = 0.5;  // keep the kink out of the difference stencil
    }
    const Tensor v = random_tensor(2, 6, 6, gen);
    g.check("leaky-relu", x.data, leaky_relu_backward(x, v).data, [&] { return dot(leaky_relu(x).data, v.data); });
  }
  {
    Tensor x = random_tensor(2, 6, 6, gen);
    const Tensor v = random_tensor(2, 6, 6, gen);
    g.check("tanh", x.data, tanh_backward(tanh_act(x), v).data, [&] { return dot(tanh_act(x).data, v.data); });
  }
  {
    Tensor x = random_tensor(2, 8, 6, gen);
    const Tensor v = random_tensor(2, 4, 3, gen);
    g.check("avg-pool", x.data, avg_pool2_backward(v, 8, 6).data, [&] { return dot(avg_pool2(x).data, v.data); });
  }
  {
    Tensor a = random_tensor(2, 4, 4, gen), b = random_tensor(3, 4, 4, gen);
    const Tensor v = random_tensor(5, 4, 4, gen);
    const auto [da, db] = split_channels(v, 2);
    auto f = [&] { return dot(concat_channels(a, b).data, v.data); };
    g.check("concat a", a.data, da.data, f);
    g.check("concat b", b.data, db.data, f);
  }
}

void check_network(GradientCheck& g, std::mt19937_64& gen, std::uint64_t seed) {
  DenoiserConfig config;
  config.n_scales = 2;
  config.base_channels = 4;
  config.residual_units_per_stage = 1;
  config.seed = seed;
  ModelWeights m = build_model(config);
  // the stock head is zero, which would silence every upstream gradient
  for (auto& [name, p] : m.params.entries()) {
    if (name == "head.weight" || p.shape.size() == 1) p.values = uniform_values(p.size(), gen, 0.3);
  }
  Tensor x = random_tensor(1, 8, 8, gen);
  const Tensor v = random_tensor(1, 8, 8, gen);
  ForwardTrace trace;
  forward(m, x, &trace);
  ParamStore grads = m.params.zeros_like();
  const Tensor dx = backward(m, trace, v, grads);
  auto f = [&] { return dot(forward(m, x).data, v.data); };
  g.check("unet input", x.data, dx.data, f);
  for (std::size_t i = 0; i < m.params.entries().size(); ++i) {
    auto& [name, p] = m.params.entries()[i];
    g.check("unet " + name, p.values, grads.entries()[i].second.values, f);
  }
}

void check_losses(GradientCheck& g, std::mt19937_64& gen, std::uint64_t seed) {
  const FeatureNet featnet = build_featnet(seed);
  Tensor pred = random_tensor(1, 16, 16, gen);
  const Tensor target = random_tensor(1, 16, 16, gen);
  g.check("l1", pred.data, l1_gradient(pred, target).data, [&] { return l1_loss(pred, target); });
  g.check("perceptual", pred.data, perceptual_gradient(pred, target, featnet).data,
          [&] { return perceptual_loss(pred, target, featnet); });
  Tensor d;
  loss_with_gradient(pred, target, 1.0, 0.1, featnet, d);
  g.check("total", pred.data, d.data, [&] { return total_loss(pred, target, 1.0, 0.1, featnet).total; });
}

// A2: finite differences for every layer type and both losses, three seeds.
Outcome gradients(const Context&) {
  GradientCheck g;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 gen(seed);
    check_layers(g, gen);
    check_network(g, gen, seed);
    check_losses(g, gen, seed);
  }
  Outcome out{g.failures().empty(), std::to_string(g.checked()) + " arrays, worst rel " + fmt(g.worst(), 8) +
                                        " (tol " + fmt(GradientCheck::kTolerance, 4) + ")"};
  for (std::size_t i = 0; i < std::min<std::size_t>(3, g.failures().size()); ++i) out.detail += "; " + g.failures()[i];
  return out;
}

// A3: Shepp-Logan round trip and TV against FBP-Parzen at b0 = 50.
Outcome reconstruction(const Context&) {
  const int size = 128;
  const Phantom phantom = make_shepp_logan(size);
  const double range = dynamic_range(phantom.image());
  const ProjectionStack clean_li = line_integrals(phantom, 360);
  const ProjectionStack clean = beer_transmit(clean_li);
  const double ramp = ssim_inscribed(fbp_reconstruct(clean_li, size, FilterKind::Ramp), phantom.image(), range);

  const double b0 = 50.0;
  const ProjectionStack noisy = log_normalize(simulate_low_dose(clean, b0, 11), count_floor(b0));
  ReconConfig parzen;
  parzen.method = ReconMethod::FbpParzen;
  ReconConfig tv;
  tv.method = ReconMethod::Tv;
  const double fbp = ssim_inscribed(reconstruct(noisy, size, parzen), phantom.image(), range);
  const double tvs = ssim_inscribed(reconstruct(noisy, size, tv), phantom.image(), range);
  return {ramp >= 0.80 && tvs >= fbp + 0.02, "ramp " + fmt(ramp) + " (>= 0.80); tv " + fmt(tvs) + " vs parzen " +
                                                 fmt(fbp) + " margin " + fmt(tvs - fbp) + " (>= 0.02)"};
}

// A4: hybrid-denoised against uniform low dose at the same delivered budget.
Outcome hybrid_vs_uniform(const Context&) {
  CompareConfig c;
  c.phantom.size = 128;
  c.phantom.depth = 128;
  c.phantom.seed = 1;
  c.n_angles = 360;
  c.n_pairs = 4;
  // 4 normal exposures at 5000 plus 360 low exposures at 100
  c.budget = 4 * 5000.0 + 360 * 100.0;
  c.options.b0_normal = 5000.0;
  c.options.model.n_scales = 3;
  c.options.model.base_channels = 8;
  c.options.model.residual_units_per_stage = 1;
  c.options.model.seed = 1;
  c.options.tiles = {64, 32};
  c.train.epochs = 50;
  c.train.learning_rate = 1e-3;
  c.train.batch_size = 8;
  c.train.patch_size = 64;
  c.train.patches_per_pair = 16;
  c.train.seed = 1;
  c.seed = 1;
  const CompareReport r = compare_uniform_vs_hybrid(c);
  const double dp = r.denoised_proj_ssim - r.uniform_proj_ssim;
  const double dr = r.hybrid_fbp_ssim - r.uniform_fbp_ssim;
  return {r.hybrid_b0_low == 100.0 && dp >= 0.05 && dr >= 0.03,
          "b0 uniform " + fmt(r.uniform_b0, 2) + " hybrid low " + fmt(r.hybrid_b0_low, 2) + "; proj " +
              fmt(r.denoised_proj_ssim) + " vs " + fmt(r.uniform_proj_ssim) + " (+" + fmt(dp) + ", >= 0.05); recon " +
              fmt(r.hybrid_fbp_ssim) + " vs " + fmt(r.uniform_fbp_ssim) + " (+" + fmt(dr) + ", >= 0.03)"};
}

// A5: raw low-dose projection SSIM rises with b0.
Outcome monotonicity(const Context&) {
  const Phantom phantom = make_disk_pack_phantom(128, 128, 12, 0.005, 0.02, 5, 32);
  const ProjectionStack clean = clean_stack(phantom, 360);
  std::vector<double> ssims;
  for (double b0 : {10.0, 50.0, 100.0, 500.0, 1000.0}) {
    ssims.push_back(stack_report(simulate_low_dose(clean, b0, 21), clean, 1.0).mean_ssim);
  }
  bool increasing = true;
  std::string detail;
  for (std::size_t i = 0; i < ssims.size(); ++i) {
    if (i > 0 && !(ssims[i] > ssims[i - 1])) increasing = false;
    detail += (i ? " < " : "") + fmt(ssims[i]);
  }
  return {increasing, "b0 10..1000: " + detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A6: two CLI sweeps over the default grids give the same bytes.
Outcome determinism(const Context& ctx) {
  if (ctx.cli.empty()) return {false, "no --cli given"};
  const std::string args =
      " sweep --seed 7 --size 32 --depth 16 --disks 4 --angles 360 --scales 2 --base-channels 4 --units 1"
      " --lr 0.001 --batch 4 --patch 16 --patches-per-pair 2 --epochs 2 --tile 16 --stride 8";
  std::vector<std::string> csv, svg;
  for (const char* run : {"sweep_a", "sweep_b"}) {
    const fs::path dir = ctx.work / run;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cmd = ctx.cli.string() + args + " --out-dir " + dir.string() + " > " + (dir / "log.txt").string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, std::string(run) + " failed, see " + (dir / "log.txt").string()};
    csv.push_back(slurp(dir / "sweep.csv"));
    svg.push_back(slurp(dir / "sweep.svg"));
  }
  const auto rows = std::count(csv[0].begin(), csv[0].end(), '\n');
  const bool same = !csv[0].empty() && csv[0] == csv[1] && svg[0] == svg[1];
  return {same && rows == 26, std::to_string(rows - 1) + " points, csv " + (csv[0] == csv[1] ? "identical" : "differs") +
                                  ", svg " + (svg[0] == svg[1] ? "identical" : "differs")};
}

// Independent sliding-window SSIM: normalized 11x11 Gaussian, fresh statistics per position.
double brute_ssim(const Image& a, const Image& b, double range) {
  const int win = 11;
  double w[11][11], total = 0.0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      total += w[i][j];
    }
  }
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  double sum = 0.0;
  int count = 0;
  for (int y = 0; y + win <= a.height; ++y) {
    for (int x = 0; x + win <= a.width; ++x) {
      double ma = 0, mb = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          ma += w[i][j] / total * a.at(x + j, y + i);
          mb += w[i][j] / total * b.at(x + j, y + i);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double da = a.at(x + j, y + i) - ma, db = b.at(x + j, y + i) - mb;
          va += w[i][j] / total * da * da;
          vb += w[i][j] / total * db * db;
          cov += w[i][j] / total * da * db;
        }
      }
      sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return sum / count;
}

// A7: metric oracles.
Outcome metric_oracles(const Context&) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto random_image = [&](int w, int h) {
    Image im(w, h);
    for (double& v : im.values) v = unit(gen);
    return im;
  };
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };

  const Image a = random_image(32, 32);
  Image b = a;
  for (double& v : b.values) v = std::clamp(v + 0.2 * (unit(gen) - 0.5), 0.0, 1.0);
  const double got = ssim(a, b, 1.0), want = brute_ssim(a, b, 1.0);
  expect(std::abs(got - want) <= 1e-9, "ssim vs sliding-window oracle");
  expect(std::abs(ssim(a, b, 1.0) - ssim(b, a, 1.0)) <= 1e-12, "ssim symmetry");
  expect(std::abs(ssim(a, a, 1.0) - 1.0) <= 1e-12, "ssim(x, x) = 1");
  Image inverted = a;
  for (double& v : inverted.values) v = 1.0 - v;
  expect(ssim(a, inverted, 1.0) < 1.0, "ssim(x, 1 - x) < 1");

  expect(psnr(a, a, 1.0) == kPsnrCap, "identical images hit the cap");
  Image shifted = a;
  for (double& v : shifted.values) v += 0.1;
  expect(std::abs(psnr(a, shifted, 1.0) - 20.0) <= 1e-9, "L = 1, c = 0.1 gives 20 dB");
  for (double c : {0.01, 0.3}) {
    Image s = a;
    for (double& v : s.values) v += c;
    expect(std::abs(psnr(a, s, 4.0) - 20.0 * std::log10(4.0 / c)) <= 1e-9, "psnr constant offset " + fmt(c, 2));
  }
  return {failed.empty(), "ssim " + fmt(got, 12) + " oracle " + fmt(want, 12) + (failed.empty() ? "" : "; failed: " + failed.front())};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    std::string name;
    std::function<Outcome(const Context&)> run;
    double limit_seconds;  // 0: no runtime bound
  };
  const std::map<std::string, Criterion> criteria{
      {"A1", {"Poisson moments", poisson_moments, 10}},
      {"A2", {"gradient checks", gradients, 60}},
      {"A3", {"reconstruction round trip", reconstruction, 120}},
      {"A4", {"hybrid vs uniform dose", hybrid_vs_uniform, 1800}},
      {"A5", {"dose monotonicity", monotonicity, 60}},
      {"A6", {"sweep determinism", determinism, 0}},
      {"A7", {"metric oracles", metric_oracles, 10}},
  };
  Context ctx{{}, fs::temp_directory_path() / "hdrec_acceptance"};
  std::vector<std::string> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      ctx.cli = argv[++i];
    } else if (arg == "--work" && i + 1 < argc) {
      ctx.work = argv[++i];
    } else if (arg == "all") {
      for (const auto& [id, _] : criteria) selected.push_back(id);
    } else if (criteria.contains(arg)) {
      selected.push_back(arg);
    } else {
      std::cerr << "usage: hdrec_acceptance [A1..A7 | all] [--cli PATH] [--work DIR]\n";
      return 2;
    }
  }
  if (selected.empty()) {
    for (const auto& [id, _] : criteria) selected.push_back(id);
  }
  fs::create_directories(ctx.work);

  bool all_pass = true;
  for (const auto& id : selected) {
    const Criterion& c = criteria.at(id);
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt(seconds, 1) + " s";
    if (c.limit_seconds > 0) {
      timing += " of " + fmt(c.limit_seconds, 0);
      o.pass = o.pass && seconds < c.limit_seconds;
    }
    std::cout << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail << " [" << timing
              << "]" << std::endl;
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}

#include <benchmark/benchmark.h>

#include "hdrec/dose.hpp"
#include "hdrec/forward.hpp"
#include "hdrec/metrics.hpp"
#include "hdrec/nn/featnet.hpp"
#include "hdrec/nn/loss.hpp"
#include "hdrec/nn/unet.hpp"
#include "hdrec/phantom.hpp"
#include "hdrec/recon.hpp"

using namespace hdrec;

namespace {

void BM_SiddonProject(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Phantom phantom = make_shepp_logan(size);
  const Geometry geometry = Geometry::parallel(180, covering_detector_count(size));
  for (auto _ : state) benchmark::DoNotOptimize(siddon_project(phantom, geometry));
}
BENCHMARK(BM_SiddonProject)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FbpParzen(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const ProjectionStack sino =
      siddon_project(make_shepp_logan(size), Geometry::parallel(360, covering_detector_count(size)));
  for (auto _ : state) benchmark::DoNotOptimize(fbp_reconstruct(sino, size, FilterKind::Parzen));
}
BENCHMARK(BM_FbpParzen)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SimulateLowDose(benchmark::State& state) {
  const ProjectionStack clean =
      beer_transmit(siddon_project(make_shepp_logan(128), Geometry::parallel(360, 184)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_low_dose(clean, 100.0, 7));
}
BENCHMARK(BM_SimulateLowDose)->Unit(benchmark::kMillisecond);

void BM_UnetForward(benchmark::State& state) {
  nn::DenoiserConfig cfg;
  cfg.base_channels = static_cast<int>(state.range(0));
  const nn::ModelWeights weights = nn::build_model(cfg);
  nn::Tensor input(1, 128, 128, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(weights, input));
}
BENCHMARK(BM_UnetForward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_UnetTrainStep(benchmark::State& state) {
  nn::DenoiserConfig cfg;
  cfg.base_channels = static_cast<int>(state.range(0));
  const nn::ModelWeights weights = nn::build_model(cfg);
  const nn::FeatureNet featnet(1);
  nn::Tensor input(1, 128, 128, 0.5), target(1, 128, 128, 0.4);
  nn::ParamStore grads = weights.params.zeros_like();
  for (auto _ : state) {
    nn::ForwardTrace trace;
    const nn::Tensor pred = nn::forward(weights, input, &trace);
    nn::Tensor d;
    nn::loss_with_gradient(pred, target, 1.0, 0.1, featnet, d);
    benchmark::DoNotOptimize(nn::backward(weights, trace, d, grads));
  }
}
BENCHMARK(BM_UnetTrainStep)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const Phantom a = make_shepp_logan(256);
  Image b = a.image();
  for (std::size_t i = 0; i < b.values.size(); ++i) b.values[i] += 1e-3 * static_cast<double>(i % 7);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a.image(), b, 0.02));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "hdrec/dose.hpp"
#include "hdrec/nn/featnet.hpp"
#include "hdrec/nn/loss.hpp"
#include "hdrec/nn/unet.hpp"

namespace hdrec::nn {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 16;
  int patch_size = 128;
  int patches_per_pair = 16;
  int epochs = 50;
  double alpha = 1.0;
  double beta = 0.1;
  double split_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PatchPair {
  int pair_index = 0;
  int y = 0;
  int x = 0;
  Tensor low;
  Tensor normal;
};

/// `count_per_pair` aligned random crops of every pair; offsets depend only on
/// (seed, pair position, draw index).
std::vector<PatchPair> extract_patches(const std::vector<ProjectionPair>& pairs, int patch, int count_per_pair,
                                       std::uint64_t seed);

struct DataSplit {
  std::vector<int> train;
  std::vector<int> validation;
};

/// floor(fraction * n) training pairs (at most n - 1), the rest validation,
/// assigned by a seeded shuffle. Needs n >= 2.
DataSplit split_pairs(int n_pairs, double fraction, std::uint64_t seed);

class Adam {
 public:
  Adam(const ParamStore& like, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(ParamStore& params, const ParamStore& grads);
  int steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  int t_ = 0;
  ParamStore m_, v_;
};

struct EpochRecord {
  int epoch = 0;
  LossReport train;
  LossReport validation;
};

struct TrainResult {
  ModelWeights weights;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Mean loss of the model over the patches.
LossReport evaluate(const ModelWeights& weights, const std::vector<PatchPair>& patches, double alpha, double beta,
                    const FeatureNet& featnet);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam on per-epoch redrawn, shuffled training patches; validation on a fixed
/// patch set. Returns the weights of the epoch with the lowest validation total.
TrainResult train(const std::vector<ProjectionPair>& pairs, const DenoiserConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});
/// Continues from `initial` instead of a fresh build_model.
TrainResult train(const std::vector<ProjectionPair>& pairs, const ModelWeights& initial, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);
std::vector<EpochRecord> read_history_csv(const std::filesystem::path& path);

}  // namespace hdrec::nn

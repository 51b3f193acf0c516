#include "hdrec/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hdrec/error.hpp"
#include "hdrec/io.hpp"
#include "hdrec/rng.hpp"

namespace hdrec::nn {
namespace {

Tensor crop(const Image& image, int y, int x, int size) {
  Tensor t(1, size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) t.at(0, i, j) = image.at(x + j, y + i);
  }
  return t;
}

void shuffle(std::vector<std::size_t>& order, std::uint64_t seed) {
  CounterStream rng(seed, Stream::Shuffle);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
}

/// `where` names the batch ("batch 3", 1-based) or the validation pass.
void check_finite(const LossReport& r, int epoch, const std::string& where) {
  if (!std::isfinite(r.total) || !std::isfinite(r.l1) || !std::isfinite(r.perceptual)) {
    throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", " + where);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
  if (batch_size < 1) throw ParameterError("batch_size must be positive");
  if (patch_size < 4) throw ParameterError("patch_size must be at least 4");
  if (patches_per_pair < 1) throw ParameterError("patches_per_pair must be positive");
  if (epochs < 1) throw ParameterError("epochs must be positive");
  if (alpha < 0.0 || beta < 0.0) throw ParameterError("alpha and beta must be non-negative");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ParameterError("split_fraction must lie in (0, 1)");
}

std::vector<PatchPair> extract_patches(const std::vector<ProjectionPair>& pairs, int patch, int count_per_pair,
                                       std::uint64_t seed) {
  if (patch < 1) throw ParameterError("patch size must be positive");
  if (count_per_pair < 0) throw ParameterError("count_per_pair must be non-negative");
  std::vector<PatchPair> out;
  out.reserve(pairs.size() * static_cast<std::size_t>(count_per_pair));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Image& low = pairs[p].low;
    const Image& normal = pairs[p].normal;
    if (low.width != normal.width || low.height != normal.height) throw ShapeError("pair members differ in size");
    if (count_per_pair == 0) continue;
    if (low.width < patch || low.height < patch) {
      throw ShapeError("projection " + std::to_string(low.width) + "x" + std::to_string(low.height) +
                       " is smaller than patch " + std::to_string(patch));
    }
    CounterStream rng(seed, Stream::Patches, static_cast<std::uint32_t>(p));
    for (int k = 0; k < count_per_pair; ++k) {
      const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(low.height - patch + 1)));
      const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(low.width - patch + 1)));
      out.push_back({static_cast<int>(p), y, x, crop(low, y, x, patch), crop(normal, y, x, patch)});
    }
  }
  return out;
}

DataSplit split_pairs(int n_pairs, double fraction, std::uint64_t seed) {
  if (n_pairs < 2) throw ParameterError("training needs at least 2 pairs, got " + std::to_string(n_pairs));
  if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("split fraction must lie in (0, 1)");
  const int n_train = std::max(1, std::min(static_cast<int>(std::floor(fraction * n_pairs)), n_pairs - 1));
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, mix_seed(seed, static_cast<std::uint64_t>(Stream::Split)));
  DataSplit split;
  for (int i = 0; i < n_pairs; ++i) (i < n_train ? split.train : split.validation).push_back(static_cast<int>(order[i]));
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

Adam::Adam(const ParamStore& like, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(eps), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(ParamStore& params, const ParamStore& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, t_);
  const double c2 = 1.0 - std::pow(b2_, t_);
  auto& pe = params.entries();
  const auto& ge = grads.entries();
  auto& me = m_.entries();
  auto& ve = v_.entries();
  for (std::size_t e = 0; e < pe.size(); ++e) {
    auto& p = pe[e].second.values;
    const auto& g = ge[e].second.values;
    auto& m = me[e].second.values;
    auto& v = ve[e].second.values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

LossReport evaluate(const ModelWeights& weights, const std::vector<PatchPair>& patches, double alpha, double beta,
                    const FeatureNet& featnet) {
  LossReport mean;
  if (patches.empty()) return mean;
  for (const auto& p : patches) {
    const Tensor pred = forward(weights, p.low);
    const LossReport r = total_loss(pred, p.normal, alpha, beta, featnet);
    mean.l1 += r.l1;
    mean.perceptual += r.perceptual;
  }
  mean.l1 /= static_cast<double>(patches.size());
  mean.perceptual /= static_cast<double>(patches.size());
  mean.total = alpha * mean.l1 + beta * mean.perceptual;
  return mean;
}

TrainResult train(const std::vector<ProjectionPair>& pairs, const DenoiserConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  model_config.validate();
  return train(pairs, build_model(model_config), config, on_epoch);
}

TrainResult train(const std::vector<ProjectionPair>& pairs, const ModelWeights& initial, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  initial.validate();
  const DenoiserConfig& model_config = initial.config;
  if (config.patch_size % model_config.size_multiple() != 0 || config.patch_size % 4 != 0) {
    throw ParameterError("patch_size must be a multiple of " +
                         std::to_string(std::max(4, model_config.size_multiple())));
  }
  const DataSplit split = split_pairs(static_cast<int>(pairs.size()), config.split_fraction, config.seed);
  std::vector<ProjectionPair> train_pairs, val_pairs;
  for (int i : split.train) train_pairs.push_back(pairs[i]);
  for (int i : split.validation) val_pairs.push_back(pairs[i]);

  const FeatureNet featnet(config.seed);
  const std::vector<PatchPair> val_patches =
      extract_patches(val_pairs, config.patch_size, config.patches_per_pair, mix_seed(config.seed, 0x7A11D));

  TrainResult result{initial, {}, 0};
  ModelWeights& weights = result.weights;
  ModelWeights best = weights;
  double best_total = std::numeric_limits<double>::infinity();
  Adam adam(weights.params, config.learning_rate);
  ParamStore grads = weights.params.zeros_like();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(config.seed, 0xE90C0000ull + static_cast<std::uint64_t>(epoch));
    const std::vector<PatchPair> patches =
        extract_patches(train_pairs, config.patch_size, config.patches_per_pair, epoch_seed);
    std::vector<std::size_t> order(patches.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, epoch_seed);

    LossReport sum;
    int batch = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double inv_b = 1.0 / static_cast<double>(stop - start);
      grads.fill(0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const PatchPair& p = patches[order[k]];
        ForwardTrace trace;
        const Tensor pred = forward(weights, p.low, &trace);
        Tensor d_pred;
        const LossReport r = loss_with_gradient(pred, p.normal, config.alpha, config.beta, featnet, d_pred);
        check_finite(r, epoch, "batch " + std::to_string(batch + 1));
        for (double& v : d_pred.data) v *= inv_b;
        backward(weights, trace, d_pred, grads);
        sum.l1 += r.l1;
        sum.perceptual += r.perceptual;
      }
      adam.step(weights.params, grads);
    }
    EpochRecord record;
    record.epoch = epoch;
    const double n = static_cast<double>(patches.size());
    record.train.l1 = sum.l1 / n;
    record.train.perceptual = sum.perceptual / n;
    record.train.total = config.alpha * record.train.l1 + config.beta * record.train.perceptual;
    record.validation = evaluate(weights, val_patches, config.alpha, config.beta, featnet);
    check_finite(record.validation, epoch, "validation");
    result.history.push_back(record);
    if (record.validation.total < best_total) {
      best_total = record.validation.total;
      best = weights;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(record);
  }
  result.weights = std::move(best);
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(ParseError::Kind::Io, "cannot write " + path.string());
  out << "epoch,train_l1,train_perc,train_total,val_l1,val_perc,val_total\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.train.l1) << ',' << format_double(r.train.perceptual) << ','
        << format_double(r.train.total) << ',' << format_double(r.validation.l1) << ','
        << format_double(r.validation.perceptual) << ',' << format_double(r.validation.total) << '\n';
  }
}

std::vector<EpochRecord> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Kind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_l1,train_perc,train_total,val_l1,val_perc,val_total") {
    throw ParseError(ParseError::Kind::MalformedHeader, "unexpected history header in " + path.string());
  }
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw ParseError(ParseError::Kind::MalformedHeader, "bad history row: " + line);
    EpochRecord r;
    r.epoch = std::stoi(f[0]);
    r.train = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3])};
    r.validation = {parse_double(f[4]), parse_double(f[5]), parse_double(f[6])};
    out.push_back(r);
  }
  return out;
}

}  // namespace hdrec::nn

// Copyright 2026 The embinvert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "embinvert/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "embinvert/binary_io.h"
#include "embinvert/error.h"

namespace embinvert::decoder {

using Eigen::Index;
using trainset::TrainingPair;
using trainset::TrainingSet;

void DecoderShape::validate() const {
  if (vocab_size <= kNumSpecials || token_width == 0 || cond_dim == 0 ||
      hidden == 0 || context == 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "decoder shape needs |V| > 4 and positive m, d, h, n");
  }
}

std::size_t DecoderShape::param_count() const {
  return vocab_size * token_width + cond_dim * hidden +
         context * token_width * hidden + hidden + hidden * vocab_size +
         vocab_size;
}

DecoderParams::DecoderParams(DecoderShape shape) : shape_(shape) {
  shape_.validate();
  data_.assign(shape_.param_count(), 0.0);
}

DecoderParams::Offsets DecoderParams::offsets() const {
  const auto& s = shape_;
  Offsets o{};
  o.token_embed = 0;
  o.cond_proj = o.token_embed + s.vocab_size * s.token_width;
  o.ctx_proj = o.cond_proj + s.cond_dim * s.hidden;
  o.hidden_bias = o.ctx_proj + s.context * s.token_width * s.hidden;
  o.out_proj = o.hidden_bias + s.hidden;
  o.out_bias = o.out_proj + s.hidden * s.vocab_size;
  o.end = o.out_bias + s.vocab_size;
  return o;
}

std::vector<DecoderParams::Group> DecoderParams::groups() const {
  const auto o = offsets();
  return {{"token_embed", o.token_embed, o.cond_proj - o.token_embed},
          {"cond_proj", o.cond_proj, o.ctx_proj - o.cond_proj},
          {"ctx_proj", o.ctx_proj, o.hidden_bias - o.ctx_proj},
          {"hidden_bias", o.hidden_bias, o.out_proj - o.hidden_bias},
          {"out_proj", o.out_proj, o.out_bias - o.out_proj},
          {"out_bias", o.out_bias, o.end - o.out_bias}};
}

#define EMBINVERT_MATRIX_ACCESSORS(name, Type, rows, cols)                 \
  Eigen::Map<Type> DecoderParams::name() {                                 \
    return {data_.data() + offsets().name, static_cast<Index>(rows),       \
            static_cast<Index>(cols)};                                     \
  }                                                                        \
  Eigen::Map<const Type> DecoderParams::name() const {                     \
    return {data_.data() + offsets().name, static_cast<Index>(rows),       \
            static_cast<Index>(cols)};                                     \
  }

EMBINVERT_MATRIX_ACCESSORS(token_embed, RowMajorMatrix, shape_.vocab_size,
                           shape_.token_width)
EMBINVERT_MATRIX_ACCESSORS(cond_proj, Eigen::MatrixXd, shape_.cond_dim,
                           shape_.hidden)
EMBINVERT_MATRIX_ACCESSORS(ctx_proj, Eigen::MatrixXd,
                           shape_.context* shape_.token_width, shape_.hidden)
EMBINVERT_MATRIX_ACCESSORS(out_proj, Eigen::MatrixXd, shape_.hidden,
                           shape_.vocab_size)
#undef EMBINVERT_MATRIX_ACCESSORS

Eigen::Map<Eigen::VectorXd> DecoderParams::hidden_bias() {
  return {data_.data() + offsets().hidden_bias,
          static_cast<Index>(shape_.hidden)};
}
Eigen::Map<const Eigen::VectorXd> DecoderParams::hidden_bias() const {
  return {data_.data() + offsets().hidden_bias,
          static_cast<Index>(shape_.hidden)};
}
Eigen::Map<Eigen::VectorXd> DecoderParams::out_bias() {
  return {data_.data() + offsets().out_bias,
          static_cast<Index>(shape_.vocab_size)};
}
Eigen::Map<const Eigen::VectorXd> DecoderParams::out_bias() const {
  return {data_.data() + offsets().out_bias,
          static_cast<Index>(shape_.vocab_size)};
}

DecoderParams DecoderParams::random(DecoderShape shape, std::uint64_t seed) {
  DecoderParams p(shape);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::span<double> block, std::size_t fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-a, a);
    for (double& x : block) x = u(rng);
  };
  const auto flat = p.flat();
  for (const auto& g : p.groups()) {
    const std::string_view name = g.name;
    const auto block = flat.subspan(g.offset, g.size);
    if (name == "token_embed") {
      fill(block, shape.token_width);
    } else if (name == "cond_proj") {
      fill(block, shape.cond_dim);
    } else if (name == "ctx_proj") {
      fill(block, shape.context * shape.token_width);
    } else if (name == "out_proj") {
      fill(block, shape.hidden);
    }
  }
  return p;
}

std::vector<TokenId> make_context(std::span<const TokenId> prefix,
                                  std::size_t n) {
  std::vector<TokenId> ctx(n, kBosId);
  const std::size_t take = std::min(n, prefix.size());
  std::copy(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(take));
  return ctx;
}

namespace {

void check_conditioning(const DecoderParams& params,
                        const EmbeddingVector& conditioning) {
  if (conditioning.dim() != params.shape().cond_dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "conditioning dim " + std::to_string(conditioning.dim()) +
                    " != decoder d " +
                    std::to_string(params.shape().cond_dim));
  }
}

void check_token(const DecoderParams& params, TokenId id) {
  if (id >= params.shape().vocab_size) {
    throw Error(ErrorCode::kShapeMismatch,
                "token id " + std::to_string(id) + " outside vocabulary");
  }
}

// In-place log-softmax of one column; returns the log-normalizer.
template <typename Col>
double log_softmax_inplace(Col&& col) {
  const double mx = col.maxCoeff();
  const double lse = mx + std::log((col.array() - mx).exp().sum());
  col.array() -= lse;
  return lse;
}

// Sum of teacher-forced pair losses over `batch`. When `grad` is non-null,
// accumulates scale * d(sum)/d(params) into it.
double batch_pass(const DecoderParams& p, std::span<const TrainingPair> batch,
                  DecoderParams* grad, double scale) {
  const auto& s = p.shape();
  const auto B = static_cast<Index>(batch.size());
  const auto n = s.context;
  const auto m = static_cast<Index>(s.token_width);
  const auto nm = static_cast<Index>(n * s.token_width);

  Index T = 0;
  for (const auto& pair : batch) {
    check_conditioning(p, pair.conditioning);
    T += static_cast<Index>(pair.target_tokens.size());
  }
  if (T == 0) return 0.0;

  Eigen::MatrixXd E(static_cast<Index>(s.cond_dim), B);
  Eigen::MatrixXd X(nm, T);
  std::vector<TokenId> ctx_ids(static_cast<std::size_t>(T) * n);
  std::vector<TokenId> targets(static_cast<std::size_t>(T));
  std::vector<Index> owner(static_cast<std::size_t>(T));
  const auto table = p.token_embed();

  Index col = 0;
  std::vector<TokenId> window(n);
  for (Index b = 0; b < B; ++b) {
    const auto& pair = batch[static_cast<std::size_t>(b)];
    E.col(b) = Eigen::Map<const Eigen::VectorXd>(
        pair.conditioning.values.data(),
        static_cast<Index>(pair.conditioning.dim()));
    std::fill(window.begin(), window.end(), kBosId);
    for (TokenId t : pair.target_tokens) {
      check_token(p, t);
      for (std::size_t k = 0; k < n; ++k) {
        ctx_ids[static_cast<std::size_t>(col) * n + k] = window[k];
        X.block(static_cast<Index>(k) * m, col, m, 1) =
            table.row(window[k]).transpose();
      }
      targets[static_cast<std::size_t>(col)] = t;
      owner[static_cast<std::size_t>(col)] = b;
      std::rotate(window.begin(), window.begin() + 1, window.end());
      window.back() = t;
      ++col;
    }
  }

  Eigen::MatrixXd C = p.cond_proj().transpose() * E;
  C.colwise() += p.hidden_bias();
  Eigen::MatrixXd Z = p.ctx_proj().transpose() * X;
  for (Index c = 0; c < T; ++c) Z.col(c) += C.col(owner[static_cast<std::size_t>(c)]);
  Z = Z.array().tanh();

  Eigen::MatrixXd L = p.out_proj().transpose() * Z;
  L.colwise() += p.out_bias();

  double loss = 0.0;
  for (Index c = 0; c < T; ++c) {
    log_softmax_inplace(L.col(c));
    loss -= L(static_cast<Index>(targets[static_cast<std::size_t>(c)]), c);
  }
  if (grad == nullptr) return loss;

  // dLoss/dLogits = softmax - onehot.
  Eigen::MatrixXd& G = L;
  G = G.array().exp();
  for (Index c = 0; c < T; ++c) {
    G(static_cast<Index>(targets[static_cast<std::size_t>(c)]), c) -= 1.0;
  }
  G *= scale;

  grad->out_proj().noalias() += Z * G.transpose();
  grad->out_bias() += G.rowwise().sum();
  Eigen::MatrixXd dH = p.out_proj() * G;
  dH.array() *= 1.0 - Z.array().square();
  grad->hidden_bias() += dH.rowwise().sum();
  grad->ctx_proj().noalias() += X * dH.transpose();

  const Eigen::MatrixXd dX = p.ctx_proj() * dH;
  auto gtable = grad->token_embed();
  for (Index c = 0; c < T; ++c) {
    for (std::size_t k = 0; k < n; ++k) {
      gtable.row(ctx_ids[static_cast<std::size_t>(c) * n + k]) +=
          dX.block(static_cast<Index>(k) * m, c, m, 1).transpose();
    }
  }

  Eigen::MatrixXd dC = Eigen::MatrixXd::Zero(static_cast<Index>(s.hidden), B);
  for (Index c = 0; c < T; ++c) dC.col(owner[static_cast<std::size_t>(c)]) += dH.col(c);
  grad->cond_proj().noalias() += E * dC.transpose();
  return loss;
}

constexpr std::size_t kEvalChunk = 256;

}  // namespace

Eigen::VectorXd conditioned_bias(const DecoderParams& params,
                                 const EmbeddingVector& conditioning) {
  check_conditioning(params, conditioning);
  const Eigen::Map<const Eigen::VectorXd> e(
      conditioning.values.data(), static_cast<Index>(conditioning.dim()));
  Eigen::VectorXd bias = params.cond_proj().transpose() * e;
  bias += params.hidden_bias();
  return bias;
}

void logprobs_from_bias(const DecoderParams& params,
                        const Eigen::VectorXd& bias,
                        std::span<const TokenId> context,
                        std::vector<double>& out) {
  const auto& s = params.shape();
  if (context.size() != s.context) {
    throw Error(ErrorCode::kShapeMismatch,
                "context length " + std::to_string(context.size()) +
                    " != n " + std::to_string(s.context));
  }
  const auto m = static_cast<Index>(s.token_width);
  Eigen::VectorXd x(static_cast<Index>(s.context) * m);
  const auto table = params.token_embed();
  for (std::size_t k = 0; k < context.size(); ++k) {
    check_token(params, context[k]);
    x.segment(static_cast<Index>(k) * m, m) = table.row(context[k]).transpose();
  }
  Eigen::VectorXd z = bias;
  z.noalias() += params.ctx_proj().transpose() * x;
  z = z.array().tanh();
  out.resize(s.vocab_size);
  Eigen::Map<Eigen::VectorXd> logits(out.data(),
                                     static_cast<Index>(s.vocab_size));
  logits = params.out_bias();
  logits.noalias() += params.out_proj().transpose() * z;
  log_softmax_inplace(logits);
}

std::vector<double> forward_logprobs(const DecoderParams& params,
                                     const EmbeddingVector& conditioning,
                                     std::span<const TokenId> context) {
  std::vector<double> out;
  logprobs_from_bias(params, conditioned_bias(params, conditioning), context,
                     out);
  return out;
}

double pair_loss(const DecoderParams& params, const TrainingPair& pair) {
  return batch_pass(params, std::span<const TrainingPair>(&pair, 1), nullptr,
                    1.0);
}

double total_loss(const DecoderParams& params,
                  std::span<const TrainingPair> pairs) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); i += kEvalChunk) {
    sum += batch_pass(params,
                      pairs.subspan(i, std::min(kEvalChunk, pairs.size() - i)),
                      nullptr, 1.0);
  }
  return sum;
}

double mean_loss(const DecoderParams& params,
                 std::span<const TrainingPair> pairs) {
  if (pairs.empty()) return 0.0;
  return total_loss(params, pairs) / static_cast<double>(pairs.size());
}

LossAndGradient gradients(const DecoderParams& params,
                          std::span<const TrainingPair> batch) {
  if (batch.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient of an empty batch");
  }
  LossAndGradient out{0.0, DecoderParams(params.shape())};
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss = batch_pass(params, batch, &out.grad, inv) * inv;
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be >= 0");
  }
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  }
  if (optimizer == OptimizerKind::kAdam &&
      !(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 &&
        epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid Adam hyperparameters");
  }
}

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["optimizer"] = optimizer == OptimizerKind::kAdam ? "adam" : "sgd";
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["epsilon"] = epsilon;
  j["grad_clip_norm"] = grad_clip_norm;
  return j.dump();
}

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t n) : cfg_(cfg) {
    if (cfg.optimizer == OptimizerKind::kAdam) {
      m_.assign(n, 0.0);
      v_.assign(n, 0.0);
    }
  }

  void step(std::span<double> params, std::span<double> grad) {
    if (cfg_.grad_clip_norm > 0.0) {
      double sq = 0.0;
      for (double g : grad) sq += g * g;
      const double norm = std::sqrt(sq);
      if (norm > cfg_.grad_clip_norm) {
        const double f = cfg_.grad_clip_norm / norm;
        for (double& g : grad) g *= f;
      }
    }
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
      return;
    }
    ++t_;
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
      v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
    }
  }

 private:
  const TrainConfig& cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

void check_compatible(const DecoderParams& params, const TrainingSet& set) {
  if (!set.empty() && set.dim != params.shape().cond_dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "training set dim " + std::to_string(set.dim) +
                    " != decoder d " +
                    std::to_string(params.shape().cond_dim));
  }
}

}  // namespace

TrainResult train(const DecoderParams& params, const TrainingSet& training_set,
                  const TrainConfig& cfg, const TrainingSet& validation_set) {
  cfg.validate();
  check_compatible(params, training_set);
  check_compatible(params, validation_set);
  const bool has_val = !validation_set.empty();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  TrainResult result;
  result.params = params;
  if (training_set.empty()) return result;

  DecoderParams current = params;
  result.initial_train_loss = mean_loss(current, training_set.pairs);
  result.initial_validation_loss =
      has_val ? mean_loss(current, validation_set.pairs) : kNaN;
  double best_val = result.initial_validation_loss;

  Optimizer opt(cfg, current.flat().size());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(training_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingPair> batch;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(training_set.pairs[order[i]]);
      }
      auto lg = gradients(current, batch);
      if (!std::isfinite(lg.loss)) {
        throw Error(ErrorCode::kDivergenceDetected,
                    "non-finite training loss in epoch " +
                        std::to_string(epoch));
      }
      epoch_loss += lg.loss * static_cast<double>(batch.size());
      opt.step(current.flat(), lg.grad.flat());
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(order.size());
    stats.validation_loss =
        has_val ? mean_loss(current, validation_set.pairs) : kNaN;
    if (has_val && !std::isfinite(stats.validation_loss)) {
      throw Error(ErrorCode::kDivergenceDetected,
                  "non-finite validation loss in epoch " +
                      std::to_string(epoch));
    }
    result.curve.push_back(stats);
    if (has_val && stats.validation_loss < best_val) {
      best_val = stats.validation_loss;
      result.params = current;
      result.best_epoch = epoch;
    }
  }
  if (!has_val) {
    result.params = std::move(current);
    result.best_epoch = cfg.epochs;
  }
  return result;
}

TrainResult continue_training(const DecoderParams& params,
                              const TrainingSet& extra_set,
                              const TrainConfig& cfg,
                              const TrainingSet& validation_set) {
  return train(params, extra_set, cfg, validation_set);
}

namespace {
constexpr std::string_view kCkptMagic = "EMBK";
constexpr std::uint32_t kCkptVersion = 1;
}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& ckpt) {
  const auto& s = ckpt.params.shape();
  BinaryWriter w;
  w.bytes(kCkptMagic);
  w.u32(kCkptVersion);
  w.u64(s.vocab_size);
  w.u64(s.token_width);
  w.u64(s.cond_dim);
  w.u64(s.hidden);
  w.u64(s.context);
  w.u64(ckpt.vocab_hash);
  w.u64(ckpt.embedder_fingerprint);
  w.str(ckpt.config_echo);
  w.u64(ckpt.params.flat().size());
  w.f64s(ckpt.params.flat());
  w.write_file(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_vocab_hash) {
  auto r = BinaryReader::from_file(path);
  r.expect_header(kCkptMagic, kCkptVersion);
  DecoderShape s;
  s.vocab_size = r.u64();
  s.token_width = r.u64();
  s.cond_dim = r.u64();
  s.hidden = r.u64();
  s.context = r.u64();
  Checkpoint ckpt;
  ckpt.vocab_hash = r.u64();
  ckpt.embedder_fingerprint = r.u64();
  ckpt.config_echo = r.str();
  const std::uint64_t count = r.u64();
  // Reject absurd shapes before allocating.
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 32;
  if (s.vocab_size >= kLimit || s.token_width >= kLimit ||
      s.cond_dim >= kLimit || s.hidden >= kLimit || s.context >= kLimit ||
      count != r.remaining() / 8 || r.remaining() % 8 != 0) {
    throw Error(ErrorCode::kCorruptFile, "checkpoint payload size mismatch");
  }
  try {
    ckpt.params = DecoderParams(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, e.what());
  }
  if (ckpt.params.flat().size() != count) {
    throw Error(ErrorCode::kCorruptFile, "checkpoint shape/payload mismatch");
  }
  r.f64s(ckpt.params.flat());
  if (expected_vocab_hash && *expected_vocab_hash != ckpt.vocab_hash) {
    throw Error(ErrorCode::kVocabMismatch,
                "checkpoint was trained with a different vocabulary");
  }
  return ckpt;
}

}  // namespace embinvert::decoder

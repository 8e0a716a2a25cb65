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

#ifndef EMBINVERT_DECODER_H_
#define EMBINVERT_DECODER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "embinvert/corpus.h"
#include "embinvert/embedder.h"
#include "embinvert/trainset.h"

namespace embinvert::decoder {

// The attack model is an embedding-conditioned feed-forward n-gram language
// model:
//
//   z      = tanh(cond_proj^T e + ctx_proj^T [E[c_1]; ...; E[c_n]] + b_h)
//   logits = out_proj^T z + b_o
//
// where e is the target embedding and c_1..c_n the previous n tokens
// (left-padded with BOS).
struct DecoderShape {
  std::size_t vocab_size = 0;
  std::size_t token_width = 32;  // m
  std::size_t cond_dim = 0;      // d
  std::size_t hidden = 128;      // h
  std::size_t context = 4;       // n

  void validate() const;
  std::size_t param_count() const;
  bool operator==(const DecoderShape&) const = default;
};

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// All trainable weights, stored in one contiguous buffer so optimizers,
// clipping and checkpoints work on a flat view. The accessors return Eigen
// maps into that buffer. Gradients use the same type.
class DecoderParams {
 public:
  DecoderParams() = default;
  // Zero-initialized.
  explicit DecoderParams(DecoderShape shape);
  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per matrix, zero biases. The
  // fan-in of the token table is its row width m.
  static DecoderParams random(DecoderShape shape, std::uint64_t seed);

  const DecoderShape& shape() const { return shape_; }

  // |V| x m
  Eigen::Map<RowMajorMatrix> token_embed();
  Eigen::Map<const RowMajorMatrix> token_embed() const;
  // d x h
  Eigen::Map<Eigen::MatrixXd> cond_proj();
  Eigen::Map<const Eigen::MatrixXd> cond_proj() const;
  // (n*m) x h
  Eigen::Map<Eigen::MatrixXd> ctx_proj();
  Eigen::Map<const Eigen::MatrixXd> ctx_proj() const;
  // h
  Eigen::Map<Eigen::VectorXd> hidden_bias();
  Eigen::Map<const Eigen::VectorXd> hidden_bias() const;
  // h x |V|
  Eigen::Map<Eigen::MatrixXd> out_proj();
  Eigen::Map<const Eigen::MatrixXd> out_proj() const;
  // |V|
  Eigen::Map<Eigen::VectorXd> out_bias();
  Eigen::Map<const Eigen::VectorXd> out_bias() const;

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const DecoderParams&) const = default;

  struct Group {
    const char* name;
    std::size_t offset;
    std::size_t size;
  };
  // Parameter groups in storage order.
  std::vector<Group> groups() const;

 private:
  struct Offsets {
    std::size_t token_embed, cond_proj, ctx_proj, hidden_bias, out_proj,
        out_bias, end;
  };
  Offsets offsets() const;

  DecoderShape shape_;
  std::vector<double> data_;
};

// Left-pads with BOS and keeps the last n ids of `prefix`.
std::vector<TokenId> make_context(std::span<const TokenId> prefix,
                                  std::size_t n);

// cond_proj^T e + hidden_bias; reused across decoding steps.
Eigen::VectorXd conditioned_bias(const DecoderParams& params,
                                 const EmbeddingVector& conditioning);

// Log-probabilities over the vocabulary given a precomputed conditioned bias.
void logprobs_from_bias(const DecoderParams& params,
                        const Eigen::VectorXd& bias,
                        std::span<const TokenId> context,
                        std::vector<double>& out);

// Throws kShapeMismatch if conditioning.dim != d or |context| != n.
std::vector<double> forward_logprobs(const DecoderParams& params,
                                     const EmbeddingVector& conditioning,
                                     std::span<const TokenId> context);

// Teacher-forced negative log-likelihood of the target (including its EOS).
double pair_loss(const DecoderParams& params,
                 const trainset::TrainingPair& pair);
// Sum of pair losses.
double total_loss(const DecoderParams& params,
                  std::span<const trainset::TrainingPair> pairs);
// Mean pair loss; 0 for an empty set.
double mean_loss(const DecoderParams& params,
                 std::span<const trainset::TrainingPair> pairs);

struct LossAndGradient {
  double loss = 0.0;  // mean pair loss over the batch
  DecoderParams grad;
};

// Exact gradient of the mean batch loss.
LossAndGradient gradients(const DecoderParams& params,
                          std::span<const trainset::TrainingPair> batch);

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global L2 norm; <= 0 disables clipping.
  double grad_clip_norm = 5.0;

  void validate() const;
  std::string to_json() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  // NaN without a validation set.
  double validation_loss = 0.0;
};

struct TrainResult {
  // Parameters with the best validation loss seen (including the starting
  // point); the final parameters when there is no validation set.
  DecoderParams params;
  double initial_train_loss = 0.0;
  double initial_validation_loss = 0.0;
  std::vector<EpochStats> curve;
  std::size_t best_epoch = 0;
};

// Mini-batch optimization of the mean pair loss. Deterministic given
// cfg.seed. Throws kDivergenceDetected on a non-finite loss.
TrainResult train(const DecoderParams& params,
                  const trainset::TrainingSet& training_set,
                  const TrainConfig& cfg,
                  const trainset::TrainingSet& validation_set = {});

// Same mechanics as train(), starting from already trained parameters.
TrainResult continue_training(const DecoderParams& params,
                              const trainset::TrainingSet& extra_set,
                              const TrainConfig& cfg,
                              const trainset::TrainingSet& validation_set = {});

struct Checkpoint {
  DecoderParams params;
  std::uint64_t vocab_hash = 0;
  std::uint64_t embedder_fingerprint = 0;
  std::string config_echo;
};

// "EMBK" container: shapes, vocab hash, embedder fingerprint, config echo and
// a little-endian f64 payload.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws kCorruptFile on any malformed input and kVocabMismatch when
// `expected_vocab_hash` is given and differs.
Checkpoint load_checkpoint(
    const std::filesystem::path& path,
    std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

}  // namespace embinvert::decoder

#endif  // EMBINVERT_DECODER_H_

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

#ifndef EMBINVERT_GENERATE_H_
#define EMBINVERT_GENERATE_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "embinvert/corpus.h"
#include "embinvert/decoder.h"
#include "embinvert/embedder.h"

namespace embinvert::generate {

struct Hypothesis {
  // Emitted tokens; the terminating EOS is not stored.
  std::vector<TokenId> tokens;
  // Sum of per-step model log-probabilities, including EOS when finished.
  double logprob = 0.0;
  bool finished = false;

  bool operator==(const Hypothesis&) const = default;
};

struct GenConfig {
  std::size_t beam_width = 4;
  // Maximum number of decoding steps; the EOS step counts as one.
  std::size_t max_len = 64;
  double temperature = 0.7;
  std::uint64_t seed = 0;

  void validate() const;
};

// Next-token distribution of a conditioned language model. PAD, BOS and UNK
// are never generated; EOS is not allowed as the first token.
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual std::size_t vocab_size() const = 0;
  // `prefix` holds the tokens emitted so far (no BOS).
  virtual void next_logprobs(std::span<const TokenId> prefix,
                             std::vector<double>& out) const = 0;
};

// The attack decoder conditioned on one embedding.
class DecoderStepModel final : public StepModel {
 public:
  DecoderStepModel(const decoder::DecoderParams& params,
                   const EmbeddingVector& conditioning);

  std::size_t vocab_size() const override {
    return params_->shape().vocab_size;
  }
  void next_logprobs(std::span<const TokenId> prefix,
                     std::vector<double>& out) const override;

 private:
  const decoder::DecoderParams* params_;
  Eigen::VectorXd bias_;
};

bool is_generable(TokenId id, std::size_t step);

// Argmax at each step, ties to the smallest id.
Hypothesis greedy_decode(const StepModel& model, const GenConfig& cfg);

struct BeamResult {
  Hypothesis best;
  std::vector<Hypothesis> finished;  // best first
  std::vector<Hypothesis> live;      // best first
};

// Keeps the global top-k expansions by cumulative log-probability at every
// step (no length normalization). EOS expansions retire to a finished pool;
// search stops when the pool holds k hypotheses or no live hypothesis can
// grow. Returns the best finished hypothesis, else the best live one. Ties
// go to the lexicographically smallest sequence.
BeamResult beam_search(const StepModel& model, const GenConfig& cfg);
Hypothesis beam_decode(const StepModel& model, const GenConfig& cfg);

// Samples each step from softmax(logprobs / temperature) with a generator
// seeded by cfg.seed. temperature == 0 is greedy decoding.
Hypothesis sample_decode(const StepModel& model, const GenConfig& cfg);

// Re-scores a sequence under `model`.
double sequence_logprob(const StepModel& model,
                        std::span<const TokenId> tokens, bool finished);

// Orders hypotheses best first: higher logprob, then smaller sequence.
bool better(const Hypothesis& a, const Hypothesis& b);

}  // namespace embinvert::generate

#endif  // EMBINVERT_GENERATE_H_

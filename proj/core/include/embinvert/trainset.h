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

#ifndef EMBINVERT_TRAINSET_H_
#define EMBINVERT_TRAINSET_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "embinvert/corpus.h"
#include "embinvert/embedder.h"

namespace embinvert::trainset {

// One attack-model sample: the target's embedding of a sentence and the
// sentence itself as the decoding target.
struct TrainingPair {
  EmbeddingVector conditioning;
  // The embedding input is terminated by an EOS marker. With a fixed-width
  // conditioning vector this carries no information; it is kept so the
  // serialized form records it.
  bool input_terminated = true;
  // Token ids ending with kEosId.
  std::vector<TokenId> target_tokens;

  bool operator==(const TrainingPair&) const = default;
};

struct TrainingSet {
  std::vector<TrainingPair> pairs;
  std::size_t dim = 0;
  std::uint64_t embedder_fingerprint = 0;
  std::uint64_t vocab_hash = 0;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  bool operator==(const TrainingSet&) const = default;
};

struct BuildResult {
  TrainingSet set;
  std::size_t refused = 0;
  // For each pair, the index of the corpus sentence it came from.
  std::vector<std::size_t> source_index;
};

// Queries `embedder` for every sentence (by its normalized words) and pairs
// the vector with the EOS-terminated id sequence. Refused sentences are
// skipped and counted; throws kAllRefused if nothing survives.
BuildResult build_training_set(std::span<const corpus::Sentence> corpus,
                               const embed::Embedder& embedder,
                               const corpus::Vocabulary& vocab);

struct Split {
  TrainingSet train;
  TrainingSet validation;
  TrainingSet test;
};

// Seeded shuffle, then consecutive slices of round(n * f_train) and
// round(n * f_validation) pairs; the rest is test. Throws kBadFractions unless
// the fractions are non-negative and sum to 1.
Split split(const TrainingSet& set, std::array<double, 3> fractions,
            std::uint64_t seed);

// Same permutation logic applied to an arbitrary item count; returns the
// index lists for (train, validation, test).
std::array<std::vector<std::size_t>, 3> split_indices(
    std::size_t n, std::array<double, 3> fractions, std::uint64_t seed);

// Container "EMBT": header (dim, vocab hash, embedder fingerprint, count),
// then per pair the terminator flag, dim little-endian f64 values and the
// target ids.
void save_training_set(const std::filesystem::path& path,
                       const TrainingSet& set);
TrainingSet load_training_set(const std::filesystem::path& path);

// Checks the pair invariants (EOS-terminated target, no interior EOS/PAD,
// uniform dim); throws kInvalidArgument.
void validate(const TrainingSet& set);

}  // namespace embinvert::trainset

#endif  // EMBINVERT_TRAINSET_H_

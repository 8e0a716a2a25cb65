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

#include "embinvert/trainset.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "embinvert/binary_io.h"
#include "embinvert/error.h"

namespace embinvert::trainset {

BuildResult build_training_set(std::span<const corpus::Sentence> corpus,
                               const embed::Embedder& embedder,
                               const corpus::Vocabulary& vocab) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty corpus");
  }
  std::vector<Tokens> texts;
  texts.reserve(corpus.size());
  for (const auto& s : corpus) texts.push_back(s.words);
  auto vectors = embedder.embed_batch(texts);

  BuildResult result;
  result.set.dim = embedder.dim();
  result.set.embedder_fingerprint = embedder.fingerprint();
  result.set.vocab_hash = vocab.hash();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!vectors[i]) {
      ++result.refused;
      continue;
    }
    TrainingPair pair;
    pair.conditioning = std::move(*vectors[i]);
    pair.target_tokens = corpus[i].tokens;
    pair.target_tokens.push_back(kEosId);
    result.set.pairs.push_back(std::move(pair));
    result.source_index.push_back(i);
  }
  if (result.set.pairs.empty()) {
    throw Error(ErrorCode::kAllRefused, "embedder refused every sentence (" +
                                            std::to_string(result.refused) +
                                            ")");
  }
  return result;
}

std::array<std::vector<std::size_t>, 3> split_indices(
    std::size_t n, std::array<double, 3> fractions, std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0) || f > 1.0) {
      throw Error(ErrorCode::kBadFractions, "fractions must lie in [0, 1]");
    }
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw Error(ErrorCode::kBadFractions, "fractions must sum to 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto dn = static_cast<double>(n);
  const std::size_t n_train =
      std::min(n, static_cast<std::size_t>(std::llround(dn * fractions[0])));
  const std::size_t n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(dn * fractions[1])));
  std::array<std::vector<std::size_t>, 3> out;
  out[0].assign(order.begin(), order.begin() + n_train);
  out[1].assign(order.begin() + n_train, order.begin() + n_train + n_val);
  out[2].assign(order.begin() + n_train + n_val, order.end());
  return out;
}

Split split(const TrainingSet& set, std::array<double, 3> fractions,
            std::uint64_t seed) {
  const auto parts = split_indices(set.size(), fractions, seed);
  auto take = [&](const std::vector<std::size_t>& idx) {
    TrainingSet s;
    s.dim = set.dim;
    s.embedder_fingerprint = set.embedder_fingerprint;
    s.vocab_hash = set.vocab_hash;
    s.pairs.reserve(idx.size());
    for (auto i : idx) s.pairs.push_back(set.pairs[i]);
    return s;
  };
  return {take(parts[0]), take(parts[1]), take(parts[2])};
}

void validate(const TrainingSet& set) {
  for (const auto& p : set.pairs) {
    if (p.conditioning.dim() != set.dim) {
      throw Error(ErrorCode::kInvalidArgument, "pair dim differs from set dim");
    }
    if (p.target_tokens.empty() || p.target_tokens.back() != kEosId) {
      throw Error(ErrorCode::kInvalidArgument, "target must end with EOS");
    }
    for (std::size_t i = 0; i + 1 < p.target_tokens.size(); ++i) {
      const TokenId t = p.target_tokens[i];
      if (t == kEosId || t == kPadId) {
        throw Error(ErrorCode::kInvalidArgument,
                    "EOS/PAD inside a target sequence");
      }
    }
  }
}

namespace {
constexpr std::string_view kMagic = "EMBT";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_training_set(const std::filesystem::path& path,
                       const TrainingSet& set) {
  validate(set);
  BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u64(set.dim);
  w.u64(set.vocab_hash);
  w.u64(set.embedder_fingerprint);
  w.u64(set.pairs.size());
  for (const auto& p : set.pairs) {
    w.u8(1);
    w.f64s(p.conditioning.values);
    w.u32(static_cast<std::uint32_t>(p.target_tokens.size()));
    for (auto id : p.target_tokens) w.u32(id);
  }
  w.write_file(path);
}

TrainingSet load_training_set(const std::filesystem::path& path) {
  auto r = BinaryReader::from_file(path);
  r.expect_header(kMagic, kVersion);
  TrainingSet set;
  set.dim = r.u64();
  set.vocab_hash = r.u64();
  set.embedder_fingerprint = r.u64();
  const std::uint64_t count = r.u64();
  if (set.dim == 0 || count > r.remaining() / (set.dim * 8 + 5)) {
    throw Error(ErrorCode::kCorruptFile, "training-set header inconsistent");
  }
  set.pairs.resize(count);
  for (auto& p : set.pairs) {
    if (r.u8() != 1) {
      throw Error(ErrorCode::kCorruptFile, "missing input terminator flag");
    }
    p.input_terminated = true;
    p.conditioning.values.resize(set.dim);
    r.f64s(p.conditioning.values);
    const std::uint32_t n = r.u32();
    if (n > r.remaining() / 4) {
      throw Error(ErrorCode::kCorruptFile, "target length exceeds file size");
    }
    p.target_tokens.resize(n);
    for (auto& id : p.target_tokens) id = r.u32();
  }
  if (!r.at_end()) throw Error(ErrorCode::kCorruptFile, "trailing bytes");
  try {
    validate(set);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, e.what());
  }
  return set;
}

}  // namespace embinvert::trainset

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

#ifndef EMBINVERT_EMBEDDER_H_
#define EMBINVERT_EMBEDDER_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embinvert/corpus.h"

namespace embinvert {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double l2_norm(const EmbeddingVector& v);
// Throws kDimensionMismatch on unequal dims and kInvalidArgument on a zero
// vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

namespace embed {

enum class EmbedderKind { kHashedBag, kPositionalMix, kRemote };

std::string_view kind_name(EmbedderKind kind);
EmbedderKind parse_kind(std::string_view name);

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kHashedBag;
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  // Position decay, positional_mix only.
  double gamma = 0.9;
  // Texts with fewer tokens are refused. 0 disables the guard.
  std::size_t min_query_tokens = 0;

  // Remote only.
  std::string endpoint;
  std::string api_key_env = "EMBINVERT_API_KEY";
  std::size_t max_in_flight = 4;
  std::size_t max_attempts = 3;
  std::size_t request_batch = 32;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::seconds timeout{30};

  // Throws kInvalidArgument when dim < 2, gamma outside (0, 1], or a remote
  // config has no endpoint.
  void validate() const;
  // Stable hash of every field that affects the produced vectors.
  std::uint64_t fingerprint() const;
  // Short human label, e.g. "positional_mix-64".
  std::string label() const;
};

// nullopt marks a refused text.
using MaybeEmbedding = std::optional<EmbeddingVector>;

// The query interface of a target (or proxy) embedding model.
class Embedder {
 public:
  virtual ~Embedder() = default;

  // Element-wise; a refused text yields nullopt and never aborts the batch.
  virtual std::vector<MaybeEmbedding> embed_batch(
      std::span<const Tokens> texts) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::uint64_t fingerprint() const = 0;
  virtual std::string label() const = 0;

  // Single text. Throws kEmptyText for no tokens and kRefusedShortText when
  // the model declines.
  EmbeddingVector embed(const Tokens& text) const;
};

// hashed_bag and positional_mix. Immutable, safe for concurrent use.
class BuiltinEmbedder final : public Embedder {
 public:
  explicit BuiltinEmbedder(EmbedderConfig config);

  std::vector<MaybeEmbedding> embed_batch(
      std::span<const Tokens> texts) const override;
  std::size_t dim() const override { return config_.dim; }
  std::uint64_t fingerprint() const override { return fingerprint_; }
  std::string label() const override { return config_.label(); }
  const EmbedderConfig& config() const { return config_; }

  // Ignores the refusal threshold; throws kEmptyText on no tokens.
  EmbeddingVector embed_unguarded(const Tokens& text) const;

 private:
  EmbedderConfig config_;
  std::uint64_t fingerprint_;
};

// HTTP client for POST {endpoint}/embed. Requests are split into chunks of
// `request_batch` texts with at most `max_in_flight` concurrent requests;
// each chunk is retried with exponential backoff up to `max_attempts` times.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderConfig config);

  std::vector<MaybeEmbedding> embed_batch(
      std::span<const Tokens> texts) const override;
  std::size_t dim() const override { return config_.dim; }
  std::uint64_t fingerprint() const override { return fingerprint_; }
  std::string label() const override { return config_.label(); }

 private:
  std::vector<MaybeEmbedding> request_chunk(
      std::span<const Tokens> texts) const;

  EmbedderConfig config_;
  std::uint64_t fingerprint_;
  std::string base_url_;
  std::string path_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

// Convenience wrappers over the built-in encoders.
EmbeddingVector embed(const Tokens& text, const EmbedderConfig& config);
std::vector<MaybeEmbedding> embed_batch(std::span<const Tokens> texts,
                                        const EmbedderConfig& config);
std::vector<MaybeEmbedding> remote_embed(std::span<const Tokens> texts,
                                         const EmbedderConfig& config);

std::uint64_t text_hash(const Tokens& text);

// Persistent store keyed by (embedder fingerprint, text hash). Thread-safe.
class EmbeddingCache {
 public:
  std::optional<MaybeEmbedding> find(std::uint64_t fingerprint,
                                     std::uint64_t text_hash) const;
  void insert(std::uint64_t fingerprint, std::uint64_t text_hash,
              const MaybeEmbedding& value);
  std::size_t size() const;

  // JSON document; a missing file loads as an empty cache.
  static std::shared_ptr<EmbeddingCache> load(
      const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, MaybeEmbedding> entries_;
};

// Serves repeated queries from an EmbeddingCache and forwards misses.
class CachingEmbedder final : public Embedder {
 public:
  CachingEmbedder(std::shared_ptr<const Embedder> inner,
                  std::shared_ptr<EmbeddingCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  std::vector<MaybeEmbedding> embed_batch(
      std::span<const Tokens> texts) const override;
  std::size_t dim() const override { return inner_->dim(); }
  std::uint64_t fingerprint() const override { return inner_->fingerprint(); }
  std::string label() const override { return inner_->label(); }

 private:
  std::shared_ptr<const Embedder> inner_;
  std::shared_ptr<EmbeddingCache> cache_;
};

}  // namespace embed
}  // namespace embinvert

#endif  // EMBINVERT_EMBEDDER_H_

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

#include "embinvert/embedder.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "embinvert/binary_io.h"
#include "embinvert/error.h"
#include "embinvert/hash.h"

namespace embinvert {

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a.values[i] * b.values[i];
  return s;
}

double l2_norm(const EmbeddingVector& v) { return std::sqrt(dot(v, v)); }

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "cosine of a zero vector");
  }
  return dot(a, b) / (na * nb);
}

namespace embed {
namespace {

constexpr std::uint64_t kBagSalt = 0x62616700ULL;
constexpr std::uint64_t kPosSalt = 0x706f7300ULL;

// One coordinate of the pseudo-random token vector: a standard normal
// (Box-Muller over two hashed uniforms) times `scale`. Continuous values keep
// distinct tokens from cancelling exactly.
double token_coordinate(std::uint64_t token_key, std::size_t index,
                        double scale) {
  const std::uint64_t a = mix64(token_key ^ mix64(2 * index + 1));
  const std::uint64_t b = mix64(token_key ^ mix64(2 * index + 2));
  const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return scale * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

void normalize(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double n = std::sqrt(s);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

}  // namespace

std::string_view kind_name(EmbedderKind kind) {
  switch (kind) {
    case EmbedderKind::kHashedBag: return "hashed_bag";
    case EmbedderKind::kPositionalMix: return "positional_mix";
    case EmbedderKind::kRemote: return "remote";
  }
  return "unknown";
}

EmbedderKind parse_kind(std::string_view name) {
  if (name == "hashed_bag") return EmbedderKind::kHashedBag;
  if (name == "positional_mix") return EmbedderKind::kPositionalMix;
  if (name == "remote") return EmbedderKind::kRemote;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown embedder kind '" + std::string(name) + "'");
}

void EmbedderConfig::validate() const {
  if (dim < 2) throw Error(ErrorCode::kInvalidArgument, "embedder dim < 2");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be in (0, 1]");
  }
  if (kind == EmbedderKind::kRemote) {
    if (endpoint.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "remote embedder needs endpoint");
    }
    if (max_attempts == 0 || max_in_flight == 0 || request_batch == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "remote limits must be positive");
    }
  }
}

std::uint64_t EmbedderConfig::fingerprint() const {
  std::uint64_t h = hash_values({fnv1a(kind_name(kind)), dim, seed,
                                 std::bit_cast<std::uint64_t>(gamma),
                                 min_query_tokens});
  if (kind == EmbedderKind::kRemote) h = hash_combine(h, fnv1a(endpoint));
  return h;
}

std::string EmbedderConfig::label() const {
  return std::string(kind_name(kind)) + "-" + std::to_string(dim);
}

EmbeddingVector Embedder::embed(const Tokens& text) const {
  if (text.empty()) throw Error(ErrorCode::kEmptyText, "no tokens to embed");
  auto out = embed_batch(std::span<const Tokens>(&text, 1));
  if (!out.at(0)) {
    throw Error(ErrorCode::kRefusedShortText,
                "embedder refused a " + std::to_string(text.size()) +
                    "-token text");
  }
  return std::move(*out[0]);
}

BuiltinEmbedder::BuiltinEmbedder(EmbedderConfig config)
    : config_(std::move(config)) {
  config_.validate();
  if (config_.kind == EmbedderKind::kRemote) {
    throw Error(ErrorCode::kInvalidArgument,
                "BuiltinEmbedder cannot serve a remote config");
  }
  fingerprint_ = config_.fingerprint();
}

EmbeddingVector BuiltinEmbedder::embed_unguarded(const Tokens& text) const {
  if (text.empty()) throw Error(ErrorCode::kEmptyText, "no tokens to embed");
  const std::size_t d = config_.dim;
  EmbeddingVector out;
  out.values.assign(d, 0.0);

  std::vector<std::uint64_t> keys;
  keys.reserve(text.size());
  for (const auto& t : text) keys.push_back(hash_combine(config_.seed, fnv1a(t)));

  const std::size_t bag_dims =
      config_.kind == EmbedderKind::kHashedBag ? d : d / 2;
  const double bag_scale = 1.0 / std::sqrt(static_cast<double>(bag_dims));
  // Summing in key order makes the bag exactly order-free in floating point.
  std::vector<std::uint64_t> bag_keys = keys;
  std::sort(bag_keys.begin(), bag_keys.end());
  for (auto key : bag_keys) {
    const std::uint64_t k = key ^ kBagSalt;
    for (std::size_t j = 0; j < bag_dims; ++j) {
      out.values[j] += token_coordinate(k, j, bag_scale);
    }
  }
  for (std::size_t j = 0; j < bag_dims; ++j) {
    out.values[j] /= static_cast<double>(keys.size());
  }

  if (config_.kind == EmbedderKind::kPositionalMix) {
    const std::size_t pos_dims = d - bag_dims;
    const double pos_scale = 1.0 / std::sqrt(static_cast<double>(pos_dims));
    double weight = 1.0;
    for (auto key : keys) {
      const std::uint64_t k = key ^ kPosSalt;
      for (std::size_t j = 0; j < pos_dims; ++j) {
        out.values[bag_dims + j] += weight * token_coordinate(k, j, pos_scale);
      }
      weight *= config_.gamma;
    }
    // Each block carries equal weight in the final vector.
    normalize(std::span<double>(out.values).first(bag_dims));
    normalize(std::span<double>(out.values).subspan(bag_dims));
  }
  normalize(out.values);
  return out;
}

std::vector<MaybeEmbedding> BuiltinEmbedder::embed_batch(
    std::span<const Tokens> texts) const {
  std::vector<MaybeEmbedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (t.empty() || t.size() < config_.min_query_tokens) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(embed_unguarded(t));
    }
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.kind == EmbedderKind::kRemote) {
    return std::make_unique<RemoteEmbedder>(config);
  }
  return std::make_unique<BuiltinEmbedder>(config);
}

EmbeddingVector embed(const Tokens& text, const EmbedderConfig& config) {
  return make_embedder(config)->embed(text);
}

std::vector<MaybeEmbedding> embed_batch(std::span<const Tokens> texts,
                                        const EmbedderConfig& config) {
  return make_embedder(config)->embed_batch(texts);
}

std::vector<MaybeEmbedding> remote_embed(std::span<const Tokens> texts,
                                         const EmbedderConfig& config) {
  return RemoteEmbedder(config).embed_batch(texts);
}

std::uint64_t text_hash(const Tokens& text) {
  std::uint64_t h = fnv1a("embinvert-text-v1");
  for (const auto& t : text) {
    h = fnv1a(t, h);
    h = fnv1a("\x1f", h);
  }
  return mix64(h);
}

std::optional<MaybeEmbedding> EmbeddingCache::find(
    std::uint64_t fingerprint, std::uint64_t text_hash) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find({fingerprint, text_hash});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(std::uint64_t fingerprint, std::uint64_t text_hash,
                            const MaybeEmbedding& value) {
  std::lock_guard lock(mu_);
  entries_.insert_or_assign({fingerprint, text_hash}, value);
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16) throw Error(ErrorCode::kCorruptFile, "bad hex key " + s);
  return std::stoull(s, nullptr, 16);
}

constexpr std::string_view kCacheFormat = "embinvert-embedding-cache";
constexpr int kCacheVersion = 1;

}  // namespace

std::shared_ptr<EmbeddingCache> EmbeddingCache::load(
    const std::filesystem::path& path) {
  auto cache = std::make_shared<EmbeddingCache>();
  if (!std::filesystem::exists(path)) return cache;
  try {
    const auto doc = nlohmann::json::parse(read_text_file(path));
    if (doc.at("format") != kCacheFormat ||
        doc.at("version").get<int>() != kCacheVersion) {
      throw Error(ErrorCode::kCorruptFile, "unrecognized cache header");
    }
    for (const auto& e : doc.at("entries")) {
      MaybeEmbedding value;
      if (!e.at("embedding").is_null()) {
        value = EmbeddingVector{e.at("embedding").get<std::vector<double>>()};
      }
      cache->entries_.emplace(
          std::pair{parse_hex64(e.at("fingerprint").get<std::string>()),
                    parse_hex64(e.at("text_hash").get<std::string>())},
          std::move(value));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kCorruptFile,
                "embedding cache " + path.string() + ": " + ex.what());
  }
  return cache;
}

void EmbeddingCache::save(const std::filesystem::path& path) const {
  nlohmann::json entries = nlohmann::json::array();
  {
    std::lock_guard lock(mu_);
    for (const auto& [key, value] : entries_) {
      nlohmann::json e;
      e["fingerprint"] = hex64(key.first);
      e["text_hash"] = hex64(key.second);
      e["embedding"] = value ? nlohmann::json(value->values) : nlohmann::json();
      entries.push_back(std::move(e));
    }
  }
  nlohmann::json doc;
  doc["format"] = kCacheFormat;
  doc["version"] = kCacheVersion;
  doc["entries"] = std::move(entries);
  write_text_file(path, doc.dump());
}

std::vector<MaybeEmbedding> CachingEmbedder::embed_batch(
    std::span<const Tokens> texts) const {
  const std::uint64_t fp = inner_->fingerprint();
  std::vector<MaybeEmbedding> out(texts.size());
  std::vector<std::size_t> misses;
  std::vector<std::uint64_t> hashes(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    hashes[i] = text_hash(texts[i]);
    if (auto hit = cache_->find(fp, hashes[i])) {
      out[i] = std::move(*hit);
    } else {
      misses.push_back(i);
    }
  }
  if (misses.empty()) return out;
  std::vector<Tokens> pending;
  pending.reserve(misses.size());
  for (auto i : misses) pending.push_back(texts[i]);
  auto fresh = inner_->embed_batch(pending);
  for (std::size_t m = 0; m < misses.size(); ++m) {
    cache_->insert(fp, hashes[misses[m]], fresh[m]);
    out[misses[m]] = std::move(fresh[m]);
  }
  return out;
}

}  // namespace embed
}  // namespace embinvert

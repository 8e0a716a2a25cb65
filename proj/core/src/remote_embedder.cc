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

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "embinvert/embedder.h"
#include "embinvert/error.h"

namespace embinvert::embed {
namespace {

std::string join_tokens(const Tokens& text) {
  std::string s;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i) s += ' ';
    s += text[i];
  }
  return s;
}

// "http://host:port/prefix" -> ("http://host:port", "/prefix/embed").
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                "endpoint must include a scheme: " + url);
  }
  const auto slash = url.find('/', scheme + 3);
  std::string base = slash == std::string::npos ? url : url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base, prefix + "/embed"};
}

}  // namespace

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config)
    : config_(std::move(config)) {
  config_.validate();
  if (config_.kind != EmbedderKind::kRemote) {
    throw Error(ErrorCode::kInvalidArgument,
                "RemoteEmbedder needs a remote config");
  }
  fingerprint_ = config_.fingerprint();
  std::tie(base_url_, path_) = split_endpoint(config_.endpoint);
}

std::vector<MaybeEmbedding> RemoteEmbedder::request_chunk(
    std::span<const Tokens> texts) const {
  nlohmann::json body;
  body["texts"] = nlohmann::json::array();
  for (const auto& t : texts) body["texts"].push_back(join_tokens(t));
  const std::string payload = body.dump();

  httplib::Client client(base_url_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  if (const char* key = std::getenv(config_.api_key_env.c_str());
      key != nullptr && *key != '\0') {
    client.set_bearer_token_auth(key);
  }

  std::string last_error = "no attempt made";
  auto backoff = config_.initial_backoff;
  for (std::size_t attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& ex) {
      last_error = std::string("malformed response: ") + ex.what();
      continue;
    }
    const auto it = doc.find("embeddings");
    if (it == doc.end() || !it->is_array() || it->size() != texts.size()) {
      last_error = "response does not carry one embedding per text";
      continue;
    }
    std::vector<MaybeEmbedding> out;
    out.reserve(texts.size());
    for (const auto& e : *it) {
      if (e.is_null()) {
        out.emplace_back(std::nullopt);
        continue;
      }
      if (!e.is_array() || e.size() != config_.dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "remote returned dim " +
                        std::to_string(e.is_array() ? e.size() : 0) +
                        ", expected " + std::to_string(config_.dim));
      }
      EmbeddingVector v;
      v.values.reserve(config_.dim);
      for (const auto& x : e) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
          throw Error(ErrorCode::kRemoteUnavailable,
                      "non-finite value in remote embedding");
        }
        v.values.push_back(x.get<double>());
      }
      out.emplace_back(std::move(v));
    }
    return out;
  }
  throw Error(ErrorCode::kRemoteUnavailable,
              base_url_ + path_ + " failed after " +
                  std::to_string(config_.max_attempts) +
                  " attempts: " + last_error);
}

std::vector<MaybeEmbedding> RemoteEmbedder::embed_batch(
    std::span<const Tokens> texts) const {
  std::vector<MaybeEmbedding> out(texts.size());
  if (texts.empty()) return out;
  const std::size_t chunk = config_.request_batch;
  const std::size_t n_chunks = (texts.size() + chunk - 1) / chunk;
  std::vector<std::exception_ptr> errors(n_chunks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      const std::size_t begin = c * chunk;
      const std::size_t len = std::min(chunk, texts.size() - begin);
      try {
        auto part = request_chunk(texts.subspan(begin, len));
        for (std::size_t i = 0; i < len; ++i) out[begin + i] = std::move(part[i]);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(config_.max_in_flight, n_chunks);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace embinvert::embed

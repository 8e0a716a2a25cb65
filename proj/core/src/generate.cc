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

#include "embinvert/generate.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "embinvert/error.h"

namespace embinvert::generate {

void GenConfig::validate() const {
  if (beam_width < 1) {
    throw Error(ErrorCode::kInvalidArgument, "beam_width must be >= 1");
  }
  if (max_len < 1) throw Error(ErrorCode::kInvalidArgument, "max_len must be >= 1");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  }
}

DecoderStepModel::DecoderStepModel(const decoder::DecoderParams& params,
                                   const EmbeddingVector& conditioning)
    : params_(&params), bias_(decoder::conditioned_bias(params, conditioning)) {}

void DecoderStepModel::next_logprobs(std::span<const TokenId> prefix,
                                     std::vector<double>& out) const {
  const auto ctx = decoder::make_context(prefix, params_->shape().context);
  decoder::logprobs_from_bias(*params_, bias_, ctx, out);
}

bool is_generable(TokenId id, std::size_t step) {
  if (id == kPadId || id == kBosId || id == kUnkId) return false;
  return id != kEosId || step > 0;
}

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  // Compare as token sequences with the EOS marker appended when finished.
  const std::size_t la = a.tokens.size() + (a.finished ? 1 : 0);
  const std::size_t lb = b.tokens.size() + (b.finished ? 1 : 0);
  for (std::size_t i = 0; i < std::min(la, lb); ++i) {
    const TokenId x = i < a.tokens.size() ? a.tokens[i] : kEosId;
    const TokenId y = i < b.tokens.size() ? b.tokens[i] : kEosId;
    if (x != y) return x < y;
  }
  return la < lb;
}

Hypothesis greedy_decode(const StepModel& model, const GenConfig& cfg) {
  cfg.validate();
  Hypothesis h;
  std::vector<double> lp;
  for (std::size_t step = 0; step < cfg.max_len; ++step) {
    model.next_logprobs(h.tokens, lp);
    TokenId best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (TokenId t = 0; t < lp.size(); ++t) {
      if (!is_generable(t, step)) continue;
      if (!any || lp[t] > best_lp) {
        best = t;
        best_lp = lp[t];
        any = true;
      }
    }
    if (!any) break;
    h.logprob += best_lp;
    if (best == kEosId) {
      h.finished = true;
      break;
    }
    h.tokens.push_back(best);
  }
  return h;
}

namespace {

struct Candidate {
  std::size_t parent;
  TokenId token;
  double score;
};

}  // namespace

BeamResult beam_search(const StepModel& model, const GenConfig& cfg) {
  cfg.validate();
  const std::size_t k = cfg.beam_width;
  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> finished;
  std::vector<Candidate> cands;
  std::vector<double> lp;

  for (std::size_t step = 0; step < cfg.max_len && !live.empty(); ++step) {
    cands.clear();
    for (std::size_t i = 0; i < live.size(); ++i) {
      model.next_logprobs(live[i].tokens, lp);
      for (TokenId t = 0; t < lp.size(); ++t) {
        if (is_generable(t, step)) {
          cands.push_back({i, t, live[i].logprob + lp[t]});
        }
      }
    }
    // Score desc, then (parent sequence, token) lexicographically asc. Live
    // hypotheses all share one length, so comparing parents elementwise is a
    // full lexicographic comparison.
    auto order = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) {
        const auto& pa = live[a.parent].tokens;
        const auto& pb = live[b.parent].tokens;
        if (pa != pb) return pa < pb;
      }
      return a.token < b.token;
    };
    const std::size_t keep = std::min(k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), order);

    std::vector<Hypothesis> next;
    next.reserve(keep);
    for (std::size_t c = 0; c < keep; ++c) {
      const auto& cand = cands[c];
      Hypothesis h;
      h.tokens = live[cand.parent].tokens;
      h.logprob = cand.score;
      if (cand.token == kEosId) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        h.tokens.push_back(cand.token);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
    if (finished.size() >= k) break;
  }

  // A live set containing only the empty root means nothing was generated.
  if (live.size() == 1 && live[0].tokens.empty() && !live[0].finished) {
    live.clear();
  }
  BeamResult result;
  std::sort(finished.begin(), finished.end(), better);
  std::sort(live.begin(), live.end(), better);
  if (!finished.empty()) {
    result.best = finished.front();
  } else if (!live.empty()) {
    result.best = live.front();
  }
  result.finished = std::move(finished);
  result.live = std::move(live);
  return result;
}

Hypothesis beam_decode(const StepModel& model, const GenConfig& cfg) {
  return beam_search(model, cfg).best;
}

Hypothesis sample_decode(const StepModel& model, const GenConfig& cfg) {
  cfg.validate();
  if (cfg.temperature == 0.0) return greedy_decode(model, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Hypothesis h;
  std::vector<double> lp;
  std::vector<double> weights;
  for (std::size_t step = 0; step < cfg.max_len; ++step) {
    model.next_logprobs(h.tokens, lp);
    double mx = -std::numeric_limits<double>::infinity();
    for (TokenId t = 0; t < lp.size(); ++t) {
      if (is_generable(t, step)) mx = std::max(mx, lp[t]);
    }
    if (!std::isfinite(mx)) break;
    weights.assign(lp.size(), 0.0);
    double total = 0.0;
    for (TokenId t = 0; t < lp.size(); ++t) {
      if (!is_generable(t, step)) continue;
      weights[t] = std::exp((lp[t] - mx) / cfg.temperature);
      total += weights[t];
    }
    const double u = unif(rng) * total;
    double acc = 0.0;
    TokenId pick = 0;
    bool picked = false;
    for (TokenId t = 0; t < lp.size(); ++t) {
      if (weights[t] == 0.0) continue;
      acc += weights[t];
      pick = t;
      picked = true;
      if (u < acc) break;
    }
    if (!picked) break;
    h.logprob += lp[pick];
    if (pick == kEosId) {
      h.finished = true;
      break;
    }
    h.tokens.push_back(pick);
  }
  return h;
}

double sequence_logprob(const StepModel& model,
                        std::span<const TokenId> tokens, bool finished) {
  std::vector<double> lp;
  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    model.next_logprobs(tokens.first(i), lp);
    sum += lp.at(tokens[i]);
  }
  if (finished) {
    model.next_logprobs(tokens, lp);
    sum += lp.at(kEosId);
  }
  return sum;
}

}  // namespace embinvert::generate

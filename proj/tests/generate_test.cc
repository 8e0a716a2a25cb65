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

#include <cmath>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.h"

namespace embinvert::generate {
namespace {

using ::embinvert::testing::brute_force_best;
using ::embinvert::testing::HashedStepModel;
using ::embinvert::testing::random_conditioning;
using ::embinvert::testing::random_decoder;
using ::embinvert::testing::TableStepModel;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

GenConfig gen(std::size_t k, std::size_t max_len, double tau = 0.7,
              std::uint64_t seed = 0) {
  GenConfig c;
  c.beam_width = k;
  c.max_len = max_len;
  c.temperature = tau;
  c.seed = seed;
  return c;
}

std::vector<double> row(std::initializer_list<double> probs) {
  std::vector<double> out;
  for (double p : probs) out.push_back(p > 0 ? std::log(p) : kNegInf);
  return out;
}

TEST(GenConfig, Validation) {
  EXPECT_THROW(gen(0, 4).validate(), Error);
  EXPECT_THROW(gen(1, 0).validate(), Error);
  EXPECT_THROW(gen(1, 4, -1.0).validate(), Error);
  EXPECT_NO_THROW(gen(1, 1, 0.0).validate());
}

TEST(Greedy, DeterministicChain) {
  // ids: 0..3 specials, 4 = "a".
  TableStepModel m(5, row({0, 0, 1, 0, 0}));
  m.set({}, row({0, 0, 0, 0, 1}));
  const auto h = greedy_decode(m, gen(1, 10));
  EXPECT_EQ(h.tokens, (std::vector<TokenId>{4}));
  EXPECT_TRUE(h.finished);
  EXPECT_EQ(h.logprob, 0.0);
}

TEST(Greedy, MaxLenOneNeverFinishes) {
  TableStepModel m(6, row({0, 0, 0.9, 0, 0.04, 0.06}));
  const auto h = greedy_decode(m, gen(1, 1));
  EXPECT_EQ(h.tokens, (std::vector<TokenId>{5}));
  EXPECT_FALSE(h.finished);
  EXPECT_DOUBLE_EQ(h.logprob, std::log(0.06));
}

TEST(Greedy, TiesGoToSmallestId) {
  TableStepModel m(7, row({0.1, 0.1, 0.2, 0.1, 0.1, 0.2, 0.2}));
  const auto h = greedy_decode(m, gen(1, 3));
  EXPECT_EQ(h.tokens, (std::vector<TokenId>{5}));
  EXPECT_TRUE(h.finished);  // EOS (id 2) ties with 5 and 6 at step 2
}

TEST(Greedy, MatchesHandSteppedFixture) {
  const auto g = nlohmann::json::parse(
      std::ifstream(testing::fixture("golden/decoder.json")));
  const auto p = testing::golden_fixture_params();
  for (const auto& run : g["greedy_max_len6"]) {
    DecoderStepModel m(p, EmbeddingVector{run["conditioning"].get<std::vector<double>>()});
    const auto h = greedy_decode(m, gen(1, 6));
    EXPECT_EQ(h.tokens, run["tokens"].get<std::vector<TokenId>>());
    EXPECT_EQ(h.finished, run["finished"].get<bool>());
    EXPECT_NEAR(h.logprob, run["logprob"].get<double>(), 1e-12);
  }
}

TEST(Beam, WidthOneEqualsGreedy) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t vocab = 5 + s % 10;
    const auto p = random_decoder(vocab, 6, s, 2.0 + s % 3);
    const auto e = random_conditioning(6, 1000 + s);
    DecoderStepModel m(p, e);
    const auto cfg = gen(1, 1 + s % 12);
    EXPECT_EQ(beam_decode(m, cfg), greedy_decode(m, cfg)) << "draw " << s;
  }
}

TEST(Beam, WidthOneEqualsGreedyUnderTies) {
  TableStepModel m(7, row({0, 0, 0.2, 0, 0.2, 0.3, 0.3}));
  m.set({}, row({0, 0, 0.5, 0, 0.25, 0.25, 0.0}));
  for (std::size_t len = 1; len <= 5; ++len) {
    EXPECT_EQ(beam_decode(m, gen(1, len)), greedy_decode(m, gen(1, len)));
  }
}

TEST(Beam, ExhaustiveWidthIsAdmissible) {
  for (std::uint64_t s = 0; s < 60; ++s) {
    const std::size_t vocab = 5 + s % 2;       // 1 or 2 content tokens + EOS
    const std::size_t max_len = 1 + s % 4;
    const std::size_t k = static_cast<std::size_t>(std::pow(vocab, max_len));
    HashedStepModel hm(vocab, s, 4.0);
    const auto p = random_decoder(vocab, 4, s, 3.0);
    DecoderStepModel dm(p, random_conditioning(4, s));
    for (const StepModel* m : {static_cast<const StepModel*>(&hm),
                               static_cast<const StepModel*>(&dm)}) {
      const auto want = brute_force_best(*m, max_len);
      const auto got = beam_decode(*m, gen(k, max_len));
      EXPECT_EQ(got, want) << "seed " << s;
    }
  }
}

TEST(Beam, WiderBeamFindsDelayedPayoff) {
  // ids 4,5,6. The greedy first token 4 leads to a flat continuation; the
  // unlikely first token 6 is followed by EOS with high probability.
  TableStepModel m(7, row({0, 0, 1, 0, 0, 0, 0}));
  m.set({}, row({0, 0, 0.0, 0, 0.5, 0.3, 0.2}));
  m.set({4}, row({0, 0, 0.25, 0, 0.25, 0.25, 0.25}));
  m.set({5}, row({0, 0, 0.1, 0, 0.3, 0.3, 0.3}));
  m.set({6}, row({0, 0, 0.99, 0, 0.01, 0.0, 0.0}));
  const auto narrow = beam_decode(m, gen(1, 4));
  const auto wide = beam_decode(m, gen(3, 4));
  EXPECT_EQ(narrow.tokens, (std::vector<TokenId>{4}));
  EXPECT_EQ(wide.tokens, (std::vector<TokenId>{6}));
  EXPECT_TRUE(wide.finished);
  EXPECT_NEAR(wide.logprob, std::log(0.2 * 0.99), 1e-12);
  EXPECT_GT(wide.logprob, narrow.logprob);
}

TEST(Beam, BestFinishedScoreIsMonotoneInWidth) {
  std::size_t checked = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    HashedStepModel m(6 + s % 5, s, 3.0);
    double prev = kNegInf;
    for (std::size_t k = 1; k <= 8; ++k) {
      const auto r = beam_search(m, gen(k, 5));
      if (r.finished.empty()) continue;
      const double best = r.finished.front().logprob;
      EXPECT_GE(best, prev) << "seed " << s << " k " << k;
      prev = best;
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000u);
}

// Keeping the global top-k at every step can prune the prefix the narrower
// beam followed: with k=2 both children of token 5 outscore every child of 4.
TEST(Beam, WiderBeamCanPruneTheGreedyPrefix) {
  TableStepModel m(6, row({0, 0, 0.98, 0, 0.01, 0.01}));
  m.set({}, row({0, 0, 0.0, 0, 0.55, 0.45}));
  m.set({4}, row({0, 0, 0.3, 0, 0.35, 0.35}));
  m.set({5}, row({0, 0, 0.1, 0, 0.45, 0.45}));
  m.set({5, 4}, row({0, 0, 0.01, 0, 0.495, 0.495}));
  m.set({5, 5}, row({0, 0, 0.01, 0, 0.495, 0.495}));
  const auto one = beam_decode(m, gen(1, 4));
  const auto two = beam_decode(m, gen(2, 4));
  EXPECT_EQ(one.tokens, (std::vector<TokenId>{4, 4}));
  EXPECT_NEAR(one.logprob, std::log(0.55 * 0.35 * 0.98), 1e-12);
  EXPECT_EQ(two.tokens, (std::vector<TokenId>{5, 4, 4}));
  EXPECT_NEAR(two.logprob, std::log(0.45 * 0.45 * 0.495 * 0.98), 1e-12);
  EXPECT_TRUE(one.finished && two.finished);
}

TEST(Beam, FinishedPoolIsSortedAndRescorable) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto p = random_decoder(12, 5, s, 2.0);
    DecoderStepModel m(p, random_conditioning(5, s));
    const auto r = beam_search(m, gen(4, 10));
    for (std::size_t i = 1; i < r.finished.size(); ++i) {
      EXPECT_FALSE(better(r.finished[i], r.finished[i - 1]));
    }
    for (const auto* pool : {&r.finished, &r.live}) {
      for (const auto& h : *pool) {
        EXPECT_LE(h.logprob, 0.0);
        EXPECT_NEAR(sequence_logprob(m, h.tokens, h.finished), h.logprob, 1e-9);
        for (TokenId t : h.tokens) EXPECT_FALSE(is_special(t));
      }
    }
  }
}

TEST(Sample, SameSeedSameOutput) {
  const auto p = random_decoder(12, 5, 1, 2.0);
  DecoderStepModel m(p, random_conditioning(5, 1));
  for (std::uint64_t s = 0; s < 20; ++s) {
    EXPECT_EQ(sample_decode(m, gen(1, 12, 0.9, s)), sample_decode(m, gen(1, 12, 0.9, s)));
  }
}

TEST(Sample, LogprobIsModelScoreAndRescorable) {
  const auto p = random_decoder(12, 5, 2, 2.0);
  DecoderStepModel m(p, random_conditioning(5, 2));
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto h = sample_decode(m, gen(1, 12, 2.5, s));
    EXPECT_LE(h.logprob, 0.0);
    EXPECT_NEAR(sequence_logprob(m, h.tokens, h.finished), h.logprob, 1e-9);
    for (TokenId t : h.tokens) EXPECT_FALSE(is_special(t));
  }
}

TEST(Sample, LowTemperatureMatchesGreedy) {
  const auto p = random_decoder(12, 5, 3, 6.0);
  DecoderStepModel m(p, random_conditioning(5, 3));
  const auto greedy = greedy_decode(m, gen(1, 12));
  int same = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    if (sample_decode(m, gen(1, 12, 0.01, s)) == greedy) ++same;
  }
  EXPECT_GE(same, 99);
  EXPECT_EQ(sample_decode(m, gen(1, 12, 0.0, 7)), greedy);
}

TEST(Sample, HugeTemperatureIsUniform) {
  // Zero decoder: uniform over the 4 content ids at step 1, and over those
  // plus EOS at step 2.
  const decoder::DecoderParams p(decoder::DecoderShape{8, 2, 3, 4, 2});
  DecoderStepModel m(p, random_conditioning(3, 4));
  const int n = 10000;
  std::vector<int> first(8, 0), second(8, 0);
  int second_n = 0;
  for (int s = 0; s < n; ++s) {
    const auto h = sample_decode(m, gen(1, 2, 1e6, s));
    ASSERT_FALSE(h.tokens.empty());
    ++first[h.tokens[0]];
    ++second_n;
    if (h.tokens.size() > 1) {
      ++second[h.tokens[1]];
    } else {
      ++second[kEosId];
    }
  }
  auto check = [](const std::vector<int>& counts, std::vector<TokenId> ids, int total) {
    const double pr = 1.0 / ids.size();
    const double mean = total * pr;
    const double sigma = std::sqrt(total * pr * (1.0 - pr));
    int sum = 0;
    for (TokenId t : ids) {
      EXPECT_LE(std::abs(counts[t] - mean), 3.0 * sigma) << "id " << t;
      sum += counts[t];
    }
    EXPECT_EQ(sum, total);
  };
  check(first, {4, 5, 6, 7}, n);
  check(second, {2, 4, 5, 6, 7}, second_n);
}

TEST(Masking, SpecialsAndFirstStepEos) {
  EXPECT_FALSE(is_generable(kPadId, 3));
  EXPECT_FALSE(is_generable(kBosId, 3));
  EXPECT_FALSE(is_generable(kUnkId, 3));
  EXPECT_FALSE(is_generable(kEosId, 0));
  EXPECT_TRUE(is_generable(kEosId, 1));
  EXPECT_TRUE(is_generable(4, 0));
  // A model that prefers EOS and UNK still yields a content token first.
  TableStepModel m(5, row({0.0, 0.0, 0.6, 0.39, 0.01}));
  for (const auto& h : {greedy_decode(m, gen(1, 3)), beam_decode(m, gen(3, 3)),
                        sample_decode(m, gen(1, 3, 1.0, 1))}) {
    ASSERT_FALSE(h.tokens.empty());
    EXPECT_EQ(h.tokens[0], 4u);
  }
}

}  // namespace
}  // namespace embinvert::generate

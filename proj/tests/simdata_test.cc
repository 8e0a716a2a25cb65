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


#include "embinvert/simdata.h"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <map>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "embinvert/corpus.h"
#include "embinvert/error.h"
#include "test_support.h"

namespace embinvert::simdata {
namespace {

using ::embinvert::testing::fixture;
using Lines = std::vector<std::string>;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

nlohmann::json golden() {
  return nlohmann::json::parse(std::ifstream(fixture("golden/simdata.json")));
}

TEST(Grams, NormalizationAndWindows) {
  EXPECT_EQ(normalize_for_grams("  Ab \t CD  "), "ab cd");
  EXPECT_EQ(char_grams("abcde"), (Lines{"abcd", "bcde"}));
  EXPECT_TRUE(char_grams("abc").empty());
}

TEST(FeatureSet, SmallExamples) {
  EXPECT_EQ(build_feature_set(Lines{"aaaa"}, 1).grams, (Lines{"aaaa"}));
  const auto f = build_feature_set(Lines{"abcde"}, 2);
  EXPECT_EQ(f.size(), 2u);
  EXPECT_EQ(f.grams, (Lines{"abcd", "bcde"}));
  EXPECT_EQ(code_of([] { build_feature_set(Lines{"abcde"}, 3); }),
            ErrorCode::kInsufficientGrams);
}

TEST(FeatureSet, GoldenReferenceFixture) {
  const auto g = golden();
  const auto f = build_feature_set(corpus::read_lines(fixture("wiki.txt")), 1000, "wiki");
  EXPECT_EQ(f.grams, g["features_k1000"].get<Lines>());
  EXPECT_EQ(f.provenance, "wiki");
}

TEST(FeatureVector, OverlappingCounts) {
  const auto f = build_feature_set(Lines{"aaaa"}, 1);
  EXPECT_EQ(corpus_feature_vector(Lines{"aaaa"}, f), (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(corpus_feature_vector(Lines{"aaaaa"}, f), (std::vector<std::uint64_t>{2}));
}

TEST(FeatureVector, GoldenCounts) {
  const auto g = golden();
  const auto f = build_feature_set(corpus::read_lines(fixture("wiki.txt")), 1000);
  const auto v = corpus_feature_vector(corpus::read_lines(fixture("news.txt")), f);
  ASSERT_EQ(v.size(), 1000u);
  const auto want = g["news_counts_first50"].get<std::vector<std::uint64_t>>();
  EXPECT_EQ(std::vector<std::uint64_t>(v.begin(), v.begin() + 50), want);
}

TEST(Spearman, HandComputedExamples) {
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 2}), 0.5, 1e-15);
  EXPECT_NEAR(spearman(std::vector<double>{5, 1, 7}, std::vector<double>{5, 1, 7}), 1.0, 1e-15);
  EXPECT_EQ(average_ranks(std::vector<double>{1, 1, 2}), (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_EQ(code_of([] { spearman(std::vector<double>{1, 1}, std::vector<double>{1, 2}); }),
            ErrorCode::kZeroVariance);
}

TEST(Spearman, SymmetryBoundsAndMonotoneInvariance) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 3 + rng() % 40;
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = static_cast<double>(rng() % 6);
    for (auto& x : b) x = static_cast<double>(rng() % 6);
    if (std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; }) ||
        std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; })) {
      continue;
    }
    const double s = spearman(a, b);
    EXPECT_EQ(s, spearman(b, a));
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
    std::vector<double> t = a;
    for (auto& x : t) x = std::exp(0.7 * x) + 3.0;  // strictly increasing
    EXPECT_NEAR(spearman(t, b), s, 1e-12);
  }
}

TEST(Similarity, SelfAndSymmetry) {
  const auto wiki = corpus::read_lines(fixture("wiki.txt"));
  const auto news = corpus::read_lines(fixture("news.txt"));
  const auto f = build_feature_set(wiki, 1000);
  EXPECT_NEAR(dataset_similarity(news, news, f), 1.0, 1e-12);
  EXPECT_EQ(dataset_similarity(wiki, news, f), dataset_similarity(news, wiki, f));
  const auto m = similarity_matrix(std::vector<Lines>{wiki, news}, f);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0][1], m[1][0]);
  EXPECT_NEAR(m[0][0], 1.0, 1e-12);
}

// Golden values from scipy.stats.spearmanr over the same counts.
TEST(Similarity, MatchesScipyAndEngineeredOrdering) {
  const auto g = golden()["similarity"];
  const auto wiki = corpus::read_lines(fixture("wiki.txt"));
  const auto f = build_feature_set(wiki, 1000);
  std::map<std::string, double> got;
  for (const char* name : {"wiki_heldout.txt", "news.txt", "clinical.txt"}) {
    got[name] = dataset_similarity(wiki, corpus::read_lines(fixture(name)), f);
    EXPECT_NEAR(got[name], g[name].get<double>(), 1e-12) << name;
  }
  EXPECT_GT(got["wiki_heldout.txt"], got["news.txt"]);
  EXPECT_GT(got["news.txt"], got["clinical.txt"]);
}

TEST(FeatureSet, SaveLoadKeepsProvenance) {
  const auto dir = testing::scratch_dir("simdata_features");
  const auto f = build_feature_set(corpus::read_lines(fixture("news.txt")), 300, "news");
  f.save(dir / "f.json");
  const auto back = FeatureSet::load(dir / "f.json");
  EXPECT_EQ(back.grams, f.grams);
  EXPECT_EQ(back.provenance, "news");
}

}  // namespace
}  // namespace embinvert::simdata

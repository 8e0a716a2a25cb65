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

#ifndef EMBINVERT_SIMDATA_H_
#define EMBINVERT_SIMDATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace embinvert::simdata {

inline constexpr std::size_t kGramWidth = 4;
inline constexpr std::size_t kDefaultFeatureCount = 5000;

// Case-folds ASCII, collapses whitespace runs to one space and trims.
std::string normalize_for_grams(std::string_view sentence);

// Every window of 4 consecutive code points in the normalized sentence.
std::vector<std::string> char_grams(std::string_view sentence);

struct FeatureSet {
  // Frequency desc, lexicographic tiebreak.
  std::vector<std::string> grams;
  std::string provenance;

  std::size_t size() const { return grams.size(); }

  // JSON with a provenance header.
  void save(const std::filesystem::path& path) const;
  static FeatureSet load(const std::filesystem::path& path);
};

// The K most frequent character 4-grams of the reference corpus. Throws
// kInsufficientGrams when it has fewer than K distinct grams.
FeatureSet build_feature_set(std::span<const std::string> reference_corpus,
                             std::size_t k, std::string provenance = {});

// Overlapping occurrence counts, aligned with `features.grams`.
std::vector<std::uint64_t> corpus_feature_vector(
    std::span<const std::string> corpus, const FeatureSet& features);

// Ranks starting at 1; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation with average ranks for ties. Throws
// kZeroVariance if either input is constant and kDimensionMismatch on
// unequal lengths.
double spearman(std::span<const double> a, std::span<const double> b);

double dataset_similarity(std::span<const std::string> d1,
                          std::span<const std::string> d2,
                          const FeatureSet& features);

// Symmetric matrix of pairwise similarities; the diagonal is 1.
std::vector<std::vector<double>> similarity_matrix(
    std::span<const std::vector<std::string>> corpora,
    const FeatureSet& features);

}  // namespace embinvert::simdata

#endif  // EMBINVERT_SIMDATA_H_

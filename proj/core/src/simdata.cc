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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "embinvert/binary_io.h"
#include "embinvert/error.h"

namespace embinvert::simdata {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Byte offsets of code point starts, plus the end offset.
std::vector<std::size_t> code_point_starts(std::string_view s) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  starts.push_back(s.size());
  return starts;
}

std::unordered_map<std::string, std::uint64_t> count_grams(
    std::span<const std::string> corpus) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& s : corpus) {
    for (auto& g : char_grams(s)) ++counts[std::move(g)];
  }
  return counts;
}

}  // namespace

std::string normalize_for_grams(std::string_view sentence) {
  std::string out;
  bool pending_space = false;
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                         : ch);
  }
  return out;
}

std::vector<std::string> char_grams(std::string_view sentence) {
  const std::string norm = normalize_for_grams(sentence);
  const auto starts = code_point_starts(norm);
  std::vector<std::string> grams;
  const std::size_t n_cp = starts.size() - 1;
  if (n_cp < kGramWidth) return grams;
  grams.reserve(n_cp - kGramWidth + 1);
  for (std::size_t i = 0; i + kGramWidth <= n_cp; ++i) {
    grams.push_back(norm.substr(starts[i], starts[i + kGramWidth] - starts[i]));
  }
  return grams;
}

FeatureSet build_feature_set(std::span<const std::string> reference_corpus,
                             std::size_t k, std::string provenance) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  const auto counts = count_grams(reference_corpus);
  if (counts.size() < k) {
    throw Error(ErrorCode::kInsufficientGrams,
                "reference corpus has " + std::to_string(counts.size()) +
                    " distinct 4-grams, need " + std::to_string(k));
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(),
                                                            counts.end());
  std::partial_sort(
      ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
      ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
      });
  FeatureSet fs;
  fs.provenance = std::move(provenance);
  fs.grams.reserve(k);
  for (std::size_t i = 0; i < k; ++i) fs.grams.push_back(ranked[i].first);
  return fs;
}

std::vector<std::uint64_t> corpus_feature_vector(
    std::span<const std::string> corpus, const FeatureSet& features) {
  const auto counts = count_grams(corpus);
  std::vector<std::uint64_t> out;
  out.reserve(features.size());
  for (const auto& g : features.grams) {
    const auto it = counts.find(g);
    out.push_back(it == counts.end() ? 0 : it->second);
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    // Positions i..j (0-based) share rank mean(i+1..j+1).
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature vectors differ in length");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(ra.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorCode::kZeroVariance, "constant feature vector");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {
std::vector<double> as_doubles(const std::vector<std::uint64_t>& v) {
  return {v.begin(), v.end()};
}
}  // namespace

double dataset_similarity(std::span<const std::string> d1,
                          std::span<const std::string> d2,
                          const FeatureSet& features) {
  return spearman(as_doubles(corpus_feature_vector(d1, features)),
                  as_doubles(corpus_feature_vector(d2, features)));
}

std::vector<std::vector<double>> similarity_matrix(
    std::span<const std::vector<std::string>> corpora,
    const FeatureSet& features) {
  std::vector<std::vector<double>> vecs;
  for (const auto& c : corpora) {
    vecs.push_back(as_doubles(corpus_feature_vector(c, features)));
  }
  const std::size_t n = corpora.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      m[i][j] = m[j][i] = spearman(vecs[i], vecs[j]);
    }
  }
  return m;
}

namespace {
constexpr std::string_view kFeatureFormat = "embinvert-featureset";
}

void FeatureSet::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = kFeatureFormat;
  j["version"] = 1;
  j["provenance"] = provenance;
  j["gram_width"] = kGramWidth;
  j["k"] = grams.size();
  j["grams"] = grams;
  write_text_file(path, j.dump(1) + "\n");
}

FeatureSet FeatureSet::load(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(read_text_file(path));
    if (j.at("format") != kFeatureFormat || j.at("version") != 1 ||
        j.at("gram_width") != kGramWidth) {
      throw Error(ErrorCode::kCorruptFile, "unrecognized feature-set header");
    }
    FeatureSet fs;
    fs.provenance = j.at("provenance").get<std::string>();
    fs.grams = j.at("grams").get<std::vector<std::string>>();
    if (fs.grams.size() != j.at("k").get<std::size_t>()) {
      throw Error(ErrorCode::kCorruptFile, "feature-set size mismatch");
    }
    return fs;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kCorruptFile,
                "feature set " + path.string() + ": " + ex.what());
  }
}

}  // namespace embinvert::simdata

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

#ifndef EMBINVERT_METRICS_H_
#define EMBINVERT_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace embinvert::metrics {

// Sum over tokens of min(count in a, count in b): the clipped multiset
// intersection shared by BLEU-1 and ROUGE-1.
std::size_t clipped_overlap(std::span<const std::string> a,
                            std::span<const std::string> b);

// Brevity penalty for a candidate of length c against a reference of length
// r: 1 if c > r, else exp(1 - r / c). Zero for an empty candidate.
double brevity_penalty(std::size_t candidate_len, std::size_t reference_len);

// Clipped unigram precision times the brevity penalty. An empty candidate
// scores 0.
double bleu1(std::span<const std::string> candidate,
             std::span<const std::string> reference);

// Clipped unigram recall. Throws kEmptyReference.
double rouge1(std::span<const std::string> candidate,
              std::span<const std::string> reference);

enum class Metric { kBleu1, kRouge1 };
std::string_view metric_name(Metric m);

struct ScoredPair {
  std::vector<std::string> candidate;
  std::vector<std::string> reference;
};

// Arithmetic mean of per-pair scores; 0 for no pairs.
double corpus_score(std::span<const ScoredPair> pairs, Metric metric);

struct TrialStats {
  std::vector<double> trials;
  double mean = 0.0;
  // Bessel-corrected sample standard deviation over sqrt(n).
  double std_error = 0.0;
  std::size_t n_trials = 0;
};

// Throws kTooFewTrials for fewer than two trials.
TrialStats aggregate_trials(std::span<const double> trials);

struct TTestResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
  bool significant_at_005 = false;
  // Both samples have zero variance; p is 1 for equal means and 0 otherwise.
  bool degenerate = false;
};

// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom. Needs
// at least two observations per sample (kTooFewTrials).
TTestResult ttest_unpaired(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees
// of freedom.
double student_t_two_sided_p(double t, double df);

// Index of the group with the highest mean, and whether its advantage over
// every other group is significant at 0.05 (the "*" marker in report
// tables). Groups need >= 2 trials each for a significance claim.
struct BestMarker {
  std::size_t best = 0;
  bool significant = false;
};
BestMarker mark_best(std::span<const std::vector<double>> groups);

}  // namespace embinvert::metrics

#endif  // EMBINVERT_METRICS_H_

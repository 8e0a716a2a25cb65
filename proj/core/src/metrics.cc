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

#include "embinvert/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "embinvert/error.h"

namespace embinvert::metrics {

std::size_t clipped_overlap(std::span<const std::string> a,
                            std::span<const std::string> b) {
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& t : b) ++counts[t];
  std::size_t overlap = 0;
  for (const auto& t : a) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return overlap;
}

double brevity_penalty(std::size_t candidate_len, std::size_t reference_len) {
  if (candidate_len == 0) return 0.0;
  if (candidate_len > reference_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(reference_len) /
                            static_cast<double>(candidate_len));
}

double bleu1(std::span<const std::string> candidate,
             std::span<const std::string> reference) {
  if (candidate.empty()) return 0.0;
  const double precision =
      static_cast<double>(clipped_overlap(candidate, reference)) /
      static_cast<double>(candidate.size());
  return brevity_penalty(candidate.size(), reference.size()) * precision;
}

double rouge1(std::span<const std::string> candidate,
              std::span<const std::string> reference) {
  if (reference.empty()) {
    throw Error(ErrorCode::kEmptyReference, "ROUGE-1 needs a reference");
  }
  return static_cast<double>(clipped_overlap(candidate, reference)) /
         static_cast<double>(reference.size());
}

std::string_view metric_name(Metric m) {
  return m == Metric::kBleu1 ? "bleu1" : "rouge1";
}

double corpus_score(std::span<const ScoredPair> pairs, Metric metric) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs) {
    sum += metric == Metric::kBleu1 ? bleu1(p.candidate, p.reference)
                                    : rouge1(p.candidate, p.reference);
  }
  return sum / static_cast<double>(pairs.size());
}

namespace {

// Shifted by xs[0] so a constant sample returns that constant exactly.
double mean_of(std::span<const double> xs) {
  const double shift = xs.front();
  double sum = 0.0;
  for (double x : xs) sum += x - shift;
  return shift + sum / static_cast<double>(xs.size());
}

// Bessel-corrected. Deviations are taken from xs[0] first so a constant
// sample gives exactly zero.
double variance_of(std::span<const double> xs) {
  const double shift = xs.front();
  double sum = 0.0;
  for (double x : xs) sum += x - shift;
  const double m = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - shift - m) * (x - shift - m);
  return ss / static_cast<double>(xs.size() - 1);
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "incomplete_beta needs a, b > 0");
  }
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double p = incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return std::clamp(p, 0.0, 1.0);
}

TrialStats aggregate_trials(std::span<const double> trials) {
  if (trials.size() < 2) {
    throw Error(ErrorCode::kTooFewTrials,
                "standard error needs at least two trials");
  }
  TrialStats s;
  s.trials.assign(trials.begin(), trials.end());
  s.n_trials = trials.size();
  s.mean = mean_of(trials);
  s.std_error = std::sqrt(variance_of(trials) /
                          static_cast<double>(trials.size()));
  return s;
}

TTestResult ttest_unpaired(std::span<const double> a,
                           std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::kTooFewTrials,
                "t-test needs at least two observations per sample");
  }
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = variance_of(a) / static_cast<double>(a.size());
  const double vb = variance_of(b) / static_cast<double>(b.size());
  TTestResult r;
  if (va + vb == 0.0) {
    r.degenerate = true;
    r.degrees_of_freedom = static_cast<double>(a.size() + b.size() - 2);
    if (ma == mb) {
      r.t_statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.t_statistic = ma > mb ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
  } else {
    r.t_statistic = (ma - mb) / std::sqrt(va + vb);
    r.degrees_of_freedom =
        (va + vb) * (va + vb) /
        (va * va / static_cast<double>(a.size() - 1) +
         vb * vb / static_cast<double>(b.size() - 1));
    r.p_value = student_t_two_sided_p(r.t_statistic, r.degrees_of_freedom);
  }
  r.significant_at_005 = r.p_value < 0.05;
  return r;
}

BestMarker mark_best(std::span<const std::vector<double>> groups) {
  BestMarker out;
  if (groups.empty()) return out;
  std::vector<double> means;
  for (const auto& g : groups) {
    means.push_back(g.empty() ? -std::numeric_limits<double>::infinity()
                              : mean_of(g));
  }
  out.best = static_cast<std::size_t>(
      std::max_element(means.begin(), means.end()) - means.begin());
  if (groups.size() < 2) return out;
  out.significant = true;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (j == out.best) continue;
    if (groups[out.best].size() < 2 || groups[j].size() < 2 ||
        !(means[out.best] > means[j]) ||
        !ttest_unpaired(groups[out.best], groups[j]).significant_at_005) {
      out.significant = false;
      break;
    }
  }
  return out;
}

}  // namespace embinvert::metrics

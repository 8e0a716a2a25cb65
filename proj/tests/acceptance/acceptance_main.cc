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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails. The E-series experiments run once through a single
// Runner on configs/acceptance.json.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "embinvert/binary_io.h"
#include "embinvert/generate.h"
#include "embinvert/metrics.h"
#include "embinvert/pipeline.h"
#include "embinvert/report.h"
#include "embinvert/simdata.h"
#include "test_support.h"

namespace embinvert {
namespace {

using Clock = std::chrono::steady_clock;
using report::ReportRow;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

// --- Criteria that need no trained model -----------------------------------

Outcome metric_correctness() {
  const auto t0 = Clock::now();
  using W = std::vector<std::string>;
  bool ok = true;
  auto near = [&](double got, double want) { ok &= std::abs(got - want) <= 1e-12; };
  near(metrics::bleu1(W{"the", "cat"}, W{"the", "cat"}), 1.0);
  near(metrics::bleu1(W{"the", "cat", "sat"}, W{"the", "cat"}), 2.0 / 3.0);
  near(metrics::bleu1(W{"the"}, W{"the", "cat"}), std::exp(1.0 - 2.0 / 1.0));
  near(metrics::rouge1(W{"a", "b"}, W{"c", "d"}), 0.0);
  near(metrics::rouge1(W{"the", "cat", "sat"}, W{"the", "cat"}), 1.0);
  near(metrics::rouge1(W{"the"}, W{"the", "the"}), 0.5);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    W w(1 + rng() % 12);
    for (auto& x : w) x = std::to_string(rng() % 7);
    ok &= metrics::bleu1(w, w) == 1.0 && metrics::rouge1(w, w) == 1.0;
    W shorter(w.begin(), w.begin() + 1 + rng() % w.size());
    if (shorter.size() < w.size()) {
      near(metrics::bleu1(shorter, w),
           std::exp(1.0 - double(w.size()) / double(shorter.size())));
    }
  }
  const double t = seconds_since(t0);
  return {ok && t < 1.0, "golden suite to 1e-12, " + fmt(t, 3) + " s"};
}

Outcome beam_admissibility() {
  const auto t0 = Clock::now();
  int exact = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::size_t vocab = 5 + s % 2;
    const std::size_t max_len = 1 + s % 4;
    const auto k = static_cast<std::size_t>(std::pow(vocab, max_len));
    const auto p = testing::random_decoder(vocab, 4, s, 3.0);
    generate::DecoderStepModel m(p, testing::random_conditioning(4, s + 77));
    generate::GenConfig cfg;
    cfg.beam_width = k;
    cfg.max_len = max_len;
    const auto got = generate::beam_decode(m, cfg);
    const auto want = testing::brute_force_best(m, max_len);
    if (got.tokens == want.tokens && got.logprob == want.logprob &&
        got.finished == want.finished) {
      ++exact;
    }
  }
  const double t = seconds_since(t0);
  return {exact == 50 && t < 30.0,
          std::to_string(exact) + "/50 exact, " + fmt(t, 3) + " s"};
}

Outcome greedy_equals_beam1() {
  int same = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = testing::random_decoder(5 + s % 10, 6, 1000 + s, 2.0 + s % 3);
    generate::DecoderStepModel m(p, testing::random_conditioning(6, 2000 + s));
    generate::GenConfig cfg;
    cfg.beam_width = 1;
    cfg.max_len = 1 + s % 12;
    if (generate::beam_decode(m, cfg) == generate::greedy_decode(m, cfg)) ++same;
  }
  return {same == 100, std::to_string(same) + "/100 identical"};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto p = testing::random_decoder(12, 8, 5, 1.5, 16, 6, 4);
  const auto batch = testing::random_pairs(12, 8, 8, 6);
  const auto probes = testing::gradient_check(p, batch, 200, 7, 1e-5);
  std::size_t ok = 0;
  std::set<std::string> groups;
  for (const auto& r : probes) {
    ok += r.ok;
    groups.insert(r.group);
  }
  const double t = seconds_since(t0);
  const bool pass = ok >= 198 && groups.size() == p.groups().size() && t < 10.0;
  return {pass, std::to_string(ok) + "/200 within tolerance across " +
                    std::to_string(groups.size()) + " groups, " + fmt(t, 3) + " s"};
}

Outcome statistics() {
  const auto r = metrics::ttest_unpaired(std::vector<double>{1, 2, 3, 4, 5},
                                         std::vector<double>{2, 3, 4, 5, 6});
  const bool example = std::abs(r.t_statistic + 1.0) <= 1e-4 &&
                       std::abs(r.degrees_of_freedom - 8.0) <= 1e-4 &&
                       std::abs(r.p_value - 0.3466) <= 1e-4;
  std::mt19937_64 rng(20261016);
  std::normal_distribution<double> n(0.0, 1.0);
  int hits = 0;
  std::vector<double> a(10), b(10);
  for (int rep = 0; rep < 10000; ++rep) {
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    hits += metrics::ttest_unpaired(a, b).p_value < 0.05;
  }
  const double rate = hits / 10000.0;
  return {example && std::abs(rate - 0.05) <= 0.01,
          "t=" + fmt(r.t_statistic) + " df=" + fmt(r.degrees_of_freedom) +
              " p=" + fmt(r.p_value) + ", null rejection rate " + fmt(rate)};
}

Outcome spearman_suite() {
  using V = std::vector<double>;
  bool ok = simdata::spearman(V{1, 2, 3}, V{3, 2, 1}) == -1.0 &&
            std::abs(simdata::spearman(V{1, 1, 2}, V{1, 2, 2}) - 0.5) <= 1e-12;
  const auto news = corpus::read_lines(testing::fixture("news.txt"));
  const auto wiki = corpus::read_lines(testing::fixture("wiki.txt"));
  const auto f = simdata::build_feature_set(wiki, 1000);
  ok &= std::abs(simdata::dataset_similarity(news, news, f) - 1.0) <= 1e-12;
  ok &= simdata::dataset_similarity(wiki, news, f) == simdata::dataset_similarity(news, wiki, f);
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    V a(5 + rng() % 30), b(a.size());
    for (auto& x : a) x = double(rng() % 5);
    for (auto& x : b) x = double(rng() % 5);
    double s;
    try {
      s = simdata::spearman(a, b);
    } catch (const Error&) {
      continue;  // constant vector
    }
    V t = a;
    for (auto& x : t) x = x * x * x + 2.0 * x;
    ok &= s == simdata::spearman(b, a) && std::abs(simdata::spearman(t, b) - s) <= 1e-12;
    ok &= s >= -1.0 && s <= 1.0;
    ++checked;
  }
  return {ok, "identity, reversal, tie example, symmetry and monotone invariance on " +
                  std::to_string(checked) + " random pairs"};
}

// --- Pipeline criteria -----------------------------------------------------

struct Experiments {
  std::vector<ReportRow> rows;
  double in_distribution_seconds = 0.0;
  std::vector<ReportRow> copy_stub;
};

const ReportRow* find(const std::vector<ReportRow>& rows,
                      const std::map<std::string, std::string>& want) {
  for (const auto& r : rows) {
    const std::map<std::string, std::string> have = {
        {"experiment", r.experiment}, {"dataset", r.dataset},
        {"target", r.target_model},  {"size", r.attack_size},
        {"factor", r.factor},        {"metric", r.metric}};
    bool match = true;
    for (const auto& [k, v] : want) match &= have.at(k) == v;
    if (match) return &r;
  }
  return nullptr;
}

double value(const std::vector<ReportRow>& rows,
             const std::map<std::string, std::string>& want) {
  const auto* r = find(rows, want);
  if (r == nullptr) {
    std::string key;
    for (const auto& [k, v] : want) key += k + "=" + v + " ";
    throw std::runtime_error("missing report row: " + key);
  }
  return r->mean;
}

Experiments run_experiments(const std::filesystem::path& out) {
  auto cfg = pipeline::ExperimentConfig::load(testing::source_dir() / "configs" /
                                              "acceptance.json");
  std::filesystem::remove_all(out);
  cfg.out_dir = out;
  cfg.jobs = 1;
  pipeline::Runner runner(cfg);
  Experiments e;
  const auto t0 = Clock::now();
  e.rows = runner.run_in_distribution();
  e.in_distribution_seconds = seconds_since(t0);
  for (const char* name : {"ood", "few_shot", "length", "attribute"}) {
    auto part = runner.run(name);
    e.rows.insert(e.rows.end(), part.begin(), part.end());
  }
  const pipeline::Reconstructor copy = [](const Tokens& original,
                                          const EmbeddingVector&, std::uint64_t) {
    return original;
  };
  e.copy_stub = runner.run_attribute_eval(&copy, "copy");
  runner.flush();
  report::emit_report(e.rows, out, "acceptance");
  return e;
}

std::map<std::string, std::string> in_dist(const std::string& target, std::size_t size) {
  return {{"experiment", "in_distribution"}, {"target", target}, {"size", "h128"},
          {"factor", "train_size=" + std::to_string(size)}, {"metric", "bleu1_beam"}};
}

Outcome e1(const Experiments& e) {
  std::vector<double> b;
  for (std::size_t n : {0, 200, 1000, 5000}) b.push_back(value(e.rows, in_dist("pm64", n)));
  const bool monotone = b[1] <= b[2] && b[2] <= b[3];
  const bool gain = b[3] - b[0] >= 0.30;
  const bool fast = e.in_distribution_seconds < 15 * 60;
  return {monotone && gain && fast,
          "BLEU-1 untrained " + fmt(b[0]) + ", 200 " + fmt(b[1]) + ", 1000 " + fmt(b[2]) +
              ", 5000 " + fmt(b[3]) + "; in-distribution sweep " +
              fmt(e.in_distribution_seconds, 1) + " s"};
}

Outcome e2(const Experiments& e) {
  std::vector<double> bleu, sim;
  std::string detail;
  for (const char* ds : {"wiki_heldout", "news", "clinical"}) {
    const std::map<std::string, std::string> base = {
        {"experiment", "ood"}, {"dataset", ds}, {"target", "pm64"}, {"size", "h128"}};
    auto b = base, s = base;
    b["metric"] = "bleu1_beam";
    s["metric"] = "similarity";
    bleu.push_back(value(e.rows, b));
    sim.push_back(value(e.rows, s));
    detail += std::string(ds) + " sim " + fmt(sim.back()) + " BLEU-1 " + fmt(bleu.back()) + "; ";
  }
  const double rho = simdata::spearman(bleu, sim);
  return {rho >= 0.9, detail + "Spearman " + fmt(rho)};
}

Outcome e3(const Experiments& e) {
  auto at = [&](const char* bucket) {
    return value(e.rows, {{"experiment", "length"}, {"target", "pm64"},
                          {"factor", std::string("length=") + bucket},
                          {"metric", "bleu1_beam"}});
  };
  const double s = at("8-12"), m = at("20-28"), l = at("40-56");
  return {s - l >= 0.05, "BLEU-1 8-12 " + fmt(s) + ", 20-28 " + fmt(m) + ", 40-56 " +
                             fmt(l) + ", short minus long " + fmt(s - l)};
}

std::vector<double> few_shot_curve(const Experiments& e) {
  std::vector<double> c;
  for (const char* n : {"0", "100", "500"}) {
    c.push_back(value(e.rows, {{"experiment", "few_shot"}, {"target", "pm64"},
                               {"factor", std::string("disclosed=") + n},
                               {"metric", "bleu1_beam"}}));
  }
  return c;
}

std::string curve_text(const std::vector<double>& c) {
  return "clinical BLEU-1 at 0/100/500 disclosed: " + fmt(c[0]) + " / " + fmt(c[1]) +
         " / " + fmt(c[2]);
}

Outcome e4(const Experiments& e) {
  const auto c = few_shot_curve(e);
  return {c[2] - c[0] >= 0.02, curve_text(c) + ", gain " + fmt(c[2] - c[0])};
}

// Non-decreasing in the number of disclosed pairs, allowing one inversion of
// at most 0.005.
Outcome e4_curve(const Experiments& e) {
  const auto c = few_shot_curve(e);
  int inversions = 0;
  double worst = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i] < c[i - 1]) {
      ++inversions;
      worst = std::max(worst, c[i - 1] - c[i]);
    }
  }
  return {inversions == 0 || (inversions == 1 && worst <= 0.005),
          curve_text(c) + ", " + std::to_string(inversions) + " inversion(s), largest " +
              fmt(worst)};
}

Outcome e5(const Experiments& e) {
  const auto* direct = find(e.rows, {{"experiment", "attribute"}, {"size", "None"}});
  const auto* recon = find(e.rows, {{"experiment", "attribute"}, {"size", "h128"}});
  const auto* stub_direct = find(e.copy_stub, {{"size", "None"}});
  const auto* stub = find(e.copy_stub, {{"size", "copy"}});
  if (!direct || !recon || !stub_direct || !stub) return {false, "missing attribute rows"};
  const bool agree = stub->mean == stub_direct->mean;
  const bool pass = direct->mean >= recon->mean && recon->mean >= 0.7 && agree;
  return {pass, "direct " + fmt(direct->mean) + ", reconstructed " + fmt(recon->mean) +
                    " +- " + fmt(recon->std_error) + ", copy stub " + fmt(stub->mean) +
                    (agree ? " (agrees)" : " (differs)")};
}

Outcome expressivity(const Experiments& e) {
  const double hi = value(e.rows, in_dist("pm256", 5000));
  const double lo = value(e.rows, in_dist("hb16", 5000));
  return {hi - lo >= 0.05, "positional_mix-256 " + fmt(hi) + " vs hashed_bag-16 " + fmt(lo) +
                               ", gap " + fmt(hi - lo)};
}

Outcome determinism() {
  const auto config = testing::source_dir() / "configs" / "smoke.json";
  std::vector<std::string> csvs;
  for (const char* name : {"determinism_a", "determinism_b"}) {
    const auto dir = testing::scratch_dir(name);
    const std::string cmd = std::string(EMBINVERT_CLI) + " --config " + config.string() +
                            " --out-dir " + dir.string() + " run all > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status != 0) return {false, "run exited with status " + std::to_string(status)};
    csvs.push_back(read_text_file(dir / "reports" / "smoke_all.csv"));
  }
  const bool same = csvs[0] == csvs[1] && !csvs[0].empty();
  return {same, "two `run all` invocations, " + std::to_string(csvs[0].size()) +
                    " CSV bytes, " + (same ? "identical" : "different")};
}

}  // namespace
}  // namespace embinvert

int main() {
  using namespace embinvert;
  int failures = 0;
  auto report_line = [&](const std::string& name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  };

  report_line("metric-correctness", metric_correctness);
  report_line("beam-admissibility", beam_admissibility);
  report_line("greedy-equals-beam1", greedy_equals_beam1);
  report_line("gradient-check", gradient_check);
  report_line("statistics", statistics);
  report_line("spearman-suite", spearman_suite);
  report_line("determinism", determinism);

  Experiments e;
  bool have = false;
  std::string err;
  try {
    e = run_experiments(std::filesystem::path(EMBINVERT_BINARY_DIR) / "acceptance_out");
    have = true;
  } catch (const std::exception& ex) {
    err = ex.what();
  }
  auto experiment = [&](const std::string& name, Outcome (*f)(const Experiments&)) {
    report_line(name, [&]() -> Outcome {
      if (!have) return {false, "experiments failed: " + err};
      return f(e);
    });
  };
  experiment("E1-training-size", e1);
  experiment("E2-similarity-ordering", e2);
  experiment("E3-text-length", e3);
  experiment("E4-few-shot", e4);
  experiment("E4-few-shot-curve", e4_curve);
  experiment("E5-attribute-inference", e5);
  experiment("expressivity", expressivity);

  std::cout << (failures == 0 ? "all acceptance criteria passed"
                              : std::to_string(failures) + " acceptance criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

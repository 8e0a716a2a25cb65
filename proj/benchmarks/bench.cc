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


#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "embinvert/corpus.h"
#include "embinvert/decoder.h"
#include "embinvert/embedder.h"
#include "embinvert/generate.h"
#include "embinvert/metrics.h"
#include "embinvert/simdata.h"

namespace embinvert {
namespace {

constexpr std::size_t kVocab = 2000;
constexpr std::size_t kDim = 64;

decoder::DecoderParams model(std::size_t hidden) {
  return decoder::DecoderParams::random({kVocab, 32, kDim, hidden, 4}, 11);
}

EmbeddingVector conditioning(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  EmbeddingVector e;
  e.values.resize(kDim);
  for (double& x : e.values) x = n(rng);
  return e;
}

std::vector<trainset::TrainingPair> pairs(std::size_t n) {
  std::mt19937_64 rng(5);
  std::vector<trainset::TrainingPair> out(n);
  for (auto& p : out) {
    p.conditioning = conditioning(rng());
    for (std::size_t t = 0; t < 12; ++t) {
      p.target_tokens.push_back(
          static_cast<TokenId>(kNumSpecials + rng() % (kVocab - kNumSpecials)));
    }
    p.target_tokens.push_back(kEosId);
  }
  return out;
}

std::vector<std::string> wiki_lines(std::size_t n) {
  auto lines = corpus::read_lines(std::string(EMBINVERT_SOURCE_DIR) +
                                  "/data/fixtures/wiki.txt");
  lines.resize(std::min(n, lines.size()));
  return lines;
}

void BM_ForwardLogprobs(benchmark::State& state) {
  const auto p = model(static_cast<std::size_t>(state.range(0)));
  const auto e = conditioning(1);
  const std::vector<TokenId> ctx = {kBosId, 7, 8, 9};
  for (auto _ : state) benchmark::DoNotOptimize(decoder::forward_logprobs(p, e, ctx));
}
BENCHMARK(BM_ForwardLogprobs)->Arg(128)->Arg(256);

void BM_BeamDecode(benchmark::State& state) {
  const auto p = model(128);
  generate::DecoderStepModel m(p, conditioning(2));
  generate::GenConfig cfg;
  cfg.beam_width = static_cast<std::size_t>(state.range(0));
  cfg.max_len = 32;
  for (auto _ : state) benchmark::DoNotOptimize(generate::beam_decode(m, cfg));
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(4)->Arg(8);

void BM_SampleDecode(benchmark::State& state) {
  const auto p = model(128);
  generate::DecoderStepModel m(p, conditioning(3));
  generate::GenConfig cfg;
  cfg.max_len = 32;
  for (auto _ : state) {
    ++cfg.seed;
    benchmark::DoNotOptimize(generate::sample_decode(m, cfg));
  }
}
BENCHMARK(BM_SampleDecode);

void BM_TrainStepGradients(benchmark::State& state) {
  const auto p = model(128);
  const auto batch = pairs(32);
  for (auto _ : state) benchmark::DoNotOptimize(decoder::gradients(p, batch));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStepGradients);

void BM_EmbedBatch(benchmark::State& state) {
  embed::EmbedderConfig cfg;
  cfg.kind = state.range(0) == 0 ? embed::EmbedderKind::kHashedBag : embed::EmbedderKind::kPositionalMix;
  cfg.dim = 256;
  cfg.seed = 7;
  embed::BuiltinEmbedder embedder(cfg);
  std::vector<Tokens> texts;
  for (const auto& line : wiki_lines(256)) texts.push_back(corpus::tokenize(line));
  for (auto _ : state) benchmark::DoNotOptimize(embedder.embed_batch(texts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(texts.size()));
}
BENCHMARK(BM_EmbedBatch)->Arg(0)->Arg(1);

void BM_Bleu1(benchmark::State& state) {
  const auto a = corpus::tokenize(wiki_lines(1)[0]);
  auto b = a;
  std::reverse(b.begin(), b.end());
  for (auto _ : state) benchmark::DoNotOptimize(metrics::bleu1(a, b));
}
BENCHMARK(BM_Bleu1);

void BM_DatasetSimilarity(benchmark::State& state) {
  const auto ref = wiki_lines(2000);
  const auto features = simdata::build_feature_set(ref, 1000);
  const std::vector<std::string> a(ref.begin(), ref.begin() + 1000);
  const std::vector<std::string> b(ref.begin() + 1000, ref.end());
  for (auto _ : state) benchmark::DoNotOptimize(simdata::dataset_similarity(a, b, features));
}
BENCHMARK(BM_DatasetSimilarity)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace embinvert

BENCHMARK_MAIN();

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


#include "embinvert/decoder.h"

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "embinvert/error.h"
#include "embinvert/pipeline.h"
#include "test_support.h"

namespace embinvert::decoder {
namespace {

using ::embinvert::testing::fixture;
using ::embinvert::testing::golden_fixture_params;
using ::embinvert::testing::random_conditioning;
using ::embinvert::testing::random_decoder;
using ::embinvert::testing::random_pairs;
using ::embinvert::testing::scratch_dir;

nlohmann::json golden() {
  return nlohmann::json::parse(std::ifstream(fixture("golden/decoder.json")));
}

EmbeddingVector vec(const nlohmann::json& j) {
  return EmbeddingVector{j.get<std::vector<double>>()};
}

trainset::TrainingPair pair_of(const nlohmann::json& j) {
  return {vec(j["conditioning"]), true, j["target"].get<std::vector<TokenId>>()};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

trainset::TrainingSet as_set(std::vector<trainset::TrainingPair> pairs,
                             std::size_t dim) {
  trainset::TrainingSet s;
  s.pairs = std::move(pairs);
  s.dim = dim;
  return s;
}

TEST(Shape, ParamCountAndValidation) {
  DecoderShape s{10, 4, 8, 16, 3};
  EXPECT_EQ(s.param_count(), 10u * 4 + 8 * 16 + 12 * 16 + 16 + 16 * 10 + 10);
  EXPECT_EQ(DecoderParams(s).flat().size(), s.param_count());
  EXPECT_EQ(code_of([] { DecoderShape{3, 4, 8, 16, 3}.validate(); }),
            ErrorCode::kShapeMismatch);
}

TEST(Context, LeftPaddedWithBos) {
  const std::vector<TokenId> prefix = {7, 8, 9};
  EXPECT_EQ(make_context({}, 3), (std::vector<TokenId>{kBosId, kBosId, kBosId}));
  EXPECT_EQ(make_context(std::span(prefix).first(1), 3),
            (std::vector<TokenId>{kBosId, kBosId, 7}));
  EXPECT_EQ(make_context(prefix, 2), (std::vector<TokenId>{8, 9}));
}

TEST(Forward, MatchesHandEvaluatedFixture) {
  const auto g = golden();
  const auto p = golden_fixture_params();
  const auto ctx = g["context"].get<std::vector<TokenId>>();
  const auto lp = forward_logprobs(p, vec(g["conditioning"]), ctx);
  const auto want = g["logprobs"].get<std::vector<double>>();
  ASSERT_EQ(lp.size(), want.size());
  for (std::size_t v = 0; v < lp.size(); ++v) EXPECT_NEAR(lp[v], want[v], 1e-12);
}

TEST(Forward, NormalizedForRandomInputs) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto p = random_decoder(12, 5, s, 3.0);
    const auto e = random_conditioning(5, s + 100);
    const std::vector<TokenId> ctx = {static_cast<TokenId>(4 + s % 8), kBosId};
    double z = 0.0;
    for (double l : forward_logprobs(p, e, ctx)) {
      EXPECT_TRUE(std::isfinite(l));
      z += std::exp(l);
    }
    EXPECT_NEAR(z, 1.0, 1e-9);
  }
}

TEST(Forward, ZeroParamsAreUniform) {
  const DecoderParams p(DecoderShape{9, 3, 4, 5, 2});
  for (double l : forward_logprobs(p, random_conditioning(4, 1), {{1, 1}})) {
    EXPECT_NEAR(l, -std::log(9.0), 1e-15);
  }
}

TEST(Forward, ShapeMismatch) {
  const DecoderParams p(DecoderShape{9, 3, 4, 5, 2});
  EXPECT_EQ(code_of([&] { forward_logprobs(p, random_conditioning(5, 1), {{1, 1}}); }),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([&] { forward_logprobs(p, random_conditioning(4, 1), {{1, 1, 1}}); }),
            ErrorCode::kShapeMismatch);
}

TEST(Loss, MatchesHandEvaluatedFixture) {
  const auto g = golden();
  const auto p = golden_fixture_params();
  std::vector<trainset::TrainingPair> pairs;
  for (const auto& j : g["pairs"]) {
    pairs.push_back(pair_of(j));
    EXPECT_NEAR(pair_loss(p, pairs.back()), j["loss"].get<double>(), 1e-12);
  }
  EXPECT_NEAR(total_loss(p, pairs), g["total_loss"].get<double>(), 1e-11);
}

TEST(Loss, UniformEosOnlyAndAdditivity) {
  const DecoderParams zero(DecoderShape{9, 3, 4, 5, 2});
  const trainset::TrainingPair eos{random_conditioning(4, 2), true, {kEosId}};
  EXPECT_NEAR(pair_loss(zero, eos), std::log(9.0), 1e-15);
  EXPECT_EQ(total_loss(zero, {}), 0.0);

  const auto p = random_decoder(9, 4, 3, 2.0);
  const auto pairs = random_pairs(9, 4, 1, 4);
  const std::vector<trainset::TrainingPair> twice = {pairs[0], pairs[0]};
  EXPECT_DOUBLE_EQ(total_loss(p, twice), 2.0 * pair_loss(p, pairs[0]));
}

TEST(Loss, TeacherForcingConsistency) {
  const auto p = random_decoder(11, 6, 5, 2.0, 8, 4, 3);
  for (const auto& pair : random_pairs(11, 6, 20, 6)) {
    double want = 0.0;
    for (std::size_t i = 0; i < pair.target_tokens.size(); ++i) {
      const auto ctx = make_context(std::span(pair.target_tokens).first(i), 3);
      want -= forward_logprobs(p, pair.conditioning, ctx)[pair.target_tokens[i]];
    }
    const double got = pair_loss(p, pair);
    EXPECT_NEAR(got, want, 1e-12);
    EXPECT_GE(got, 0.0);
  }
}

TEST(Gradients, FiniteDifferenceCheck) {
  const auto p = random_decoder(10, 6, 11, 1.5, 8, 4, 3);
  const auto batch = random_pairs(10, 6, 6, 12);
  const auto probes = testing::gradient_check(p, batch, 200, 13);
  std::size_t ok = 0;
  for (const auto& r : probes) {
    if (r.ok) ++ok;
  }
  EXPECT_GE(ok, 198u);
}

TEST(Gradients, ZeroConditioningGivesZeroCondProjGradient) {
  const auto p = random_decoder(10, 6, 14, 1.0);
  auto batch = random_pairs(10, 6, 4, 15);
  for (auto& b : batch) b.conditioning.values.assign(6, 0.0);
  const auto g = gradients(p, batch).grad;
  EXPECT_EQ(g.cond_proj().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradients, SaturatedOutputBiasHasNoGradient) {
  DecoderParams p(DecoderShape{8, 2, 3, 4, 2});
  p.out_bias()[kEosId] = 60.0;
  const std::vector<trainset::TrainingPair> batch = {
      {random_conditioning(3, 1), true, {kEosId}},
      {random_conditioning(3, 2), true, {kEosId}}};
  const auto g = gradients(p, batch);
  EXPECT_LT(g.grad.out_bias().cwiseAbs().maxCoeff(), 1e-20);
  EXPECT_LT(g.loss, 1e-20);
}

TEST(Gradients, LossIsBatchMean) {
  const auto p = random_decoder(10, 6, 16);
  const auto batch = random_pairs(10, 6, 5, 17);
  EXPECT_NEAR(gradients(p, batch).loss, mean_loss(p, batch), 1e-12);
  EXPECT_NEAR(mean_loss(p, batch), total_loss(p, batch) / 5.0, 1e-12);
}

TEST(Train, ZeroLearningRateLeavesParamsUnchanged) {
  const auto p = random_decoder(10, 6, 18);
  const auto set = as_set(random_pairs(10, 6, 40, 19), 6);
  const auto val = as_set(random_pairs(10, 6, 10, 32), 6);
  for (auto opt : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 2;
    cfg.optimizer = opt;
    EXPECT_EQ(train(p, set, cfg).params, p);
    EXPECT_EQ(train(p, set, cfg, val).params, p);
    EXPECT_EQ(continue_training(p, set, cfg).params, p);
  }
  TrainConfig bad;
  bad.learning_rate = -1e-3;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kInvalidArgument);
  bad.learning_rate = 1e-3;
  bad.epochs = 0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(Train, EmptyContinuationIsNoOp) {
  const auto p = random_decoder(10, 6, 20);
  TrainConfig cfg;
  EXPECT_EQ(continue_training(p, trainset::TrainingSet{}, cfg).params, p);
}

TEST(Train, DeterministicGivenSeed) {
  const auto p = random_decoder(10, 6, 21);
  const auto set = as_set(random_pairs(10, 6, 60, 22), 6);
  const auto val = as_set(random_pairs(10, 6, 20, 23), 6);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 5;
  const auto a = train(p, set, cfg, val);
  const auto b = train(p, set, cfg, val);
  ASSERT_EQ(a.curve.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.curve[i].train_loss, b.curve[i].train_loss);
    EXPECT_EQ(a.curve[i].validation_loss, b.curve[i].validation_loss);
  }
  EXPECT_EQ(a.params, b.params);
}

TEST(Train, ReturnsBestValidationParameters) {
  const auto p = random_decoder(10, 6, 24);
  const auto set = as_set(random_pairs(10, 6, 60, 25), 6);
  const auto val = as_set(random_pairs(10, 6, 20, 26), 6);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.learning_rate = 0.05;
  const auto r = train(p, set, cfg, val);
  double best = r.initial_validation_loss;
  for (const auto& e : r.curve) best = std::min(best, e.validation_loss);
  EXPECT_NEAR(mean_loss(r.params, val.pairs), best, 1e-12);
}

TEST(Train, NonFiniteLossIsDivergence) {
  const auto p = random_decoder(10, 6, 27);
  auto pairs = random_pairs(10, 6, 8, 28);
  pairs[3].conditioning.values[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_EQ(code_of([&] { train(p, as_set(pairs, 6), cfg); }),
            ErrorCode::kDivergenceDetected);
}

// The shipped smoke corpus: 200 sentences, d=64, 30 epochs.
TEST(Train, SmokeCorpusHalvesTrainingLoss) {
  const auto cfg = pipeline::ExperimentConfig::load(
      testing::source_dir() / "configs" / "smoke.json");
  const auto lines = corpus::read_lines(fixture("smoke.txt"));
  std::vector<Tokens> toks;
  for (const auto& l : lines) toks.push_back(corpus::tokenize(l));
  const auto vocab = corpus::build_vocab(toks, 5000);
  const auto sents = corpus::filter_and_encode(lines, vocab);
  ASSERT_EQ(sents.size(), 200u);
  embed::BuiltinEmbedder target(cfg.targets.at(0).config);
  ASSERT_EQ(target.dim(), 64u);
  const auto set = trainset::build_training_set(sents, target, vocab).set;
  DecoderShape shape{vocab.size(), cfg.token_width, 64, cfg.hidden_sizes.at(0),
                     cfg.context};
  auto tc = cfg.train;
  ASSERT_EQ(tc.epochs, 30u);
  const auto r = train(DecoderParams::random(shape, 1), set, tc);
  const double final_loss = mean_loss(r.params, set.pairs);
  EXPECT_LE(final_loss, 0.5 * r.initial_train_loss)
      << "initial " << r.initial_train_loss << " final " << final_loss;
  // Per token, the trained model beats the uniform baseline.
  std::size_t tokens = 0;
  for (const auto& pr : set.pairs) tokens += pr.target_tokens.size();
  EXPECT_LT(total_loss(r.params, set.pairs) / tokens, std::log(vocab.size()));
}

TEST(Train, ContinuationReducesHeldOutLossOnNewDomain) {
  // Base model on wiki, then 100 clinical pairs.
  const auto wiki = corpus::read_lines(fixture("wiki.txt"));
  const auto clin = corpus::read_lines(fixture("clinical.txt"));
  std::vector<Tokens> toks;
  for (const auto& l : wiki) toks.push_back(corpus::tokenize(l));
  for (const auto& l : clin) toks.push_back(corpus::tokenize(l));
  const auto vocab = corpus::build_vocab(toks, 5000);
  embed::EmbedderConfig ec;
  ec.kind = embed::EmbedderKind::kPositionalMix;
  ec.dim = 32;
  embed::BuiltinEmbedder target(ec);
  auto encode = [&](const std::vector<std::string>& l, std::size_t a, std::size_t b) {
    std::vector<std::string> part(l.begin() + a, l.begin() + b);
    return trainset::build_training_set(corpus::filter_and_encode(part, vocab),
                                        target, vocab).set;
  };
  const auto base = encode(wiki, 0, 400);
  const auto extra = encode(clin, 0, 100);
  const auto held = encode(clin, 1000, 1100);
  TrainConfig tc;
  tc.learning_rate = 0.005;
  tc.epochs = 4;
  DecoderShape shape{vocab.size(), 16, 32, 32, 3};
  const auto trained = train(DecoderParams::random(shape, 2), base, tc).params;
  const double before = mean_loss(trained, held.pairs);
  tc.epochs = 2;
  const auto cont = continue_training(trained, extra, tc).params;
  EXPECT_LT(mean_loss(cont, held.pairs), before);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const auto dir = scratch_dir("decoder_ckpt");
  Checkpoint c{random_decoder(10, 6, 29), 0xabcdef, 0x123456, R"({"lr":0.1})"};
  save_checkpoint(dir / "m.ckpt", c);
  const auto back = load_checkpoint(dir / "m.ckpt", 0xabcdef);
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.embedder_fingerprint, c.embedder_fingerprint);
  EXPECT_EQ(back.config_echo, c.config_echo);
  for (std::size_t i = 0; i < c.params.flat().size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.params.flat()[i]),
              std::bit_cast<std::uint64_t>(c.params.flat()[i]));
  }
}

TEST(Checkpoint, TruncatedFileIsCorrupt) {
  const auto dir = scratch_dir("decoder_ckpt_trunc");
  save_checkpoint(dir / "m.ckpt", {random_decoder(10, 6, 30), 1, 2, ""});
  std::filesystem::resize_file(dir / "m.ckpt",
                               std::filesystem::file_size(dir / "m.ckpt") - 9);
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "m.ckpt"); }),
            ErrorCode::kCorruptFile);
  write_text_file(dir / "junk.ckpt", "not a checkpoint");
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "junk.ckpt"); }),
            ErrorCode::kCorruptFile);
}

TEST(Checkpoint, VocabMismatch) {
  const auto dir = scratch_dir("decoder_ckpt_vocab");
  save_checkpoint(dir / "m.ckpt", {random_decoder(10, 6, 31), 1, 2, ""});
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "m.ckpt", 99); }),
            ErrorCode::kVocabMismatch);
}

}  // namespace
}  // namespace embinvert::decoder

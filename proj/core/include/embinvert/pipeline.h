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

#ifndef EMBINVERT_PIPELINE_H_
#define EMBINVERT_PIPELINE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "embinvert/attribute.h"
#include "embinvert/corpus.h"
#include "embinvert/decoder.h"
#include "embinvert/embedder.h"
#include "embinvert/generate.h"
#include "embinvert/report.h"

namespace embinvert::pipeline {

using report::ReportRow;

struct TargetSpec {
  std::string name;
  embed::EmbedderConfig config;
  // Defaults to the target itself with the query guard disabled.
  std::optional<embed::EmbedderConfig> proxy;

  embed::EmbedderConfig proxy_config() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t master_seed = 0;
  // Relative corpus and task paths resolve against this directory.
  std::filesystem::path base_dir;
  // Empty: nothing is written.
  std::filesystem::path out_dir;
  // 0: machine parallelism.
  std::size_t jobs = 0;
  bool use_cache = true;
  bool save_checkpoints = true;

  // name -> one-sentence-per-line text file.
  std::map<std::string, std::filesystem::path> corpora;
  // Corpora whose tokens make up the shared vocabulary; empty means all.
  std::vector<std::string> vocab_corpora;
  std::size_t vocab_max_size = 5000;
  std::size_t vocab_min_freq = 1;
  corpus::LengthWindow window;

  std::string train_corpus;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::vector<std::size_t> train_sizes;
  std::size_t validation_limit = 500;
  std::size_t eval_limit = 200;
  std::vector<std::string> eval_corpora;

  std::vector<TargetSpec> targets;
  std::vector<std::size_t> hidden_sizes{128};
  std::size_t token_width = 32;
  std::size_t context = 4;
  decoder::TrainConfig train;
  generate::GenConfig generation;
  std::size_t n_trials = 10;

  std::string few_shot_corpus;
  std::vector<std::size_t> few_shot_sizes;
  std::size_t few_shot_epoch_divisor = 4;

  std::string length_corpus;
  std::vector<std::pair<std::size_t, std::size_t>> length_buckets;
  std::size_t length_eval_per_bucket = 100;
  // 0: every sentence outside the evaluation buckets.
  std::size_t length_train_size = 0;

  std::vector<std::filesystem::path> attribute_tasks;
  // Targets attacked in the attribute experiment; empty means all.
  std::vector<std::string> attribute_targets;

  std::size_t feature_count = 1000;

  // Throws kInvalidArgument.
  void validate() const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;

  static ExperimentConfig from_json(const nlohmann::json& doc,
                                    const std::filesystem::path& base_dir = {});
  // base_dir defaults to the file's directory.
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// JSON forms of the component configs; missing keys keep their defaults.
embed::EmbedderConfig embedder_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const embed::EmbedderConfig& c);
decoder::TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const decoder::TrainConfig& c);
generate::GenConfig gen_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const generate::GenConfig& c);

std::uint64_t derive_seed(std::uint64_t master, std::string_view experiment_id,
                          std::uint64_t trial);

// Replaces the trained decoder in the attribute experiment. Receives the
// original words and the target embedding of the instance.
using Reconstructor = std::function<Tokens(
    const Tokens& original, const EmbeddingVector& embedding,
    std::uint64_t seed)>;

// Holds the loaded corpora, the shared vocabulary, the target embedders and
// every decoder trained so far, so several experiments over one config reuse
// work. Experiment cells run on a bounded worker pool; rows come back in a
// fixed order.
class Runner {
 public:
  explicit Runner(ExperimentConfig cfg);
  ~Runner();
  Runner(const Runner&) = delete;
  Runner& operator=(const Runner&) = delete;

  std::vector<ReportRow> run_in_distribution();
  std::vector<ReportRow> run_ood();
  std::vector<ReportRow> run_few_shot();
  std::vector<ReportRow> run_length_study();
  std::vector<ReportRow> run_attribute_eval(
      const Reconstructor* reconstructor = nullptr,
      const std::string& reconstructor_label = "stub");
  // "in_distribution", "ood", "few_shot", "length", "attribute" or "all".
  std::vector<ReportRow> run(std::string_view experiment);

  const ExperimentConfig& config() const;
  const corpus::Vocabulary& vocabulary() const;
  // Persists the embedding cache when an output directory is set.
  void flush();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::vector<ReportRow> run_in_distribution(const ExperimentConfig& cfg);
std::vector<ReportRow> run_ood(const ExperimentConfig& cfg);
std::vector<ReportRow> run_few_shot(const ExperimentConfig& cfg);
std::vector<ReportRow> run_length_study(const ExperimentConfig& cfg);
std::vector<ReportRow> run_attribute_eval(const ExperimentConfig& cfg);

// Names accepted by Runner::run.
const std::vector<std::string>& experiment_names();

}  // namespace embinvert::pipeline

#endif  // EMBINVERT_PIPELINE_H_

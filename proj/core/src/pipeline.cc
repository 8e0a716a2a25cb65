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

#include "embinvert/pipeline.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <future>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "embinvert/binary_io.h"
#include "embinvert/error.h"
#include "embinvert/hash.h"
#include "embinvert/metrics.h"
#include "embinvert/simdata.h"
#include "embinvert/trainset.h"

namespace embinvert::pipeline {

using nlohmann::json;

namespace {

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "config: " + what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config serialization.

embed::EmbedderConfig embedder_config_from_json(const json& j) {
  embed::EmbedderConfig c;
  c.kind = embed::parse_kind(value_or<std::string>(j, "kind", "hashed_bag"));
  c.dim = value_or<std::size_t>(j, "dim", c.dim);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  c.gamma = value_or<double>(j, "gamma", c.gamma);
  c.min_query_tokens =
      value_or<std::size_t>(j, "min_query_tokens", c.min_query_tokens);
  c.endpoint = value_or<std::string>(j, "endpoint", c.endpoint);
  c.api_key_env = value_or<std::string>(j, "api_key_env", c.api_key_env);
  c.max_in_flight = value_or<std::size_t>(j, "max_in_flight", c.max_in_flight);
  c.max_attempts = value_or<std::size_t>(j, "max_attempts", c.max_attempts);
  c.request_batch = value_or<std::size_t>(j, "request_batch", c.request_batch);
  c.initial_backoff = std::chrono::milliseconds(value_or<std::int64_t>(
      j, "initial_backoff_ms", c.initial_backoff.count()));
  c.timeout = std::chrono::seconds(
      value_or<std::int64_t>(j, "timeout_s", c.timeout.count()));
  c.validate();
  return c;
}

json to_json(const embed::EmbedderConfig& c) {
  json j;
  j["kind"] = std::string(embed::kind_name(c.kind));
  j["dim"] = c.dim;
  j["seed"] = c.seed;
  j["gamma"] = c.gamma;
  j["min_query_tokens"] = c.min_query_tokens;
  if (c.kind == embed::EmbedderKind::kRemote) {
    j["endpoint"] = c.endpoint;
    j["api_key_env"] = c.api_key_env;
    j["max_in_flight"] = c.max_in_flight;
    j["max_attempts"] = c.max_attempts;
    j["request_batch"] = c.request_batch;
    j["initial_backoff_ms"] = c.initial_backoff.count();
    j["timeout_s"] = c.timeout.count();
  }
  return j;
}

decoder::TrainConfig train_config_from_json(const json& j) {
  decoder::TrainConfig c;
  c.learning_rate = value_or<double>(j, "learning_rate", c.learning_rate);
  c.epochs = value_or<std::size_t>(j, "epochs", c.epochs);
  c.batch_size = value_or<std::size_t>(j, "batch_size", c.batch_size);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  auto opt = value_or<std::string>(j, "optimizer", "adam");
  if (opt == "adam") {
    c.optimizer = decoder::OptimizerKind::kAdam;
  } else if (opt == "sgd") {
    c.optimizer = decoder::OptimizerKind::kSgd;
  } else {
    bad_config("unknown optimizer " + opt);
  }
  c.beta1 = value_or<double>(j, "beta1", c.beta1);
  c.beta2 = value_or<double>(j, "beta2", c.beta2);
  c.epsilon = value_or<double>(j, "epsilon", c.epsilon);
  c.grad_clip_norm = value_or<double>(j, "grad_clip_norm", c.grad_clip_norm);
  c.validate();
  return c;
}

json to_json(const decoder::TrainConfig& c) {
  return json::parse(c.to_json());
}

generate::GenConfig gen_config_from_json(const json& j) {
  generate::GenConfig c;
  c.beam_width = value_or<std::size_t>(j, "beam_width", c.beam_width);
  c.max_len = value_or<std::size_t>(j, "max_len", c.max_len);
  c.temperature = value_or<double>(j, "temperature", c.temperature);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  c.validate();
  return c;
}

json to_json(const generate::GenConfig& c) {
  json j;
  j["beam_width"] = c.beam_width;
  j["max_len"] = c.max_len;
  j["temperature"] = c.temperature;
  j["seed"] = c.seed;
  return j;
}

embed::EmbedderConfig TargetSpec::proxy_config() const {
  if (proxy) return *proxy;
  auto c = config;
  c.min_query_tokens = 0;
  return c;
}

void ExperimentConfig::validate() const {
  if (n_trials < 1) bad_config("n_trials must be >= 1");
  if (targets.empty()) bad_config("no targets");
  std::set<std::string> names;
  for (const auto& t : targets) {
    if (t.name.empty()) bad_config("target without a name");
    if (!names.insert(t.name).second) bad_config("duplicate target " + t.name);
    t.config.validate();
    if (t.proxy) t.proxy->validate();
  }
  if (hidden_sizes.empty()) bad_config("no hidden sizes");
  for (auto h : hidden_sizes) {
    if (h == 0) bad_config("hidden size 0");
  }
  auto known = [&](const std::string& c) { return corpora.count(c) > 0; };
  if (!known(train_corpus)) bad_config("unknown train corpus " + train_corpus);
  for (const auto& c : eval_corpora) {
    if (!known(c)) bad_config("unknown eval corpus " + c);
  }
  for (const auto& c : vocab_corpora) {
    if (!known(c)) bad_config("unknown vocab corpus " + c);
  }
  if (!few_shot_corpus.empty() && !known(few_shot_corpus)) {
    bad_config("unknown few-shot corpus " + few_shot_corpus);
  }
  if (!length_corpus.empty() && !known(length_corpus)) {
    bad_config("unknown length corpus " + length_corpus);
  }
  for (const auto& [lo, hi] : length_buckets) {
    if (lo > hi) bad_config("length bucket with min > max");
  }
  for (const auto& t : attribute_targets) {
    if (!names.count(t)) bad_config("unknown attribute target " + t);
  }
  if (few_shot_epoch_divisor == 0) bad_config("few_shot_epoch_divisor is 0");
  if (eval_limit == 0) bad_config("eval_limit is 0");
  train.validate();
  generation.validate();
}

std::filesystem::path ExperimentConfig::resolve(
    const std::filesystem::path& p) const {
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc,
                                             const std::filesystem::path& base) {
  ExperimentConfig c;
  try {
    c.base_dir = base;
    c.name = value_or<std::string>(doc, "name", c.name);
    c.master_seed = value_or<std::uint64_t>(doc, "master_seed", 0);
    c.out_dir = value_or<std::string>(doc, "out_dir", "");
    c.jobs = value_or<std::size_t>(doc, "jobs", 0);
    c.use_cache = value_or<bool>(doc, "use_cache", true);
    c.save_checkpoints = value_or<bool>(doc, "save_checkpoints", true);
    if (auto it = doc.find("corpora"); it != doc.end()) {
      for (const auto& [k, v] : it->items()) {
        c.corpora[k] = v.get<std::string>();
      }
    }
    c.vocab_corpora =
        value_or<std::vector<std::string>>(doc, "vocab_corpora", {});
    c.vocab_max_size = value_or<std::size_t>(doc, "vocab_max_size", 5000);
    c.vocab_min_freq = value_or<std::size_t>(doc, "vocab_min_freq", 1);
    c.window.min_len = value_or<std::size_t>(doc, "min_len", c.window.min_len);
    c.window.max_len = value_or<std::size_t>(doc, "max_len", c.window.max_len);
    c.train_corpus = value_or<std::string>(doc, "train_corpus", "");
    if (doc.contains("split")) {
      auto v = doc.at("split").get<std::vector<double>>();
      if (v.size() != 3) bad_config("split needs three fractions");
      c.split = {v[0], v[1], v[2]};
    }
    c.train_sizes = value_or<std::vector<std::size_t>>(doc, "train_sizes", {});
    c.validation_limit = value_or<std::size_t>(doc, "validation_limit", 500);
    c.eval_limit = value_or<std::size_t>(doc, "eval_limit", 200);
    c.eval_corpora =
        value_or<std::vector<std::string>>(doc, "eval_corpora", {});
    if (auto it = doc.find("targets"); it != doc.end()) {
      for (const auto& t : *it) {
        TargetSpec spec;
        spec.name = t.at("name").get<std::string>();
        spec.config = embedder_config_from_json(t);
        if (t.contains("proxy")) {
          spec.proxy = embedder_config_from_json(t.at("proxy"));
        }
        c.targets.push_back(std::move(spec));
      }
    }
    c.hidden_sizes =
        value_or<std::vector<std::size_t>>(doc, "hidden_sizes", {128});
    c.token_width = value_or<std::size_t>(doc, "token_width", 32);
    c.context = value_or<std::size_t>(doc, "context", 4);
    if (doc.contains("train")) c.train = train_config_from_json(doc.at("train"));
    if (doc.contains("generation")) {
      c.generation = gen_config_from_json(doc.at("generation"));
    }
    c.n_trials = value_or<std::size_t>(doc, "n_trials", 10);
    c.few_shot_corpus = value_or<std::string>(doc, "few_shot_corpus", "");
    c.few_shot_sizes =
        value_or<std::vector<std::size_t>>(doc, "few_shot_sizes", {});
    c.few_shot_epoch_divisor =
        value_or<std::size_t>(doc, "few_shot_epoch_divisor", 4);
    c.length_corpus = value_or<std::string>(doc, "length_corpus", "");
    if (auto it = doc.find("length_buckets"); it != doc.end()) {
      for (const auto& b : *it) {
        auto v = b.get<std::vector<std::size_t>>();
        if (v.size() != 2) bad_config("length bucket needs [min, max]");
        c.length_buckets.emplace_back(v[0], v[1]);
      }
    }
    c.length_eval_per_bucket =
        value_or<std::size_t>(doc, "length_eval_per_bucket", 100);
    c.length_train_size = value_or<std::size_t>(doc, "length_train_size", 0);
    for (const auto& p : value_or<std::vector<std::string>>(
             doc, "attribute_tasks", {})) {
      c.attribute_tasks.emplace_back(p);
    }
    c.attribute_targets =
        value_or<std::vector<std::string>>(doc, "attribute_targets", {});
    c.feature_count = value_or<std::size_t>(doc, "feature_count", 1000);
  } catch (const json::exception& ex) {
    bad_config(ex.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kInvalidArgument,
                "config " + path.string() + ": " + ex.what());
  }
  return from_json(doc, path.parent_path());
}

json ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["master_seed"] = master_seed;
  j["out_dir"] = out_dir.string();
  j["jobs"] = jobs;
  j["use_cache"] = use_cache;
  j["save_checkpoints"] = save_checkpoints;
  json cj = json::object();
  for (const auto& [k, v] : corpora) cj[k] = v.string();
  j["corpora"] = cj;
  j["vocab_corpora"] = vocab_corpora;
  j["vocab_max_size"] = vocab_max_size;
  j["vocab_min_freq"] = vocab_min_freq;
  j["min_len"] = window.min_len;
  j["max_len"] = window.max_len;
  j["train_corpus"] = train_corpus;
  j["split"] = std::vector<double>(split.begin(), split.end());
  j["train_sizes"] = train_sizes;
  j["validation_limit"] = validation_limit;
  j["eval_limit"] = eval_limit;
  j["eval_corpora"] = eval_corpora;
  json tj = json::array();
  for (const auto& t : targets) {
    json e = pipeline::to_json(t.config);
    e["name"] = t.name;
    if (t.proxy) e["proxy"] = pipeline::to_json(*t.proxy);
    tj.push_back(std::move(e));
  }
  j["targets"] = tj;
  j["hidden_sizes"] = hidden_sizes;
  j["token_width"] = token_width;
  j["context"] = context;
  j["train"] = pipeline::to_json(train);
  j["generation"] = pipeline::to_json(generation);
  j["n_trials"] = n_trials;
  j["few_shot_corpus"] = few_shot_corpus;
  j["few_shot_sizes"] = few_shot_sizes;
  j["few_shot_epoch_divisor"] = few_shot_epoch_divisor;
  j["length_corpus"] = length_corpus;
  json bj = json::array();
  for (const auto& [lo, hi] : length_buckets) bj.push_back({lo, hi});
  j["length_buckets"] = bj;
  j["length_eval_per_bucket"] = length_eval_per_bucket;
  j["length_train_size"] = length_train_size;
  std::vector<std::string> tasks;
  for (const auto& p : attribute_tasks) tasks.push_back(p.string());
  j["attribute_tasks"] = tasks;
  j["attribute_targets"] = attribute_targets;
  j["feature_count"] = feature_count;
  return j;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view experiment_id,
                          std::uint64_t trial) {
  return hash_values({mix64(master), fnv1a(experiment_id), mix64(trial + 1)});
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "in_distribution", "ood", "few_shot", "length", "attribute", "all"};
  return names;
}

// ---------------------------------------------------------------------------
// Runner.

namespace {

using ParamsPtr = std::shared_ptr<const decoder::DecoderParams>;

// Runs fn(0..n-1) on up to `jobs` threads. The first failure by index is
// rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t jobs, std::size_t n, F&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < std::min(jobs, n); ++w) {
      workers.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct EvalOutcome {
  double bleu_beam = 0.0;
  double rouge_beam = 0.0;
  std::vector<double> bleu_trials;
  std::vector<double> rouge_trials;
};

ReportRow make_row(const std::string& experiment, const std::string& dataset,
                   const std::string& target, const std::string& attack,
                   const std::string& factor, const std::string& metric,
                   std::vector<double> trials) {
  ReportRow r;
  r.experiment = experiment;
  r.dataset = dataset;
  r.target_model = target;
  r.attack_size = attack;
  r.factor = factor;
  r.metric = metric;
  if (trials.size() >= 2) {
    auto s = metrics::aggregate_trials(trials);
    r.mean = s.mean;
    r.std_error = s.std_error;
  } else if (trials.size() == 1) {
    r.mean = trials[0];
  }
  r.n_trials = trials.size();
  r.trials = std::move(trials);
  return r;
}

void append_eval_rows(std::vector<ReportRow>& rows, const std::string& exp,
                      const std::string& dataset, const std::string& target,
                      const std::string& attack, const std::string& factor,
                      const EvalOutcome& o) {
  rows.push_back(make_row(exp, dataset, target, attack, factor, "bleu1_beam",
                          {o.bleu_beam}));
  rows.push_back(make_row(exp, dataset, target, attack, factor, "rouge1_beam",
                          {o.rouge_beam}));
  rows.push_back(make_row(exp, dataset, target, attack, factor,
                          "bleu1_sampled", o.bleu_trials));
  rows.push_back(make_row(exp, dataset, target, attack, factor,
                          "rouge1_sampled", o.rouge_trials));
}

// Compares attack sizes inside each (experiment, dataset, target, factor,
// metric) group of multi-trial rows and stars a significant winner.
void mark_significance(std::vector<ReportRow>& rows) {
  std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.n_trials < 2 || r.attack_size == "None") continue;
    groups[{r.experiment, r.dataset, r.target_model, r.factor, r.metric}]
        .push_back(i);
  }
  for (const auto& [key, members] : groups) {
    if (members.size() < 2) continue;
    std::vector<std::vector<double>> samples;
    for (auto i : members) samples.push_back(rows[i].trials);
    auto mark = metrics::mark_best(samples);
    if (mark.significant) rows[members[mark.best]].significance = "*";
  }
}

std::string attack_label(std::size_t h) { return "h" + std::to_string(h); }

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      c = '_';
    }
  }
  return s;
}

std::uint64_t texts_hash(const std::vector<std::string>& texts) {
  std::uint64_t h = fnv1a("texts");
  for (const auto& t : texts) h = hash_combine(h, fnv1a(t));
  return h;
}

}  // namespace

struct Runner::State {
  ExperimentConfig cfg;
  std::size_t jobs = 1;
  std::map<std::string, std::vector<std::string>> raw;
  std::map<std::string, std::vector<corpus::Sentence>> encoded;
  corpus::Vocabulary vocab;

  std::shared_ptr<embed::EmbeddingCache> cache;
  std::map<std::string, std::shared_ptr<const embed::Embedder>> targets;
  std::map<std::string, std::shared_ptr<const embed::Embedder>> unguarded;
  std::map<std::string, std::shared_ptr<const embed::Embedder>> proxies;

  // Indices into the train corpus.
  std::array<std::vector<std::size_t>, 3> split;

  std::mutex models_mu;
  std::map<std::string, std::shared_future<ParamsPtr>> models;

  std::mutex features_mu;
  std::optional<simdata::FeatureSet> features;

  std::shared_ptr<const embed::Embedder> wrap(const embed::EmbedderConfig& c) {
    std::shared_ptr<const embed::Embedder> e = embed::make_embedder(c);
    if (cache) e = std::make_shared<embed::CachingEmbedder>(e, cache);
    return e;
  }

  const TargetSpec& target_spec(const std::string& name) const {
    for (const auto& t : cfg.targets) {
      if (t.name == name) return t;
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown target " + name);
  }

  decoder::DecoderShape shape(const TargetSpec& t, std::size_t h) const {
    decoder::DecoderShape s;
    s.vocab_size = vocab.size();
    s.token_width = cfg.token_width;
    s.cond_dim = t.config.dim;
    s.hidden = h;
    s.context = cfg.context;
    return s;
  }

  std::size_t largest_train_size() const {
    if (cfg.train_sizes.empty()) return split[0].size();
    return *std::max_element(cfg.train_sizes.begin(), cfg.train_sizes.end());
  }

  std::vector<corpus::Sentence> pick(const std::string& corpus_name,
                                     std::span<const std::size_t> idx,
                                     std::size_t limit) const {
    const auto& all = encoded.at(corpus_name);
    std::vector<corpus::Sentence> out;
    for (std::size_t i = 0; i < idx.size() && out.size() < limit; ++i) {
      out.push_back(all[idx[i]]);
    }
    return out;
  }

  // Seeded order of a corpus other than the training corpus.
  std::vector<std::size_t> shuffled_order(const std::string& name) const {
    std::vector<std::size_t> order(encoded.at(name).size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(cfg.master_seed, "order:" + name, 0));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }

  // Held-out evaluation sentences of a corpus: the test split for the
  // training corpus, otherwise the first eval_limit of the seeded order.
  std::vector<corpus::Sentence> eval_sentences(const std::string& name) const {
    if (name == cfg.train_corpus) {
      return pick(name, split[2], cfg.eval_limit);
    }
    auto order = shuffled_order(name);
    return pick(name, order, cfg.eval_limit);
  }

  std::string dataset_label(const std::string& name) const {
    return name == cfg.train_corpus ? name + "/test" : name;
  }

  ParamsPtr get_model(const std::string& key,
                      const std::function<decoder::DecoderParams()>& build) {
    std::promise<ParamsPtr> promise;
    std::shared_future<ParamsPtr> future;
    bool owner = false;
    {
      std::lock_guard lock(models_mu);
      auto it = models.find(key);
      if (it != models.end()) {
        future = it->second;
      } else {
        future = promise.get_future().share();
        models.emplace(key, future);
        owner = true;
      }
    }
    if (owner) {
      try {
        promise.set_value(
            std::make_shared<const decoder::DecoderParams>(build()));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

  // Loads a matching checkpoint or runs `train_fn` and stores the result.
  decoder::DecoderParams checkpointed(
      const std::string& key, const std::string& echo,
      std::uint64_t fingerprint,
      const std::function<decoder::DecoderParams()>& train_fn) {
    std::filesystem::path path;
    if (!cfg.out_dir.empty() && cfg.save_checkpoints) {
      path = cfg.out_dir / "checkpoints" / (sanitize(key) + ".ckpt");
      if (cfg.use_cache && std::filesystem::exists(path)) {
        try {
          auto ck = decoder::load_checkpoint(path, vocab.hash());
          if (ck.config_echo == echo && ck.embedder_fingerprint == fingerprint) {
            return std::move(ck.params);
          }
        } catch (const Error&) {
          // Stale or damaged; retrain and overwrite.
        }
      }
    }
    auto params = train_fn();
    if (!path.empty()) {
      decoder::save_checkpoint(path, {params, vocab.hash(), fingerprint, echo});
    }
    return params;
  }

  trainset::TrainingSet pairs_for(std::span<const corpus::Sentence> sentences,
                                  const embed::Embedder& target) const {
    if (sentences.empty()) {
      trainset::TrainingSet empty;
      empty.dim = target.dim();
      empty.embedder_fingerprint = target.fingerprint();
      empty.vocab_hash = vocab.hash();
      return empty;
    }
    return trainset::build_training_set(sentences, target, vocab).set;
  }

  std::string echo(const std::string& key, const decoder::DecoderShape& s,
                   const decoder::TrainConfig& tc, std::size_t n_pairs) const {
    json j;
    j["key"] = key;
    j["shape"] = {s.vocab_size, s.token_width, s.cond_dim, s.hidden, s.context};
    j["train"] = pipeline::to_json(tc);
    j["pairs"] = n_pairs;
    return j.dump();
  }

  // Decoder trained on the first `size` training-split sentences of the
  // training corpus; size 0 is the random initialization.
  ParamsPtr base_model(const std::string& target_name, std::size_t h,
                       std::size_t size) {
    const std::string key = target_name + "|h" + std::to_string(h) + "|" +
                            cfg.train_corpus + "|n" + std::to_string(size);
    return get_model(key, [&, key] {
      const auto& spec = target_spec(target_name);
      const auto& target = *targets.at(target_name);
      auto shape_ = shape(spec, h);
      auto init = decoder::DecoderParams::random(
          shape_, derive_seed(cfg.master_seed, "init:" + key, 0));
      if (size == 0) return init;
      if (size > split[0].size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "train size " + std::to_string(size) + " exceeds the " +
                        std::to_string(split[0].size()) +
                        " training sentences of " + cfg.train_corpus);
      }
      auto tc = cfg.train;
      tc.seed = derive_seed(cfg.master_seed, "train:" + key, 0);
      return checkpointed(
          key, echo(key, shape_, tc, size), target.fingerprint(), [&] {
            auto train_set = pairs_for(pick(cfg.train_corpus, split[0], size),
                                       target);
            auto val_set = pairs_for(
                pick(cfg.train_corpus, split[1], cfg.validation_limit), target);
            return decoder::train(init, train_set, tc, val_set).params;
          });
    });
  }

  EvalOutcome evaluate(const decoder::DecoderParams& params,
                       std::span<const corpus::Sentence> sentences,
                       const embed::Embedder& target,
                       const std::string& seed_id) const {
    std::vector<Tokens> words;
    for (const auto& s : sentences) words.push_back(s.words);
    auto embeddings = target.embed_batch(words);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      if (embeddings[i]) kept.push_back(i);
    }
    if (kept.empty()) {
      throw Error(ErrorCode::kAllRefused,
                  "no evaluation sentence was embedded for " + seed_id);
    }
    EvalOutcome o;
    std::vector<generate::DecoderStepModel> models;
    models.reserve(kept.size());
    for (auto i : kept) models.emplace_back(params, *embeddings[i]);

    auto gen = cfg.generation;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      auto hyp = generate::beam_decode(models[k], gen);
      auto cand = corpus::decode_ids(hyp.tokens, vocab);
      const auto& ref = sentences[kept[k]].words;
      o.bleu_beam += metrics::bleu1(cand, ref);
      o.rouge_beam += metrics::rouge1(cand, ref);
    }
    o.bleu_beam /= static_cast<double>(kept.size());
    o.rouge_beam /= static_cast<double>(kept.size());

    for (std::size_t t = 0; t < cfg.n_trials; ++t) {
      const auto trial_seed = derive_seed(cfg.master_seed, seed_id, t);
      double b = 0.0;
      double r = 0.0;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        gen.seed = hash_combine(trial_seed, k);
        auto hyp = generate::sample_decode(models[k], gen);
        auto cand = corpus::decode_ids(hyp.tokens, vocab);
        const auto& ref = sentences[kept[k]].words;
        b += metrics::bleu1(cand, ref);
        r += metrics::rouge1(cand, ref);
      }
      o.bleu_trials.push_back(b / static_cast<double>(kept.size()));
      o.rouge_trials.push_back(r / static_cast<double>(kept.size()));
    }
    return o;
  }

  const simdata::FeatureSet& feature_set() {
    std::lock_guard lock(features_mu);
    if (features) return *features;
    const auto& ref = raw.at(cfg.train_corpus);
    const std::string provenance =
        "corpus=" + cfg.train_corpus + " sentences=" +
        std::to_string(ref.size()) + " k=" + std::to_string(cfg.feature_count) +
        " hash=" + std::to_string(texts_hash(ref));
    std::filesystem::path path;
    if (!cfg.out_dir.empty() && cfg.use_cache) {
      path = cfg.out_dir / "cache" / ("features_" + sanitize(cfg.train_corpus) +
                                      ".json");
      if (std::filesystem::exists(path)) {
        try {
          auto fs = simdata::FeatureSet::load(path);
          if (fs.provenance == provenance) {
            features = std::move(fs);
            return *features;
          }
        } catch (const Error&) {
        }
      }
    }
    features = simdata::build_feature_set(ref, cfg.feature_count, provenance);
    if (!path.empty()) features->save(path);
    return *features;
  }
};

Runner::Runner(ExperimentConfig cfg) : state_(std::make_unique<State>()) {
  cfg.validate();
  auto& s = *state_;
  s.cfg = std::move(cfg);
  const auto& c = s.cfg;
  s.jobs = c.jobs > 0 ? c.jobs
                      : std::max(1u, std::thread::hardware_concurrency());

  for (const auto& [name, path] : c.corpora) {
    auto resolved = c.resolve(path);
    if (!std::filesystem::exists(resolved)) {
      throw Error(ErrorCode::kIoFailure,
                  "corpus " + name + " not found at " + resolved.string());
    }
    s.raw[name] = corpus::read_lines(resolved);
  }
  std::vector<Tokens> vocab_source;
  for (const auto& [name, texts] : s.raw) {
    if (!c.vocab_corpora.empty() &&
        std::find(c.vocab_corpora.begin(), c.vocab_corpora.end(), name) ==
            c.vocab_corpora.end()) {
      continue;
    }
    for (const auto& t : texts) vocab_source.push_back(corpus::tokenize(t));
  }
  s.vocab = corpus::build_vocab(vocab_source, c.vocab_max_size,
                                c.vocab_min_freq);
  for (const auto& [name, texts] : s.raw) {
    s.encoded[name] = corpus::filter_and_encode(texts, s.vocab, c.window, name);
  }

  if (c.use_cache) {
    s.cache = c.out_dir.empty()
                  ? std::make_shared<embed::EmbeddingCache>()
                  : embed::EmbeddingCache::load(c.out_dir / "cache" /
                                                "embeddings.json");
  }
  for (const auto& t : c.targets) {
    s.targets[t.name] = s.wrap(t.config);
    auto open = t.config;
    open.min_query_tokens = 0;
    s.unguarded[t.name] = s.wrap(open);
    s.proxies[t.name] = s.wrap(t.proxy_config());
  }

  s.split = trainset::split_indices(s.encoded.at(c.train_corpus).size(),
                                    c.split,
                                    derive_seed(c.master_seed, "split", 0));
}

Runner::~Runner() = default;

const ExperimentConfig& Runner::config() const { return state_->cfg; }
const corpus::Vocabulary& Runner::vocabulary() const { return state_->vocab; }

void Runner::flush() {
  auto& s = *state_;
  if (s.cache && !s.cfg.out_dir.empty()) {
    s.cache->save(s.cfg.out_dir / "cache" / "embeddings.json");
  }
}

std::vector<ReportRow> Runner::run_in_distribution() {
  auto& s = *state_;
  const auto& c = s.cfg;
  struct Cell {
    std::string target;
    std::size_t h;
    std::size_t size;
  };
  std::vector<Cell> cells;
  std::vector<std::size_t> sizes = c.train_sizes;
  if (sizes.empty()) sizes.push_back(s.split[0].size());
  // Untrained baseline first.
  sizes.insert(sizes.begin(), 0);
  for (const auto& t : c.targets) {
    for (auto h : c.hidden_sizes) {
      for (auto n : sizes) cells.push_back({t.name, h, n});
    }
  }
  const auto eval = s.eval_sentences(c.train_corpus);
  const auto dataset = s.dataset_label(c.train_corpus);
  std::vector<EvalOutcome> outcomes(cells.size());
  parallel_for(s.jobs, cells.size(), [&](std::size_t i) {
    const auto& cell = cells[i];
    auto params = s.base_model(cell.target, cell.h, cell.size);
    outcomes[i] = s.evaluate(*params, eval, *s.targets.at(cell.target),
                             "eval:" + dataset);
  });
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    append_eval_rows(rows, "in_distribution", dataset, cells[i].target,
                     attack_label(cells[i].h),
                     "train_size=" + std::to_string(cells[i].size),
                     outcomes[i]);
  }
  mark_significance(rows);
  flush();
  return rows;
}

std::vector<ReportRow> Runner::run_ood() {
  auto& s = *state_;
  const auto& c = s.cfg;
  if (c.eval_corpora.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ood: no eval corpora");
  }
  const std::size_t size = s.largest_train_size();
  const auto& features = s.feature_set();
  std::vector<double> sims;
  for (const auto& name : c.eval_corpora) {
    sims.push_back(simdata::dataset_similarity(s.raw.at(c.train_corpus),
                                               s.raw.at(name), features));
  }
  struct Cell {
    std::string target;
    std::size_t h;
    std::size_t corpus;
  };
  std::vector<Cell> cells;
  for (const auto& t : c.targets) {
    for (auto h : c.hidden_sizes) {
      for (std::size_t e = 0; e < c.eval_corpora.size(); ++e) {
        cells.push_back({t.name, h, e});
      }
    }
  }
  std::vector<EvalOutcome> outcomes(cells.size());
  parallel_for(s.jobs, cells.size(), [&](std::size_t i) {
    const auto& cell = cells[i];
    const auto& name = c.eval_corpora[cell.corpus];
    auto params = s.base_model(cell.target, cell.h, size);
    auto eval = s.eval_sentences(name);
    outcomes[i] = s.evaluate(*params, eval, *s.targets.at(cell.target),
                             "eval:" + s.dataset_label(name));
  });
  std::vector<ReportRow> rows;
  const std::string factor = "train_size=" + std::to_string(size);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    const auto dataset = s.dataset_label(c.eval_corpora[cell.corpus]);
    append_eval_rows(rows, "ood", dataset, cell.target,
                     attack_label(cell.h), factor, outcomes[i]);
    rows.push_back(make_row("ood", dataset, cell.target, attack_label(cell.h),
                            factor, "similarity", {sims[cell.corpus]}));
  }
  mark_significance(rows);
  flush();
  return rows;
}

std::vector<ReportRow> Runner::run_few_shot() {
  auto& s = *state_;
  const auto& c = s.cfg;
  if (c.few_shot_corpus.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "few_shot: no corpus configured");
  }
  const auto& name = c.few_shot_corpus;
  if (name == c.train_corpus) {
    throw Error(ErrorCode::kInvalidArgument,
                "few_shot: the corpus must differ from the training corpus");
  }
  const std::size_t size = s.largest_train_size();
  // Held-out part matches the ood evaluation set; the rest can be disclosed.
  auto order = s.shuffled_order(name);
  const std::size_t held = std::min(c.eval_limit, order.size());
  std::span<const std::size_t> pool(order.data() + held, order.size() - held);
  auto eval = s.pick(name, std::span<const std::size_t>(order.data(), held),
                     held);
  std::vector<std::size_t> sizes = c.few_shot_sizes;
  if (sizes.empty()) sizes.push_back(0);
  for (auto n : sizes) {
    if (n > pool.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "few_shot: " + std::to_string(n) + " disclosed pairs " +
                      "requested but only " + std::to_string(pool.size()) +
                      " are available");
    }
  }
  struct Cell {
    std::string target;
    std::size_t h;
    std::size_t disclosed;
  };
  std::vector<Cell> cells;
  for (const auto& t : c.targets) {
    for (auto h : c.hidden_sizes) {
      for (auto n : sizes) cells.push_back({t.name, h, n});
    }
  }
  std::vector<EvalOutcome> outcomes(cells.size());
  parallel_for(s.jobs, cells.size(), [&](std::size_t i) {
    const auto& cell = cells[i];
    auto base = s.base_model(cell.target, cell.h, size);
    ParamsPtr params = base;
    if (cell.disclosed > 0) {
      const std::string key = cell.target + "|h" + std::to_string(cell.h) +
                              "|" + c.train_corpus + "|n" +
                              std::to_string(size) + "|few:" + name + "|n" +
                              std::to_string(cell.disclosed);
      params = s.get_model(key, [&, key] {
        const auto& target = *s.targets.at(cell.target);
        auto tc = c.train;
        tc.epochs = std::max<std::size_t>(1, tc.epochs / c.few_shot_epoch_divisor);
        tc.seed = derive_seed(c.master_seed, "train:" + key, 0);
        return s.checkpointed(
            key, s.echo(key, base->shape(), tc, cell.disclosed),
            target.fingerprint(), [&] {
              auto extra = s.pairs_for(s.pick(name, pool, cell.disclosed),
                                       target);
              return decoder::continue_training(*base, extra, tc).params;
            });
      });
    }
    outcomes[i] = s.evaluate(*params, eval, *s.targets.at(cell.target),
                             "eval:" + s.dataset_label(name));
  });
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    append_eval_rows(rows, "few_shot", s.dataset_label(name), cells[i].target,
                     attack_label(cells[i].h),
                     "disclosed=" + std::to_string(cells[i].disclosed),
                     outcomes[i]);
  }
  mark_significance(rows);
  flush();
  return rows;
}

std::vector<ReportRow> Runner::run_length_study() {
  auto& s = *state_;
  const auto& c = s.cfg;
  if (c.length_corpus.empty() || c.length_buckets.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "length: corpus and buckets are required");
  }
  const auto& name = c.length_corpus;
  const auto& all = s.encoded.at(name);
  auto order = s.shuffled_order(name);
  // A sentence joins every bucket it fits while that bucket has room, so
  // identical buckets get identical contents. Everything else may train.
  std::vector<std::vector<corpus::Sentence>> eval(c.length_buckets.size());
  std::vector<std::size_t> train_idx;
  for (auto i : order) {
    const std::size_t len = all[i].tokens.size();
    bool used = false;
    for (std::size_t b = 0; b < c.length_buckets.size(); ++b) {
      const auto [lo, hi] = c.length_buckets[b];
      if (len >= lo && len <= hi && eval[b].size() < c.length_eval_per_bucket) {
        eval[b].push_back(all[i]);
        used = true;
      }
    }
    if (!used) train_idx.push_back(i);
  }
  for (std::size_t b = 0; b < eval.size(); ++b) {
    if (eval[b].empty()) {
      throw Error(ErrorCode::kEmptyBucket,
                  "no sentence of " + name + " has " +
                      std::to_string(c.length_buckets[b].first) + "-" +
                      std::to_string(c.length_buckets[b].second) + " tokens");
    }
  }
  if (c.length_train_size > 0 && train_idx.size() > c.length_train_size) {
    train_idx.resize(c.length_train_size);
  }
  if (train_idx.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "length: no sentences left for training");
  }
  struct Cell {
    std::string target;
    std::size_t h;
  };
  std::vector<Cell> cells;
  for (const auto& t : c.targets) {
    for (auto h : c.hidden_sizes) cells.push_back({t.name, h});
  }
  const std::size_t n_buckets = c.length_buckets.size();
  std::vector<EvalOutcome> outcomes(cells.size() * n_buckets);
  auto bucket_label = [&](std::size_t b) {
    return std::to_string(c.length_buckets[b].first) + "-" +
           std::to_string(c.length_buckets[b].second);
  };
  parallel_for(s.jobs, cells.size(), [&](std::size_t i) {
    const auto& cell = cells[i];
    const std::string key = cell.target + "|h" + std::to_string(cell.h) +
                            "|length:" + name + "|n" +
                            std::to_string(train_idx.size());
    auto params = s.get_model(key, [&, key] {
      const auto& spec = s.target_spec(cell.target);
      const auto& target = *s.targets.at(cell.target);
      auto shape_ = s.shape(spec, cell.h);
      auto init = decoder::DecoderParams::random(
          shape_, derive_seed(c.master_seed, "init:" + key, 0));
      auto tc = c.train;
      tc.seed = derive_seed(c.master_seed, "train:" + key, 0);
      return s.checkpointed(
          key, s.echo(key, shape_, tc, train_idx.size()), target.fingerprint(),
          [&] {
            auto train_set = s.pairs_for(
                s.pick(name, train_idx, train_idx.size()), target);
            return decoder::train(init, train_set, tc).params;
          });
    });
    for (std::size_t b = 0; b < n_buckets; ++b) {
      outcomes[i * n_buckets + b] =
          s.evaluate(*params, eval[b], *s.targets.at(cell.target),
                     "eval:" + name + ":" + bucket_label(b));
    }
  });
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t b = 0; b < n_buckets; ++b) {
      append_eval_rows(rows, "length", name, cells[i].target,
                       attack_label(cells[i].h), "length=" + bucket_label(b),
                       outcomes[i * n_buckets + b]);
    }
  }
  mark_significance(rows);
  flush();
  return rows;
}

std::vector<ReportRow> Runner::run_attribute_eval(
    const Reconstructor* reconstructor, const std::string& reconstructor_label) {
  auto& s = *state_;
  const auto& c = s.cfg;
  if (c.attribute_tasks.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "attribute: no task files");
  }
  std::vector<attribute::AttributeTask> tasks;
  for (const auto& p : c.attribute_tasks) {
    tasks.push_back(attribute::AttributeTask::load(c.resolve(p)));
  }
  std::vector<std::string> target_names = c.attribute_targets;
  if (target_names.empty()) {
    for (const auto& t : c.targets) target_names.push_back(t.name);
  }
  const std::size_t size = s.largest_train_size();
  std::vector<std::size_t> sizes_h = c.hidden_sizes;
  if (reconstructor != nullptr) sizes_h = {0};

  struct Cell {
    std::size_t task;
    std::string target;
    std::size_t h;
  };
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    for (const auto& t : target_names) {
      for (auto h : sizes_h) cells.push_back({k, t, h});
    }
  }
  std::vector<std::vector<double>> accuracies(cells.size());
  std::vector<double> direct(tasks.size() * target_names.size());

  parallel_for(s.jobs, cells.size(), [&](std::size_t i) {
    const auto& cell = cells[i];
    const auto& task = tasks[cell.task];
    const auto& target = *s.targets.at(cell.target);
    const auto& proxy = *s.proxies.at(cell.target);
    auto index = attribute::CandidateIndex::build(task, proxy);
    std::vector<Tokens> originals;
    for (const auto& inst : task.instances) {
      originals.push_back(corpus::tokenize(inst.text));
    }
    auto embeddings = target.embed_batch(originals);
    ParamsPtr params;
    if (reconstructor == nullptr) params = s.base_model(cell.target, cell.h, size);
    const std::string seed_id = "attribute:" + task.attribute_name + ":" +
                                cell.target + ":" + attack_label(cell.h);
    auto gen = c.generation;
    for (std::size_t t = 0; t < c.n_trials; ++t) {
      const auto trial_seed = derive_seed(c.master_seed, seed_id, t);
      std::vector<attribute::AttributePrediction> preds;
      for (std::size_t k = 0; k < task.instances.size(); ++k) {
        attribute::AttributePrediction pred;
        // A refused query or an empty reconstruction cannot be right.
        pred.predicted = task.candidates.size();
        if (embeddings[k]) {
          const auto seed = hash_combine(trial_seed, k);
          Tokens rec;
          if (reconstructor != nullptr) {
            rec = (*reconstructor)(originals[k], *embeddings[k], seed);
          } else {
            generate::DecoderStepModel model(*params, *embeddings[k]);
            gen.seed = seed;
            rec = corpus::decode_ids(generate::sample_decode(model, gen).tokens,
                                     s.vocab);
          }
          if (!rec.empty()) pred = attribute::infer_attribute(rec, index, proxy);
        }
        preds.push_back(std::move(pred));
      }
      accuracies[i].push_back(attribute::task_accuracy(task, preds));
    }
  });

  // Direct mode: the unguarded target embeds the original text.
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    for (std::size_t t = 0; t < target_names.size(); ++t) {
      const auto& open = *s.unguarded.at(target_names[t]);
      auto index = attribute::CandidateIndex::build(tasks[k], open);
      std::vector<attribute::AttributePrediction> preds;
      for (const auto& inst : tasks[k].instances) {
        preds.push_back(attribute::infer_attribute_direct(
            corpus::tokenize(inst.text), index, open));
      }
      direct[k * target_names.size() + t] =
          attribute::task_accuracy(tasks[k], preds);
    }
  }

  std::vector<ReportRow> rows;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    for (std::size_t t = 0; t < target_names.size(); ++t) {
      const auto& name = target_names[t];
      const std::string dataset = tasks[k].attribute_name;
      const std::string factor =
          "proxy=" + s.target_spec(name).proxy_config().label();
      rows.push_back(make_row("attribute", dataset, name, "None", "direct",
                              "accuracy", {direct[k * target_names.size() + t]}));
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].task != k || cells[i].target != name) continue;
        const std::string attack = reconstructor != nullptr
                                       ? reconstructor_label
                                       : attack_label(cells[i].h);
        rows.push_back(make_row("attribute", dataset, name, attack, factor,
                                "accuracy", accuracies[i]));
      }
    }
  }
  mark_significance(rows);
  flush();
  return rows;
}

std::vector<ReportRow> Runner::run(std::string_view experiment) {
  if (experiment == "in_distribution") return run_in_distribution();
  if (experiment == "ood") return run_ood();
  if (experiment == "few_shot") return run_few_shot();
  if (experiment == "length") return run_length_study();
  if (experiment == "attribute") return run_attribute_eval();
  if (experiment == "all") {
    const auto& c = state_->cfg;
    std::vector<ReportRow> rows = run_in_distribution();
    auto add = [&](std::vector<ReportRow> more) {
      rows.insert(rows.end(), more.begin(), more.end());
    };
    if (!c.eval_corpora.empty()) add(run_ood());
    if (!c.few_shot_corpus.empty()) add(run_few_shot());
    if (!c.length_corpus.empty() && !c.length_buckets.empty()) {
      add(run_length_study());
    }
    if (!c.attribute_tasks.empty()) add(run_attribute_eval());
    return rows;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown experiment: " + std::string(experiment));
}

std::vector<ReportRow> run_in_distribution(const ExperimentConfig& cfg) {
  return Runner(cfg).run_in_distribution();
}
std::vector<ReportRow> run_ood(const ExperimentConfig& cfg) {
  return Runner(cfg).run_ood();
}
std::vector<ReportRow> run_few_shot(const ExperimentConfig& cfg) {
  return Runner(cfg).run_few_shot();
}
std::vector<ReportRow> run_length_study(const ExperimentConfig& cfg) {
  return Runner(cfg).run_length_study();
}
std::vector<ReportRow> run_attribute_eval(const ExperimentConfig& cfg) {
  return Runner(cfg).run_attribute_eval();
}

}  // namespace embinvert::pipeline

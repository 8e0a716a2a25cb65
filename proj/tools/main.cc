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

// Command line front end: corpus preparation, training, decoding, evaluation
// and whole experiments driven by a JSON config.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "embinvert/attribute.h"
#include "embinvert/binary_io.h"
#include "embinvert/corpus.h"
#include "embinvert/decoder.h"
#include "embinvert/embedder.h"
#include "embinvert/error.h"
#include "embinvert/generate.h"
#include "embinvert/hash.h"
#include "embinvert/metrics.h"
#include "embinvert/pipeline.h"
#include "embinvert/report.h"
#include "embinvert/simdata.h"
#include "embinvert/synth.h"
#include "embinvert/trainset.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace embinvert;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t jobs = 0;
};

// Inline JSON object or a path to one.
embed::EmbedderConfig parse_embedder(const std::string& spec) {
  if (spec.empty()) {
    embed::EmbedderConfig c;
    c.kind = embed::EmbedderKind::kPositionalMix;
    return c;
  }
  json j;
  try {
    j = json::parse(spec.front() == '{' ? spec : read_text_file(spec));
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("embedder spec: ") + ex.what());
  }
  return pipeline::embedder_config_from_json(j);
}

std::vector<std::string> read_inputs(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    auto lines = corpus::read_lines(p);
    out.insert(out.end(), lines.begin(), lines.end());
  }
  return out;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<Tokens> tokenize_all(const std::vector<std::string>& texts) {
  std::vector<Tokens> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(corpus::tokenize(t));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding inversion toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--jobs", g.jobs, "Worker threads (0: all cores)");

  // segment
  auto* seg = app.add_subcommand("segment", "Split a raw document into sentences");
  std::string seg_in, seg_out;
  seg->add_option("input", seg_in)->required();
  seg->add_option("-o,--output", seg_out);

  // build-vocab
  auto* bv = app.add_subcommand("build-vocab", "Build a vocabulary from corpora");
  std::vector<std::string> bv_in;
  std::string bv_out;
  std::size_t bv_max = 5000, bv_min = 1;
  bv->add_option("inputs", bv_in)->required();
  bv->add_option("-o,--output", bv_out)->required();
  bv->add_option("--max-size", bv_max);
  bv->add_option("--min-freq", bv_min);

  // stats
  auto* st = app.add_subcommand("stats", "Corpus statistics");
  std::string st_in, st_vocab;
  corpus::LengthWindow window;
  st->add_option("input", st_in)->required();
  st->add_option("--vocab", st_vocab)->required();
  st->add_option("--min-len", window.min_len);
  st->add_option("--max-len", window.max_len);

  // embed
  auto* em = app.add_subcommand("embed", "Query an embedder");
  std::string em_in, em_out, em_spec;
  em->add_option("input", em_in)->required();
  em->add_option("--embedder", em_spec, "JSON object or file");
  em->add_option("-o,--output", em_out);

  // make-trainset
  auto* mt = app.add_subcommand("make-trainset", "Embed a corpus into training pairs");
  std::string mt_in, mt_vocab, mt_spec, mt_out;
  std::vector<double> mt_split;
  mt->add_option("input", mt_in)->required();
  mt->add_option("--vocab", mt_vocab)->required();
  mt->add_option("--embedder", mt_spec);
  mt->add_option("-o,--output", mt_out)->required();
  mt->add_option("--split", mt_split, "train,validation,test fractions")
      ->delimiter(',')
      ->expected(3);
  mt->add_option("--min-len", window.min_len);
  mt->add_option("--max-len", window.max_len);

  // train
  auto* tr = app.add_subcommand("train", "Train an attack decoder");
  std::string tr_set, tr_val, tr_out, tr_init;
  decoder::DecoderShape shape;
  decoder::TrainConfig tcfg;
  tr->add_option("trainset", tr_set)->required();
  tr->add_option("--validation", tr_val);
  tr->add_option("--init", tr_init, "Continue from this checkpoint");
  tr->add_option("-o,--output", tr_out)->required();
  tr->add_option("--vocab-size", shape.vocab_size);
  tr->add_option("--hidden", shape.hidden);
  tr->add_option("--token-width", shape.token_width);
  tr->add_option("--context", shape.context);
  tr->add_option("--lr", tcfg.learning_rate);
  tr->add_option("--epochs", tcfg.epochs);
  tr->add_option("--batch-size", tcfg.batch_size);
  tr->add_option("--clip", tcfg.grad_clip_norm);
  std::string tr_vocab;
  tr->add_option("--vocab", tr_vocab, "Vocabulary file (sets --vocab-size)");

  // decode
  auto* de = app.add_subcommand("decode", "Reconstruct texts from their embeddings");
  std::string de_ckpt, de_vocab, de_in, de_spec, de_out, de_mode = "beam";
  generate::GenConfig gcfg;
  de->add_option("input", de_in, "Texts whose embeddings are inverted")->required();
  de->add_option("--checkpoint", de_ckpt)->required();
  de->add_option("--vocab", de_vocab)->required();
  de->add_option("--embedder", de_spec);
  de->add_option("--mode", de_mode)->check(CLI::IsMember({"greedy", "beam", "sample"}));
  de->add_option("--beam-width", gcfg.beam_width);
  de->add_option("--max-len", gcfg.max_len);
  de->add_option("--temperature", gcfg.temperature);
  de->add_option("-o,--output", de_out);

  // eval-reconstruction
  auto* er = app.add_subcommand("eval-reconstruction", "BLEU-1 / ROUGE-1 of reconstructions");
  std::string er_ckpt, er_vocab, er_in, er_spec, er_out, er_dataset = "eval";
  std::size_t er_trials = 10;
  er->add_option("input", er_in)->required();
  er->add_option("--checkpoint", er_ckpt)->required();
  er->add_option("--vocab", er_vocab)->required();
  er->add_option("--embedder", er_spec);
  er->add_option("--trials", er_trials);
  er->add_option("--dataset", er_dataset);
  er->add_option("--beam-width", gcfg.beam_width);
  er->add_option("--max-len", gcfg.max_len);
  er->add_option("--temperature", gcfg.temperature);
  er->add_option("-o,--output", er_out);

  // eval-attribute
  auto* ea = app.add_subcommand("eval-attribute", "Attribute inference accuracy");
  std::string ea_ckpt, ea_vocab, ea_task, ea_spec, ea_proxy, ea_out;
  std::size_t ea_trials = 10;
  ea->add_option("task", ea_task)->required();
  ea->add_option("--checkpoint", ea_ckpt)->required();
  ea->add_option("--vocab", ea_vocab)->required();
  ea->add_option("--embedder", ea_spec, "Target embedder");
  ea->add_option("--proxy", ea_proxy, "Proxy embedder (default: target, unguarded)");
  ea->add_option("--trials", ea_trials);
  ea->add_option("--max-len", gcfg.max_len);
  ea->add_option("--temperature", gcfg.temperature);
  ea->add_option("-o,--output", ea_out);

  // corpus-sim
  auto* cs = app.add_subcommand("corpus-sim", "Pairwise character 4-gram corpus similarity");
  std::string cs_ref, cs_features;
  std::vector<std::string> cs_in;
  std::size_t cs_k = simdata::kDefaultFeatureCount;
  cs->add_option("corpora", cs_in)->required();
  cs->add_option("--reference", cs_ref, "Feature reference corpus (default: first corpus)");
  cs->add_option("-k,--features", cs_k);
  cs->add_option("--feature-cache", cs_features);

  // run
  auto* ru = app.add_subcommand("run", "Run an experiment from --config");
  std::string ru_exp;
  ru->add_option("experiment", ru_exp)
      ->required()
      ->check(CLI::IsMember(pipeline::experiment_names()));

  // report
  auto* rp = app.add_subcommand("report", "Merge report CSVs");
  std::vector<std::string> rp_in;
  std::string rp_name = "summary";
  bool rp_table = false;
  rp->add_option("inputs", rp_in)->required();
  rp->add_option("--name", rp_name);
  rp->add_flag("--table", rp_table, "Print an aligned table instead of writing files");

  // synth
  auto* sy = app.add_subcommand("synth", "Generate synthetic fixtures");
  std::string sy_domain = "wiki", sy_out, sy_task;
  std::size_t sy_count = 1000, sy_min = 0, sy_max = 0, sy_task_n = 100;
  sy->add_option("--domain", sy_domain)->check(CLI::IsMember({"wiki", "news", "clinical"}));
  sy->add_option("--count", sy_count);
  sy->add_option("--min-tokens", sy_min);
  sy->add_option("--max-tokens", sy_max);
  sy->add_option("--occupation-task", sy_task, "Write an occupation task JSON here");
  sy->add_option("--instances", sy_task_n);
  std::vector<std::string> sy_windows;
  sy->add_option("--length-mix", sy_windows,
                 "min-max windows; --count sentences are drawn per window")
      ->delimiter(',');
  sy->add_option("-o,--output", sy_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::uint64_t seed = g.seed.value_or(0);
  try {
    if (*seg) {
      std::string out;
      for (const auto& s : corpus::read_document(seg_in)) out += s + '\n';
      write_or_print(seg_out, out);
    } else if (*bv) {
      auto vocab = corpus::build_vocab(tokenize_all(read_inputs(bv_in)), bv_max, bv_min);
      vocab.save(bv_out);
      std::cerr << "vocabulary: " << vocab.size() << " entries, hash "
                << hex(vocab.hash()) << "\n";
    } else if (*st) {
      auto vocab = corpus::Vocabulary::load(st_vocab);
      auto sents = corpus::filter_and_encode(corpus::read_lines(st_in), vocab, window);
      auto s = corpus::corpus_stats(sents);
      json j{{"n_sentences", s.n_sentences},
             {"avg_len", s.avg_len},
             {"vocab_coverage", s.vocab_coverage}};
      std::cout << j.dump(2) << "\n";
    } else if (*em) {
      auto embedder = embed::make_embedder(parse_embedder(em_spec));
      auto texts = corpus::read_lines(em_in);
      auto out = embedder->embed_batch(tokenize_all(texts));
      std::string body;
      for (std::size_t i = 0; i < texts.size(); ++i) {
        json j{{"text", texts[i]}};
        j["embedding"] = out[i] ? json(out[i]->values) : json();
        body += j.dump() + "\n";
      }
      write_or_print(em_out, body);
    } else if (*mt) {
      auto vocab = corpus::Vocabulary::load(mt_vocab);
      auto embedder = embed::make_embedder(parse_embedder(mt_spec));
      auto sents = corpus::filter_and_encode(corpus::read_lines(mt_in), vocab, window);
      auto built = trainset::build_training_set(sents, *embedder, vocab);
      std::cerr << built.set.size() << " pairs, " << built.refused << " refused\n";
      if (mt_split.empty()) {
        trainset::save_training_set(mt_out, built.set);
      } else {
        auto parts = trainset::split(built.set, {mt_split[0], mt_split[1], mt_split[2]}, seed);
        trainset::save_training_set(mt_out + ".train", parts.train);
        trainset::save_training_set(mt_out + ".validation", parts.validation);
        trainset::save_training_set(mt_out + ".test", parts.test);
      }
    } else if (*tr) {
      auto set = trainset::load_training_set(tr_set);
      trainset::TrainingSet val;
      if (!tr_val.empty()) val = trainset::load_training_set(tr_val);
      tcfg.seed = seed;
      std::uint64_t vocab_hash = set.vocab_hash;
      if (!tr_vocab.empty()) {
        auto vocab = corpus::Vocabulary::load(tr_vocab);
        if (vocab.hash() != set.vocab_hash) {
          throw Error(ErrorCode::kVocabMismatch, "training set was built with another vocabulary");
        }
        shape.vocab_size = vocab.size();
      }
      decoder::TrainResult result;
      if (!tr_init.empty()) {
        auto ck = decoder::load_checkpoint(tr_init, set.vocab_hash);
        result = decoder::continue_training(ck.params, set, tcfg, val);
      } else {
        if (shape.vocab_size == 0) {
          throw Error(ErrorCode::kInvalidArgument, "pass --vocab or --vocab-size");
        }
        shape.cond_dim = set.dim;
        result = decoder::train(decoder::DecoderParams::random(shape, seed), set, tcfg, val);
      }
      decoder::save_checkpoint(tr_out, {result.params, vocab_hash, set.embedder_fingerprint,
                                        tcfg.to_json()});
      json curve = json::array();
      for (const auto& e : result.curve) {
        curve.push_back({{"epoch", e.epoch},
                         {"train_loss", e.train_loss},
                         {"validation_loss", std::isnan(e.validation_loss)
                                                 ? json()
                                                 : json(e.validation_loss)}});
      }
      std::cout << json{{"initial_train_loss", result.initial_train_loss},
                        {"best_epoch", result.best_epoch},
                        {"curve", curve}}
                       .dump(2)
                << "\n";
    } else if (*de) {
      auto vocab = corpus::Vocabulary::load(de_vocab);
      auto ck = decoder::load_checkpoint(de_ckpt, vocab.hash());
      auto embedder = embed::make_embedder(parse_embedder(de_spec));
      auto texts = corpus::read_lines(de_in);
      auto embs = embedder->embed_batch(tokenize_all(texts));
      std::string body;
      for (std::size_t i = 0; i < texts.size(); ++i) {
        json j{{"mode", de_mode}};
        if (!embs[i]) {
          j["refused"] = true;
          body += j.dump() + "\n";
          continue;
        }
        generate::DecoderStepModel model(ck.params, *embs[i]);
        auto cfg = gcfg;
        cfg.seed = hash_combine(seed, i);
        generate::Hypothesis h;
        if (de_mode == "greedy") {
          h = generate::greedy_decode(model, cfg);
        } else if (de_mode == "beam") {
          h = generate::beam_decode(model, cfg);
        } else {
          h = generate::sample_decode(model, cfg);
        }
        auto words = corpus::decode_ids(h.tokens, vocab);
        std::string surface;
        for (const auto& w : words) surface += (surface.empty() ? "" : " ") + w;
        j["surface"] = surface;
        j["tokens"] = words;
        j["logprob"] = h.logprob;
        j["finished"] = h.finished;
        j["seed"] = cfg.seed;
        body += j.dump() + "\n";
      }
      write_or_print(de_out, body);
    } else if (*er) {
      auto vocab = corpus::Vocabulary::load(er_vocab);
      auto ck = decoder::load_checkpoint(er_ckpt, vocab.hash());
      auto ecfg = parse_embedder(er_spec);
      auto embedder = embed::make_embedder(ecfg);
      auto sents = corpus::filter_and_encode(corpus::read_lines(er_in), vocab, window);
      std::vector<Tokens> words;
      for (const auto& s : sents) words.push_back(s.words);
      auto embs = embedder->embed_batch(words);
      std::vector<std::size_t> kept;
      for (std::size_t i = 0; i < embs.size(); ++i) {
        if (embs[i]) kept.push_back(i);
      }
      if (kept.empty()) throw Error(ErrorCode::kAllRefused, "nothing to evaluate");
      std::vector<double> beam(2, 0.0);
      std::vector<double> bleu_t, rouge_t;
      for (auto i : kept) {
        generate::DecoderStepModel model(ck.params, *embs[i]);
        auto cand = corpus::decode_ids(generate::beam_decode(model, gcfg).tokens, vocab);
        beam[0] += metrics::bleu1(cand, sents[i].words);
        beam[1] += metrics::rouge1(cand, sents[i].words);
      }
      for (std::size_t t = 0; t < er_trials; ++t) {
        const auto trial_seed = pipeline::derive_seed(seed, "eval:" + er_dataset, t);
        double b = 0.0, r = 0.0;
        for (std::size_t k = 0; k < kept.size(); ++k) {
          generate::DecoderStepModel model(ck.params, *embs[kept[k]]);
          auto cfg = gcfg;
          cfg.seed = hash_combine(trial_seed, k);
          auto cand = corpus::decode_ids(generate::sample_decode(model, cfg).tokens, vocab);
          b += metrics::bleu1(cand, sents[kept[k]].words);
          r += metrics::rouge1(cand, sents[kept[k]].words);
        }
        bleu_t.push_back(b / kept.size());
        rouge_t.push_back(r / kept.size());
      }
      const double n = static_cast<double>(kept.size());
      const std::string attack = "h" + std::to_string(ck.params.shape().hidden);
      std::vector<report::ReportRow> rows;
      auto add = [&](const std::string& metric, std::vector<double> trials) {
        report::ReportRow r;
        r.experiment = "reconstruction";
        r.dataset = er_dataset;
        r.target_model = ecfg.label();
        r.attack_size = attack;
        r.factor = "-";
        r.metric = metric;
        r.n_trials = trials.size();
        if (trials.size() >= 2) {
          auto s = metrics::aggregate_trials(trials);
          r.mean = s.mean;
          r.std_error = s.std_error;
        } else if (!trials.empty()) {
          r.mean = trials[0];
        }
        rows.push_back(r);
      };
      add("bleu1_beam", {beam[0] / n});
      add("rouge1_beam", {beam[1] / n});
      add("bleu1_sampled", bleu_t);
      add("rouge1_sampled", rouge_t);
      write_or_print(er_out, report::to_reconstruction_csv(rows));
    } else if (*ea) {
      auto vocab = corpus::Vocabulary::load(ea_vocab);
      auto ck = decoder::load_checkpoint(ea_ckpt, vocab.hash());
      auto task = attribute::AttributeTask::load(ea_task);
      auto tcfg_e = parse_embedder(ea_spec);
      auto open_cfg = tcfg_e;
      open_cfg.min_query_tokens = 0;
      auto pcfg = ea_proxy.empty() ? open_cfg : parse_embedder(ea_proxy);
      auto target = embed::make_embedder(tcfg_e);
      auto open = embed::make_embedder(open_cfg);
      auto proxy = embed::make_embedder(pcfg);
      auto index = attribute::CandidateIndex::build(task, *proxy);
      auto direct_index = attribute::CandidateIndex::build(task, *open);
      std::vector<Tokens> originals;
      for (const auto& inst : task.instances) originals.push_back(corpus::tokenize(inst.text));
      auto embs = target->embed_batch(originals);
      std::vector<attribute::AttributePrediction> direct;
      for (const auto& o : originals) {
        direct.push_back(attribute::infer_attribute_direct(o, direct_index, *open));
      }
      std::vector<double> acc;
      for (std::size_t t = 0; t < ea_trials; ++t) {
        const auto trial_seed =
            pipeline::derive_seed(seed, "attribute:" + task.attribute_name, t);
        std::vector<attribute::AttributePrediction> preds;
        for (std::size_t k = 0; k < originals.size(); ++k) {
          attribute::AttributePrediction p;
          p.predicted = task.candidates.size();
          if (embs[k]) {
            generate::DecoderStepModel model(ck.params, *embs[k]);
            auto cfg = gcfg;
            cfg.seed = hash_combine(trial_seed, k);
            auto rec = corpus::decode_ids(generate::sample_decode(model, cfg).tokens, vocab);
            if (!rec.empty()) p = attribute::infer_attribute(rec, index, *proxy);
          }
          preds.push_back(p);
        }
        acc.push_back(attribute::task_accuracy(task, preds));
      }
      std::vector<report::ReportRow> rows;
      report::ReportRow d;
      d.experiment = "attribute";
      d.dataset = task.attribute_name;
      d.target_model = tcfg_e.label();
      d.attack_size = "None";
      d.factor = "direct";
      d.metric = "accuracy";
      d.mean = attribute::task_accuracy(task, direct);
      d.n_trials = 1;
      rows.push_back(d);
      report::ReportRow r = d;
      r.attack_size = "h" + std::to_string(ck.params.shape().hidden);
      r.factor = "proxy=" + pcfg.label();
      r.n_trials = acc.size();
      if (acc.size() >= 2) {
        auto s = metrics::aggregate_trials(acc);
        r.mean = s.mean;
        r.std_error = s.std_error;
      } else {
        r.mean = acc.empty() ? 0.0 : acc[0];
      }
      rows.push_back(r);
      write_or_print(ea_out, report::to_attribute_csv(rows));
    } else if (*cs) {
      std::vector<std::vector<std::string>> corpora;
      for (const auto& p : cs_in) corpora.push_back(corpus::read_lines(p));
      const std::string ref_path = cs_ref.empty() ? cs_in.front() : cs_ref;
      const std::string provenance = "reference=" + ref_path + " k=" + std::to_string(cs_k);
      std::optional<simdata::FeatureSet> features;
      if (!cs_features.empty() && fs::exists(cs_features)) {
        features = simdata::FeatureSet::load(cs_features);
        if (features->provenance != provenance) features.reset();
      }
      if (!features) {
        auto ref = cs_ref.empty() ? corpora.front() : corpus::read_lines(cs_ref);
        features = simdata::build_feature_set(ref, cs_k, provenance);
        if (!cs_features.empty()) features->save(cs_features);
      }
      auto m = simdata::similarity_matrix(corpora, *features);
      std::string out = "corpus";
      for (const auto& p : cs_in) out += ',' + p;
      out += '\n';
      for (std::size_t i = 0; i < m.size(); ++i) {
        out += cs_in[i];
        for (double v : m[i]) out += ',' + report::format_value(v);
        out += '\n';
      }
      std::cout << out;
    } else if (*ru) {
      if (g.config.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "run needs --config");
      }
      auto cfg = pipeline::ExperimentConfig::load(g.config);
      if (g.seed) cfg.master_seed = *g.seed;
      if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
      if (g.jobs > 0) cfg.jobs = g.jobs;
      if (cfg.out_dir.empty()) cfg.out_dir = "out";
      pipeline::Runner runner(cfg);
      auto rows = runner.run(ru_exp);
      auto files = report::emit_report(rows, cfg.out_dir, cfg.name + "_" + ru_exp);
      std::cout << report::to_table(rows);
      for (const auto& f : files.paths) std::cerr << "wrote " << f.string() << "\n";
    } else if (*rp) {
      std::vector<report::ReportRow> rows;
      for (const auto& p : rp_in) {
        auto part = report::parse_csv(read_text_file(p));
        rows.insert(rows.end(), part.begin(), part.end());
      }
      if (rp_table || g.out_dir.empty()) {
        std::cout << report::to_table(rows);
      } else {
        for (const auto& f : report::emit_report(rows, g.out_dir, rp_name).paths) {
          std::cerr << "wrote " << f.string() << "\n";
        }
      }
    } else if (*sy) {
      if (!sy_task.empty()) {
        synth::occupation_task(sy_task_n, seed).save(sy_task);
      }
      if (!sy_out.empty() || sy_task.empty()) {
        auto domain = synth::parse_domain(sy_domain);
        std::vector<std::pair<std::size_t, std::size_t>> windows;
        for (const auto& w : sy_windows) {
          auto dash = w.find('-');
          if (dash == std::string::npos) {
            throw Error(ErrorCode::kInvalidArgument, "window must be min-max: " + w);
          }
          windows.emplace_back(std::stoul(w.substr(0, dash)), std::stoul(w.substr(dash + 1)));
        }
        auto lines = !windows.empty() ? synth::generate_length_mix(sy_count, seed, windows)
                     : sy_max > 0
                         ? synth::generate_with_length(domain, sy_count, seed, sy_min, sy_max)
                         : synth::generate(domain, sy_count, seed);
        std::string body;
        for (const auto& l : lines) body += l + '\n';
        write_or_print(sy_out, body);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

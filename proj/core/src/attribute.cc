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

#include "embinvert/attribute.h"

#include <set>

#include <nlohmann/json.hpp>

#include "embinvert/binary_io.h"
#include "embinvert/error.h"

namespace embinvert::attribute {

void AttributeTask::validate() const {
  if (candidates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "task has no candidates");
  }
  std::set<std::string> seen;
  for (const auto& c : candidates) {
    if (corpus::tokenize(c).empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty candidate");
    }
    if (!seen.insert(c).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate candidate '" + c + "'");
    }
  }
  for (const auto& inst : instances) {
    if (inst.gold >= candidates.size()) {
      throw Error(ErrorCode::kInvalidArgument, "gold index out of range");
    }
  }
}

AttributeTask AttributeTask::load(const std::filesystem::path& path) {
  AttributeTask task;
  try {
    const auto j = nlohmann::json::parse(read_text_file(path));
    task.attribute_name = j.at("attribute_name").get<std::string>();
    task.candidates = j.at("candidates").get<std::vector<std::string>>();
    for (const auto& inst : j.at("instances")) {
      task.instances.push_back(
          {inst.at("text").get<std::string>(), inst.at("gold").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kCorruptFile,
                "task file " + path.string() + ": " + ex.what());
  }
  task.validate();
  return task;
}

void AttributeTask::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["attribute_name"] = attribute_name;
  j["candidates"] = candidates;
  j["instances"] = nlohmann::json::array();
  for (const auto& inst : instances) {
    j["instances"].push_back({{"text", inst.text}, {"gold", inst.gold}});
  }
  write_text_file(path, j.dump(1) + "\n");
}

CandidateIndex CandidateIndex::build(const AttributeTask& task,
                                     const embed::Embedder& embedder) {
  CandidateIndex idx;
  idx.embeddings.reserve(task.candidates.size());
  for (const auto& c : task.candidates) {
    idx.embeddings.push_back(embedder.embed(corpus::tokenize(c)));
  }
  return idx;
}

AttributePrediction select_candidate(const EmbeddingVector& text_embedding,
                                     const CandidateIndex& candidates,
                                     Mode mode) {
  AttributePrediction p;
  p.mode = mode;
  p.scores.reserve(candidates.embeddings.size());
  for (std::size_t i = 0; i < candidates.embeddings.size(); ++i) {
    const double s = cosine(text_embedding, candidates.embeddings[i]);
    p.scores.push_back(s);
    if (s > p.scores[p.predicted]) p.predicted = i;
  }
  return p;
}

AttributePrediction infer_attribute(const Tokens& reconstructed,
                                    const CandidateIndex& candidates,
                                    const embed::Embedder& proxy) {
  if (reconstructed.empty()) {
    throw Error(ErrorCode::kEmptyReconstruction, "nothing was reconstructed");
  }
  return select_candidate(proxy.embed(reconstructed), candidates,
                          Mode::kReconstructed);
}

AttributePrediction infer_attribute(const Tokens& reconstructed,
                                    const AttributeTask& task,
                                    const embed::Embedder& proxy) {
  return infer_attribute(reconstructed, CandidateIndex::build(task, proxy),
                         proxy);
}

AttributePrediction infer_attribute_direct(const Tokens& original,
                                           const CandidateIndex& candidates,
                                           const embed::Embedder& target) {
  return select_candidate(target.embed(original), candidates, Mode::kDirect);
}

AttributePrediction infer_attribute_direct(const Tokens& original,
                                           const AttributeTask& task,
                                           const embed::Embedder& target) {
  return infer_attribute_direct(original, CandidateIndex::build(task, target),
                                target);
}

double task_accuracy(const AttributeTask& task,
                     std::span<const AttributePrediction> predictions) {
  if (predictions.size() != task.instances.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "need exactly one prediction per instance");
  }
  if (predictions.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].predicted == task.instances[i].gold) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace embinvert::attribute

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

#ifndef EMBINVERT_ATTRIBUTE_H_
#define EMBINVERT_ATTRIBUTE_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "embinvert/corpus.h"
#include "embinvert/embedder.h"

namespace embinvert::attribute {

struct AttributeInstance {
  std::string text;
  std::size_t gold = 0;
};

struct AttributeTask {
  std::string attribute_name;
  std::vector<std::string> candidates;
  std::vector<AttributeInstance> instances;

  // Candidates unique and non-empty, gold indices in range.
  void validate() const;

  // {attribute_name, candidates: [...], instances: [{text, gold}]}
  static AttributeTask load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

enum class Mode { kReconstructed, kDirect };

struct AttributePrediction {
  std::size_t predicted = 0;
  std::vector<double> scores;
  Mode mode = Mode::kReconstructed;
};

// Candidate embeddings computed once per (task, embedder).
struct CandidateIndex {
  std::vector<EmbeddingVector> embeddings;

  // Candidates are tokenized like corpus text and embedded verbatim.
  // Propagates kRefusedShortText from a guarded embedder.
  static CandidateIndex build(const AttributeTask& task,
                              const embed::Embedder& embedder);
};

// Cosine-nearest candidate; ties go to the smallest index.
AttributePrediction select_candidate(const EmbeddingVector& text_embedding,
                                     const CandidateIndex& candidates,
                                     Mode mode);

// Embeds the reconstruction with the proxy model and picks the nearest
// candidate. Throws kEmptyReconstruction for an empty reconstruction.
AttributePrediction infer_attribute(const Tokens& reconstructed,
                                    const CandidateIndex& candidates,
                                    const embed::Embedder& proxy);
AttributePrediction infer_attribute(const Tokens& reconstructed,
                                    const AttributeTask& task,
                                    const embed::Embedder& proxy);

// Embeds the original text with the target model itself. A guarded target
// refusing the short candidates raises kRefusedShortText.
AttributePrediction infer_attribute_direct(const Tokens& original,
                                           const AttributeTask& task,
                                           const embed::Embedder& target);
AttributePrediction infer_attribute_direct(const Tokens& original,
                                           const CandidateIndex& candidates,
                                           const embed::Embedder& target);

// Fraction of instances whose prediction equals the gold index.
double task_accuracy(const AttributeTask& task,
                     std::span<const AttributePrediction> predictions);

}  // namespace embinvert::attribute

#endif  // EMBINVERT_ATTRIBUTE_H_

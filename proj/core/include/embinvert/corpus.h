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

#ifndef EMBINVERT_CORPUS_H_
#define EMBINVERT_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace embinvert {

using TokenId = std::uint32_t;
using Tokens = std::vector<std::string>;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kNumSpecials = 4;

inline bool is_special(TokenId id) { return id < kNumSpecials; }

namespace corpus {

// Rule-based sentence splitting: a sentence ends at '.', '!' or '?' (plus any
// trailing closing quotes/brackets) followed by whitespace or end of input,
// unless the word before a '.' is a known abbreviation or a single-letter
// initial.
struct SegmentConfig {
  std::unordered_set<std::string> abbreviations = default_abbreviations();
  bool split_initials = false;

  static std::unordered_set<std::string> default_abbreviations();
};

std::vector<std::string> segment(std::string_view raw_text,
                                 const SegmentConfig& config = {});

// Lowercases (optionally), splits on whitespace and breaks every ASCII
// punctuation character into its own token.
Tokens tokenize(std::string_view sentence, bool lowercase = true);

class Vocabulary {
 public:
  // Only specials.
  Vocabulary();
  // `tokens` are the corpus tokens in id order, starting at id 4.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return id_to_token_.size(); }
  TokenId id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // Stable hash over the ordered token list.
  std::uint64_t hash() const { return hash_; }

  // One token per line; line i holds id i + 4. Specials are implicit.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::uint64_t hash_ = 0;
};

// Keeps the most frequent tokens (ties broken lexicographically) with
// frequency >= min_freq, up to max_size entries including the 4 specials.
Vocabulary build_vocab(std::span<const Tokens> sentences, std::size_t max_size,
                       std::size_t min_freq = 1);

struct Sentence {
  std::string surface;
  // Normalized token strings before UNK substitution. These are what a
  // target embedder sees and what reconstructions are scored against.
  Tokens words;
  // Vocabulary ids, UNK substituted, no BOS/EOS.
  std::vector<TokenId> tokens;
  std::string source_tag;
};

struct LengthWindow {
  std::size_t min_len = 4;
  std::size_t max_len = 64;
};

std::vector<Sentence> filter_and_encode(std::span<const std::string> sentences,
                                        const Vocabulary& vocab,
                                        LengthWindow window = {},
                                        std::string_view source_tag = {},
                                        bool lowercase = true);

// ids -> token strings ("<unk>" for UNK).
Tokens decode_ids(std::span<const TokenId> ids, const Vocabulary& vocab);

struct CorpusStats {
  std::size_t n_sentences = 0;
  double avg_len = 0.0;
  double vocab_coverage = 0.0;
};

CorpusStats corpus_stats(std::span<const Sentence> sentences);

// Encoded corpus container: "EMBC", version, vocab hash, count, then per
// sentence its source tag and token ids.
void save_encoded_corpus(const std::filesystem::path& path,
                         std::span<const Sentence> sentences,
                         const Vocabulary& vocab);
// Words are rebuilt from the vocabulary, so OOV tokens come back as "<unk>".
std::vector<Sentence> load_encoded_corpus(const std::filesystem::path& path,
                                          const Vocabulary& vocab);

// One sentence per line, blank lines skipped.
std::vector<std::string> read_lines(const std::filesystem::path& path);
// Whole file treated as one document and segmented.
std::vector<std::string> read_document(const std::filesystem::path& path,
                                       const SegmentConfig& config = {});

}  // namespace corpus
}  // namespace embinvert

#endif  // EMBINVERT_CORPUS_H_

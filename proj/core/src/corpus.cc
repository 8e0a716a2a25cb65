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

#include "embinvert/corpus.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "embinvert/binary_io.h"
#include "embinvert/error.h"
#include "embinvert/hash.h"

namespace embinvert::corpus {
namespace {

constexpr std::string_view kSpecialNames[kNumSpecials] = {"<pad>", "<bos>",
                                                          "<eos>", "<unk>"};

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_ascii_punct(unsigned char c) {
  return c < 0x80 && ((c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
                      (c >= '[' && c <= '`') || (c >= '{' && c <= '~'));
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// The word immediately preceding position `dot`, lowercased, with leading
// opening punctuation stripped.
std::string word_before(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !is_space(static_cast<unsigned char>(text[begin - 1]))) {
    --begin;
  }
  std::string word;
  for (std::size_t i = begin; i < dot; ++i) word.push_back(ascii_lower(text[i]));
  const auto first = word.find_first_not_of("\"'([{");
  return first == std::string::npos ? std::string() : word.substr(first);
}

}  // namespace

std::unordered_set<std::string> SegmentConfig::default_abbreviations() {
  return {"mr",  "mrs", "ms",  "dr",   "prof", "sr",  "jr",  "st",
          "vs",  "etc", "e.g", "i.e",  "inc",  "ltd", "co",  "corp",
          "no",  "fig", "gen", "col",  "lt",   "sgt", "rev", "hon",
          "jan", "feb", "mar", "apr",  "aug",  "sep", "sept", "oct",
          "nov", "dec", "u.s", "approx", "dept", "est", "mt", "ave"};
}

std::vector<std::string> segment(std::string_view raw_text,
                                 const SegmentConfig& config) {
  std::vector<std::string> out;
  std::size_t start = 0;
  const std::size_t n = raw_text.size();
  auto emit = [&](std::size_t end) {
    const auto piece = trim(raw_text.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminal(raw_text[i])) continue;
    std::size_t j = i + 1;
    while (j < n && is_terminal(raw_text[j])) ++j;
    while (j < n && is_closer(raw_text[j])) ++j;
    if (j < n && !is_space(static_cast<unsigned char>(raw_text[j]))) {
      i = j - 1;
      continue;
    }
    // A lone '.' may belong to an abbreviation or an uppercase initial.
    if (raw_text[i] == '.' && (i + 1 == n || !is_terminal(raw_text[i + 1]))) {
      const std::string word = word_before(raw_text, i);
      if (config.abbreviations.contains(word)) {
        i = j - 1;
        continue;
      }
      if (!config.split_initials && word.size() == 1 &&
          std::isupper(static_cast<unsigned char>(word[0]))) {
        i = j - 1;
        continue;
      }
    }
    emit(j);
    i = j - 1;
  }
  emit(n);
  return out;
}

Tokens tokenize(std::string_view sentence, bool lowercase) {
  Tokens out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_ascii_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      current.push_back(lowercase ? ascii_lower(ch) : ch);
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  id_to_token_.reserve(tokens.size() + kNumSpecials);
  for (auto name : kSpecialNames) id_to_token_.emplace_back(name);
  std::uint64_t h = fnv1a("embinvert-vocab-v1");
  for (auto& t : tokens) {
    if (t.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty vocabulary token");
    }
    const auto id = static_cast<TokenId>(id_to_token_.size());
    if (!token_to_id_.emplace(t, id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate vocabulary token '" +
                                                   t + "'");
    }
    h = fnv1a(t, h);
    h = fnv1a("\n", h);
    id_to_token_.push_back(std::move(t));
  }
  hash_ = mix64(h);
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= id_to_token_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[id];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string text;
  for (std::size_t i = kNumSpecials; i < id_to_token_.size(); ++i) {
    text += id_to_token_[i];
    text += '\n';
  }
  write_text_file(path, text);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      throw Error(ErrorCode::kCorruptFile,
                  "empty line in vocabulary file " + path.string());
    }
    tokens.push_back(std::move(line));
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const Tokens> sentences, std::size_t max_size,
                       std::size_t min_freq) {
  if (max_size < kNumSpecials) {
    throw Error(ErrorCode::kInvalidArgument, "max_size must be >= 4");
  }
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(counts.size());
  for (auto& [token, count] : counts) {
    if (count >= min_freq && count > 0) ranked.emplace_back(token, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t keep = std::min(ranked.size(), max_size - kNumSpecials);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocabulary(std::move(tokens));
}

std::vector<Sentence> filter_and_encode(std::span<const std::string> sentences,
                                        const Vocabulary& vocab,
                                        LengthWindow window,
                                        std::string_view source_tag,
                                        bool lowercase) {
  std::vector<Sentence> out;
  for (const auto& surface : sentences) {
    Tokens words = tokenize(surface, lowercase);
    if (words.size() < window.min_len || words.size() > window.max_len) {
      continue;
    }
    Sentence s;
    s.surface = surface;
    s.tokens.reserve(words.size());
    for (const auto& w : words) s.tokens.push_back(vocab.id(w));
    s.words = std::move(words);
    s.source_tag = std::string(source_tag);
    out.push_back(std::move(s));
  }
  return out;
}

Tokens decode_ids(std::span<const TokenId> ids, const Vocabulary& vocab) {
  Tokens out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(vocab.token(id));
  return out;
}

CorpusStats corpus_stats(std::span<const Sentence> sentences) {
  CorpusStats stats;
  stats.n_sentences = sentences.size();
  std::size_t total = 0;
  std::size_t known = 0;
  for (const auto& s : sentences) {
    total += s.tokens.size();
    known += static_cast<std::size_t>(
        std::count_if(s.tokens.begin(), s.tokens.end(),
                      [](TokenId id) { return id != kUnkId; }));
  }
  if (stats.n_sentences > 0) {
    stats.avg_len =
        static_cast<double>(total) / static_cast<double>(stats.n_sentences);
  }
  if (total > 0) {
    stats.vocab_coverage =
        static_cast<double>(known) / static_cast<double>(total);
  }
  return stats;
}

namespace {
constexpr std::string_view kCorpusMagic = "EMBC";
constexpr std::uint32_t kCorpusVersion = 1;
}  // namespace

void save_encoded_corpus(const std::filesystem::path& path,
                         std::span<const Sentence> sentences,
                         const Vocabulary& vocab) {
  BinaryWriter w;
  w.bytes(kCorpusMagic);
  w.u32(kCorpusVersion);
  w.u64(vocab.hash());
  w.u64(sentences.size());
  for (const auto& s : sentences) {
    w.str(s.source_tag);
    w.u32(static_cast<std::uint32_t>(s.tokens.size()));
    for (auto id : s.tokens) w.u32(id);
  }
  w.write_file(path);
}

std::vector<Sentence> load_encoded_corpus(const std::filesystem::path& path,
                                          const Vocabulary& vocab) {
  auto r = BinaryReader::from_file(path);
  r.expect_header(kCorpusMagic, kCorpusVersion);
  if (r.u64() != vocab.hash()) {
    throw Error(ErrorCode::kVocabMismatch,
                "encoded corpus was built with a different vocabulary");
  }
  const std::uint64_t count = r.u64();
  std::vector<Sentence> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    Sentence s;
    s.source_tag = r.str();
    const std::uint32_t n = r.u32();
    if (n > r.remaining() / 4) {
      throw Error(ErrorCode::kCorruptFile, "token count exceeds file size");
    }
    s.tokens.resize(n);
    for (auto& id : s.tokens) {
      id = r.u32();
      if (id >= vocab.size() || (is_special(id) && id != kUnkId)) {
        throw Error(ErrorCode::kCorruptFile, "invalid token id in corpus");
      }
    }
    s.words = decode_ids(s.tokens, vocab);
    for (std::size_t k = 0; k < s.words.size(); ++k) {
      if (k) s.surface += ' ';
      s.surface += s.words[k];
    }
    out.push_back(std::move(s));
  }
  if (!r.at_end()) throw Error(ErrorCode::kCorruptFile, "trailing bytes");
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<std::string> read_document(const std::filesystem::path& path,
                                       const SegmentConfig& config) {
  return segment(read_text_file(path), config);
}

}  // namespace embinvert::corpus

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

#include "embinvert/synth.h"

#include <algorithm>
#include <cctype>
#include <random>
#include <string>
#include <utility>

#include "embinvert/error.h"

namespace embinvert::synth {
namespace {

using Pool = std::vector<std::string>;

const Pool kFirst = {"anna",  "david", "maria", "james", "sofia",  "peter",
                     "laura", "omar",  "elena", "lucas", "nina",   "victor",
                     "clara", "hugo",  "irene", "felix", "rosa",   "martin",
                     "alice", "pablo", "greta", "samuel", "julia", "tomas"};
const Pool kLast = {"smith", "garcia", "novak", "rossi",  "muller", "silva",
                    "kowalski", "dubois", "jensen", "moreau", "costa",
                    "larsen", "weber", "ferrari", "nilsson", "horvat"};
const Pool kOccupation = {"doctor", "lawyer", "teacher", "engineer",
                          "painter", "farmer", "pilot",   "chef",
                          "nurse",  "architect"};
const Pool kCountry = {"france", "spain",   "italy",  "germany",
                       "poland", "norway",  "brazil", "canada",
                       "japan",  "egypt",   "kenya",  "chile"};
const Pool kCity = {"paris", "madrid", "rome",   "berlin", "warsaw",
                    "oslo",  "lisbon", "vienna", "prague", "toronto",
                    "tokyo", "cairo",  "nairobi", "santiago"};
const Pool kYear = {"1921", "1925", "1932", "1938", "1944", "1949",
                    "1953", "1957", "1961", "1966", "1970", "1974",
                    "1979", "1983", "1986", "1990"};
const Pool kSubject = {"physics", "history", "music",   "medicine", "law",
                       "botany",  "poetry",  "geology", "economics", "sculpture"};
const Pool kPolicy = {"housing", "tax",     "energy", "transport", "water",
                      "pension", "trade",   "health", "budget",    "climate"};
const Pool kDay = {"monday", "tuesday", "wednesday", "thursday",
                   "friday", "saturday", "sunday"};
const Pool kSymptom = {"fever",    "cough",     "nausea",   "headache",
                       "dizziness", "fatigue",  "rash",     "chest pain",
                       "vomiting", "back pain", "shortness of breath",
                       "chills",   "palpitations", "swelling"};
const Pool kCount = {"two", "three", "four", "five",
                     "six", "seven", "eight", "nine"};
const Pool kAge = {"25", "30", "35", "40", "45", "50", "55",
                   "60", "65", "70", "75", "80", "85"};
const Pool kSex = {"male", "female"};
const Pool kSystolic = {"100", "110", "120", "130", "140", "150", "160"};
const Pool kDiastolic = {"60", "70", "80", "90", "100"};
const Pool kRate = {"58", "62", "68", "72", "76", "84", "88", "96", "104", "112"};
const Pool kCondition = {"asthma",   "diabetes", "hypertension", "migraine",
                         "anemia",   "arthritis", "epilepsy",    "bronchitis",
                         "gastritis", "insomnia"};
const Pool kDrug = {"ibuprofen", "amoxicillin", "insulin",   "metformin",
                    "aspirin",   "prednisone",  "salbutamol", "omeprazole"};

bool is_proper(const std::string& w) {
  auto in = [&](const Pool& p) {
    for (const auto& x : p) {
      if (x == w) return true;
    }
    return false;
  };
  return in(kFirst) || in(kLast) || in(kCountry) || in(kCity) || in(kDay);
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  const std::string& pick(const Pool& pool) {
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    return pool[d(rng_)];
  }
  std::size_t below(std::size_t n) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(rng_);
  }

  // Words of one clause, no final punctuation. `occupation` forces the
  // occupation slot in occupation-bearing wiki templates.
  std::vector<std::string> clause(Domain domain) {
    switch (domain) {
      case Domain::kWiki:
        return wiki(below(10), nullptr);
      case Domain::kNews:
        return news(below(7));
      case Domain::kClinical:
        return clinical(below(6));
    }
    return {};
  }

  std::vector<std::string> wiki(std::size_t t, const std::string* occ) {
    const std::string& o = occ != nullptr ? *occ : pick(kOccupation);
    std::string f = pick(kFirst);
    std::string l = pick(kLast);
    switch (t) {
      case 0:
        return {f, l, "is", "a", o, "from", pick(kCountry)};
      case 1:
        return {f, l, "was", "born", "in", pick(kCity), "in", pick(kYear)};
      case 2:
        return {f, l, "worked", "as", "a", o, "in", pick(kCity),
                "for", "many", "years"};
      case 3:
        return {f, l, "studied", pick(kSubject), "at", "the", "university",
                "of", pick(kCity)};
      case 4:
        return {"in", pick(kYear), ",", f, l, "moved", "to", pick(kCity),
                "and", "became", "a", o};
      case 5:
        return {"the", o, f, l, "was", "well", "known", "in", pick(kCountry)};
      case 6:
        return {pick(kCity), "is", "the", "largest", "city", "in",
                pick(kCountry)};
      case 7:
        return {f, l, "won", "a", "national", "award", "for", pick(kSubject),
                "in", pick(kYear)};
      case 8:
        return {f, l, "married", "a", o, "from", pick(kCity), "in",
                pick(kYear)};
      default:
        return {"the", "museum", "of", pick(kSubject), "in", pick(kCity),
                "opened", "in", pick(kYear)};
    }
  }

  std::vector<std::string> news(std::size_t t) {
    switch (t) {
      case 0:
        return {"the", "mayor", "of", pick(kCity), "announced", "a", "new",
                pick(kPolicy), "plan", "on", pick(kDay)};
      case 1:
        return {"officials", "in", pick(kCountry), "said", "that",
                pick(kFirst), pick(kLast), "resigned", "on", pick(kDay)};
      case 2:
        return {pick(kFirst), pick(kLast), "told", "reporters", "in",
                pick(kCity), "that", pick(kPolicy), "costs", "will", "rise"};
      case 3:
        return {"markets", "in", pick(kCity), "fell", "sharply", "after",
                "the", pick(kPolicy), "report", "on", pick(kDay)};
      case 4:
        return {"the", "government", "of", pick(kCountry), "will", "debate",
                "the", pick(kPolicy), "bill", "next", "week"};
      case 5:
        return {"protesters", "gathered", "in", pick(kCity), "on",
                pick(kDay), "to", "oppose", "the", pick(kPolicy), "reform"};
      default:
        return {pick(kFirst), pick(kLast), ",", "a", "spokesperson", "for",
                "the", pick(kPolicy), "ministry", ",", "declined", "to",
                "comment"};
    }
  }

  std::vector<std::string> clinical(std::size_t t) {
    switch (t) {
      case 0:
        return {"patient", "presented", "with", pick(kSymptom), "and",
                pick(kSymptom), "after", pick(kCount), "days"};
      case 1:
        return {pick(kAge), "year", "old", pick(kSex), "admitted", "with",
                pick(kSymptom), "and", pick(kSymptom)};
      case 2:
        return {"triage", "note", ":", pick(kSymptom), "for", pick(kCount),
                "days", ",", "denies", pick(kSymptom)};
      case 3:
        return {"blood", "pressure", pick(kSystolic), "/", pick(kDiastolic),
                ",", "heart", "rate", pick(kRate), ",", "reports",
                pick(kSymptom)};
      case 4:
        return {pick(kSex), "patient", "with", "history", "of",
                pick(kCondition), "complains", "of", pick(kSymptom)};
      default:
        return {"discharged", "home", "with", pick(kDrug), "for",
                pick(kCondition), ",", "follow", "up", "in", pick(kCount),
                "weeks"};
    }
  }

 private:
  std::mt19937_64 rng_;
};

// Multi-word pool entries count as several tokens.
std::size_t token_count(const std::vector<std::string>& words) {
  std::size_t n = 0;
  for (const auto& w : words) {
    n += 1;
    for (char c : w) n += c == ' ' ? 1 : 0;
  }
  return n;
}

// Surface form: sentence-initial and proper nouns capitalized, punctuation
// attached to the previous word except for the ratio slash.
std::string render(const std::vector<std::string>& words) {
  std::string out;
  bool first = true;
  bool glue_next = false;
  for (const auto& w : words) {
    bool punct = w == "," || w == "." || w == ":";
    bool slash = w == "/";
    if (!out.empty() && !punct && !slash && !glue_next) out += ' ';
    glue_next = slash;
    std::string word = w;
    if (first || is_proper(w)) {
      word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    }
    out += word;
    first = false;
  }
  return out;
}

void fix_articles(std::vector<std::string>& words) {
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (words[i] == "a" && std::string_view("aeiou").find(words[i + 1][0]) !=
                               std::string_view::npos) {
      words[i] = "an";
    }
  }
}

std::vector<std::string> join_clauses(Gen& gen, Domain domain,
                                      std::size_t n_clauses) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n_clauses; ++i) {
    if (i > 0) {
      words.push_back(",");
      words.push_back("and");
    }
    auto c = gen.clause(domain);
    words.insert(words.end(), c.begin(), c.end());
  }
  words.push_back(".");
  fix_articles(words);
  return words;
}

}  // namespace

std::string_view domain_name(Domain d) {
  switch (d) {
    case Domain::kWiki:
      return "wiki";
    case Domain::kNews:
      return "news";
    case Domain::kClinical:
      return "clinical";
  }
  return "wiki";
}

Domain parse_domain(std::string_view name) {
  if (name == "wiki") return Domain::kWiki;
  if (name == "news") return Domain::kNews;
  if (name == "clinical") return Domain::kClinical;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown domain: " + std::string(name));
}

std::vector<std::string> generate(Domain domain, std::size_t count,
                                  std::uint64_t seed) {
  Gen gen(seed);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(render(join_clauses(gen, domain, 1)));
  }
  return out;
}

std::vector<std::string> generate_with_length(Domain domain, std::size_t count,
                                              std::uint64_t seed,
                                              std::size_t min_tokens,
                                              std::size_t max_tokens) {
  if (min_tokens > max_tokens || max_tokens < 8) {
    throw Error(ErrorCode::kInvalidArgument, "bad length window");
  }
  Gen gen(seed);
  // Clause plus joiner is about 11 tokens.
  std::size_t lo = std::max<std::size_t>(1, (min_tokens + 1) / 12);
  std::size_t hi = std::max<std::size_t>(lo, (max_tokens + 2) / 9);
  std::vector<std::string> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > count * 1000 + 1000) {
      throw Error(ErrorCode::kInvalidArgument,
                  "length window cannot be filled");
    }
    std::size_t n = lo + gen.below(hi - lo + 1);
    auto words = join_clauses(gen, domain, n);
    std::size_t len = token_count(words);
    if (len < min_tokens || len > max_tokens) continue;
    out.push_back(render(words));
  }
  return out;
}

std::vector<std::string> generate_length_mix(
    std::size_t count_per_window, std::uint64_t seed,
    const std::vector<std::pair<std::size_t, std::size_t>>& windows) {
  std::vector<std::string> out;
  std::uint64_t s = seed;
  for (const auto& [lo, hi] : windows) {
    auto part = generate_with_length(Domain::kWiki, count_per_window, s++, lo, hi);
    out.insert(out.end(), part.begin(), part.end());
  }
  // Interleave deterministically so any prefix mixes all lengths.
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

const std::vector<std::string>& occupations() { return kOccupation; }

attribute::AttributeTask occupation_task(std::size_t n_instances,
                                         std::uint64_t seed) {
  Gen gen(seed);
  attribute::AttributeTask task;
  task.attribute_name = "occupation";
  task.candidates = kOccupation;
  // Templates 0, 2, 4, 5 and 8 carry exactly one occupation.
  const std::size_t with_occ[] = {0, 2, 4, 5, 8};
  for (std::size_t i = 0; i < n_instances; ++i) {
    std::size_t gold = gen.below(kOccupation.size());
    auto words = gen.wiki(with_occ[gen.below(5)], &kOccupation[gold]);
    words.push_back(".");
    fix_articles(words);
    task.instances.push_back({render(words), gold});
  }
  return task;
}

}  // namespace embinvert::synth

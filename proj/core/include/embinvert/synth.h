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

#ifndef EMBINVERT_SYNTH_H_
#define EMBINVERT_SYNTH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "embinvert/attribute.h"

namespace embinvert::synth {

// Templated sentence generators over controlled token pools. "wiki" is the
// encyclopedic training domain; "news" shares its people and places but uses
// different templates; "clinical" shares almost nothing with it.
enum class Domain { kWiki, kNews, kClinical };

std::string_view domain_name(Domain d);
Domain parse_domain(std::string_view name);

// One clause per sentence.
std::vector<std::string> generate(Domain domain, std::size_t count,
                                  std::uint64_t seed);

// Sentences built from one or more clauses joined by ", and", keeping only
// those whose token count lies in [min_tokens, max_tokens].
std::vector<std::string> generate_with_length(Domain domain, std::size_t count,
                                              std::uint64_t seed,
                                              std::size_t min_tokens,
                                              std::size_t max_tokens);

// Mixed-length wiki corpus: equal shares drawn from each [min, max] window.
std::vector<std::string> generate_length_mix(
    std::size_t count_per_window, std::uint64_t seed,
    const std::vector<std::pair<std::size_t, std::size_t>>& windows);

const std::vector<std::string>& occupations();

// Wiki sentences that mention exactly one occupation, labelled with it.
attribute::AttributeTask occupation_task(std::size_t n_instances,
                                         std::uint64_t seed);

}  // namespace embinvert::synth

#endif  // EMBINVERT_SYNTH_H_

// Copyright 2026 The ccnaming Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ccn/common.hpp"

namespace ccn {

// The explicit null-onset token. Zero-onset syllables carry it so every
// syllable has the uniform (onset, final) shape; it renders as "" in
// romanized strings.
inline constexpr std::string_view kNullOnset = "-";

// Relation between a character's pinyin and its phonetic radical's pinyin,
// tone ignored: both parts match / onset only / final only / neither.
enum class Regularity { kRegular, kAlliterating, kRhyming, kIrregular };

inline constexpr int kNumRegularity = 4;
const char* to_string(Regularity r);
std::optional<Regularity> regularity_from_string(std::string_view s);

// A Mandarin syllable: onset token ("-" for null), final token, tone
// (1..4, 0 = neutral/unspecified). Values are canonical inventory tokens.
struct Pinyin {
  std::string onset;
  std::string final;
  int tone = 0;

  bool operator==(const Pinyin&) const = default;
  // Tone-ignored equality; most metrics in this project compare on it.
  bool same_base(const Pinyin& o) const { return onset == o.onset && final == o.final; }
};

// Fixed onset/final/syllable inventories, loaded from the shipped data
// file (sections INITIALS, FINALS, SYLLABLES). Load-time validation:
// exactly 24 initials (the null onset counts) and 34 finals, the two token
// sets disjoint, and longest-initial-match segmentation must succeed for
// every attested syllable.
class PhonInventory {
 public:
  static PhonInventory load(const std::string& path);
  static PhonInventory from_string(std::string_view text);

  const std::vector<std::string>& initials() const { return initials_; }
  const std::vector<std::string>& finals() const { return finals_; }
  const std::vector<std::string>& syllables() const { return syllables_; }
  static const std::vector<int>& tones();

  bool is_initial(std::string_view t) const { return initial_set_.count(std::string(t)) != 0; }
  bool is_final(std::string_view t) const { return final_set_.count(std::string(t)) != 0; }

  uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::vector<std::string> initials_;
  std::vector<std::string> finals_;
  std::vector<std::string> syllables_;
  std::unordered_set<std::string> initial_set_;
  std::unordered_set<std::string> final_set_;
  uint64_t fingerprint_ = 0;

  void validate() const;
};

// Splits a romanized syllable ("luo4", "e") into (onset, final, tone).
// Onset is the longest initial prefixing s (null onset if none), final is
// the remainder, tone the optional trailing digit. Throws ValidationError
// when the remainder is not an inventory final or the shape is malformed.
Pinyin parse_pinyin(std::string_view s, const PhonInventory& inv);
std::optional<Pinyin> try_parse_pinyin(std::string_view s, const PhonInventory& inv);

// onset+final(+tone digit when with_tone and tone != 0); null onset
// renders as the empty string.
std::string format_pinyin(const Pinyin& p, bool with_tone = true);

// Normalizes keyboard spellings found in human answer files before
// parsing: lowercase, trims whitespace, u-umlaut variants to "v"
// ("lü"/"lu:" -> "lv"), and "lue"/"nue" to "lve"/"nve".
std::string normalize_keyboard_pinyin(std::string_view s);

// Tone is ignored.
Regularity classify_regularity(const Pinyin& character, const Pinyin& phonetic_radical);

// Symmetric premetric used to decide which radical sounds closer to the
// character (LABEL_s). Weighted mismatch: onset 10 (4 when the onsets
// share a place/manner class), final 10 (4 when the finals share the head
// vowel), tone 1.
double phonetic_distance(const Pinyin& a, const Pinyin& b);

}  // namespace ccn

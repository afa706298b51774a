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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccn/phonology.hpp"

namespace ccn {

enum class Side { kLeft, kRight };
const char* to_string(Side s);
std::optional<Side> side_from_string(std::string_view s);

// One left-right phono-semantic compound.
struct CharacterEntry {
  std::string glyph;
  std::string left_radical;
  std::string right_radical;
  Side phonetic_side = Side::kRight;  // ground truth
  std::vector<Pinyin> pinyins;        // nonempty, distinct ignoring tone
  long long frequency = 0;

  const std::string& phonetic_radical() const {
    return phonetic_side == Side::kLeft ? left_radical : right_radical;
  }
  const std::string& semantic_radical() const {
    return phonetic_side == Side::kLeft ? right_radical : left_radical;
  }
  const std::string& radical_at(Side s) const {
    return s == Side::kLeft ? left_radical : right_radical;
  }
};

struct RadicalEntry {
  std::string glyph;
  Pinyin canonical_pinyin;  // first listed reading
};

enum class FrequencyBucket { kRare, kLow, kMid, kHigh };
inline constexpr int kNumBuckets = 4;
const char* to_string(FrequencyBucket b);

// Percentile boundaries over the training-set frequencies. Boundary values
// belong to the lower bucket.
struct BucketBounds {
  long long p50 = 0;
  long long p75 = 0;
};

// Character database + radical readings + held-out test set. Immutable
// after load; all queries are read-only.
class Lexicon {
 public:
  static Lexicon load(const std::string& characters_path, const std::string& radicals_path,
                      const std::string& tests_path, PhonInventory inventory);

  const std::vector<CharacterEntry>& entries() const { return entries_; }
  const CharacterEntry* find(std::string_view glyph) const;
  const CharacterEntry& at(std::string_view glyph) const;  // throws
  const RadicalEntry& radical(std::string_view glyph) const;  // throws
  bool has_radical(std::string_view glyph) const;
  size_t radical_count() const { return radicals_.size(); }

  const std::vector<std::string>& test_glyphs() const { return test_glyphs_; }
  bool is_test(std::string_view glyph) const;

  // Non-test entries, file order.
  const std::vector<const CharacterEntry*>& training_entries() const { return training_; }

  // Characters whose ground-truth phonetic radical is `radical_glyph`.
  const std::vector<const CharacterEntry*>* phonetic_hosts(std::string_view radical_glyph) const;

  const BucketBounds& bucket_bounds() const { return bounds_; }
  FrequencyBucket bucket_of(long long frequency) const;

  const PhonInventory& inventory() const { return inventory_; }
  uint64_t fingerprint() const { return fingerprint_; }

 private:
  PhonInventory inventory_;
  std::vector<CharacterEntry> entries_;
  std::unordered_map<std::string, size_t> by_glyph_;
  std::unordered_map<std::string, RadicalEntry> radicals_;
  std::vector<std::string> test_glyphs_;
  std::unordered_map<std::string, bool> test_set_;
  std::vector<const CharacterEntry*> training_;
  std::unordered_map<std::string, std::vector<const CharacterEntry*>> hosts_;
  BucketBounds bounds_;
  uint64_t fingerprint_ = 0;

  void index_and_validate();
};

// One regularity per listed pinyin, classified against the canonical
// pinyin of the true phonetic radical.
std::vector<std::pair<Pinyin, Regularity>> regularity_of(const CharacterEntry& entry, const Lexicon& lex);

// Character-level regularity: best type among the entry's pinyins under
// the precedence regular > alliterating > rhyming > irregular.
Regularity character_regularity(const CharacterEntry& entry, const Lexicon& lex);

// Fraction of the characters hosted by this phonetic radical that have at
// least one regular reading w.r.t. it. Throws ValidationError when the
// radical never serves as a phonetic radical.
double saliency(const Lexicon& lex, std::string_view radical_glyph);

// Fraction of the characters sharing the entry's phonetic radical that
// also share a tone-ignored pinyin with the entry (the entry counts
// itself).
double consistency(const Lexicon& lex, const CharacterEntry& entry);

std::map<std::string, FrequencyBucket> frequency_buckets(const Lexicon& lex);

struct TrainingSets {
  std::vector<const CharacterEntry*> all;   // 4,281 on the paper's data
  std::vector<const CharacterEntry*> mid;   // top 50% by frequency
  std::vector<const CharacterEntry*> high;  // top 25% by frequency
};
TrainingSets build_training_sets(const Lexicon& lex);

struct TestSelectionReport {
  struct Violation {
    std::string glyph;
    std::string reason;
  };
  std::vector<Violation> violations;
  int num_characters = 0;
  int num_pinyins = 0;
  // Per-pinyin regularity counts, indexed by Regularity.
  std::array<int, kNumRegularity> pinyin_counts{};
  // Characters counted once, by best type (spec precedence rule).
  std::array<int, kNumRegularity> char_counts_precedence{};
  // Characters counted once per type they exhibit (may sum past 60).
  std::array<int, kNumRegularity> char_counts_any{};
  double mean_radical_saliency = 0;
  std::map<std::string, double> saliency_per_char;  // test glyph -> its radical's saliency
};
TestSelectionReport validate_test_selection(const Lexicon& lex);

// Side whose radical pinyin is phonetically closest to the character's
// first pinyin; ties go to the ground-truth phonetic side.
Side label_phonetic_side_by_similarity(const CharacterEntry& entry, const Lexicon& lex);

}  // namespace ccn

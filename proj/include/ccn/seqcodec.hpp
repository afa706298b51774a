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

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccn/lexicon.hpp"

namespace ccn {

inline constexpr std::string_view kPadTok = "Pad";
inline constexpr std::string_view kBeginTok = "Begin";
inline constexpr std::string_view kEndTok = "End";
inline constexpr std::string_view kUnkTok = "Unk";

enum class InputMode { kOrtho, kOrthoPinyin };
enum class LabelScheme { kBase, kLabelM, kLabelS, kLabelMr, kLabelSr };
enum class TrainingSet { kAll, kMid, kHigh };

const char* to_string(LabelScheme s);
const char* to_string(TrainingSet s);

// One of the 80 model configurations per experiment: 4 dataset rows
// (all / mid / high / all+freq) x 5 label schemes x tone x shuffle.
struct ModelVariant {
  InputMode input_mode = InputMode::kOrtho;
  LabelScheme label_scheme = LabelScheme::kBase;
  bool with_tone = false;
  bool with_shuffle = false;
  bool with_freq = false;  // implies training_set == kAll
  TrainingSet training_set = TrainingSet::kAll;

  bool operator==(const ModelVariant&) const = default;

  int experiment() const { return input_mode == InputMode::kOrtho ? 1 : 2; }
  bool has_position_label() const { return label_scheme != LabelScheme::kBase; }
  bool has_regularity_label() const {
    return label_scheme == LabelScheme::kLabelMr || label_scheme == LabelScheme::kLabelSr;
  }
  bool position_by_similarity() const {
    return label_scheme == LabelScheme::kLabelS || label_scheme == LabelScheme::kLabelSr;
  }

  // "exp1/all+freq/label_mr/-tone/+shuffle"
  std::string spec() const;
  static ModelVariant parse(std::string_view spec);  // throws ValidationError
  void validate() const;
};

// All 80 admissible variants of one experiment, in a fixed order.
std::vector<ModelVariant> enumerate_variants(int experiment);

// Token <-> dense id bijection with reserved specials.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBegin = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnk = 3;

  Vocabulary();

  int add(const std::string& token);  // no-op if present
  int id_or_unk(std::string_view token) const;
  std::optional<int> id_of(std::string_view token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Closed token sets of the codec (labels, pinyin components, buckets,
// tones, specials). Tokens outside these sets -- radical glyphs -- are the
// only ones eligible for the singleton -> Unk replacement.
class TokenClasses {
 public:
  explicit TokenClasses(const PhonInventory& inv);
  bool is_closed(std::string_view token) const;
  bool is_onset(std::string_view token) const { return onsets_.count(std::string(token)) != 0; }
  bool is_final(std::string_view token) const { return finals_.count(std::string(token)) != 0; }
  static bool is_tone(std::string_view token);

 private:
  std::unordered_map<std::string, bool> closed_;
  std::unordered_map<std::string, bool> onsets_;
  std::unordered_map<std::string, bool> finals_;
};

// Tokens appearing once in `sequences` are dropped (they will map to Unk)
// unless `exempt` says otherwise; specials are always present. Id order:
// specials, then first occurrence.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sequences,
                       const std::function<bool(std::string_view)>& exempt);

// Model input tokens for one character under a variant.
//   ortho:        Begin, left, right, (bucket), End
//   ortho+pinyin: Begin, left, onset, final, tone, End, right, onset,
//                 final, tone, (bucket), End
std::vector<std::string> encode_input(const CharacterEntry& entry, const ModelVariant& variant,
                                      const Lexicon& lex);

// Gold output tokens: Begin, (position), (regularity), onset/final
// (swapped under +Shuffle), (tone), End. The regularity token is
// classified against the radical the position token designates.
std::vector<std::string> encode_output(const CharacterEntry& entry, const Pinyin& target,
                                       const ModelVariant& variant, const Lexicon& lex);

// Decoded model emission. valid is true only when the token sequence
// matched the variant's output grammar exactly.
struct ParsedAnswer {
  std::optional<Side> position;
  std::optional<Regularity> regularity;
  std::optional<Pinyin> pinyin;
  bool valid = false;
};

ParsedAnswer decode_output(const std::vector<std::string>& tokens, const ModelVariant& variant,
                           const TokenClasses& classes);

// One training example: a character paired with one of its readings.
struct Example {
  const CharacterEntry* entry = nullptr;
  Pinyin target;
  std::vector<std::string> src;
  std::vector<std::string> tgt;
};

// Polyphone characters contribute one example per listed (tone-ignored
// distinct) pinyin.
std::vector<Example> build_corpus(const std::vector<const CharacterEntry*>& charset,
                                  const ModelVariant& variant, const Lexicon& lex);

// The character set a variant trains on.
const std::vector<const CharacterEntry*>& variant_charset(const ModelVariant& v, const TrainingSets& sets);

std::vector<int> to_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab);

}  // namespace ccn

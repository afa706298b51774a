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
#include <vector>

#include "ccn/lexicon.hpp"
#include "ccn/seqcodec.hpp"
#include "ccn/stats.hpp"

namespace ccn {

// The five paper answer types plus the bookkeeping `invalid` for
// unparseable/missing answers.
enum class AnswerType {
  kRegular,
  kAlliterating,
  kRhyming,
  kIrregular,
  kSemantic,
  kInvalid,
};
inline constexpr int kNumAnswerTypes = 5;  // without invalid
const char* to_string(AnswerType t);

// One responder's single answer per test character. nullopt = the
// responder produced nothing parseable for that character.
struct AnswerSet {
  enum class Kind { kHuman, kModel };
  std::string responder_id;
  Kind kind = Kind::kHuman;
  std::map<std::string, std::optional<Pinyin>> answers;

  const std::optional<Pinyin>* answer_for(std::string_view glyph) const;
};

// Correct iff (onset, final) matches any gold pinyin of the entry, tone
// ignored. Missing/invalid answers are incorrect.
bool score_answer(const std::optional<Pinyin>& answer, const CharacterEntry& entry);

// Mean over the test set.
double responder_accuracy(const AnswerSet& a, const Lexicon& lex);

// Per test glyph: the fraction of responders who named it correctly.
std::map<std::string, double> character_accuracy(const std::vector<AnswerSet>& sets, const Lexicon& lex);

// Precedence: regular vs. the true phonetic radical wins; otherwise a
// tone-ignored match of the semantic radical's canonical pinyin is
// `semantic`; otherwise the regularity class; unparseable -> invalid.
AnswerType classify_answer_type(const std::optional<Pinyin>& answer, const CharacterEntry& entry,
                                const Lexicon& lex);

// Per character: fraction of responders per answer type. Indices 0..4 are
// the five paper types; index 5 is the invalid mass. Rows sum to 1.
struct ProductionProfile {
  std::map<std::string, std::array<double, kNumAnswerTypes + 1>> per_char;

  // Mean over characters of one type's share (invalid excluded from types).
  std::array<double, kNumAnswerTypes> type_means() const;
  std::array<double, kNumAnswerTypes> type_sds() const;
  // One type's share per character, ordered by the glyph list.
  std::vector<double> type_column(AnswerType t, const std::vector<std::string>& glyphs) const;
};

ProductionProfile production_profile(const std::vector<AnswerSet>& sets, const Lexicon& lex);

// Distinct tone-ignored answers per character (invalid/missing excluded).
std::map<std::string, int> answer_variability(const std::vector<AnswerSet>& sets, const Lexicon& lex);

// Fraction of test characters on which the two responders gave the same
// tone-ignored answer; missing/invalid never matches.
double overlap_rate(const AnswerSet& a, const AnswerSet& b, const Lexicon& lex);

// Cross-entropy between 5-type production probabilities, q floored at
// epsilon and renormalized. `pooled` uses profiles averaged over
// characters first; `per_character_mean` averages per-character values.
struct CrossEntropyPair {
  double pooled = 0;
  double per_character_mean = 0;
};
CrossEntropyPair cross_entropy_profiles(const ProductionProfile& human, const ProductionProfile& model,
                                        const std::vector<std::string>& glyphs, double epsilon = 1e-6);

// Pearson r between per-character accuracy and the character's phonetic
// radical's saliency.
std::optional<double> saliency_effect(const std::map<std::string, double>& char_accuracy, const Lexicon& lex);

// human_answers.csv: participant_id,glyph,knows_character,answer_pinyin.
// Keyboard pinyin is normalized before parsing; unparseable answers load
// as missing. Returns one AnswerSet per participant, file order.
std::vector<AnswerSet> load_human_answers(const std::string& path, const Lexicon& lex);

// predictions.csv rows for one run.
struct PredictionRow {
  std::string variant;
  int seed = 0;
  std::string glyph;
  int rank = 0;
  std::vector<std::string> tokens;
  double score = 0;
};

std::string predictions_csv_header();
std::string format_prediction_row(const PredictionRow& row);
std::vector<PredictionRow> load_predictions(const std::string& path);

// Builds the model responder's AnswerSet from its rank-0 hypotheses.
AnswerSet answers_from_predictions(const std::vector<PredictionRow>& rows, const ModelVariant& variant,
                                   const Lexicon& lex, const TokenClasses& classes,
                                   const std::string& responder_id);

}  // namespace ccn

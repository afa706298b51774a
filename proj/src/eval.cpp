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

#include "ccn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace ccn {

const char* to_string(AnswerType t) {
  switch (t) {
    case AnswerType::kRegular: return "regular";
    case AnswerType::kAlliterating: return "alliterating";
    case AnswerType::kRhyming: return "rhyming";
    case AnswerType::kIrregular: return "irregular";
    case AnswerType::kSemantic: return "semantic";
    case AnswerType::kInvalid: return "invalid";
  }
  return "?";
}

const std::optional<Pinyin>* AnswerSet::answer_for(std::string_view glyph) const {
  const auto it = answers.find(std::string(glyph));
  return it == answers.end() ? nullptr : &it->second;
}

bool score_answer(const std::optional<Pinyin>& answer, const CharacterEntry& entry) {
  if (!answer) return false;
  for (const Pinyin& gold : entry.pinyins) {
    if (answer->same_base(gold)) return true;
  }
  return false;
}

double responder_accuracy(const AnswerSet& a, const Lexicon& lex) {
  int correct = 0;
  for (const std::string& glyph : lex.test_glyphs()) {
    const auto* ans = a.answer_for(glyph);
    if (ans && score_answer(*ans, lex.at(glyph))) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(lex.test_glyphs().size());
}

std::map<std::string, double> character_accuracy(const std::vector<AnswerSet>& sets, const Lexicon& lex) {
  if (sets.empty()) throw ValidationError("character_accuracy: no answer sets");
  std::map<std::string, double> out;
  for (const std::string& glyph : lex.test_glyphs()) {
    const CharacterEntry& entry = lex.at(glyph);
    int correct = 0;
    for (const AnswerSet& a : sets) {
      const auto* ans = a.answer_for(glyph);
      if (ans && score_answer(*ans, entry)) ++correct;
    }
    out.emplace(glyph, static_cast<double>(correct) / static_cast<double>(sets.size()));
  }
  return out;
}

AnswerType classify_answer_type(const std::optional<Pinyin>& answer, const CharacterEntry& entry,
                                const Lexicon& lex) {
  if (!answer) return AnswerType::kInvalid;
  const Pinyin& phonetic = lex.radical(entry.phonetic_radical()).canonical_pinyin;
  const Regularity reg = classify_regularity(*answer, phonetic);
  if (reg == Regularity::kRegular) return AnswerType::kRegular;
  const Pinyin& semantic = lex.radical(entry.semantic_radical()).canonical_pinyin;
  if (answer->same_base(semantic)) return AnswerType::kSemantic;
  switch (reg) {
    case Regularity::kAlliterating: return AnswerType::kAlliterating;
    case Regularity::kRhyming: return AnswerType::kRhyming;
    default: return AnswerType::kIrregular;
  }
}

ProductionProfile production_profile(const std::vector<AnswerSet>& sets, const Lexicon& lex) {
  if (sets.empty()) throw ValidationError("production_profile: no answer sets");
  ProductionProfile profile;
  for (const std::string& glyph : lex.test_glyphs()) {
    const CharacterEntry& entry = lex.at(glyph);
    std::array<double, kNumAnswerTypes + 1> shares{};
    for (const AnswerSet& a : sets) {
      const auto* ans = a.answer_for(glyph);
      const AnswerType t = classify_answer_type(ans ? *ans : std::optional<Pinyin>{}, entry, lex);
      shares[static_cast<size_t>(t)] += 1.0;
    }
    for (double& s : shares) s /= static_cast<double>(sets.size());
    profile.per_char.emplace(glyph, shares);
  }
  return profile;
}

std::array<double, kNumAnswerTypes> ProductionProfile::type_means() const {
  std::array<double, kNumAnswerTypes> out{};
  if (per_char.empty()) return out;
  for (const auto& [glyph, shares] : per_char) {
    for (int t = 0; t < kNumAnswerTypes; ++t) out[t] += shares[t];
  }
  for (double& v : out) v /= static_cast<double>(per_char.size());
  return out;
}

std::array<double, kNumAnswerTypes> ProductionProfile::type_sds() const {
  std::array<double, kNumAnswerTypes> out{};
  for (int t = 0; t < kNumAnswerTypes; ++t) {
    std::vector<double> col;
    col.reserve(per_char.size());
    for (const auto& [glyph, shares] : per_char) col.push_back(shares[t]);
    out[t] = sample_sd(col);
  }
  return out;
}

std::vector<double> ProductionProfile::type_column(AnswerType t, const std::vector<std::string>& glyphs) const {
  std::vector<double> out;
  out.reserve(glyphs.size());
  for (const std::string& g : glyphs) {
    const auto it = per_char.find(g);
    out.push_back(it == per_char.end() ? 0.0 : it->second[static_cast<size_t>(t)]);
  }
  return out;
}

std::map<std::string, int> answer_variability(const std::vector<AnswerSet>& sets, const Lexicon& lex) {
  std::map<std::string, int> out;
  for (const std::string& glyph : lex.test_glyphs()) {
    std::set<std::pair<std::string, std::string>> distinct;
    for (const AnswerSet& a : sets) {
      const auto* ans = a.answer_for(glyph);
      if (ans && *ans) distinct.emplace((*ans)->onset, (*ans)->final);
    }
    out.emplace(glyph, static_cast<int>(distinct.size()));
  }
  return out;
}

double overlap_rate(const AnswerSet& a, const AnswerSet& b, const Lexicon& lex) {
  int same = 0;
  for (const std::string& glyph : lex.test_glyphs()) {
    const auto* pa = a.answer_for(glyph);
    const auto* pb = b.answer_for(glyph);
    if (pa && pb && *pa && *pb && (*pa)->same_base(**pb)) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(lex.test_glyphs().size());
}

namespace {

double cross_entropy_5(const std::array<double, kNumAnswerTypes>& p,
                       std::array<double, kNumAnswerTypes> q, double epsilon) {
  double qsum = 0;
  for (double& v : q) {
    v = std::max(v, epsilon);
    qsum += v;
  }
  double h = 0;
  for (int t = 0; t < kNumAnswerTypes; ++t) {
    h -= p[t] * std::log(q[t] / qsum);
  }
  return h;
}

std::array<double, kNumAnswerTypes> five_of(const std::array<double, kNumAnswerTypes + 1>& shares) {
  std::array<double, kNumAnswerTypes> out{};
  for (int t = 0; t < kNumAnswerTypes; ++t) out[t] = shares[t];
  return out;
}

}  // namespace

CrossEntropyPair cross_entropy_profiles(const ProductionProfile& human, const ProductionProfile& model,
                                        const std::vector<std::string>& glyphs, double epsilon) {
  CrossEntropyPair out;
  std::array<double, kNumAnswerTypes> pm{}, qm{};
  double per_char_sum = 0;
  int matched = 0;
  for (const std::string& g : glyphs) {
    const auto hi = human.per_char.find(g);
    const auto mi = model.per_char.find(g);
    if (hi == human.per_char.end() || mi == model.per_char.end()) continue;
    ++matched;
    const auto p = five_of(hi->second);
    const auto q = five_of(mi->second);
    for (int t = 0; t < kNumAnswerTypes; ++t) {
      pm[t] += p[t];
      qm[t] += q[t];
    }
    per_char_sum += cross_entropy_5(p, q, epsilon);
  }
  if (matched == 0) throw ValidationError("cross_entropy_profiles: no matched characters");
  for (int t = 0; t < kNumAnswerTypes; ++t) {
    pm[t] /= matched;
    qm[t] /= matched;
  }
  out.pooled = cross_entropy_5(pm, qm, epsilon);
  out.per_character_mean = per_char_sum / matched;
  return out;
}

std::optional<double> saliency_effect(const std::map<std::string, double>& char_accuracy, const Lexicon& lex) {
  std::vector<double> acc, sal;
  for (const std::string& glyph : lex.test_glyphs()) {
    const auto it = char_accuracy.find(glyph);
    if (it == char_accuracy.end()) continue;
    acc.push_back(it->second);
    sal.push_back(saliency(lex, lex.at(glyph).phonetic_radical()));
  }
  return pearson(acc, sal);
}

std::vector<AnswerSet> load_human_answers(const std::string& path, const Lexicon& lex) {
  const std::vector<std::string> lines = split(read_file(path), '\n');
  if (lines.empty() || split(std::string(trim(lines[0])), ',') !=
                           std::vector<std::string>{"participant_id", "glyph", "knows_character", "answer_pinyin"}) {
    throw ValidationError(path + ": expected header participant_id,glyph,knows_character,answer_pinyin");
  }
  std::vector<AnswerSet> sets;
  std::map<std::string, size_t> by_id;
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::string line(trim(lines[i]));
    if (line.empty()) continue;
    const std::vector<std::string> cols = split(line, ',');
    if (cols.size() != 4) {
      throw ValidationError(path + ":" + std::to_string(i + 1) + ": expected 4 columns");
    }
    const std::string& pid = cols[0];
    const std::string& glyph = cols[1];
    if (cols[2] != "0" && cols[2] != "1") {
      throw ValidationError(path + ":" + std::to_string(i + 1) + ": knows_character must be 0 or 1");
    }
    if (!lex.is_test(glyph)) {
      throw ValidationError(path + ":" + std::to_string(i + 1) + ": " + glyph + " is not a test character");
    }
    auto it = by_id.find(pid);
    if (it == by_id.end()) {
      it = by_id.emplace(pid, sets.size()).first;
      sets.push_back(AnswerSet{pid, AnswerSet::Kind::kHuman, {}});
    }
    AnswerSet& set = sets[it->second];
    if (set.answers.count(glyph)) {
      throw ValidationError(path + ":" + std::to_string(i + 1) + ": duplicate answer for " + pid + "/" + glyph);
    }
    std::optional<Pinyin> answer;
    const std::string normalized = normalize_keyboard_pinyin(cols[3]);
    if (!normalized.empty()) answer = try_parse_pinyin(normalized, lex.inventory());
    set.answers.emplace(glyph, answer);
  }
  return sets;
}

std::string predictions_csv_header() { return "variant,seed,glyph,rank,tokens,score"; }

std::string format_prediction_row(const PredictionRow& row) {
  char score[32];
  std::snprintf(score, sizeof score, "%.6f", row.score);
  return row.variant + "," + std::to_string(row.seed) + "," + row.glyph + "," + std::to_string(row.rank) +
         "," + join(row.tokens, " ") + "," + score;
}

std::vector<PredictionRow> load_predictions(const std::string& path) {
  const std::vector<std::string> lines = split(read_file(path), '\n');
  if (lines.empty() || std::string(trim(lines[0])) != predictions_csv_header()) {
    throw ValidationError(path + ": expected header " + predictions_csv_header());
  }
  std::vector<PredictionRow> rows;
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::string line(trim(lines[i]));
    if (line.empty()) continue;
    const std::vector<std::string> cols = split(line, ',');
    if (cols.size() != 6) {
      throw ValidationError(path + ":" + std::to_string(i + 1) + ": expected 6 columns");
    }
    PredictionRow row;
    row.variant = cols[0];
    row.seed = std::stoi(cols[1]);
    row.glyph = cols[2];
    row.rank = std::stoi(cols[3]);
    for (const std::string& t : split(cols[4], ' ')) {
      if (!t.empty()) row.tokens.push_back(t);
    }
    row.score = std::stod(cols[5]);
    rows.push_back(std::move(row));
  }
  return rows;
}

AnswerSet answers_from_predictions(const std::vector<PredictionRow>& rows, const ModelVariant& variant,
                                   const Lexicon& lex, const TokenClasses& classes,
                                   const std::string& responder_id) {
  AnswerSet set{responder_id, AnswerSet::Kind::kModel, {}};
  for (const PredictionRow& row : rows) {
    if (row.rank != 0) continue;
    if (!lex.is_test(row.glyph)) continue;
    const ParsedAnswer parsed = decode_output(row.tokens, variant, classes);
    set.answers[row.glyph] = parsed.valid ? parsed.pinyin : std::optional<Pinyin>{};
  }
  return set;
}

}  // namespace ccn

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

#include "ccn/seqcodec.hpp"

#include <algorithm>

namespace ccn {

const char* to_string(LabelScheme s) {
  switch (s) {
    case LabelScheme::kBase: return "base";
    case LabelScheme::kLabelM: return "label_m";
    case LabelScheme::kLabelS: return "label_s";
    case LabelScheme::kLabelMr: return "label_mr";
    case LabelScheme::kLabelSr: return "label_sr";
  }
  return "?";
}

const char* to_string(TrainingSet s) {
  switch (s) {
    case TrainingSet::kAll: return "all";
    case TrainingSet::kMid: return "mid";
    case TrainingSet::kHigh: return "high";
  }
  return "?";
}

void ModelVariant::validate() const {
  if (with_freq && training_set != TrainingSet::kAll) {
    throw ValidationError("variant: +freq is only defined on the ALL training set");
  }
}

std::string ModelVariant::spec() const {
  std::string out = experiment() == 1 ? "exp1/" : "exp2/";
  out += with_freq ? "all+freq" : to_string(training_set);
  out += "/";
  out += to_string(label_scheme);
  out += with_tone ? "/+tone" : "/-tone";
  out += with_shuffle ? "/+shuffle" : "/-shuffle";
  return out;
}

ModelVariant ModelVariant::parse(std::string_view spec) {
  const std::vector<std::string> parts = split(spec, '/');
  if (parts.size() != 5) {
    throw ValidationError("variant spec '" + std::string(spec) +
                          "': expected exp/dataset/label/tone/shuffle");
  }
  ModelVariant v;
  if (parts[0] == "exp1") v.input_mode = InputMode::kOrtho;
  else if (parts[0] == "exp2") v.input_mode = InputMode::kOrthoPinyin;
  else throw ValidationError("variant spec: unknown experiment '" + parts[0] + "'");

  if (parts[1] == "all") { v.training_set = TrainingSet::kAll; v.with_freq = false; }
  else if (parts[1] == "mid") { v.training_set = TrainingSet::kMid; v.with_freq = false; }
  else if (parts[1] == "high") { v.training_set = TrainingSet::kHigh; v.with_freq = false; }
  else if (parts[1] == "all+freq") { v.training_set = TrainingSet::kAll; v.with_freq = true; }
  else throw ValidationError("variant spec: unknown dataset '" + parts[1] + "'");

  if (parts[2] == "base") v.label_scheme = LabelScheme::kBase;
  else if (parts[2] == "label_m") v.label_scheme = LabelScheme::kLabelM;
  else if (parts[2] == "label_s") v.label_scheme = LabelScheme::kLabelS;
  else if (parts[2] == "label_mr") v.label_scheme = LabelScheme::kLabelMr;
  else if (parts[2] == "label_sr") v.label_scheme = LabelScheme::kLabelSr;
  else throw ValidationError("variant spec: unknown label scheme '" + parts[2] + "'");

  if (parts[3] == "+tone") v.with_tone = true;
  else if (parts[3] == "-tone") v.with_tone = false;
  else throw ValidationError("variant spec: expected +tone or -tone, got '" + parts[3] + "'");

  if (parts[4] == "+shuffle") v.with_shuffle = true;
  else if (parts[4] == "-shuffle") v.with_shuffle = false;
  else throw ValidationError("variant spec: expected +shuffle or -shuffle, got '" + parts[4] + "'");

  v.validate();
  return v;
}

std::vector<ModelVariant> enumerate_variants(int experiment) {
  if (experiment != 1 && experiment != 2) {
    throw ValidationError("experiment must be 1 or 2");
  }
  std::vector<ModelVariant> out;
  const struct { TrainingSet set; bool freq; } datasets[] = {
      {TrainingSet::kAll, false}, {TrainingSet::kMid, false}, {TrainingSet::kHigh, false},
      {TrainingSet::kAll, true}};
  const LabelScheme labels[] = {LabelScheme::kBase, LabelScheme::kLabelM, LabelScheme::kLabelS,
                                LabelScheme::kLabelMr, LabelScheme::kLabelSr};
  for (const auto& d : datasets) {
    for (LabelScheme l : labels) {
      for (bool tone : {false, true}) {
        for (bool shuffle : {false, true}) {
          ModelVariant v;
          v.input_mode = experiment == 1 ? InputMode::kOrtho : InputMode::kOrthoPinyin;
          v.training_set = d.set;
          v.with_freq = d.freq;
          v.label_scheme = l;
          v.with_tone = tone;
          v.with_shuffle = shuffle;
          out.push_back(v);
        }
      }
    }
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (std::string_view t : {kPadTok, kBeginTok, kEndTok, kUnkTok}) add(std::string(t));
}

int Vocabulary::add(const std::string& token) {
  const auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

int Vocabulary::id_or_unk(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::optional<int> Vocabulary::id_of(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw ValidationError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<size_t>(id)];
}

uint64_t Vocabulary::fingerprint() const {
  uint64_t h = kFnvOffset;
  for (const std::string& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

TokenClasses::TokenClasses(const PhonInventory& inv) {
  for (std::string_view t : {kPadTok, kBeginTok, kEndTok, kUnkTok}) closed_.emplace(std::string(t), true);
  for (const char* t : {"left", "right"}) closed_.emplace(t, true);
  for (int r = 0; r < kNumRegularity; ++r) closed_.emplace(to_string(static_cast<Regularity>(r)), true);
  for (int b = 0; b < kNumBuckets; ++b) closed_.emplace(to_string(static_cast<FrequencyBucket>(b)), true);
  for (int t : PhonInventory::tones()) closed_.emplace(std::string(1, static_cast<char>('0' + t)), true);
  for (const std::string& o : inv.initials()) {
    closed_.emplace(o, true);
    onsets_.emplace(o, true);
  }
  for (const std::string& f : inv.finals()) {
    closed_.emplace(f, true);
    finals_.emplace(f, true);
  }
}

bool TokenClasses::is_closed(std::string_view token) const {
  return closed_.count(std::string(token)) != 0;
}

bool TokenClasses::is_tone(std::string_view token) {
  return token.size() == 1 && token[0] >= '0' && token[0] <= '4';
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sequences,
                       const std::function<bool(std::string_view)>& exempt) {
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  for (const auto& seq : sequences) {
    for (const std::string& tok : seq) {
      if (++counts[tok] == 1) order.push_back(tok);
    }
  }
  Vocabulary vocab;
  for (const std::string& tok : order) {
    if (counts[tok] > 1 || (exempt && exempt(tok))) vocab.add(tok);
  }
  return vocab;
}

namespace {

std::string tone_token(int tone) { return std::string(1, static_cast<char>('0' + tone)); }

void append_radical_pinyin(std::vector<std::string>& out, const RadicalEntry& r) {
  out.push_back(r.canonical_pinyin.onset);
  out.push_back(r.canonical_pinyin.final);
  out.push_back(tone_token(r.canonical_pinyin.tone));
}

}  // namespace

std::vector<std::string> encode_input(const CharacterEntry& entry, const ModelVariant& variant,
                                      const Lexicon& lex) {
  std::vector<std::string> out;
  out.emplace_back(kBeginTok);
  if (variant.input_mode == InputMode::kOrtho) {
    out.push_back(entry.left_radical);
    out.push_back(entry.right_radical);
  } else {
    out.push_back(entry.left_radical);
    append_radical_pinyin(out, lex.radical(entry.left_radical));
    out.emplace_back(kEndTok);
    out.push_back(entry.right_radical);
    append_radical_pinyin(out, lex.radical(entry.right_radical));
  }
  if (variant.with_freq) {
    out.emplace_back(to_string(lex.bucket_of(entry.frequency)));
  }
  out.emplace_back(kEndTok);
  return out;
}

std::vector<std::string> encode_output(const CharacterEntry& entry, const Pinyin& target,
                                       const ModelVariant& variant, const Lexicon& lex) {
  std::vector<std::string> out;
  out.emplace_back(kBeginTok);
  Side designated = entry.phonetic_side;
  if (variant.position_by_similarity()) designated = label_phonetic_side_by_similarity(entry, lex);
  if (variant.has_position_label()) {
    out.emplace_back(to_string(designated));
  }
  if (variant.has_regularity_label()) {
    const Pinyin& radical = lex.radical(entry.radical_at(designated)).canonical_pinyin;
    out.emplace_back(to_string(classify_regularity(target, radical)));
  }
  if (variant.with_shuffle) {
    out.push_back(target.final);
    out.push_back(target.onset);
  } else {
    out.push_back(target.onset);
    out.push_back(target.final);
  }
  if (variant.with_tone) {
    out.push_back(tone_token(target.tone));
  }
  out.emplace_back(kEndTok);
  return out;
}

ParsedAnswer decode_output(const std::vector<std::string>& tokens, const ModelVariant& variant,
                           const TokenClasses& classes) {
  ParsedAnswer ans;
  size_t i = 0;
  const auto next = [&]() -> const std::string* {
    return i < tokens.size() ? &tokens[i++] : nullptr;
  };
  const std::string* t = next();
  if (!t || *t != kBeginTok) return ans;
  if (variant.has_position_label()) {
    t = next();
    if (!t) return ans;
    const auto side = side_from_string(*t);
    if (!side) return ans;
    ans.position = *side;
  }
  if (variant.has_regularity_label()) {
    t = next();
    if (!t) return ans;
    const auto reg = regularity_from_string(*t);
    if (!reg) return ans;
    ans.regularity = *reg;
  }
  const std::string* first = next();
  const std::string* second = next();
  if (!first || !second) return ans;
  const std::string& onset = variant.with_shuffle ? *second : *first;
  const std::string& final = variant.with_shuffle ? *first : *second;
  if (!classes.is_onset(onset) || !classes.is_final(final)) return ans;
  int tone = 0;
  if (variant.with_tone) {
    t = next();
    if (!t || !TokenClasses::is_tone(*t)) return ans;
    tone = (*t)[0] - '0';
  }
  t = next();
  if (!t || *t != kEndTok) return ans;
  if (i != tokens.size()) return ans;  // trailing tokens
  ans.pinyin = Pinyin{onset, final, tone};
  ans.valid = true;
  return ans;
}

std::vector<Example> build_corpus(const std::vector<const CharacterEntry*>& charset,
                                  const ModelVariant& variant, const Lexicon& lex) {
  std::vector<Example> out;
  for (const CharacterEntry* e : charset) {
    for (const Pinyin& p : e->pinyins) {
      Example ex;
      ex.entry = e;
      ex.target = p;
      ex.src = encode_input(*e, variant, lex);
      ex.tgt = encode_output(*e, p, variant, lex);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

const std::vector<const CharacterEntry*>& variant_charset(const ModelVariant& v, const TrainingSets& sets) {
  switch (v.training_set) {
    case TrainingSet::kAll: return sets.all;
    case TrainingSet::kMid: return sets.mid;
    case TrainingSet::kHigh: return sets.high;
  }
  return sets.all;
}

std::vector<int> to_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(vocab.id_or_unk(t));
  return out;
}

}  // namespace ccn

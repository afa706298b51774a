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

#include "ccn/lexicon.hpp"

#include <algorithm>
#include <cmath>

namespace ccn {

const char* to_string(Side s) { return s == Side::kLeft ? "left" : "right"; }

std::optional<Side> side_from_string(std::string_view s) {
  if (s == "left") return Side::kLeft;
  if (s == "right") return Side::kRight;
  return std::nullopt;
}

const char* to_string(FrequencyBucket b) {
  switch (b) {
    case FrequencyBucket::kRare: return "rare";
    case FrequencyBucket::kLow: return "low";
    case FrequencyBucket::kMid: return "mid";
    case FrequencyBucket::kHigh: return "high";
  }
  return "?";
}

namespace {

struct TsvReader {
  std::string name;
  std::vector<std::string> lines;

  explicit TsvReader(const std::string& path) : name(path) {
    lines = split(read_file(path), '\n');
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  }

  [[noreturn]] void fail(size_t row, const std::string& msg) const {
    throw ValidationError(name + ":" + std::to_string(row + 1) + ": " + msg);
  }

  // Validates the header, returns data rows as (row_index, columns).
  std::vector<std::pair<size_t, std::vector<std::string>>> rows(const std::vector<std::string>& header) {
    if (lines.empty()) fail(0, "empty file");
    std::vector<std::string> head = split(lines[0], '\t');
    if (!head.empty() && !head[0].empty() && head[0].substr(0, 3) == "\xEF\xBB\xBF") {
      head[0] = head[0].substr(3);  // UTF-8 BOM
    }
    if (head != header) {
      fail(0, "expected header '" + join(header, "\t") + "'");
    }
    std::vector<std::pair<size_t, std::vector<std::string>>> out;
    for (size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      std::vector<std::string> cols = split(lines[i], '\t');
      if (cols.size() != header.size()) {
        fail(i, "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(cols.size()));
      }
      out.emplace_back(i, std::move(cols));
    }
    return out;
  }
};

long long parse_frequency(const std::string& s, const TsvReader& r, size_t row) {
  try {
    size_t used = 0;
    const long long f = std::stoll(s, &used);
    if (used != s.size() || f < 0) throw std::invalid_argument(s);
    return f;
  } catch (const std::exception&) {
    r.fail(row, "bad frequency '" + s + "'");
  }
}

}  // namespace

Lexicon Lexicon::load(const std::string& characters_path, const std::string& radicals_path,
                      const std::string& tests_path, PhonInventory inventory) {
  Lexicon lex;
  lex.inventory_ = std::move(inventory);

  uint64_t fp = kFnvOffset;
  fp = fnv1a64(read_file(characters_path), fp);
  fp = fnv1a64(read_file(radicals_path), fp);
  fp = fnv1a64(read_file(tests_path), fp);
  fp = fnv1a64(lex.inventory_.fingerprint(), fp);
  lex.fingerprint_ = fp;

  TsvReader radicals(radicals_path);
  for (auto& [row, cols] : radicals.rows({"glyph", "pinyin"})) {
    const std::string& glyph = cols[0];
    if (lex.radicals_.count(glyph)) radicals.fail(row, "duplicate radical glyph " + glyph);
    const auto py = try_parse_pinyin(normalize_keyboard_pinyin(cols[1]), lex.inventory_);
    if (!py) radicals.fail(row, "unparseable pinyin '" + cols[1] + "' for radical " + glyph);
    lex.radicals_.emplace(glyph, RadicalEntry{glyph, *py});
  }

  TsvReader chars(characters_path);
  for (auto& [row, cols] :
       chars.rows({"glyph", "left_radical", "right_radical", "phonetic_side", "pinyins", "frequency"})) {
    CharacterEntry e;
    e.glyph = cols[0];
    e.left_radical = cols[1];
    e.right_radical = cols[2];
    const auto side = side_from_string(cols[3]);
    if (!side) chars.fail(row, "phonetic_side must be left or right, got '" + cols[3] + "'");
    e.phonetic_side = *side;
    for (const std::string& s : split(cols[4], ',')) {
      const auto py = try_parse_pinyin(normalize_keyboard_pinyin(s), lex.inventory_);
      if (!py) chars.fail(row, "unparseable pinyin '" + s + "' for character " + e.glyph);
      for (const Pinyin& prev : e.pinyins) {
        if (prev.same_base(*py)) {
          chars.fail(row, "duplicate tone-ignored pinyin '" + format_pinyin(*py, false) + "' for " + e.glyph);
        }
      }
      e.pinyins.push_back(*py);
    }
    if (e.pinyins.empty()) chars.fail(row, "character " + e.glyph + " has no pinyins");
    e.frequency = parse_frequency(cols[5], chars, row);
    if (lex.by_glyph_.count(e.glyph)) chars.fail(row, "duplicate glyph " + e.glyph);
    for (const std::string* r : {&e.left_radical, &e.right_radical}) {
      if (!lex.radicals_.count(*r)) {
        chars.fail(row, "radical " + *r + " of " + e.glyph + " has no radical entry");
      }
    }
    lex.by_glyph_.emplace(e.glyph, lex.entries_.size());
    lex.entries_.push_back(std::move(e));
  }

  int testno = 0;
  for (const std::string& raw : split(read_file(tests_path), '\n')) {
    ++testno;
    const std::string glyph(trim(raw));
    if (glyph.empty() || glyph[0] == '#') continue;
    if (!lex.by_glyph_.count(glyph)) {
      throw ValidationError(tests_path + ":" + std::to_string(testno) + ": test character " + glyph +
                            " not in the character file");
    }
    if (lex.test_set_.count(glyph)) {
      throw ValidationError(tests_path + ":" + std::to_string(testno) + ": duplicate test character " + glyph);
    }
    lex.test_glyphs_.push_back(glyph);
    lex.test_set_.emplace(glyph, true);
  }
  if (lex.test_glyphs_.empty()) {
    throw ValidationError(tests_path + ": empty test list");
  }

  lex.index_and_validate();
  return lex;
}

void Lexicon::index_and_validate() {
  for (const CharacterEntry& e : entries_) {
    hosts_[e.phonetic_radical()].push_back(&e);
    if (!test_set_.count(e.glyph)) training_.push_back(&e);
  }
  if (training_.empty()) {
    throw ValidationError("lexicon: no training characters left after removing the test set");
  }
  // Percentiles over training frequencies; boundary values go to the
  // lower bucket, so p50/p75 are the ascending order statistics at
  // n - floor(n/2) and n - floor(n/4).
  std::vector<long long> freqs;
  freqs.reserve(training_.size());
  for (const CharacterEntry* e : training_) freqs.push_back(e->frequency);
  std::sort(freqs.begin(), freqs.end());
  const size_t n = freqs.size();
  bounds_.p50 = freqs[n - n / 2 - 1];
  bounds_.p75 = freqs[n - n / 4 - 1];
}

const CharacterEntry* Lexicon::find(std::string_view glyph) const {
  const auto it = by_glyph_.find(std::string(glyph));
  return it == by_glyph_.end() ? nullptr : &entries_[it->second];
}

const CharacterEntry& Lexicon::at(std::string_view glyph) const {
  const CharacterEntry* e = find(glyph);
  if (!e) throw ValidationError("unknown character: " + std::string(glyph));
  return *e;
}

const RadicalEntry& Lexicon::radical(std::string_view glyph) const {
  const auto it = radicals_.find(std::string(glyph));
  if (it == radicals_.end()) throw ValidationError("unknown radical: " + std::string(glyph));
  return it->second;
}

bool Lexicon::has_radical(std::string_view glyph) const {
  return radicals_.count(std::string(glyph)) != 0;
}

bool Lexicon::is_test(std::string_view glyph) const { return test_set_.count(std::string(glyph)) != 0; }

const std::vector<const CharacterEntry*>* Lexicon::phonetic_hosts(std::string_view radical_glyph) const {
  const auto it = hosts_.find(std::string(radical_glyph));
  return it == hosts_.end() ? nullptr : &it->second;
}

FrequencyBucket Lexicon::bucket_of(long long f) const {
  if (f <= 1) return FrequencyBucket::kRare;
  if (f <= bounds_.p50) return FrequencyBucket::kLow;
  if (f <= bounds_.p75) return FrequencyBucket::kMid;
  return FrequencyBucket::kHigh;
}

std::vector<std::pair<Pinyin, Regularity>> regularity_of(const CharacterEntry& entry, const Lexicon& lex) {
  const Pinyin& radical = lex.radical(entry.phonetic_radical()).canonical_pinyin;
  std::vector<std::pair<Pinyin, Regularity>> out;
  out.reserve(entry.pinyins.size());
  for (const Pinyin& p : entry.pinyins) {
    out.emplace_back(p, classify_regularity(p, radical));
  }
  return out;
}

Regularity character_regularity(const CharacterEntry& entry, const Lexicon& lex) {
  Regularity best = Regularity::kIrregular;
  for (const auto& [py, reg] : regularity_of(entry, lex)) {
    if (static_cast<int>(reg) < static_cast<int>(best)) best = reg;
  }
  return best;
}

double saliency(const Lexicon& lex, std::string_view radical_glyph) {
  const auto* hosts = lex.phonetic_hosts(radical_glyph);
  if (!hosts || hosts->empty()) {
    throw ValidationError("saliency undefined: " + std::string(radical_glyph) +
                          " is never a phonetic radical");
  }
  const Pinyin& radical = lex.radical(radical_glyph).canonical_pinyin;
  int regular = 0;
  for (const CharacterEntry* e : *hosts) {
    for (const Pinyin& p : e->pinyins) {
      if (classify_regularity(p, radical) == Regularity::kRegular) {
        ++regular;
        break;
      }
    }
  }
  return static_cast<double>(regular) / static_cast<double>(hosts->size());
}

double consistency(const Lexicon& lex, const CharacterEntry& entry) {
  const auto* hosts = lex.phonetic_hosts(entry.phonetic_radical());
  if (!hosts || hosts->empty()) return 1.0;  // cannot happen for entries in the lexicon
  int sharing = 0;
  for (const CharacterEntry* other : *hosts) {
    bool shares = false;
    for (const Pinyin& a : entry.pinyins) {
      for (const Pinyin& b : other->pinyins) {
        if (a.same_base(b)) shares = true;
      }
    }
    if (shares) ++sharing;
  }
  return static_cast<double>(sharing) / static_cast<double>(hosts->size());
}

std::map<std::string, FrequencyBucket> frequency_buckets(const Lexicon& lex) {
  std::map<std::string, FrequencyBucket> out;
  for (const CharacterEntry* e : lex.training_entries()) {
    out.emplace(e->glyph, lex.bucket_of(e->frequency));
  }
  return out;
}

TrainingSets build_training_sets(const Lexicon& lex) {
  TrainingSets sets;
  sets.all = lex.training_entries();
  std::vector<const CharacterEntry*> sorted = sets.all;
  std::sort(sorted.begin(), sorted.end(), [](const CharacterEntry* a, const CharacterEntry* b) {
    if (a->frequency != b->frequency) return a->frequency > b->frequency;
    return a->glyph < b->glyph;  // UTF-8 byte order == codepoint order
  });
  const size_t n = sorted.size();
  sets.mid.assign(sorted.begin(), sorted.begin() + static_cast<long>(n / 2));
  sets.high.assign(sorted.begin(), sorted.begin() + static_cast<long>(n / 4));
  return sets;
}

TestSelectionReport validate_test_selection(const Lexicon& lex) {
  TestSelectionReport report;
  report.num_characters = static_cast<int>(lex.test_glyphs().size());
  double saliency_sum = 0;
  for (const std::string& glyph : lex.test_glyphs()) {
    const CharacterEntry& e = lex.at(glyph);
    if (e.frequency >= 5) {
      report.violations.push_back({glyph, "frequency " + std::to_string(e.frequency) + " is not < 5"});
    }
    const auto* hosts = lex.phonetic_hosts(e.phonetic_radical());
    const int others = hosts ? static_cast<int>(hosts->size()) - 1 : 0;
    if (others <= 4) {
      report.violations.push_back(
          {glyph, "phonetic radical " + e.phonetic_radical() + " appears in only " + std::to_string(others) +
                      " other characters"});
    }
    std::array<bool, kNumRegularity> seen{};
    for (const auto& [py, reg] : regularity_of(e, lex)) {
      ++report.num_pinyins;
      ++report.pinyin_counts[static_cast<int>(reg)];
      seen[static_cast<int>(reg)] = true;
    }
    for (int t = 0; t < kNumRegularity; ++t) {
      if (seen[t]) ++report.char_counts_any[t];
    }
    ++report.char_counts_precedence[static_cast<int>(character_regularity(e, lex))];
    const double s = saliency(lex, e.phonetic_radical());
    report.saliency_per_char.emplace(glyph, s);
    saliency_sum += s;
  }
  report.mean_radical_saliency = saliency_sum / std::max(1, report.num_characters);
  return report;
}

Side label_phonetic_side_by_similarity(const CharacterEntry& entry, const Lexicon& lex) {
  const Pinyin& target = entry.pinyins.front();
  const double d_left = phonetic_distance(lex.radical(entry.left_radical).canonical_pinyin, target);
  const double d_right = phonetic_distance(lex.radical(entry.right_radical).canonical_pinyin, target);
  if (d_left < d_right) return Side::kLeft;
  if (d_right < d_left) return Side::kRight;
  return entry.phonetic_side;
}

}  // namespace ccn

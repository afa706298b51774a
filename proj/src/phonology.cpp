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

#include "ccn/phonology.hpp"

#include <algorithm>
#include <array>
#include <map>

namespace ccn {

const char* to_string(Regularity r) {
  switch (r) {
    case Regularity::kRegular: return "regular";
    case Regularity::kAlliterating: return "alliterating";
    case Regularity::kRhyming: return "rhyming";
    case Regularity::kIrregular: return "irregular";
  }
  return "?";
}

std::optional<Regularity> regularity_from_string(std::string_view s) {
  if (s == "regular") return Regularity::kRegular;
  if (s == "alliterating") return Regularity::kAlliterating;
  if (s == "rhyming") return Regularity::kRhyming;
  if (s == "irregular") return Regularity::kIrregular;
  return std::nullopt;
}

const std::vector<int>& PhonInventory::tones() {
  static const std::vector<int> kTones = {1, 2, 3, 4, 0};
  return kTones;
}

PhonInventory PhonInventory::load(const std::string& path) {
  return from_string(read_file(path));
}

PhonInventory PhonInventory::from_string(std::string_view text) {
  PhonInventory inv;
  inv.fingerprint_ = fnv1a64(text);
  enum Section { kNone, kInitials, kFinals, kSyllables } section = kNone;
  int lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    const std::string line(trim(raw));
    if (line.empty() || line[0] == '#') continue;
    if (line == "INITIALS") { section = kInitials; continue; }
    if (line == "FINALS") { section = kFinals; continue; }
    if (line == "SYLLABLES") { section = kSyllables; continue; }
    switch (section) {
      case kInitials: inv.initials_.push_back(line); break;
      case kFinals: inv.finals_.push_back(line); break;
      case kSyllables: inv.syllables_.push_back(line); break;
      case kNone:
        throw ValidationError("inventory line " + std::to_string(lineno) + ": token before any section header");
    }
  }
  inv.initial_set_.insert(inv.initials_.begin(), inv.initials_.end());
  inv.final_set_.insert(inv.finals_.begin(), inv.finals_.end());
  inv.validate();
  return inv;
}

void PhonInventory::validate() const {
  if (initials_.size() != 24) {
    throw ValidationError("inventory: expected 24 initials, got " + std::to_string(initials_.size()));
  }
  if (finals_.size() != 34) {
    throw ValidationError("inventory: expected 34 finals, got " + std::to_string(finals_.size()));
  }
  if (initial_set_.size() != initials_.size() || final_set_.size() != finals_.size()) {
    throw ValidationError("inventory: duplicate tokens in a section");
  }
  for (const std::string& f : finals_) {
    if (initial_set_.count(f)) {
      throw ValidationError("inventory: token in both sections: " + f);
    }
  }
  if (!initial_set_.count(std::string(kNullOnset))) {
    throw ValidationError("inventory: missing the explicit null-onset initial");
  }
  // Longest-match segmentation must succeed for every attested syllable.
  for (const std::string& syl : syllables_) {
    const Pinyin p = parse_pinyin(syl, *this);
    if (format_pinyin(p, false) != syl) {
      throw ValidationError("inventory: syllable does not round-trip: " + syl);
    }
  }
}

Pinyin parse_pinyin(std::string_view s, const PhonInventory& inv) {
  if (s.empty()) {
    throw ValidationError("parse_pinyin: empty syllable");
  }
  int tone = 0;
  if (std::isdigit(static_cast<unsigned char>(s.back()))) {
    tone = s.back() - '0';
    if (tone < 0 || tone > 4) {
      throw ValidationError("parse_pinyin: tone out of range in '" + std::string(s) + "'");
    }
    s.remove_suffix(1);
  }
  if (s.empty()) {
    throw ValidationError("parse_pinyin: no letters before the tone digit");
  }
  for (char c : s) {
    if (c < 'a' || c > 'z') {
      throw ValidationError("parse_pinyin: unexpected character in '" + std::string(s) + "'");
    }
  }
  std::string_view onset = kNullOnset;
  size_t best = 0;
  for (const std::string& ini : inv.initials()) {
    if (ini == kNullOnset) continue;
    if (ini.size() > best && s.substr(0, ini.size()) == ini) {
      onset = ini;
      best = ini.size();
    }
  }
  const std::string final(s.substr(best));
  if (!inv.is_final(final)) {
    throw ValidationError("parse_pinyin: '" + final + "' is not an inventory final (syllable '" + std::string(s) + "')");
  }
  return Pinyin{std::string(onset), final, tone};
}

std::optional<Pinyin> try_parse_pinyin(std::string_view s, const PhonInventory& inv) {
  try {
    return parse_pinyin(s, inv);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

std::string format_pinyin(const Pinyin& p, bool with_tone) {
  std::string out;
  if (p.onset != kNullOnset) out += p.onset;
  out += p.final;
  if (with_tone && p.tone != 0) out += static_cast<char>('0' + p.tone);
  return out;
}

std::string normalize_keyboard_pinyin(std::string_view s) {
  std::string lower = to_lower(trim(s));
  std::string out;
  for (size_t i = 0; i < lower.size();) {
    // "ü" in UTF-8 is 0xC3 0xBC; "Ü" is 0xC3 0x9C (already lowered above).
    if (i + 1 < lower.size() && static_cast<unsigned char>(lower[i]) == 0xC3 &&
        static_cast<unsigned char>(lower[i + 1]) == 0xBC) {
      out += 'v';
      i += 2;
    } else if (i + 1 < lower.size() && lower[i] == 'u' && lower[i + 1] == ':') {
      out += 'v';
      i += 2;
    } else {
      out += lower[i];
      ++i;
    }
  }
  // lue/nue are keyboard spellings of lve/nve.
  if (out.rfind("lue", 0) == 0 || out.rfind("nue", 0) == 0) {
    out[1] = 'v';
  }
  return out;
}

Regularity classify_regularity(const Pinyin& character, const Pinyin& radical) {
  const bool onset = character.onset == radical.onset;
  const bool final = character.final == radical.final;
  if (onset && final) return Regularity::kRegular;
  if (onset) return Regularity::kAlliterating;
  if (final) return Regularity::kRhyming;
  return Regularity::kIrregular;
}

namespace {

// Place/manner classes for the onset discount.
int onset_class(std::string_view o) {
  static const std::map<std::string_view, int> kClass = {
      {"b", 0}, {"p", 0}, {"m", 0}, {"f", 0},
      {"d", 1}, {"t", 1}, {"n", 1}, {"l", 1},
      {"g", 2}, {"k", 2}, {"h", 2},
      {"j", 3}, {"q", 3}, {"x", 3},
      {"zh", 4}, {"ch", 4}, {"sh", 4}, {"r", 4},
      {"z", 5}, {"c", 5}, {"s", 5},
      {"y", 6}, {"w", 7}, {kNullOnset, 8},
  };
  const auto it = kClass.find(o);
  return it == kClass.end() ? -1 : it->second;
}

}  // namespace

double phonetic_distance(const Pinyin& a, const Pinyin& b) {
  double d = 0;
  if (a.onset != b.onset) {
    const int ca = onset_class(a.onset);
    const int cb = onset_class(b.onset);
    d += (ca >= 0 && ca == cb) ? 4 : 10;
  }
  if (a.final != b.final) {
    d += (!a.final.empty() && !b.final.empty() && a.final[0] == b.final[0]) ? 4 : 10;
  }
  if (a.tone != b.tone) d += 1;
  return d;
}

}  // namespace ccn

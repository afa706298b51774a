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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "ccn/eval.hpp"
#include "ccn/lexicon.hpp"
#include "ccn/phonology.hpp"

namespace ccn::test {

inline std::string data_dir() { return CCN_DATA_DIR; }

inline PhonInventory inventory() { return PhonInventory::load(data_dir() + "/inventory.txt"); }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ccn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

struct CharSpec {
  std::string glyph, left, right, side, pinyins;
  long long freq;
};

inline std::string characters_tsv(const std::vector<CharSpec>& chars) {
  std::string out = "glyph\tleft_radical\tright_radical\tphonetic_side\tpinyins\tfrequency\n";
  for (const CharSpec& c : chars) {
    out += c.glyph + "\t" + c.left + "\t" + c.right + "\t" + c.side + "\t" + c.pinyins + "\t" +
           std::to_string(c.freq) + "\n";
  }
  return out;
}

inline std::string radicals_tsv(const std::vector<std::pair<std::string, std::string>>& radicals) {
  std::string out = "glyph\tpinyin\n";
  for (const auto& [glyph, pinyin] : radicals) out += glyph + "\t" + pinyin + "\n";
  return out;
}

// The twelve Table-1 characters around the phonetic radical 青 plus the
// worked examples 烙 and 煔. 煔 is the held-out test character.
inline Lexicon table1_lexicon(const TempDir& dir) {
  const std::vector<CharSpec> chars = {
      {"清", "氵", "青", "right", "qing1", 2000},
      {"情", "忄", "青", "right", "qing2", 3000},
      {"圊", "囗", "青", "right", "qing1", 2},
      {"晴", "日", "青", "right", "qing2", 1500},
      {"倩", "亻", "青", "right", "qian4", 300},
      {"輤", "車", "青", "right", "qian4", 1},
      {"精", "米", "青", "right", "jing1", 5000},
      {"靖", "立", "青", "right", "jing4", 400},
      {"菁", "艹", "青", "right", "jing1", 60},
      {"猜", "犭", "青", "right", "cai1", 800},
      {"靚", "青", "見", "left", "liang4", 90},
      {"靛", "青", "定", "left", "dian4", 30},
      {"烙", "火", "各", "right", "luo4", 10000},
      {"煔", "炎", "占", "right", "shan3,qian2", 2},
  };
  const std::vector<std::pair<std::string, std::string>> radicals = {
      {"青", "qing1"}, {"氵", "shui3"}, {"忄", "xin1"}, {"囗", "wei2"},  {"日", "ri4"},
      {"亻", "ren2"},  {"車", "che1"},  {"米", "mi3"},  {"立", "li4"},   {"艹", "cao3"},
      {"犭", "quan3"}, {"見", "jian4"}, {"定", "ding4"}, {"火", "huo3"}, {"各", "ge4"},
      {"炎", "yan2"},  {"占", "zhan4"},
  };
  write(dir.file("characters.tsv"), characters_tsv(chars));
  write(dir.file("radicals.tsv"), radicals_tsv(radicals));
  write(dir.file("test_chars.txt"), "煔\n");
  return Lexicon::load(dir.file("characters.tsv"), dir.file("radicals.tsv"), dir.file("test_chars.txt"),
                       inventory());
}

inline std::string codepoint_utf8(unsigned cp) {
  std::string out;
  if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

struct SyntheticSpec {
  int phonetic_radicals = 10;
  int hosts_per_radical = 12;
  int semantic_radicals = 8;
  int test_chars = 8;
  int participants = 6;
  uint64_t seed = 7;
};

struct SyntheticData {
  std::string characters, radicals, tests, human;
};

// A small lexicon with the statistical shape of the real dataset: a pool
// of phonetic radicals each hosting several characters with a mix of
// regularity types, a held-out test set of rare characters, and noisy
// participant answers over them.
inline SyntheticData synthetic_dataset(const TempDir& dir, const SyntheticSpec& spec = {}) {
  const PhonInventory inv = inventory();
  Rng rng(spec.seed);
  const auto random_syllable = [&]() {
    return parse_pinyin(inv.syllables()[rng.below(inv.syllables().size())], inv);
  };
  const auto random_tone = [&]() { return static_cast<int>(rng.below(4)) + 1; };

  unsigned next_cp = 0x4E00;
  std::vector<std::pair<std::string, std::string>> radicals;
  std::vector<Pinyin> phonetic_pinyins;
  std::vector<std::string> phonetic_glyphs, semantic_glyphs;
  for (int i = 0; i < spec.phonetic_radicals; ++i) {
    Pinyin p = random_syllable();
    p.tone = random_tone();
    const std::string glyph = codepoint_utf8(next_cp++);
    phonetic_glyphs.push_back(glyph);
    phonetic_pinyins.push_back(p);
    radicals.emplace_back(glyph, format_pinyin(p));
  }
  for (int i = 0; i < spec.semantic_radicals; ++i) {
    Pinyin p = random_syllable();
    p.tone = random_tone();
    const std::string glyph = codepoint_utf8(next_cp++);
    semantic_glyphs.push_back(glyph);
    radicals.emplace_back(glyph, format_pinyin(p));
  }

  const auto variant_of = [&](const Pinyin& base, double roll) {
    Pinyin p = base;
    p.tone = random_tone();
    if (roll < 0.45) return p;  // regular
    if (roll < 0.55) {          // alliterating: same onset, other final
      p.final = inv.finals()[rng.below(inv.finals().size())];
      return p;
    }
    if (roll < 0.80) {  // rhyming: other onset, same final
      p.onset = inv.initials()[rng.below(inv.initials().size())];
      return p;
    }
    Pinyin q = random_syllable();  // irregular-ish
    q.tone = random_tone();
    return q;
  };

  std::vector<CharSpec> chars;
  std::vector<std::string> test_glyphs;
  for (int r = 0; r < spec.phonetic_radicals; ++r) {
    for (int k = 0; k < spec.hosts_per_radical; ++k) {
      CharSpec c;
      c.glyph = codepoint_utf8(next_cp++);
      const std::string& semantic = semantic_glyphs[rng.below(semantic_glyphs.size())];
      const bool right = rng.uniform() < 0.8;
      c.left = right ? semantic : phonetic_glyphs[r];
      c.right = right ? phonetic_glyphs[r] : semantic;
      c.side = right ? "right" : "left";
      Pinyin p = variant_of(phonetic_pinyins[r], rng.uniform());
      c.pinyins = format_pinyin(p);
      if (rng.uniform() < 0.15) {
        Pinyin extra = random_syllable();
        extra.tone = random_tone();
        if (!extra.same_base(p)) c.pinyins += "," + format_pinyin(extra);
      }
      const bool is_test = k == 0 && static_cast<int>(test_glyphs.size()) < spec.test_chars;
      c.freq = is_test ? static_cast<long long>(rng.below(4)) + 1
                       : static_cast<long long>(rng.below(4000)) + 1;
      if (is_test) test_glyphs.push_back(c.glyph);
      chars.push_back(std::move(c));
    }
  }

  SyntheticData out;
  out.characters = dir.file("characters.tsv");
  out.radicals = dir.file("radicals.tsv");
  out.tests = dir.file("test_chars.txt");
  out.human = dir.file("human_answers.csv");
  write(out.characters, characters_tsv(chars));
  write(out.radicals, radicals_tsv(radicals));
  std::string tests;
  for (const std::string& g : test_glyphs) tests += g + "\n";
  write(out.tests, tests);

  // Participants guess like the paper's humans: mostly the phonetic
  // radical's pinyin, sometimes the gold reading, sometimes the semantic
  // radical or noise.
  std::map<std::string, const CharSpec*> by_glyph;
  for (const CharSpec& c : chars) by_glyph[c.glyph] = &c;
  std::map<std::string, std::string> radical_pinyin;
  for (const auto& [glyph, pinyin] : radicals) radical_pinyin[glyph] = pinyin;
  std::string csv = "participant_id,glyph,knows_character,answer_pinyin\n";
  for (int p = 0; p < spec.participants; ++p) {
    for (const std::string& glyph : test_glyphs) {
      const CharSpec& c = *by_glyph.at(glyph);
      const std::string& phonetic = c.side == "right" ? c.right : c.left;
      const std::string& semantic = c.side == "right" ? c.left : c.right;
      const double roll = rng.uniform();
      std::string answer;
      if (roll < 0.40) {
        answer = radical_pinyin.at(phonetic);
      } else if (roll < 0.65) {
        answer = split(c.pinyins, ',')[0];
      } else if (roll < 0.75) {
        answer = radical_pinyin.at(semantic);
      } else if (roll < 0.97) {
        answer = format_pinyin(Pinyin{inv.initials()[rng.below(inv.initials().size())],
                                      inv.finals()[rng.below(inv.finals().size())], random_tone()});
      } else {
        answer = "";  // skipped question
      }
      csv += "p" + std::to_string(p) + "," + glyph + ",0," + answer + "\n";
    }
  }
  write(out.human, csv);
  return out;
}

inline Lexicon load_synthetic(const SyntheticData& data) {
  return Lexicon::load(data.characters, data.radicals, data.tests, inventory());
}

}  // namespace ccn::test

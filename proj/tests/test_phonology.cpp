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

#include <doctest.h>

#include "ccn/phonology.hpp"
#include "testutil.hpp"

using namespace ccn;

TEST_CASE("inventory loads with the expected shape") {
  const PhonInventory inv = test::inventory();
  CHECK(inv.initials().size() == 24);
  CHECK(inv.finals().size() == 34);
  CHECK(inv.is_initial("-"));
  CHECK(inv.is_initial("zh"));
  CHECK(inv.is_final("uo"));
  CHECK(!inv.is_final("zh"));
  for (const std::string& f : inv.finals()) CHECK(!inv.is_initial(f));
  CHECK(inv.syllables().size() > 380);
}

TEST_CASE("parse_pinyin segments onset, final and tone") {
  const PhonInventory inv = test::inventory();
  const Pinyin luo = parse_pinyin("luo4", inv);
  CHECK(luo.onset == "l");
  CHECK(luo.final == "uo");
  CHECK(luo.tone == 4);

  const Pinyin e = parse_pinyin("e", inv);
  CHECK(e.onset == kNullOnset);
  CHECK(e.final == "e");
  CHECK(e.tone == 0);

  // longest match: zh beats z
  const Pinyin zhan = parse_pinyin("zhan1", inv);
  CHECK(zhan.onset == "zh");
  CHECK(zhan.final == "an");
  CHECK(zhan.tone == 1);
}

TEST_CASE("parse_pinyin rejects malformed syllables") {
  const PhonInventory inv = test::inventory();
  CHECK_THROWS_AS(parse_pinyin("", inv), ValidationError);
  CHECK_THROWS_AS(parse_pinyin("4", inv), ValidationError);
  CHECK_THROWS_AS(parse_pinyin("luo9", inv), ValidationError);
  CHECK_THROWS_AS(parse_pinyin("brzz", inv), ValidationError);
  CHECK_THROWS_AS(parse_pinyin("zh", inv), ValidationError);  // empty remainder
  CHECK(!try_parse_pinyin("b!a", inv));
}

TEST_CASE("format_pinyin renders onset+final+tone") {
  CHECK(format_pinyin(Pinyin{"l", "uo", 4}, true) == "luo4");
  CHECK(format_pinyin(Pinyin{std::string(kNullOnset), "an", 0}, true) == "an");
  CHECK(format_pinyin(Pinyin{"q", "ing", 1}, false) == "qing");
  CHECK(format_pinyin(Pinyin{"q", "ing", 0}, true) == "qing");
}

TEST_CASE("parse/format round-trips over the full inventory product") {
  const PhonInventory inv = test::inventory();
  for (const std::string& onset : inv.initials()) {
    for (const std::string& final : inv.finals()) {
      for (int tone : PhonInventory::tones()) {
        const Pinyin p{onset, final, tone};
        const std::string s = format_pinyin(p, true);
        const Pinyin q = parse_pinyin(s, inv);
        CAPTURE(s);
        CHECK(q == p);
      }
    }
  }
}

TEST_CASE("keyboard normalization") {
  CHECK(normalize_keyboard_pinyin(" LV3 ") == "lv3");
  CHECK(normalize_keyboard_pinyin("l\xC3\xBC") == "lv");
  CHECK(normalize_keyboard_pinyin("nu:3") == "nv3");
  CHECK(normalize_keyboard_pinyin("lue4") == "lve4");
  CHECK(normalize_keyboard_pinyin("nue") == "nve");
  CHECK(normalize_keyboard_pinyin("jue2") == "jue2");  // j/q/x/y keep ue
}

TEST_CASE("classify_regularity matches the four worked examples") {
  const PhonInventory inv = test::inventory();
  const Pinyin qing = parse_pinyin("qing1", inv);
  CHECK(classify_regularity(parse_pinyin("qing2", inv), qing) == Regularity::kRegular);
  CHECK(classify_regularity(parse_pinyin("qian4", inv), qing) == Regularity::kAlliterating);
  CHECK(classify_regularity(parse_pinyin("jing1", inv), qing) == Regularity::kRhyming);
  CHECK(classify_regularity(parse_pinyin("cai1", inv), qing) == Regularity::kIrregular);
  CHECK(classify_regularity(parse_pinyin("liang4", inv), qing) == Regularity::kIrregular);
}

TEST_CASE("regularity is tone-blind and reflexive-regular") {
  const PhonInventory inv = test::inventory();
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Pinyin a = parse_pinyin(inv.syllables()[rng.below(inv.syllables().size())], inv);
    Pinyin b = parse_pinyin(inv.syllables()[rng.below(inv.syllables().size())], inv);
    a.tone = static_cast<int>(rng.below(5));
    b.tone = static_cast<int>(rng.below(5));
    const Regularity r = classify_regularity(a, b);
    Pinyin a2 = a, b2 = b;
    a2.tone = static_cast<int>(rng.below(5));
    b2.tone = static_cast<int>(rng.below(5));
    CHECK(classify_regularity(a2, b2) == r);
    CHECK(classify_regularity(a, a) == Regularity::kRegular);
  }
}

TEST_CASE("phonetic distance is a symmetric premetric with the paper ordering") {
  const PhonInventory inv = test::inventory();
  const Pinyin luo4 = parse_pinyin("luo4", inv);
  const Pinyin huo3 = parse_pinyin("huo3", inv);
  const Pinyin ge4 = parse_pinyin("ge4", inv);
  CHECK(phonetic_distance(luo4, luo4) == 0);
  CHECK(phonetic_distance(luo4, huo3) < phonetic_distance(luo4, ge4));

  Rng rng(3);
  std::vector<Pinyin> sample;
  for (int i = 0; i < 20; ++i) {
    Pinyin p = parse_pinyin(inv.syllables()[rng.below(inv.syllables().size())], inv);
    p.tone = static_cast<int>(rng.below(5));
    sample.push_back(p);
  }
  for (const Pinyin& a : sample) {
    CHECK(phonetic_distance(a, a) == 0);
    for (const Pinyin& b : sample) {
      CHECK(phonetic_distance(a, b) >= 0);
      CHECK(phonetic_distance(a, b) == phonetic_distance(b, a));
      if (!(a == b)) CHECK(phonetic_distance(a, b) > 0);
    }
  }
  // class discounts: n is closer to l (same class) than to g
  CHECK(phonetic_distance(parse_pinyin("na", inv), parse_pinyin("la", inv)) <
        phonetic_distance(parse_pinyin("na", inv), parse_pinyin("ga", inv)));
}

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

#include <set>

#include "ccn/neural/beam.hpp"
#include "ccn/neural/train.hpp"

using namespace ccn;
using neural::TrainConfig;
using neural::Transformer;
using neural::TransformerConfig;

namespace {

// 50 distinct sequences generated by a fixed token-mapping rule, so a dev
// split held out of training still improves together with memorization.
std::vector<neural::IdExample> rule_corpus(int count, uint64_t seed) {
  Rng rng(seed);
  std::set<std::vector<int>> seen;
  std::vector<neural::IdExample> corpus;
  while (static_cast<int>(corpus.size()) < count) {
    const int x = 4 + static_cast<int>(rng.below(10));
    const int y = 4 + static_cast<int>(rng.below(10));
    const int z = 4 + static_cast<int>(rng.below(10));
    const std::vector<int> src = {1, x, y, z, 2};
    if (!seen.insert(src).second) continue;
    // rule: emit the mapped last and first source tokens
    const std::vector<int> tgt = {1, z + 10, x + 10, 2};
    corpus.emplace_back(src, tgt);
  }
  return corpus;
}

TransformerConfig paper_config(int src_vocab, int tgt_vocab, int max_seq) {
  TransformerConfig cfg;
  cfg.source_vocab = src_vocab;
  cfg.target_vocab = tgt_vocab;
  cfg.max_sequence_length = max_seq;
  return cfg;  // 2+2 layers, 4 heads, 128 wide, 256 ffn, dropout 0.1
}

TransformerConfig tiny_config(int src_vocab, int tgt_vocab) {
  TransformerConfig cfg;
  cfg.model_width = 16;
  cfg.feedforward_width = 32;
  cfg.heads = 2;
  cfg.max_sequence_length = 12;
  cfg.source_vocab = src_vocab;
  cfg.target_vocab = tgt_vocab;
  return cfg;
}

}  // namespace

TEST_CASE("overfit sanity: 50 examples memorized within 200 epochs") {
  const auto corpus = rule_corpus(50, 7);
  Transformer<float> model(paper_config(14, 24, 10), 11);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.patience = 1000000;    // never stop early...
  cfg.restore_best = false;  // ...and keep the final epoch, not the best-dev one
  cfg.warmup_steps = 2000;   // stretch the schedule over the ~600 steps this corpus yields
  cfg.seed = 5;
  const auto outcome = neural::train_model(model, corpus, cfg);
  REQUIRE(outcome.history.size() == 200);

  // loss collapses
  CHECK(outcome.history.back().train_loss < 0.1 * outcome.history.front().train_loss);

  // exact-sequence match on the training split via greedy decoding
  const std::set<size_t> dev(outcome.dev_indices.begin(), outcome.dev_indices.end());
  int total = 0, exact = 0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (dev.count(i)) continue;
    ++total;
    const auto hyps = neural::beam_search(model, corpus[i].first, 1, 6);
    if (!hyps.empty() && hyps[0].tokens == corpus[i].second) ++exact;
  }
  CAPTURE(exact);
  CAPTURE(total);
  CHECK(static_cast<double>(exact) / total > 0.95);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  const auto corpus = rule_corpus(30, 3);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 21;

  Transformer<float> a(tiny_config(14, 24), 9);
  Transformer<float> b(tiny_config(14, 24), 9);
  const auto oa = neural::train_model(a, corpus, cfg);
  const auto ob = neural::train_model(b, corpus, cfg);

  REQUIRE(oa.history.size() == ob.history.size());
  for (size_t e = 0; e < oa.history.size(); ++e) {
    CHECK(oa.history[e].train_loss == ob.history[e].train_loss);  // bitwise
    CHECK(oa.history[e].dev_loss == ob.history[e].dev_loss);
    CHECK(oa.history[e].lr == ob.history[e].lr);
  }
  bool identical = true;
  std::vector<neural::Mat<float>> pa;
  a.for_each_param([&](const std::string&, neural::Tensor<float>& t) { pa.push_back(t.w); });
  size_t i = 0;
  b.for_each_param([&](const std::string&, neural::Tensor<float>& t) {
    if (!(pa[i++].array() == t.w.array()).all()) identical = false;
  });
  CHECK(identical);

  Transformer<float> c(tiny_config(14, 24), 9);
  TrainConfig other = cfg;
  other.seed = 22;
  const auto oc = neural::train_model(c, corpus, other);
  CHECK(oa.history[0].train_loss != oc.history[0].train_loss);
}

TEST_CASE("early stopping keeps the best dev epoch") {
  const auto corpus = rule_corpus(40, 13);
  Transformer<float> model(tiny_config(14, 24), 3);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.patience = 3;
  cfg.seed = 77;
  const auto outcome = neural::train_model(model, corpus, cfg);
  CHECK(outcome.history.size() <= 40);
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  for (const auto& e : outcome.history) {
    if (e.dev_loss < best) {
      best = e.dev_loss;
      best_epoch = e.epoch;
    }
  }
  CHECK(outcome.best_epoch == best_epoch);
  CHECK(outcome.best_dev_loss == doctest::Approx(best));
  // stopped exactly `patience` epochs after the best one, or ran out
  if (outcome.history.size() < 40) {
    CHECK(outcome.history.back().epoch == best_epoch + cfg.patience);
  }
  // learning rate follows the schedule of the last optimizer step
  long long steps = 0;
  const long long batches_per_epoch =
      (static_cast<long long>(corpus.size() - outcome.dev_indices.size()) + cfg.batch_size - 1) /
      cfg.batch_size;
  for (const auto& e : outcome.history) {
    steps += batches_per_epoch;
    CHECK(e.lr == doctest::Approx(neural::transformer_lr(steps, 16, cfg.warmup_steps)));
  }
}

TEST_CASE("training rejects bad inputs and non-finite losses") {
  Transformer<float> model(tiny_config(14, 24), 3);
  TrainConfig cfg;
  CHECK_THROWS_AS(neural::train_model(model, {}, cfg), ValidationError);

  TrainConfig bad = cfg;
  bad.dev_fraction = 0;
  CHECK_THROWS_AS(neural::train_model(model, rule_corpus(10, 1), bad), ValidationError);

  Transformer<float> poisoned(tiny_config(14, 24), 3);
  poisoned.for_each_param([&](const std::string& name, neural::Tensor<float>& t) {
    if (name == "out_proj.weight") t.w(0, 0) = std::numeric_limits<float>::quiet_NaN();
  });
  CHECK_THROWS_AS(neural::train_model(poisoned, rule_corpus(10, 1), cfg), RunError);
}

TEST_CASE("lr schedule rises through warmup then decays") {
  const int width = 128, warmup = 400;
  CHECK(neural::transformer_lr(1, width, warmup) ==
        doctest::Approx(std::pow(128.0, -0.5) * 1.0 * std::pow(400.0, -1.5)));
  CHECK(neural::transformer_lr(400, width, warmup) ==
        doctest::Approx(std::pow(128.0, -0.5) * std::pow(400.0, -0.5)));
  CHECK(neural::transformer_lr(399, width, warmup) < neural::transformer_lr(400, width, warmup));
  CHECK(neural::transformer_lr(401, width, warmup) < neural::transformer_lr(400, width, warmup));
  CHECK(neural::transformer_lr(10000, width, warmup) ==
        doctest::Approx(std::pow(128.0, -0.5) * std::pow(10000.0, -0.5)));
}

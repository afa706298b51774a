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

#include <cmath>
#include <map>

#include "ccn/neural/beam.hpp"
#include "ccn/neural/transformer.hpp"

using namespace ccn;
using neural::Transformer;
using neural::TransformerConfig;

namespace {

using Matd = neural::Mat<double>;
using Params = std::map<std::string, Matd>;

template <typename S>
Params snapshot(Transformer<S>& model) {
  Params out;
  model.for_each_param([&](const std::string& name, neural::Tensor<S>& t) {
    out[name] = t.w.template cast<double>();
  });
  return out;
}

// ---------------------------------------------------------------------------
// A from-first-principles reimplementation of the forward pass with plain
// loops, used as the oracle for the library forward.

std::vector<double> mat_vec(const Matd& w, const std::vector<double>& x) {
  std::vector<double> y(static_cast<size_t>(w.cols()), 0.0);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      y[static_cast<size_t>(c)] += x[static_cast<size_t>(r)] * w(r, c);
    }
  }
  return y;
}

std::vector<double> add_bias(std::vector<double> x, const Matd& b) {
  for (size_t i = 0; i < x.size(); ++i) x[i] += b(0, static_cast<Eigen::Index>(i));
  return x;
}

std::vector<std::vector<double>> linear(const Params& p, const std::string& prefix,
                                        const std::vector<std::vector<double>>& x) {
  std::vector<std::vector<double>> y;
  for (const auto& row : x) y.push_back(add_bias(mat_vec(p.at(prefix + "weight"), row), p.at(prefix + "bias")));
  return y;
}

std::vector<std::vector<double>> layernorm(const Params& p, const std::string& prefix,
                                           const std::vector<std::vector<double>>& x) {
  const Matd& gamma = p.at(prefix + "gamma");
  const Matd& beta = p.at(prefix + "beta");
  std::vector<std::vector<double>> y = x;
  for (auto& row : y) {
    double mu = 0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(row.size());
    double var = 0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(row.size());
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (size_t i = 0; i < row.size(); ++i) {
      row[i] = (row[i] - mu) * inv * gamma(0, static_cast<Eigen::Index>(i)) +
               beta(0, static_cast<Eigen::Index>(i));
    }
  }
  return y;
}

// Single-head attention (the oracle model uses heads=1).
std::vector<std::vector<double>> attention(const Params& p, const std::string& prefix,
                                           const std::vector<std::vector<double>>& q_in,
                                           const std::vector<std::vector<double>>& kv_in, bool causal) {
  const auto Q = linear(p, prefix + "q.", q_in);
  const auto K = linear(p, prefix + "k.", kv_in);
  const auto V = linear(p, prefix + "v.", kv_in);
  const size_t d = Q[0].size();
  std::vector<std::vector<double>> ctx(Q.size(), std::vector<double>(d, 0.0));
  for (size_t i = 0; i < Q.size(); ++i) {
    std::vector<double> scores(K.size(), -1e30);
    double mx = -1e300;
    for (size_t j = 0; j < K.size(); ++j) {
      if (causal && j > i) continue;
      double dot = 0;
      for (size_t c = 0; c < d; ++c) dot += Q[i][c] * K[j][c];
      scores[j] = dot / std::sqrt(static_cast<double>(d));
      mx = std::max(mx, scores[j]);
    }
    double z = 0;
    for (double& s : scores) {
      s = std::exp(s - mx);
      z += s;
    }
    for (size_t j = 0; j < K.size(); ++j) {
      for (size_t c = 0; c < d; ++c) ctx[i][c] += scores[j] / z * V[j][c];
    }
  }
  return linear(p, prefix + "o.", ctx);
}

std::vector<std::vector<double>> add(const std::vector<std::vector<double>>& a,
                                     const std::vector<std::vector<double>>& b) {
  auto out = a;
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < a[i].size(); ++j) out[i][j] += b[i][j];
  }
  return out;
}

std::vector<std::vector<double>> embed(const Params& p, const std::string& table,
                                       const std::vector<int>& ids, int width) {
  const Matd& E = p.at(table);
  std::vector<std::vector<double>> x;
  for (size_t t = 0; t < ids.size(); ++t) {
    std::vector<double> row(static_cast<size_t>(width));
    for (int c = 0; c < width; ++c) {
      const double angle =
          static_cast<double>(t) / std::pow(10000.0, static_cast<double>(c - c % 2) / width);
      const double pe = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
      row[static_cast<size_t>(c)] = E(ids[t], c) * std::sqrt(static_cast<double>(width)) + pe;
    }
    x.push_back(std::move(row));
  }
  return x;
}

std::vector<std::vector<double>> ffn(const Params& p, const std::string& prefix,
                                     const std::vector<std::vector<double>>& x) {
  auto h = linear(p, prefix + "lin1.", x);
  for (auto& row : h) {
    for (double& v : row) v = std::max(0.0, v);
  }
  return linear(p, prefix + "lin2.", h);
}

Matd hand_forward(const Params& p, const TransformerConfig& cfg, const std::vector<int>& src,
                  const std::vector<int>& tgt_prefix) {
  auto h = embed(p, "src_embed", src, cfg.model_width);
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    const std::string pre = "enc" + std::to_string(l) + ".";
    h = layernorm(p, pre + "ln1.", add(h, attention(p, pre + "self.", h, h, false)));
    h = layernorm(p, pre + "ln2.", add(h, ffn(p, pre + "ff.", h)));
  }
  auto y = embed(p, "tgt_embed", tgt_prefix, cfg.model_width);
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    const std::string pre = "dec" + std::to_string(l) + ".";
    y = layernorm(p, pre + "ln1.", add(y, attention(p, pre + "self.", y, y, true)));
    y = layernorm(p, pre + "ln2.", add(y, attention(p, pre + "cross.", y, h, false)));
    y = layernorm(p, pre + "ln3.", add(y, ffn(p, pre + "ff.", y)));
  }
  const auto logits = linear(p, "out_proj.", y);
  Matd out(static_cast<Eigen::Index>(logits.size()), cfg.target_vocab);
  for (size_t r = 0; r < logits.size(); ++r) {
    double mx = -1e300;
    for (double v : logits[r]) mx = std::max(mx, v);
    double z = 0;
    for (double v : logits[r]) z += std::exp(v - mx);
    for (int c = 0; c < cfg.target_vocab; ++c) {
      out(static_cast<Eigen::Index>(r), c) = logits[r][static_cast<size_t>(c)] - mx - std::log(z);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("log-probabilities normalize and match the hand-computed micro model") {
  TransformerConfig cfg;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.heads = 1;
  cfg.model_width = 4;
  cfg.feedforward_width = 8;
  cfg.dropout = 0.0;
  cfg.max_sequence_length = 8;
  cfg.source_vocab = 3;
  cfg.target_vocab = 3;
  Transformer<double> model(cfg, 1234);

  const std::vector<int> src = {0, 1, 2};
  const std::vector<int> prefix = {1, 2, 0};
  const Matd lp = model.forward_logprobs(src, prefix);
  REQUIRE(lp.rows() == 3);
  REQUIRE(lp.cols() == 3);
  for (Eigen::Index r = 0; r < lp.rows(); ++r) {
    CHECK(lp.row(r).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  const Matd oracle = hand_forward(snapshot(model), cfg, src, prefix);
  for (Eigen::Index r = 0; r < lp.rows(); ++r) {
    for (Eigen::Index c = 0; c < lp.cols(); ++c) {
      CHECK(lp(r, c) == doctest::Approx(oracle(r, c)).epsilon(1e-10));
    }
  }
}

TEST_CASE("hand oracle agrees on the two-layer configuration as well") {
  TransformerConfig cfg;
  cfg.encoder_layers = 2;
  cfg.decoder_layers = 2;
  cfg.heads = 1;
  cfg.model_width = 6;
  cfg.feedforward_width = 12;
  cfg.dropout = 0.0;
  cfg.max_sequence_length = 8;
  cfg.source_vocab = 5;
  cfg.target_vocab = 4;
  Transformer<double> model(cfg, 77);
  const std::vector<int> src = {4, 0, 2, 1};
  const std::vector<int> prefix = {1, 3};
  const Matd lp = model.forward_logprobs(src, prefix);
  const Matd oracle = hand_forward(snapshot(model), cfg, src, prefix);
  for (Eigen::Index r = 0; r < lp.rows(); ++r) {
    for (Eigen::Index c = 0; c < lp.cols(); ++c) {
      CHECK(lp(r, c) == doctest::Approx(oracle(r, c)).epsilon(1e-10));
    }
  }
}

namespace {

TransformerConfig gradcheck_config() {
  TransformerConfig cfg;
  cfg.encoder_layers = 2;
  cfg.decoder_layers = 2;
  cfg.heads = 2;
  cfg.model_width = 8;
  cfg.feedforward_width = 16;
  cfg.dropout = 0.0;
  cfg.max_sequence_length = 10;
  cfg.source_vocab = 7;
  cfg.target_vocab = 6;
  return cfg;
}

Transformer<double>::Batch gradcheck_batch() {
  Transformer<double>::Batch batch;
  batch.src = {{1, 4, 5}, {1, 6, 4, 5, 0}, {1, 5}};
  batch.tgt = {{1, 4, 5, 2}, {1, 3, 2}, {1, 5, 4, 3, 2}};
  return batch;
}

struct GradCheckResult {
  double max_rel_err = 0;
  std::string worst;
};

GradCheckResult gradient_check(Transformer<double>& model, const Transformer<double>::Batch& batch,
                               double h) {
  model.zero_grad();
  model.forward_backward(batch, nullptr);
  GradCheckResult result;
  Rng pick(2024);
  model.for_each_param([&](const std::string& name, neural::Tensor<double>& t) {
    std::vector<Eigen::Index> coords;
    if (t.w.size() <= 24) {
      for (Eigen::Index i = 0; i < t.w.size(); ++i) coords.push_back(i);
    } else {
      for (int k = 0; k < 8; ++k) {
        coords.push_back(static_cast<Eigen::Index>(pick.below(static_cast<uint64_t>(t.w.size()))));
      }
    }
    for (Eigen::Index i : coords) {
      const double saved = t.w(i);
      t.w(i) = saved + h;
      const double up = model.evaluate_loss(batch).loss;
      t.w(i) = saved - h;
      const double down = model.evaluate_loss(batch).loss;
      t.w(i) = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = t.g(i);
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst = name;
      }
    }
  });
  return result;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  Transformer<double> model(gradcheck_config(), 31337);
  const auto result = gradient_check(model, gradcheck_batch(), 1e-4);
  CAPTURE(result.worst);
  CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("gradient of the loss w.r.t. logits is softmax minus one-hot") {
  TransformerConfig cfg = gradcheck_config();
  Transformer<double> model(cfg, 99);
  Transformer<double>::Batch batch;
  batch.src = {{1, 4, 5}};
  batch.tgt = {{1, 4, 3, 2}};
  model.zero_grad();
  model.forward_backward(batch, nullptr);

  // the output bias gradient is the column sum of dlogits, which the
  // closed form predicts from the forward probabilities alone
  const Matd lp = model.forward_logprobs(batch.src[0], {1, 4, 3});
  Eigen::RowVectorXd expected = Eigen::RowVectorXd::Zero(cfg.target_vocab);
  const int gold[] = {4, 3, 2};
  const double inv = 1.0 / 3.0;
  for (int r = 0; r < 3; ++r) {
    expected += lp.row(r).array().exp().matrix() * inv;
    expected(gold[r]) -= inv;
  }
  model.for_each_param([&](const std::string& name, neural::Tensor<double>& t) {
    if (name != "out_proj.bias") return;
    for (int c = 0; c < cfg.target_vocab; ++c) {
      CHECK(t.g(0, c) == doctest::Approx(expected(c)).epsilon(1e-9));
    }
  });
}

TEST_CASE("zero output projection blocks every upstream gradient") {
  Transformer<double> model(gradcheck_config(), 7);
  model.for_each_param([&](const std::string& name, neural::Tensor<double>& t) {
    if (name == "out_proj.weight") t.w.setZero();
  });
  model.zero_grad();
  model.forward_backward(gradcheck_batch(), nullptr);
  model.for_each_param([&](const std::string& name, neural::Tensor<double>& t) {
    if (name == "src_embed" || name == "tgt_embed") {
      CHECK(t.g.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    }
    if (name == "out_proj.weight") {
      CHECK(t.g.cwiseAbs().maxCoeff() > 0);  // the projection itself still learns
    }
  });
}

TEST_CASE("uniform and one-hot loss closed forms") {
  TransformerConfig cfg = gradcheck_config();
  Transformer<double> model(cfg, 11);
  model.for_each_param([&](const std::string& name, neural::Tensor<double>& t) {
    if (name == "out_proj.weight" || name == "out_proj.bias") t.w.setZero();
  });
  Transformer<double>::Batch batch;
  batch.src = {{1, 4}};
  batch.tgt = {{1, 3, 4, 2}};
  CHECK(model.evaluate_loss(batch).loss ==
        doctest::Approx(std::log(static_cast<double>(cfg.target_vocab))).epsilon(1e-9));

  model.for_each_param([&](const std::string& name, neural::Tensor<double>& t) {
    if (name == "out_proj.bias") {
      t.w(0, 3) = 50;  // force probability ~1 on token 3
    }
  });
  Transformer<double>::Batch hot;
  hot.src = {{1, 4}};
  hot.tgt = {{1, 3, 3, 3}};
  CHECK(model.evaluate_loss(hot).loss == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("padding and causal masks isolate positions") {
  TransformerConfig cfg = gradcheck_config();
  Transformer<double> model(cfg, 5150);

  // batched forward equals isolated single-example forwards
  Transformer<double>::Batch batch;
  batch.src = {{1, 4, 5, 6, 3}, {1, 5}, {1, 6, 3}};
  batch.tgt = {{1, 4, 2}, {1, 5, 4, 3, 2}, {1, 2}};
  neural::EncoderWork<double> ew;
  neural::DecoderWork<double> dw;
  model.evaluate_loss(batch, ew, dw);
  for (size_t b = 0; b < batch.src.size(); ++b) {
    const std::vector<int> prefix(batch.tgt[b].begin(), batch.tgt[b].end() - 1);
    const Matd lone = model.forward_logprobs(batch.src[b], prefix);
    for (size_t t = 0; t < prefix.size(); ++t) {
      for (int c = 0; c < cfg.target_vocab; ++c) {
        CHECK(dw.logprobs(static_cast<Eigen::Index>(b * static_cast<size_t>(dw.padded_len) + t), c) ==
              doctest::Approx(lone(static_cast<Eigen::Index>(t), c)).epsilon(1e-9));
      }
    }
  }

  // decoder outputs at position t ignore later prefix tokens
  const std::vector<int> src = {1, 4, 5};
  const Matd short_lp = model.forward_logprobs(src, {1, 3});
  const Matd long_lp = model.forward_logprobs(src, {1, 3, 4, 5});
  for (Eigen::Index r = 0; r < short_lp.rows(); ++r) {
    for (Eigen::Index c = 0; c < short_lp.cols(); ++c) {
      CHECK(short_lp(r, c) == doctest::Approx(long_lp(r, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("construction is deterministic and counts parameters correctly") {
  const TransformerConfig cfg = gradcheck_config();
  Transformer<double> a(cfg, 42), b(cfg, 42), c(cfg, 43);
  const Params pa = snapshot(a), pb = snapshot(b), pc = snapshot(c);
  CHECK(pa == pb);
  CHECK(pa != pc);

  const int d = cfg.model_width, ff = cfg.feedforward_width;
  const size_t attn = 4 * (static_cast<size_t>(d) * d + d);
  const size_t ln = 2 * static_cast<size_t>(d);
  const size_t ffn_params = static_cast<size_t>(d) * ff + ff + static_cast<size_t>(ff) * d + d;
  size_t expected = static_cast<size_t>(cfg.source_vocab) * d + static_cast<size_t>(cfg.target_vocab) * d;
  expected += static_cast<size_t>(cfg.encoder_layers) * (attn + ln + ffn_params + ln);
  expected += static_cast<size_t>(cfg.decoder_layers) * (attn + ln + attn + ln + ffn_params + ln);
  expected += static_cast<size_t>(d) * cfg.target_vocab + cfg.target_vocab;
  CHECK(a.parameter_count() == expected);

  CHECK_THROWS_AS(Transformer<double>(TransformerConfig{2, 2, 3, 8, 16, 0.1, 8, 5, 5}, 1),
                  ValidationError);
}

// ---------------------------------------------------------------------------
// beam search

namespace {

struct Enumerated {
  std::vector<int> tokens;  // incl Begin
  double score;
};

void enumerate_all(const Transformer<double>& model, const Transformer<double>::Encoded& enc,
                   std::vector<int>& prefix, double score, int remaining, int end_id,
                   std::vector<Enumerated>& out) {
  if (remaining == 0) {
    out.push_back({prefix, score});
    return;
  }
  const neural::Mat<double> lp = model.decode_logprobs(enc, prefix);
  const Eigen::Index last = lp.rows() - 1;
  for (int tok = 0; tok < lp.cols(); ++tok) {
    prefix.push_back(tok);
    const double s = score + lp(last, tok);
    if (tok == end_id) {
      out.push_back({prefix, s});
    } else {
      enumerate_all(model, enc, prefix, s, remaining - 1, end_id, out);
    }
    prefix.pop_back();
  }
}

std::vector<int> greedy_decode(const Transformer<double>& model, const std::vector<int>& src,
                               int max_len, int begin_id, int end_id, double* score_out) {
  const auto enc = model.encode(src);
  std::vector<int> tokens = {begin_id};
  double score = 0;
  for (int step = 0; step < max_len; ++step) {
    const neural::Mat<double> lp = model.decode_logprobs(enc, tokens);
    const Eigen::Index last = lp.rows() - 1;
    int best = 0;
    for (int tok = 1; tok < lp.cols(); ++tok) {
      if (lp(last, tok) > lp(last, best)) best = tok;
    }
    tokens.push_back(best);
    score += lp(last, best);
    if (best == end_id) break;
  }
  if (score_out) *score_out = score;
  return tokens;
}

}  // namespace

TEST_CASE("beam width 1 is greedy decoding") {
  TransformerConfig cfg = gradcheck_config();
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Transformer<double> model(cfg, seed);
    const std::vector<int> src = {1, 4, 5};
    double greedy_score = 0;
    const auto greedy = greedy_decode(model, src, 6, 1, 2, &greedy_score);
    const auto beams = neural::beam_search(model, src, 1, 6, 1, 2);
    REQUIRE(!beams.empty());
    CHECK(beams[0].tokens == greedy);
    CHECK(beams[0].score == doctest::Approx(greedy_score).epsilon(1e-9));
  }
}

TEST_CASE("exhaustive beam equals brute-force enumeration on 20 seeded models") {
  TransformerConfig cfg;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.heads = 2;
  cfg.model_width = 8;
  cfg.feedforward_width = 12;
  cfg.dropout = 0.0;
  cfg.max_sequence_length = 8;
  cfg.source_vocab = 5;
  cfg.target_vocab = 6;
  const int max_len = 4;
  const int beam_width = 6 * 6 * 6 * 6;  // |V|^L keeps every path
  for (uint64_t seed = 100; seed < 120; ++seed) {
    Transformer<double> model(cfg, seed);
    const std::vector<int> src = {1, 3, 4};
    const auto enc = model.encode(src);
    std::vector<Enumerated> all;
    std::vector<int> prefix = {1};
    enumerate_all(model, enc, prefix, 0.0, max_len, 2, all);
    std::sort(all.begin(), all.end(), [](const Enumerated& a, const Enumerated& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.tokens < b.tokens;
    });
    const auto beams = neural::beam_search(model, src, beam_width, max_len, 1, 2);
    REQUIRE(beams.size() == std::min(all.size(), static_cast<size_t>(beam_width)));
    for (size_t i = 0; i < beams.size(); ++i) {
      CHECK(beams[i].tokens == all[i].tokens);
      CHECK(beams[i].score == doctest::Approx(all[i].score).epsilon(1e-9));
    }
  }
}

TEST_CASE("beam scores are non-increasing and beat greedy at width 3") {
  TransformerConfig cfg = gradcheck_config();
  for (uint64_t seed = 500; seed < 520; ++seed) {
    Transformer<double> model(cfg, seed);
    const std::vector<int> src = {1, 4, 6, 3};
    const auto beams = neural::beam_search(model, src, 3, 8, 1, 2);
    REQUIRE(!beams.empty());
    for (size_t i = 1; i < beams.size(); ++i) CHECK(beams[i - 1].score >= beams[i].score);
    double greedy_score = 0;
    greedy_decode(model, src, 8, 1, 2, &greedy_score);
    CHECK(beams[0].score >= greedy_score - 1e-9);
  }
}

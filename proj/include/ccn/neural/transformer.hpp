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

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ccn/common.hpp"

namespace ccn::neural {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct TransformerConfig {
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int model_width = 128;
  int feedforward_width = 256;
  double dropout = 0.1;
  int max_sequence_length = 32;
  int source_vocab = 0;
  int target_vocab = 0;

  void validate() const {
    if (model_width <= 0 || heads <= 0 || model_width % heads != 0) {
      throw ValidationError("transformer config: model_width must be a positive multiple of heads");
    }
    if (dropout < 0 || dropout >= 1) {
      throw ValidationError("transformer config: dropout must be in [0,1)");
    }
    if (source_vocab <= 0 || target_vocab <= 0) {
      throw ValidationError("transformer config: vocab sizes must be set");
    }
  }
};

// lr = width^(-1/2) * min(step^(-1/2), step * warmup^(-3/2))
inline double transformer_lr(long long step, int width, int warmup) {
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return 1.0 / std::sqrt(static_cast<double>(width)) *
         std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

template <typename S>
Mat<S> sinusoidal_positions(int len, int width) {
  Mat<S> pe(len, width);
  for (int pos = 0; pos < len; ++pos) {
    for (int i = 0; i < width; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / width);
      pe(pos, i) = static_cast<S>(std::sin(angle));
      if (i + 1 < width) pe(pos, i + 1) = static_cast<S>(std::cos(angle));
    }
  }
  return pe;
}

// Row-wise numerically stable log-softmax.
template <typename S>
void log_softmax_rows_inplace(Mat<S>& x) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mx = x.row(r).maxCoeff();
    const S lse = mx + std::log((x.row(r).array() - mx).exp().sum());
    x.row(r).array() -= lse;
  }
}

template <typename S>
struct Tensor {
  Mat<S> w;
  Mat<S> g;

  void setup(Eigen::Index rows, Eigen::Index cols) {
    w.setZero(rows, cols);
    g.setZero(rows, cols);
  }
};

template <typename S>
struct LinearLayer {
  Tensor<S> weight;  // [in, out]
  Tensor<S> bias;    // [1, out]

  void setup(int in, int out) {
    weight.setup(in, out);
    bias.setup(1, out);
  }
};

template <typename S>
struct LayerNormLayer {
  Tensor<S> gamma;  // [1, d]
  Tensor<S> beta;   // [1, d]

  void setup(int d) {
    gamma.setup(1, d);
    gamma.w.setOnes();
    beta.setup(1, d);
  }
};

template <typename S>
struct AttentionBlock {
  LinearLayer<S> q, k, v, o;

  void setup(int d) {
    q.setup(d, d);
    k.setup(d, d);
    v.setup(d, d);
    o.setup(d, d);
  }
};

template <typename S>
struct FeedForward {
  LinearLayer<S> lin1, lin2;

  void setup(int d, int ff) {
    lin1.setup(d, ff);
    lin2.setup(ff, d);
  }
};

template <typename S>
struct EncoderLayerP {
  AttentionBlock<S> self;
  LayerNormLayer<S> ln1;
  FeedForward<S> ff;
  LayerNormLayer<S> ln2;
};

template <typename S>
struct DecoderLayerP {
  AttentionBlock<S> self;
  LayerNormLayer<S> ln1;
  AttentionBlock<S> cross;
  LayerNormLayer<S> ln2;
  FeedForward<S> ff;
  LayerNormLayer<S> ln3;
};

// ---------------------------------------------------------------------------
// Per-batch caches recorded by the forward pass for exact reverse-mode
// gradients.

template <typename S>
struct DropoutCache {
  Mat<S> mask;
  bool active = false;
};

template <typename S>
struct LayerNormCache {
  Mat<S> xhat;
  Vec<S> inv_std;
};

template <typename S>
struct AttentionCache {
  Mat<S> q_in, kv_in;
  Mat<S> Q, K, V;
  std::vector<Mat<S>> attn;  // indexed b*heads + h, each [Lq, Lk]
  Mat<S> ctx;
};

template <typename S>
struct FfnCache {
  Mat<S> input, pre_act, hidden;
  DropoutCache<S> drop;  // unused slot kept small
};

template <typename S>
struct EncoderLayerWork {
  AttentionCache<S> attn;
  DropoutCache<S> drop1;
  LayerNormCache<S> ln1;
  Mat<S> h1;  // output of ln1, input of ffn
  FfnCache<S> ffn;
  DropoutCache<S> drop2;
  LayerNormCache<S> ln2;
};

template <typename S>
struct DecoderLayerWork {
  AttentionCache<S> self;
  DropoutCache<S> drop1;
  LayerNormCache<S> ln1;
  Mat<S> h1;
  AttentionCache<S> cross;
  DropoutCache<S> drop2;
  LayerNormCache<S> ln2;
  Mat<S> h2;
  FfnCache<S> ffn;
  DropoutCache<S> drop3;
  LayerNormCache<S> ln3;
};

template <typename S>
struct EncoderWork {
  std::vector<int> len;
  int padded_len = 0;
  std::vector<int> ids;  // row-aligned token ids (with pad)
  DropoutCache<S> drop_embed;
  Mat<S> x0;
  std::vector<EncoderLayerWork<S>> layers;
  Mat<S> memory;
};

template <typename S>
struct DecoderWork {
  std::vector<int> len;
  int padded_len = 0;
  std::vector<int> ids;
  DropoutCache<S> drop_embed;
  Mat<S> x0;
  std::vector<DecoderLayerWork<S>> layers;
  Mat<S> out;
  Mat<S> logprobs;  // [B*Lt, target_vocab]
};

// ---------------------------------------------------------------------------

// Encoder-decoder transformer in the original post-norm formulation:
// scaled embeddings + sinusoidal positions, multi-head attention with
// padding masks everywhere and a causal mask on decoder self-attention,
// ReLU feed-forward blocks, untied source/target embeddings. Forward
// records every intermediate needed by the hand-written backward pass.
template <typename S>
class Transformer {
 public:
  Transformer(const TransformerConfig& config, uint64_t init_seed) : cfg_(config) {
    cfg_.validate();
    src_embed_.setup(cfg_.source_vocab, cfg_.model_width);
    tgt_embed_.setup(cfg_.target_vocab, cfg_.model_width);
    enc_.resize(cfg_.encoder_layers);
    for (auto& l : enc_) {
      l.self.setup(cfg_.model_width);
      l.ln1.setup(cfg_.model_width);
      l.ff.setup(cfg_.model_width, cfg_.feedforward_width);
      l.ln2.setup(cfg_.model_width);
    }
    dec_.resize(cfg_.decoder_layers);
    for (auto& l : dec_) {
      l.self.setup(cfg_.model_width);
      l.ln1.setup(cfg_.model_width);
      l.cross.setup(cfg_.model_width);
      l.ln2.setup(cfg_.model_width);
      l.ff.setup(cfg_.model_width, cfg_.feedforward_width);
      l.ln3.setup(cfg_.model_width);
    }
    out_proj_.setup(cfg_.model_width, cfg_.target_vocab);
    init_parameters(init_seed);
    pe_ = sinusoidal_positions<S>(cfg_.max_sequence_length, cfg_.model_width);
  }

  const TransformerConfig& config() const { return cfg_; }

  // Serialization/optimizer order. Names are stable; the checkpoint file
  // stores tensors in exactly this order.
  void for_each_param(const std::function<void(const std::string&, Tensor<S>&)>& fn) {
    fn("src_embed", src_embed_);
    fn("tgt_embed", tgt_embed_);
    for (size_t i = 0; i < enc_.size(); ++i) {
      const std::string p = "enc" + std::to_string(i) + ".";
      visit_attention(p + "self.", enc_[i].self, fn);
      visit_layernorm(p + "ln1.", enc_[i].ln1, fn);
      visit_linear(p + "ff.lin1.", enc_[i].ff.lin1, fn);
      visit_linear(p + "ff.lin2.", enc_[i].ff.lin2, fn);
      visit_layernorm(p + "ln2.", enc_[i].ln2, fn);
    }
    for (size_t i = 0; i < dec_.size(); ++i) {
      const std::string p = "dec" + std::to_string(i) + ".";
      visit_attention(p + "self.", dec_[i].self, fn);
      visit_layernorm(p + "ln1.", dec_[i].ln1, fn);
      visit_attention(p + "cross.", dec_[i].cross, fn);
      visit_layernorm(p + "ln2.", dec_[i].ln2, fn);
      visit_linear(p + "ff.lin1.", dec_[i].ff.lin1, fn);
      visit_linear(p + "ff.lin2.", dec_[i].ff.lin2, fn);
      visit_layernorm(p + "ln3.", dec_[i].ln3, fn);
    }
    visit_linear("out_proj.", out_proj_, fn);
  }

  void for_each_param(const std::function<void(const std::string&, Tensor<S>&)>& fn) const {
    const_cast<Transformer*>(this)->for_each_param(fn);
  }

  size_t parameter_count() const {
    size_t n = 0;
    for_each_param([&](const std::string&, Tensor<S>& t) { n += static_cast<size_t>(t.w.size()); });
    return n;
  }

  void zero_grad() {
    for_each_param([](const std::string&, Tensor<S>& t) { t.g.setZero(); });
  }

  struct Batch {
    std::vector<std::vector<int>> src;
    std::vector<std::vector<int>> tgt;  // full gold sequences incl Begin..End
  };

  struct StepResult {
    double loss = 0;
    long long tokens = 0;
  };

  // Teacher-forced loss over the batch; gradients accumulate into the
  // parameter .g slots. dropout_rng == nullptr disables dropout.
  StepResult forward_backward(const Batch& batch, Rng* dropout_rng, EncoderWork<S>& ew, DecoderWork<S>& dw) {
    const StepResult res = run_forward(batch, dropout_rng, ew, dw);
    run_backward(batch, ew, dw);
    return res;
  }

  StepResult forward_backward(const Batch& batch, Rng* dropout_rng) {
    EncoderWork<S> ew;
    DecoderWork<S> dw;
    return forward_backward(batch, dropout_rng, ew, dw);
  }

  // Loss only; no dropout, no gradients.
  StepResult evaluate_loss(const Batch& batch, EncoderWork<S>& ew, DecoderWork<S>& dw) const {
    return const_cast<Transformer*>(this)->run_forward(batch, nullptr, ew, dw);
  }

  StepResult evaluate_loss(const Batch& batch) const {
    EncoderWork<S> ew;
    DecoderWork<S> dw;
    return evaluate_loss(batch, ew, dw);
  }

  // Per-position next-token log-probabilities for one (source, prefix)
  // pair; rows are prefix positions, columns target-vocab tokens.
  Mat<S> forward_logprobs(const std::vector<int>& src, const std::vector<int>& tgt_prefix) const {
    const Encoded enc = encode(src);
    return decode_logprobs(enc, tgt_prefix);
  }

  struct Encoded {
    Mat<S> memory;
    std::vector<int> len;
    int padded_len = 0;
  };

  Encoded encode(const std::vector<int>& src) const {
    check_ids(src, cfg_.source_vocab);
    EncoderWork<S> ew;
    const_cast<Transformer*>(this)->encoder_forward({src}, nullptr, ew);
    return Encoded{ew.memory, ew.len, ew.padded_len};
  }

  Mat<S> decode_logprobs(const Encoded& enc, const std::vector<int>& tgt_prefix) const {
    check_ids(tgt_prefix, cfg_.target_vocab);
    DecoderWork<S> dw;
    const_cast<Transformer*>(this)->decoder_forward({tgt_prefix}, enc.memory, enc.len, enc.padded_len,
                                                    nullptr, dw);
    Mat<S> lp = dw.out * out_proj_.weight.w;
    lp.rowwise() += out_proj_.bias.w.row(0);
    log_softmax_rows_inplace(lp);
    return lp;
  }

 private:
  TransformerConfig cfg_;
  Tensor<S> src_embed_, tgt_embed_;
  std::vector<EncoderLayerP<S>> enc_;
  std::vector<DecoderLayerP<S>> dec_;
  LinearLayer<S> out_proj_;
  Mat<S> pe_;

  template <typename Fn>
  static void visit_linear(const std::string& p, LinearLayer<S>& l, const Fn& fn) {
    fn(p + "weight", l.weight);
    fn(p + "bias", l.bias);
  }
  template <typename Fn>
  static void visit_layernorm(const std::string& p, LayerNormLayer<S>& l, const Fn& fn) {
    fn(p + "gamma", l.gamma);
    fn(p + "beta", l.beta);
  }
  template <typename Fn>
  static void visit_attention(const std::string& p, AttentionBlock<S>& a, const Fn& fn) {
    visit_linear(p + "q.", a.q, fn);
    visit_linear(p + "k.", a.k, fn);
    visit_linear(p + "v.", a.v, fn);
    visit_linear(p + "o.", a.o, fn);
  }

  void init_parameters(uint64_t seed) {
    Rng rng(seed);
    for_each_param([&](const std::string& name, Tensor<S>& t) {
      const bool is_weight = name.size() >= 6 && name.compare(name.size() - 6, 6, "weight") == 0;
      const bool is_embed = name == "src_embed" || name == "tgt_embed";
      if (is_weight || is_embed) {
        const double limit = std::sqrt(6.0 / static_cast<double>(t.w.rows() + t.w.cols()));
        for (Eigen::Index c = 0; c < t.w.cols(); ++c) {
          for (Eigen::Index r = 0; r < t.w.rows(); ++r) {
            t.w(r, c) = static_cast<S>(rng.uniform(-limit, limit));
          }
        }
      }
      // biases stay zero, layer norms stay (1, 0)
    });
  }

  static void check_ids(const std::vector<int>& ids, int vocab) {
    for (int id : ids) {
      if (id < 0 || id >= vocab) {
        throw ValidationError("token id " + std::to_string(id) + " out of vocab range " +
                              std::to_string(vocab));
      }
    }
  }

  const Mat<S>& positions(int len) const {
    if (pe_.rows() < len) {
      throw ValidationError("sequence length " + std::to_string(len) +
                            " exceeds max_sequence_length " + std::to_string(cfg_.max_sequence_length));
    }
    return pe_;
  }

  // --- elementary ops -------------------------------------------------

  Mat<S> dropout(const Mat<S>& x, Rng* rng, DropoutCache<S>& cache) {
    if (!rng || cfg_.dropout <= 0) {
      cache.active = false;
      return x;
    }
    cache.active = true;
    cache.mask.resize(x.rows(), x.cols());
    const S scale = static_cast<S>(1.0 / (1.0 - cfg_.dropout));
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        cache.mask(r, c) = rng->uniform() < cfg_.dropout ? S(0) : scale;
      }
    }
    return x.cwiseProduct(cache.mask);
  }

  static Mat<S> dropout_backward(const Mat<S>& dy, const DropoutCache<S>& cache) {
    return cache.active ? dy.cwiseProduct(cache.mask).eval() : dy;
  }

  static constexpr double kLnEps = 1e-5;

  static Mat<S> layernorm_forward(const Mat<S>& x, const LayerNormLayer<S>& p, LayerNormCache<S>& cache) {
    const Eigen::Index n = x.cols();
    cache.xhat.resize(x.rows(), n);
    cache.inv_std.resize(x.rows());
    Mat<S> y(x.rows(), n);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const S mu = x.row(r).mean();
      const S var = (x.row(r).array() - mu).square().sum() / static_cast<S>(n);
      const S inv = S(1) / std::sqrt(var + static_cast<S>(kLnEps));
      cache.inv_std(r) = inv;
      cache.xhat.row(r) = (x.row(r).array() - mu) * inv;
      y.row(r) = cache.xhat.row(r).cwiseProduct(p.gamma.w.row(0)) + p.beta.w.row(0);
    }
    return y;
  }

  static Mat<S> layernorm_backward(const Mat<S>& dy, LayerNormLayer<S>& p, const LayerNormCache<S>& cache) {
    const Eigen::Index n = dy.cols();
    Mat<S> dx(dy.rows(), n);
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const auto gdy = dy.row(r).cwiseProduct(p.gamma.w.row(0));
      const S m1 = gdy.mean();
      const S m2 = gdy.cwiseProduct(cache.xhat.row(r)).mean();
      dx.row(r) = (gdy.array() - m1 - cache.xhat.row(r).array() * m2) * cache.inv_std(r);
      p.gamma.g.row(0) += dy.row(r).cwiseProduct(cache.xhat.row(r));
      p.beta.g.row(0) += dy.row(r);
    }
    return dx;
  }

  static Mat<S> linear_forward(const Mat<S>& x, const LinearLayer<S>& p) {
    Mat<S> y = x * p.weight.w;
    y.rowwise() += p.bias.w.row(0);
    return y;
  }

  static Mat<S> linear_backward(const Mat<S>& dy, const Mat<S>& x, LinearLayer<S>& p) {
    p.weight.g.noalias() += x.transpose() * dy;
    p.bias.g.row(0) += dy.colwise().sum();
    return dy * p.weight.w.transpose();
  }

  // Multi-head attention over padded batches. Row b*Lq+i is query i of
  // example b. Key j of example b is visible iff j < kv_len[b] and, when
  // causal, j <= i.
  Mat<S> attention_forward(const Mat<S>& q_in, const Mat<S>& kv_in, const AttentionBlock<S>& p,
                           const std::vector<int>& kv_len, int Lq, int Lk, bool causal,
                           AttentionCache<S>& cache) {
    const int B = static_cast<int>(kv_len.size());
    const int H = cfg_.heads;
    const int dh = cfg_.model_width / H;
    const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
    cache.q_in = q_in;
    cache.kv_in = kv_in;
    cache.Q = linear_forward(q_in, p.q);
    cache.K = linear_forward(kv_in, p.k);
    cache.V = linear_forward(kv_in, p.v);
    cache.attn.assign(static_cast<size_t>(B) * H, Mat<S>());
    cache.ctx.setZero(q_in.rows(), cfg_.model_width);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const auto qb = cache.Q.block(b * Lq, h * dh, Lq, dh);
        const auto kb = cache.K.block(b * Lk, h * dh, Lk, dh);
        const auto vb = cache.V.block(b * Lk, h * dh, Lk, dh);
        Mat<S> scores = scale * (qb * kb.transpose());
        for (int i = 0; i < Lq; ++i) {
          for (int j = 0; j < Lk; ++j) {
            const bool visible = j < kv_len[b] && (!causal || j <= i);
            if (!visible) scores(i, j) = static_cast<S>(-1e30);
          }
        }
        // row-wise softmax
        for (int i = 0; i < Lq; ++i) {
          const S mx = scores.row(i).maxCoeff();
          scores.row(i) = (scores.row(i).array() - mx).exp();
          scores.row(i) /= scores.row(i).sum();
        }
        Mat<S>& A = cache.attn[static_cast<size_t>(b) * H + h];
        A = std::move(scores);
        cache.ctx.block(b * Lq, h * dh, Lq, dh).noalias() = A * vb;
      }
    }
    return linear_forward(cache.ctx, p.o);
  }

  struct AttnGrads {
    Mat<S> d_q_in;
    Mat<S> d_kv_in;
  };

  AttnGrads attention_backward(const Mat<S>& dy, AttentionBlock<S>& p, const std::vector<int>& kv_len,
                               int Lq, int Lk, const AttentionCache<S>& cache) {
    const int B = static_cast<int>(kv_len.size());
    const int H = cfg_.heads;
    const int dh = cfg_.model_width / H;
    const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
    const Mat<S> d_ctx = linear_backward(dy, cache.ctx, p.o);
    Mat<S> dQ = Mat<S>::Zero(cache.Q.rows(), cache.Q.cols());
    Mat<S> dK = Mat<S>::Zero(cache.K.rows(), cache.K.cols());
    Mat<S> dV = Mat<S>::Zero(cache.V.rows(), cache.V.cols());
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const Mat<S>& A = cache.attn[static_cast<size_t>(b) * H + h];
        const auto qb = cache.Q.block(b * Lq, h * dh, Lq, dh);
        const auto kb = cache.K.block(b * Lk, h * dh, Lk, dh);
        const auto vb = cache.V.block(b * Lk, h * dh, Lk, dh);
        const auto d_ctxb = d_ctx.block(b * Lq, h * dh, Lq, dh);
        Mat<S> dA = d_ctxb * vb.transpose();
        dV.block(b * Lk, h * dh, Lk, dh).noalias() += A.transpose() * d_ctxb;
        // softmax backward: dS = A .* (dA - rowsum(dA .* A))
        Mat<S> dS(Lq, Lk);
        for (int i = 0; i < Lq; ++i) {
          const S dot = dA.row(i).cwiseProduct(A.row(i)).sum();
          dS.row(i) = A.row(i).cwiseProduct((dA.row(i).array() - dot).matrix());
        }
        dQ.block(b * Lq, h * dh, Lq, dh).noalias() += scale * (dS * kb);
        dK.block(b * Lk, h * dh, Lk, dh).noalias() += scale * (dS.transpose() * qb);
      }
    }
    AttnGrads out;
    out.d_q_in = linear_backward(dQ, cache.q_in, p.q);
    out.d_kv_in = linear_backward(dK, cache.kv_in, p.k);
    out.d_kv_in += linear_backward(dV, cache.kv_in, p.v);
    return out;
  }

  Mat<S> ffn_forward(const Mat<S>& x, const FeedForward<S>& p, FfnCache<S>& cache) {
    cache.input = x;
    cache.pre_act = linear_forward(x, p.lin1);
    cache.hidden = cache.pre_act.cwiseMax(S(0));
    return linear_forward(cache.hidden, p.lin2);
  }

  Mat<S> ffn_backward(const Mat<S>& dy, FeedForward<S>& p, const FfnCache<S>& cache) {
    Mat<S> dh = linear_backward(dy, cache.hidden, p.lin2);
    dh = dh.cwiseProduct((cache.pre_act.array() > S(0)).template cast<S>().matrix());
    return linear_backward(dh, cache.input, p.lin1);
  }

  Mat<S> embed(const std::vector<std::vector<int>>& seqs, const Tensor<S>& table, int padded_len,
               std::vector<int>& row_ids) {
    const int B = static_cast<int>(seqs.size());
    const S scale = static_cast<S>(std::sqrt(static_cast<double>(cfg_.model_width)));
    const Mat<S>& pe = positions(padded_len);
    Mat<S> x(static_cast<Eigen::Index>(B) * padded_len, cfg_.model_width);
    row_ids.assign(static_cast<size_t>(B) * padded_len, 0 /* Pad */);
    for (int b = 0; b < B; ++b) {
      for (int t = 0; t < padded_len; ++t) {
        const int id = t < static_cast<int>(seqs[b].size()) ? seqs[b][t] : 0;
        row_ids[static_cast<size_t>(b) * padded_len + t] = id;
        x.row(b * padded_len + t) = table.w.row(id) * scale + pe.row(t);
      }
    }
    return x;
  }

  void embed_backward(const Mat<S>& dx, const std::vector<int>& row_ids, Tensor<S>& table) {
    const S scale = static_cast<S>(std::sqrt(static_cast<double>(cfg_.model_width)));
    for (size_t r = 0; r < row_ids.size(); ++r) {
      table.g.row(row_ids[r]) += dx.row(static_cast<Eigen::Index>(r)) * scale;
    }
  }

  // --- encoder / decoder stacks ---------------------------------------

  void encoder_forward(const std::vector<std::vector<int>>& src, Rng* drop, EncoderWork<S>& W) {
    const int B = static_cast<int>(src.size());
    W.len.resize(B);
    int Ls = 1;
    for (int b = 0; b < B; ++b) {
      W.len[b] = static_cast<int>(src[b].size());
      Ls = std::max(Ls, W.len[b]);
    }
    W.padded_len = Ls;
    Mat<S> x = embed(src, src_embed_, Ls, W.ids);
    W.x0 = dropout(x, drop, W.drop_embed);
    W.layers.resize(enc_.size());
    Mat<S> h = W.x0;
    for (size_t i = 0; i < enc_.size(); ++i) {
      EncoderLayerWork<S>& lw = W.layers[i];
      EncoderLayerP<S>& lp = enc_[i];
      const Mat<S> a = attention_forward(h, h, lp.self, W.len, Ls, Ls, false, lw.attn);
      const Mat<S> s1 = h + dropout(a, drop, lw.drop1);
      lw.h1 = layernorm_forward(s1, lp.ln1, lw.ln1);
      const Mat<S> f = ffn_forward(lw.h1, lp.ff, lw.ffn);
      const Mat<S> s2 = lw.h1 + dropout(f, drop, lw.drop2);
      h = layernorm_forward(s2, lp.ln2, lw.ln2);
    }
    W.memory = h;
  }

  void decoder_forward(const std::vector<std::vector<int>>& tgt_in, const Mat<S>& memory,
                       const std::vector<int>& src_len, int Ls, Rng* drop, DecoderWork<S>& W) {
    const int B = static_cast<int>(tgt_in.size());
    W.len.resize(B);
    int Lt = 1;
    for (int b = 0; b < B; ++b) {
      W.len[b] = static_cast<int>(tgt_in[b].size());
      Lt = std::max(Lt, W.len[b]);
    }
    W.padded_len = Lt;
    Mat<S> x = embed(tgt_in, tgt_embed_, Lt, W.ids);
    W.x0 = dropout(x, drop, W.drop_embed);
    W.layers.resize(dec_.size());
    Mat<S> h = W.x0;
    for (size_t i = 0; i < dec_.size(); ++i) {
      DecoderLayerWork<S>& lw = W.layers[i];
      DecoderLayerP<S>& lp = dec_[i];
      const Mat<S> a = attention_forward(h, h, lp.self, W.len, Lt, Lt, true, lw.self);
      const Mat<S> s1 = h + dropout(a, drop, lw.drop1);
      lw.h1 = layernorm_forward(s1, lp.ln1, lw.ln1);
      const Mat<S> c = attention_forward(lw.h1, memory, lp.cross, src_len, Lt, Ls, false, lw.cross);
      const Mat<S> s2 = lw.h1 + dropout(c, drop, lw.drop2);
      lw.h2 = layernorm_forward(s2, lp.ln2, lw.ln2);
      const Mat<S> f = ffn_forward(lw.h2, lp.ff, lw.ffn);
      const Mat<S> s3 = lw.h2 + dropout(f, drop, lw.drop3);
      h = layernorm_forward(s3, lp.ln3, lw.ln3);
    }
    W.out = h;
  }

  StepResult run_forward(const typename Transformer::Batch& batch, Rng* drop, EncoderWork<S>& ew,
                         DecoderWork<S>& dw) {
    if (batch.src.empty() || batch.src.size() != batch.tgt.size()) {
      throw ValidationError("transformer batch: empty or mismatched src/tgt");
    }
    std::vector<std::vector<int>> tgt_in(batch.tgt.size());
    for (size_t b = 0; b < batch.tgt.size(); ++b) {
      check_ids(batch.src[b], cfg_.source_vocab);
      check_ids(batch.tgt[b], cfg_.target_vocab);
      if (batch.tgt[b].size() < 2) {
        throw ValidationError("transformer batch: target sequences need at least 2 tokens");
      }
      tgt_in[b].assign(batch.tgt[b].begin(), batch.tgt[b].end() - 1);
    }
    encoder_forward(batch.src, drop, ew);
    decoder_forward(tgt_in, ew.memory, ew.len, ew.padded_len, drop, dw);
    dw.logprobs = dw.out * out_proj_.weight.w;
    dw.logprobs.rowwise() += out_proj_.bias.w.row(0);
    log_softmax_rows_inplace(dw.logprobs);

    StepResult res;
    const int B = static_cast<int>(batch.tgt.size());
    const int Lt = dw.padded_len;
    double nll = 0;
    for (int b = 0; b < B; ++b) {
      for (size_t t = 1; t < batch.tgt[b].size(); ++t) {
        const int row = b * Lt + static_cast<int>(t) - 1;
        nll -= static_cast<double>(dw.logprobs(row, batch.tgt[b][t]));
        ++res.tokens;
      }
    }
    res.loss = nll / static_cast<double>(res.tokens);
    return res;
  }

  void run_backward(const typename Transformer::Batch& batch, EncoderWork<S>& ew, DecoderWork<S>& dw) {
    const int B = static_cast<int>(batch.tgt.size());
    const int Lt = dw.padded_len;
    long long tokens = 0;
    for (int b = 0; b < B; ++b) tokens += static_cast<long long>(batch.tgt[b].size()) - 1;

    // d(loss)/d(logits) = (softmax - onehot) / tokens at supervised rows.
    Mat<S> dlogits = Mat<S>::Zero(dw.logprobs.rows(), dw.logprobs.cols());
    const S inv = static_cast<S>(1.0 / static_cast<double>(tokens));
    for (int b = 0; b < B; ++b) {
      for (size_t t = 1; t < batch.tgt[b].size(); ++t) {
        const int row = b * Lt + static_cast<int>(t) - 1;
        dlogits.row(row) = dw.logprobs.row(row).array().exp() * inv;
        dlogits(row, batch.tgt[b][t]) -= inv;
      }
    }

    Mat<S> dh = linear_backward(dlogits, dw.out, out_proj_);
    Mat<S> d_memory = Mat<S>::Zero(ew.memory.rows(), ew.memory.cols());
    for (size_t ri = dec_.size(); ri-- > 0;) {
      DecoderLayerWork<S>& lw = dw.layers[ri];
      DecoderLayerP<S>& lp = dec_[ri];
      const Mat<S> d_s3 = layernorm_backward(dh, lp.ln3, lw.ln3);
      Mat<S> d_h2 = d_s3;
      d_h2 += ffn_backward(dropout_backward(d_s3, lw.drop3), lp.ff, lw.ffn);
      const Mat<S> d_s2 = layernorm_backward(d_h2, lp.ln2, lw.ln2);
      Mat<S> d_h1 = d_s2;
      AttnGrads cg = attention_backward(dropout_backward(d_s2, lw.drop2), lp.cross, ew.len, dw.padded_len,
                                        ew.padded_len, lw.cross);
      d_h1 += cg.d_q_in;
      d_memory += cg.d_kv_in;
      const Mat<S> d_s1 = layernorm_backward(d_h1, lp.ln1, lw.ln1);
      Mat<S> dx = d_s1;
      AttnGrads sg = attention_backward(dropout_backward(d_s1, lw.drop1), lp.self, dw.len, dw.padded_len,
                                        dw.padded_len, lw.self);
      dx += sg.d_q_in;
      dx += sg.d_kv_in;
      dh = std::move(dx);
    }
    embed_backward(dropout_backward(dh, dw.drop_embed), dw.ids, tgt_embed_);

    dh = std::move(d_memory);
    for (size_t ri = enc_.size(); ri-- > 0;) {
      EncoderLayerWork<S>& lw = ew.layers[ri];
      EncoderLayerP<S>& lp = enc_[ri];
      const Mat<S> d_s2 = layernorm_backward(dh, lp.ln2, lw.ln2);
      Mat<S> d_h1 = d_s2;
      d_h1 += ffn_backward(dropout_backward(d_s2, lw.drop2), lp.ff, lw.ffn);
      const Mat<S> d_s1 = layernorm_backward(d_h1, lp.ln1, lw.ln1);
      Mat<S> dx = d_s1;
      AttnGrads sg = attention_backward(dropout_backward(d_s1, lw.drop1), lp.self, ew.len, ew.padded_len,
                                        ew.padded_len, lw.attn);
      dx += sg.d_q_in;
      dx += sg.d_kv_in;
      dh = std::move(dx);
    }
    embed_backward(dropout_backward(dh, ew.drop_embed), ew.ids, src_embed_);
  }
};

}  // namespace ccn::neural

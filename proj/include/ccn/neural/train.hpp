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

#include <algorithm>
#include <limits>

#include "ccn/neural/transformer.hpp"

namespace ccn::neural {

struct TrainConfig {
  int batch_size = 16;
  int max_epochs = 40;
  double dev_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  int warmup_steps = 400;
  int patience = 5;
  uint64_t seed = 1;
  // When false the final-epoch parameters are kept instead of the
  // best-dev snapshot (used together with effectively infinite patience).
  bool restore_best = true;

  void validate() const {
    if (batch_size <= 0 || max_epochs <= 0) throw ValidationError("train config: sizes must be positive");
    if (dev_fraction <= 0 || dev_fraction >= 1) {
      throw ValidationError("train config: dev_fraction must be in (0,1)");
    }
    if (warmup_steps <= 0 || patience <= 0) {
      throw ValidationError("train config: warmup/patience must be positive");
    }
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double dev_loss = 0;
  double lr = 0;
};

struct TrainOutcome {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_dev_loss = 0;
  long long steps = 0;
  std::vector<size_t> dev_indices;  // corpus rows held out for the dev split
};

template <typename S>
class AdamOptimizer {
 public:
  AdamOptimizer(Transformer<S>& model, double beta1, double beta2, double eps)
      : model_(model), beta1_(static_cast<S>(beta1)), beta2_(static_cast<S>(beta2)), eps_(static_cast<S>(eps)) {
    model_.for_each_param([&](const std::string&, Tensor<S>& t) {
      m_.push_back(Mat<S>::Zero(t.w.rows(), t.w.cols()));
      v_.push_back(Mat<S>::Zero(t.w.rows(), t.w.cols()));
    });
  }

  // One update from the gradients currently in the parameter .g slots,
  // with standard bias correction.
  void step(double lr) {
    ++t_;
    const S c1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1_), t_));
    const S c2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2_), t_));
    size_t i = 0;
    model_.for_each_param([&](const std::string&, Tensor<S>& p) {
      Mat<S>& m = m_[i];
      Mat<S>& v = v_[i];
      m = beta1_ * m + (S(1) - beta1_) * p.g;
      v = beta2_ * v + (S(1) - beta2_) * p.g.cwiseProduct(p.g);
      p.w.array() -= static_cast<S>(lr) * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
      ++i;
    });
  }

  long long steps() const { return t_; }

 private:
  Transformer<S>& model_;
  S beta1_, beta2_, eps_;
  std::vector<Mat<S>> m_, v_;
  long long t_ = 0;
};

template <typename S>
struct EncodedExample {
  std::vector<int> src;
  std::vector<int> tgt;
};

using IdExample = std::pair<std::vector<int>, std::vector<int>>;

namespace detail {

template <typename S>
typename Transformer<S>::Batch make_batch(const std::vector<IdExample>& corpus,
                                          const std::vector<size_t>& order, size_t begin, size_t end) {
  typename Transformer<S>::Batch batch;
  for (size_t i = begin; i < end; ++i) {
    batch.src.push_back(corpus[order[i]].first);
    batch.tgt.push_back(corpus[order[i]].second);
  }
  return batch;
}

template <typename S>
double dataset_loss(const Transformer<S>& model, const std::vector<IdExample>& corpus,
                    const std::vector<size_t>& idx, int batch_size, EncoderWork<S>& ew, DecoderWork<S>& dw) {
  double nll = 0;
  long long tokens = 0;
  for (size_t b = 0; b < idx.size(); b += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(idx.size(), b + static_cast<size_t>(batch_size));
    const auto batch = make_batch<S>(corpus, idx, b, end);
    const auto res = model.evaluate_loss(batch, ew, dw);
    nll += res.loss * static_cast<double>(res.tokens);
    tokens += res.tokens;
  }
  return nll / static_cast<double>(std::max<long long>(1, tokens));
}

}  // namespace detail

// Seeded, fully deterministic training: the seed fixes the dev split, the
// dropout masks and the per-epoch batch order. Stops after `patience`
// consecutive epochs without dev improvement and restores the parameters
// of the best-dev epoch.
template <typename S>
TrainOutcome train_model(Transformer<S>& model, const std::vector<IdExample>& corpus,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw ValidationError("train: empty corpus");

  Rng split_rng(splitmix64(cfg.seed ^ 0x5b1177a1ull));
  Rng dropout_rng(splitmix64(cfg.seed ^ 0xd209u));

  std::vector<size_t> idx(corpus.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  split_rng.shuffle(idx);
  size_t n_dev = corpus.size() >= 2
                     ? std::clamp<size_t>(static_cast<size_t>(static_cast<double>(corpus.size()) * cfg.dev_fraction),
                                          1, corpus.size() - 1)
                     : 0;
  std::vector<size_t> dev_idx(idx.begin(), idx.begin() + static_cast<long>(n_dev));
  std::vector<size_t> train_idx(idx.begin() + static_cast<long>(n_dev), idx.end());

  AdamOptimizer<S> adam(model, cfg.beta1, cfg.beta2, cfg.adam_eps);
  EncoderWork<S> ew;
  DecoderWork<S> dw;

  TrainOutcome out;
  out.dev_indices = dev_idx;
  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<Mat<S>> best_params;
  int since_improve = 0;
  long long step = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng epoch_rng(splitmix64(cfg.seed ^ (0xE70C0000ull + static_cast<uint64_t>(epoch))));
    epoch_rng.shuffle(train_idx);
    double nll = 0;
    long long tokens = 0;
    double lr = 0;
    for (size_t b = 0; b < train_idx.size(); b += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(train_idx.size(), b + static_cast<size_t>(cfg.batch_size));
      const auto batch = detail::make_batch<S>(corpus, train_idx, b, end);
      model.zero_grad();
      const auto res = model.forward_backward(batch, &dropout_rng, ew, dw);
      ++step;
      lr = transformer_lr(step, model.config().model_width, cfg.warmup_steps);
      adam.step(lr);
      nll += res.loss * static_cast<double>(res.tokens);
      tokens += res.tokens;
      if (!std::isfinite(res.loss)) {
        throw RunError("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                       std::to_string(step));
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = nll / static_cast<double>(std::max<long long>(1, tokens));
    stats.dev_loss = dev_idx.empty()
                         ? stats.train_loss
                         : detail::dataset_loss(model, corpus, dev_idx, cfg.batch_size, ew, dw);
    stats.lr = lr;
    out.history.push_back(stats);
    if (!std::isfinite(stats.dev_loss)) {
      throw RunError("train: non-finite dev loss at epoch " + std::to_string(epoch));
    }
    if (stats.dev_loss < best_dev) {
      best_dev = stats.dev_loss;
      out.best_epoch = epoch;
      since_improve = 0;
      best_params.clear();
      model.for_each_param([&](const std::string&, Tensor<S>& t) { best_params.push_back(t.w); });
    } else if (++since_improve >= cfg.patience) {
      break;
    }
  }
  out.best_dev_loss = best_dev;
  out.steps = step;
  if (cfg.restore_best) {
    size_t i = 0;
    model.for_each_param([&](const std::string&, Tensor<S>& t) { t.w = best_params[i++]; });
  }
  return out;
}

}  // namespace ccn::neural

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

#include "ccn/neural/transformer.hpp"

namespace ccn::neural {

// A (possibly finished) decoder hypothesis. tokens start with Begin; the
// score is the sum of the per-step log-probabilities of the generated
// tokens (Begin is not generated). Finished hypotheses end with End or
// were cut at max_len.
struct Hypothesis {
  std::vector<int> tokens;
  double score = 0;
};

// Orders by score descending, ties broken by lexicographic token order
// (i.e. by token id at the first differing step).
inline bool hypothesis_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

// Standard beam expansion over log-probabilities, no length
// normalization: at each step the top beam_width successors are kept and
// the End-terminated ones among them retire to the finished pool. With
// beam_width 1 this is exactly greedy decoding; with beam_width >= |V|^L
// no path is ever pruned, so the result matches exhaustive enumeration.
// max_len caps the number of generated tokens (End included). Returns up
// to beam_width finished hypotheses, best first.
template <typename S>
std::vector<Hypothesis> beam_search(const Transformer<S>& model, const std::vector<int>& src,
                                    int beam_width, int max_len, int begin_id = 1, int end_id = 2) {
  if (beam_width <= 0 || max_len <= 0) throw ValidationError("beam_search: width and max_len must be positive");
  const auto encoded = model.encode(src);
  std::vector<Hypothesis> alive{Hypothesis{{begin_id}, 0.0}};
  std::vector<Hypothesis> finished;

  for (int step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    for (const Hypothesis& hyp : alive) {
      const Mat<S> lp = model.decode_logprobs(encoded, hyp.tokens);
      const Eigen::Index last = lp.rows() - 1;
      for (int tok = 0; tok < lp.cols(); ++tok) {
        Hypothesis next = hyp;
        next.tokens.push_back(tok);
        next.score += static_cast<double>(lp(last, tok));
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), hypothesis_before);
    if (candidates.size() > static_cast<size_t>(beam_width)) {
      candidates.resize(static_cast<size_t>(beam_width));
    }
    alive.clear();
    for (Hypothesis& hyp : candidates) {
      if (hyp.tokens.back() == end_id) {
        finished.push_back(std::move(hyp));
      } else {
        alive.push_back(std::move(hyp));
      }
    }
  }
  // Hypotheses still alive at max_len finish without End.
  for (Hypothesis& hyp : alive) finished.push_back(std::move(hyp));
  std::sort(finished.begin(), finished.end(), hypothesis_before);
  if (finished.size() > static_cast<size_t>(beam_width)) {
    finished.resize(static_cast<size_t>(beam_width));
  }
  return finished;
}

}  // namespace ccn::neural

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

#include <memory>
#include <string>

#include "ccn/neural/train.hpp"
#include "ccn/neural/transformer.hpp"

namespace ccn::neural {

// Versioned binary container, written atomically (temp file + rename).
// Layout, all integers little-endian:
//   magic "CCNCKPT1", u32 version,
//   variant spec string (u32 length + bytes),
//   config (u32 enc_layers, dec_layers, heads, width, ff, max_seq,
//           f64 dropout, u32 src_vocab, u32 tgt_vocab),
//   u64 src_vocab_fingerprint, u64 tgt_vocab_fingerprint,
//   u64 train seed, u32 best_epoch, f64 final_dev_loss,
//   history (u32 count, then per epoch: u32 epoch, f64 train, f64 dev, f64 lr),
//   tensors (u32 count, then per tensor: name string, u32 rows, u32 cols,
//            f32 data, column-major) in for_each_param order.
struct CheckpointMeta {
  std::string variant_spec;
  TransformerConfig config;
  uint64_t src_vocab_fingerprint = 0;
  uint64_t tgt_vocab_fingerprint = 0;
  uint64_t seed = 0;
  int best_epoch = 0;
  double final_dev_loss = 0;
  std::vector<EpochStats> history;
};

void save_checkpoint(const std::string& path, const CheckpointMeta& meta, Transformer<float>& model);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<Transformer<float>> model;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// history.csv: epoch,train_loss,dev_loss,lr
std::string history_csv(const std::vector<EpochStats>& history);

}  // namespace ccn::neural

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

#include "ccn/neural/checkpoint.hpp"

#include <cstring>
#include <sstream>

namespace ccn::neural {

namespace {

constexpr char kMagic[8] = {'C', 'C', 'N', 'C', 'K', 'P', 'T', '1'};

// The format is defined little-endian; this implementation targets
// little-endian hosts and writes raw bytes.
template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  const char* p = reinterpret_cast<const char*>(&value);
  out.append(p, sizeof(T));
}

void put_str(std::string& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  const std::string& data;
  size_t pos = 0;
  const std::string& path;

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    if (pos + sizeof(T) > data.size()) throw ValidationError(path + ": truncated checkpoint");
    T value;
    std::memcpy(&value, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
  }

  std::string get_str() {
    const uint32_t n = get<uint32_t>();
    if (pos + n > data.size()) throw ValidationError(path + ": truncated checkpoint string");
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta, Transformer<float>& model) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put<uint32_t>(out, 1);
  put_str(out, meta.variant_spec);
  const TransformerConfig& c = meta.config;
  put<uint32_t>(out, static_cast<uint32_t>(c.encoder_layers));
  put<uint32_t>(out, static_cast<uint32_t>(c.decoder_layers));
  put<uint32_t>(out, static_cast<uint32_t>(c.heads));
  put<uint32_t>(out, static_cast<uint32_t>(c.model_width));
  put<uint32_t>(out, static_cast<uint32_t>(c.feedforward_width));
  put<uint32_t>(out, static_cast<uint32_t>(c.max_sequence_length));
  put<double>(out, c.dropout);
  put<uint32_t>(out, static_cast<uint32_t>(c.source_vocab));
  put<uint32_t>(out, static_cast<uint32_t>(c.target_vocab));
  put<uint64_t>(out, meta.src_vocab_fingerprint);
  put<uint64_t>(out, meta.tgt_vocab_fingerprint);
  put<uint64_t>(out, meta.seed);
  put<uint32_t>(out, static_cast<uint32_t>(meta.best_epoch));
  put<double>(out, meta.final_dev_loss);
  put<uint32_t>(out, static_cast<uint32_t>(meta.history.size()));
  for (const EpochStats& e : meta.history) {
    put<uint32_t>(out, static_cast<uint32_t>(e.epoch));
    put<double>(out, e.train_loss);
    put<double>(out, e.dev_loss);
    put<double>(out, e.lr);
  }
  uint32_t count = 0;
  model.for_each_param([&](const std::string&, Tensor<float>&) { ++count; });
  put<uint32_t>(out, count);
  model.for_each_param([&](const std::string& name, Tensor<float>& t) {
    put_str(out, name);
    put<uint32_t>(out, static_cast<uint32_t>(t.w.rows()));
    put<uint32_t>(out, static_cast<uint32_t>(t.w.cols()));
    out.append(reinterpret_cast<const char*>(t.w.data()), sizeof(float) * static_cast<size_t>(t.w.size()));
  });
  write_file_atomic(path, out);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const std::string data = read_file(path);
  Reader in{data, 0, path};
  char magic[8];
  for (char& c : magic) c = in.get<char>();
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ValidationError(path + ": not a checkpoint file");
  }
  const uint32_t version = in.get<uint32_t>();
  if (version != 1) {
    throw ValidationError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointMeta meta;
  meta.variant_spec = in.get_str();
  meta.config.encoder_layers = static_cast<int>(in.get<uint32_t>());
  meta.config.decoder_layers = static_cast<int>(in.get<uint32_t>());
  meta.config.heads = static_cast<int>(in.get<uint32_t>());
  meta.config.model_width = static_cast<int>(in.get<uint32_t>());
  meta.config.feedforward_width = static_cast<int>(in.get<uint32_t>());
  meta.config.max_sequence_length = static_cast<int>(in.get<uint32_t>());
  meta.config.dropout = in.get<double>();
  meta.config.source_vocab = static_cast<int>(in.get<uint32_t>());
  meta.config.target_vocab = static_cast<int>(in.get<uint32_t>());
  meta.src_vocab_fingerprint = in.get<uint64_t>();
  meta.tgt_vocab_fingerprint = in.get<uint64_t>();
  meta.seed = in.get<uint64_t>();
  meta.best_epoch = static_cast<int>(in.get<uint32_t>());
  meta.final_dev_loss = in.get<double>();
  const uint32_t epochs = in.get<uint32_t>();
  for (uint32_t i = 0; i < epochs; ++i) {
    EpochStats e;
    e.epoch = static_cast<int>(in.get<uint32_t>());
    e.train_loss = in.get<double>();
    e.dev_loss = in.get<double>();
    e.lr = in.get<double>();
    meta.history.push_back(e);
  }
  LoadedCheckpoint loaded;
  loaded.model = std::make_unique<Transformer<float>>(meta.config, /*init_seed=*/0);
  const uint32_t tensors = in.get<uint32_t>();
  uint32_t seen = 0;
  loaded.model->for_each_param([&](const std::string& name, Tensor<float>& t) {
    ++seen;
    const std::string stored = in.get_str();
    if (stored != name) {
      throw ValidationError(path + ": tensor order mismatch, expected " + name + " got " + stored);
    }
    const uint32_t rows = in.get<uint32_t>();
    const uint32_t cols = in.get<uint32_t>();
    if (rows != static_cast<uint32_t>(t.w.rows()) || cols != static_cast<uint32_t>(t.w.cols())) {
      throw ValidationError(path + ": tensor shape mismatch for " + name);
    }
    const size_t bytes = sizeof(float) * static_cast<size_t>(rows) * cols;
    if (in.pos + bytes > data.size()) throw ValidationError(path + ": truncated tensor " + name);
    std::memcpy(t.w.data(), data.data() + in.pos, bytes);
    in.pos += bytes;
  });
  if (seen != tensors) {
    throw ValidationError(path + ": tensor count mismatch");
  }
  loaded.meta = std::move(meta);
  return loaded;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,dev_loss,lr\n";
  out.precision(10);
  for (const EpochStats& e : history) {
    out << e.epoch << "," << e.train_loss << "," << e.dev_loss << "," << e.lr << "\n";
  }
  return out.str();
}

}  // namespace ccn::neural

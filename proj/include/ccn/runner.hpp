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

#include <json.hpp>
#include <string>
#include <vector>

#include "ccn/eval.hpp"
#include "ccn/neural/checkpoint.hpp"
#include "ccn/neural/train.hpp"
#include "ccn/seqcodec.hpp"

namespace ccn {

// Bumped when a change invalidates cached runs.
inline constexpr std::string_view kCodeVersion = "ccn-1";

struct OutputPaths {
  std::string root;

  std::string prepared() const { return root + "/prepared.json"; }
  std::string lexicon_summary() const { return root + "/lexicon_summary.json"; }
  std::string manifest() const { return root + "/manifest.jsonl"; }
  std::string metrics() const { return root + "/metrics.json"; }
  std::string tables_dir() const { return root + "/tables"; }
  std::string runs_dir() const { return root + "/runs"; }
  std::string plots_dir() const { return root + "/plots"; }
};

// Resolution order: explicit flag, $CCN_OUT, ./ccn_out.
OutputPaths resolve_output_root(const std::string& flag_value);

struct DataPaths {
  std::string characters;
  std::string radicals;
  std::string tests;
  std::string inventory;
  std::string human;  // optional
};

// Loads + validates the lexicon, writes prepared.json and
// lexicon_summary.json plus a human-readable summary table.
nlohmann::json cmd_prepare(const DataPaths& data, const OutputPaths& out);

// Re-loads the lexicon recorded by cmd_prepare.
Lexicon load_prepared(const OutputPaths& out, std::string* human_path = nullptr);

struct ExperimentPlan {
  int experiment = 1;
  std::vector<ModelVariant> variants;  // empty -> all 80 of the experiment
  int num_seeds = 5;
  uint64_t master_seed = 42;
  int jobs = 0;  // 0 -> hardware concurrency
  neural::TrainConfig train;
  int beam_width = 3;
};

struct RunRecord {
  std::string variant;
  int seed_index = 0;
  uint64_t seed_value = 0;
  std::string status;  // "completed" | "failed"
  std::string cache_key;
  std::string checkpoint_path;
  std::string predictions_path;
  std::string history_path;
  double wall_time_s = 0;
  double final_dev_loss = 0;
  int best_epoch = 0;
  std::string error;
};

// Latest record per (variant, seed); the file itself is append-only.
std::vector<RunRecord> load_manifest(const std::string& path);

struct MatrixSummary {
  int trained = 0;
  int reused = 0;
  int failed = 0;
};

// Trains/infers every (variant, seed) pair of the plan, in parallel,
// reusing completed runs whose cache key matches. Individual failures are
// recorded and do not abort the matrix.
MatrixSummary cmd_matrix(const ExperimentPlan& plan, const Lexicon& lex, const OutputPaths& out);

// Computes metrics.json and the paper-layout text tables from the
// manifest plus the human answers (empty path -> model-only report).
nlohmann::json cmd_evaluate(const Lexicon& lex, const OutputPaths& out, const std::string& human_path);

// Renders SVG plots + plot-data CSVs + summary.md from metrics.json.
void cmd_report(const OutputPaths& out);

struct InferOptions {
  std::string checkpoint;
  std::vector<std::string> glyphs;
  int beam_width = 3;
  std::string append_csv;  // optional predictions sink
};

// Beam hypotheses per glyph, decoded; throws ValidationError on vocabulary
// fingerprint mismatch.
std::vector<PredictionRow> cmd_infer(const InferOptions& opts, const Lexicon& lex);

// Derivation used for both matrix and infer so cached runs never depend
// on plan composition.
uint64_t derive_run_seed(uint64_t master_seed, const std::string& variant_spec, int seed_index);

// Shared by prepare and evaluate.
nlohmann::json lexicon_stats_json(const Lexicon& lex);

}  // namespace ccn

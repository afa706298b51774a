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

#include "ccn/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "ccn/neural/beam.hpp"

namespace ccn {

namespace fs = std::filesystem;
using nlohmann::json;

OutputPaths resolve_output_root(const std::string& flag_value) {
  if (!flag_value.empty()) return OutputPaths{flag_value};
  if (const char* env = std::getenv("CCN_OUT"); env && *env) return OutputPaths{env};
  return OutputPaths{"./ccn_out"};
}

// ---------------------------------------------------------------------------
// prepare

namespace {

json regularity_breakdown(const std::vector<const CharacterEntry*>& charset, const Lexicon& lex) {
  std::array<int, kNumRegularity> counts{};
  for (const CharacterEntry* e : charset) {
    ++counts[static_cast<int>(character_regularity(*e, lex))];
  }
  json out;
  out["characters"] = charset.size();
  for (int t = 0; t < kNumRegularity; ++t) {
    const double pct = charset.empty() ? 0.0 : 100.0 * counts[t] / static_cast<double>(charset.size());
    out[to_string(static_cast<Regularity>(t))] = pct;
  }
  return out;
}

}  // namespace

json lexicon_stats_json(const Lexicon& lex) {
  json out;
  out["entries"] = lex.entries().size();
  out["radicals"] = lex.radical_count();
  out["fingerprint"] = lex.fingerprint();

  int phonetic_right = 0;
  for (const CharacterEntry& e : lex.entries()) {
    if (e.phonetic_side == Side::kRight) ++phonetic_right;
  }
  out["phonetic_right_pct"] = 100.0 * phonetic_right / static_cast<double>(lex.entries().size());

  const TrainingSets sets = build_training_sets(lex);
  out["training"]["all"] = regularity_breakdown(sets.all, lex);
  out["training"]["mid"] = regularity_breakdown(sets.mid, lex);
  out["training"]["high"] = regularity_breakdown(sets.high, lex);

  out["bucket_bounds"] = {{"p50", lex.bucket_bounds().p50}, {"p75", lex.bucket_bounds().p75}};
  std::array<std::vector<const CharacterEntry*>, kNumBuckets> by_bucket;
  for (const CharacterEntry* e : lex.training_entries()) {
    by_bucket[static_cast<int>(lex.bucket_of(e->frequency))].push_back(e);
  }
  for (int b = 0; b < kNumBuckets; ++b) {
    out["buckets"][to_string(static_cast<FrequencyBucket>(b))] =
        regularity_breakdown(by_bucket[b], lex);
  }

  const TestSelectionReport report = validate_test_selection(lex);
  json test;
  test["characters"] = report.num_characters;
  test["pinyins"] = report.num_pinyins;
  for (int t = 0; t < kNumRegularity; ++t) {
    const char* name = to_string(static_cast<Regularity>(t));
    test["pinyin_counts"][name] = report.pinyin_counts[t];
    test["char_counts_precedence"][name] = report.char_counts_precedence[t];
    test["char_counts_any"][name] = report.char_counts_any[t];
  }
  test["mean_radical_saliency"] = report.mean_radical_saliency;
  test["saliency_per_char"] = report.saliency_per_char;
  for (const auto& v : report.violations) {
    test["violations"].push_back({{"glyph", v.glyph}, {"reason", v.reason}});
  }
  if (report.violations.empty()) test["violations"] = json::array();
  out["test"] = test;
  return out;
}

namespace {

std::string prepare_summary_table(const json& stats) {
  std::ostringstream t;
  char buf[160];
  t << "Lexicon summary\n";
  t << "  entries: " << stats["entries"] << "   radicals: " << stats["radicals"] << "\n";
  std::snprintf(buf, sizeof buf, "  phonetic radical on the right: %.1f%%\n",
                stats["phonetic_right_pct"].get<double>());
  t << buf;
  t << "\nTraining sets (characters, regularity %)\n";
  std::snprintf(buf, sizeof buf, "  %-10s %12s %9s %13s %9s %10s\n", "set", "characters", "regular",
                "alliterating", "rhyming", "irregular");
  t << buf;
  for (const char* set : {"all", "mid", "high"}) {
    const json& row = stats["training"][set];
    std::snprintf(buf, sizeof buf, "  %-10s %12lld %9.1f %13.1f %9.1f %10.1f\n", set,
                  row["characters"].get<long long>(), row["regular"].get<double>(),
                  row["alliterating"].get<double>(), row["rhyming"].get<double>(),
                  row["irregular"].get<double>());
    t << buf;
  }
  t << "\nFrequency buckets over the training set (boundaries "
    << stats["bucket_bounds"]["p50"] << " / " << stats["bucket_bounds"]["p75"] << ")\n";
  for (const char* b : {"rare", "low", "mid", "high"}) {
    const json& row = stats["buckets"][b];
    std::snprintf(buf, sizeof buf, "  %-6s %6lld characters (regular %.1f%%)\n", b,
                  row["characters"].get<long long>(), row["regular"].get<double>());
    t << buf;
  }
  const json& test = stats["test"];
  t << "\nTest set: " << test["characters"] << " characters, " << test["pinyins"] << " pinyins\n";
  t << "  pinyin regularity counts:";
  for (const char* r : {"regular", "alliterating", "rhyming", "irregular"}) {
    t << " " << r << "=" << test["pinyin_counts"][r];
  }
  t << "\n";
  std::snprintf(buf, sizeof buf, "  mean saliency of the test phonetic radicals: %.3f\n",
                test["mean_radical_saliency"].get<double>());
  t << buf;
  t << "  selection violations: " << test["violations"].size() << "\n";
  for (const auto& v : test["violations"]) {
    t << "    " << v["glyph"].get<std::string>() << ": " << v["reason"].get<std::string>() << "\n";
  }
  return t.str();
}

}  // namespace

json cmd_prepare(const DataPaths& data, const OutputPaths& out) {
  PhonInventory inventory = PhonInventory::load(data.inventory);
  Lexicon lex = Lexicon::load(data.characters, data.radicals, data.tests, std::move(inventory));
  if (!data.human.empty()) {
    load_human_answers(data.human, lex);  // validate now, consumed by evaluate
  }
  json prepared;
  prepared["characters"] = fs::absolute(data.characters).string();
  prepared["radicals"] = fs::absolute(data.radicals).string();
  prepared["tests"] = fs::absolute(data.tests).string();
  prepared["inventory"] = fs::absolute(data.inventory).string();
  prepared["human"] = data.human.empty() ? "" : fs::absolute(data.human).string();
  prepared["fingerprint"] = lex.fingerprint();
  write_file_atomic(out.prepared(), prepared.dump(2) + "\n");

  const json stats = lexicon_stats_json(lex);
  write_file_atomic(out.lexicon_summary(), stats.dump(2) + "\n");
  write_file_atomic(out.tables_dir() + "/prepare_summary.txt", prepare_summary_table(stats));
  return stats;
}

Lexicon load_prepared(const OutputPaths& out, std::string* human_path) {
  json prepared;
  try {
    prepared = json::parse(read_file(out.prepared()));
  } catch (const std::exception& e) {
    throw ValidationError(std::string("cannot read ") + out.prepared() + " (run `ccn prepare` first): " +
                          e.what());
  }
  if (human_path) *human_path = prepared.value("human", "");
  PhonInventory inventory = PhonInventory::load(prepared["inventory"].get<std::string>());
  return Lexicon::load(prepared["characters"].get<std::string>(), prepared["radicals"].get<std::string>(),
                       prepared["tests"].get<std::string>(), std::move(inventory));
}

// ---------------------------------------------------------------------------
// manifest

namespace {

json record_to_json(const RunRecord& r) {
  return json{{"variant", r.variant},
              {"seed_index", r.seed_index},
              {"seed_value", r.seed_value},
              {"status", r.status},
              {"cache_key", r.cache_key},
              {"checkpoint", r.checkpoint_path},
              {"predictions", r.predictions_path},
              {"history", r.history_path},
              {"wall_time_s", r.wall_time_s},
              {"final_dev_loss", r.final_dev_loss},
              {"best_epoch", r.best_epoch},
              {"error", r.error}};
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.variant = j.value("variant", "");
  r.seed_index = j.value("seed_index", 0);
  r.seed_value = j.value("seed_value", uint64_t{0});
  r.status = j.value("status", "");
  r.cache_key = j.value("cache_key", "");
  r.checkpoint_path = j.value("checkpoint", "");
  r.predictions_path = j.value("predictions", "");
  r.history_path = j.value("history", "");
  r.wall_time_s = j.value("wall_time_s", 0.0);
  r.final_dev_loss = j.value("final_dev_loss", 0.0);
  r.best_epoch = j.value("best_epoch", 0);
  r.error = j.value("error", "");
  return r;
}

class ManifestWriter {
 public:
  explicit ManifestWriter(std::string path) : path_(std::move(path)) {
    const fs::path p(path_);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }

  void append(const RunRecord& r) {
    const std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw RunError("cannot append to manifest " + path_);
    out << record_to_json(r).dump() << "\n";
  }

 private:
  std::string path_;
  std::mutex mu_;
};

}  // namespace

std::vector<RunRecord> load_manifest(const std::string& path) {
  std::vector<RunRecord> out;
  if (!fs::exists(path)) return out;
  std::map<std::string, size_t> latest;
  for (const std::string& line : split(read_file(path), '\n')) {
    if (trim(line).empty()) continue;
    const RunRecord r = record_from_json(json::parse(line));
    const std::string key = r.variant + "#" + std::to_string(r.seed_index);
    const auto it = latest.find(key);
    if (it == latest.end()) {
      latest.emplace(key, out.size());
      out.push_back(r);
    } else {
      out[it->second] = r;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// matrix

uint64_t derive_run_seed(uint64_t master_seed, const std::string& variant_spec, int seed_index) {
  uint64_t h = kFnvOffset;
  h = fnv1a64(variant_spec, h);
  h = fnv1a64(static_cast<uint64_t>(seed_index + 1), h);
  h = fnv1a64(master_seed, h);
  return splitmix64(h);
}

namespace {

std::string sanitize_variant(const std::string& spec) {
  std::string out = spec;
  for (char& c : out) {
    if (c == '/') c = '_';
  }
  return out;
}

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string compute_cache_key(const std::string& variant_spec, int seed_index, uint64_t seed_value,
                              uint64_t lexicon_fp, const neural::TrainConfig& t, int beam_width) {
  uint64_t h = kFnvOffset;
  h = fnv1a64(variant_spec, h);
  h = fnv1a64(static_cast<uint64_t>(seed_index), h);
  h = fnv1a64(seed_value, h);
  h = fnv1a64(lexicon_fp, h);
  h = fnv1a64(kCodeVersion, h);
  h = fnv1a64(static_cast<uint64_t>(t.batch_size), h);
  h = fnv1a64(static_cast<uint64_t>(t.max_epochs), h);
  uint64_t dev_bits = 0;
  static_assert(sizeof dev_bits == sizeof t.dev_fraction);
  std::memcpy(&dev_bits, &t.dev_fraction, sizeof dev_bits);
  h = fnv1a64(dev_bits, h);
  h = fnv1a64(static_cast<uint64_t>(t.warmup_steps), h);
  h = fnv1a64(static_cast<uint64_t>(t.patience), h);
  h = fnv1a64(static_cast<uint64_t>(beam_width), h);
  return hash_hex(h);
}

struct VariantAssets {
  std::vector<Example> corpus;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  std::vector<neural::IdExample> ids;
  neural::TransformerConfig config;
  int beam_max_len = 0;
};

VariantAssets build_assets(const ModelVariant& variant, const Lexicon& lex, const TrainingSets& sets,
                           const TokenClasses& classes) {
  VariantAssets assets;
  assets.corpus = build_corpus(variant_charset(variant, sets), variant, lex);
  if (assets.corpus.empty()) {
    throw ValidationError("variant " + variant.spec() + ": empty training corpus");
  }
  std::vector<std::vector<std::string>> src_seqs, tgt_seqs;
  src_seqs.reserve(assets.corpus.size());
  tgt_seqs.reserve(assets.corpus.size());
  for (const Example& ex : assets.corpus) {
    src_seqs.push_back(ex.src);
    tgt_seqs.push_back(ex.tgt);
  }
  const auto exempt = [&](std::string_view t) { return classes.is_closed(t); };
  assets.src_vocab = build_vocab(src_seqs, exempt);
  assets.tgt_vocab = build_vocab(tgt_seqs, exempt);
  size_t max_src = 0, max_tgt = 0;
  for (const Example& ex : assets.corpus) {
    max_src = std::max(max_src, ex.src.size());
    max_tgt = std::max(max_tgt, ex.tgt.size());
    assets.ids.emplace_back(to_ids(ex.src, assets.src_vocab), to_ids(ex.tgt, assets.tgt_vocab));
  }
  assets.beam_max_len = static_cast<int>(max_tgt) + 1;
  assets.config.source_vocab = assets.src_vocab.size();
  assets.config.target_vocab = assets.tgt_vocab.size();
  assets.config.max_sequence_length = static_cast<int>(std::max(max_src, max_tgt)) + 4;
  return assets;
}

std::string predictions_csv(const std::string& variant_spec, int seed_index, const ModelVariant& variant,
                            const Lexicon& lex, const VariantAssets& assets,
                            const neural::Transformer<float>& model, int beam_width) {
  std::string csv = predictions_csv_header() + "\n";
  for (const std::string& glyph : lex.test_glyphs()) {
    const std::vector<int> src = to_ids(encode_input(lex.at(glyph), variant, lex), assets.src_vocab);
    const auto hyps = neural::beam_search(model, src, beam_width, assets.beam_max_len,
                                          Vocabulary::kBegin, Vocabulary::kEnd);
    for (size_t rank = 0; rank < hyps.size(); ++rank) {
      PredictionRow row;
      row.variant = variant_spec;
      row.seed = seed_index;
      row.glyph = glyph;
      row.rank = static_cast<int>(rank);
      for (int id : hyps[rank].tokens) row.tokens.push_back(assets.tgt_vocab.token(id));
      row.score = hyps[rank].score;
      csv += format_prediction_row(row) + "\n";
    }
  }
  return csv;
}

}  // namespace

MatrixSummary cmd_matrix(const ExperimentPlan& plan, const Lexicon& lex, const OutputPaths& out) {
  std::vector<ModelVariant> variants =
      plan.variants.empty() ? enumerate_variants(plan.experiment) : plan.variants;
  for (const ModelVariant& v : variants) {
    if (v.experiment() != plan.experiment) {
      throw ValidationError("variant " + v.spec() + " does not belong to experiment " +
                            std::to_string(plan.experiment));
    }
  }
  if (plan.num_seeds <= 0) throw ValidationError("matrix: need at least one seed");

  struct Job {
    ModelVariant variant;
    int seed_index;
  };
  std::vector<Job> jobs;
  for (const ModelVariant& v : variants) {
    for (int s = 0; s < plan.num_seeds; ++s) jobs.push_back({v, s});
  }

  std::map<std::string, RunRecord> existing;
  for (const RunRecord& r : load_manifest(out.manifest())) {
    existing[r.variant + "#" + std::to_string(r.seed_index)] = r;
  }

  const TrainingSets sets = build_training_sets(lex);
  const TokenClasses classes(lex.inventory());
  ManifestWriter manifest(out.manifest());

  std::atomic<size_t> next{0};
  std::atomic<int> trained{0}, reused{0}, failed{0};
  std::mutex io_mu;

  const auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      const std::string spec = job.variant.spec();
      const uint64_t seed_value = derive_run_seed(plan.master_seed, spec, job.seed_index);
      const std::string key =
          compute_cache_key(spec, job.seed_index, seed_value, lex.fingerprint(), plan.train, plan.beam_width);

      const auto it = existing.find(spec + "#" + std::to_string(job.seed_index));
      if (it != existing.end() && it->second.status == "completed" && it->second.cache_key == key &&
          fs::exists(it->second.checkpoint_path) && fs::exists(it->second.predictions_path)) {
        ++reused;
        const std::lock_guard<std::mutex> lock(io_mu);
        std::cout << "[cached] " << spec << " seed " << job.seed_index << "\n";
        continue;
      }

      RunRecord record;
      record.variant = spec;
      record.seed_index = job.seed_index;
      record.seed_value = seed_value;
      record.cache_key = key;
      const std::string dir = out.runs_dir() + "/" + sanitize_variant(spec) + "/seed" +
                              std::to_string(job.seed_index);
      record.checkpoint_path = dir + "/ckpt.bin";
      record.predictions_path = dir + "/predictions.csv";
      record.history_path = dir + "/history.csv";
      const auto start = std::chrono::steady_clock::now();
      try {
        VariantAssets assets = build_assets(job.variant, lex, sets, classes);
        neural::Transformer<float> model(assets.config, splitmix64(seed_value ^ 0x17c3));
        neural::TrainConfig train = plan.train;
        train.seed = seed_value;
        const neural::TrainOutcome outcome = neural::train_model(model, assets.ids, train);
        neural::CheckpointMeta meta;
        meta.variant_spec = spec;
        meta.config = assets.config;
        meta.src_vocab_fingerprint = assets.src_vocab.fingerprint();
        meta.tgt_vocab_fingerprint = assets.tgt_vocab.fingerprint();
        meta.seed = seed_value;
        meta.best_epoch = outcome.best_epoch;
        meta.final_dev_loss = outcome.best_dev_loss;
        meta.history = outcome.history;
        save_checkpoint(record.checkpoint_path, meta, model);
        write_file_atomic(record.history_path, neural::history_csv(outcome.history));
        write_file_atomic(record.predictions_path,
                          predictions_csv(spec, job.seed_index, job.variant, lex, assets, model,
                                          plan.beam_width));
        record.final_dev_loss = outcome.best_dev_loss;
        record.best_epoch = outcome.best_epoch;
        record.status = "completed";
        ++trained;
      } catch (const std::exception& e) {
        record.status = "failed";
        record.error = e.what();
        ++failed;
      }
      record.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      manifest.append(record);
      const std::lock_guard<std::mutex> lock(io_mu);
      std::cout << "[" << record.status << "] " << spec << " seed " << job.seed_index << " ("
                << record.wall_time_s << "s)";
      if (!record.error.empty()) std::cout << " error: " << record.error;
      std::cout << "\n";
    }
  };

  int parallelism = plan.jobs > 0 ? plan.jobs : static_cast<int>(std::thread::hardware_concurrency());
  parallelism = std::max(1, std::min<int>(parallelism, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(parallelism));
  for (int k = 0; k < parallelism; ++k) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  return MatrixSummary{trained.load(), reused.load(), failed.load()};
}

// ---------------------------------------------------------------------------
// evaluate

namespace {

struct OverlapStats {
  double mean = 0, sd = 0, min = 0, max = 0;
  long long pairs = 0;
  std::vector<long long> counts;  // counts[k] = pairs with k identical answers

  json to_json() const {
    return json{{"mean", mean}, {"sd", sd},       {"min", min},
                {"max", max},   {"pairs", pairs}, {"counts", counts}};
  }
};

OverlapStats overlap_within(const std::vector<AnswerSet>& sets, const Lexicon& lex) {
  OverlapStats st;
  const int n = static_cast<int>(lex.test_glyphs().size());
  st.counts.assign(static_cast<size_t>(n) + 1, 0);
  std::vector<double> values;
  for (size_t i = 0; i < sets.size(); ++i) {
    for (size_t j = i + 1; j < sets.size(); ++j) {
      const double o = overlap_rate(sets[i], sets[j], lex);
      values.push_back(o);
      ++st.counts[static_cast<size_t>(std::llround(o * n))];
    }
  }
  if (!values.empty()) {
    st.mean = mean(values);
    st.sd = sample_sd(values);
    st.min = *std::min_element(values.begin(), values.end());
    st.max = *std::max_element(values.begin(), values.end());
    st.pairs = static_cast<long long>(values.size());
  }
  return st;
}

OverlapStats overlap_across(const std::vector<AnswerSet>& a, const std::vector<AnswerSet>& b,
                            const Lexicon& lex) {
  OverlapStats st;
  const int n = static_cast<int>(lex.test_glyphs().size());
  st.counts.assign(static_cast<size_t>(n) + 1, 0);
  std::vector<double> values;
  for (const AnswerSet& x : a) {
    for (const AnswerSet& y : b) {
      const double o = overlap_rate(x, y, lex);
      values.push_back(o);
      ++st.counts[static_cast<size_t>(std::llround(o * n))];
    }
  }
  if (!values.empty()) {
    st.mean = mean(values);
    st.sd = sample_sd(values);
    st.min = *std::min_element(values.begin(), values.end());
    st.max = *std::max_element(values.begin(), values.end());
    st.pairs = static_cast<long long>(values.size());
  }
  return st;
}

json optional_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

json human_stats_json(const std::vector<AnswerSet>& humans, const Lexicon& lex) {
  json out;
  out["participants"] = humans.size();
  std::vector<double> accs;
  for (const AnswerSet& a : humans) accs.push_back(responder_accuracy(a, lex));
  out["mean_accuracy"] = mean(accs);
  out["min_accuracy"] = *std::min_element(accs.begin(), accs.end());
  out["max_accuracy"] = *std::max_element(accs.begin(), accs.end());

  const auto char_acc = character_accuracy(humans, lex);
  int zero = 0;
  for (const auto& [glyph, acc] : char_acc) {
    if (acc == 0) ++zero;
  }
  out["zero_accuracy_characters"] = zero;
  out["character_accuracy"] = char_acc;
  out["accuracy_saliency_pearson"] = optional_to_json(saliency_effect(char_acc, lex));

  const auto variability = answer_variability(humans, lex);
  std::vector<double> var_values, sal_values;
  for (const std::string& glyph : lex.test_glyphs()) {
    var_values.push_back(static_cast<double>(variability.at(glyph)));
    sal_values.push_back(saliency(lex, lex.at(glyph).phonetic_radical()));
  }
  out["variability"]["per_char"] = variability;
  out["variability"]["mean"] = mean(var_values);
  out["variability"]["min"] = *std::min_element(var_values.begin(), var_values.end());
  out["variability"]["max"] = *std::max_element(var_values.begin(), var_values.end());
  out["variability"]["saliency_pearson"] = optional_to_json(pearson(var_values, sal_values));

  const ProductionProfile profile = production_profile(humans, lex);
  const auto means = profile.type_means();
  const auto sds = profile.type_sds();
  for (int t = 0; t < kNumAnswerTypes; ++t) {
    const char* name = to_string(static_cast<AnswerType>(t));
    out["type_means"][name] = means[t];
    out["type_sds"][name] = sds[t];
  }
  for (const auto& [glyph, shares] : profile.per_char) {
    json row;
    for (int t = 0; t <= kNumAnswerTypes; ++t) {
      row[to_string(static_cast<AnswerType>(t))] = shares[t];
    }
    out["profiles"][glyph] = row;
  }
  out["overlap"] = overlap_within(humans, lex).to_json();
  return out;
}

struct RunEval {
  RunRecord record;
  ModelVariant variant;
  AnswerSet answers;
  double accuracy = 0;
};

json experiment_json(int experiment, const std::vector<RunEval>& runs,
                     const std::vector<AnswerSet>* humans, const ProductionProfile* human_profile,
                     const Lexicon& lex) {
  json out;
  std::vector<double> accs;
  std::vector<AnswerSet> model_sets;
  for (const RunEval& r : runs) {
    accs.push_back(r.accuracy);
    model_sets.push_back(r.answers);
  }
  out["runs"] = runs.size();
  out["grand_mean_accuracy"] = mean(accs);

  std::map<std::string, std::vector<const RunEval*>> by_variant;
  for (const RunEval& r : runs) by_variant[r.record.variant].push_back(&r);
  for (const ModelVariant& v : enumerate_variants(experiment)) {
    const auto it = by_variant.find(v.spec());
    if (it == by_variant.end()) continue;
    std::vector<double> vaccs;
    json seeds = json::object();
    for (const RunEval* r : it->second) {
      vaccs.push_back(r->accuracy);
      seeds[std::to_string(r->record.seed_index)] = r->accuracy;
    }
    out["per_variant"][v.spec()] = {{"mean_accuracy", mean(vaccs)},
                                    {"sd", sample_sd(vaccs)},
                                    {"per_seed", seeds}};
  }

  const auto char_acc = character_accuracy(model_sets, lex);
  out["character_accuracy"] = char_acc;
  out["saliency_pearson"] = optional_to_json(saliency_effect(char_acc, lex));

  const ProductionProfile profile = production_profile(model_sets, lex);
  const auto means = profile.type_means();
  const auto sds = profile.type_sds();
  for (int t = 0; t < kNumAnswerTypes; ++t) {
    const char* name = to_string(static_cast<AnswerType>(t));
    out["type_means"][name] = means[t];
    out["type_sds"][name] = sds[t];
  }
  for (const auto& [glyph, shares] : profile.per_char) {
    json row;
    for (int t = 0; t <= kNumAnswerTypes; ++t) {
      row[to_string(static_cast<AnswerType>(t))] = shares[t];
    }
    out["profiles"][glyph] = row;
  }

  if (humans && !humans->empty()) {
    const auto human_char_acc = character_accuracy(*humans, lex);
    std::vector<double> hx, mx;
    for (const std::string& glyph : lex.test_glyphs()) {
      hx.push_back(human_char_acc.at(glyph));
      mx.push_back(char_acc.at(glyph));
    }
    out["human_model_accuracy_pearson"] = optional_to_json(pearson(hx, mx));

    for (int t = 0; t < kNumAnswerTypes; ++t) {
      const char* name = to_string(static_cast<AnswerType>(t));
      const auto h = human_profile->type_column(static_cast<AnswerType>(t), lex.test_glyphs());
      const auto m = profile.type_column(static_cast<AnswerType>(t), lex.test_glyphs());
      out["type_correlations"][name]["pearson"] = optional_to_json(pearson(h, m));
      out["type_correlations"][name]["spearman"] = optional_to_json(spearman(h, m));
    }
    const CrossEntropyPair ce = cross_entropy_profiles(*human_profile, profile, lex.test_glyphs());
    out["cross_entropy"]["pooled"] = ce.pooled;
    out["cross_entropy"]["per_character_mean"] = ce.per_character_mean;

    out["overlap_model_human"] = overlap_across(model_sets, *humans, lex).to_json();
    std::string best_spec;
    double best_mean = -1;
    for (const auto& [spec, vruns] : by_variant) {
      std::vector<AnswerSet> vsets;
      for (const RunEval* r : vruns) vsets.push_back(r->answers);
      const OverlapStats st = overlap_across(vsets, *humans, lex);
      out["per_variant"][spec]["overlap_with_human"] = {{"mean", st.mean}, {"sd", st.sd}};
      if (st.mean > best_mean) {
        best_mean = st.mean;
        best_spec = spec;
      }
    }
    out["best_variant_by_overlap"] = {{"variant", best_spec}, {"mean", best_mean}};
    if (!best_spec.empty()) {
      std::vector<AnswerSet> vsets;
      for (const RunEval* r : by_variant.at(best_spec)) vsets.push_back(r->answers);
      out["best_variant_by_overlap"]["overlap"] = overlap_across(vsets, *humans, lex).to_json();
    }
  } else {
    out["overlap_model_model"] = overlap_within(model_sets, lex).to_json();
  }
  return out;
}

std::string accuracy_table(int experiment, const json& exp) {
  std::ostringstream t;
  t << "Experiment " << experiment << ": mean test accuracy (%) over seeds\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %-9s %7s %7s %7s %7s\n", "data", "label", "-T-S", "-T+S", "+T-S",
                "+T+S");
  t << buf;
  const char* datasets[] = {"all", "mid", "high", "all+freq"};
  const char* labels[] = {"base", "label_m", "label_s", "label_mr", "label_sr"};
  for (const char* d : datasets) {
    for (const char* l : labels) {
      std::string cells;
      for (const char* ts : {"/-tone/-shuffle", "/-tone/+shuffle", "/+tone/-shuffle", "/+tone/+shuffle"}) {
        const std::string spec = "exp" + std::to_string(experiment) + "/" + d + "/" + l + ts;
        if (exp.contains("per_variant") && exp["per_variant"].contains(spec)) {
          std::snprintf(buf, sizeof buf, " %6.1f",
                        100.0 * exp["per_variant"][spec]["mean_accuracy"].get<double>());
        } else {
          std::snprintf(buf, sizeof buf, " %6s", "--");
        }
        cells += buf;
      }
      std::snprintf(buf, sizeof buf, "%-10s %-9s%s\n", d, l, cells.c_str());
      t << buf;
    }
  }
  return t.str();
}

std::string overlap_table(const json& metrics) {
  std::ostringstream t;
  char buf[240];
  t << "Overlap rates (%)\n";
  if (metrics.contains("human") && !metrics["human"].is_null()) {
    const json& h = metrics["human"]["overlap"];
    std::snprintf(buf, sizeof buf, "Human - Human: %.1f (sd %.1f, range %.1f-%.1f, %lld pairs)\n",
                  100 * h["mean"].get<double>(), 100 * h["sd"].get<double>(),
                  100 * h["min"].get<double>(), 100 * h["max"].get<double>(),
                  h["pairs"].get<long long>());
    t << buf;
  }
  for (const char* exp : {"exp1", "exp2"}) {
    if (!metrics["experiments"].contains(exp)) continue;
    const json& e = metrics["experiments"][exp];
    if (e.contains("overlap_model_human")) {
      const json& o = e["overlap_model_human"];
      std::snprintf(buf, sizeof buf, "All %s - Human: %.1f (sd %.1f, range %.1f-%.1f, %lld pairs)\n", exp,
                    100 * o["mean"].get<double>(), 100 * o["sd"].get<double>(),
                    100 * o["min"].get<double>(), 100 * o["max"].get<double>(),
                    o["pairs"].get<long long>());
      t << buf;
      std::snprintf(buf, sizeof buf, "Best %s - Human: %.1f (%s)\n", exp,
                    100 * e["best_variant_by_overlap"]["mean"].get<double>(),
                    e["best_variant_by_overlap"]["variant"].get<std::string>().c_str());
      t << buf;
    }
  }
  t << "\nPer-variant model-human overlap, mean (sd)\n";
  char head[240];
  std::snprintf(head, sizeof head, "%-10s %-9s %8s  %-14s %-14s %-14s %-14s\n", "data", "label", "exp",
                "-T-S", "-T+S", "+T-S", "+T+S");
  t << head;
  const char* datasets[] = {"all", "mid", "high", "all+freq"};
  const char* labels[] = {"base", "label_m", "label_s", "label_mr", "label_sr"};
  for (const char* d : datasets) {
    for (const char* l : labels) {
      for (int exp = 1; exp <= 2; ++exp) {
        const std::string key = "exp" + std::to_string(exp);
        if (!metrics["experiments"].contains(key)) continue;
        const json& e = metrics["experiments"][key];
        std::string cells;
        bool any = false;
        for (const char* ts :
             {"/-tone/-shuffle", "/-tone/+shuffle", "/+tone/-shuffle", "/+tone/+shuffle"}) {
          const std::string spec = key + "/" + d + "/" + l + ts;
          if (e.contains("per_variant") && e["per_variant"].contains(spec) &&
              e["per_variant"][spec].contains("overlap_with_human")) {
            const json& o = e["per_variant"][spec]["overlap_with_human"];
            std::snprintf(buf, sizeof buf, " %5.1f (%4.1f) ", 100 * o["mean"].get<double>(),
                          100 * o["sd"].get<double>());
            any = true;
          } else {
            std::snprintf(buf, sizeof buf, " %12s ", "--");
          }
          cells += buf;
        }
        if (any) {
          std::snprintf(buf, sizeof buf, "%-10s %-9s %8s %s\n", d, l, key.c_str(), cells.c_str());
          t << buf;
        }
      }
    }
  }
  return t.str();
}

std::string types_table(const json& metrics) {
  std::ostringstream t;
  char buf[200];
  t << "Production probability (%) per answer type and correlation with humans\n";
  std::snprintf(buf, sizeof buf, "%-13s %-18s %-18s %8s %8s\n", "type", "human Pp (sd)", "model Pp (sd)",
                "rho", "r");
  t << buf;
  const json* human = metrics.contains("human") && !metrics["human"].is_null() ? &metrics["human"] : nullptr;
  for (const char* exp : {"exp1", "exp2"}) {
    if (!metrics["experiments"].contains(exp)) continue;
    const json& e = metrics["experiments"][exp];
    t << "-- " << exp << " --\n";
    for (int ty = 0; ty < kNumAnswerTypes; ++ty) {
      const char* name = to_string(static_cast<AnswerType>(ty));
      std::string hcell = "--";
      if (human) {
        char hbuf[64];
        std::snprintf(hbuf, sizeof hbuf, "%.1f (%.1f)", 100 * (*human)["type_means"][name].get<double>(),
                      100 * (*human)["type_sds"][name].get<double>());
        hcell = hbuf;
      }
      char mbuf[64];
      std::snprintf(mbuf, sizeof mbuf, "%.1f (%.1f)", 100 * e["type_means"][name].get<double>(),
                    100 * e["type_sds"][name].get<double>());
      std::string rho = "NA", r = "NA";
      if (e.contains("type_correlations")) {
        const json& c = e["type_correlations"][name];
        if (!c["spearman"].is_null()) {
          char b[32];
          std::snprintf(b, sizeof b, "%.2f", c["spearman"].get<double>());
          rho = b;
        }
        if (!c["pearson"].is_null()) {
          char b[32];
          std::snprintf(b, sizeof b, "%.2f", c["pearson"].get<double>());
          r = b;
        }
      }
      std::snprintf(buf, sizeof buf, "%-13s %-18s %-18s %8s %8s\n", name, hcell.c_str(), mbuf, rho.c_str(),
                    r.c_str());
      t << buf;
    }
  }
  return t.str();
}

std::string human_table(const json& metrics) {
  if (!metrics.contains("human") || metrics["human"].is_null()) {
    return "No human answer file was provided; comparison sections are absent.\n";
  }
  const json& h = metrics["human"];
  std::ostringstream t;
  char buf[240];
  t << "Human answers (" << h["participants"] << " participants)\n";
  std::snprintf(buf, sizeof buf, "  mean accuracy %.1f%% (range %.1f-%.1f)\n",
                100 * h["mean_accuracy"].get<double>(), 100 * h["min_accuracy"].get<double>(),
                100 * h["max_accuracy"].get<double>());
  t << buf;
  t << "  characters with zero accuracy: " << h["zero_accuracy_characters"] << "\n";
  if (!h["accuracy_saliency_pearson"].is_null()) {
    std::snprintf(buf, sizeof buf, "  accuracy-saliency correlation r = %.2f\n",
                  h["accuracy_saliency_pearson"].get<double>());
    t << buf;
  }
  std::snprintf(buf, sizeof buf, "  answers per character: mean %.1f (min %lld, max %lld)\n",
                h["variability"]["mean"].get<double>(),
                static_cast<long long>(h["variability"]["min"].get<double>()),
                static_cast<long long>(h["variability"]["max"].get<double>()));
  t << buf;
  if (!h["variability"]["saliency_pearson"].is_null()) {
    std::snprintf(buf, sizeof buf, "  variability-saliency correlation r = %.2f\n",
                  h["variability"]["saliency_pearson"].get<double>());
    t << buf;
  }
  t << "  production probability per type (%):";
  for (int ty = 0; ty < kNumAnswerTypes; ++ty) {
    const char* name = to_string(static_cast<AnswerType>(ty));
    std::snprintf(buf, sizeof buf, " %s=%.1f", name, 100 * h["type_means"][name].get<double>());
    t << buf;
  }
  t << "\n";
  return t.str();
}

}  // namespace

json cmd_evaluate(const Lexicon& lex, const OutputPaths& out, const std::string& human_path) {
  std::vector<RunRecord> records = load_manifest(out.manifest());
  std::vector<RunRecord> completed;
  for (RunRecord& r : records) {
    if (r.status == "completed") completed.push_back(std::move(r));
  }
  if (completed.empty()) {
    throw ValidationError("no completed runs in " + out.manifest() + "; run `ccn matrix` first");
  }

  std::vector<AnswerSet> humans;
  if (!human_path.empty()) humans = load_human_answers(human_path, lex);

  const TokenClasses classes(lex.inventory());
  std::map<int, std::vector<RunEval>> by_exp;
  for (const RunRecord& r : completed) {
    RunEval eval;
    eval.record = r;
    eval.variant = ModelVariant::parse(r.variant);
    eval.answers = answers_from_predictions(load_predictions(r.predictions_path), eval.variant, lex,
                                            classes, r.variant + "#" + std::to_string(r.seed_index));
    eval.accuracy = responder_accuracy(eval.answers, lex);
    by_exp[eval.variant.experiment()].push_back(std::move(eval));
  }

  json metrics;
  metrics["schema"] = "ccn-metrics-1";
  metrics["lexicon"] = lexicon_stats_json(lex);
  ProductionProfile human_profile;
  if (!humans.empty()) {
    metrics["human"] = human_stats_json(humans, lex);
    human_profile = production_profile(humans, lex);
  } else {
    metrics["human"] = nullptr;
  }
  metrics["experiments"] = json::object();
  for (const auto& [exp, runs] : by_exp) {
    metrics["experiments"]["exp" + std::to_string(exp)] =
        experiment_json(exp, runs, humans.empty() ? nullptr : &humans,
                        humans.empty() ? nullptr : &human_profile, lex);
  }
  write_file_atomic(out.metrics(), metrics.dump(2) + "\n");

  write_file_atomic(out.tables_dir() + "/human.txt", human_table(metrics));
  for (const auto& [exp, runs] : by_exp) {
    const std::string key = "exp" + std::to_string(exp);
    write_file_atomic(out.tables_dir() + "/accuracy_" + key + ".txt",
                      accuracy_table(exp, metrics["experiments"][key]));
  }
  write_file_atomic(out.tables_dir() + "/overlap.txt", overlap_table(metrics));
  write_file_atomic(out.tables_dir() + "/types.txt", types_table(metrics));
  return metrics;
}

// ---------------------------------------------------------------------------
// infer

std::vector<PredictionRow> cmd_infer(const InferOptions& opts, const Lexicon& lex) {
  neural::LoadedCheckpoint loaded = neural::load_checkpoint(opts.checkpoint);
  const ModelVariant variant = ModelVariant::parse(loaded.meta.variant_spec);
  const TrainingSets sets = build_training_sets(lex);
  const TokenClasses classes(lex.inventory());
  VariantAssets assets = build_assets(variant, lex, sets, classes);
  if (assets.src_vocab.fingerprint() != loaded.meta.src_vocab_fingerprint ||
      assets.tgt_vocab.fingerprint() != loaded.meta.tgt_vocab_fingerprint) {
    throw ValidationError("vocabulary fingerprint mismatch: the prepared lexicon does not match the "
                          "checkpoint " +
                          opts.checkpoint);
  }
  std::vector<PredictionRow> rows;
  for (const std::string& glyph : opts.glyphs) {
    const CharacterEntry& entry = lex.at(glyph);
    const std::vector<int> src = to_ids(encode_input(entry, variant, lex), assets.src_vocab);
    const auto hyps = neural::beam_search(*loaded.model, src, opts.beam_width, assets.beam_max_len,
                                          Vocabulary::kBegin, Vocabulary::kEnd);
    for (size_t rank = 0; rank < hyps.size(); ++rank) {
      PredictionRow row;
      row.variant = loaded.meta.variant_spec;
      row.seed = 0;
      row.glyph = glyph;
      row.rank = static_cast<int>(rank);
      for (int id : hyps[rank].tokens) row.tokens.push_back(assets.tgt_vocab.token(id));
      row.score = hyps[rank].score;
      rows.push_back(std::move(row));
    }
  }
  if (!opts.append_csv.empty()) {
    std::string csv;
    if (!fs::exists(opts.append_csv)) csv = predictions_csv_header() + "\n";
    for (const PredictionRow& row : rows) csv += format_prediction_row(row) + "\n";
    std::ofstream f(opts.append_csv, std::ios::app);
    if (!f) throw RunError("cannot append to " + opts.append_csv);
    f << csv;
  }
  return rows;
}

}  // namespace ccn

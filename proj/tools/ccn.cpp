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

#include <CLI11.hpp>
#include <iostream>

#include "ccn/runner.hpp"

namespace {

constexpr const char* kVariantHelp =
    "Comma-separated variant specs exp{1,2}/{all,mid,high,all+freq}/"
    "{base,label_m,label_s,label_mr,label_sr}/{+tone,-tone}/{+shuffle,-shuffle}; "
    "default: all 80 of the experiment";

int run(int argc, char** argv) {
  CLI::App app{"Unknown Chinese character naming lab"};
  app.require_subcommand(1);

  std::string out_flag;
  app.add_option("--out", out_flag, "Output root (default: $CCN_OUT or ./ccn_out)");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Validate data files and write the lexicon summary");
  ccn::DataPaths data;
  data.inventory = "data/inventory.txt";
  prepare->add_option("--chars", data.characters, "characters.tsv")->required();
  prepare->add_option("--radicals", data.radicals, "radicals.tsv")->required();
  prepare->add_option("--tests", data.tests, "test_chars.txt")->required();
  prepare->add_option("--human", data.human, "human_answers.csv (optional)");
  prepare->add_option("--inventory", data.inventory, "syllable inventory file");

  // matrix
  auto* matrix = app.add_subcommand("matrix", "Train and decode the (variant x seed) experiment matrix");
  ccn::ExperimentPlan plan;
  std::string variants_spec;
  matrix->add_option("--exp", plan.experiment, "Experiment (1 = ortho, 2 = ortho+pinyin)")
      ->check(CLI::IsMember({1, 2}))
      ->required();
  matrix->add_option("--variants", variants_spec, kVariantHelp);
  matrix->add_option("--seeds", plan.num_seeds, "Seeds per variant (default 5)");
  matrix->add_option("--jobs", plan.jobs, "Parallel runs (default: cores)");
  matrix->add_option("--master-seed", plan.master_seed, "Master seed (default 42)");
  matrix->add_option("--epochs", plan.train.max_epochs, "Max epochs (default 40)");
  matrix->add_option("--batch", plan.train.batch_size, "Batch size (default 16)");
  matrix->add_option("--warmup", plan.train.warmup_steps, "Warmup steps (default 400)");
  matrix->add_option("--patience", plan.train.patience, "Early-stopping patience (default 5)");
  matrix->add_option("--beam", plan.beam_width, "Beam width (default 3)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compute metrics.json and the report tables");
  std::string human_override;
  evaluate->add_option("--human", human_override, "human_answers.csv (default: the file given to prepare)");

  // report
  app.add_subcommand("report", "Render plots and summary.md from metrics.json");

  // infer
  auto* infer = app.add_subcommand("infer", "Decode characters with one trained checkpoint");
  ccn::InferOptions iopts;
  infer->add_option("--ckpt", iopts.checkpoint, "Checkpoint file")->required();
  infer->add_option("--glyph", iopts.glyphs, "Character(s) to decode")->required();
  infer->add_option("--beam", iopts.beam_width, "Beam width (default 3)");
  infer->add_option("--append-csv", iopts.append_csv, "Append hypotheses to this predictions CSV");

  CLI11_PARSE(app, argc, argv);
  const ccn::OutputPaths out = ccn::resolve_output_root(out_flag);

  if (prepare->parsed()) {
    ccn::cmd_prepare(data, out);
    std::cout << ccn::read_file(out.tables_dir() + "/prepare_summary.txt");
    std::cout << "wrote " << out.prepared() << " and " << out.lexicon_summary() << "\n";
    return 0;
  }
  if (matrix->parsed()) {
    if (!variants_spec.empty()) {
      for (const std::string& s : ccn::split(variants_spec, ',')) {
        plan.variants.push_back(ccn::ModelVariant::parse(ccn::trim(s)));
      }
    }
    const ccn::Lexicon lex = ccn::load_prepared(out);
    const ccn::MatrixSummary summary = ccn::cmd_matrix(plan, lex, out);
    std::cout << "matrix done: " << summary.trained << " trained, " << summary.reused << " reused, "
              << summary.failed << " failed\n";
    return summary.failed > 0 ? 2 : 0;
  }
  if (evaluate->parsed()) {
    std::string human_path;
    const ccn::Lexicon lex = ccn::load_prepared(out, &human_path);
    if (!human_override.empty()) human_path = human_override;
    ccn::cmd_evaluate(lex, out, human_path);
    std::cout << "wrote " << out.metrics() << " and " << out.tables_dir() << "/*.txt\n";
    return 0;
  }
  if (app.get_subcommand("report")->parsed()) {
    ccn::cmd_report(out);
    std::cout << "wrote " << out.plots_dir() << "/*.svg and " << out.root << "/summary.md\n";
    return 0;
  }
  if (infer->parsed()) {
    const ccn::Lexicon lex = ccn::load_prepared(out);
    const auto rows = ccn::cmd_infer(iopts, lex);
    const ccn::TokenClasses classes(lex.inventory());
    for (const auto& row : rows) {
      const ccn::ModelVariant variant = ccn::ModelVariant::parse(row.variant);
      const ccn::ParsedAnswer parsed = ccn::decode_output(row.tokens, variant, classes);
      std::cout << row.glyph << " rank " << row.rank << " score " << row.score << ": "
                << ccn::join(row.tokens, " ");
      if (parsed.valid) {
        std::cout << "  -> " << ccn::format_pinyin(*parsed.pinyin);
      } else {
        std::cout << "  -> (invalid)";
      }
      std::cout << "\n";
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ccn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ccn::RunError& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

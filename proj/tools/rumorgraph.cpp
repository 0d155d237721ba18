// Copyright 2026 The rumorgraph Authors.
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

#include "rumorgraph/cli.hpp"

namespace cli = rumorgraph::cli;

int main(int argc, char** argv) {
  CLI::App app{"rumorgraph: contrastive transfer for low-resource rumor detection"};
  app.require_subcommand(1);

  std::vector<std::string> validate_events;
  auto* validate = app.add_subcommand("validate", "Parse event files and print dataset statistics");
  validate->add_option("--events", validate_events, "Event file(s), JSONL")->required();

  cli::TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Train per a run config (cross-validation or fit)");
  train->add_option("--config", train_opts.config, "Run config JSON")->required();
  train->add_option("--out", train_opts.out, "Output directory (overrides output_dir)");
  train->add_option("--seed", train_opts.seed, "Master seed (overrides config)");
  train->add_option("--precision", train_opts.precision, "f32 or f64");
  train->add_option("--alpha", train_opts.alpha, "Contrastive weight (overrides config)");

  cli::SnapshotOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Evaluate a snapshot on an event file");
  cli::EarlyDetectOptions ed_opts;
  auto* earlydetect = app.add_subcommand("earlydetect", "Metrics at early-detection checkpoints");
  cli::SnapshotOptions pca_opts;
  auto* export_features =
      app.add_subcommand("export-features", "PCA projection of event representations");
  for (auto [cmd, o] : {std::pair{eval, &eval_opts}, std::pair{earlydetect, static_cast<cli::SnapshotOptions*>(&ed_opts)},
                        std::pair{export_features, &pca_opts}}) {
    cmd->add_option("--snapshot", o->snapshot, "Model snapshot")->required();
    cmd->add_option("--events", o->events, "Event file, JSONL")->required();
    cmd->add_option("--embeddings", o->embeddings,
                    "hashed:<dim>[:<seed>] or embedding file (default: from snapshot)");
    cmd->add_option("--precision", o->precision, "f32 or f64");
  }
  eval->add_option("--out", eval_opts.out, "Output directory");
  earlydetect->add_option("--out", ed_opts.out, "Output directory (default: CSV to stdout)");
  earlydetect->add_option("--checkpoints", ed_opts.checkpoints, "Comma-separated, e.g. 1,5,10,inf")
      ->required();
  earlydetect->add_option("--mode", ed_opts.mode, "time (seconds) or count (posts)")
      ->check(CLI::IsMember({"time", "count"}));
  export_features->add_option("--out", pca_opts.out, "Output directory")->required();

  std::string spec_path, synth_out;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic source/target benchmark");
  synth->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }

  if (*validate) return cli::cmd_validate(validate_events);
  if (*train) return cli::cmd_train(train_opts);
  if (*eval) return cli::cmd_eval(eval_opts);
  if (*earlydetect) return cli::cmd_earlydetect(ed_opts);
  if (*export_features) return cli::cmd_export_features(pca_opts);
  if (*synth) return cli::cmd_synth(spec_path, synth_out);
  return cli::kConfigError;
}

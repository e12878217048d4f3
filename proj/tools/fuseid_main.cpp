// tools/fuseid_main.cpp

// Copyright 2026  The Fuseid Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line driver for the full pipeline:
//
//   fuseid synth      write a synthetic embedding store
//   fuseid train      fit the two-branch fusion network
//   fuseid extract    dump fused features for one split (optionally masked)
//   fuseid svm-train  fit the one-vs-one kernel classifier on features
//   fuseid eval       score a classifier on features, write report files
//   fuseid baseline   voice-embeddings-straight-to-classifier reference run
//   fuseid compare    merge per-condition reports into one comparison
//
// The global --seed flag (environment fallback FUSEID_SEED) feeds every
// stochastic component. Commands that write a primary output also write
// `<output>.runlog.json` with the resolved configuration, SHA-256 hashes of
// the input files and wall-clock timing; report payloads never include
// timings, so fixed-seed reruns produce byte-identical reports.

#include <chrono>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fuseid/fuseid.hpp"

namespace {

using nlohmann::json;

class RunLogger {
 public:
  explicit RunLogger(const std::string& command)
      : start_(std::chrono::steady_clock::now()) {
    log_["command"] = command;
    log_["inputs"] = json::object();
    log_["outputs"] = json::object();
  }

  void set_config(json config) { log_["config"] = std::move(config); }

  void add_input(const std::string& path) {
    log_["inputs"][path] = fuseid::Sha256::of_file(path);
  }

  void add_output(const std::string& path) {
    log_["outputs"][path] = fuseid::Sha256::of_file(path);
  }

  void write(const std::string& path) {
    std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start_;
    log_["elapsed_seconds"] = elapsed.count();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
      throw fuseid::Error(fuseid::ErrorCode::kIo,
                          fuseid::Msg() << "cannot open for writing: " << path);
    out << log_.dump(2) << '\n';
    out.close();
    if (!out)
      throw fuseid::Error(fuseid::ErrorCode::kIo,
                          fuseid::Msg() << "write failed: " << path);
  }

 private:
  json log_;
  std::chrono::steady_clock::time_point start_;
};

std::string default_runlog_path(const std::string& out_path) {
  return out_path + ".runlog.json";
}

std::string format_top1(double top1) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << top1;
  return s.str();
}

// Options shared by every classifier-training command.
struct SvmFlags {
  std::string kernel = "poly";
  int degree = 3;
  double gamma = 0.0;
  double coef0 = 0.0;
  double regularization = 1.0;
  double tolerance = 1e-3;

  fuseid::SvmConfig to_config() const {
    fuseid::SvmConfig config;
    config.kernel.kind = fuseid::kernel_from_name(kernel);
    config.kernel.degree = degree;
    config.kernel.gamma = gamma;
    config.kernel.coef0 = coef0;
    config.regularization = regularization;
    config.tolerance = tolerance;
    return config;
  }

  json to_json() const {
    return {{"kernel", kernel},     {"degree", degree},
            {"gamma", gamma},       {"coef0", coef0},
            {"regularization", regularization}, {"tolerance", tolerance}};
  }
};

void add_svm_flags(CLI::App* cmd, SvmFlags& flags) {
  cmd->add_option("--kernel", flags.kernel, "Kernel type")
      ->check(CLI::IsMember({"linear", "poly", "rbf"}))
      ->capture_default_str();
  cmd->add_option("--degree", flags.degree, "Polynomial kernel degree")
      ->capture_default_str();
  cmd->add_option("--gamma", flags.gamma, "Kernel gamma; 0 means 1/dim")
      ->capture_default_str();
  cmd->add_option("--coef0", flags.coef0, "Polynomial kernel constant term")
      ->capture_default_str();
  cmd->add_option("--regularization", flags.regularization,
                  "Soft-margin regularization C")
      ->capture_default_str();
  cmd->add_option("--tolerance", flags.tolerance,
                  "KKT violation tolerance for the solver")
      ->capture_default_str();
}

// Builds a voice-only feature set from one split of an embedding store.
fuseid::FeatureSet voice_feature_set(
    const fuseid::DatasetManifest& manifest,
    const std::vector<fuseid::EmbeddingRecord>& records, fuseid::Split split) {
  fuseid::FeatureSet features;
  features.dim = manifest.voice_dim;
  features.masked = false;
  features.condition = fuseid::kBaselineCondition;
  features.split = fuseid::split_name(split);
  for (const fuseid::EmbeddingRecord& r : records) {
    if (r.split != split || r.modality != fuseid::Modality::kVoice) continue;
    features.labels.push_back(manifest.index_of(r.speaker_id));
    features.vectors.push_back(r.vector);
  }
  if (features.vectors.empty())
    throw fuseid::Error(fuseid::ErrorCode::kEmpty,
                        fuseid::Msg() << "no voice records in "
                                      << fuseid::split_name(split) << " split");
  return features;
}

void write_eval_outputs(const fuseid::EvalReport& report,
                        const std::string& report_path,
                        const std::string& confusion_path, RunLogger& logger) {
  if (!report_path.empty()) {
    fuseid::write_report_json(report, report_path);
    logger.add_output(report_path);
  }
  if (!confusion_path.empty()) {
    fuseid::write_confusion_csv(report.confusion, confusion_path);
    logger.add_output(confusion_path);
  }
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string run_log;
  fuseid::SynthConfig config;
};

void run_synth(const SynthArgs& args, std::uint64_t seed) {
  RunLogger logger("synth");
  fuseid::SynthConfig config = args.config;
  config.seed = seed;
  // A store with a single identity can never satisfy the downstream
  // two-speaker minimum, so reject it at generation time.
  if (config.num_identities < 2)
    throw fuseid::Error(fuseid::ErrorCode::kConfig,
                        fuseid::Msg() << "need at least 2 identities, got "
                                      << config.num_identities);
  logger.set_config({{"identities", config.num_identities},
                     {"latent_dim", config.latent_dim},
                     {"voice_dim", config.voice_dim},
                     {"face_dim", config.face_dim},
                     {"train_clips", config.clips_per_identity_train},
                     {"test_clips", config.clips_per_identity_test},
                     {"voice_noise", config.voice_noise_sigma},
                     {"face_noise", config.face_noise_sigma},
                     {"seed", config.seed}});
  std::vector<fuseid::EmbeddingRecord> records =
      fuseid::generate_synthetic(config);
  fuseid::write_embeddings(records, args.out);
  logger.add_output(args.out);
  logger.write(args.run_log.empty() ? default_runlog_path(args.out)
                                    : args.run_log);

  fuseid::DatasetManifest manifest = fuseid::build_manifest(records);
  std::cout << "wrote " << args.out << ": " << manifest.num_speakers
            << " speakers, voice " << manifest.voice_dim << "-D, face "
            << manifest.face_dim << "-D, "
            << manifest.train_counts.voice + manifest.train_counts.face
            << " train records, "
            << manifest.test_counts.voice + manifest.test_counts.face
            << " test records\n";
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string loss_history;
  std::string run_log;
  std::vector<std::size_t> branch_dims = {1024};
  std::size_t fusion_dim = 1024;
  std::vector<std::size_t> post_dims = {1024};
  double dropout_voice = 0.1;
  double dropout_face = 0.2;
  double learning_rate = 0.04;
  std::size_t batch_size = 2048;
  std::size_t epochs = 30;
};

void run_train(const TrainArgs& args, std::uint64_t seed) {
  RunLogger logger("train");
  logger.add_input(args.data);

  auto [manifest, records] = fuseid::read_embeddings(args.data);
  manifest.require_trainable(records);
  fuseid::PairingResult pairing =
      fuseid::pair_samples(records, fuseid::Split::kTrain, manifest);

  fuseid::ArchitectureSpec spec;
  spec.voice_in_dim = manifest.voice_dim;
  spec.face_in_dim = manifest.face_dim;
  spec.branch_hidden_dims = args.branch_dims;
  spec.fusion_dim = args.fusion_dim;
  spec.post_fusion_hidden_dims = args.post_dims;
  spec.num_classes = manifest.num_speakers;
  spec.dropout_voice = args.dropout_voice;
  spec.dropout_face = args.dropout_face;

  fuseid::TrainConfig train_config;
  train_config.learning_rate = args.learning_rate;
  train_config.batch_size = args.batch_size;
  train_config.epochs = args.epochs;
  train_config.seed = seed;

  std::size_t effective_batch =
      std::min(train_config.batch_size, pairing.pairs.size());
  logger.set_config({{"architecture",
                      {{"branch_dims", spec.branch_hidden_dims},
                       {"fusion_dim", spec.fusion_dim},
                       {"post_dims", spec.post_fusion_hidden_dims},
                       {"num_classes", spec.num_classes},
                       {"dropout_voice", spec.dropout_voice},
                       {"dropout_face", spec.dropout_face}}},
                     {"learning_rate", train_config.learning_rate},
                     {"batch_size", train_config.batch_size},
                     {"effective_batch_size", effective_batch},
                     {"epochs", train_config.epochs},
                     {"train_pairs", pairing.pairs.size()},
                     {"skipped_clips", pairing.skipped},
                     {"seed", seed}});

  fuseid::TwoBranchModel model = fuseid::build_model(spec, seed);
  std::vector<double> history =
      fuseid::train(model, pairing.pairs, train_config);
  fuseid::save_model(model, args.out);
  logger.add_output(args.out);

  std::string loss_path = args.loss_history.empty()
                              ? args.out + ".loss.json"
                              : args.loss_history;
  {
    json j;
    j["epochs"] = history.size();
    j["loss_per_epoch"] = history;
    std::ofstream out(loss_path, std::ios::binary | std::ios::trunc);
    if (!out)
      throw fuseid::Error(fuseid::ErrorCode::kIo,
                          fuseid::Msg() << "cannot open for writing: "
                                        << loss_path);
    out << j.dump(2) << '\n';
    out.close();
    if (!out)
      throw fuseid::Error(fuseid::ErrorCode::kIo,
                          fuseid::Msg() << "write failed: " << loss_path);
  }
  logger.add_output(loss_path);
  logger.write(args.run_log.empty() ? default_runlog_path(args.out)
                                    : args.run_log);

  std::cout << "trained on " << pairing.pairs.size() << " pairs ("
            << pairing.skipped << " skipped): lr=" << train_config.learning_rate
            << " batch=" << effective_batch << " epochs=" << history.size();
  if (!history.empty())
    std::cout << " first_loss=" << format_top1(history.front())
              << " final_loss=" << format_top1(history.back());
  std::cout << "\nwrote " << args.out << " and " << loss_path << "\n";
}

// --- extract ----------------------------------------------------------------

struct ExtractArgs {
  std::string data;
  std::string model;
  std::string out;
  std::string split;
  std::string condition;
  std::string run_log;
  bool mask_face = false;
};

void run_extract(const ExtractArgs& args, std::uint64_t /*seed*/) {
  RunLogger logger("extract");
  logger.add_input(args.data);
  logger.add_input(args.model);

  auto [manifest, records] = fuseid::read_embeddings(args.data);
  fuseid::TwoBranchModel model = fuseid::load_model(args.model);
  if (model.spec.voice_in_dim != manifest.voice_dim ||
      model.spec.face_in_dim != manifest.face_dim)
    throw fuseid::Error(
        fuseid::ErrorCode::kDimension,
        fuseid::Msg() << "model expects voice " << model.spec.voice_in_dim
                      << "-D / face " << model.spec.face_in_dim
                      << "-D, data has voice " << manifest.voice_dim
                      << "-D / face " << manifest.face_dim << "-D");

  fuseid::Split split = args.split == "train" ? fuseid::Split::kTrain
                                              : fuseid::Split::kTest;
  fuseid::PairingResult pairing =
      fuseid::pair_samples(records, split, manifest);

  fuseid::FeatureSet features;
  features.dim = model.spec.fusion_dim;
  features.masked = args.mask_face;
  features.condition = !args.condition.empty()
                           ? args.condition
                           : (args.mask_face ? fuseid::kMaskedCondition
                                             : fuseid::kAidedCondition);
  features.split = args.split;
  for (const fuseid::PairedSample& pair : pairing.pairs) {
    fuseid::FusedFeature fused = fuseid::extract_features(
        model, pair.voice,
        args.mask_face
            ? std::nullopt
            : std::optional<std::span<const float>>(pair.face));
    std::vector<float> row(fused.vector.size());
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = static_cast<float>(fused.vector[i]);
    features.labels.push_back(pair.speaker_index);
    features.vectors.push_back(std::move(row));
  }
  fuseid::write_features(features, args.out);
  logger.set_config({{"split", args.split},
                     {"mask_face", args.mask_face},
                     {"condition", features.condition},
                     {"feature_dim", features.dim},
                     {"count", features.size()},
                     {"skipped_clips", pairing.skipped}});
  logger.add_output(args.out);
  logger.write(args.run_log.empty() ? default_runlog_path(args.out)
                                    : args.run_log);

  std::cout << "extracted " << features.size() << " features ("
            << features.dim << "-D, " << features.condition << ", "
            << args.split << " split, " << pairing.skipped
            << " clips skipped) to " << args.out << "\n";
}

// --- svm-train --------------------------------------------------------------

struct SvmTrainArgs {
  std::string features;
  std::string out;
  std::string run_log;
  SvmFlags svm;
};

void run_svm_train(const SvmTrainArgs& args, std::uint64_t /*seed*/) {
  RunLogger logger("svm-train");
  logger.add_input(args.features);

  fuseid::FeatureSet features = fuseid::read_features(args.features);
  fuseid::SvmTrainReport report;
  fuseid::SvmModel model = fuseid::train_svm(features, args.svm.to_config(),
                                             &report);
  fuseid::save_svm(model, args.out);

  json config = args.svm.to_json();
  config["resolved_gamma"] = model.kernel.gamma;
  config["num_classes"] = model.num_classes;
  config["feature_dim"] = model.dim;
  config["train_samples"] = features.size();
  logger.set_config(std::move(config));
  logger.add_output(args.out);
  logger.write(args.run_log.empty() ? default_runlog_path(args.out)
                                    : args.run_log);

  std::cout << "trained " << report.machines << " pairwise machines on "
            << features.size() << " features (" << features.dim << "-D), "
            << report.unconverged << " unconverged, "
            << report.total_iterations << " total solver iterations\n"
            << "wrote " << args.out << "\n";
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string features;
  std::string svm;
  std::string report;
  std::string confusion;
  std::string condition;
  std::string run_log;
};

void run_eval(const EvalArgs& args, std::uint64_t /*seed*/) {
  RunLogger logger("eval");
  logger.add_input(args.features);
  logger.add_input(args.svm);

  fuseid::FeatureSet features = fuseid::read_features(args.features);
  fuseid::SvmModel model = fuseid::load_svm(args.svm);
  std::vector<int> predictions = fuseid::predict_all(model, features.vectors);

  std::string condition =
      !args.condition.empty() ? args.condition : features.condition;
  fuseid::EvalReport report = fuseid::evaluate(
      condition, predictions, features.labels, model.num_classes);

  logger.set_config({{"condition", condition},
                     {"n_samples", report.n_samples},
                     {"num_classes", model.num_classes}});
  write_eval_outputs(report, args.report, args.confusion, logger);
  if (!args.report.empty() || !args.run_log.empty())
    logger.write(args.run_log.empty() ? default_runlog_path(args.report)
                                      : args.run_log);

  std::cout << condition << ": top1=" << format_top1(report.top1) << " (n="
            << report.n_samples << ")\n";
}

// --- baseline ---------------------------------------------------------------

struct BaselineArgs {
  std::string data;
  std::string report;
  std::string confusion;
  std::string svm_out;
  std::string run_log;
  SvmFlags svm;
};

void run_baseline(const BaselineArgs& args, std::uint64_t /*seed*/) {
  RunLogger logger("baseline");
  logger.add_input(args.data);

  auto [manifest, records] = fuseid::read_embeddings(args.data);
  manifest.require_trainable(records);
  fuseid::FeatureSet train_features =
      voice_feature_set(manifest, records, fuseid::Split::kTrain);
  fuseid::FeatureSet test_features =
      voice_feature_set(manifest, records, fuseid::Split::kTest);

  fuseid::SvmTrainReport train_report;
  fuseid::SvmModel model = fuseid::train_svm(train_features,
                                             args.svm.to_config(),
                                             &train_report);
  if (!args.svm_out.empty()) {
    fuseid::save_svm(model, args.svm_out);
    logger.add_output(args.svm_out);
  }

  std::vector<int> predictions =
      fuseid::predict_all(model, test_features.vectors);
  fuseid::EvalReport report =
      fuseid::evaluate(fuseid::kBaselineCondition, predictions,
                       test_features.labels, model.num_classes);

  json config = args.svm.to_json();
  config["resolved_gamma"] = model.kernel.gamma;
  config["train_samples"] = train_features.size();
  config["test_samples"] = test_features.size();
  logger.set_config(std::move(config));
  write_eval_outputs(report, args.report, args.confusion, logger);
  if (!args.report.empty() || !args.run_log.empty())
    logger.write(args.run_log.empty() ? default_runlog_path(args.report)
                                      : args.run_log);

  std::cout << fuseid::kBaselineCondition
            << ": top1=" << format_top1(report.top1) << " (n="
            << report.n_samples << ", " << train_report.machines
            << " machines, " << train_report.unconverged << " unconverged)\n";
}

// --- compare ----------------------------------------------------------------

struct CompareArgs {
  std::vector<std::string> reports;
  std::string out;
  std::string run_log;
};

void run_compare(const CompareArgs& args, std::uint64_t /*seed*/) {
  RunLogger logger("compare");
  std::vector<fuseid::EvalReport> reports;
  for (const std::string& path : args.reports) {
    logger.add_input(path);
    reports.push_back(fuseid::read_report_json(path));
  }
  fuseid::Comparison comparison = fuseid::compare_conditions(reports);
  if (!args.out.empty()) {
    fuseid::write_comparison_json(comparison, args.out);
    logger.add_output(args.out);
  }
  logger.set_config({{"reports", args.reports}});
  if (!args.out.empty() || !args.run_log.empty())
    logger.write(args.run_log.empty() ? default_runlog_path(args.out)
                                      : args.run_log);
  std::cout << fuseid::render_comparison(comparison);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker identification with face-aided embedding fusion"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file");

  std::uint64_t seed = 7;
  app.add_option("--seed", seed, "Global seed for every stochastic component")
      ->envname("FUSEID_SEED")
      ->capture_default_str();

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth",
                                       "Generate a synthetic embedding store");
  synth->fallthrough();
  synth->add_option("--out", synth_args.out, "Output embedding file")
      ->required();
  synth->add_option("--identities", synth_args.config.num_identities,
                    "Number of speakers")
      ->capture_default_str();
  synth->add_option("--latent-dim", synth_args.config.latent_dim,
                    "Shared latent dimension")
      ->capture_default_str();
  synth->add_option("--voice-dim", synth_args.config.voice_dim,
                    "Voice embedding dimension")
      ->capture_default_str();
  synth->add_option("--face-dim", synth_args.config.face_dim,
                    "Face embedding dimension")
      ->capture_default_str();
  synth->add_option("--train-clips", synth_args.config.clips_per_identity_train,
                    "Train clips per identity")
      ->capture_default_str();
  synth->add_option("--test-clips", synth_args.config.clips_per_identity_test,
                    "Test clips per identity")
      ->capture_default_str();
  synth->add_option("--voice-noise", synth_args.config.voice_noise_sigma,
                    "Voice noise sigma")
      ->capture_default_str();
  synth->add_option("--face-noise", synth_args.config.face_noise_sigma,
                    "Face noise sigma")
      ->capture_default_str();
  synth->add_option("--run-log", synth_args.run_log, "Run log path override");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train",
                                       "Train the two-branch fusion network");
  train->fallthrough();
  train->add_option("--data", train_args.data, "Embedding file")->required();
  train->add_option("--out", train_args.out, "Output model file")->required();
  train->add_option("--loss-history", train_args.loss_history,
                    "Loss history JSON path (default <out>.loss.json)");
  train->add_option("--branch-dims", train_args.branch_dims,
                    "Branch hidden layer widths")
      ->delimiter(',')
      ->capture_default_str();
  train->add_option("--fusion-dim", train_args.fusion_dim,
                    "Fusion layer width")
      ->capture_default_str();
  train->add_option("--post-dims", train_args.post_dims,
                    "Post-fusion hidden layer widths")
      ->delimiter(',')
      ->capture_default_str();
  train->add_option("--dropout-voice", train_args.dropout_voice,
                    "Voice branch dropout rate")
      ->capture_default_str();
  train->add_option("--dropout-face", train_args.dropout_face,
                    "Face branch dropout rate")
      ->capture_default_str();
  train->add_option("--learning-rate", train_args.learning_rate,
                    "Adam learning rate")
      ->capture_default_str();
  train->add_option("--batch-size", train_args.batch_size,
                    "Mini-batch size (clamped to the dataset size)")
      ->capture_default_str();
  train->add_option("--epochs", train_args.epochs, "Training epochs")
      ->capture_default_str();
  train->add_option("--run-log", train_args.run_log, "Run log path override");

  ExtractArgs extract_args;
  CLI::App* extract = app.add_subcommand("extract",
                                         "Extract fused features for a split");
  extract->fallthrough();
  extract->add_option("--data", extract_args.data, "Embedding file")
      ->required();
  extract->add_option("--model", extract_args.model, "Trained model file")
      ->required();
  extract->add_option("--out", extract_args.out, "Output feature file")
      ->required();
  extract->add_option("--split", extract_args.split, "Split to extract")
      ->check(CLI::IsMember({"train", "test"}))
      ->required();
  extract->add_flag("--mask-face", extract_args.mask_face,
                    "Replace face inputs with zero vectors");
  extract->add_option("--condition", extract_args.condition,
                      "Condition name recorded in the feature file")
      ->check(CLI::IsMember({fuseid::kBaselineCondition,
                             fuseid::kAidedCondition,
                             fuseid::kMaskedCondition}));
  extract->add_option("--run-log", extract_args.run_log,
                      "Run log path override");

  SvmTrainArgs svm_train_args;
  CLI::App* svm_train = app.add_subcommand("svm-train",
                                           "Train the one-vs-one classifier");
  svm_train->fallthrough();
  svm_train->add_option("--features", svm_train_args.features,
                        "Training feature file")
      ->required();
  svm_train->add_option("--out", svm_train_args.out, "Output classifier file")
      ->required();
  add_svm_flags(svm_train, svm_train_args.svm);
  svm_train->add_option("--run-log", svm_train_args.run_log,
                        "Run log path override");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval",
                                      "Score a classifier on a feature file");
  eval->fallthrough();
  eval->add_option("--features", eval_args.features, "Feature file to score")
      ->required();
  eval->add_option("--svm", eval_args.svm, "Classifier file")->required();
  eval->add_option("--report", eval_args.report, "Report JSON output path");
  eval->add_option("--confusion", eval_args.confusion,
                   "Confusion matrix CSV output path");
  eval->add_option("--condition", eval_args.condition,
                   "Condition name override")
      ->check(CLI::IsMember({fuseid::kBaselineCondition,
                             fuseid::kAidedCondition,
                             fuseid::kMaskedCondition}));
  eval->add_option("--run-log", eval_args.run_log, "Run log path override");

  BaselineArgs baseline_args;
  CLI::App* baseline = app.add_subcommand(
      "baseline", "Train and score the voice-only reference classifier");
  baseline->fallthrough();
  baseline->add_option("--data", baseline_args.data, "Embedding file")
      ->required();
  baseline->add_option("--report", baseline_args.report,
                       "Report JSON output path");
  baseline->add_option("--confusion", baseline_args.confusion,
                       "Confusion matrix CSV output path");
  baseline->add_option("--svm-out", baseline_args.svm_out,
                       "Optional classifier file output");
  add_svm_flags(baseline, baseline_args.svm);
  baseline->add_option("--run-log", baseline_args.run_log,
                       "Run log path override");

  CompareArgs compare_args;
  CLI::App* compare = app.add_subcommand(
      "compare", "Merge per-condition reports into one comparison");
  compare->fallthrough();
  compare->add_option("--reports", compare_args.reports,
                      "Report JSON files to merge")
      ->required()
      ->expected(-1);
  compare->add_option("--out", compare_args.out, "Comparison JSON output path");
  compare->add_option("--run-log", compare_args.run_log,
                      "Run log path override");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) run_synth(synth_args, seed);
    if (train->parsed()) run_train(train_args, seed);
    if (extract->parsed()) run_extract(extract_args, seed);
    if (svm_train->parsed()) run_svm_train(svm_train_args, seed);
    if (eval->parsed()) run_eval(eval_args, seed);
    if (baseline->parsed()) run_baseline(baseline_args, seed);
    if (compare->parsed()) run_compare(compare_args, seed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const fuseid::Error& e) {
    std::cerr << fuseid::code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "E_UNEXPECTED: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

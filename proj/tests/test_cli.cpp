// tests/test_cli.cpp

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

// End-to-end tests that drive the installed binary through a shell, the way
// a user would.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fuseid/fuseid.hpp"

#include "support/cli_runner.hpp"
#include "support/temp_dir.hpp"

using namespace fuseid;
using Catch::Matchers::ContainsSubstring;
using fuseid::test::CliResult;
using fuseid::test::TempDir;
using fuseid::test::run_cli;
using fuseid::test::slurp;

namespace {

// Small synth arguments used throughout: 3 identities, 8-D embeddings.
std::string small_synth(const std::string& out, const std::string& extra = "") {
  return "synth --out " + out +
         " --identities 3 --latent-dim 4 --voice-dim 8 --face-dim 8"
         " --train-clips 4 --test-clips 2 " +
         extra;
}

std::string small_train(const std::string& data, const std::string& out,
                        const std::string& extra = "") {
  return "train --data " + data + " --out " + out +
         " --branch-dims 8 --fusion-dim 8 --post-dims 8"
         " --learning-rate 0.02 --batch-size 8 --epochs 2 " +
         extra;
}

}  // namespace

TEST_CASE("synth writes a byte-deterministic store", "[cli]") {
  TempDir tmp;
  CliResult first = run_cli(tmp, small_synth(tmp.file("a.bin"), "--seed 11"));
  INFO(first.err);
  REQUIRE(first.exit_code == 0);
  REQUIRE_THAT(first.out, ContainsSubstring("3 speakers"));

  CliResult second = run_cli(tmp, small_synth(tmp.file("b.bin"), "--seed 11"));
  REQUIRE(second.exit_code == 0);
  REQUIRE(Sha256::of_file(tmp.file("a.bin")) ==
          Sha256::of_file(tmp.file("b.bin")));

  CliResult other = run_cli(tmp, small_synth(tmp.file("c.bin"), "--seed 12"));
  REQUIRE(other.exit_code == 0);
  REQUIRE(Sha256::of_file(tmp.file("a.bin")) !=
          Sha256::of_file(tmp.file("c.bin")));
}

TEST_CASE("FUSEID_SEED is the seed fallback", "[cli]") {
  TempDir tmp;
  CliResult env_run =
      run_cli(tmp, small_synth(tmp.file("env.bin")), "FUSEID_SEED=23");
  INFO(env_run.err);
  REQUIRE(env_run.exit_code == 0);
  CliResult flag_run = run_cli(tmp, small_synth(tmp.file("flag.bin"),
                                                "--seed 23"));
  REQUIRE(flag_run.exit_code == 0);
  REQUIRE(Sha256::of_file(tmp.file("env.bin")) ==
          Sha256::of_file(tmp.file("flag.bin")));

  // An explicit flag wins over the environment.
  CliResult both = run_cli(tmp, small_synth(tmp.file("both.bin"), "--seed 23"),
                           "FUSEID_SEED=99");
  REQUIRE(both.exit_code == 0);
  REQUIRE(Sha256::of_file(tmp.file("both.bin")) ==
          Sha256::of_file(tmp.file("flag.bin")));
}

TEST_CASE("synth rejects degenerate configurations", "[cli]") {
  TempDir tmp;
  CliResult result = run_cli(
      tmp, "synth --out " + tmp.file("x.bin") + " --identities 1");
  REQUIRE(result.exit_code == 1);
  REQUIRE_THAT(result.err, ContainsSubstring("E_CONFIG"));
}

TEST_CASE("training is seed-deterministic end to end", "[cli]") {
  TempDir tmp;
  REQUIRE(run_cli(tmp, small_synth(tmp.file("d.bin"), "--seed 3")).exit_code ==
          0);
  CliResult a =
      run_cli(tmp, small_train(tmp.file("d.bin"), tmp.file("m1.bin"),
                               "--seed 5"));
  INFO(a.err);
  REQUIRE(a.exit_code == 0);
  CliResult b =
      run_cli(tmp, small_train(tmp.file("d.bin"), tmp.file("m2.bin"),
                               "--seed 5"));
  REQUIRE(b.exit_code == 0);
  REQUIRE(Sha256::of_file(tmp.file("m1.bin")) ==
          Sha256::of_file(tmp.file("m2.bin")));

  // Loss history files match too.
  REQUIRE(slurp(tmp.file("m1.bin") + ".loss.json") ==
          slurp(tmp.file("m2.bin") + ".loss.json"));
}

TEST_CASE("the full pipeline produces reports and a comparison", "[cli]") {
  TempDir tmp;
  std::string data = tmp.file("data.bin");
  std::string model = tmp.file("model.bin");
  REQUIRE(run_cli(tmp, small_synth(data, "--seed 7")).exit_code == 0);
  REQUIRE(run_cli(tmp, small_train(data, model, "--seed 7")).exit_code == 0);

  std::string train_features = tmp.file("train.fea");
  std::string test_features = tmp.file("test.fea");
  std::string masked_features = tmp.file("masked.fea");
  CliResult ex1 = run_cli(tmp, "extract --data " + data + " --model " + model +
                                   " --out " + train_features +
                                   " --split train");
  INFO(ex1.err);
  REQUIRE(ex1.exit_code == 0);
  REQUIRE_THAT(ex1.out, ContainsSubstring("fused_aided"));
  REQUIRE(run_cli(tmp, "extract --data " + data + " --model " + model +
                           " --out " + test_features + " --split test")
              .exit_code == 0);
  CliResult ex3 = run_cli(tmp, "extract --data " + data + " --model " + model +
                                   " --out " + masked_features +
                                   " --split test --mask-face");
  REQUIRE(ex3.exit_code == 0);
  REQUIRE_THAT(ex3.out, ContainsSubstring("fused_masked"));

  std::string svm = tmp.file("model.svm");
  CliResult svm_run =
      run_cli(tmp, "svm-train --features " + train_features + " --out " + svm);
  INFO(svm_run.err);
  REQUIRE(svm_run.exit_code == 0);
  REQUIRE_THAT(svm_run.out, ContainsSubstring("3 pairwise machines"));

  std::string aided_report = tmp.file("aided.json");
  CliResult eval_aided =
      run_cli(tmp, "eval --features " + test_features + " --svm " + svm +
                       " --report " + aided_report + " --confusion " +
                       tmp.file("aided.csv"));
  INFO(eval_aided.err);
  REQUIRE(eval_aided.exit_code == 0);
  REQUIRE_THAT(eval_aided.out, ContainsSubstring("fused_aided: top1="));

  std::string masked_report = tmp.file("masked.json");
  REQUIRE(run_cli(tmp, "eval --features " + masked_features + " --svm " + svm +
                           " --report " + masked_report)
              .exit_code == 0);

  std::string baseline_report = tmp.file("baseline.json");
  CliResult baseline =
      run_cli(tmp, "baseline --data " + data + " --report " + baseline_report +
                       " --svm-out " + tmp.file("baseline.svm"));
  INFO(baseline.err);
  REQUIRE(baseline.exit_code == 0);
  REQUIRE_THAT(baseline.out, ContainsSubstring("voice_only_baseline: top1="));

  std::string comparison = tmp.file("comparison.json");
  CliResult compare = run_cli(
      tmp, "compare --reports " + baseline_report + " " + aided_report + " " +
               masked_report + " --out " + comparison);
  INFO(compare.err);
  REQUIRE(compare.exit_code == 0);
  REQUIRE_THAT(compare.out, ContainsSubstring("voice_only_baseline"));
  REQUIRE_THAT(compare.out, ContainsSubstring("fused_aided"));
  REQUIRE_THAT(compare.out, ContainsSubstring("fused_masked"));

  nlohmann::json j = nlohmann::json::parse(slurp(comparison));
  REQUIRE(j.at("conditions").size() == 3);
  REQUIRE(j.at("deltas").contains("fused_aided"));
  REQUIRE(j.at("deltas").contains("fused_masked"));

  // The confusion CSV covers all three classes.
  std::string csv = slurp(tmp.file("aided.csv"));
  REQUIRE_THAT(csv, ContainsSubstring("true_class,pred_0,pred_1,pred_2"));
}

TEST_CASE("masked extraction equals extraction from a zeroed-face store",
          "[cli]") {
  TempDir tmp;
  std::string data = tmp.file("data.bin");
  std::string model = tmp.file("model.bin");
  REQUIRE(run_cli(tmp, small_synth(data, "--seed 19")).exit_code == 0);
  REQUIRE(run_cli(tmp, small_train(data, model, "--seed 19")).exit_code == 0);

  // Zero every face vector through the library and write a second store.
  auto [manifest, records] = read_embeddings(data);
  (void)manifest;
  for (EmbeddingRecord& r : records)
    if (r.modality == Modality::kFace)
      std::fill(r.vector.begin(), r.vector.end(), 0.0f);
  std::string zeroed = tmp.file("zeroed.bin");
  write_embeddings(records, zeroed);

  std::string masked = tmp.file("masked.fea");
  std::string explicit_zero = tmp.file("zeroed.fea");
  REQUIRE(run_cli(tmp, "extract --data " + data + " --model " + model +
                           " --out " + masked + " --split test --mask-face")
              .exit_code == 0);
  REQUIRE(run_cli(tmp, "extract --data " + zeroed + " --model " + model +
                           " --out " + explicit_zero + " --split test")
              .exit_code == 0);

  FeatureSet a = read_features(masked);
  FeatureSet b = read_features(explicit_zero);
  REQUIRE(a.masked);
  REQUIRE_FALSE(b.masked);
  REQUIRE(a.labels == b.labels);
  REQUIRE(a.vectors == b.vectors);  // exact equality, float for float
}

TEST_CASE("zero epochs produces a loadable untouched model", "[cli]") {
  TempDir tmp;
  std::string data = tmp.file("data.bin");
  REQUIRE(run_cli(tmp, small_synth(data, "--seed 2")).exit_code == 0);
  CliResult result = run_cli(
      tmp, "train --data " + data + " --out " + tmp.file("m.bin") +
               " --branch-dims 8 --fusion-dim 8 --post-dims 8"
               " --batch-size 8 --epochs 0 --seed 4");
  INFO(result.err);
  REQUIRE(result.exit_code == 0);

  TwoBranchModel model = load_model(tmp.file("m.bin"));
  REQUIRE(model.spec.num_classes == 3);
  nlohmann::json loss = nlohmann::json::parse(slurp(tmp.file("m.bin") +
                                                    ".loss.json"));
  REQUIRE(loss.at("epochs").get<std::size_t>() == 0);
  REQUIRE(loss.at("loss_per_epoch").empty());
}

TEST_CASE("a noise-free pipeline is solved perfectly", "[cli]") {
  TempDir tmp;
  std::string data = tmp.file("data.bin");
  std::string model = tmp.file("model.bin");
  REQUIRE(run_cli(tmp, small_synth(data,
                                   "--voice-noise 0 --face-noise 0 --seed 6"))
              .exit_code == 0);
  REQUIRE(run_cli(tmp, small_train(data, model, "--seed 6")).exit_code == 0);

  std::string train_features = tmp.file("train.fea");
  std::string test_features = tmp.file("test.fea");
  REQUIRE(run_cli(tmp, "extract --data " + data + " --model " + model +
                           " --out " + train_features + " --split train")
              .exit_code == 0);
  REQUIRE(run_cli(tmp, "extract --data " + data + " --model " + model +
                           " --out " + test_features + " --split test")
              .exit_code == 0);
  std::string svm = tmp.file("m.svm");
  REQUIRE(run_cli(tmp, "svm-train --features " + train_features + " --out " +
                           svm)
              .exit_code == 0);
  CliResult eval_run =
      run_cli(tmp, "eval --features " + test_features + " --svm " + svm);
  INFO(eval_run.err);
  REQUIRE(eval_run.exit_code == 0);
  REQUIRE_THAT(eval_run.out, ContainsSubstring("top1=1.0000"));
}

TEST_CASE("failures map to stable error codes", "[cli]") {
  TempDir tmp;

  SECTION("missing input file") {
    CliResult result = run_cli(tmp, "eval --features " + tmp.file("no.fea") +
                                        " --svm " + tmp.file("no.svm"));
    REQUIRE(result.exit_code == 1);
    REQUIRE_THAT(result.err, ContainsSubstring("E_IO"));
  }

  SECTION("wrong file type") {
    std::string data = tmp.file("data.bin");
    std::string model = tmp.file("model.bin");
    REQUIRE(run_cli(tmp, small_synth(data, "--seed 8")).exit_code == 0);
    REQUIRE(run_cli(tmp, small_train(data, model, "--seed 8")).exit_code == 0);
    CliResult result = run_cli(
        tmp, "svm-train --features " + model + " --out " + tmp.file("x.svm"));
    REQUIRE(result.exit_code == 1);
    REQUIRE_THAT(result.err, ContainsSubstring("E_FORMAT"));
  }

  SECTION("dimension mismatch between model and data") {
    std::string data = tmp.file("data.bin");
    std::string model = tmp.file("model.bin");
    REQUIRE(run_cli(tmp, small_synth(data, "--seed 8")).exit_code == 0);
    REQUIRE(run_cli(tmp, small_train(data, model, "--seed 8")).exit_code == 0);
    std::string wide = tmp.file("wide.bin");
    REQUIRE(run_cli(tmp, "synth --out " + wide +
                             " --identities 3 --latent-dim 4 --voice-dim 12"
                             " --face-dim 8 --train-clips 4 --test-clips 2"
                             " --seed 8")
                .exit_code == 0);
    CliResult result =
        run_cli(tmp, "extract --data " + wide + " --model " + model +
                         " --out " + tmp.file("x.fea") + " --split test");
    REQUIRE(result.exit_code == 1);
    REQUIRE_THAT(result.err, ContainsSubstring("E_DIMENSION"));
  }

  SECTION("bad flag value is a usage error") {
    CliResult result =
        run_cli(tmp, "extract --data x --model y --out z --split nope");
    REQUIRE(result.exit_code != 0);
    REQUIRE(result.exit_code != 1);  // CLI11 usage errors, not pipeline errors
    REQUIRE_THAT(result.err, ContainsSubstring("--split"));
  }

  SECTION("comparing a single report is rejected") {
    std::string data = tmp.file("data.bin");
    std::string report = tmp.file("r.json");
    REQUIRE(run_cli(tmp, small_synth(data, "--seed 8")).exit_code == 0);
    REQUIRE(run_cli(tmp, "baseline --data " + data + " --report " + report)
                .exit_code == 0);
    CliResult result = run_cli(tmp, "compare --reports " + report);
    REQUIRE(result.exit_code == 1);
    REQUIRE_THAT(result.err, ContainsSubstring("E_VALIDATION"));
  }
}

TEST_CASE("run logs capture config, hashes and timing", "[cli]") {
  TempDir tmp;
  std::string data = tmp.file("data.bin");
  std::string log = tmp.file("synth.runlog.json");
  REQUIRE(run_cli(tmp, small_synth(data, "--seed 13 --run-log " + log))
              .exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(log));
  REQUIRE(j.at("command") == "synth");
  REQUIRE(j.at("config").at("seed") == 13);
  REQUIRE(j.at("outputs").contains(data));
  REQUIRE(j.at("elapsed_seconds").get<double>() >= 0.0);

  // Without --run-log the log lands next to the primary output.
  std::string model = tmp.file("model.bin");
  REQUIRE(run_cli(tmp, small_train(data, model, "--seed 13")).exit_code == 0);
  nlohmann::json train_log =
      nlohmann::json::parse(slurp(model + ".runlog.json"));
  REQUIRE(train_log.at("command") == "train");
  REQUIRE(train_log.at("inputs").contains(data));
  REQUIRE(train_log.at("outputs").contains(model));
  REQUIRE(train_log.at("config").at("epochs") == 2);

  // The report itself carries no timing, so identical runs stay identical.
  std::string report1 = tmp.file("b1.json");
  std::string report2 = tmp.file("b2.json");
  REQUIRE(run_cli(tmp, "baseline --data " + data + " --report " + report1)
              .exit_code == 0);
  REQUIRE(run_cli(tmp, "baseline --data " + data + " --report " + report2)
              .exit_code == 0);
  REQUIRE(slurp(report1) == slurp(report2));
}

TEST_CASE("a config file supplies option defaults", "[cli]") {
  TempDir tmp;
  std::string config_path = tmp.file("run.ini");
  {
    std::ofstream config(config_path);
    config << "seed=31\n\n[synth]\nidentities=4\nlatent-dim=4\n"
              "voice-dim=8\nface-dim=8\ntrain-clips=3\ntest-clips=2\n";
  }
  CliResult from_config =
      run_cli(tmp, "--config " + config_path + " synth --out " +
                       tmp.file("cfg.bin"));
  INFO(from_config.err);
  REQUIRE(from_config.exit_code == 0);
  REQUIRE_THAT(from_config.out, ContainsSubstring("4 speakers"));

  CliResult from_flags = run_cli(
      tmp, "synth --out " + tmp.file("flags.bin") +
               " --identities 4 --latent-dim 4 --voice-dim 8 --face-dim 8"
               " --train-clips 3 --test-clips 2 --seed 31");
  REQUIRE(from_flags.exit_code == 0);
  REQUIRE(Sha256::of_file(tmp.file("cfg.bin")) ==
          Sha256::of_file(tmp.file("flags.bin")));

  // A flag overrides the config file value.
  CliResult overridden =
      run_cli(tmp, "--config " + config_path + " synth --out " +
                       tmp.file("over.bin") + " --identities 5");
  INFO(overridden.err);
  REQUIRE(overridden.exit_code == 0);
  REQUIRE_THAT(overridden.out, ContainsSubstring("5 speakers"));
}

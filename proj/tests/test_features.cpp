// tests/test_features.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <limits>

#include "fuseid/features.hpp"
#include "fuseid/sha256.hpp"

#include "support/temp_dir.hpp"

using namespace fuseid;
using fuseid::test::TempDir;

namespace {

FeatureSet sample_set() {
  FeatureSet fs;
  fs.dim = 3;
  fs.masked = true;
  fs.condition = "fused_masked";
  fs.split = "test";
  fs.labels = {0, 2, 1};
  fs.vectors = {{0.25f, -1.5f, 3.0f},
                {1.0f, 2.0f, -0.125f},
                {0.0f, 0.0f, 9.5f}};
  return fs;
}

bool throws_code(void (*fn)(const std::string&), const std::string& path,
                 ErrorCode code) {
  try {
    fn(path);
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

void read_features_void(const std::string& path) { (void)read_features(path); }

}  // namespace

TEST_CASE("feature files round-trip exactly", "[features]") {
  TempDir tmp;
  std::string path = tmp.file("features.bin");
  FeatureSet fs = sample_set();
  write_features(fs, path);
  FeatureSet loaded = read_features(path);
  REQUIRE(loaded.dim == fs.dim);
  REQUIRE(loaded.masked == fs.masked);
  REQUIRE(loaded.condition == fs.condition);
  REQUIRE(loaded.split == fs.split);
  REQUIRE(loaded.labels == fs.labels);
  REQUIRE(loaded.vectors == fs.vectors);

  std::string path2 = tmp.file("features2.bin");
  write_features(loaded, path2);
  REQUIRE(Sha256::of_file(path) == Sha256::of_file(path2));
}

TEST_CASE("empty feature set round-trips", "[features]") {
  TempDir tmp;
  std::string path = tmp.file("empty.bin");
  FeatureSet fs;
  fs.dim = 7;
  fs.condition = "voice_only_baseline";
  fs.split = "train";
  write_features(fs, path);
  FeatureSet loaded = read_features(path);
  REQUIRE(loaded.size() == 0);
  REQUIRE(loaded.dim == 7);
  REQUIRE_FALSE(loaded.masked);
}

TEST_CASE("feature file failure modes", "[features]") {
  TempDir tmp;
  std::string path = tmp.file("features.bin");
  write_features(sample_set(), path);

  SECTION("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');
    f.close();
    REQUIRE(throws_code(&read_features_void, path, ErrorCode::kFormat));
  }

  SECTION("truncation") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 2);
    REQUIRE(throws_code(&read_features_void, path, ErrorCode::kFormat));
  }

  SECTION("trailing bytes") {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    f.put('\0');
    f.close();
    REQUIRE(throws_code(&read_features_void, path, ErrorCode::kFormat));
  }

  SECTION("missing file") {
    REQUIRE(throws_code(&read_features_void, tmp.file("nope.bin"),
                        ErrorCode::kIo));
  }
}

TEST_CASE("feature validation rejects bad rows", "[features]") {
  TempDir tmp;

  FeatureSet ragged = sample_set();
  ragged.vectors[1].pop_back();
  REQUIRE_THROWS_MATCHES(
      write_features(ragged, tmp.file("a.bin")), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::kDimension; }));

  FeatureSet negative = sample_set();
  negative.labels[0] = -4;
  REQUIRE_THROWS_MATCHES(
      write_features(negative, tmp.file("b.bin")), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::kValidation; }));

  FeatureSet nonfinite = sample_set();
  nonfinite.vectors[2][0] = std::numeric_limits<float>::quiet_NaN();
  REQUIRE_THROWS_MATCHES(
      write_features(nonfinite, tmp.file("c.bin")), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::kValidation; }));

  FeatureSet mismatched = sample_set();
  mismatched.labels.pop_back();
  REQUIRE_THROWS_MATCHES(
      write_features(mismatched, tmp.file("d.bin")), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::kValidation; }));
}

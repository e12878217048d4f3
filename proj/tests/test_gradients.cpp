// tests/test_gradients.cpp

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

#include "fuseid/two_branch.hpp"

#include "support/grad_check.hpp"

using namespace fuseid;
using fuseid::test::GradCheckReport;
using fuseid::test::check_model_gradients;
using fuseid::test::random_small_spec;

TEST_CASE("every parameter gradient of a 2-layer toy net matches FD",
          "[gradients]") {
  ArchitectureSpec spec;
  spec.voice_in_dim = 4;
  spec.face_in_dim = 4;
  spec.branch_hidden_dims = {4};
  spec.fusion_dim = 4;
  spec.post_fusion_hidden_dims = {};
  spec.num_classes = 3;
  spec.dropout_voice = 0.0;
  spec.dropout_face = 0.0;
  GradCheckReport report = check_model_gradients(spec, 11);
  INFO("max relative error " << report.max_rel_err);
  CHECK(report.params_checked > 0);
  CHECK(report.failures == 0);
}

TEST_CASE("gradients match FD across 20 random small networks", "[gradients]") {
  std::size_t total_params = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    ArchitectureSpec spec = random_small_spec(k);
    GradCheckReport report = check_model_gradients(spec, 1000 + k);
    INFO("network " << k << ": " << report.params_checked
                    << " params, max rel err " << report.max_rel_err);
    CHECK(report.failures == 0);
    total_params += report.params_checked;
  }
  REQUIRE(total_params > 500);
}

TEST_CASE("gradients survive active dropout with frozen masks", "[gradients]") {
  ArchitectureSpec spec;
  spec.voice_in_dim = 6;
  spec.face_in_dim = 6;
  spec.branch_hidden_dims = {8, 6};
  spec.fusion_dim = 6;
  spec.post_fusion_hidden_dims = {6};
  spec.num_classes = 4;
  spec.dropout_voice = 0.3;
  spec.dropout_face = 0.3;
  GradCheckReport report = check_model_gradients(spec, 77);
  INFO("max relative error " << report.max_rel_err);
  CHECK(report.failures == 0);
}

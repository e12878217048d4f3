// fuseid/fuseid.hpp

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

// Convenience header pulling in the whole library.

#ifndef FUSEID_FUSEID_HPP_
#define FUSEID_FUSEID_HPP_

#include "fuseid/binio.hpp"
#include "fuseid/common.hpp"
#include "fuseid/embedding_store.hpp"
#include "fuseid/eval.hpp"
#include "fuseid/features.hpp"
#include "fuseid/netcore.hpp"
#include "fuseid/rng.hpp"
#include "fuseid/sha256.hpp"
#include "fuseid/svm.hpp"
#include "fuseid/two_branch.hpp"

#endif  // FUSEID_FUSEID_HPP_

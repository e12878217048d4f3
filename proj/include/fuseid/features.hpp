// fuseid/features.hpp

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

// Labeled feature matrices, as produced by the extraction stage and consumed
// by the classifier stages.
//
// FUSEFEA1 layout (little-endian):
//   bytes 0..7  magic "FUSEFEA1"
//   u32         header length
//   ...         UTF-8 JSON header {condition, count, dim, masked, split}
//   count x     u32 speaker index followed by dim f32 values

#ifndef FUSEID_FEATURES_HPP_
#define FUSEID_FEATURES_HPP_

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fuseid/binio.hpp"
#include "fuseid/common.hpp"

namespace fuseid {

constexpr char kFeatureMagic[8] = {'F', 'U', 'S', 'E', 'F', 'E', 'A', '1'};

struct FeatureSet {
  std::size_t dim = 0;
  bool masked = false;
  std::string condition;  // e.g. "fused_aided"
  std::string split;      // "train" or "test"
  std::vector<int> labels;
  std::vector<std::vector<float>> vectors;

  std::size_t size() const { return vectors.size(); }

  void validate() const {
    if (labels.size() != vectors.size())
      throw Error(ErrorCode::kValidation,
                  Msg() << "label count " << labels.size()
                        << " != vector count " << vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != dim)
        throw Error(ErrorCode::kDimension,
                    Msg() << "feature row " << i << " has dim "
                          << vectors[i].size() << ", expected " << dim);
      if (!all_finite(vectors[i]))
        throw Error(ErrorCode::kValidation,
                    Msg() << "non-finite value in feature row " << i);
      if (labels[i] < 0)
        throw Error(ErrorCode::kValidation,
                    Msg() << "negative label in feature row " << i);
    }
  }
};

inline void write_features(const FeatureSet& features, const std::string& path) {
  features.validate();
  nlohmann::json j;
  j["condition"] = features.condition;
  j["count"] = features.size();
  j["dim"] = features.dim;
  j["masked"] = features.masked;
  j["split"] = features.split;
  std::string header = j.dump();

  BinaryWriter out(path);
  out.put_bytes(kFeatureMagic, sizeof(kFeatureMagic));
  out.put(static_cast<std::uint32_t>(header.size()));
  out.put_string(header);
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.put(static_cast<std::uint32_t>(features.labels[i]));
    out.put_floats(features.vectors[i]);
  }
  out.close();
}

inline FeatureSet read_features(const std::string& path) {
  BinaryReader in(path);
  char magic[8];
  in.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kFeatureMagic, sizeof(magic)) != 0)
    throw Error(ErrorCode::kFormat, Msg() << "not a FUSEFEA1 file: " << path);
  auto header_len = in.get<std::uint32_t>();
  FeatureSet features;
  std::size_t count = 0;
  try {
    nlohmann::json j = nlohmann::json::parse(in.get_string(header_len));
    features.condition = j.at("condition").get<std::string>();
    count = j.at("count").get<std::size_t>();
    features.dim = j.at("dim").get<std::size_t>();
    features.masked = j.at("masked").get<bool>();
    features.split = j.at("split").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, Msg() << "bad feature header: " << e.what());
  }
  features.labels.reserve(count);
  features.vectors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    features.labels.push_back(static_cast<int>(in.get<std::uint32_t>()));
    std::vector<float> row(features.dim);
    in.get_floats(row);
    features.vectors.push_back(std::move(row));
  }
  if (!in.at_eof())
    throw Error(ErrorCode::kFormat,
                Msg() << "trailing bytes in feature file: " << path);
  features.validate();
  return features;
}

}  // namespace fuseid

#endif  // FUSEID_FEATURES_HPP_

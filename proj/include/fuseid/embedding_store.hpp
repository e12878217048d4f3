// fuseid/embedding_store.hpp

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

// Embedding data model and the FUSEID1 container.
//
// FUSEID1 layout (everything little-endian):
//   bytes 0..7   magic "FUSEID1\0"
//   u32          header length
//   ...          UTF-8 JSON header {"face_dim", "record_count", "voice_dim"}
//   per record:  u16 speaker_id length + bytes
//                u16 clip_id length + bytes
//                u8 split (0 = train, 1 = test)
//                u8 modality (0 = voice, 1 = face)
//                f32 x dim(modality) vector components
//
// Record vectors carry no per-record length; the per-modality dimension in
// the header is authoritative. Files round-trip bit-exactly.

#ifndef FUSEID_EMBEDDING_STORE_HPP_
#define FUSEID_EMBEDDING_STORE_HPP_

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fuseid/binio.hpp"
#include "fuseid/common.hpp"
#include "fuseid/netcore.hpp"
#include "fuseid/rng.hpp"

namespace fuseid {

constexpr char kEmbeddingMagic[8] = {'F', 'U', 'S', 'E', 'I', 'D', '1', '\0'};

enum class Split : std::uint8_t { kTrain = 0, kTest = 1 };
enum class Modality : std::uint8_t { kVoice = 0, kFace = 1 };

inline const char* split_name(Split s) {
  return s == Split::kTrain ? "train" : "test";
}

inline Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kConfig, Msg() << "unknown split: " << name);
}

// One modality vector for one (speaker, clip); the unit of ingestion.
struct EmbeddingRecord {
  std::string speaker_id;
  std::string clip_id;
  Split split = Split::kTrain;
  Modality modality = Modality::kVoice;
  std::vector<float> vector;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct SplitCounts {
  std::size_t voice = 0;
  std::size_t face = 0;
};

struct DatasetManifest {
  std::size_t num_speakers = 0;
  std::size_t voice_dim = 0;
  std::size_t face_dim = 0;
  SplitCounts train_counts;
  SplitCounts test_counts;
  // speaker_id -> dense index, assigned by lexicographic order of speaker_id.
  std::map<std::string, int> label_map;

  int index_of(const std::string& speaker_id) const {
    auto it = label_map.find(speaker_id);
    if (it == label_map.end())
      throw Error(ErrorCode::kValidation,
                  Msg() << "speaker not in label map: " << speaker_id);
    return it->second;
  }

  // Checks the constraints training depends on: at least two speakers and
  // every speaker present in the train split.
  void require_trainable(const std::vector<EmbeddingRecord>& records) const {
    if (num_speakers < 2)
      throw Error(ErrorCode::kClass,
                  Msg() << "need at least 2 speakers, got " << num_speakers);
    std::set<std::string> in_train;
    for (const EmbeddingRecord& r : records)
      if (r.split == Split::kTrain) in_train.insert(r.speaker_id);
    for (const auto& [speaker_id, index] : label_map)
      if (!in_train.count(speaker_id))
        throw Error(ErrorCode::kClass,
                    Msg() << "speaker " << speaker_id
                          << " has no train-split records");
  }
};

// Aligned (voice, face, label) triple consumed by the trainer.
struct PairedSample {
  int speaker_index = 0;
  std::vector<float> voice;
  std::vector<float> face;
};

struct PairingResult {
  std::vector<PairedSample> pairs;
  std::size_t skipped = 0;  // clips missing one modality in the split
};

struct SynthConfig {
  std::size_t num_identities = 50;
  std::size_t latent_dim = 16;
  std::size_t voice_dim = 64;
  std::size_t face_dim = 64;
  std::size_t clips_per_identity_train = 20;
  std::size_t clips_per_identity_test = 8;
  double voice_noise_sigma = 0.8;
  double face_noise_sigma = 0.2;
  std::uint64_t seed = 7;

  void validate() const {
    if (num_identities < 1 || latent_dim < 1 || voice_dim < 1 || face_dim < 1 ||
        clips_per_identity_train < 1 || clips_per_identity_test < 1)
      throw Error(ErrorCode::kConfig, "synthetic config counts must be >= 1");
    if (voice_noise_sigma < 0.0 || face_noise_sigma < 0.0)
      throw Error(ErrorCode::kConfig, "noise sigmas must be >= 0");
    if (latent_dim > std::min(voice_dim, face_dim))
      throw Error(ErrorCode::kConfig,
                  Msg() << "latent_dim " << latent_dim
                        << " exceeds min(voice_dim, face_dim)");
  }
};

namespace detail {

inline std::size_t modality_dim(const EmbeddingRecord& r,
                                std::size_t voice_dim, std::size_t face_dim) {
  return r.modality == Modality::kVoice ? voice_dim : face_dim;
}

// Per-modality dims from a record sequence; 0 when a modality is absent.
// Throws if records of one modality disagree.
inline std::pair<std::size_t, std::size_t> scan_dims(
    const std::vector<EmbeddingRecord>& records) {
  std::size_t voice_dim = 0, face_dim = 0;
  bool saw_voice = false, saw_face = false;
  for (const EmbeddingRecord& r : records) {
    std::size_t& dim = r.modality == Modality::kVoice ? voice_dim : face_dim;
    bool& seen = r.modality == Modality::kVoice ? saw_voice : saw_face;
    if (!seen) {
      dim = r.vector.size();
      seen = true;
    } else if (r.vector.size() != dim) {
      throw Error(ErrorCode::kDimension,
                  Msg() << "record (" << r.speaker_id << ", " << r.clip_id
                        << ") has " << r.vector.size() << " components, expected "
                        << dim << " for its modality");
    }
  }
  return {voice_dim, face_dim};
}

}  // namespace detail

// Manifest over an in-memory record sequence. Indices follow lexicographic
// speaker_id order so the map does not depend on record order.
inline DatasetManifest build_manifest(const std::vector<EmbeddingRecord>& records) {
  DatasetManifest m;
  std::tie(m.voice_dim, m.face_dim) = detail::scan_dims(records);
  for (const EmbeddingRecord& r : records) {
    m.label_map.emplace(r.speaker_id, 0);
    SplitCounts& counts = r.split == Split::kTrain ? m.train_counts : m.test_counts;
    if (r.modality == Modality::kVoice)
      ++counts.voice;
    else
      ++counts.face;
  }
  int next = 0;
  for (auto& [speaker_id, index] : m.label_map) index = next++;
  m.num_speakers = m.label_map.size();
  return m;
}

inline void write_embeddings(const std::vector<EmbeddingRecord>& records,
                             const std::string& path) {
  auto [voice_dim, face_dim] = detail::scan_dims(records);

  nlohmann::json header;
  header["voice_dim"] = voice_dim;
  header["face_dim"] = face_dim;
  header["record_count"] = records.size();
  std::string header_bytes = header.dump();

  BinaryWriter out(path);
  out.put_bytes(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  out.put(static_cast<std::uint32_t>(header_bytes.size()));
  out.put_string(header_bytes);
  for (const EmbeddingRecord& r : records) {
    if (r.speaker_id.size() > 0xffff || r.clip_id.size() > 0xffff)
      throw Error(ErrorCode::kValidation,
                  Msg() << "id longer than 65535 bytes: " << r.speaker_id);
    out.put(static_cast<std::uint16_t>(r.speaker_id.size()));
    out.put_string(r.speaker_id);
    out.put(static_cast<std::uint16_t>(r.clip_id.size()));
    out.put_string(r.clip_id);
    out.put(static_cast<std::uint8_t>(r.split));
    out.put(static_cast<std::uint8_t>(r.modality));
    out.put_floats(r.vector);
  }
  out.close();
}

inline std::pair<DatasetManifest, std::vector<EmbeddingRecord>> read_embeddings(
    const std::string& path) {
  BinaryReader in(path);
  char magic[8];
  in.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kEmbeddingMagic, sizeof(magic)) != 0)
    throw Error(ErrorCode::kFormat, Msg() << "not a FUSEID1 file: " << path);

  auto header_len = in.get<std::uint32_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.get_string(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, Msg() << "bad FUSEID1 header: " << e.what());
  }
  if (!header.contains("voice_dim") || !header.contains("face_dim") ||
      !header.contains("record_count"))
    throw Error(ErrorCode::kFormat, "FUSEID1 header missing required keys");
  std::size_t voice_dim = header["voice_dim"].get<std::size_t>();
  std::size_t face_dim = header["face_dim"].get<std::size_t>();
  std::size_t record_count = header["record_count"].get<std::size_t>();

  std::vector<EmbeddingRecord> records;
  records.reserve(record_count);
  std::set<std::tuple<std::string, std::string, std::uint8_t, std::uint8_t>> seen;
  for (std::size_t i = 0; i < record_count; ++i) {
    EmbeddingRecord r;
    auto sid_len = in.get<std::uint16_t>();
    r.speaker_id = in.get_string(sid_len);
    auto clip_len = in.get<std::uint16_t>();
    r.clip_id = in.get_string(clip_len);
    auto split_byte = in.get<std::uint8_t>();
    auto modality_byte = in.get<std::uint8_t>();
    if (split_byte > 1 || modality_byte > 1)
      throw Error(ErrorCode::kFormat,
                  Msg() << "bad split/modality byte in record " << i);
    r.split = static_cast<Split>(split_byte);
    r.modality = static_cast<Modality>(modality_byte);
    r.vector.resize(r.modality == Modality::kVoice ? voice_dim : face_dim);
    in.get_floats(r.vector);

    if (!all_finite(r.vector))
      throw Error(ErrorCode::kValidation,
                  Msg() << "non-finite component in record (" << r.speaker_id
                        << ", " << r.clip_id << ")");
    if (!seen.emplace(r.speaker_id, r.clip_id, modality_byte, split_byte).second)
      throw Error(ErrorCode::kDuplicate,
                  Msg() << "duplicate record (" << r.speaker_id << ", "
                        << r.clip_id << ", " << (modality_byte ? "face" : "voice")
                        << ", " << (split_byte ? "test" : "train") << ")");
    records.push_back(std::move(r));
  }
  if (!in.at_eof())
    throw Error(ErrorCode::kFormat, Msg() << "trailing bytes after records: " << path);

  DatasetManifest manifest = build_manifest(records);
  // Header dims are authoritative even when a modality has no records.
  manifest.voice_dim = voice_dim;
  manifest.face_dim = face_dim;
  return {std::move(manifest), std::move(records)};
}

// Joins the two modalities of each (speaker_id, clip_id) within one split.
// Clips with a single modality are skipped and tallied. Output is ordered by
// (speaker_id, clip_id), so any input order yields the same sequence.
inline PairingResult pair_samples(const std::vector<EmbeddingRecord>& records,
                                  Split split, const DatasetManifest& manifest) {
  std::map<std::pair<std::string, std::string>,
           std::pair<const EmbeddingRecord*, const EmbeddingRecord*>> clips;
  for (const EmbeddingRecord& r : records) {
    if (r.split != split) continue;
    auto& slot = clips[{r.speaker_id, r.clip_id}];
    const EmbeddingRecord*& dest =
        r.modality == Modality::kVoice ? slot.first : slot.second;
    if (dest != nullptr)
      throw Error(ErrorCode::kDuplicate,
                  Msg() << "duplicate record (" << r.speaker_id << ", "
                        << r.clip_id << ")");
    dest = &r;
  }

  PairingResult result;
  for (const auto& [key, slot] : clips) {
    if (slot.first == nullptr || slot.second == nullptr) {
      ++result.skipped;
      continue;
    }
    PairedSample sample;
    sample.speaker_index = manifest.index_of(key.first);
    sample.voice = slot.first->vector;
    sample.face = slot.second->vector;
    result.pairs.push_back(std::move(sample));
  }
  if (result.pairs.empty())
    throw Error(ErrorCode::kEmpty,
                Msg() << "no complete (voice, face) pairs in "
                      << split_name(split) << " split");
  return result;
}

inline PairingResult pair_samples(const std::vector<EmbeddingRecord>& records,
                                  Split split) {
  return pair_samples(records, split, build_manifest(records));
}

namespace detail {

inline std::string padded_name(const char* prefix, std::size_t n) {
  std::ostringstream s;
  s << prefix << std::setw(5) << std::setfill('0') << n;
  return s.str();
}

// W (rows x cols) with N(0, 1/cols) entries, row-major draw order.
inline std::vector<double> mixing_matrix(std::size_t rows, std::size_t cols,
                                         Rng& rng) {
  double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<double> w(rows * cols);
  for (double& v : w) v = rng.normal() * scale;
  return w;
}

inline std::vector<float> noisy_view(const std::vector<double>& mixing,
                                     std::size_t out_dim,
                                     const std::vector<double>& latent,
                                     double sigma, Rng& rng) {
  std::vector<double> raw(out_dim);
  for (std::size_t r = 0; r < out_dim; ++r) {
    double acc = 0.0;
    const double* row = mixing.data() + r * latent.size();
    for (std::size_t c = 0; c < latent.size(); ++c) acc += row[c] * latent[c];
    raw[r] = acc;
  }
  for (std::size_t r = 0; r < out_dim; ++r) raw[r] += sigma * rng.normal();
  Vec unit = l2_normalize(raw);
  std::vector<float> out(out_dim);
  for (std::size_t r = 0; r < out_dim; ++r) out[r] = static_cast<float>(unit[r]);
  return out;
}

}  // namespace detail

// Shared-latent synthetic dataset: per identity one latent z ~ N(0, I); both
// modalities are noisy linear views of z through dataset-level mixing
// matrices, L2-normalized. The draw order (W_voice, W_face, then per
// identity: z, then per clip: voice noise, face noise; train clips before
// test clips) is part of the determinism contract and must not change.
inline std::vector<EmbeddingRecord> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<double> w_voice =
      detail::mixing_matrix(cfg.voice_dim, cfg.latent_dim, rng);
  std::vector<double> w_face =
      detail::mixing_matrix(cfg.face_dim, cfg.latent_dim, rng);

  std::vector<EmbeddingRecord> records;
  records.reserve(cfg.num_identities * 2 *
                  (cfg.clips_per_identity_train + cfg.clips_per_identity_test));
  for (std::size_t k = 0; k < cfg.num_identities; ++k) {
    std::vector<double> z = rng.normal_vector(cfg.latent_dim);
    std::string speaker_id = detail::padded_name("spk", k);
    std::size_t total_clips =
        cfg.clips_per_identity_train + cfg.clips_per_identity_test;
    for (std::size_t c = 0; c < total_clips; ++c) {
      Split split =
          c < cfg.clips_per_identity_train ? Split::kTrain : Split::kTest;
      std::string clip_id = detail::padded_name("clip", c);
      records.push_back({speaker_id, clip_id, split, Modality::kVoice,
                         detail::noisy_view(w_voice, cfg.voice_dim, z,
                                            cfg.voice_noise_sigma, rng)});
      records.push_back({speaker_id, clip_id, split, Modality::kFace,
                         detail::noisy_view(w_face, cfg.face_dim, z,
                                            cfg.face_noise_sigma, rng)});
    }
  }
  return records;
}

}  // namespace fuseid

#endif  // FUSEID_EMBEDDING_STORE_HPP_

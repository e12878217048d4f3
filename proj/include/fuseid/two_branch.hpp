// fuseid/two_branch.hpp

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

// The two-branch fusion model.
//
// Forward pipeline:
//   voice branch: dense stack, dropout (train only), l2_normalize
//   face branch:  dense stack, dropout (train only), l2_normalize
//   fusion:       elementwise product of the two branch outputs
//   trunk:        post-fusion dense stack, l2_normalize, classifier head
//
// The feature handed to the downstream classifier is the output of the final
// l2_normalize (the last pre-softmax representation); its width equals
// fusion_dim. This tap point is recorded in the model file header.
//
// FUSEMDL1 layout (little-endian):
//   bytes 0..7  magic "FUSEMDL1"
//   u8          format version (currently 1)
//   u32         header length
//   ...         UTF-8 JSON header (architecture descriptor)
//   ...         f32 parameter blobs, layer order: voice branch, face branch,
//               post-fusion stack, classifier head; per layer the weight
//               matrix row-major, then the bias vector.

#ifndef FUSEID_TWO_BRANCH_HPP_
#define FUSEID_TWO_BRANCH_HPP_

#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fuseid/binio.hpp"
#include "fuseid/common.hpp"
#include "fuseid/embedding_store.hpp"
#include "fuseid/netcore.hpp"
#include "fuseid/rng.hpp"

namespace fuseid {

constexpr char kModelMagic[8] = {'F', 'U', 'S', 'E', 'M', 'D', 'L', '1'};
constexpr std::uint8_t kModelFormatVersion = 1;

struct ArchitectureSpec {
  std::size_t voice_in_dim = 0;
  std::size_t face_in_dim = 0;
  std::vector<std::size_t> branch_hidden_dims = {1024};  // applied to both branches
  std::size_t fusion_dim = 1024;
  std::vector<std::size_t> post_fusion_hidden_dims = {1024};
  std::size_t num_classes = 0;
  double dropout_voice = 0.1;
  double dropout_face = 0.2;
  Activation hidden_activation = Activation::kRelu;

  void validate() const {
    if (voice_in_dim == 0 || face_in_dim == 0)
      throw Error(ErrorCode::kConfig, "branch input dims must be positive");
    if (fusion_dim == 0)
      throw Error(ErrorCode::kConfig, "fusion_dim must be positive");
    if (num_classes < 2)
      throw Error(ErrorCode::kConfig,
                  Msg() << "need at least 2 classes, got " << num_classes);
    if (branch_hidden_dims.empty() || branch_hidden_dims.back() != fusion_dim)
      throw Error(ErrorCode::kConfig,
                  "branch stacks must end at fusion_dim");
    if (!post_fusion_hidden_dims.empty() &&
        post_fusion_hidden_dims.back() != fusion_dim)
      throw Error(ErrorCode::kConfig,
                  "post-fusion stack must end at fusion_dim");
    for (std::size_t d : branch_hidden_dims)
      if (d == 0) throw Error(ErrorCode::kConfig, "zero-width branch layer");
    for (std::size_t d : post_fusion_hidden_dims)
      if (d == 0) throw Error(ErrorCode::kConfig, "zero-width post-fusion layer");
    if (dropout_voice < 0.0 || dropout_voice >= 1.0 || dropout_face < 0.0 ||
        dropout_face >= 1.0)
      throw Error(ErrorCode::kConfig, "dropout rates must be in [0,1)");
  }

  bool operator==(const ArchitectureSpec&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.04;
  std::size_t batch_size = 2048;  // clamped to the dataset size
  std::size_t epochs = 30;
  std::uint64_t seed = 7;

  void validate() const {
    if (learning_rate <= 0.0)
      throw Error(ErrorCode::kConfig, "learning rate must be > 0");
    if (batch_size < 1)
      throw Error(ErrorCode::kConfig, "batch size must be >= 1");
  }
};

struct FusedFeature {
  Vec vector;
  int speaker_index = -1;
  bool masked = false;
};

struct TwoBranchModel {
  ArchitectureSpec spec;
  std::vector<DenseLayer> voice_branch;
  std::vector<DenseLayer> face_branch;
  std::vector<DenseLayer> post_fusion;
  DenseLayer classifier_head;

  // Canonical tensor order: per layer weights then bias; voice branch, face
  // branch, post fusion, head. Serialization, Adam state and gradient
  // containers all follow this order.
  std::vector<ParamView> param_views() {
    std::vector<ParamView> views;
    auto add = [&views](DenseLayer& layer) {
      views.push_back({layer.weights.data.data(), layer.weights.data.size()});
      views.push_back({layer.bias.data(), layer.bias.size()});
    };
    for (DenseLayer& l : voice_branch) add(l);
    for (DenseLayer& l : face_branch) add(l);
    for (DenseLayer& l : post_fusion) add(l);
    add(classifier_head);
    return views;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    auto add = [&n](const DenseLayer& l) {
      n += l.weights.data.size() + l.bias.size();
    };
    for (const DenseLayer& l : voice_branch) add(l);
    for (const DenseLayer& l : face_branch) add(l);
    for (const DenseLayer& l : post_fusion) add(l);
    add(classifier_head);
    return n;
  }

  bool parameters_finite() const {
    auto ok = [](const DenseLayer& l) {
      return all_finite(l.weights.data) && all_finite(l.bias);
    };
    for (const DenseLayer& l : voice_branch) if (!ok(l)) return false;
    for (const DenseLayer& l : face_branch) if (!ok(l)) return false;
    for (const DenseLayer& l : post_fusion) if (!ok(l)) return false;
    return ok(classifier_head);
  }
};

namespace detail {

inline std::vector<DenseLayer> make_stack(std::size_t in_dim,
                                          const std::vector<std::size_t>& dims,
                                          Activation activation, Rng& rng) {
  std::vector<DenseLayer> stack;
  std::size_t prev = in_dim;
  for (std::size_t d : dims) {
    stack.push_back(make_dense(prev, d, activation, rng));
    prev = d;
  }
  return stack;
}

}  // namespace detail

inline TwoBranchModel build_model(const ArchitectureSpec& spec,
                                  std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, 0));
  TwoBranchModel model;
  model.spec = spec;
  model.voice_branch = detail::make_stack(spec.voice_in_dim,
                                          spec.branch_hidden_dims,
                                          spec.hidden_activation, rng);
  model.face_branch = detail::make_stack(spec.face_in_dim,
                                         spec.branch_hidden_dims,
                                         spec.hidden_activation, rng);
  std::size_t post_in = spec.fusion_dim;
  model.post_fusion = detail::make_stack(post_in, spec.post_fusion_hidden_dims,
                                         spec.hidden_activation, rng);
  std::size_t head_in = spec.post_fusion_hidden_dims.empty()
                            ? spec.fusion_dim
                            : spec.post_fusion_hidden_dims.back();
  model.classifier_head =
      make_dense(head_in, spec.num_classes, Activation::kIdentity, rng);
  return model;
}

// --- Forward ----------------------------------------------------------------

struct ForwardResult {
  Vec logits;
  Vec fused;
};

// Everything the backward pass needs from one training forward.
struct ForwardCache {
  std::vector<DenseCache> voice_caches;
  std::vector<DenseCache> face_caches;
  std::vector<DenseCache> post_caches;
  DenseCache head_cache;
  Vec voice_mask, face_mask;            // dropout masks (scaling folded in)
  Vec voice_norm_in, face_norm_in;      // inputs to the branch l2_normalize
  Vec voice_norm, face_norm;            // branch outputs entering the fusion
  Vec post_norm_in;                     // input to the final l2_normalize
  Vec fused;                            // final normalized representation
  Vec logits;
};

// Pre-sampled dropout masks, for callers that need a frozen stochastic path
// (finite-difference checks). Scaling is folded in, as in dropout_forward.
struct DropoutMasks {
  Vec voice;
  Vec face;
};

inline DropoutMasks sample_dropout_masks(const ArchitectureSpec& spec, Rng& rng) {
  auto sample = [&rng](std::size_t n, double rate) {
    Vec mask(n, 1.0);
    if (rate > 0.0) {
      double keep_scale = 1.0 / (1.0 - rate);
      for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    return mask;
  };
  return {sample(spec.fusion_dim, spec.dropout_voice),
          sample(spec.fusion_dim, spec.dropout_face)};
}

namespace detail {

inline Vec to_double(std::span<const float> x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>(x[i]);
  return out;
}

inline void check_input_dims(const ArchitectureSpec& spec,
                             std::span<const float> voice,
                             std::span<const float> face) {
  if (voice.size() != spec.voice_in_dim)
    throw Error(ErrorCode::kDimension,
                Msg() << "voice input size " << voice.size() << " != "
                      << spec.voice_in_dim);
  if (face.size() != spec.face_in_dim)
    throw Error(ErrorCode::kDimension,
                Msg() << "face input size " << face.size() << " != "
                      << spec.face_in_dim);
}

}  // namespace detail

// Training-mode forward with full caching. Masks come from `fixed_masks` when
// given, otherwise they are sampled from `rng` (voice first, then face).
inline ForwardCache forward_train(const TwoBranchModel& model,
                                  std::span<const float> voice,
                                  std::span<const float> face,
                                  Rng* rng,
                                  const DropoutMasks* fixed_masks = nullptr) {
  detail::check_input_dims(model.spec, voice, face);
  ForwardCache fc;

  auto run_branch = [&](const std::vector<DenseLayer>& stack, Vec input,
                        double rate, std::vector<DenseCache>& caches,
                        const Vec* fixed_mask, Vec& mask_out, Vec& norm_in,
                        Vec& norm_out) {
    Vec h = std::move(input);
    caches.resize(stack.size());
    for (std::size_t i = 0; i < stack.size(); ++i)
      h = dense_forward(stack[i], h, &caches[i]);
    if (fixed_mask != nullptr) {
      mask_out = *fixed_mask;
      if (mask_out.size() != h.size())
        throw Error(ErrorCode::kDimension, "fixed dropout mask size mismatch");
      for (std::size_t i = 0; i < h.size(); ++i) h[i] *= mask_out[i];
    } else {
      auto [dropped, mask] = dropout_forward(h, rate, *rng, /*training=*/true);
      h = std::move(dropped);
      mask_out = std::move(mask);
    }
    norm_in = h;
    norm_out = l2_normalize(h);
  };

  run_branch(model.voice_branch, detail::to_double(voice),
             model.spec.dropout_voice, fc.voice_caches,
             fixed_masks ? &fixed_masks->voice : nullptr, fc.voice_mask,
             fc.voice_norm_in, fc.voice_norm);
  run_branch(model.face_branch, detail::to_double(face),
             model.spec.dropout_face, fc.face_caches,
             fixed_masks ? &fixed_masks->face : nullptr, fc.face_mask,
             fc.face_norm_in, fc.face_norm);

  Vec h = fuse_multiply(fc.voice_norm, fc.face_norm);
  fc.post_caches.resize(model.post_fusion.size());
  for (std::size_t i = 0; i < model.post_fusion.size(); ++i)
    h = dense_forward(model.post_fusion[i], h, &fc.post_caches[i]);
  fc.post_norm_in = h;
  fc.fused = l2_normalize(h);
  fc.logits = dense_forward(model.classifier_head, fc.fused, &fc.head_cache);
  return fc;
}

// Inference-mode forward: dropout is the identity, no caching, no RNG.
inline ForwardResult forward(const TwoBranchModel& model,
                             std::span<const float> voice,
                             std::span<const float> face) {
  detail::check_input_dims(model.spec, voice, face);
  auto run_branch = [&](const std::vector<DenseLayer>& stack, Vec input) {
    Vec h = std::move(input);
    for (const DenseLayer& layer : stack) h = dense_forward(layer, h);
    return l2_normalize(h);
  };
  Vec v = run_branch(model.voice_branch, detail::to_double(voice));
  Vec f = run_branch(model.face_branch, detail::to_double(face));
  Vec h = fuse_multiply(v, f);
  for (const DenseLayer& layer : model.post_fusion) h = dense_forward(layer, h);
  ForwardResult result;
  result.fused = l2_normalize(h);
  result.logits = dense_forward(model.classifier_head, result.fused);
  return result;
}

// --- Backward ---------------------------------------------------------------

// Gradient tensors in the canonical param_views() order.
struct ModelGrads {
  std::vector<std::vector<double>> tensors;

  static ModelGrads zeros_like(std::span<const ParamView> views) {
    ModelGrads g;
    for (const ParamView& v : views) g.tensors.emplace_back(v.size, 0.0);
    return g;
  }

  void zero() {
    for (auto& t : tensors) std::fill(t.begin(), t.end(), 0.0);
  }

  void scale(double s) {
    for (auto& t : tensors)
      for (double& v : t) v *= s;
  }
};

// Adds this sample's parameter gradients into `grads` and returns its CE
// loss. Softmax and CE are fused, so the logit gradient is p - y.
inline double backprop(const TwoBranchModel& model, const ForwardCache& fc,
                       std::size_t true_class, ModelGrads& grads) {
  std::size_t num_classes = model.spec.num_classes;
  if (true_class >= num_classes)
    throw Error(ErrorCode::kValidation,
                Msg() << "label " << true_class << " >= num_classes "
                      << num_classes);

  Vec p = softmax(fc.logits);
  double loss = cross_entropy(p, true_class);
  Vec label = one_hot(num_classes, true_class);
  Vec upstream = softmax_ce_backward(p, label);

  // Tensor slots, walked in reverse of the canonical order.
  std::size_t n_voice = model.voice_branch.size();
  std::size_t n_face = model.face_branch.size();
  std::size_t n_post = model.post_fusion.size();
  auto slot = [&](std::size_t layer_base, std::size_t layer_idx) {
    return 2 * (layer_base + layer_idx);
  };
  auto accumulate = [&grads](std::size_t tensor_idx, const DenseGrads& dg) {
    std::vector<double>& dw = grads.tensors[tensor_idx];
    std::vector<double>& db = grads.tensors[tensor_idx + 1];
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += dg.d_weights[i];
    for (std::size_t i = 0; i < db.size(); ++i) db[i] += dg.d_bias[i];
  };

  DenseGrads head_grads = dense_backward(model.classifier_head, fc.head_cache, upstream);
  accumulate(slot(n_voice + n_face + n_post, 0), head_grads);
  upstream = l2_normalize_backward(fc.post_norm_in, head_grads.d_input);

  for (std::size_t i = n_post; i-- > 0;) {
    DenseGrads dg = dense_backward(model.post_fusion[i], fc.post_caches[i], upstream);
    accumulate(slot(n_voice + n_face, i), dg);
    upstream = std::move(dg.d_input);
  }

  auto [d_voice_norm, d_face_norm] =
      fuse_multiply_backward(fc.voice_norm, fc.face_norm, upstream);

  auto branch_backward = [&](const std::vector<DenseLayer>& stack,
                             const std::vector<DenseCache>& caches,
                             const Vec& norm_in, const Vec& mask,
                             Vec d_norm_out, std::size_t layer_base) {
    Vec up = l2_normalize_backward(norm_in, d_norm_out);
    up = dropout_backward(mask, up);
    for (std::size_t i = stack.size(); i-- > 0;) {
      DenseGrads dg = dense_backward(stack[i], caches[i], up);
      accumulate(slot(layer_base, i), dg);
      up = std::move(dg.d_input);
    }
  };
  branch_backward(model.voice_branch, fc.voice_caches, fc.voice_norm_in,
                  fc.voice_mask, std::move(d_voice_norm), 0);
  branch_backward(model.face_branch, fc.face_caches, fc.face_norm_in,
                  fc.face_mask, std::move(d_face_norm), n_voice);
  return loss;
}

// --- Training ---------------------------------------------------------------

// Mini-batch Adam on mean CE. Shuffles each epoch with a seeded RNG; returns
// one mean-loss-per-sample entry per epoch.
inline std::vector<double> train(TwoBranchModel& model,
                                 std::span<const PairedSample> pairs,
                                 const TrainConfig& cfg) {
  cfg.validate();
  if (pairs.empty())
    throw Error(ErrorCode::kEmpty, "no training pairs");
  for (const PairedSample& s : pairs) {
    if (s.speaker_index < 0 ||
        static_cast<std::size_t>(s.speaker_index) >= model.spec.num_classes)
      throw Error(ErrorCode::kValidation,
                  Msg() << "speaker index " << s.speaker_index
                        << " out of range for " << model.spec.num_classes
                        << " classes");
    detail::check_input_dims(model.spec, s.voice, s.face);
  }

  std::size_t n = pairs.size();
  std::size_t batch_size = std::min(cfg.batch_size, n);
  std::vector<ParamView> views = model.param_views();
  AdamState adam = AdamState::create(views, cfg.learning_rate);
  ModelGrads grads = ModelGrads::zeros_like(views);
  Rng rng(derive_seed(cfg.seed, 1));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> history;
  history.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      std::size_t end = std::min(start + batch_size, n);
      grads.zero();
      for (std::size_t i = start; i < end; ++i) {
        const PairedSample& s = pairs[order[i]];
        ForwardCache fc = forward_train(model, s.voice, s.face, &rng);
        loss_sum += backprop(model, fc, static_cast<std::size_t>(s.speaker_index),
                             grads);
      }
      grads.scale(1.0 / static_cast<double>(end - start));
      adam_step(views, grads.tensors, adam);
    }
    double epoch_mean = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_mean))
      throw Error(ErrorCode::kDiverged,
                  Msg() << "training diverged at epoch " << epoch + 1);
    history.push_back(epoch_mean);
  }
  if (!model.parameters_finite())
    throw Error(ErrorCode::kDiverged,
                "non-finite parameters after training");
  return history;
}

// --- Feature extraction -----------------------------------------------------

// Inference-mode fused feature. An absent face is replaced by the all-zero
// vector of face_in_dim and the feature is flagged as masked.
inline FusedFeature extract_features(const TwoBranchModel& model,
                                     std::span<const float> voice,
                                     std::optional<std::span<const float>> face) {
  static thread_local std::vector<float> zero_face;
  FusedFeature feature;
  std::span<const float> face_span;
  if (face.has_value()) {
    face_span = *face;
  } else {
    zero_face.assign(model.spec.face_in_dim, 0.0f);
    face_span = zero_face;
    feature.masked = true;
  }
  feature.vector = forward(model, voice, face_span).fused;
  return feature;
}

// --- Serialization ----------------------------------------------------------

namespace detail {

inline nlohmann::json spec_to_json(const ArchitectureSpec& spec) {
  nlohmann::json j;
  j["voice_in_dim"] = spec.voice_in_dim;
  j["face_in_dim"] = spec.face_in_dim;
  j["branch_hidden_dims"] = spec.branch_hidden_dims;
  j["fusion_dim"] = spec.fusion_dim;
  j["post_fusion_hidden_dims"] = spec.post_fusion_hidden_dims;
  j["num_classes"] = spec.num_classes;
  j["dropout_voice"] = spec.dropout_voice;
  j["dropout_face"] = spec.dropout_face;
  j["hidden_activation"] = activation_name(spec.hidden_activation);
  j["feature_tap"] = "post_fusion_l2_normalize";
  return j;
}

inline ArchitectureSpec spec_from_json(const nlohmann::json& j) {
  ArchitectureSpec spec;
  try {
    spec.voice_in_dim = j.at("voice_in_dim").get<std::size_t>();
    spec.face_in_dim = j.at("face_in_dim").get<std::size_t>();
    spec.branch_hidden_dims =
        j.at("branch_hidden_dims").get<std::vector<std::size_t>>();
    spec.fusion_dim = j.at("fusion_dim").get<std::size_t>();
    spec.post_fusion_hidden_dims =
        j.at("post_fusion_hidden_dims").get<std::vector<std::size_t>>();
    spec.num_classes = j.at("num_classes").get<std::size_t>();
    spec.dropout_voice = j.at("dropout_voice").get<double>();
    spec.dropout_face = j.at("dropout_face").get<double>();
    spec.hidden_activation =
        activation_from_name(j.at("hidden_activation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, Msg() << "bad model header: " << e.what());
  }
  return spec;
}

}  // namespace detail

inline void save_model(const TwoBranchModel& model, const std::string& path) {
  std::string header = detail::spec_to_json(model.spec).dump();
  BinaryWriter out(path);
  out.put_bytes(kModelMagic, sizeof(kModelMagic));
  out.put(kModelFormatVersion);
  out.put(static_cast<std::uint32_t>(header.size()));
  out.put_string(header);
  auto views = const_cast<TwoBranchModel&>(model).param_views();
  for (const ParamView& v : views)
    out.put_floats(std::span<const float>(v.data, v.size));
  out.close();
}

inline TwoBranchModel load_model(const std::string& path) {
  BinaryReader in(path);
  char magic[8];
  in.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
    throw Error(ErrorCode::kFormat, Msg() << "not a FUSEMDL1 file: " << path);
  auto version = in.get<std::uint8_t>();
  if (version != kModelFormatVersion)
    throw Error(ErrorCode::kVersion,
                Msg() << "unsupported model format version "
                      << static_cast<int>(version));
  auto header_len = in.get<std::uint32_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.get_string(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, Msg() << "bad model header: " << e.what());
  }
  ArchitectureSpec spec = detail::spec_from_json(header);
  spec.validate();

  // Build the structure, then overwrite every tensor from the blobs.
  TwoBranchModel model = build_model(spec, /*seed=*/0);
  for (const ParamView& v : model.param_views())
    in.get_floats(std::span<float>(v.data, v.size));
  if (!in.at_eof())
    throw Error(ErrorCode::kFormat, Msg() << "trailing bytes in model file: " << path);
  if (!model.parameters_finite())
    throw Error(ErrorCode::kValidation,
                Msg() << "non-finite parameter in model file: " << path);
  return model;
}

}  // namespace fuseid

#endif  // FUSEID_TWO_BRANCH_HPP_

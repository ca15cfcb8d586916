#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tta/ops.hpp"
#include "tta/task.hpp"
#include "tta/tensor.hpp"

namespace tta::nets {

using tta::TaskKind;

// Stand-in architecture family: a small conv encoder shared by all tasks,
// plus one task head. The pooled feature map is the embedding every
// adaptation loss operates on.
struct ArchDescriptor {
  TaskKind task = TaskKind::kClassification;
  int resolution = 64;
  std::vector<int> channels = {16, 32, 64};
  int embed_dim = 64;  // equals channels.back(); the pooled feature width
  int classes = 5;     // foreground classes C
  int grid = 4;        // detection cells per side S

  void validate() const;
  int blocks() const { return static_cast<int>(channels.size()); }
  int downsample() const { return 1 << blocks(); }
  int feat_hw() const { return resolution / downsample(); }
  // classification heads emit C logits, detection C+1 (background last),
  // segmentation C+1 (background = 0)
  int head_classes() const;

  bool operator==(const ArchDescriptor&) const = default;
};

template <class Real>
struct ConvLayer {
  Tensor<Real> w, b;
};

template <class Real>
struct Linear {
  Tensor<Real> w, b;  // w is [in, out]
};

template <class Real>
struct ModelBundle {
  ArchDescriptor arch;
  std::vector<ConvLayer<Real>> encoder;
  Linear<Real> cls_head;                 // classification only
  ConvLayer<Real> conv_head;             // detection / segmentation 1x1 conv
  std::optional<std::pair<Linear<Real>, Linear<Real>>> predictor;
  std::optional<Linear<Real>> rot_head;  // 4-way rotation logits

  bool has_predictor() const { return predictor.has_value(); }
  bool has_rotation_head() const { return rot_head.has_value(); }

  std::vector<std::pair<std::string, Tensor<Real>>> named_params() const;
  std::vector<Tensor<Real>> encoder_params() const;
  std::vector<Tensor<Real>> head_params() const;
  std::vector<Tensor<Real>> predictor_params() const;
  std::vector<Tensor<Real>> rotation_params() const;
  std::vector<Tensor<Real>> all_params() const;  // encoder + head
};

template <class Real>
ModelBundle<Real> init_model(const ArchDescriptor& arch, std::uint64_t seed,
                             bool with_rotation_head = false);

// fresh two-layer ReLU-MLP predictor (d -> d -> d), fan-in uniform init
template <class Real>
void init_predictor(ModelBundle<Real>& model, std::uint64_t seed);

template <class Real>
void drop_predictor(ModelBundle<Real>& model);

// deep copy; the copies evolve independently afterwards
template <class Real>
ModelBundle<Real> copy_model(const ModelBundle<Real>& model);

template <class Real>
struct EncodeOut {
  Tensor<Real> feature_map;  // [B, c_last, hf, hf]
  Tensor<Real> embedding;    // [B, d], global average pool of the map
};

template <class Real>
EncodeOut<Real> encode(const ModelBundle<Real>& model, const Tensor<Real>& images);

// Task outputs in a uniform units-by-classes layout:
//   classification: class_logits [B, C]
//   detection:      class_logits [B, S*S, C+1], boxes [B, S*S, 4] in (0,1)
//   segmentation:   class_logits [B, H*W, C+1]
template <class Real>
struct Predictions {
  TaskKind task;
  Tensor<Real> class_logits;
  Tensor<Real> boxes;
};

template <class Real>
Predictions<Real> head_forward(const ModelBundle<Real>& model, const Tensor<Real>& feature_map);

template <class Real>
Tensor<Real> predictor_forward(const ModelBundle<Real>& model, const Tensor<Real>& embedding);

template <class Real>
Tensor<Real> rotation_head_forward(const ModelBundle<Real>& model, const Tensor<Real>& embedding);

template <class Real>
Predictions<Real> model_forward(const ModelBundle<Real>& model, const Tensor<Real>& images);

}  // namespace tta::nets

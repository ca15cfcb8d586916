#include "tta/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "tta/rng.hpp"

namespace tta::nets {

void ArchDescriptor::validate() const {
  if (channels.empty()) throw std::runtime_error("arch: need at least one conv block");
  for (int c : channels)
    if (c < 1) throw std::runtime_error("arch: channel widths must be positive");
  if (embed_dim != channels.back())
    throw std::runtime_error("arch: embed_dim must equal the last channel width (pooled feature)");
  if (classes < 2) throw std::runtime_error("arch: need at least 2 classes");
  if (resolution < 8 || resolution % downsample() != 0)
    throw std::runtime_error("arch: resolution must be a positive multiple of " +
                             std::to_string(downsample()));
  if (task == TaskKind::kDetectionGrid) {
    if (grid < 1) throw std::runtime_error("arch: grid must be >= 1");
    if (grid > feat_hw() || feat_hw() % grid != 0)
      throw std::runtime_error("arch: grid must divide the final feature size " +
                               std::to_string(feat_hw()));
  }
}

int ArchDescriptor::head_classes() const {
  return task == TaskKind::kClassification ? classes : classes + 1;
}

namespace {

template <class Real>
Tensor<Real> fan_in_uniform(Shape shape, std::int64_t fan_in, Rng& rng) {
  const Real bound = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(fan_in)));
  return Tensor<Real>::uniform(std::move(shape), rng, -bound, bound, true);
}

template <class Real>
ConvLayer<Real> make_conv(std::int64_t cout, std::int64_t cin, std::int64_t k, Rng& rng) {
  ConvLayer<Real> l;
  l.w = fan_in_uniform<Real>({cout, cin, k, k}, cin * k * k, rng);
  l.b = Tensor<Real>::zeros({cout}, true);
  return l;
}

template <class Real>
Linear<Real> make_linear(std::int64_t in, std::int64_t out, Rng& rng) {
  Linear<Real> l;
  l.w = fan_in_uniform<Real>({in, out}, in, rng);
  l.b = Tensor<Real>::zeros({out}, true);
  return l;
}

template <class Real>
Tensor<Real> linear_forward(const Linear<Real>& l, const Tensor<Real>& x) {
  return ops::add(ops::matmul(x, l.w), l.b);
}

// flat index into [B,C,S,S] laid out row-major
inline std::int64_t chw_index(std::int64_t b, std::int64_t c, std::int64_t y, std::int64_t x,
                              std::int64_t C, std::int64_t S) {
  return ((b * C + c) * S + y) * S + x;
}

}  // namespace

template <class Real>
ModelBundle<Real> init_model(const ArchDescriptor& arch, std::uint64_t seed,
                             bool with_rotation_head) {
  arch.validate();
  ModelBundle<Real> m;
  m.arch = arch;
  std::uint64_t stream = 0;
  std::int64_t cin = 3;
  for (int c : arch.channels) {
    Rng rng(seed, stream++);
    m.encoder.push_back(make_conv<Real>(c, cin, 3, rng));
    cin = c;
  }
  Rng head_rng(seed, stream++);
  switch (arch.task) {
    case TaskKind::kClassification:
      m.cls_head = make_linear<Real>(arch.embed_dim, arch.classes, head_rng);
      break;
    case TaskKind::kDetectionGrid:
      // C+1 class channels plus 4 raw box channels per cell
      m.conv_head = make_conv<Real>(arch.head_classes() + 4, arch.embed_dim, 1, head_rng);
      break;
    case TaskKind::kSegmentation:
      m.conv_head = make_conv<Real>(arch.head_classes(), arch.embed_dim, 1, head_rng);
      break;
  }
  if (with_rotation_head) {
    Rng rot_rng(seed, stream++);
    m.rot_head = make_linear<Real>(arch.embed_dim, 4, rot_rng);
  }
  return m;
}

template <class Real>
void init_predictor(ModelBundle<Real>& model, std::uint64_t seed) {
  const std::int64_t d = model.arch.embed_dim;
  Rng r0(seed, 101), r1(seed, 102);
  model.predictor = std::make_pair(make_linear<Real>(d, d, r0), make_linear<Real>(d, d, r1));
}

template <class Real>
void drop_predictor(ModelBundle<Real>& model) {
  model.predictor.reset();
}

template <class Real>
ModelBundle<Real> copy_model(const ModelBundle<Real>& model) {
  ModelBundle<Real> m;
  m.arch = model.arch;
  for (const auto& l : model.encoder)
    m.encoder.push_back({l.w.clone(true), l.b.clone(true)});
  if (model.cls_head.w.defined())
    m.cls_head = {model.cls_head.w.clone(true), model.cls_head.b.clone(true)};
  if (model.conv_head.w.defined())
    m.conv_head = {model.conv_head.w.clone(true), model.conv_head.b.clone(true)};
  if (model.predictor)
    m.predictor = std::make_pair(
        Linear<Real>{model.predictor->first.w.clone(true), model.predictor->first.b.clone(true)},
        Linear<Real>{model.predictor->second.w.clone(true), model.predictor->second.b.clone(true)});
  if (model.rot_head)
    m.rot_head = Linear<Real>{model.rot_head->w.clone(true), model.rot_head->b.clone(true)};
  return m;
}

template <class Real>
std::vector<std::pair<std::string, Tensor<Real>>> ModelBundle<Real>::named_params() const {
  std::vector<std::pair<std::string, Tensor<Real>>> out;
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    out.emplace_back("enc" + std::to_string(i) + ".w", encoder[i].w);
    out.emplace_back("enc" + std::to_string(i) + ".b", encoder[i].b);
  }
  if (arch.task == TaskKind::kClassification) {
    out.emplace_back("head.w", cls_head.w);
    out.emplace_back("head.b", cls_head.b);
  } else {
    out.emplace_back("head.w", conv_head.w);
    out.emplace_back("head.b", conv_head.b);
  }
  if (predictor) {
    out.emplace_back("pred0.w", predictor->first.w);
    out.emplace_back("pred0.b", predictor->first.b);
    out.emplace_back("pred1.w", predictor->second.w);
    out.emplace_back("pred1.b", predictor->second.b);
  }
  if (rot_head) {
    out.emplace_back("rot.w", rot_head->w);
    out.emplace_back("rot.b", rot_head->b);
  }
  return out;
}

template <class Real>
std::vector<Tensor<Real>> ModelBundle<Real>::encoder_params() const {
  std::vector<Tensor<Real>> out;
  for (const auto& l : encoder) {
    out.push_back(l.w);
    out.push_back(l.b);
  }
  return out;
}

template <class Real>
std::vector<Tensor<Real>> ModelBundle<Real>::head_params() const {
  if (arch.task == TaskKind::kClassification) return {cls_head.w, cls_head.b};
  return {conv_head.w, conv_head.b};
}

template <class Real>
std::vector<Tensor<Real>> ModelBundle<Real>::predictor_params() const {
  if (!predictor) return {};
  return {predictor->first.w, predictor->first.b, predictor->second.w, predictor->second.b};
}

template <class Real>
std::vector<Tensor<Real>> ModelBundle<Real>::rotation_params() const {
  if (!rot_head) return {};
  return {rot_head->w, rot_head->b};
}

template <class Real>
std::vector<Tensor<Real>> ModelBundle<Real>::all_params() const {
  auto out = encoder_params();
  for (auto& p : head_params()) out.push_back(p);
  return out;
}

template <class Real>
EncodeOut<Real> encode(const ModelBundle<Real>& model, const Tensor<Real>& images) {
  const auto& s = images.shape();
  if (s.size() != 4 || s[1] != 3 || s[2] != model.arch.resolution || s[3] != model.arch.resolution)
    throw std::runtime_error("encode: expected [B,3," + std::to_string(model.arch.resolution) +
                             "," + std::to_string(model.arch.resolution) + "], got " +
                             shape_str(s));
  Tensor<Real> x = images;
  for (const auto& l : model.encoder) {
    x = ops::relu(ops::conv2d(x, l.w, l.b, 1, 1));
    x = ops::maxpool2d(x, 2, 2);
  }
  return {x, ops::global_avg_pool(x)};
}

template <class Real>
Predictions<Real> head_forward(const ModelBundle<Real>& model, const Tensor<Real>& feature_map) {
  const auto& arch = model.arch;
  const auto& fs = feature_map.shape();
  if (fs.size() != 4 || fs[1] != arch.embed_dim || fs[2] != arch.feat_hw() || fs[3] != arch.feat_hw())
    throw std::runtime_error("head_forward: feature map " + shape_str(fs) +
                             " does not match the architecture");
  const std::int64_t B = fs[0];
  Predictions<Real> out;
  out.task = arch.task;

  switch (arch.task) {
    case TaskKind::kClassification: {
      out.class_logits = linear_forward(model.cls_head, ops::global_avg_pool(feature_map));
      break;
    }
    case TaskKind::kDetectionGrid: {
      const std::int64_t S = arch.grid;
      const std::int64_t hf = arch.feat_hw();
      Tensor<Real> grid_feat = feature_map;
      if (S < hf) {
        // average-pool hf x hf down to S x S cells
        const std::int64_t r = hf / S;
        std::vector<std::int64_t> idx;
        idx.reserve(B * arch.embed_dim * S * S * r * r);
        for (std::int64_t b = 0; b < B; ++b)
          for (std::int64_t c = 0; c < arch.embed_dim; ++c)
            for (std::int64_t cy = 0; cy < S; ++cy)
              for (std::int64_t cx = 0; cx < S; ++cx)
                for (std::int64_t oy = 0; oy < r; ++oy)
                  for (std::int64_t ox = 0; ox < r; ++ox)
                    idx.push_back(chw_index(b, c, cy * r + oy, cx * r + ox, arch.embed_dim, hf));
        auto gathered = ops::gather(grid_feat, std::move(idx),
                                    {B, arch.embed_dim, S * S, r * r});
        grid_feat = ops::reshape(ops::mean_last(gathered), {B, arch.embed_dim, S, S});
      }
      auto raw = ops::conv2d(grid_feat, model.conv_head.w, model.conv_head.b, 1, 0);
      const std::int64_t Cp = arch.head_classes();  // C+1
      std::vector<std::int64_t> cls_idx, box_idx;
      cls_idx.reserve(B * S * S * Cp);
      box_idx.reserve(B * S * S * 4);
      for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t y = 0; y < S; ++y)
          for (std::int64_t x = 0; x < S; ++x) {
            for (std::int64_t c = 0; c < Cp; ++c)
              cls_idx.push_back(chw_index(b, c, y, x, Cp + 4, S));
            for (std::int64_t c = Cp; c < Cp + 4; ++c)
              box_idx.push_back(chw_index(b, c, y, x, Cp + 4, S));
          }
      out.class_logits = ops::gather(raw, std::move(cls_idx), {B, S * S, Cp});
      out.boxes = ops::sigmoid(ops::gather(raw, std::move(box_idx), {B, S * S, 4}));
      break;
    }
    case TaskKind::kSegmentation: {
      auto raw = ops::conv2d(feature_map, model.conv_head.w, model.conv_head.b, 1, 0);
      const std::int64_t Cp = arch.head_classes();
      const std::int64_t hf = arch.feat_hw();
      const std::int64_t R = arch.resolution;
      const std::int64_t scale = R / hf;
      // nearest-neighbour upsample + channel-last reorder in one gather
      std::vector<std::int64_t> idx;
      idx.reserve(B * R * R * Cp);
      for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t py = 0; py < R; ++py)
          for (std::int64_t px = 0; px < R; ++px)
            for (std::int64_t c = 0; c < Cp; ++c)
              idx.push_back(chw_index(b, c, py / scale, px / scale, Cp, hf));
      out.class_logits = ops::gather(raw, std::move(idx), {B, R * R, Cp});
      break;
    }
  }
  return out;
}

template <class Real>
Tensor<Real> predictor_forward(const ModelBundle<Real>& model, const Tensor<Real>& embedding) {
  if (!model.predictor) throw std::runtime_error("predictor_forward: model has no predictor");
  auto h = ops::relu(linear_forward(model.predictor->first, embedding));
  return linear_forward(model.predictor->second, h);
}

template <class Real>
Tensor<Real> rotation_head_forward(const ModelBundle<Real>& model, const Tensor<Real>& embedding) {
  if (!model.rot_head) throw std::runtime_error("rotation_head_forward: model has no rotation head");
  return linear_forward(*model.rot_head, embedding);
}

template <class Real>
Predictions<Real> model_forward(const ModelBundle<Real>& model, const Tensor<Real>& images) {
  return head_forward(model, encode(model, images).feature_map);
}

#define TTA_NETS_INSTANTIATE(Real)                                                           \
  template struct ModelBundle<Real>;                                                         \
  template ModelBundle<Real> init_model<Real>(const ArchDescriptor&, std::uint64_t, bool);   \
  template void init_predictor<Real>(ModelBundle<Real>&, std::uint64_t);                     \
  template void drop_predictor<Real>(ModelBundle<Real>&);                                    \
  template ModelBundle<Real> copy_model<Real>(const ModelBundle<Real>&);                     \
  template EncodeOut<Real> encode<Real>(const ModelBundle<Real>&, const Tensor<Real>&);      \
  template Predictions<Real> head_forward<Real>(const ModelBundle<Real>&, const Tensor<Real>&); \
  template Tensor<Real> predictor_forward<Real>(const ModelBundle<Real>&, const Tensor<Real>&); \
  template Tensor<Real> rotation_head_forward<Real>(const ModelBundle<Real>&,                \
                                                    const Tensor<Real>&);                    \
  template Predictions<Real> model_forward<Real>(const ModelBundle<Real>&, const Tensor<Real>&);

TTA_NETS_INSTANTIATE(float)
TTA_NETS_INSTANTIATE(double)

#undef TTA_NETS_INSTANTIATE

}  // namespace tta::nets

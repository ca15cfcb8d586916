#pragma once

#include <memory>
#include <vector>

#include "tta/tensor.hpp"

// Thin wrappers over apply_primitive. All graph code goes through these.
namespace tta::ops {

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  return apply_primitive(Prim::kAdd, std::vector<Tensor<Real>>{a, b});
}
template <class Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  return apply_primitive(Prim::kSub, std::vector<Tensor<Real>>{a, b});
}
template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  return apply_primitive(Prim::kMul, std::vector<Tensor<Real>>{a, b});
}
template <class Real>
Tensor<Real> scale(const Tensor<Real>& a, Real s) {
  return mul(a, Tensor<Real>::scalar(s));
}
template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  return apply_primitive(Prim::kMatMul, std::vector<Tensor<Real>>{a, b});
}
template <class Real>
Tensor<Real> conv2d(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>& bias,
                    int stride = 1, int pad = 0) {
  OpAttrs a;
  a.stride = stride;
  a.pad = pad;
  std::vector<Tensor<Real>> in{x, w};
  if (bias.defined()) in.push_back(bias);
  return apply_primitive(Prim::kConv2d, in, a);
}
template <class Real>
Tensor<Real> maxpool2d(const Tensor<Real>& x, int kernel, int stride) {
  OpAttrs a;
  a.kernel = kernel;
  a.stride = stride;
  return apply_primitive(Prim::kMaxPool2d, std::vector<Tensor<Real>>{x}, a);
}
template <class Real>
Tensor<Real> global_avg_pool(const Tensor<Real>& x) {
  return apply_primitive(Prim::kGlobalAvgPool, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> relu(const Tensor<Real>& x) {
  return apply_primitive(Prim::kRelu, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> softmax(const Tensor<Real>& x) {
  return apply_primitive(Prim::kSoftmax, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> log_softmax(const Tensor<Real>& x) {
  return apply_primitive(Prim::kLogSoftmax, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> exp(const Tensor<Real>& x) {
  return apply_primitive(Prim::kExp, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> log(const Tensor<Real>& x) {
  return apply_primitive(Prim::kLog, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> square(const Tensor<Real>& x) {
  return apply_primitive(Prim::kSquare, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> sum(const Tensor<Real>& x) {
  return apply_primitive(Prim::kSum, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> sum_last(const Tensor<Real>& x) {
  OpAttrs a;
  a.axis = static_cast<int>(x.shape().size()) - 1;
  return apply_primitive(Prim::kSum, std::vector<Tensor<Real>>{x}, a);
}
template <class Real>
Tensor<Real> mean(const Tensor<Real>& x) {
  return apply_primitive(Prim::kMean, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> mean_last(const Tensor<Real>& x) {
  OpAttrs a;
  a.axis = static_cast<int>(x.shape().size()) - 1;
  return apply_primitive(Prim::kMean, std::vector<Tensor<Real>>{x}, a);
}
template <class Real>
Tensor<Real> l2_norm_sq(const Tensor<Real>& x) {
  return apply_primitive(Prim::kL2NormSq, std::vector<Tensor<Real>>{x});
}
template <class Real>
Tensor<Real> gather(const Tensor<Real>& x,
                    std::shared_ptr<const std::vector<std::int64_t>> indices, Shape out_shape) {
  OpAttrs a;
  a.indices = std::move(indices);
  a.out_shape = std::move(out_shape);
  return apply_primitive(Prim::kGather, std::vector<Tensor<Real>>{x}, a);
}
template <class Real>
Tensor<Real> gather(const Tensor<Real>& x, std::vector<std::int64_t> indices, Shape out_shape) {
  return gather(x, std::make_shared<const std::vector<std::int64_t>>(std::move(indices)),
                std::move(out_shape));
}
template <class Real>
Tensor<Real> concat(const Tensor<Real>& a, const Tensor<Real>& b, int axis) {
  OpAttrs at;
  at.axis = axis;
  return apply_primitive(Prim::kConcat, std::vector<Tensor<Real>>{a, b}, at);
}
template <class Real>
Tensor<Real> reshape(const Tensor<Real>& x, Shape shape) {
  OpAttrs a;
  a.out_shape = std::move(shape);
  return apply_primitive(Prim::kReshape, std::vector<Tensor<Real>>{x}, a);
}

// sigmoid built from the closed primitive set: softmax of [x, 0] pairs,
// first column. Keeps box outputs in (0,1) and differentiable.
template <class Real>
Tensor<Real> sigmoid(const Tensor<Real>& x) {
  const std::int64_t n = x.numel();
  auto col = reshape(x, Shape{n, 1});
  auto pair = concat(col, Tensor<Real>::zeros({n, 1}), 1);
  auto sm = softmax(pair);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = 2 * i;
  return reshape(gather(sm, std::move(idx), Shape{n}), x.shape());
}

template <class To, class From>
Tensor<To> cast(const Tensor<From>& x) {
  std::vector<To> data(x.value().begin(), x.value().end());
  return Tensor<To>::from(x.shape(), std::move(data));
}

}  // namespace tta::ops

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tta/rng.hpp"

namespace tta {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Closed primitive set. Every differentiable computation in the project is a
// composition of these ops; the tape replays them in reverse for gradients.
enum class Prim {
  kAdd,
  kSub,
  kMul,
  kMatMul,
  kConv2d,
  kMaxPool2d,
  kGlobalAvgPool,
  kRelu,
  kSoftmax,
  kLogSoftmax,
  kExp,
  kLog,
  kSquare,
  kSum,
  kMean,
  kL2NormSq,
  kGather,
  kConcat,
  kReshape,
};

const char* prim_name(Prim p);

struct OpAttrs {
  int stride = 1;            // conv2d / maxpool2d
  int pad = 0;               // conv2d
  int kernel = 0;            // maxpool2d window
  std::optional<int> axis;   // sum/mean: set = reduce last axis; concat: axis index
  std::shared_ptr<const std::vector<std::int64_t>> indices;  // gather source indices
  Shape out_shape;           // reshape / gather output shape
};

template <class Real>
struct TensorNode {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until backward reaches this node
  bool requires_grad = false;
};

// Value-semantic handle to a tensor node. Values are immutable once a tensor
// participates in a graph; grad is the only mutable field afterwards.
template <class Real>
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<Real> data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real v, bool requires_grad = false);
  static Tensor scalar(Real v, bool requires_grad = false);
  static Tensor uniform(Shape shape, Rng& rng, Real lo, Real hi, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->value.size()); }
  std::span<const Real> value() const { return node_->value; }
  // Mutable view; only valid for leaves that have not yet entered a graph.
  std::span<Real> raw() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> grad_mut() { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), Real(0)); }
  void drop_grad() {
    node_->grad.clear();
    node_->grad.shrink_to_fit();
  }

  Real item() const;
  Tensor detach() const;                 // value copy, no grad participation
  Tensor clone(bool requires_grad) const;

  // throws if any element is NaN/Inf
  void check_finite(const char* what) const;

  TensorNode<Real>* node() const { return node_.get(); }
  std::shared_ptr<TensorNode<Real>> handle() const { return node_; }

  bool same_node(const Tensor& other) const { return node_.get() == other.node_.get(); }

 private:
  std::shared_ptr<TensorNode<Real>> node_;
};

template <class Real>
struct TapeEntry {
  Prim op;
  std::vector<std::shared_ptr<TensorNode<Real>>> inputs;
  std::shared_ptr<TensorNode<Real>> output;
  OpAttrs attrs;
  std::vector<std::int64_t> saved_idx;  // maxpool argmax positions
};

// Ordered record of primitive applications. Entries are appended at forward
// time, so the list is topologically sorted by construction. A tape runs one
// backward pass; reset() clears it for reuse.
template <class Real>
class Tape {
 public:
  void record(TapeEntry<Real> e) { entries_.push_back(std::move(e)); }
  void backward(const Tensor<Real>& loss);
  void reset() {
    entries_.clear();
    consumed_ = false;
  }
  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

 private:
  std::vector<TapeEntry<Real>> entries_;
  bool consumed_ = false;
};

// Thread-local active tape. Forward ops record onto it when a scope is open
// and any input requires grad; with no scope open, forwards are pure
// inference and build no graph.
template <class Real>
Tape<Real>* active_tape();

template <class Real>
class TapeScope {
 public:
  explicit TapeScope(Tape<Real>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<Real>* prev_;
};

template <class Real>
Tensor<Real> apply_primitive(Prim op, const std::vector<Tensor<Real>>& inputs,
                             const OpAttrs& attrs = {});

// Kernel thread budget for this thread: 0 = use all OpenMP threads,
// 1 = force the serial reference path. Experiment sweeps running several
// isolated runs in parallel set this to 1 per worker.
void set_kernel_threads(int n);
int kernel_threads();

}  // namespace tta

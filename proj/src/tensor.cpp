#include "tta/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tta/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tta {

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

const char* prim_name(Prim p) {
  switch (p) {
    case Prim::kAdd: return "add";
    case Prim::kSub: return "sub";
    case Prim::kMul: return "mul";
    case Prim::kMatMul: return "matmul";
    case Prim::kConv2d: return "conv2d";
    case Prim::kMaxPool2d: return "maxpool2d";
    case Prim::kGlobalAvgPool: return "global_avg_pool";
    case Prim::kRelu: return "relu";
    case Prim::kSoftmax: return "softmax";
    case Prim::kLogSoftmax: return "log_softmax";
    case Prim::kExp: return "exp";
    case Prim::kLog: return "log";
    case Prim::kSquare: return "square";
    case Prim::kSum: return "sum";
    case Prim::kMean: return "mean";
    case Prim::kL2NormSq: return "l2_norm_sq";
    case Prim::kGather: return "gather";
    case Prim::kConcat: return "concat";
    case Prim::kReshape: return "reshape";
  }
  return "?";
}

namespace {

[[noreturn]] void op_fail(Prim op, const std::string& msg) {
  throw std::runtime_error(std::string(prim_name(op)) + ": " + msg);
}

// element-owned loops only; safe to thread for any partition
template <class F>
void pfor(std::int64_t n, F&& f) {
#ifdef _OPENMP
  if (kern::use_parallel() && n >= 32768) {
    const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) f(i);
}

enum class BcPattern { kFull, kScalar, kSuffix };

// add/sub/mul accept equal shapes, a scalar operand, or one operand whose
// shape is a trailing suffix of the other's
struct BcPlan {
  Shape out_shape;
  BcPattern a, b;
  std::int64_t suffix = 1;  // numel of the smaller operand
};

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  const std::size_t off = big.size() - small.size();
  for (std::size_t i = 0; i < small.size(); ++i)
    if (small[i] != big[off + i]) return false;
  return true;
}

BcPlan broadcast_plan(Prim op, const Shape& sa, const Shape& sb) {
  BcPlan p;
  const std::int64_t na = shape_numel(sa), nb = shape_numel(sb);
  if (sa == sb) {
    p.out_shape = sa;
    p.a = p.b = BcPattern::kFull;
    return p;
  }
  if (nb == 1) {
    p.out_shape = sa;
    p.a = BcPattern::kFull;
    p.b = BcPattern::kScalar;
    return p;
  }
  if (na == 1) {
    p.out_shape = sb;
    p.a = BcPattern::kScalar;
    p.b = BcPattern::kFull;
    return p;
  }
  if (is_suffix(sb, sa)) {
    p.out_shape = sa;
    p.a = BcPattern::kFull;
    p.b = BcPattern::kSuffix;
    p.suffix = nb;
    return p;
  }
  if (is_suffix(sa, sb)) {
    p.out_shape = sb;
    p.a = BcPattern::kSuffix;
    p.b = BcPattern::kFull;
    p.suffix = na;
    return p;
  }
  op_fail(op, "shapes " + shape_str(sa) + " and " + shape_str(sb) + " do not broadcast");
}

template <class Real>
Real read_bc(const Real* p, std::int64_t i, BcPattern pat, std::int64_t suffix) {
  switch (pat) {
    case BcPattern::kFull: return p[i];
    case BcPattern::kScalar: return p[0];
    case BcPattern::kSuffix: return p[i % suffix];
  }
  return Real(0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> Tensor<Real>::from(Shape shape, std::vector<Real> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw std::runtime_error("tensor: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
  Tensor t;
  t.node_ = std::make_shared<TensorNode<Real>>();
  t.node_->shape = std::move(shape);
  t.node_->value = std::move(data);
  t.node_->requires_grad = requires_grad;
  return t;
}

template <class Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Real(0), requires_grad);
}

template <class Real>
Tensor<Real> Tensor<Real>::full(Shape shape, Real v, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<Real>(static_cast<std::size_t>(n), v), requires_grad);
}

template <class Real>
Tensor<Real> Tensor<Real>::scalar(Real v, bool requires_grad) {
  return from({}, {v}, requires_grad);
}

template <class Real>
Tensor<Real> Tensor<Real>::uniform(Shape shape, Rng& rng, Real lo, Real hi, bool requires_grad) {
  const auto n = shape_numel(shape);
  std::vector<Real> data(static_cast<std::size_t>(n));
  for (auto& v : data) v = static_cast<Real>(rng.uniform(lo, hi));
  return from(std::move(shape), std::move(data), requires_grad);
}

template <class Real>
Real Tensor<Real>::item() const {
  if (numel() != 1) throw std::runtime_error("item(): tensor has " + std::to_string(numel()) + " elements");
  return node_->value[0];
}

template <class Real>
Tensor<Real> Tensor<Real>::detach() const {
  return from(node_->shape, node_->value, false);
}

template <class Real>
Tensor<Real> Tensor<Real>::clone(bool requires_grad) const {
  return from(node_->shape, node_->value, requires_grad);
}

template <class Real>
void Tensor<Real>::check_finite(const char* what) const {
  for (const Real v : node_->value)
    if (!std::isfinite(v))
      throw std::runtime_error(std::string(what) + ": non-finite value encountered");
}

// ---------------------------------------------------------------------------
// active tape
// ---------------------------------------------------------------------------

namespace {
template <class Real>
Tape<Real>*& tape_slot() {
  thread_local Tape<Real>* slot = nullptr;
  return slot;
}
}  // namespace

template <class Real>
Tape<Real>* active_tape() {
  return tape_slot<Real>();
}

template <class Real>
TapeScope<Real>::TapeScope(Tape<Real>& tape) {
  prev_ = tape_slot<Real>();
  tape_slot<Real>() = &tape;
}

template <class Real>
TapeScope<Real>::~TapeScope() {
  tape_slot<Real>() = prev_;
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

namespace {

template <class Real>
void expect_inputs(Prim op, const std::vector<Tensor<Real>>& in, std::size_t lo, std::size_t hi) {
  if (in.size() < lo || in.size() > hi)
    op_fail(op, "expected " + std::to_string(lo) + (hi != lo ? ".." + std::to_string(hi) : "") +
                    " inputs, got " + std::to_string(in.size()));
  for (const auto& t : in)
    if (!t.defined()) op_fail(op, "undefined input tensor");
}

template <class Real>
kern::ConvDims conv_dims(Prim op, const std::vector<Tensor<Real>>& in, const OpAttrs& a) {
  const auto& xs = in[0].shape();
  const auto& ws = in[1].shape();
  if (xs.size() != 4 || ws.size() != 4)
    op_fail(op, "conv2d wants input [B,C,H,W] and weight [Cout,Cin,kh,kw], got " + shape_str(xs) +
                    " and " + shape_str(ws));
  if (xs[1] != ws[1]) op_fail(op, "channel mismatch: input " + shape_str(xs) + " weight " + shape_str(ws));
  if (a.stride < 1 || a.pad < 0) op_fail(op, "bad stride/pad");
  kern::ConvDims d;
  d.batch = xs[0]; d.cin = xs[1]; d.h = xs[2]; d.w = xs[3];
  d.cout = ws[0]; d.kh = ws[2]; d.kw = ws[3];
  d.stride = a.stride; d.pad = a.pad;
  d.ho = (d.h + 2 * a.pad - d.kh) / a.stride + 1;
  d.wo = (d.w + 2 * a.pad - d.kw) / a.stride + 1;
  if (d.ho < 1 || d.wo < 1) op_fail(op, "kernel larger than padded input");
  if (in.size() == 3) {
    const auto& bs = in[2].shape();
    if (shape_numel(bs) != d.cout) op_fail(op, "bias shape " + shape_str(bs) + " != Cout");
  }
  return d;
}

template <class Real>
kern::PoolDims pool_dims(Prim op, const Tensor<Real>& x, const OpAttrs& a) {
  const auto& xs = x.shape();
  if (xs.size() != 4) op_fail(op, "maxpool2d wants [B,C,H,W], got " + shape_str(xs));
  if (a.kernel < 1 || a.stride < 1) op_fail(op, "bad kernel/stride");
  kern::PoolDims d;
  d.batch = xs[0]; d.c = xs[1]; d.h = xs[2]; d.w = xs[3];
  d.kernel = a.kernel; d.stride = a.stride;
  d.ho = (d.h - d.kernel) / d.stride + 1;
  d.wo = (d.w - d.kernel) / d.stride + 1;
  if (d.ho < 1 || d.wo < 1) op_fail(op, "pool window larger than input");
  return d;
}

// rows/cols split for ops acting over the last axis
template <class Real>
std::pair<std::int64_t, std::int64_t> rowcol(Prim op, const Tensor<Real>& x) {
  const auto& s = x.shape();
  if (s.empty()) op_fail(op, "needs rank >= 1, got scalar");
  const std::int64_t cols = s.back();
  return {x.numel() / cols, cols};
}

}  // namespace

template <class Real>
Tensor<Real> apply_primitive(Prim op, const std::vector<Tensor<Real>>& inputs,
                             const OpAttrs& attrs) {
  Tensor<Real> out;
  std::vector<std::int64_t> saved_idx;

  switch (op) {
    case Prim::kAdd:
    case Prim::kSub:
    case Prim::kMul: {
      expect_inputs(op, inputs, 2, 2);
      const auto plan = broadcast_plan(op, inputs[0].shape(), inputs[1].shape());
      out = Tensor<Real>::zeros(plan.out_shape);
      const Real* a = inputs[0].value().data();
      const Real* b = inputs[1].value().data();
      Real* o = out.raw().data();
      const auto pa = plan.a, pb = plan.b;
      const auto sfx = plan.suffix;
      if (op == Prim::kAdd)
        pfor(out.numel(), [&](std::int64_t i) { o[i] = read_bc(a, i, pa, sfx) + read_bc(b, i, pb, sfx); });
      else if (op == Prim::kSub)
        pfor(out.numel(), [&](std::int64_t i) { o[i] = read_bc(a, i, pa, sfx) - read_bc(b, i, pb, sfx); });
      else
        pfor(out.numel(), [&](std::int64_t i) { o[i] = read_bc(a, i, pa, sfx) * read_bc(b, i, pb, sfx); });
      break;
    }
    case Prim::kMatMul: {
      expect_inputs(op, inputs, 2, 2);
      const auto& sa = inputs[0].shape();
      const auto& sb = inputs[1].shape();
      if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
        op_fail(op, "wants [m,k]x[k,n], got " + shape_str(sa) + " and " + shape_str(sb));
      out = Tensor<Real>::zeros({sa[0], sb[1]});
      kern::matmul(inputs[0].value().data(), inputs[1].value().data(), out.raw().data(),
                   sa[0], sa[1], sb[1]);
      break;
    }
    case Prim::kConv2d: {
      expect_inputs(op, inputs, 2, 3);
      const auto d = conv_dims(op, inputs, attrs);
      out = Tensor<Real>::zeros({d.batch, d.cout, d.ho, d.wo});
      kern::conv2d_fwd(inputs[0].value().data(), inputs[1].value().data(),
                       inputs.size() == 3 ? inputs[2].value().data() : nullptr,
                       out.raw().data(), d);
      break;
    }
    case Prim::kMaxPool2d: {
      expect_inputs(op, inputs, 1, 1);
      const auto d = pool_dims(op, inputs[0], attrs);
      out = Tensor<Real>::zeros({d.batch, d.c, d.ho, d.wo});
      saved_idx.resize(static_cast<std::size_t>(out.numel()));
      kern::maxpool_fwd(inputs[0].value().data(), out.raw().data(), saved_idx.data(), d);
      break;
    }
    case Prim::kGlobalAvgPool: {
      expect_inputs(op, inputs, 1, 1);
      const auto& s = inputs[0].shape();
      if (s.size() != 4) op_fail(op, "wants [B,C,H,W], got " + shape_str(s));
      out = Tensor<Real>::zeros({s[0], s[1]});
      kern::global_avg_pool(inputs[0].value().data(), out.raw().data(), s[0] * s[1], s[2] * s[3]);
      break;
    }
    case Prim::kRelu: {
      expect_inputs(op, inputs, 1, 1);
      out = Tensor<Real>::zeros(inputs[0].shape());
      const Real* x = inputs[0].value().data();
      Real* o = out.raw().data();
      pfor(out.numel(), [&](std::int64_t i) { o[i] = x[i] > Real(0) ? x[i] : Real(0); });
      break;
    }
    case Prim::kSoftmax:
    case Prim::kLogSoftmax: {
      expect_inputs(op, inputs, 1, 1);
      const auto [rows, cols] = rowcol(op, inputs[0]);
      out = Tensor<Real>::zeros(inputs[0].shape());
      if (op == Prim::kSoftmax)
        kern::softmax_rows(inputs[0].value().data(), out.raw().data(), rows, cols);
      else
        kern::log_softmax_rows(inputs[0].value().data(), out.raw().data(), rows, cols);
      break;
    }
    case Prim::kExp:
    case Prim::kLog:
    case Prim::kSquare: {
      expect_inputs(op, inputs, 1, 1);
      out = Tensor<Real>::zeros(inputs[0].shape());
      const Real* x = inputs[0].value().data();
      Real* o = out.raw().data();
      if (op == Prim::kExp)
        pfor(out.numel(), [&](std::int64_t i) { o[i] = std::exp(x[i]); });
      else if (op == Prim::kLog)
        pfor(out.numel(), [&](std::int64_t i) { o[i] = std::log(x[i]); });
      else
        pfor(out.numel(), [&](std::int64_t i) { o[i] = x[i] * x[i]; });
      break;
    }
    case Prim::kSum:
    case Prim::kMean: {
      expect_inputs(op, inputs, 1, 1);
      const Real* x = inputs[0].value().data();
      if (!attrs.axis.has_value()) {
        Real acc = Real(0);
        for (std::int64_t i = 0; i < inputs[0].numel(); ++i) acc += x[i];
        if (op == Prim::kMean) acc /= static_cast<Real>(inputs[0].numel());
        out = Tensor<Real>::scalar(acc);
      } else {
        const auto& s = inputs[0].shape();
        if (*attrs.axis != static_cast<int>(s.size()) - 1)
          op_fail(op, "only last-axis reduction is supported");
        const auto [rows, cols] = rowcol(op, inputs[0]);
        Shape os(s.begin(), s.end() - 1);
        out = Tensor<Real>::zeros(os);
        Real* o = out.raw().data();
        for (std::int64_t r = 0; r < rows; ++r) {
          Real acc = Real(0);
          for (std::int64_t c = 0; c < cols; ++c) acc += x[r * cols + c];
          o[r] = op == Prim::kMean ? acc / static_cast<Real>(cols) : acc;
        }
      }
      break;
    }
    case Prim::kL2NormSq: {
      expect_inputs(op, inputs, 1, 1);
      const Real* x = inputs[0].value().data();
      Real acc = Real(0);
      for (std::int64_t i = 0; i < inputs[0].numel(); ++i) acc += x[i] * x[i];
      out = Tensor<Real>::scalar(acc);
      break;
    }
    case Prim::kGather: {
      expect_inputs(op, inputs, 1, 1);
      if (!attrs.indices) op_fail(op, "missing indices");
      const auto& idx = *attrs.indices;
      if (attrs.out_shape.empty() && idx.size() != 1)
        op_fail(op, "out_shape required");
      Shape os = attrs.out_shape.empty() ? Shape{} : attrs.out_shape;
      if (shape_numel(os) != static_cast<std::int64_t>(idx.size()))
        op_fail(op, "out_shape " + shape_str(os) + " != index count " + std::to_string(idx.size()));
      const std::int64_t n = inputs[0].numel();
      out = Tensor<Real>::zeros(os);
      const Real* x = inputs[0].value().data();
      Real* o = out.raw().data();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= n)
          op_fail(op, "index " + std::to_string(idx[i]) + " out of range [0," + std::to_string(n) + ")");
        o[i] = x[idx[i]];
      }
      break;
    }
    case Prim::kConcat: {
      expect_inputs(op, inputs, 2, 2);
      const auto& sa = inputs[0].shape();
      const auto& sb = inputs[1].shape();
      const int axis = attrs.axis.value_or(0);
      if (sa.size() != sb.size() || axis < 0 || axis >= static_cast<int>(sa.size()))
        op_fail(op, "rank mismatch or bad axis for " + shape_str(sa) + " and " + shape_str(sb));
      for (std::size_t i = 0; i < sa.size(); ++i)
        if (static_cast<int>(i) != axis && sa[i] != sb[i])
          op_fail(op, "non-axis dims differ: " + shape_str(sa) + " vs " + shape_str(sb));
      Shape os = sa;
      os[axis] += sb[axis];
      out = Tensor<Real>::zeros(os);
      std::int64_t outer = 1, inner = 1;
      for (int i = 0; i < axis; ++i) outer *= sa[i];
      for (std::size_t i = axis + 1; i < sa.size(); ++i) inner *= sa[i];
      const std::int64_t wa = sa[axis] * inner, wb = sb[axis] * inner;
      const Real* a = inputs[0].value().data();
      const Real* b = inputs[1].value().data();
      Real* o = out.raw().data();
      for (std::int64_t r = 0; r < outer; ++r) {
        std::copy(a + r * wa, a + (r + 1) * wa, o + r * (wa + wb));
        std::copy(b + r * wb, b + (r + 1) * wb, o + r * (wa + wb) + wa);
      }
      break;
    }
    case Prim::kReshape: {
      expect_inputs(op, inputs, 1, 1);
      if (shape_numel(attrs.out_shape) != inputs[0].numel())
        op_fail(op, "cannot reshape " + shape_str(inputs[0].shape()) + " to " + shape_str(attrs.out_shape));
      out = Tensor<Real>::from(attrs.out_shape,
                               std::vector<Real>(inputs[0].value().begin(), inputs[0].value().end()));
      break;
    }
  }

  if (!out.defined()) op_fail(op, "unknown primitive");
  out.check_finite(prim_name(op));

  bool rg = false;
  for (const auto& t : inputs) rg = rg || t.requires_grad();
  Tape<Real>* tape = active_tape<Real>();
  if (rg && tape) {
    out.set_requires_grad(true);
    TapeEntry<Real> e;
    e.op = op;
    for (const auto& t : inputs) e.inputs.push_back(t.handle());
    e.output = out.handle();
    e.attrs = attrs;
    e.saved_idx = std::move(saved_idx);
    tape->record(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

namespace {

template <class Real>
void ensure_grad(TensorNode<Real>* n) {
  if (n->grad.empty()) n->grad.assign(n->value.size(), Real(0));
}

template <class Real>
void backward_entry(const TapeEntry<Real>& e) {
  auto* outn = e.output.get();
  const Real* g = outn->grad.data();
  const std::int64_t on = static_cast<std::int64_t>(outn->value.size());

  auto want = [&](std::size_t i) { return e.inputs[i]->requires_grad; };
  auto gptr = [&](std::size_t i) {
    ensure_grad(e.inputs[i].get());
    return e.inputs[i]->grad.data();
  };

  switch (e.op) {
    case Prim::kAdd:
    case Prim::kSub:
    case Prim::kMul: {
      const auto plan = broadcast_plan(e.op, e.inputs[0]->shape, e.inputs[1]->shape);
      const Real* a = e.inputs[0]->value.data();
      const Real* b = e.inputs[1]->value.data();
      for (int side = 0; side < 2; ++side) {
        if (!want(side)) continue;
        Real* gi = gptr(side);
        const auto pat = side == 0 ? plan.a : plan.b;
        const Real sign = (e.op == Prim::kSub && side == 1) ? Real(-1) : Real(1);
        auto factor = [&](std::int64_t i) -> Real {
          if (e.op != Prim::kMul) return sign;
          // d(a*b)/da = b and vice versa
          return side == 0 ? read_bc(b, i, plan.b, plan.suffix)
                           : read_bc(a, i, plan.a, plan.suffix);
        };
        if (pat == BcPattern::kFull) {
          pfor(on, [&](std::int64_t i) { gi[i] += sign * (e.op == Prim::kMul ? factor(i) * g[i] : g[i]); });
        } else if (pat == BcPattern::kScalar) {
          Real acc = Real(0);
          for (std::int64_t i = 0; i < on; ++i) acc += (e.op == Prim::kMul ? factor(i) * g[i] : g[i]);
          gi[0] += sign * acc;
        } else {
          const std::int64_t sfx = plan.suffix;
          pfor(sfx, [&](std::int64_t j) {
            Real acc = Real(0);
            for (std::int64_t i = j; i < on; i += sfx)
              acc += (e.op == Prim::kMul ? factor(i) * g[i] : g[i]);
            gi[j] += sign * acc;
          });
        }
      }
      break;
    }
    case Prim::kMatMul: {
      const auto& sa = e.inputs[0]->shape;
      const auto& sb = e.inputs[1]->shape;
      if (want(0))
        kern::matmul_grad_a(g, e.inputs[1]->value.data(), gptr(0), sa[0], sa[1], sb[1]);
      if (want(1))
        kern::matmul_grad_b(g, e.inputs[0]->value.data(), gptr(1), sa[0], sa[1], sb[1]);
      break;
    }
    case Prim::kConv2d: {
      kern::ConvDims d;
      const auto& xs = e.inputs[0]->shape;
      const auto& ws = e.inputs[1]->shape;
      d.batch = xs[0]; d.cin = xs[1]; d.h = xs[2]; d.w = xs[3];
      d.cout = ws[0]; d.kh = ws[2]; d.kw = ws[3];
      d.stride = e.attrs.stride; d.pad = e.attrs.pad;
      d.ho = outn->shape[2]; d.wo = outn->shape[3];
      if (want(0)) kern::conv2d_grad_input(g, e.inputs[1]->value.data(), gptr(0), d);
      if (want(1)) kern::conv2d_grad_weight(g, e.inputs[0]->value.data(), gptr(1), d);
      if (e.inputs.size() == 3 && want(2)) kern::conv2d_grad_bias(g, gptr(2), d);
      break;
    }
    case Prim::kMaxPool2d: {
      if (!want(0)) break;
      const auto& xs = e.inputs[0]->shape;
      kern::PoolDims d;
      d.batch = xs[0]; d.c = xs[1]; d.h = xs[2]; d.w = xs[3];
      d.ho = outn->shape[2]; d.wo = outn->shape[3];
      d.kernel = e.attrs.kernel; d.stride = e.attrs.stride;
      kern::maxpool_bwd(g, e.saved_idx.data(), gptr(0), d);
      break;
    }
    case Prim::kGlobalAvgPool: {
      if (!want(0)) break;
      const auto& xs = e.inputs[0]->shape;
      kern::global_avg_pool_bwd(g, gptr(0), xs[0] * xs[1], xs[2] * xs[3]);
      break;
    }
    case Prim::kRelu: {
      if (!want(0)) break;
      const Real* x = e.inputs[0]->value.data();
      Real* gi = gptr(0);
      pfor(on, [&](std::int64_t i) { gi[i] += x[i] > Real(0) ? g[i] : Real(0); });
      break;
    }
    case Prim::kSoftmax: {
      if (!want(0)) break;
      const std::int64_t cols = outn->shape.back();
      kern::softmax_rows_bwd(outn->value.data(), g, gptr(0), on / cols, cols);
      break;
    }
    case Prim::kLogSoftmax: {
      if (!want(0)) break;
      const std::int64_t cols = outn->shape.back();
      kern::log_softmax_rows_bwd(outn->value.data(), g, gptr(0), on / cols, cols);
      break;
    }
    case Prim::kExp: {
      if (!want(0)) break;
      const Real* y = outn->value.data();
      Real* gi = gptr(0);
      pfor(on, [&](std::int64_t i) { gi[i] += y[i] * g[i]; });
      break;
    }
    case Prim::kLog: {
      if (!want(0)) break;
      const Real* x = e.inputs[0]->value.data();
      Real* gi = gptr(0);
      pfor(on, [&](std::int64_t i) { gi[i] += g[i] / x[i]; });
      break;
    }
    case Prim::kSquare: {
      if (!want(0)) break;
      const Real* x = e.inputs[0]->value.data();
      Real* gi = gptr(0);
      pfor(on, [&](std::int64_t i) { gi[i] += Real(2) * x[i] * g[i]; });
      break;
    }
    case Prim::kSum:
    case Prim::kMean: {
      if (!want(0)) break;
      Real* gi = gptr(0);
      const std::int64_t in_n = static_cast<std::int64_t>(e.inputs[0]->value.size());
      if (!e.attrs.axis.has_value()) {
        const Real gv = e.op == Prim::kMean ? g[0] / static_cast<Real>(in_n) : g[0];
        pfor(in_n, [&](std::int64_t i) { gi[i] += gv; });
      } else {
        const std::int64_t cols = e.inputs[0]->shape.back();
        const Real scale = e.op == Prim::kMean ? Real(1) / static_cast<Real>(cols) : Real(1);
        pfor(in_n, [&](std::int64_t i) { gi[i] += scale * g[i / cols]; });
      }
      break;
    }
    case Prim::kL2NormSq: {
      if (!want(0)) break;
      const Real* x = e.inputs[0]->value.data();
      Real* gi = gptr(0);
      const Real gv = g[0];
      const std::int64_t in_n = static_cast<std::int64_t>(e.inputs[0]->value.size());
      pfor(in_n, [&](std::int64_t i) { gi[i] += Real(2) * x[i] * gv; });
      break;
    }
    case Prim::kGather: {
      if (!want(0)) break;
      Real* gi = gptr(0);
      const auto& idx = *e.attrs.indices;
      // scatter-add stays serial: duplicate indices are legal
      for (std::size_t i = 0; i < idx.size(); ++i) gi[idx[i]] += g[i];
      break;
    }
    case Prim::kConcat: {
      const auto& sa = e.inputs[0]->shape;
      const auto& sb = e.inputs[1]->shape;
      const int axis = e.attrs.axis.value_or(0);
      std::int64_t outer = 1, inner = 1;
      for (int i = 0; i < axis; ++i) outer *= sa[i];
      for (std::size_t i = axis + 1; i < sa.size(); ++i) inner *= sa[i];
      const std::int64_t wa = sa[axis] * inner, wb = sb[axis] * inner;
      for (int side = 0; side < 2; ++side) {
        if (!want(side)) continue;
        Real* gi = gptr(side);
        const std::int64_t w = side == 0 ? wa : wb;
        const std::int64_t off = side == 0 ? 0 : wa;
        for (std::int64_t r = 0; r < outer; ++r)
          for (std::int64_t i = 0; i < w; ++i) gi[r * w + i] += g[r * (wa + wb) + off + i];
      }
      break;
    }
    case Prim::kReshape: {
      if (!want(0)) break;
      Real* gi = gptr(0);
      pfor(on, [&](std::int64_t i) { gi[i] += g[i]; });
      break;
    }
  }
}

}  // namespace

template <class Real>
void Tape<Real>::backward(const Tensor<Real>& loss) {
  if (consumed_) throw std::runtime_error("backward: tape already consumed (reset() to reuse)");
  if (!loss.defined() || loss.numel() != 1)
    throw std::runtime_error("backward: loss must be a scalar tensor");
  consumed_ = true;
  loss.node()->grad.assign(1, Real(1));
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // no path to the loss
    backward_entry(*it);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template class TapeScope<float>;
template class TapeScope<double>;
template Tape<float>* active_tape<float>();
template Tape<double>* active_tape<double>();
template Tensor<float> apply_primitive<float>(Prim, const std::vector<Tensor<float>>&, const OpAttrs&);
template Tensor<double> apply_primitive<double>(Prim, const std::vector<Tensor<double>>&, const OpAttrs&);

}  // namespace tta

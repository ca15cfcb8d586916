#pragma once

#include <cstdint>

namespace tta::kern {

struct ConvDims {
  std::int64_t batch, cin, h, w;   // input
  std::int64_t cout, kh, kw;       // filter
  std::int64_t ho, wo;             // output
  int stride, pad;
};

struct PoolDims {
  std::int64_t batch, c, h, w;
  std::int64_t ho, wo;
  int kernel, stride;
};

// Each kernel exists twice: kern::serial is the plain-loop reference,
// kern::par the OpenMP version. Both drive the same per-row/per-element
// helpers, so a given output element is produced by an identical serial
// computation either way and the two implementations agree bitwise for any
// thread count. Full reductions to a scalar (sum/mean/l2) stay serial; they
// are memory-bound and not worth a deterministic tree reduction.

namespace serial {

template <class Real>
void matmul(const Real* a, const Real* b, Real* out, std::int64_t m, std::int64_t k, std::int64_t n);
template <class Real>
void matmul_grad_a(const Real* gout, const Real* b, Real* ga, std::int64_t m, std::int64_t k, std::int64_t n);
template <class Real>
void matmul_grad_b(const Real* gout, const Real* a, Real* gb, std::int64_t m, std::int64_t k, std::int64_t n);

template <class Real>
void conv2d_fwd(const Real* in, const Real* w, const Real* bias, Real* out, const ConvDims& d);
template <class Real>
void conv2d_grad_input(const Real* gout, const Real* w, Real* gin, const ConvDims& d);
template <class Real>
void conv2d_grad_weight(const Real* gout, const Real* in, Real* gw, const ConvDims& d);
template <class Real>
void conv2d_grad_bias(const Real* gout, Real* gb, const ConvDims& d);

template <class Real>
void maxpool_fwd(const Real* in, Real* out, std::int64_t* argmax, const PoolDims& d);
template <class Real>
void maxpool_bwd(const Real* gout, const std::int64_t* argmax, Real* gin, const PoolDims& d);

template <class Real>
void softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols);
template <class Real>
void log_softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols);
template <class Real>
void softmax_rows_bwd(const Real* y, const Real* gy, Real* gx, std::int64_t rows, std::int64_t cols);
template <class Real>
void log_softmax_rows_bwd(const Real* logy, const Real* gy, Real* gx, std::int64_t rows, std::int64_t cols);

template <class Real>
void global_avg_pool(const Real* in, Real* out, std::int64_t planes, std::int64_t hw);
template <class Real>
void global_avg_pool_bwd(const Real* gout, Real* gin, std::int64_t planes, std::int64_t hw);

}  // namespace serial

namespace par {

template <class Real>
void matmul(const Real* a, const Real* b, Real* out, std::int64_t m, std::int64_t k, std::int64_t n);
template <class Real>
void matmul_grad_a(const Real* gout, const Real* b, Real* ga, std::int64_t m, std::int64_t k, std::int64_t n);
template <class Real>
void matmul_grad_b(const Real* gout, const Real* a, Real* gb, std::int64_t m, std::int64_t k, std::int64_t n);

template <class Real>
void conv2d_fwd(const Real* in, const Real* w, const Real* bias, Real* out, const ConvDims& d);
template <class Real>
void conv2d_grad_input(const Real* gout, const Real* w, Real* gin, const ConvDims& d);
template <class Real>
void conv2d_grad_weight(const Real* gout, const Real* in, Real* gw, const ConvDims& d);
template <class Real>
void conv2d_grad_bias(const Real* gout, Real* gb, const ConvDims& d);

template <class Real>
void maxpool_fwd(const Real* in, Real* out, std::int64_t* argmax, const PoolDims& d);
template <class Real>
void maxpool_bwd(const Real* gout, const std::int64_t* argmax, Real* gin, const PoolDims& d);

template <class Real>
void softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols);
template <class Real>
void log_softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols);
template <class Real>
void softmax_rows_bwd(const Real* y, const Real* gy, Real* gx, std::int64_t rows, std::int64_t cols);
template <class Real>
void log_softmax_rows_bwd(const Real* logy, const Real* gy, Real* gx, std::int64_t rows, std::int64_t cols);

template <class Real>
void global_avg_pool(const Real* in, Real* out, std::int64_t planes, std::int64_t hw);
template <class Real>
void global_avg_pool_bwd(const Real* gout, Real* gin, std::int64_t planes, std::int64_t hw);

}  // namespace par

// Dispatchers used by the op layer: par when the thread budget allows,
// serial otherwise. Results are identical either way.
bool use_parallel();

template <class Real>
void matmul(const Real* a, const Real* b, Real* out, std::int64_t m, std::int64_t k, std::int64_t n);
template <class Real>
void matmul_grad_a(const Real* gout, const Real* b, Real* ga, std::int64_t m, std::int64_t k, std::int64_t n);
template <class Real>
void matmul_grad_b(const Real* gout, const Real* a, Real* gb, std::int64_t m, std::int64_t k, std::int64_t n);
template <class Real>
void conv2d_fwd(const Real* in, const Real* w, const Real* bias, Real* out, const ConvDims& d);
template <class Real>
void conv2d_grad_input(const Real* gout, const Real* w, Real* gin, const ConvDims& d);
template <class Real>
void conv2d_grad_weight(const Real* gout, const Real* in, Real* gw, const ConvDims& d);
template <class Real>
void conv2d_grad_bias(const Real* gout, Real* gb, const ConvDims& d);
template <class Real>
void maxpool_fwd(const Real* in, Real* out, std::int64_t* argmax, const PoolDims& d);
template <class Real>
void maxpool_bwd(const Real* gout, const std::int64_t* argmax, Real* gin, const PoolDims& d);
template <class Real>
void softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols);
template <class Real>
void log_softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols);
template <class Real>
void softmax_rows_bwd(const Real* y, const Real* gy, Real* gx, std::int64_t rows, std::int64_t cols);
template <class Real>
void log_softmax_rows_bwd(const Real* logy, const Real* gy, Real* gx, std::int64_t rows, std::int64_t cols);
template <class Real>
void global_avg_pool(const Real* in, Real* out, std::int64_t planes, std::int64_t hw);
template <class Real>
void global_avg_pool_bwd(const Real* gout, Real* gin, std::int64_t planes, std::int64_t hw);

}  // namespace tta::kern

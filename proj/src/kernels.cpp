#include "tta/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tta {

namespace {
thread_local int g_kernel_threads = 0;  // 0 = all available
}

void set_kernel_threads(int n) { g_kernel_threads = n < 0 ? 0 : n; }

int kernel_threads() {
#ifdef _OPENMP
  return g_kernel_threads == 0 ? omp_get_max_threads() : g_kernel_threads;
#else
  return 1;
#endif
}

}  // namespace tta

namespace tta::kern {

bool use_parallel() { return kernel_threads() > 1; }

namespace {

// Shared inner helpers. Both the serial and the OpenMP outer loops call
// these, so every output element is produced by the exact same instruction
// sequence regardless of threading. noinline keeps the compiler from
// re-optimizing them differently per call site.

template <class Real>
[[gnu::noinline]] void axpy(Real* dst, Real a, const Real* src, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) dst[i] += a * src[i];
}

template <class Real>
[[gnu::noinline]] Real dot(const Real* a, const Real* b, std::int64_t n) {
  Real acc = Real(0);
  for (std::int64_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// first index o >= 0 with o*stride >= x
inline std::int64_t first_ge(std::int64_t x, std::int64_t stride) {
  return x <= 0 ? 0 : (x + stride - 1) / stride;
}

// one past the last index o with o*stride <= x
inline std::int64_t last_le(std::int64_t x, std::int64_t stride) {
  return x < 0 ? 0 : x / stride + 1;
}

template <class Real>
[[gnu::noinline]] void matmul_row(const Real* a_row, const Real* b, Real* out_row,
                                  std::int64_t k, std::int64_t n) {
  std::fill(out_row, out_row + n, Real(0));
  for (std::int64_t j = 0; j < k; ++j) axpy(out_row, a_row[j], b + j * n, n);
}

template <class Real>
[[gnu::noinline]] void matmul_row_ga(const Real* gout_row, const Real* b, Real* ga_row,
                                     std::int64_t k, std::int64_t n) {
  for (std::int64_t j = 0; j < k; ++j) ga_row[j] += dot(gout_row, b + j * n, n);
}

template <class Real>
[[gnu::noinline]] void matmul_row_gb(const Real* a, const Real* gout, Real* gb_row,
                                     std::int64_t m, std::int64_t kidx, std::int64_t k,
                                     std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) axpy(gb_row, a[i * k + kidx], gout + i * n, n);
}

template <class Real>
[[gnu::noinline]] void conv_plane_fwd(const Real* in_img, const Real* w_slice, Real bias,
                                      Real* plane, const ConvDims& d) {
  std::fill(plane, plane + d.ho * d.wo, bias);
  for (std::int64_t ci = 0; ci < d.cin; ++ci) {
    const Real* img = in_img + ci * d.h * d.w;
    const Real* wk = w_slice + ci * d.kh * d.kw;
    for (std::int64_t r = 0; r < d.kh; ++r) {
      const std::int64_t oh_lo = first_ge(d.pad - r, d.stride);
      const std::int64_t oh_hi = std::min<std::int64_t>(d.ho, last_le(d.h - 1 - r + d.pad, d.stride));
      for (std::int64_t oh = oh_lo; oh < oh_hi; ++oh) {
        const Real* in_row = img + (oh * d.stride + r - d.pad) * d.w;
        Real* out_row = plane + oh * d.wo;
        for (std::int64_t c = 0; c < d.kw; ++c) {
          const Real wv = wk[r * d.kw + c];
          const std::int64_t ow_lo = first_ge(d.pad - c, d.stride);
          const std::int64_t ow_hi = std::min<std::int64_t>(d.wo, last_le(d.w - 1 - c + d.pad, d.stride));
          if (d.stride == 1) {
            axpy(out_row + ow_lo, wv, in_row + ow_lo + c - d.pad, ow_hi - ow_lo);
          } else {
            for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow)
              out_row[ow] += wv * in_row[ow * d.stride + c - d.pad];
          }
        }
      }
    }
  }
}

template <class Real>
[[gnu::noinline]] void conv_plane_gin(const Real* gout_b, const Real* w_ci,
                                      std::int64_t w_stride, Real* gin_plane,
                                      const ConvDims& d) {
  for (std::int64_t co = 0; co < d.cout; ++co) {
    const Real* gimg = gout_b + co * d.ho * d.wo;
    const Real* wk = w_ci + co * w_stride;
    for (std::int64_t r = 0; r < d.kh; ++r) {
      const std::int64_t oh_lo = first_ge(d.pad - r, d.stride);
      const std::int64_t oh_hi = std::min<std::int64_t>(d.ho, last_le(d.h - 1 - r + d.pad, d.stride));
      for (std::int64_t oh = oh_lo; oh < oh_hi; ++oh) {
        Real* gin_row = gin_plane + (oh * d.stride + r - d.pad) * d.w;
        const Real* gout_row = gimg + oh * d.wo;
        for (std::int64_t c = 0; c < d.kw; ++c) {
          const Real wv = wk[r * d.kw + c];
          const std::int64_t ow_lo = first_ge(d.pad - c, d.stride);
          const std::int64_t ow_hi = std::min<std::int64_t>(d.wo, last_le(d.w - 1 - c + d.pad, d.stride));
          if (d.stride == 1) {
            axpy(gin_row + ow_lo + c - d.pad, wv, gout_row + ow_lo, ow_hi - ow_lo);
          } else {
            for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow)
              gin_row[ow * d.stride + c - d.pad] += wv * gout_row[ow];
          }
        }
      }
    }
  }
}

template <class Real>
[[gnu::noinline]] void conv_pair_gw(const Real* gout, const Real* in, Real* gw_pair,
                                    std::int64_t co, std::int64_t ci, const ConvDims& d) {
  for (std::int64_t r = 0; r < d.kh; ++r) {
    const std::int64_t oh_lo = first_ge(d.pad - r, d.stride);
    const std::int64_t oh_hi = std::min<std::int64_t>(d.ho, last_le(d.h - 1 - r + d.pad, d.stride));
    for (std::int64_t c = 0; c < d.kw; ++c) {
      const std::int64_t ow_lo = first_ge(d.pad - c, d.stride);
      const std::int64_t ow_hi = std::min<std::int64_t>(d.wo, last_le(d.w - 1 - c + d.pad, d.stride));
      Real acc = Real(0);
      for (std::int64_t b = 0; b < d.batch; ++b) {
        const Real* gimg = gout + (b * d.cout + co) * d.ho * d.wo;
        const Real* img = in + (b * d.cin + ci) * d.h * d.w;
        for (std::int64_t oh = oh_lo; oh < oh_hi; ++oh) {
          const Real* gout_row = gimg + oh * d.wo;
          const Real* in_row = img + (oh * d.stride + r - d.pad) * d.w;
          if (d.stride == 1) {
            acc += dot(gout_row + ow_lo, in_row + ow_lo + c - d.pad, ow_hi - ow_lo);
          } else {
            for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow)
              acc += gout_row[ow] * in_row[ow * d.stride + c - d.pad];
          }
        }
      }
      gw_pair[r * d.kw + c] += acc;
    }
  }
}

template <class Real>
[[gnu::noinline]] void maxpool_plane_fwd(const Real* in_plane, Real* out_plane,
                                         std::int64_t* arg_plane, const PoolDims& d) {
  for (std::int64_t oh = 0; oh < d.ho; ++oh) {
    for (std::int64_t ow = 0; ow < d.wo; ++ow) {
      const std::int64_t h0 = oh * d.stride;
      const std::int64_t w0 = ow * d.stride;
      const std::int64_t h1 = std::min<std::int64_t>(h0 + d.kernel, d.h);
      const std::int64_t w1 = std::min<std::int64_t>(w0 + d.kernel, d.w);
      Real best = in_plane[h0 * d.w + w0];
      std::int64_t best_idx = h0 * d.w + w0;
      for (std::int64_t ih = h0; ih < h1; ++ih) {
        for (std::int64_t iw = w0; iw < w1; ++iw) {
          const Real v = in_plane[ih * d.w + iw];
          if (v > best) {  // first max wins on ties
            best = v;
            best_idx = ih * d.w + iw;
          }
        }
      }
      out_plane[oh * d.wo + ow] = best;
      arg_plane[oh * d.wo + ow] = best_idx;
    }
  }
}

template <class Real>
[[gnu::noinline]] void maxpool_plane_bwd(const Real* gout_plane, const std::int64_t* arg_plane,
                                         Real* gin_plane, const PoolDims& d) {
  for (std::int64_t i = 0; i < d.ho * d.wo; ++i) gin_plane[arg_plane[i]] += gout_plane[i];
}

template <class Real>
[[gnu::noinline]] void softmax_row(const Real* x, Real* y, std::int64_t n) {
  Real m = x[0];
  for (std::int64_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  Real sum = Real(0);
  for (std::int64_t i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - m);
    sum += y[i];
  }
  const Real inv = Real(1) / sum;
  for (std::int64_t i = 0; i < n; ++i) y[i] *= inv;
}

template <class Real>
[[gnu::noinline]] void log_softmax_row(const Real* x, Real* y, std::int64_t n) {
  Real m = x[0];
  for (std::int64_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  Real sum = Real(0);
  for (std::int64_t i = 0; i < n; ++i) sum += std::exp(x[i] - m);
  const Real lse = m + std::log(sum);
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] - lse;
}

template <class Real>
[[gnu::noinline]] void softmax_row_bwd(const Real* y, const Real* gy, Real* gx, std::int64_t n) {
  const Real s = dot(y, gy, n);
  for (std::int64_t i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - s);
}

template <class Real>
[[gnu::noinline]] void log_softmax_row_bwd(const Real* logy, const Real* gy, Real* gx,
                                           std::int64_t n) {
  Real s = Real(0);
  for (std::int64_t i = 0; i < n; ++i) s += gy[i];
  for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] - std::exp(logy[i]) * s;
}

template <class Real>
[[gnu::noinline]] Real plane_mean(const Real* p, std::int64_t hw) {
  Real acc = Real(0);
  for (std::int64_t i = 0; i < hw; ++i) acc += p[i];
  return acc / static_cast<Real>(hw);
}

}  // namespace

// ---------------------------------------------------------------------------
// serial reference
// ---------------------------------------------------------------------------

namespace serial {

template <class Real>
void matmul(const Real* a, const Real* b, Real* out, std::int64_t m, std::int64_t k,
            std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) matmul_row(a + i * k, b, out + i * n, k, n);
}

template <class Real>
void matmul_grad_a(const Real* gout, const Real* b, Real* ga, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) matmul_row_ga(gout + i * n, b, ga + i * k, k, n);
}

template <class Real>
void matmul_grad_b(const Real* gout, const Real* a, Real* gb, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
  for (std::int64_t j = 0; j < k; ++j) matmul_row_gb(a, gout, gb + j * n, m, j, k, n);
}

template <class Real>
void conv2d_fwd(const Real* in, const Real* w, const Real* bias, Real* out, const ConvDims& d) {
  for (std::int64_t b = 0; b < d.batch; ++b)
    for (std::int64_t co = 0; co < d.cout; ++co)
      conv_plane_fwd(in + b * d.cin * d.h * d.w, w + co * d.cin * d.kh * d.kw,
                     bias ? bias[co] : Real(0), out + (b * d.cout + co) * d.ho * d.wo, d);
}

template <class Real>
void conv2d_grad_input(const Real* gout, const Real* w, Real* gin, const ConvDims& d) {
  for (std::int64_t b = 0; b < d.batch; ++b)
    for (std::int64_t ci = 0; ci < d.cin; ++ci)
      conv_plane_gin(gout + b * d.cout * d.ho * d.wo, w + ci * d.kh * d.kw,
                     d.cin * d.kh * d.kw, gin + (b * d.cin + ci) * d.h * d.w, d);
}

template <class Real>
void conv2d_grad_weight(const Real* gout, const Real* in, Real* gw, const ConvDims& d) {
  for (std::int64_t co = 0; co < d.cout; ++co)
    for (std::int64_t ci = 0; ci < d.cin; ++ci)
      conv_pair_gw(gout, in, gw + (co * d.cin + ci) * d.kh * d.kw, co, ci, d);
}

template <class Real>
void conv2d_grad_bias(const Real* gout, Real* gb, const ConvDims& d) {
  for (std::int64_t co = 0; co < d.cout; ++co) {
    Real acc = Real(0);
    for (std::int64_t b = 0; b < d.batch; ++b)
      for (std::int64_t i = 0; i < d.ho * d.wo; ++i)
        acc += gout[(b * d.cout + co) * d.ho * d.wo + i];
    gb[co] += acc;
  }
}

template <class Real>
void maxpool_fwd(const Real* in, Real* out, std::int64_t* argmax, const PoolDims& d) {
  for (std::int64_t p = 0; p < d.batch * d.c; ++p)
    maxpool_plane_fwd(in + p * d.h * d.w, out + p * d.ho * d.wo, argmax + p * d.ho * d.wo, d);
}

template <class Real>
void maxpool_bwd(const Real* gout, const std::int64_t* argmax, Real* gin, const PoolDims& d) {
  for (std::int64_t p = 0; p < d.batch * d.c; ++p)
    maxpool_plane_bwd(gout + p * d.ho * d.wo, argmax + p * d.ho * d.wo, gin + p * d.h * d.w, d);
}

template <class Real>
void softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r) softmax_row(in + r * cols, out + r * cols, cols);
}

template <class Real>
void log_softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r) log_softmax_row(in + r * cols, out + r * cols, cols);
}

template <class Real>
void softmax_rows_bwd(const Real* y, const Real* gy, Real* gx, std::int64_t rows,
                      std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r)
    softmax_row_bwd(y + r * cols, gy + r * cols, gx + r * cols, cols);
}

template <class Real>
void log_softmax_rows_bwd(const Real* logy, const Real* gy, Real* gx, std::int64_t rows,
                          std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r)
    log_softmax_row_bwd(logy + r * cols, gy + r * cols, gx + r * cols, cols);
}

template <class Real>
void global_avg_pool(const Real* in, Real* out, std::int64_t planes, std::int64_t hw) {
  for (std::int64_t p = 0; p < planes; ++p) out[p] = plane_mean(in + p * hw, hw);
}

template <class Real>
void global_avg_pool_bwd(const Real* gout, Real* gin, std::int64_t planes, std::int64_t hw) {
  for (std::int64_t p = 0; p < planes; ++p) {
    const Real g = gout[p] / static_cast<Real>(hw);
    for (std::int64_t i = 0; i < hw; ++i) gin[p * hw + i] += g;
  }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP
// ---------------------------------------------------------------------------

namespace par {

template <class Real>
void matmul(const Real* a, const Real* b, Real* out, std::int64_t m, std::int64_t k,
            std::int64_t n) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < m; ++i) matmul_row(a + i * k, b, out + i * n, k, n);
}

template <class Real>
void matmul_grad_a(const Real* gout, const Real* b, Real* ga, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < m; ++i) matmul_row_ga(gout + i * n, b, ga + i * k, k, n);
}

template <class Real>
void matmul_grad_b(const Real* gout, const Real* a, Real* gb, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t j = 0; j < k; ++j) matmul_row_gb(a, gout, gb + j * n, m, j, k, n);
}

template <class Real>
void conv2d_fwd(const Real* in, const Real* w, const Real* bias, Real* out, const ConvDims& d) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt) collapse(2)
  for (std::int64_t b = 0; b < d.batch; ++b)
    for (std::int64_t co = 0; co < d.cout; ++co)
      conv_plane_fwd(in + b * d.cin * d.h * d.w, w + co * d.cin * d.kh * d.kw,
                     bias ? bias[co] : Real(0), out + (b * d.cout + co) * d.ho * d.wo, d);
}

template <class Real>
void conv2d_grad_input(const Real* gout, const Real* w, Real* gin, const ConvDims& d) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt) collapse(2)
  for (std::int64_t b = 0; b < d.batch; ++b)
    for (std::int64_t ci = 0; ci < d.cin; ++ci)
      conv_plane_gin(gout + b * d.cout * d.ho * d.wo, w + ci * d.kh * d.kw,
                     d.cin * d.kh * d.kw, gin + (b * d.cin + ci) * d.h * d.w, d);
}

template <class Real>
void conv2d_grad_weight(const Real* gout, const Real* in, Real* gw, const ConvDims& d) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt) collapse(2)
  for (std::int64_t co = 0; co < d.cout; ++co)
    for (std::int64_t ci = 0; ci < d.cin; ++ci)
      conv_pair_gw(gout, in, gw + (co * d.cin + ci) * d.kh * d.kw, co, ci, d);
}

template <class Real>
void conv2d_grad_bias(const Real* gout, Real* gb, const ConvDims& d) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t co = 0; co < d.cout; ++co) {
    Real acc = Real(0);
    for (std::int64_t b = 0; b < d.batch; ++b)
      for (std::int64_t i = 0; i < d.ho * d.wo; ++i)
        acc += gout[(b * d.cout + co) * d.ho * d.wo + i];
    gb[co] += acc;
  }
}

template <class Real>
void maxpool_fwd(const Real* in, Real* out, std::int64_t* argmax, const PoolDims& d) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t p = 0; p < d.batch * d.c; ++p)
    maxpool_plane_fwd(in + p * d.h * d.w, out + p * d.ho * d.wo, argmax + p * d.ho * d.wo, d);
}

template <class Real>
void maxpool_bwd(const Real* gout, const std::int64_t* argmax, Real* gin, const PoolDims& d) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t p = 0; p < d.batch * d.c; ++p)
    maxpool_plane_bwd(gout + p * d.ho * d.wo, argmax + p * d.ho * d.wo, gin + p * d.h * d.w, d);
}

template <class Real>
void softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t r = 0; r < rows; ++r) softmax_row(in + r * cols, out + r * cols, cols);
}

template <class Real>
void log_softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t r = 0; r < rows; ++r) log_softmax_row(in + r * cols, out + r * cols, cols);
}

template <class Real>
void softmax_rows_bwd(const Real* y, const Real* gy, Real* gx, std::int64_t rows,
                      std::int64_t cols) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t r = 0; r < rows; ++r)
    softmax_row_bwd(y + r * cols, gy + r * cols, gx + r * cols, cols);
}

template <class Real>
void log_softmax_rows_bwd(const Real* logy, const Real* gy, Real* gx, std::int64_t rows,
                          std::int64_t cols) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t r = 0; r < rows; ++r)
    log_softmax_row_bwd(logy + r * cols, gy + r * cols, gx + r * cols, cols);
}

template <class Real>
void global_avg_pool(const Real* in, Real* out, std::int64_t planes, std::int64_t hw) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t p = 0; p < planes; ++p) out[p] = plane_mean(in + p * hw, hw);
}

template <class Real>
void global_avg_pool_bwd(const Real* gout, Real* gin, std::int64_t planes, std::int64_t hw) {
  const int nt = kernel_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t p = 0; p < planes; ++p) {
    const Real g = gout[p] / static_cast<Real>(hw);
    for (std::int64_t i = 0; i < hw; ++i) gin[p * hw + i] += g;
  }
}

}  // namespace par

// ---------------------------------------------------------------------------
// dispatch + instantiations
// ---------------------------------------------------------------------------

#define TTA_DISPATCH(fn, ...)            \
  do {                                   \
    if (use_parallel())                  \
      par::fn(__VA_ARGS__);              \
    else                                 \
      serial::fn(__VA_ARGS__);           \
  } while (0)

template <class Real>
void matmul(const Real* a, const Real* b, Real* out, std::int64_t m, std::int64_t k,
            std::int64_t n) {
  TTA_DISPATCH(matmul, a, b, out, m, k, n);
}
template <class Real>
void matmul_grad_a(const Real* gout, const Real* b, Real* ga, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
  TTA_DISPATCH(matmul_grad_a, gout, b, ga, m, k, n);
}
template <class Real>
void matmul_grad_b(const Real* gout, const Real* a, Real* gb, std::int64_t m, std::int64_t k,
                   std::int64_t n) {
  TTA_DISPATCH(matmul_grad_b, gout, a, gb, m, k, n);
}
template <class Real>
void conv2d_fwd(const Real* in, const Real* w, const Real* bias, Real* out, const ConvDims& d) {
  TTA_DISPATCH(conv2d_fwd, in, w, bias, out, d);
}
template <class Real>
void conv2d_grad_input(const Real* gout, const Real* w, Real* gin, const ConvDims& d) {
  TTA_DISPATCH(conv2d_grad_input, gout, w, gin, d);
}
template <class Real>
void conv2d_grad_weight(const Real* gout, const Real* in, Real* gw, const ConvDims& d) {
  TTA_DISPATCH(conv2d_grad_weight, gout, in, gw, d);
}
template <class Real>
void conv2d_grad_bias(const Real* gout, Real* gb, const ConvDims& d) {
  TTA_DISPATCH(conv2d_grad_bias, gout, gb, d);
}
template <class Real>
void maxpool_fwd(const Real* in, Real* out, std::int64_t* argmax, const PoolDims& d) {
  TTA_DISPATCH(maxpool_fwd, in, out, argmax, d);
}
template <class Real>
void maxpool_bwd(const Real* gout, const std::int64_t* argmax, Real* gin, const PoolDims& d) {
  TTA_DISPATCH(maxpool_bwd, gout, argmax, gin, d);
}
template <class Real>
void softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols) {
  TTA_DISPATCH(softmax_rows, in, out, rows, cols);
}
template <class Real>
void log_softmax_rows(const Real* in, Real* out, std::int64_t rows, std::int64_t cols) {
  TTA_DISPATCH(log_softmax_rows, in, out, rows, cols);
}
template <class Real>
void softmax_rows_bwd(const Real* y, const Real* gy, Real* gx, std::int64_t rows,
                      std::int64_t cols) {
  TTA_DISPATCH(softmax_rows_bwd, y, gy, gx, rows, cols);
}
template <class Real>
void log_softmax_rows_bwd(const Real* logy, const Real* gy, Real* gx, std::int64_t rows,
                          std::int64_t cols) {
  TTA_DISPATCH(log_softmax_rows_bwd, logy, gy, gx, rows, cols);
}
template <class Real>
void global_avg_pool(const Real* in, Real* out, std::int64_t planes, std::int64_t hw) {
  TTA_DISPATCH(global_avg_pool, in, out, planes, hw);
}
template <class Real>
void global_avg_pool_bwd(const Real* gout, Real* gin, std::int64_t planes, std::int64_t hw) {
  TTA_DISPATCH(global_avg_pool_bwd, gout, gin, planes, hw);
}

#undef TTA_DISPATCH

#define TTA_INSTANTIATE(Real)                                                                     \
  template void serial::matmul<Real>(const Real*, const Real*, Real*, std::int64_t, std::int64_t, \
                                     std::int64_t);                                               \
  template void serial::matmul_grad_a<Real>(const Real*, const Real*, Real*, std::int64_t,        \
                                            std::int64_t, std::int64_t);                          \
  template void serial::matmul_grad_b<Real>(const Real*, const Real*, Real*, std::int64_t,        \
                                            std::int64_t, std::int64_t);                          \
  template void serial::conv2d_fwd<Real>(const Real*, const Real*, const Real*, Real*,            \
                                         const ConvDims&);                                        \
  template void serial::conv2d_grad_input<Real>(const Real*, const Real*, Real*,                  \
                                                const ConvDims&);                                 \
  template void serial::conv2d_grad_weight<Real>(const Real*, const Real*, Real*,                 \
                                                 const ConvDims&);                                \
  template void serial::conv2d_grad_bias<Real>(const Real*, Real*, const ConvDims&);              \
  template void serial::maxpool_fwd<Real>(const Real*, Real*, std::int64_t*, const PoolDims&);    \
  template void serial::maxpool_bwd<Real>(const Real*, const std::int64_t*, Real*,                \
                                          const PoolDims&);                                       \
  template void serial::softmax_rows<Real>(const Real*, Real*, std::int64_t, std::int64_t);       \
  template void serial::log_softmax_rows<Real>(const Real*, Real*, std::int64_t, std::int64_t);   \
  template void serial::softmax_rows_bwd<Real>(const Real*, const Real*, Real*, std::int64_t,     \
                                               std::int64_t);                                     \
  template void serial::log_softmax_rows_bwd<Real>(const Real*, const Real*, Real*, std::int64_t, \
                                                   std::int64_t);                                 \
  template void serial::global_avg_pool<Real>(const Real*, Real*, std::int64_t, std::int64_t);    \
  template void serial::global_avg_pool_bwd<Real>(const Real*, Real*, std::int64_t,               \
                                                  std::int64_t);                                  \
  template void par::matmul<Real>(const Real*, const Real*, Real*, std::int64_t, std::int64_t,    \
                                  std::int64_t);                                                  \
  template void par::matmul_grad_a<Real>(const Real*, const Real*, Real*, std::int64_t,           \
                                         std::int64_t, std::int64_t);                             \
  template void par::matmul_grad_b<Real>(const Real*, const Real*, Real*, std::int64_t,           \
                                         std::int64_t, std::int64_t);                             \
  template void par::conv2d_fwd<Real>(const Real*, const Real*, const Real*, Real*,               \
                                      const ConvDims&);                                           \
  template void par::conv2d_grad_input<Real>(const Real*, const Real*, Real*, const ConvDims&);   \
  template void par::conv2d_grad_weight<Real>(const Real*, const Real*, Real*, const ConvDims&);  \
  template void par::conv2d_grad_bias<Real>(const Real*, Real*, const ConvDims&);                 \
  template void par::maxpool_fwd<Real>(const Real*, Real*, std::int64_t*, const PoolDims&);       \
  template void par::maxpool_bwd<Real>(const Real*, const std::int64_t*, Real*, const PoolDims&); \
  template void par::softmax_rows<Real>(const Real*, Real*, std::int64_t, std::int64_t);          \
  template void par::log_softmax_rows<Real>(const Real*, Real*, std::int64_t, std::int64_t);      \
  template void par::softmax_rows_bwd<Real>(const Real*, const Real*, Real*, std::int64_t,        \
                                            std::int64_t);                                        \
  template void par::log_softmax_rows_bwd<Real>(const Real*, const Real*, Real*, std::int64_t,    \
                                                std::int64_t);                                    \
  template void par::global_avg_pool<Real>(const Real*, Real*, std::int64_t, std::int64_t);       \
  template void par::global_avg_pool_bwd<Real>(const Real*, Real*, std::int64_t, std::int64_t);   \
  template void matmul<Real>(const Real*, const Real*, Real*, std::int64_t, std::int64_t,         \
                             std::int64_t);                                                       \
  template void matmul_grad_a<Real>(const Real*, const Real*, Real*, std::int64_t, std::int64_t,  \
                                    std::int64_t);                                                \
  template void matmul_grad_b<Real>(const Real*, const Real*, Real*, std::int64_t, std::int64_t,  \
                                    std::int64_t);                                                \
  template void conv2d_fwd<Real>(const Real*, const Real*, const Real*, Real*, const ConvDims&);  \
  template void conv2d_grad_input<Real>(const Real*, const Real*, Real*, const ConvDims&);        \
  template void conv2d_grad_weight<Real>(const Real*, const Real*, Real*, const ConvDims&);       \
  template void conv2d_grad_bias<Real>(const Real*, Real*, const ConvDims&);                      \
  template void maxpool_fwd<Real>(const Real*, Real*, std::int64_t*, const PoolDims&);            \
  template void maxpool_bwd<Real>(const Real*, const std::int64_t*, Real*, const PoolDims&);      \
  template void softmax_rows<Real>(const Real*, Real*, std::int64_t, std::int64_t);               \
  template void log_softmax_rows<Real>(const Real*, Real*, std::int64_t, std::int64_t);           \
  template void softmax_rows_bwd<Real>(const Real*, const Real*, Real*, std::int64_t,             \
                                       std::int64_t);                                             \
  template void log_softmax_rows_bwd<Real>(const Real*, const Real*, Real*, std::int64_t,         \
                                           std::int64_t);                                         \
  template void global_avg_pool<Real>(const Real*, Real*, std::int64_t, std::int64_t);            \
  template void global_avg_pool_bwd<Real>(const Real*, Real*, std::int64_t, std::int64_t);

TTA_INSTANTIATE(float)
TTA_INSTANTIATE(double)

#undef TTA_INSTANTIATE

}  // namespace tta::kern

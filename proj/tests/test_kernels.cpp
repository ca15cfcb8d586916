#include <cstring>
#include <vector>

#include "doctest.h"
#include "tta/kernels.hpp"
#include "tta/rng.hpp"
#include "tta/tensor.hpp"

namespace kern = tta::kern;

namespace {

template <class Real>
std::vector<Real> random_vec(std::size_t n, std::uint64_t seed) {
  tta::Rng rng(seed);
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-1.0, 1.0));
  return v;
}

template <class Real>
bool bitwise_equal(const std::vector<Real>& a, const std::vector<Real>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(Real)) == 0;
}

struct ThreadGuard {
  explicit ThreadGuard(int n) { tta::set_kernel_threads(n); }
  ~ThreadGuard() { tta::set_kernel_threads(0); }
};

}  // namespace

TEST_CASE_TEMPLATE("matmul: omp matches serial bitwise", Real, float, double) {
  for (int nt : {2, 3}) {
    ThreadGuard guard(nt);
    const std::int64_t m = 13, k = 37, n = 19;
    auto a = random_vec<Real>(m * k, 1);
    auto b = random_vec<Real>(k * n, 2);
    auto gout = random_vec<Real>(m * n, 3);

    std::vector<Real> o1(m * n), o2(m * n);
    kern::serial::matmul(a.data(), b.data(), o1.data(), m, k, n);
    kern::par::matmul(a.data(), b.data(), o2.data(), m, k, n);
    CHECK(bitwise_equal(o1, o2));

    std::vector<Real> ga1(m * k, Real(0)), ga2(m * k, Real(0));
    kern::serial::matmul_grad_a(gout.data(), b.data(), ga1.data(), m, k, n);
    kern::par::matmul_grad_a(gout.data(), b.data(), ga2.data(), m, k, n);
    CHECK(bitwise_equal(ga1, ga2));

    std::vector<Real> gb1(k * n, Real(0)), gb2(k * n, Real(0));
    kern::serial::matmul_grad_b(gout.data(), a.data(), gb1.data(), m, k, n);
    kern::par::matmul_grad_b(gout.data(), a.data(), gb2.data(), m, k, n);
    CHECK(bitwise_equal(gb1, gb2));
  }
}

TEST_CASE_TEMPLATE("conv2d: omp matches serial bitwise", Real, float, double) {
  struct Cfg {
    std::int64_t b, cin, h, w, cout, k;
    int stride, pad;
  };
  const Cfg cfgs[] = {
      {2, 3, 9, 11, 4, 3, 1, 1},
      {3, 2, 8, 8, 5, 3, 2, 1},
      {1, 4, 7, 7, 2, 1, 1, 0},
      {2, 1, 12, 6, 3, 5, 2, 2},
  };
  int seed = 10;
  for (const auto& c : cfgs) {
    ThreadGuard guard(2);
    kern::ConvDims d;
    d.batch = c.b; d.cin = c.cin; d.h = c.h; d.w = c.w;
    d.cout = c.cout; d.kh = c.k; d.kw = c.k;
    d.stride = c.stride; d.pad = c.pad;
    d.ho = (d.h + 2 * d.pad - d.kh) / d.stride + 1;
    d.wo = (d.w + 2 * d.pad - d.kw) / d.stride + 1;

    auto in = random_vec<Real>(d.batch * d.cin * d.h * d.w, seed++);
    auto w = random_vec<Real>(d.cout * d.cin * d.kh * d.kw, seed++);
    auto bias = random_vec<Real>(d.cout, seed++);
    auto gout = random_vec<Real>(d.batch * d.cout * d.ho * d.wo, seed++);

    std::vector<Real> o1(gout.size()), o2(gout.size());
    kern::serial::conv2d_fwd(in.data(), w.data(), bias.data(), o1.data(), d);
    kern::par::conv2d_fwd(in.data(), w.data(), bias.data(), o2.data(), d);
    CHECK(bitwise_equal(o1, o2));

    std::vector<Real> gi1(in.size(), Real(0)), gi2(in.size(), Real(0));
    kern::serial::conv2d_grad_input(gout.data(), w.data(), gi1.data(), d);
    kern::par::conv2d_grad_input(gout.data(), w.data(), gi2.data(), d);
    CHECK(bitwise_equal(gi1, gi2));

    std::vector<Real> gw1(w.size(), Real(0)), gw2(w.size(), Real(0));
    kern::serial::conv2d_grad_weight(gout.data(), in.data(), gw1.data(), d);
    kern::par::conv2d_grad_weight(gout.data(), in.data(), gw2.data(), d);
    CHECK(bitwise_equal(gw1, gw2));

    std::vector<Real> gb1(d.cout, Real(0)), gb2(d.cout, Real(0));
    kern::serial::conv2d_grad_bias(gout.data(), gb1.data(), d);
    kern::par::conv2d_grad_bias(gout.data(), gb2.data(), d);
    CHECK(bitwise_equal(gb1, gb2));
  }
}

TEST_CASE_TEMPLATE("pool and softmax kernels: omp matches serial bitwise", Real, float, double) {
  ThreadGuard guard(2);

  kern::PoolDims d;
  d.batch = 3; d.c = 4; d.h = 8; d.w = 8; d.kernel = 2; d.stride = 2;
  d.ho = (d.h - d.kernel) / d.stride + 1;
  d.wo = (d.w - d.kernel) / d.stride + 1;
  auto in = random_vec<Real>(d.batch * d.c * d.h * d.w, 101);
  auto gout = random_vec<Real>(d.batch * d.c * d.ho * d.wo, 102);

  std::vector<Real> o1(gout.size()), o2(gout.size());
  std::vector<std::int64_t> a1(gout.size()), a2(gout.size());
  kern::serial::maxpool_fwd(in.data(), o1.data(), a1.data(), d);
  kern::par::maxpool_fwd(in.data(), o2.data(), a2.data(), d);
  CHECK(bitwise_equal(o1, o2));
  CHECK(a1 == a2);

  std::vector<Real> gi1(in.size(), Real(0)), gi2(in.size(), Real(0));
  kern::serial::maxpool_bwd(gout.data(), a1.data(), gi1.data(), d);
  kern::par::maxpool_bwd(gout.data(), a2.data(), gi2.data(), d);
  CHECK(bitwise_equal(gi1, gi2));

  const std::int64_t rows = 37, cols = 11;
  auto x = random_vec<Real>(rows * cols, 103);
  auto gy = random_vec<Real>(rows * cols, 104);
  std::vector<Real> s1(x.size()), s2(x.size()), l1(x.size()), l2(x.size());
  kern::serial::softmax_rows(x.data(), s1.data(), rows, cols);
  kern::par::softmax_rows(x.data(), s2.data(), rows, cols);
  kern::serial::log_softmax_rows(x.data(), l1.data(), rows, cols);
  kern::par::log_softmax_rows(x.data(), l2.data(), rows, cols);
  CHECK(bitwise_equal(s1, s2));
  CHECK(bitwise_equal(l1, l2));

  std::vector<Real> gx1(x.size(), Real(0)), gx2(x.size(), Real(0));
  kern::serial::softmax_rows_bwd(s1.data(), gy.data(), gx1.data(), rows, cols);
  kern::par::softmax_rows_bwd(s2.data(), gy.data(), gx2.data(), rows, cols);
  CHECK(bitwise_equal(gx1, gx2));

  std::fill(gx1.begin(), gx1.end(), Real(0));
  std::fill(gx2.begin(), gx2.end(), Real(0));
  kern::serial::log_softmax_rows_bwd(l1.data(), gy.data(), gx1.data(), rows, cols);
  kern::par::log_softmax_rows_bwd(l2.data(), gy.data(), gx2.data(), rows, cols);
  CHECK(bitwise_equal(gx1, gx2));

  const std::int64_t planes = 24, hw = 49;
  auto gin = random_vec<Real>(planes * hw, 105);
  auto gp = random_vec<Real>(planes, 106);
  std::vector<Real> p1(planes), p2(planes);
  kern::serial::global_avg_pool(gin.data(), p1.data(), planes, hw);
  kern::par::global_avg_pool(gin.data(), p2.data(), planes, hw);
  CHECK(bitwise_equal(p1, p2));
  std::vector<Real> b1(planes * hw, Real(0)), b2(planes * hw, Real(0));
  kern::serial::global_avg_pool_bwd(gp.data(), b1.data(), planes, hw);
  kern::par::global_avg_pool_bwd(gp.data(), b2.data(), planes, hw);
  CHECK(bitwise_equal(b1, b2));
}

TEST_CASE("results do not depend on the thread count") {
  const std::int64_t m = 17, k = 23, n = 9;
  auto a = random_vec<float>(m * k, 201);
  auto b = random_vec<float>(k * n, 202);
  std::vector<float> ref(m * n);
  kern::serial::matmul(a.data(), b.data(), ref.data(), m, k, n);
  for (int nt : {1, 2, 3, 4, 7}) {
    ThreadGuard guard(nt);
    std::vector<float> out(m * n);
    kern::par::matmul(a.data(), b.data(), out.data(), m, k, n);
    CHECK(bitwise_equal(ref, out));
  }
}

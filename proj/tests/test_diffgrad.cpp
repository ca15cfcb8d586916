#include <cmath>
#include <vector>

#include "doctest.h"
#include "tta/adam.hpp"
#include "tta/gradcheck.hpp"
#include "tta/ops.hpp"
#include "tta/rng.hpp"
#include "tta/tensor.hpp"

using tta::OpAttrs;
using tta::Prim;
using tta::Shape;
using tta::Tape;
using tta::TapeScope;
namespace ops = tta::ops;

using D = tta::Tensor<double>;
using F = tta::Tensor<float>;

namespace {

template <class Real>
tta::Tensor<Real> random_tensor(Shape shape, std::uint64_t seed, Real lo = Real(-1),
                                Real hi = Real(1)) {
  tta::Rng rng(seed);
  return tta::Tensor<Real>::uniform(std::move(shape), rng, lo, hi);
}

// scalar-valued wrapper: weighted sum of all op outputs so every output
// coordinate contributes to the checked gradient
D weighted(const D& y, std::uint64_t seed) {
  auto w = random_tensor<double>(y.shape(), seed);
  return ops::sum(ops::mul(y, w));
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  auto x = D::from({3}, {0.0, 0.0, 0.0});
  auto y = ops::softmax(x);
  for (double v : y.value()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("conv2d with a 1x1 identity kernel is the identity") {
  auto img = random_tensor<double>({2, 1, 5, 5}, 7);
  auto w = D::from({1, 1, 1, 1}, {1.0});
  auto y = ops::conv2d(img, w, D{}, 1, 0);
  REQUIRE(y.shape() == img.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y.value()[i] == img.value()[i]);
}

TEST_CASE("matmul hand-computed 2x2 by 2x1") {
  auto a = D::from({2, 2}, {1, 2, 3, 4});
  auto b = D::from({2, 1}, {5, 6});
  auto y = ops::matmul(a, b);
  REQUIRE(y.shape() == Shape{2, 1});
  CHECK(y.value()[0] == 17.0);
  CHECK(y.value()[1] == 39.0);
}

TEST_CASE("backward of sum of squares") {
  auto x = D::from({3}, {1, 2, 3});
  x.set_requires_grad(true);
  Tape<double> tape;
  {
    TapeScope<double> scope(tape);
    auto loss = ops::sum(ops::square(x));
    tape.backward(loss);
  }
  REQUIRE(x.has_grad());
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
  CHECK(x.grad()[2] == doctest::Approx(6.0));
}

TEST_CASE("KL(softmax(s) || p) has zero gradient at softmax(s)=p") {
  const std::vector<double> p{0.2, 0.5, 0.3};
  std::vector<double> logits(3);
  for (int i = 0; i < 3; ++i) logits[i] = std::log(p[i]);
  auto s = D::from({3}, logits);
  s.set_requires_grad(true);
  auto logp = D::from({3}, {std::log(p[0]), std::log(p[1]), std::log(p[2])});
  Tape<double> tape;
  {
    TapeScope<double> scope(tape);
    auto q = ops::softmax(s);
    auto kl = ops::sum(ops::mul(q, ops::sub(ops::log_softmax(s), logp)));
    tape.backward(kl);
  }
  for (double g : s.grad()) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("tape refuses a second backward until reset") {
  auto x = D::from({2}, {1, 2});
  x.set_requires_grad(true);
  Tape<double> tape;
  D loss;
  {
    TapeScope<double> scope(tape);
    loss = ops::sum(ops::square(x));
  }
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), std::runtime_error);
  tape.reset();
  CHECK(tape.size() == 0);
}

TEST_CASE("backward requires a scalar loss") {
  auto x = D::from({2}, {1, 2});
  x.set_requires_grad(true);
  Tape<double> tape;
  D y;
  {
    TapeScope<double> scope(tape);
    y = ops::square(x);
  }
  CHECK_THROWS_AS(tape.backward(y), std::runtime_error);
}

TEST_CASE("non-finite forward values fail fast with the op name") {
  auto x = D::from({2}, {-1.0, 0.5});
  CHECK_THROWS_WITH_AS(ops::log(x), doctest::Contains("log"), std::runtime_error);
}

TEST_CASE("shape mismatch is rejected") {
  auto a = D::from({2, 2}, {1, 2, 3, 4});
  auto b = D::from({3}, {1, 2, 3});
  CHECK_THROWS_AS(ops::matmul(a, b), std::runtime_error);
  CHECK_THROWS_AS(ops::add(a, b), std::runtime_error);
}

TEST_CASE("unknown primitive is rejected") {
  auto x = D::from({1}, {1.0});
  CHECK_THROWS_AS(tta::apply_primitive(static_cast<Prim>(999), std::vector<D>{x}),
                  std::runtime_error);
}

TEST_CASE("no tape scope means pure inference") {
  auto x = D::from({2}, {1, 2});
  x.set_requires_grad(true);
  auto y = ops::square(x);
  CHECK_FALSE(y.requires_grad());
}

// ---------------------------------------------------------------------------
// finite-difference oracle over the whole primitive set (64-bit)
// ---------------------------------------------------------------------------

TEST_CASE("finite differences: elementwise binary ops with broadcasting") {
  const double eps = 1e-5, tol = 1e-6;
  auto a = random_tensor<double>({3, 4}, 11);
  auto suffix = random_tensor<double>({4}, 12);
  auto scalar = D::scalar(0.7);

  for (auto prim : {Prim::kAdd, Prim::kSub, Prim::kMul}) {
    auto apply = [&](const D& x, const D& y) {
      return tta::apply_primitive(prim, std::vector<D>{x, y});
    };
    CHECK(tta::grad_check<double>(
              [&](const D& x) { return weighted(apply(x, suffix), 21); }, a, eps) < tol);
    CHECK(tta::grad_check<double>(
              [&](const D& x) { return weighted(apply(a, x), 22); }, suffix, eps) < tol);
    CHECK(tta::grad_check<double>(
              [&](const D& x) { return weighted(apply(a, x), 23); }, scalar, eps) < tol);
    CHECK(tta::grad_check<double>(
              [&](const D& x) { return weighted(apply(x, a.clone(false)), 24); }, a, eps) < tol);
  }
}

TEST_CASE("finite differences: matmul") {
  const double eps = 1e-5, tol = 1e-6;
  auto a = random_tensor<double>({3, 5}, 31);
  auto b = random_tensor<double>({5, 2}, 32);
  CHECK(tta::grad_check<double>(
            [&](const D& x) { return weighted(ops::matmul(x, b), 33); }, a, eps) < tol);
  CHECK(tta::grad_check<double>(
            [&](const D& x) { return weighted(ops::matmul(a, x), 34); }, b, eps) < tol);
}

TEST_CASE("finite differences: conv2d input, weight, bias") {
  const double eps = 1e-5, tol = 1e-6;
  struct Cfg {
    int stride, pad;
  };
  for (auto cfg : {Cfg{1, 1}, Cfg{2, 0}, Cfg{2, 1}}) {
    auto x = random_tensor<double>({2, 3, 6, 7}, 41);
    auto w = random_tensor<double>({4, 3, 3, 3}, 42);
    auto bias = random_tensor<double>({4}, 43);
    auto run = [&](const D& xx, const D& ww, const D& bb) {
      return weighted(ops::conv2d(xx, ww, bb, cfg.stride, cfg.pad), 44);
    };
    CHECK(tta::grad_check<double>([&](const D& t) { return run(t, w, bias); }, x, eps) < tol);
    CHECK(tta::grad_check<double>([&](const D& t) { return run(x, t, bias); }, w, eps) < tol);
    CHECK(tta::grad_check<double>([&](const D& t) { return run(x, w, t); }, bias, eps) < tol);
  }
}

TEST_CASE("finite differences: pooling") {
  const double eps = 1e-6, tol = 1e-6;
  auto x = random_tensor<double>({2, 3, 6, 6}, 51);
  CHECK(tta::grad_check<double>(
            [&](const D& t) { return weighted(ops::maxpool2d(t, 2, 2), 52); }, x, eps) < tol);
  CHECK(tta::grad_check<double>(
            [&](const D& t) { return weighted(ops::global_avg_pool(t), 53); }, x, eps) < tol);
}

TEST_CASE("finite differences: unary and reduction ops") {
  const double eps = 1e-6, tol = 1e-6;
  auto x = random_tensor<double>({3, 4}, 61);
  auto pos = random_tensor<double>({3, 4}, 62, 0.2, 2.0);
  // keep relu inputs away from the kink
  for (auto& v : x.raw())
    if (std::abs(v) < 0.05) v += 0.1;

  CHECK(tta::grad_check<double>([&](const D& t) { return weighted(ops::relu(t), 71); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return weighted(ops::exp(t), 72); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return weighted(ops::log(t), 73); }, pos, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return weighted(ops::square(t), 74); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return ops::sum(t); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return ops::mean(t); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return weighted(ops::sum_last(t), 75); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return weighted(ops::mean_last(t), 76); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return ops::l2_norm_sq(t); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return weighted(ops::softmax(t), 77); }, x, eps) < tol);
  CHECK(tta::grad_check<double>([&](const D& t) { return weighted(ops::log_softmax(t), 78); }, x, eps) < tol);
}

TEST_CASE("finite differences: data movement ops") {
  const double eps = 1e-6, tol = 1e-6;
  auto x = random_tensor<double>({3, 4}, 81);
  auto other = random_tensor<double>({2, 4}, 82);
  // duplicate indices exercise the scatter-add path
  std::vector<std::int64_t> idx{0, 5, 5, 11, 3, 0};
  CHECK(tta::grad_check<double>(
            [&](const D& t) { return weighted(ops::gather(t, idx, {6}), 83); }, x, eps) < tol);
  CHECK(tta::grad_check<double>(
            [&](const D& t) { return weighted(ops::concat(t, other, 0), 84); }, x, eps) < tol);
  CHECK(tta::grad_check<double>(
            [&](const D& t) { return weighted(ops::concat(other, t, 1), 85); },
            random_tensor<double>({2, 3}, 86), eps) < tol);
  CHECK(tta::grad_check<double>(
            [&](const D& t) { return weighted(ops::reshape(t, {4, 3}), 87); }, x, eps) < tol);
  CHECK(tta::grad_check<double>(
            [&](const D& t) { return weighted(ops::sigmoid(t), 88); }, x, eps) < tol);
}

TEST_CASE("finite differences: composite loss matches within 1e-6") {
  // entropy of softmax plus an l2 leg, a stand-in for the real losses
  auto x = random_tensor<double>({4, 5}, 91);
  auto f = [](const D& t) {
    auto q = ops::softmax(t);
    auto h = ops::scale(ops::mean(ops::sum_last(ops::mul(q, ops::log_softmax(t)))), -1.0);
    return ops::add(h, ops::scale(ops::l2_norm_sq(t), 0.01));
  };
  CHECK(tta::grad_check<double>(f, x, 1e-6) < 1e-6);
}

TEST_CASE("grad_check is nearly exact for linear functions") {
  auto x = random_tensor<double>({4, 4}, 101);
  CHECK(tta::grad_check<double>([](const D& t) { return ops::mean(t); }, x, 1e-6) < 1e-10);
}

TEST_CASE("grad_check flags a seeded wrong gradient") {
  // detach() makes backward treat one factor as constant: analytic grad is
  // x instead of 2x, which the finite-difference oracle must catch
  auto x = random_tensor<double>({5}, 111, 0.5, 1.5);
  const double err = tta::grad_check<double>(
      [](const D& t) { return ops::sum(ops::mul(t, t.detach())); }, x, 1e-6);
  CHECK(err > 1e-2);
}

TEST_CASE("32-bit gradients within 1e-3 of finite differences") {
  auto x = random_tensor<float>({3, 4}, 121);
  auto w = random_tensor<float>({4, 2}, 122);
  auto f = [&](const F& t) {
    auto y = ops::softmax(ops::matmul(t, w));
    return ops::mean(ops::sum_last(ops::square(y)));
  };
  CHECK(tta::grad_check<float>(f, x, 1e-2) < 1e-3);
}

// ---------------------------------------------------------------------------
// invariants
// ---------------------------------------------------------------------------

TEST_CASE("softmax rows sum to one and log_softmax agrees with log of softmax") {
  auto x = random_tensor<double>({6, 7}, 131, -4.0, 4.0);
  auto sm = ops::softmax(x);
  auto lsm = ops::log_softmax(x);
  for (std::int64_t r = 0; r < 6; ++r) {
    double s = 0;
    for (std::int64_t c = 0; c < 7; ++c) s += sm.value()[r * 7 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
  for (std::int64_t i = 0; i < x.numel(); ++i)
    CHECK(lsm.value()[i] == doctest::Approx(std::log(sm.value()[i])).epsilon(1e-6));
}

TEST_CASE("forward evaluation is bitwise repeatable") {
  auto x = random_tensor<float>({2, 3, 8, 8}, 141);
  auto w = random_tensor<float>({4, 3, 3, 3}, 142);
  auto b = random_tensor<float>({4}, 143);
  auto y1 = ops::softmax(ops::global_avg_pool(ops::relu(ops::conv2d(x, w, b, 1, 1))));
  auto y2 = ops::softmax(ops::global_avg_pool(ops::relu(ops::conv2d(x, w, b, 1, 1))));
  REQUIRE(y1.numel() == y2.numel());
  for (std::int64_t i = 0; i < y1.numel(); ++i) CHECK(y1.value()[i] == y2.value()[i]);
}

TEST_CASE("backward is deterministic for an identical tape") {
  auto run = [] {
    auto x = random_tensor<double>({4, 4}, 151);
    x.set_requires_grad(true);
    Tape<double> tape;
    TapeScope<double> scope(tape);
    auto loss = ops::mean(ops::square(ops::softmax(x)));
    tape.backward(loss);
    return std::vector<double>(x.grad().begin(), x.grad().end());
  };
  auto g1 = run();
  auto g2 = run();
  CHECK(g1 == g2);
}

// ---------------------------------------------------------------------------
// adam
// ---------------------------------------------------------------------------

TEST_CASE("adam: zero gradient leaves parameter values identical") {
  auto p = D::from({3}, {1.0, -2.0, 0.5}, true);
  tta::Adam<double> opt({p});
  p.zero_grad();
  opt.step();
  CHECK(p.value()[0] == 1.0);
  CHECK(p.value()[1] == -2.0);
  CHECK(p.value()[2] == 0.5);
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam: first step with unit gradient moves by about lr") {
  auto p = D::from({1}, {1.0}, true);
  tta::Adam<double> opt({p}, {.lr = 3e-4});
  p.zero_grad();
  p.grad_mut()[0] = 1.0;
  opt.step();
  CHECK(std::abs((1.0 - p.value()[0]) - 3e-4) < 1e-10);
}

TEST_CASE("adam: identical parameters with identical gradients stay identical") {
  auto a = D::from({2}, {0.3, -0.7}, true);
  auto b = D::from({2}, {0.3, -0.7}, true);
  tta::Adam<double> opt({a, b});
  for (int s = 0; s < 5; ++s) {
    a.zero_grad();
    b.zero_grad();
    for (int i = 0; i < 2; ++i) {
      a.grad_mut()[i] = 0.1 * (s + 1) * (i + 1);
      b.grad_mut()[i] = 0.1 * (s + 1) * (i + 1);
    }
    opt.step();
  }
  CHECK(a.value()[0] == b.value()[0]);
  CHECK(a.value()[1] == b.value()[1]);
}

TEST_CASE("adam: missing gradient is an error") {
  auto p = D::from({2}, {1.0, 2.0}, true);
  tta::Adam<double> opt({p});
  CHECK_THROWS_AS(opt.step(), std::runtime_error);
}

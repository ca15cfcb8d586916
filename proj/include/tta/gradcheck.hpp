#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "tta/ops.hpp"
#include "tta/tensor.hpp"

namespace tta {

// Central-difference gradient verification. Returns the max over coordinates
// of |analytic - numeric| / max(1, |analytic|). The numeric side never
// touches the tape, so it is an independent oracle for backward().
template <class Real>
double grad_check(const std::function<Tensor<Real>(const Tensor<Real>&)>& f,
                  const Tensor<Real>& x0, double eps) {
  if (eps <= 0) throw std::runtime_error("grad_check: eps must be positive");

  Tensor<Real> x = x0.clone(true);
  Tape<Real> tape;
  Tensor<Real> loss;
  {
    TapeScope<Real> scope(tape);
    loss = f(x);
  }
  if (!loss.defined() || loss.numel() != 1)
    throw std::runtime_error("grad_check: f must be scalar-valued");
  if (!std::isfinite(static_cast<double>(loss.item())))
    throw std::runtime_error("grad_check: f(x) is not finite");
  tape.backward(loss);
  if (!x.has_grad()) throw std::runtime_error("grad_check: no gradient reached x");

  auto eval = [&](const Tensor<Real>& p) -> double {
    return static_cast<double>(f(p).item());  // no active tape here
  };

  double worst = 0.0;
  Tensor<Real> probe = x0.clone(false);
  auto pv = probe.raw();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const Real orig = pv[i];
    pv[i] = orig + static_cast<Real>(eps);
    const double fp = eval(probe);
    pv[i] = orig - static_cast<Real>(eps);
    const double fm = eval(probe);
    pv[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double analytic = static_cast<double>(x.grad()[i]);
    const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace tta

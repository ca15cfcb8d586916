#include "tta/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace tta {

template <class Real>
Adam<Real>::Adam(std::vector<Tensor<Real>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    if (!p.defined() || !p.requires_grad())
      throw std::runtime_error("adam: parameter must be a defined tensor with requires_grad");
    m_.emplace_back(p.value().size(), Real(0));
    v_.emplace_back(p.value().size(), Real(0));
  }
}

template <class Real>
void Adam<Real>::step() {
  ++t_;
  const Real b1 = static_cast<Real>(cfg_.beta1);
  const Real b2 = static_cast<Real>(cfg_.beta2);
  const Real correct1 = Real(1) - static_cast<Real>(std::pow(cfg_.beta1, static_cast<double>(t_)));
  const Real correct2 = Real(1) - static_cast<Real>(std::pow(cfg_.beta2, static_cast<double>(t_)));
  const Real lr = static_cast<Real>(cfg_.lr);
  const Real eps = static_cast<Real>(cfg_.eps);

  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    auto& p = params_[pi];
    if (!p.has_grad())
      throw std::runtime_error("adam: missing gradient for parameter " + std::to_string(pi));
    auto g = p.grad();
    auto val = p.raw();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < val.size(); ++i) {
      m[i] = b1 * m[i] + (Real(1) - b1) * g[i];
      v[i] = b2 * v[i] + (Real(1) - b2) * g[i] * g[i];
      const Real mhat = m[i] / correct1;
      const Real vhat = v[i] / correct2;
      const Real upd = lr * mhat / (std::sqrt(vhat) + eps);
      if (!std::isfinite(upd))
        throw std::runtime_error("adam: non-finite update for parameter " + std::to_string(pi));
      val[i] -= upd;
    }
    p.drop_grad();
  }
}

template <class Real>
void Adam<Real>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace tta

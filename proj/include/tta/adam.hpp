#pragma once

#include <cstdint>
#include <vector>

#include "tta/tensor.hpp"

namespace tta {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a fixed parameter set. Moment buffers are keyed by position, so
// the parameter list must stay stable across steps.
template <class Real>
class Adam {
 public:
  Adam(std::vector<Tensor<Real>> params, AdamConfig cfg = {});

  // applies one update from the populated grads, then clears them
  void step();
  void zero_grad();

  std::int64_t step_count() const { return t_; }
  const std::vector<Tensor<Real>>& params() const { return params_; }

 private:
  std::vector<Tensor<Real>> params_;
  std::vector<std::vector<Real>> m_, v_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace tta

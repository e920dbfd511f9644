#pragma once

#include "gcond/tape.hpp"

#include <span>
#include <vector>

namespace gcond {

/// Adam with bias correction. Moment buffers are allocated on the first step
/// and keyed by position, so callers must pass parameters in a stable order.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

  double lr() const { return lr_; }
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

void sgd_step(std::span<Matrix* const> params, std::span<const Matrix> grads, double lr);

}  // namespace gcond

#include "gcond/optim.hpp"

#include "gcond/error.hpp"

#include <cmath>

namespace gcond {

void Adam::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
  require(params.size() == grads.size(), ErrorCode::dimension, "adam: params/grads length mismatch");
  if (m_.empty()) {
    for (Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  require(m_.size() == params.size(), ErrorCode::dimension, "adam: parameter set changed");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseAbs2();
    params[i]->array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

void sgd_step(std::span<Matrix* const> params, std::span<const Matrix> grads, double lr) {
  require(params.size() == grads.size(), ErrorCode::dimension, "sgd: params/grads length mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr * grads[i];
}

}  // namespace gcond

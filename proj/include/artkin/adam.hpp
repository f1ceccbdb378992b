#pragma once

#include <cmath>
#include <vector>

namespace artkin {

/// Adaptive-moment gradient descent state for one parameter block.
class Adam {
 public:
  Adam(int dim, double lr) : lr_(lr), m_(dim, 0.0), v_(dim, 0.0) {}

  /// Writes the update (to be added to the parameters) into `step_out`.
  void step(const double* grad, double* step_out) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < m_.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      const double mh = m_[i] / bc1;
      const double vh = v_[i] / bc2;
      step_out[i] = -lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }

  /// In-place variant for plain parameter vectors.
  void step_inplace(const double* grad, double* params) {
    std::vector<double> delta(m_.size());
    step(grad, delta.data());
    for (std::size_t i = 0; i < m_.size(); ++i) params[i] += delta[i];
  }

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace artkin

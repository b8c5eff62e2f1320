#include "mb2d/training/adam.hpp"

#include <cmath>

namespace mb2d::training {

Adam::Adam(std::vector<nn::Var<float>> params, const AdamParams& hp) : params_(std::move(params)), hp_(hp) {
  for (const auto& p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_)
    if (!p->grad.empty()) p->grad.fill(0.0f);
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(hp_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(hp_.beta2, static_cast<double>(t_));
  const float b1 = static_cast<float>(hp_.beta1);
  const float b2 = static_cast<float>(hp_.beta2);
  const float step = static_cast<float>(hp_.lr / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float eps = static_cast<float>(hp_.eps);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    if (p.grad.empty()) continue;
    float* w = p.value.data();
    const float* g = p.grad.data();
    float* m = m_[i].data();
    float* v = v_[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      m[j] = b1 * m[j] + (1.0f - b1) * g[j];
      v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
      w[j] -= step * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
    }
  }
}

}  // namespace mb2d::training

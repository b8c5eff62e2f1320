#pragma once

#include <cstdint>
#include <vector>

#include "mb2d/nn/graph.hpp"

namespace mb2d::training {

struct AdamParams {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. Constant learning rate.
class Adam {
 public:
  Adam(std::vector<nn::Var<float>> params, const AdamParams& hp);

  void zero_grad();
  void step();
  std::int64_t steps() const { return t_; }

 private:
  std::vector<nn::Var<float>> params_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  AdamParams hp_;
  std::int64_t t_ = 0;
};

}  // namespace mb2d::training

#pragma once

#include <cmath>

#include "hdp/autodiff.hpp"
#include "hdp/nets.hpp"

namespace hdp {

// Adam with per-Param state. lr == 0 leaves parameters untouched
// (moments included), so zero-rate runs are bit-reproducible no-ops.
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(ad::Param& p) const {
    if (lr == 0.0) return;
    p.adam_step += 1;
    p.m = beta1 * p.m + (1.0 - beta1) * p.grad;
    p.v = beta2 * p.v.array() + (1.0 - beta2) * p.grad.array().square();
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(p.adam_step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(p.adam_step));
    p.value.array() -=
        lr * (p.m.array() / bc1) / ((p.v.array() / bc2).sqrt() + eps);
  }

  void step(Mlp& net) const {
    for (auto& w : net.weights) step(w);
    for (auto& b : net.biases) step(b);
  }
};

}  // namespace hdp

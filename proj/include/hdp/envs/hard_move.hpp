#pragma once

#include <cmath>
#include <vector>

#include "hdp/envs/env.hpp"
#include "hdp/rng.hpp"

namespace hdp::envs {

// Resultant direction of the actuators selected by an n-bit mask.
// Actuator j points at angle 2*pi*j/n (j = 0 at angle 0, counterclockwise);
// the result is the mean of the selected unit vectors, (0,0) for the empty
// mask. |result| <= 1, with equality iff all selected actuators coincide
// in direction.
inline Eigen::Vector2d hard_move_base_direction(const std::vector<int>& mask) {
  int n = static_cast<int>(mask.size());
  Eigen::Vector2d sum(0.0, 0.0);
  int count = 0;
  for (int j = 0; j < n; ++j) {
    if (mask[j]) {
      double ang = 2.0 * M_PI * j / n;
      sum += Eigen::Vector2d(std::cos(ang), std::sin(ang));
      ++count;
    }
  }
  if (count == 0) return {0.0, 0.0};
  return sum / count;
}

inline std::vector<int> mask_bits(int k, int n) {
  std::vector<int> bits(n);
  for (int j = 0; j < n; ++j) bits[j] = (k >> j) & 1;
  return bits;
}

// Point-mass navigation with 2^n actuator masks. The discrete action picks
// an on/off mask over n radial actuators; the single continuous parameter
// scales the resultant thrust (negative values invert it). Position is
// clipped to the [-1,1]^2 arena. Reward is the negative distance to the
// target normalized by the arena diagonal, plus +10 on reaching the target.
//
// The single-step variant fixes the start at the origin and the target at
// (0, 0.3), with a move scale large enough that one correctly aimed step
// succeeds; it terminates after one step.
class HardMove : public Env {
 public:
  HardMove(int n, bool single_step) : n_(n), single_step_(single_step) {
    spec_.id = "hard_move_n" + std::to_string(n) +
               (single_step ? "_single_step" : "");
    spec_.obs_dim = 4;
    spec_.k = 1 << n;
    spec_.action_dim = 1;
    spec_.horizon = single_step ? 1 : 25;
    spec_.success_desc = "distance to target < 0.1";
    spec_.reward_desc = "-(distance to target)/arena_diagonal per step, +10 on success";
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(uint64_t seed) override {
    Rng rng(seed);
    pos_ = Eigen::Vector2d(0.0, 0.0);
    if (single_step_) {
      target_ = Eigen::Vector2d(0.0, 0.3);
    } else {
      do {
        target_ = Eigen::Vector2d(rng.uniform(-0.75, 0.75), rng.uniform(-0.75, 0.75));
      } while (target_.norm() < 0.3);
    }
    t_ = 0;
    done_ = false;
    return obs();
  }

  StepResult step(const HybridAction& a) override {
    check_action(a);
    double c = std::clamp(a.a_c(0), -1.0, 1.0);
    Eigen::Vector2d dir = hard_move_base_direction(mask_bits(a.k, n_));
    pos_ += c * move_scale() * dir;
    pos_ = pos_.cwiseMax(-1.0).cwiseMin(1.0);
    ++t_;

    StepResult res;
    double dist = (pos_ - target_).norm();
    res.r = -dist / kDiagonal;
    res.success = dist < 0.1;
    if (res.success) res.r += 10.0;
    res.done = res.success || t_ >= spec_.horizon;
    done_ = res.done;
    res.s_next = obs();
    res.info["distance"] = dist;
    return res;
  }

  double move_scale() const { return single_step_ ? 0.6 : 0.2; }

 private:
  Eigen::VectorXd obs() const {
    Eigen::VectorXd s(4);
    s << pos_(0), pos_(1), target_(0), target_(1);
    return s;
  }

  static constexpr double kDiagonal = 2.8284271247461903;  // 2*sqrt(2)

  int n_;
  bool single_step_;
  EnvSpec spec_;
  Eigen::Vector2d pos_{0, 0}, target_{0, 0};
};

}  // namespace hdp::envs

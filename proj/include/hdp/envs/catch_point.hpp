#pragma once

#include <cmath>

#include "hdp/envs/env.hpp"
#include "hdp/rng.hpp"

namespace hdp::envs {

// Move toward a target point and commit to a catch. MOVE (k=0) translates
// the agent by the 2-D parameter slice times the move scale; CATCH (k=1)
// ignores the parameters and succeeds if the agent is within the capture
// radius, otherwise it burns one of three attempts. Exhausting the
// attempts ends the episode with a penalty.
class CatchPoint : public Env {
 public:
  static constexpr int kMove = 0;
  static constexpr int kCatch = 1;
  static constexpr double kMoveScale = 0.3;
  static constexpr double kCaptureRadius = 0.15;
  static constexpr int kAttempts = 3;

  CatchPoint() {
    spec_.id = "catch_point";
    spec_.obs_dim = 5;
    spec_.k = 2;
    spec_.action_dim = 2;
    spec_.horizon = 20;
    spec_.success_desc = "CATCH issued within the capture radius (0.15)";
    spec_.reward_desc = "-0.05 per step, +10 on success, -5 on exhausting attempts";
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(uint64_t seed) override {
    Rng rng(seed);
    pos_ = Eigen::Vector2d(0.0, 0.0);
    target_ = Eigen::Vector2d(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7));
    attempts_ = kAttempts;
    t_ = 0;
    done_ = false;
    return obs();
  }

  StepResult step(const HybridAction& a) override {
    check_action(a);
    ++t_;
    StepResult res;
    res.r = -0.05;
    if (a.k == kMove) {
      Eigen::Vector2d d = a.a_c.head<2>().cwiseMax(-1.0).cwiseMin(1.0);
      pos_ += kMoveScale * d;
      pos_ = pos_.cwiseMax(-1.0).cwiseMin(1.0);
    } else {
      if ((pos_ - target_).norm() < kCaptureRadius) {
        res.success = true;
        res.r += 10.0;
      } else {
        --attempts_;
        if (attempts_ == 0) res.r -= 5.0;
      }
    }
    res.done = res.success || attempts_ == 0 || t_ >= spec_.horizon;
    done_ = res.done;
    res.s_next = obs();
    res.info["distance"] = (pos_ - target_).norm();
    res.info["attempts_left"] = attempts_;
    return res;
  }

 private:
  Eigen::VectorXd obs() const {
    Eigen::VectorXd s(5);
    s << pos_(0), pos_(1), target_(0), target_(1),
        static_cast<double>(attempts_) / kAttempts;
    return s;
  }

  EnvSpec spec_;
  Eigen::Vector2d pos_{0, 0}, target_{0, 0};
  int attempts_ = kAttempts;
};

}  // namespace hdp::envs

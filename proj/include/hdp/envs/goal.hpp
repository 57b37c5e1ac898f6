#pragma once

#include <cmath>

#include "hdp/envs/env.hpp"
#include "hdp/rng.hpp"

namespace hdp::envs {

// Shoot a ball past a tracking keeper. Interface-conforming port of the
// classic goal-scoring task; dynamics are our own (documented in
// docs/environments.md) and kinematic:
//   - field x in [-1, 1], goal line at x = +1 with mouth |y| <= goal_half
//   - keeper sits on x = 0.9 and tracks the ball's y at bounded speed
//   - KICK_TO (k=0, params dx,dy): dribble, ball moves by 0.3*(dx,dy)
//   - SHOOT_LEFT (k=1, param u): shot at goal-line y in [-goal_half, 0]
//   - SHOOT_RIGHT (k=2, param u): shot at goal-line y in [0, goal_half]
// A shot resolves in-flight immediately against the moving keeper; it
// scores unless the keeper is within its reach when the ball crosses the
// keeper line. The "hard" variant has a faster keeper and narrower goal.
class Goal : public Env {
 public:
  explicit Goal(bool hard) : hard_(hard) {
    spec_.id = hard ? "hard_goal" : "goal";
    spec_.obs_dim = 4;
    spec_.k = 3;
    spec_.action_dim = 2;
    spec_.horizon = 30;
    spec_.success_desc = "ball crosses the goal line inside the mouth, not intercepted";
    spec_.reward_desc =
        "0.5*(forward ball progress) - 0.02 per step, +10 goal, -5 intercept/out";
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(uint64_t seed) override {
    Rng rng(seed);
    ball_ = Eigen::Vector2d(-0.8, rng.uniform(-0.4, 0.4));
    keeper_y_ = rng.uniform(-0.2, 0.2);
    keeper_vy_ = 0.0;
    t_ = 0;
    done_ = false;
    return obs();
  }

  StepResult step(const HybridAction& a) override {
    check_action(a);
    ++t_;
    StepResult res;
    double old_x = ball_(0);
    res.r = -0.02;

    if (a.k == 0) {
      Eigen::Vector2d d = a.a_c.cwiseMax(-1.0).cwiseMin(1.0);
      ball_ += 0.3 * d;
      ball_ = ball_.cwiseMax(-1.0).cwiseMin(1.0);
      if (ball_(0) > kKeeperX) ball_(0) = kKeeperX;  // cannot dribble past the keeper
      track_keeper();
    } else {
      double u = std::clamp(a.a_c(0), -1.0, 1.0);
      double half = goal_half();
      double aim = a.k == 1 ? -half + 0.5 * half * (u + 1.0)
                            : half - 0.5 * half * (u + 1.0);
      bool scored = resolve_shot(aim);
      res.success = scored;
      res.r += scored ? 10.0 : -5.0;
      res.done = true;
    }

    res.r += 0.5 * (ball_(0) - old_x);
    if (!res.done) res.done = t_ >= spec_.horizon;
    done_ = res.done;
    res.s_next = obs();
    res.info["ball_x"] = ball_(0);
    return res;
  }

  double goal_half() const { return hard_ ? 0.3 : 0.4; }
  double keeper_speed() const { return hard_ ? 0.15 : 0.08; }

 private:
  static constexpr double kKeeperX = 0.9;
  static constexpr double kShotSpeed = 0.5;
  static constexpr double kKeeperReach = 0.12;

  void track_keeper() {
    double want = std::clamp(ball_(1), -goal_half(), goal_half());
    double dy = std::clamp(want - keeper_y_, -keeper_speed(), keeper_speed());
    keeper_y_ = keeper_y_ + dy;
    keeper_vy_ = dy;
  }

  // straight-line flight toward (1, aim), keeper keeps tracking per substep
  bool resolve_shot(double aim) {
    Eigen::Vector2d target(1.0, aim);
    Eigen::Vector2d dir = (target - ball_).normalized();
    while (ball_(0) < 1.0) {
      Eigen::Vector2d prev = ball_;
      ball_ += kShotSpeed * dir;
      track_keeper();
      if (prev(0) <= kKeeperX && ball_(0) >= kKeeperX) {
        double f = (kKeeperX - prev(0)) / (ball_(0) - prev(0));
        double y_at = prev(1) + f * (ball_(1) - prev(1));
        if (std::abs(y_at - keeper_y_) < kKeeperReach) return false;
      }
    }
    ball_(0) = 1.0;
    return std::abs(aim) <= goal_half();
  }

  Eigen::VectorXd obs() const {
    Eigen::VectorXd s(4);
    s << ball_(0), ball_(1), keeper_y_, keeper_vy_;
    return s;
  }

  bool hard_;
  EnvSpec spec_;
  Eigen::Vector2d ball_{-0.8, 0};
  double keeper_y_ = 0.0, keeper_vy_ = 0.0;
};

}  // namespace hdp::envs

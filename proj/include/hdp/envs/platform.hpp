#pragma once

#include <array>
#include <cmath>

#include "hdp/envs/env.hpp"
#include "hdp/rng.hpp"

namespace hdp::envs {

// 1-D platformer port: cross three platforms separated by gaps. Each
// discrete action takes one continuous parameter u in [-1, 1]:
//   RUN  (k=0): advance by 0.10 * (u+1)/2 along the current platform
//   HOP  (k=1): jump 0.12 + 0.06 * (u+1)/2
//   LEAP (k=2): jump 0.22 + 0.13 * (u+1)/2
// Running into a gap stops at the edge; a jump landing inside a gap ends
// the episode with a fall penalty. Reaching x >= 1 succeeds. Dynamics are
// our own (documented in docs/environments.md).
class Platform : public Env {
 public:
  Platform() {
    spec_.id = "platform";
    spec_.obs_dim = 4;
    spec_.k = 3;
    spec_.action_dim = 1;
    spec_.horizon = 20;
    spec_.success_desc = "agent reaches x >= 1";
    spec_.reward_desc = "forward progress per step, +10 on success, -5 on falling";
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(uint64_t seed) override {
    Rng rng(seed);
    x_ = rng.uniform(0.0, 0.05);
    t_ = 0;
    done_ = false;
    return obs();
  }

  StepResult step(const HybridAction& a) override {
    check_action(a);
    ++t_;
    double u = (std::clamp(a.a_c(0), -1.0, 1.0) + 1.0) / 2.0;
    StepResult res;
    double old_x = x_;

    if (a.k == 0) {
      double nx = x_ + 0.10 * u;
      // running stops at the platform edge
      double edge = platform_end(x_);
      x_ = std::min(nx, edge);
    } else {
      double dist = a.k == 1 ? 0.12 + 0.06 * u : 0.22 + 0.13 * u;
      x_ += dist;
      if (x_ < 1.0 && in_gap(x_)) {
        res.r = -5.0;
        res.done = true;
        done_ = true;
        res.s_next = obs();
        return res;
      }
    }

    x_ = std::min(x_, 1.0);
    res.r = 2.0 * (x_ - old_x);
    res.success = x_ >= 1.0;
    if (res.success) res.r += 10.0;
    res.done = res.success || t_ >= spec_.horizon;
    done_ = res.done;
    res.s_next = obs();
    res.info["x"] = x_;
    return res;
  }

 private:
  // platforms [0,0.3], [0.45,0.7], [0.85,1.0]
  static constexpr std::array<double, 3> kStart{0.0, 0.45, 0.85};
  static constexpr std::array<double, 3> kEnd{0.30, 0.70, 1.0};

  static bool in_gap(double x) {
    for (size_t p = 0; p < kStart.size(); ++p)
      if (x >= kStart[p] && x <= kEnd[p]) return false;
    return true;
  }

  static double platform_end(double x) {
    for (size_t p = 0; p < kStart.size(); ++p)
      if (x >= kStart[p] && x <= kEnd[p]) return kEnd[p];
    return x;
  }

  Eigen::VectorXd obs() const {
    double gap_start = 1.0, gap_width = 0.0;
    for (size_t p = 0; p + 1 < kStart.size(); ++p) {
      if (x_ <= kEnd[p]) {
        gap_start = kEnd[p];
        gap_width = kStart[p + 1] - kEnd[p];
        break;
      }
    }
    Eigen::VectorXd s(4);
    s << x_, gap_start - x_, gap_width, static_cast<double>(t_) / spec_.horizon;
    return s;
  }

  EnvSpec spec_;
  double x_ = 0.0;
};

}  // namespace hdp::envs

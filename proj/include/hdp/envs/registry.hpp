#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdp/envs/catch_point.hpp"
#include "hdp/envs/env.hpp"
#include "hdp/envs/goal.hpp"
#include "hdp/envs/hard_move.hpp"
#include "hdp/envs/platform.hpp"

namespace hdp::envs {

inline std::vector<std::string> env_ids() {
  std::vector<std::string> ids = {"goal", "hard_goal", "platform", "catch_point"};
  for (int n : {4, 6, 8, 10}) {
    ids.push_back("hard_move_n" + std::to_string(n));
    ids.push_back("hard_move_n" + std::to_string(n) + "_single_step");
  }
  return ids;
}

inline std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "goal") return std::make_unique<Goal>(false);
  if (id == "hard_goal") return std::make_unique<Goal>(true);
  if (id == "platform") return std::make_unique<Platform>();
  if (id == "catch_point") return std::make_unique<CatchPoint>();
  for (int n : {4, 6, 8, 10}) {
    std::string base = "hard_move_n" + std::to_string(n);
    if (id == base) return std::make_unique<HardMove>(n, false);
    if (id == base + "_single_step") return std::make_unique<HardMove>(n, true);
  }
  throw std::invalid_argument("unknown environment id: " + id);
}

}  // namespace hdp::envs

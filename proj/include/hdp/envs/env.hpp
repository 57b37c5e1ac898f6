#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace hdp::envs {

// (discrete index, continuous parameter vector). a_c is fixed-width; each
// environment documents which slice action k consumes.
struct HybridAction {
  int k = 0;
  Eigen::VectorXd a_c;
};

struct EnvSpec {
  std::string id;
  int obs_dim = 0;
  int k = 0;           // cardinality of the discrete action space
  int action_dim = 0;  // fixed width of the continuous parameter vector
  int horizon = 1;
  std::string success_desc;
  std::string reward_desc;
};

struct StepResult {
  Eigen::VectorXd s_next;
  double r = 0.0;
  bool done = false;
  bool success = false;
  std::map<std::string, double> info;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual Eigen::VectorXd reset(uint64_t seed) = 0;
  virtual StepResult step(const HybridAction& a) = 0;

 protected:
  void check_action(const HybridAction& a) const {
    if (a.k < 0 || a.k >= spec().k)
      throw std::invalid_argument("step: discrete index out of range");
    if (a.a_c.size() != spec().action_dim)
      throw std::invalid_argument("step: continuous parameter width mismatch");
    if (done_) throw std::logic_error("step: episode already finished");
  }

  bool done_ = true;  // must reset before stepping
  int t_ = 0;
};

}  // namespace hdp::envs

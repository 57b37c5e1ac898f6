#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

#include "hdp/autodiff.hpp"
#include "hdp/nets.hpp"
#include "hdp/rng.hpp"

namespace hdp {

// Twin Q networks over (state, latent, continuous action) with Polyak
// target copies. The latent is the discrete policy's pre-quantization
// output, not the codeword.
struct TwinCritic {
  Mlp q1, q2;
  Mlp q1_target, q2_target;
  double tau = 0.005;
  int obs_dim = 0;
  int latent_dim = 0;
  int action_dim = 0;

  TwinCritic() = default;

  TwinCritic(int obs, int latent, int action, const std::vector<int>& hidden,
             Activation act, double tau_, Rng& rng)
      : tau(tau_), obs_dim(obs), latent_dim(latent), action_dim(action) {
    int in = obs + latent + action;
    q1 = Mlp(in, hidden, 1, act, rng);
    q2 = Mlp(in, hidden, 1, act, rng);
    q1_target = q1;  // targets start equal to the online nets
    q2_target = q2;
  }

  int input_dim() const { return obs_dim + latent_dim + action_dim; }
};

inline ad::Mat critic_input(const ad::Mat& s, const ad::Mat& e, const ad::Mat& a) {
  ad::Mat in(s.rows(), s.cols() + e.cols() + a.cols());
  in << s, e, a;
  return in;
}

inline std::pair<double, double> q_values(const TwinCritic& c,
                                          const Eigen::VectorXd& s,
                                          const Eigen::VectorXd& e,
                                          const Eigen::VectorXd& a) {
  if (s.size() + e.size() + a.size() != c.input_dim())
    throw std::invalid_argument("q_values: dimension mismatch");
  Eigen::VectorXd in(c.input_dim());
  in << s, e, a;
  ad::Mat row = in.transpose();
  return {c.q1.forward_raw(row)(0, 0), c.q2.forward_raw(row)(0, 0)};
}

// min over the two online critics, batched
inline Eigen::VectorXd min_q_raw(const TwinCritic& c, const ad::Mat& s,
                                 const ad::Mat& e, const ad::Mat& a) {
  ad::Mat in = critic_input(s, e, a);
  return c.q1.forward_raw(in).col(0).cwiseMin(c.q2.forward_raw(in).col(0));
}

// Double-Q target: y = r + gamma (1 - done) min_j Q'_j(s', e', a'^c), with
// (e', a'^c) drawn by `next_sampler` from the target policies. The whole
// computation is tape-free and therefore detached. Rows with done set skip
// the sampler entirely.
template <class NextSampler>
Eigen::VectorXd td_target(const TwinCritic& c, const Eigen::VectorXd& rewards,
                          const ad::Mat& s_next,
                          const Eigen::VectorXd& done, double gamma,
                          NextSampler&& next_sampler) {
  int b = static_cast<int>(rewards.size());
  Eigen::VectorXd y = rewards;
  std::vector<int> live;
  for (int r = 0; r < b; ++r)
    if (done(r) == 0.0) live.push_back(r);
  if (live.empty()) return y;

  ad::Mat s_live(static_cast<int>(live.size()), s_next.cols());
  for (size_t r = 0; r < live.size(); ++r) s_live.row(r) = s_next.row(live[r]);
  auto [e_next, a_next] = next_sampler(s_live);

  ad::Mat in = critic_input(s_live, e_next, a_next);
  Eigen::VectorXd qmin =
      c.q1_target.forward_raw(in).col(0).cwiseMin(c.q2_target.forward_raw(in).col(0));
  for (size_t r = 0; r < live.size(); ++r) y(live[r]) += gamma * qmin(r);
  return y;
}

// MSBE summed over both critics: sum_i mean_b (Q_i(s,e,a) - y)^2
inline ad::Var critic_loss_tape(ad::Tape& tape, TwinCritic& c, const ad::Mat& s,
                                const ad::Mat& e, const ad::Mat& a,
                                const Eigen::VectorXd& y) {
  if (y.size() == 0) throw std::invalid_argument("critic_loss: empty batch");
  ad::Var in = tape.constant(critic_input(s, e, a));
  ad::Mat target = y;
  ad::Var l1 = tape.mse(c.q1.forward(tape, in), target);
  ad::Var l2 = tape.mse(c.q2.forward(tape, in), target);
  return tape.add(l1, l2);
}

inline void polyak_update(TwinCritic& c) {
  polyak(c.q1_target, c.q1, c.tau);
  polyak(c.q2_target, c.q2, c.tau);
}

}  // namespace hdp

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdp/codebook.hpp"
#include "hdp/critic.hpp"
#include "hdp/envs/env.hpp"
#include "hdp/optim.hpp"
#include "hdp/policies.hpp"
#include "hdp/replay.hpp"

namespace hdp {

struct TrainConfig {
  double gamma = 0.99;
  double eta = 5.0;  // policy-improvement weight
  double tau = 0.005;
  int batch_size = 128;
  long buffer_capacity = 1000000;
  // policies and codebook learn slower than the critic; keeping the critic
  // ahead of policy drift is what holds late-training success rates stable
  double lr_discrete = 1e-4;
  double lr_continuous = 1e-4;
  double lr_codebook = 1e-4;
  double lr_critic = 3e-4;
  int n_diffusion = 15;
  int d_e = 8;
  long total_steps = 50000;
  long warmup_steps = 2000;
  int update_every = 2;  // one gradient step per this many env steps
  long eval_interval = 5000;
  int eval_episodes = 50;
  double exploration_noise = 0.1;  // Gaussian on a^c during rollout
  double latent_epsilon = 0.1;     // prob of a uniform random latent during rollout
  bool deterministic_policy = false;
  bool no_codebook = false;
  bool concurrent_update = false;
  uint64_t seed = 0;

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma in [0,1)");
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau in (0,1]");
    if (batch_size < 1 || buffer_capacity < batch_size)
      throw std::invalid_argument("bad batch/buffer sizes");
    if (lr_discrete < 0 || lr_continuous < 0 || lr_codebook < 0 || lr_critic < 0)
      throw std::invalid_argument("learning rates must be >= 0");
    if (n_diffusion < 1 || d_e < 1) throw std::invalid_argument("bad N or d_e");
    if (warmup_steps > total_steps)
      throw std::invalid_argument("warmup must not exceed total steps");
    if (update_every < 1 || eval_interval < 1 || eval_episodes < 1)
      throw std::invalid_argument("bad cadence settings");
    if (exploration_noise < 0.0 || latent_epsilon < 0.0 || latent_epsilon > 1.0)
      throw std::invalid_argument("bad exploration settings");
  }
};

struct ActResult {
  Eigen::VectorXd e;
  int k = 0;
  Eigen::VectorXd a_c;
};

struct IterationMetrics {
  double critic_loss = 0.0;
  double step1_loss = 0.0;
  double step2_loss = 0.0;
  double alpha = 0.0;
  double mean_abs_q = 0.0;
  std::vector<long> selection_histogram;  // per-row counts in this batch
};

// All learnable components plus their optimizers.
struct Agent {
  envs::EnvSpec env_spec;
  TrainConfig cfg;
  PolicyNetworkConfig net_cfg;
  NoiseSchedule sched;

  DiscreteLatentPolicy pi_d, pi_d_target;
  ContinuousPolicy pi_c, pi_c_target;
  Codebook codebook;
  TwinCritic critic;

  Adam opt_d, opt_c, opt_cb, opt_critic;
  std::vector<long> selection_counts;  // cumulative per-row selections

  Agent() = default;

  // Without the codebook the latent is the discrete policy's raw K-way
  // output: k = argmax component, and the raw vector itself conditions the
  // continuous policy and the critics.
  int latent_dim() const { return cfg.no_codebook ? env_spec.k : cfg.d_e; }

  Agent(const envs::EnvSpec& spec, const TrainConfig& tc,
        const PolicyNetworkConfig& nc, Rng& rng,
        const ScheduleConfig& sc = ScheduleConfig{})
      : env_spec(spec), cfg(tc), net_cfg(nc) {
    cfg.validate();
    nc.validate();
    sched = make_schedule(cfg.n_diffusion, sc.beta_start, sc.beta_end, sc.kind);
    pi_d = DiscreteLatentPolicy(latent_dim(), spec.obs_dim, nc, sched,
                                cfg.deterministic_policy, rng);
    pi_c = ContinuousPolicy(spec.action_dim, spec.obs_dim, latent_dim(), nc, sched,
                            cfg.deterministic_policy, rng);
    pi_d_target = pi_d;
    pi_c_target = pi_c;
    codebook = init_codebook(spec.k, cfg.d_e, rng);
    critic = TwinCritic(spec.obs_dim, latent_dim(), spec.action_dim,
                        nc.critic_hidden, nc.activation, cfg.tau, rng);
    opt_d.lr = cfg.lr_discrete;
    opt_c.lr = cfg.lr_continuous;
    opt_cb.lr = cfg.lr_codebook;
    opt_critic.lr = cfg.lr_critic;
    selection_counts.assign(spec.k, 0);
  }
};

// Inference pipeline: latent -> quantize -> conditioned continuous action.
// `explore` enables the optional Gaussian action noise and uniform draws.
inline ActResult act(Agent& agent, const Eigen::VectorXd& s, Rng& rng,
                     bool explore = false) {
  ActResult out;
  out.e = sample_latent(agent.pi_d, s, rng);
  // persistent warmup-style exploration: a uniform (latent, action) pair
  // keeps the critic calibrated over the whole hybrid action space, not
  // just the shrinking region the current policy visits
  bool uniform_draw = explore && agent.cfg.latent_epsilon > 0.0 &&
                      rng.uniform() < agent.cfg.latent_epsilon;
  if (uniform_draw)
    out.e = rng.rand_uniform_mat(agent.latent_dim(), 1, -1.0, 1.0).col(0);
  Eigen::VectorXd e_k;
  if (agent.cfg.no_codebook) {
    Eigen::Index best = 0;
    out.e.maxCoeff(&best);
    out.k = static_cast<int>(best);
    e_k = out.e;
  } else {
    auto [k, row] = quantize(agent.codebook, out.e);
    out.k = k;
    e_k = row;
  }
  out.a_c = sample_action(agent.pi_c, s, e_k, rng);
  if (uniform_draw) {
    out.a_c = rng.rand_uniform_mat(agent.env_spec.action_dim, 1, -1.0, 1.0).col(0);
  } else if (explore && agent.cfg.exploration_noise > 0.0) {
    out.a_c += agent.cfg.exploration_noise * rng.randn_vec(out.a_c.size());
    out.a_c = out.a_c.cwiseMax(-1.0).cwiseMin(1.0);
  }
  return out;
}

// alpha = eta / max(mean |Q| over the batch and both critics, 1e-3),
// detached from all gradients.
inline double alpha_coefficient(const Agent& agent, const Batch& b) {
  if (b.size() == 0) throw std::invalid_argument("alpha_coefficient: empty batch");
  ad::Mat in = critic_input(b.s, b.e, b.a_c);
  double mean_abs = (agent.critic.q1.forward_raw(in).cwiseAbs().sum() +
                     agent.critic.q2.forward_raw(in).cwiseAbs().sum()) /
                    (2.0 * b.size());
  return agent.cfg.eta / std::max(mean_abs, 1e-3);
}

// Q used in the policy-improvement terms: frozen min of the twin critics.
// Tests may swap in an analytic Q with the same shape.
struct FrozenMinQ {
  TwinCritic* critic;
  ad::Var operator()(ad::Tape& tape, const ad::Mat& s, ad::Var e, ad::Var a) const {
    ad::Var in = tape.concat_cols({tape.constant(s), e, a});
    ad::Var q1 = critic->q1.forward(tape, in, /*train_params=*/false);
    ad::Var q2 = critic->q2.forward(tape, in, /*train_params=*/false);
    return tape.min_elem(q1, q2);
  }
};

// Step 1: one gradient step on theta_d only.
//   L(theta_d) = bc_loss(x0 = buffered e | s) - alpha * E[Q(s, e~pi_d, a^c_buf)]
template <class QFn>
double step1_discrete_update(Agent& agent, const Batch& b, double alpha, Rng& rng,
                             QFn&& qfn) {
  if (b.size() == 0) throw std::invalid_argument("step1: empty batch");
  ad::Tape tape;
  ad::Var cond = tape.constant(b.s);
  ad::Var bc = agent.pi_d.gen.bc_loss_tape(tape, cond, b.e, rng);
  ad::Var e = agent.pi_d.gen.sample_tape(tape, cond, rng);
  ad::Var q = qfn(tape, b.s, e, tape.constant(b.a_c));
  ad::Var loss = tape.add(bc, tape.scale(tape.mean_all(q), -alpha));
  agent.pi_d.gen.net.zero_grad();
  tape.backward(loss);
  agent.opt_d.step(agent.pi_d.gen.net);
  return tape.scalar(loss);
}

inline double step1_discrete_update(Agent& agent, const Batch& b, double alpha,
                                    Rng& rng) {
  return step1_discrete_update(agent, b, alpha, rng, FrozenMinQ{&agent.critic});
}

// Step 2: one joint gradient step on (theta_c, zeta).
//   e' is freshly sampled from the just-updated discrete policy (or taken
//   from the buffer under the concurrent-update ablation) and enters Q
//   behind a stop-gradient; the codebook learns only through the gathered
//   codeword that conditions the sampled action.
template <class QFn>
double step2_continuous_codebook_update(Agent& agent, const Batch& b, double alpha,
                                        Rng& rng, QFn&& qfn,
                                        IterationMetrics* metrics = nullptr) {
  if (b.size() == 0) throw std::invalid_argument("step2: empty batch");
  ad::Mat e_prime = agent.cfg.concurrent_update
                        ? b.e
                        : agent.pi_d.gen.sample_batch(b.s, rng);

  ad::Tape tape;
  ad::Var e_k;  // condition for the sampled action
  std::vector<int> idx;
  if (agent.cfg.no_codebook) {
    idx.resize(b.size());  // argmax indices, selection histogram only
    for (int r = 0; r < b.size(); ++r) {
      Eigen::Index best = 0;
      e_prime.row(r).maxCoeff(&best);
      idx[r] = static_cast<int>(best);
    }
    e_k = tape.constant(e_prime);
  } else {
    idx = quantize_batch(agent.codebook, e_prime);
    e_k = tape.gather_rows(agent.codebook.entries, idx);
  }
  if (metrics) {
    metrics->selection_histogram.assign(agent.env_spec.k, 0);
    for (int k : idx) {
      metrics->selection_histogram[k] += 1;
      agent.selection_counts[k] += 1;
    }
  }

  ad::Var cond_q = tape.concat_cols({tape.constant(b.s), e_k});
  ad::Var a = agent.pi_c.gen.sample_tape(tape, cond_q, rng);
  ad::Var q = qfn(tape, b.s, tape.constant(e_prime), a);  // sg(e')

  // bc condition uses the codeword of the buffered latent, detached:
  // the codebook's only learning signal is the Q term
  ad::Mat cond_bc_mat(b.size(), b.s.cols() + agent.latent_dim());
  if (agent.cfg.no_codebook) {
    cond_bc_mat << b.s, b.e;
  } else {
    cond_bc_mat << b.s, gather_raw(agent.codebook, quantize_batch(agent.codebook, b.e));
  }
  ad::Var bc = agent.pi_c.gen.bc_loss_tape(tape, tape.constant(cond_bc_mat), b.a_c, rng);

  ad::Var loss = tape.add(bc, tape.scale(tape.mean_all(q), -alpha));
  agent.pi_c.gen.net.zero_grad();
  agent.codebook.entries.zero_grad();
  tape.backward(loss);
  agent.opt_c.step(agent.pi_c.gen.net);
  if (!agent.cfg.no_codebook) agent.opt_cb.step(agent.codebook.entries);
  return tape.scalar(loss);
}

inline double step2_continuous_codebook_update(Agent& agent, const Batch& b,
                                               double alpha, Rng& rng,
                                               IterationMetrics* metrics = nullptr) {
  return step2_continuous_codebook_update(agent, b, alpha, rng,
                                          FrozenMinQ{&agent.critic}, metrics);
}

// Double-Q target through the target policies and the live codebook.
inline Eigen::VectorXd compute_targets(Agent& agent, const Batch& b, Rng& rng) {
  auto next_sampler = [&](const ad::Mat& s_live) {
    ad::Mat e_next = agent.pi_d_target.gen.sample_batch(s_live, rng);
    ad::Mat e_k;
    if (agent.cfg.no_codebook) {
      e_k = e_next;
    } else {
      e_k = gather_raw(agent.codebook, quantize_batch(agent.codebook, e_next));
    }
    ad::Mat a_next = sample_action_batch(agent.pi_c_target, s_live, e_k, rng);
    return std::make_pair(e_next, a_next);
  };
  return td_target(agent.critic, b.r, b.s_next, b.done, agent.cfg.gamma,
                   next_sampler);
}

inline double critic_update(Agent& agent, const Batch& b, Rng& rng,
                            const Eigen::VectorXd* precomputed_y = nullptr) {
  Eigen::VectorXd y =
      precomputed_y ? *precomputed_y : compute_targets(agent, b, rng);
  ad::Tape tape;
  ad::Var loss = critic_loss_tape(tape, agent.critic, b.s, b.e, b.a_c, y);
  agent.critic.q1.zero_grad();
  agent.critic.q2.zero_grad();
  tape.backward(loss);
  agent.opt_critic.step(agent.critic.q1);
  agent.opt_critic.step(agent.critic.q2);
  return tape.scalar(loss);
}

inline void update_targets(Agent& agent) {
  polyak_update(agent.critic);
  polyak(agent.pi_d_target.gen.net, agent.pi_d.gen.net, agent.cfg.tau);
  polyak(agent.pi_c_target.gen.net, agent.pi_c.gen.net, agent.cfg.tau);
}

// One full training iteration: critic, Step 1, Step 2, target maintenance.
// The optional observer is called after each phase (instrumentation for
// ordering tests).
inline IterationMetrics train_iteration(
    Agent& agent, const ReplayBuffer& buffer, Rng& rng,
    const std::function<void(const std::string&)>& observer = nullptr) {
  Batch b = buffer.sample(agent.cfg.batch_size, rng);

  IterationMetrics m;
  {
    ad::Mat in = critic_input(b.s, b.e, b.a_c);
    m.mean_abs_q = (agent.critic.q1.forward_raw(in).cwiseAbs().sum() +
                    agent.critic.q2.forward_raw(in).cwiseAbs().sum()) /
                   (2.0 * b.size());
  }

  Eigen::VectorXd y = compute_targets(agent, b, rng);
  m.critic_loss = critic_update(agent, b, rng, &y);
  if (observer) observer("critic");

  m.alpha = alpha_coefficient(agent, b);
  m.step1_loss = step1_discrete_update(agent, b, m.alpha, rng);
  if (observer) observer("step1");

  m.step2_loss = step2_continuous_codebook_update(agent, b, m.alpha, rng, &m);
  if (observer) observer("step2");

  update_targets(agent);
  if (observer) observer("targets");
  return m;
}

}  // namespace hdp

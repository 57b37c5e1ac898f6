#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "hdp/autodiff.hpp"
#include "hdp/diffusion.hpp"
#include "hdp/nets.hpp"
#include "hdp/rng.hpp"
#include "hdp/schedule.hpp"

namespace hdp {

// A conditional generator backed by a diffusion noise predictor
// eps(x, cond, i), or by a direct tanh-squashed feedforward net when the
// deterministic ablation is active. Outputs always lie in [-1, 1]^out_dim.
struct ConditionalGenerator {
  Mlp net;
  NoiseSchedule sched;
  int out_dim = 0;
  int cond_dim = 0;
  int time_dim = 16;
  bool deterministic = false;

  ConditionalGenerator() = default;

  ConditionalGenerator(int out, int cond, const PolicyNetworkConfig& nc,
                       NoiseSchedule schedule, bool det, Rng& rng)
      : sched(std::move(schedule)),
        out_dim(out),
        cond_dim(cond),
        time_dim(nc.time_embed_dim),
        deterministic(det) {
    nc.validate();
    int in = det ? cond : out + cond + nc.time_embed_dim;
    net = Mlp(in, nc.hidden, out, nc.activation, rng);
  }

  Eigen::VectorXd sample(const Eigen::VectorXd& cond, Rng& rng) const {
    if (cond.size() != cond_dim)
      throw std::invalid_argument("sample: condition dimension mismatch");
    return sample_batch(cond.transpose(), rng).row(0).transpose();
  }

  ad::Mat sample_batch(const ad::Mat& cond, Rng& rng) const {
    if (cond.cols() != cond_dim)
      throw std::invalid_argument("sample_batch: condition dimension mismatch");
    if (deterministic) return net.forward_raw(cond).array().tanh();
    return diffusion::sample_batch_raw(net, cond, out_dim, time_dim, sched, rng);
  }

  ad::Var sample_tape(ad::Tape& tape, ad::Var cond, Rng& rng,
                      bool train_params = true) {
    int b = static_cast<int>(tape.val(cond).rows());
    if (deterministic) return tape.tanh_(net.forward(tape, cond, train_params));
    return diffusion::sample_tape(tape, net, cond, b, out_dim, time_dim, sched, rng,
                                  train_params);
  }

  // behaviour cloning toward buffered outputs: diffusion loss for the
  // generative policy, plain regression for the deterministic ablation
  ad::Var bc_loss_tape(ad::Tape& tape, ad::Var cond, const ad::Mat& x0, Rng& rng,
                       bool train_params = true) {
    if (deterministic) {
      ad::Var pred = tape.tanh_(net.forward(tape, cond, train_params));
      return tape.scale(tape.mse(pred, x0), static_cast<double>(x0.cols()));
    }
    return diffusion::bc_loss_tape(tape, net, cond, x0, time_dim, sched, rng,
                                   train_params);
  }
};

// pi_theta_d: generates a latent representation in [-1,1]^latent_dim from
// the state. The latent is quantized downstream by the codebook.
struct DiscreteLatentPolicy {
  ConditionalGenerator gen;

  DiscreteLatentPolicy() = default;
  DiscreteLatentPolicy(int latent_dim, int obs_dim, const PolicyNetworkConfig& nc,
                       NoiseSchedule sched, bool det, Rng& rng)
      : gen(latent_dim, obs_dim, nc, std::move(sched), det, rng) {}

  int latent_dim() const { return gen.out_dim; }
};

inline Eigen::VectorXd sample_latent(const DiscreteLatentPolicy& p,
                                     const Eigen::VectorXd& s, Rng& rng) {
  return p.gen.sample(s, rng);
}

// pi_theta_c: generates the continuous action conditioned on the state and
// the selected codeword.
struct ContinuousPolicy {
  ConditionalGenerator gen;
  int obs_dim = 0;
  int codeword_dim = 0;

  ContinuousPolicy() = default;
  ContinuousPolicy(int action_dim, int obs_dim_, int codeword_dim_,
                   const PolicyNetworkConfig& nc, NoiseSchedule sched, bool det,
                   Rng& rng)
      : gen(action_dim, obs_dim_ + codeword_dim_, nc, std::move(sched), det, rng),
        obs_dim(obs_dim_),
        codeword_dim(codeword_dim_) {}

  int action_dim() const { return gen.out_dim; }
};

inline Eigen::VectorXd sample_action(const ContinuousPolicy& p,
                                     const Eigen::VectorXd& s,
                                     const Eigen::VectorXd& e_k, Rng& rng) {
  if (e_k.size() != p.codeword_dim)
    throw std::invalid_argument("sample_action: codeword dimension mismatch");
  Eigen::VectorXd cond(s.size() + e_k.size());
  cond << s, e_k;
  return p.gen.sample(cond, rng);
}

inline ad::Mat sample_action_batch(const ContinuousPolicy& p, const ad::Mat& s,
                                   const ad::Mat& e_k, Rng& rng) {
  ad::Mat cond(s.rows(), s.cols() + e_k.cols());
  cond << s, e_k;
  return p.gen.sample_batch(cond, rng);
}

}  // namespace hdp

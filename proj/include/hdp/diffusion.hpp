#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hdp/autodiff.hpp"
#include "hdp/nets.hpp"
#include "hdp/rng.hpp"
#include "hdp/schedule.hpp"

namespace hdp::diffusion {

using Eigen::VectorXd;
using ad::Mat;

// x_i = sqrt(abar_i) x0 + sqrt(1 - abar_i) eps
inline VectorXd forward_noise(const VectorXd& x0, int i, const VectorXd& eps,
                              const NoiseSchedule& sched) {
  if (i < 1 || i > sched.n()) throw std::out_of_range("forward_noise: step index");
  if (eps.size() != x0.size())
    throw std::invalid_argument("forward_noise: dimension mismatch");
  double ab = sched.alpha_bar(i);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

// x_{i-1} = (x_i - (1-alpha_i)/sqrt(1-abar_i) * eps_pred) / sqrt(alpha_i)
//           + sqrt(beta_i) z
inline VectorXd reverse_step(const VectorXd& x_i, const VectorXd& eps_pred, int i,
                             const VectorXd& z, const NoiseSchedule& sched) {
  if (i < 1 || i > sched.n()) throw std::out_of_range("reverse_step: step index");
  if (eps_pred.size() != x_i.size() || z.size() != x_i.size())
    throw std::invalid_argument("reverse_step: dimension mismatch");
  double a = sched.alpha(i);
  double ab = sched.alpha_bar(i);
  double c2 = (1.0 - a) / std::sqrt(1.0 - ab);
  return (x_i - c2 * eps_pred) / std::sqrt(a) + std::sqrt(sched.beta(i)) * z;
}

// Full reverse chain from x_N ~ N(0,I), output clamped to [-1, 1].
// noise_net(x, cond, i) -> predicted noise. z = 0 at the final step (i = 1).
template <class NoiseNet>
VectorXd sample(NoiseNet&& noise_net, const VectorXd& cond, int out_dim,
                const NoiseSchedule& sched, Rng& rng) {
  VectorXd x = rng.randn_vec(out_dim);
  for (int i = sched.n(); i >= 1; --i) {
    VectorXd eps = noise_net(x, cond, i);
    VectorXd z = i > 1 ? rng.randn_vec(out_dim) : VectorXd::Zero(out_dim);
    x = reverse_step(x, eps, i, z, sched);
  }
  return x.cwiseMax(-1.0).cwiseMin(1.0);
}

// Batched inference sampler for an MLP noise predictor whose input is
// [sample | cond | time embedding]. Draw order matches sample_tape.
inline Mat sample_batch_raw(const Mlp& net, const Mat& cond, int out_dim,
                            int time_dim, const NoiseSchedule& sched, Rng& rng) {
  int b = static_cast<int>(cond.rows());
  Mat x = rng.randn_mat(b, out_dim);
  for (int i = sched.n(); i >= 1; --i) {
    Mat in(b, out_dim + cond.cols() + time_dim);
    in << x, cond, time_embedding(i, time_dim).replicate(b, 1);
    Mat eps = net.forward_raw(in);
    double a = sched.alpha(i);
    double c2 = (1.0 - a) / std::sqrt(1.0 - sched.alpha_bar(i));
    x = (x - c2 * eps) / std::sqrt(a);
    if (i > 1) x += std::sqrt(sched.beta(i)) * rng.randn_mat(b, out_dim);
  }
  return x.cwiseMax(-1.0).cwiseMin(1.0);
}

// Differentiable sampler: the returned Var depends on the predictor
// parameters (unless train_params is false) and on the conditioning Var;
// x_N and all per-step z are fixed exogenous draws for this invocation.
inline ad::Var sample_tape(ad::Tape& tape, Mlp& net, ad::Var cond, int batch,
                           int out_dim, int time_dim, const NoiseSchedule& sched,
                           Rng& rng, bool train_params = true) {
  ad::Var x = tape.constant(rng.randn_mat(batch, out_dim));
  for (int i = sched.n(); i >= 1; --i) {
    ad::Var in = tape.concat_cols(
        {x, cond, tape.constant(time_embedding(i, time_dim).replicate(batch, 1))});
    ad::Var eps = net.forward(tape, in, train_params);
    double a = sched.alpha(i);
    double c2 = (1.0 - a) / std::sqrt(1.0 - sched.alpha_bar(i));
    x = tape.scale(tape.sub(x, tape.scale(eps, c2)), 1.0 / std::sqrt(a));
    if (i > 1)
      x = tape.add_const(x, std::sqrt(sched.beta(i)) * rng.randn_mat(batch, out_dim));
  }
  return tape.clamp(x, -1.0, 1.0);
}

// Behaviour-cloning diffusion loss, Monte-Carlo over one (i, eps) draw per
// record: mean over records of || eps - net(x_i, cond, i) ||^2. A zero
// predictor therefore scores ~out_dim.
template <class NoiseNet>
double bc_loss(NoiseNet&& noise_net, const std::vector<VectorXd>& conds,
               const std::vector<VectorXd>& x0s, const NoiseSchedule& sched,
               Rng& rng) {
  if (x0s.empty()) throw std::invalid_argument("bc_loss: empty batch");
  double acc = 0.0;
  for (size_t r = 0; r < x0s.size(); ++r) {
    int i = rng.uniform_int(1, sched.n());
    VectorXd eps = rng.randn_vec(static_cast<int>(x0s[r].size()));
    VectorXd noisy = forward_noise(x0s[r], i, eps, sched);
    VectorXd pred = noise_net(noisy, conds[r], i);
    acc += (eps - pred).squaredNorm();
  }
  return acc / static_cast<double>(x0s.size());
}

// Differentiable batched version for an MLP predictor; cond may carry
// gradient. x0 rows must lie in [-1, 1].
inline ad::Var bc_loss_tape(ad::Tape& tape, Mlp& net, ad::Var cond, const Mat& x0,
                            int time_dim, const NoiseSchedule& sched, Rng& rng,
                            bool train_params = true) {
  int b = static_cast<int>(x0.rows());
  if (b == 0) throw std::invalid_argument("bc_loss_tape: empty batch");
  int d = static_cast<int>(x0.cols());
  Mat noisy(b, d);
  Mat eps(b, d);
  std::vector<int> steps(b);
  for (int r = 0; r < b; ++r) {
    steps[r] = rng.uniform_int(1, sched.n());
    for (int c = 0; c < d; ++c) eps(r, c) = rng.normal();
    double ab = sched.alpha_bar(steps[r]);
    noisy.row(r) = std::sqrt(ab) * x0.row(r) + std::sqrt(1.0 - ab) * eps.row(r);
  }
  ad::Var in = tape.concat_cols({tape.constant(noisy), cond,
                                 tape.constant(time_embedding_rows(steps, time_dim))});
  ad::Var pred = net.forward(tape, in, train_params);
  // per-record squared-norm mean (mse averages over elements, so scale by d)
  return tape.scale(tape.mse(pred, eps), static_cast<double>(d));
}

}  // namespace hdp::diffusion

#include <gtest/gtest.h>

#include <numeric>

#include "hdp/envs/registry.hpp"
#include "hdp/trainer.hpp"

using namespace hdp;
using Eigen::VectorXd;
using ad::Mat;

namespace {

TrainConfig small_config() {
  TrainConfig tc;
  tc.batch_size = 16;
  tc.buffer_capacity = 1024;
  tc.n_diffusion = 5;
  tc.d_e = 3;
  tc.warmup_steps = 0;
  tc.total_steps = 100;
  return tc;
}

PolicyNetworkConfig small_net() {
  PolicyNetworkConfig nc;
  nc.hidden = {8};
  nc.time_embed_dim = 4;
  return nc;
}

Agent make_agent(uint64_t seed = 0, TrainConfig tc = small_config()) {
  auto env = envs::make_env("hard_move_n4_single_step");
  Rng rng(seed);
  return Agent(env->spec(), tc, small_net(), rng);
}

void fill_buffer(ReplayBuffer& buf, Agent& agent, int n, Rng& rng) {
  auto env = envs::make_env(agent.env_spec.id);
  VectorXd s = env->reset(rng.engine()());
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.s = s;
    t.e = rng.rand_uniform_mat(agent.latent_dim(), 1, -1.0, 1.0).col(0);
    if (agent.cfg.no_codebook) {
      Eigen::Index best = 0;
      t.e.maxCoeff(&best);
      t.k = static_cast<int>(best);
    } else {
      t.k = quantize_index(agent.codebook, t.e);
    }
    t.a_c = rng.rand_uniform_mat(agent.env_spec.action_dim, 1, -1.0, 1.0).col(0);
    auto sr = env->step({t.k, t.a_c});
    t.r = sr.r;
    t.s_next = sr.s_next;
    t.done = sr.done;
    buf.push(t);
    s = sr.done ? env->reset(rng.engine()()) : sr.s_next;
  }
}

std::vector<Mat> snapshot(const Mlp& net) {
  std::vector<Mat> v;
  for (const auto& w : net.weights) v.push_back(w.value);
  for (const auto& b : net.biases) v.push_back(b.value);
  return v;
}

bool changed(const Mlp& net, const std::vector<Mat>& snap) {
  size_t i = 0;
  for (const auto& w : net.weights)
    if ((w.value - snap[i++]).cwiseAbs().maxCoeff() > 0) return true;
  for (const auto& b : net.biases)
    if ((b.value - snap[i++]).cwiseAbs().maxCoeff() > 0) return true;
  return false;
}

void make_constant(Mlp& net, double c) {
  net.weights.back().value.setZero();
  net.biases.back().value.setConstant(c);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    int n = static_cast<int>(v.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    int i = 0;
    while (i < n) {  // average ranks over ties
      int j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = (i + j) / 2.0;
      for (int t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= rx.size();
  my /= ry.size();
  double num = 0, dx = 0, dy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

}  // namespace

TEST(Act, RangeAndDeterminism) {
  Agent agent = make_agent(1);
  Rng rng(2);
  VectorXd s(4);
  s << 0, 0, 0, 0.3;
  for (int i = 0; i < 1000; ++i) {
    ActResult a = act(agent, s, rng);
    ASSERT_GE(a.k, 0);
    ASSERT_LT(a.k, agent.env_spec.k);
    ASSERT_LE(a.a_c.cwiseAbs().maxCoeff(), 1.0);
    ASSERT_LE(a.e.cwiseAbs().maxCoeff(), 1.0);
  }
  Rng r1(7), r2(7);
  ActResult a = act(agent, s, r1);
  ActResult b = act(agent, s, r2);
  EXPECT_EQ(a.k, b.k);
  EXPECT_EQ((a.e - b.e).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.a_c - b.a_c).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Act, DeterministicAblationIgnoresRngStream) {
  TrainConfig tc = small_config();
  tc.deterministic_policy = true;
  Agent agent = make_agent(3, tc);
  VectorXd s(4);
  s << 0, 0, 0, 0.3;
  Rng r1(1), r2(999);
  ActResult a = act(agent, s, r1);
  ActResult b = act(agent, s, r2);
  EXPECT_EQ(a.k, b.k);
  EXPECT_EQ((a.a_c - b.a_c).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Act, NoCodebookArgmaxOverRawLatent) {
  TrainConfig tc = small_config();
  tc.no_codebook = true;
  Agent agent = make_agent(4, tc);
  EXPECT_EQ(agent.latent_dim(), agent.env_spec.k);
  VectorXd s(4);
  s << 0, 0, 0, 0.3;
  Rng rng(5);
  ActResult a = act(agent, s, rng);
  // the latent is the raw K-way output; k is its argmax component
  EXPECT_EQ(a.e.size(), agent.env_spec.k);
  Eigen::Index best = 0;
  a.e.maxCoeff(&best);
  EXPECT_EQ(a.k, static_cast<int>(best));
  Rng rng2(5);
  ActResult b = act(agent, s, rng2);
  EXPECT_EQ(a.k, b.k);
  EXPECT_EQ((a.e - b.e).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Alpha, HandCasesFloorAndHomogeneity) {
  Agent agent = make_agent(5);
  ReplayBuffer buf(64);
  Rng rng(6);
  fill_buffer(buf, agent, 32, rng);
  Batch b = buf.sample(16, rng);

  make_constant(agent.critic.q1, 10.0);
  make_constant(agent.critic.q2, 10.0);
  EXPECT_NEAR(alpha_coefficient(agent, b), 0.5, 1e-12);  // eta=5, mean|Q|=10

  make_constant(agent.critic.q1, 100.0);
  make_constant(agent.critic.q2, 100.0);
  EXPECT_NEAR(alpha_coefficient(agent, b), 0.05, 1e-12);  // 10x Q -> alpha/10

  make_constant(agent.critic.q1, 0.0);
  make_constant(agent.critic.q2, 0.0);
  EXPECT_NEAR(alpha_coefficient(agent, b), 5.0 / 1e-3, 1e-9);  // floor engaged
}

TEST(Updates, IsolationBetweenSteps) {
  Agent agent = make_agent(7);
  ReplayBuffer buf(64);
  Rng rng(8);
  fill_buffer(buf, agent, 32, rng);
  Batch b = buf.sample(16, rng);

  auto d_snap = snapshot(agent.pi_d.gen.net);
  auto c_snap = snapshot(agent.pi_c.gen.net);
  auto q1_snap = snapshot(agent.critic.q1);
  auto q2_snap = snapshot(agent.critic.q2);
  Mat cb_snap = agent.codebook.entries.value;

  critic_update(agent, b, rng);
  EXPECT_TRUE(changed(agent.critic.q1, q1_snap));
  EXPECT_TRUE(changed(agent.critic.q2, q2_snap));
  EXPECT_FALSE(changed(agent.pi_d.gen.net, d_snap));
  EXPECT_FALSE(changed(agent.pi_c.gen.net, c_snap));
  EXPECT_EQ((agent.codebook.entries.value - cb_snap).cwiseAbs().maxCoeff(), 0.0);
  q1_snap = snapshot(agent.critic.q1);
  q2_snap = snapshot(agent.critic.q2);

  step1_discrete_update(agent, b, 0.1, rng);
  EXPECT_TRUE(changed(agent.pi_d.gen.net, d_snap));
  EXPECT_FALSE(changed(agent.pi_c.gen.net, c_snap));
  EXPECT_FALSE(changed(agent.critic.q1, q1_snap));
  EXPECT_EQ((agent.codebook.entries.value - cb_snap).cwiseAbs().maxCoeff(), 0.0);
  d_snap = snapshot(agent.pi_d.gen.net);

  step2_continuous_codebook_update(agent, b, 0.1, rng);
  EXPECT_TRUE(changed(agent.pi_c.gen.net, c_snap));
  EXPECT_FALSE(changed(agent.pi_d.gen.net, d_snap));
  EXPECT_FALSE(changed(agent.critic.q1, q1_snap));
  EXPECT_FALSE(changed(agent.critic.q2, q2_snap));
}

TEST(Updates, Step1LeavesNoGradientOnOtherComponents) {
  Agent agent = make_agent(9);
  ReplayBuffer buf(64);
  Rng rng(10);
  fill_buffer(buf, agent, 32, rng);
  Batch b = buf.sample(16, rng);

  agent.pi_c.gen.net.zero_grad();
  agent.codebook.entries.zero_grad();
  agent.critic.q1.zero_grad();
  agent.critic.q2.zero_grad();
  step1_discrete_update(agent, b, 0.5, rng);
  EXPECT_TRUE(agent.pi_c.gen.net.grads_are_zero());
  EXPECT_EQ(agent.codebook.entries.grad.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(agent.critic.q1.grads_are_zero());
  EXPECT_TRUE(agent.critic.q2.grads_are_zero());
}

TEST(Updates, Step2LeavesNoGradientOnDiscretePolicyOrCritic) {
  Agent agent = make_agent(11);
  ReplayBuffer buf(64);
  Rng rng(12);
  fill_buffer(buf, agent, 32, rng);
  Batch b = buf.sample(16, rng);

  agent.pi_d.gen.net.zero_grad();
  agent.critic.q1.zero_grad();
  agent.critic.q2.zero_grad();
  step2_continuous_codebook_update(agent, b, 0.5, rng);
  EXPECT_TRUE(agent.pi_d.gen.net.grads_are_zero());
  EXPECT_TRUE(agent.critic.q1.grads_are_zero());
  EXPECT_TRUE(agent.critic.q2.grads_are_zero());
}

TEST(Updates, UnselectedCodebookRowsUntouched) {
  // single denoising step keeps most sampled actions strictly inside the
  // clamp, so at least one selected row must receive gradient
  TrainConfig tc = small_config();
  tc.n_diffusion = 1;
  Agent agent = make_agent(13, tc);
  ReplayBuffer buf(64);
  Rng rng(14);
  fill_buffer(buf, agent, 32, rng);
  Batch b = buf.sample(16, rng);

  Mat before = agent.codebook.entries.value;
  IterationMetrics m;
  step2_continuous_codebook_update(agent, b, 0.5, rng, &m);
  ASSERT_EQ(static_cast<int>(m.selection_histogram.size()), agent.env_spec.k);
  bool some_unselected = false, some_selected_grad = false;
  for (int k = 0; k < agent.env_spec.k; ++k) {
    if (m.selection_histogram[k] == 0) {
      some_unselected = true;
      EXPECT_EQ(agent.codebook.entries.grad.row(k).cwiseAbs().maxCoeff(), 0.0);
      EXPECT_EQ((agent.codebook.entries.value.row(k) - before.row(k)).cwiseAbs().maxCoeff(),
                0.0);
    } else if (agent.codebook.entries.grad.row(k).cwiseAbs().maxCoeff() > 0.0) {
      some_selected_grad = true;
    }
  }
  EXPECT_TRUE(some_unselected);  // batch 16 over K=16 rows leaves gaps
  EXPECT_TRUE(some_selected_grad);
}

TEST(TrainIteration, PhaseOrderingObserved) {
  Agent agent = make_agent(15);
  ReplayBuffer buf(64);
  Rng rng(16);
  fill_buffer(buf, agent, 32, rng);

  auto d0 = snapshot(agent.pi_d.gen.net);
  auto c0 = snapshot(agent.pi_c.gen.net);
  std::vector<std::string> phases;
  bool d_changed_at_step1 = false, c_unchanged_at_step1 = false;
  train_iteration(agent, buf, rng, [&](const std::string& phase) {
    phases.push_back(phase);
    if (phase == "step1") {
      d_changed_at_step1 = changed(agent.pi_d.gen.net, d0);
      c_unchanged_at_step1 = !changed(agent.pi_c.gen.net, c0);
    }
  });
  ASSERT_EQ(phases.size(), 4u);
  EXPECT_EQ(phases[0], "critic");
  EXPECT_EQ(phases[1], "step1");
  EXPECT_EQ(phases[2], "step2");
  EXPECT_EQ(phases[3], "targets");
  EXPECT_TRUE(d_changed_at_step1);
  EXPECT_TRUE(c_unchanged_at_step1);
}

TEST(TrainIteration, ZeroLearningRatesAreNoOp) {
  TrainConfig tc = small_config();
  tc.lr_discrete = tc.lr_continuous = tc.lr_codebook = tc.lr_critic = 0.0;
  Agent agent = make_agent(17, tc);
  ReplayBuffer buf(64);
  Rng rng(18);
  fill_buffer(buf, agent, 32, rng);

  auto d0 = snapshot(agent.pi_d.gen.net);
  auto c0 = snapshot(agent.pi_c.gen.net);
  auto q0 = snapshot(agent.critic.q1);
  Mat cb0 = agent.codebook.entries.value;
  auto qt0 = snapshot(agent.critic.q1_target);
  IterationMetrics m = train_iteration(agent, buf, rng);
  EXPECT_FALSE(changed(agent.pi_d.gen.net, d0));
  EXPECT_FALSE(changed(agent.pi_c.gen.net, c0));
  EXPECT_FALSE(changed(agent.critic.q1, q0));
  EXPECT_EQ((agent.codebook.entries.value - cb0).cwiseAbs().maxCoeff(), 0.0);
  // targets polyak toward identical online nets -> also unchanged
  EXPECT_FALSE(changed(agent.critic.q1_target, qt0));
  EXPECT_GE(m.critic_loss, 0.0);
  EXPECT_GT(m.alpha, 0.0);
}

TEST(TrainIteration, SeedDeterminism) {
  auto run = [](uint64_t seed) {
    TrainConfig tc = small_config();
    tc.seed = seed;
    Agent agent = make_agent(seed, tc);
    ReplayBuffer buf(128);
    Rng rng(seed);
    fill_buffer(buf, agent, 64, rng);
    std::vector<double> stream;
    for (int i = 0; i < 5; ++i) {
      IterationMetrics m = train_iteration(agent, buf, rng);
      stream.push_back(m.critic_loss);
      stream.push_back(m.step1_loss);
      stream.push_back(m.step2_loss);
      stream.push_back(m.alpha);
    }
    return stream;
  };
  auto a = run(21), b = run(21);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Bandit, Step1MovesLatentTowardQOptimum) {
  Agent agent = make_agent(23);
  ReplayBuffer buf(64);
  Rng rng(24);
  fill_buffer(buf, agent, 32, rng);
  Batch b = buf.sample(16, rng);

  VectorXd target = VectorXd::Constant(agent.cfg.d_e, 0.6);
  Mat target_rows = target.transpose().replicate(16, 1);
  for (int r = 0; r < 16; ++r) b.e.row(r) = target.transpose();  // bc agrees

  auto qfn = [&](ad::Tape& t, const Mat&, ad::Var e, ad::Var) {
    return t.scale(t.square(t.add_const(e, -target_rows)), -1.0);
  };
  auto mean_dist = [&] {
    Rng probe(25);
    Mat e = agent.pi_d.gen.sample_batch(b.s, probe);
    return (e.rowwise() - target.transpose()).rowwise().norm().mean();
  };
  double before = mean_dist();
  agent.opt_d.lr = 1e-3;
  // the untrained sampler starts heavily clamp-saturated, so early gradients
  // are sparse; give it room to desaturate
  for (int i = 0; i < 1000; ++i) step1_discrete_update(agent, b, 1.0, rng, qfn);
  EXPECT_LT(mean_dist(), before * 0.5);
}

TEST(Bandit, Step2MovesActionTowardQOptimum) {
  Agent agent = make_agent(26);
  ReplayBuffer buf(64);
  Rng rng(27);
  fill_buffer(buf, agent, 32, rng);
  Batch b = buf.sample(16, rng);

  double target = -0.4;
  for (int r = 0; r < 16; ++r) b.a_c(r, 0) = target;  // bc agrees
  Mat target_rows = Mat::Constant(16, 1, target);
  auto qfn = [&](ad::Tape& t, const Mat&, ad::Var, ad::Var a) {
    return t.scale(t.square(t.add_const(a, -target_rows)), -1.0);
  };
  auto mean_dist = [&] {
    Rng probe(28);
    double acc = 0;
    for (int r = 0; r < 16; ++r) {
      VectorXd s = b.s.row(r).transpose();
      VectorXd e = b.e.row(r).transpose();
      auto [k, row] = quantize(agent.codebook, e);
      acc += std::abs(sample_action(agent.pi_c, s, row, probe)(0) - target);
    }
    return acc / 16;
  };
  double before = mean_dist();
  agent.opt_c.lr = 1e-3;
  agent.opt_cb.lr = 0.0;  // hold the codebook still for a clean measurement
  for (int i = 0; i < 1000; ++i) step2_continuous_codebook_update(agent, b, 1.0, rng, qfn);
  EXPECT_LT(mean_dist(), before * 0.5);
}

TEST(Codebook, OptimalCodewordSelectionFrequencyTrendsUp) {
  Agent agent = make_agent(29);
  ReplayBuffer buf(64);
  Rng rng(30);
  fill_buffer(buf, agent, 32, rng);
  Batch b = buf.sample(16, rng);

  // codeword 0 is strictly Q-optimal: Q rewards latents near row 0
  VectorXd star = agent.codebook.row(0);
  Mat star_rows = star.transpose().replicate(16, 1);
  for (int r = 0; r < 16; ++r) b.e.row(r) = star.transpose();
  auto qfn = [&](ad::Tape& t, const Mat&, ad::Var e, ad::Var) {
    return t.scale(t.square(t.add_const(e, -star_rows)), -1.0);
  };

  agent.opt_d.lr = 1e-3;
  std::vector<double> steps, freqs;
  for (int ck = 0; ck < 25; ++ck) {
    for (int i = 0; i < 60; ++i) step1_discrete_update(agent, b, 1.0, rng, qfn);
    Rng probe(31);
    Mat e = agent.pi_d.gen.sample_batch(Mat::Zero(64, 4).rowwise() + b.s.row(0), probe);
    auto idx = quantize_batch(agent.codebook, e);
    double hits = 0;
    for (int k : idx) hits += k == 0 ? 1.0 : 0.0;
    steps.push_back(ck);
    freqs.push_back(hits / 64.0);
  }
  EXPECT_GT(spearman(steps, freqs), 0.0);
  EXPECT_GE(freqs.back(), freqs.front());
}

TEST(Updates, NoCodebookIterationLeavesCodebookUntouched) {
  TrainConfig tc = small_config();
  tc.no_codebook = true;
  Agent agent = make_agent(33, tc);
  Mat before = agent.codebook.entries.value;

  ReplayBuffer buf(64);
  Rng rng(34);
  fill_buffer(buf, agent, 32, rng);
  IterationMetrics m = train_iteration(agent, buf, rng);
  EXPECT_EQ((agent.codebook.entries.value - before).cwiseAbs().maxCoeff(), 0.0);
  // the selection histogram still tracks the argmax indices
  long total = std::accumulate(m.selection_histogram.begin(),
                               m.selection_histogram.end(), 0L);
  EXPECT_EQ(total, tc.batch_size);
}

TEST(Config, ValidationRejectsBadValues) {
  TrainConfig tc = small_config();
  tc.gamma = 1.0;
  EXPECT_THROW(tc.validate(), std::invalid_argument);
  tc = small_config();
  tc.warmup_steps = tc.total_steps + 1;
  EXPECT_THROW(tc.validate(), std::invalid_argument);
  tc = small_config();
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), std::invalid_argument);
}

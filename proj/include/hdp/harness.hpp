#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hdp/config.hpp"
#include "hdp/envs/registry.hpp"
#include "hdp/serialize.hpp"
#include "hdp/trainer.hpp"

namespace hdp {

namespace fs = std::filesystem;

struct EvalResult {
  long step = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
};

struct EvalReport {
  std::vector<EvalResult> evals;

  // the paper-style per-run score: mean success rate of the final `w`
  // evaluations
  double final_window_avg(int w = 5) const {
    if (evals.empty()) return 0.0;
    int n = std::min<int>(w, static_cast<int>(evals.size()));
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += evals[evals.size() - 1 - i].success_rate;
    return acc / n;
  }
};

struct ModeRow {
  int k = 0;
  Eigen::Vector2d base_direction{0, 0};
  double frequency = 0.0;
  double action_mean = 0.0;
  double action_std = 0.0;
};

struct ModeReport {
  int trials = 0;
  std::vector<ModeRow> rows;  // sorted by frequency, descending
};

// ---- checkpoints ----

inline void save_checkpoint(const Agent& agent, const RunConfig& cfg, long step,
                            const Rng& rng, const std::string& path) {
  json j{{"schema_version", kCheckpointSchemaVersion},
         {"step", step},
         {"config", to_json(cfg)},
         {"config_hash", config_hash(cfg)},
         {"schedule_betas", vec_to_json(agent.sched.betas)},
         {"params", agent_params_to_json(agent)},
         {"selection_counts", agent.selection_counts},
         {"rng_state", rng.save_state()}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

struct Checkpoint {
  RunConfig cfg;
  Agent agent;
  long step = 0;
  std::string rng_state;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j = json::parse(in);
  if (j.at("schema_version").get<int>() != kCheckpointSchemaVersion)
    throw std::runtime_error("unsupported checkpoint schema version");
  Checkpoint ck;
  ck.cfg = run_config_from_json(j.at("config"));
  Rng init_rng(0);
  auto env = envs::make_env(ck.cfg.env_id);
  ck.agent = Agent(env->spec(), ck.cfg.train, ck.cfg.net, init_rng, ck.cfg.schedule);
  agent_params_from_json(j.at("params"), ck.agent);
  ck.agent.selection_counts = j.at("selection_counts").get<std::vector<long>>();
  ck.step = j.at("step").get<long>();
  ck.rng_state = j.at("rng_state").get<std::string>();
  return ck;
}

// ---- evaluation ----

inline EvalResult evaluate(Agent& agent, envs::Env& env, int episodes,
                           uint64_t seed_base, long step = 0) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  Rng rng(seed_base);
  int successes = 0;
  double total_return = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    Eigen::VectorXd s = env.reset(seed_base + static_cast<uint64_t>(ep));
    bool done = false;
    while (!done) {
      ActResult a = act(agent, s, rng, /*explore=*/false);
      envs::StepResult sr = env.step({a.k, a.a_c});
      total_return += sr.r;
      if (sr.success) ++successes;
      done = sr.done;
      s = sr.s_next;
    }
  }
  EvalResult res;
  res.step = step;
  res.success_rate = static_cast<double>(successes) / episodes;
  res.mean_return = total_return / episodes;
  return res;
}

// uniform-random hybrid actions; the floor baseline
inline EvalResult evaluate_random_policy(envs::Env& env, int episodes,
                                         uint64_t seed_base) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  Rng rng(seed_base);
  int successes = 0;
  double total_return = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    Eigen::VectorXd s = env.reset(seed_base + static_cast<uint64_t>(ep));
    bool done = false;
    while (!done) {
      envs::HybridAction a;
      a.k = rng.uniform_int(0, env.spec().k - 1);
      a.a_c = rng.rand_uniform_mat(env.spec().action_dim, 1, -1.0, 1.0).col(0);
      envs::StepResult sr = env.step(a);
      total_return += sr.r;
      if (sr.success) ++successes;
      done = sr.done;
      s = sr.s_next;
    }
  }
  EvalResult res;
  res.success_rate = static_cast<double>(successes) / episodes;
  res.mean_return = total_return / episodes;
  return res;
}

// ---- training loop ----

inline json iteration_metrics_to_json(long step, const IterationMetrics& m) {
  return json{{"type", "train"},
              {"step", step},
              {"critic_loss", m.critic_loss},
              {"step1_loss", m.step1_loss},
              {"step2_loss", m.step2_loss},
              {"alpha", m.alpha},
              {"mean_abs_q", m.mean_abs_q}};
}

// Full train-evaluate-checkpoint loop. Returns the run directory.
inline std::string run_train(const RunConfig& cfg,
                             const std::function<void(long)>& progress = nullptr) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  fs::create_directories(cfg.out_dir + "/checkpoints");
  {
    std::ofstream cf(cfg.out_dir + "/config.json");
    if (!cf) throw std::runtime_error("unwritable output directory: " + cfg.out_dir);
    cf << to_json(cfg).dump(2) << "\n";
  }

  auto env = envs::make_env(cfg.env_id);
  const envs::EnvSpec& spec = env->spec();
  Rng rng(cfg.train.seed);
  Agent agent(spec, cfg.train, cfg.net, rng, cfg.schedule);
  ReplayBuffer buffer(cfg.train.buffer_capacity);

  std::ofstream metrics(cfg.out_dir + "/metrics.jsonl");
  EvalReport report;

  auto run_eval = [&](long step) {
    auto eval_env = envs::make_env(cfg.env_id);
    uint64_t eval_seed = cfg.train.seed * 1000003ull + static_cast<uint64_t>(step);
    EvalResult er = evaluate(agent, *eval_env, cfg.train.eval_episodes, eval_seed, step);
    report.evals.push_back(er);
    json j{{"type", "eval"},
           {"step", step},
           {"success_rate", er.success_rate},
           {"mean_return", er.mean_return},
           {"selection_counts", agent.selection_counts}};
    metrics << j.dump() << "\n";
    save_checkpoint(agent, cfg, step, rng,
                    cfg.out_dir + "/checkpoints/ckpt_" + std::to_string(step) + ".json");
  };

  Eigen::VectorXd s = env->reset(rng.engine()());
  for (long step = 1; step <= cfg.train.total_steps; ++step) {
    Transition t;
    t.s = s;
    if (step <= cfg.train.warmup_steps) {
      // warmup: random latent (its quantization -- or its argmax, without
      // the codebook -- picks the discrete action) and uniform continuous
      // parameters; argmax of iid uniform components is uniform over K
      t.e = rng.rand_uniform_mat(agent.latent_dim(), 1, -1.0, 1.0).col(0);
      if (cfg.train.no_codebook) {
        Eigen::Index best = 0;
        t.e.maxCoeff(&best);
        t.k = static_cast<int>(best);
      } else {
        t.k = quantize_index(agent.codebook, t.e);
      }
      t.a_c = rng.rand_uniform_mat(spec.action_dim, 1, -1.0, 1.0).col(0);
    } else {
      ActResult a = act(agent, s, rng, /*explore=*/true);
      t.e = a.e;
      t.k = a.k;
      t.a_c = a.a_c;
    }
    envs::StepResult sr = env->step({t.k, t.a_c});
    t.r = sr.r;
    t.s_next = sr.s_next;
    t.done = sr.done;
    buffer.push(std::move(t));
    s = sr.done ? env->reset(rng.engine()()) : sr.s_next;

    if (step > cfg.train.warmup_steps &&
        buffer.size() >= static_cast<size_t>(cfg.train.batch_size) &&
        step % cfg.train.update_every == 0) {
      IterationMetrics m = train_iteration(agent, buffer, rng);
      metrics << iteration_metrics_to_json(step, m).dump() << "\n";
    }
    if (step % cfg.train.eval_interval == 0) run_eval(step);
    if (progress) progress(step);
  }
  if (cfg.train.total_steps % cfg.train.eval_interval != 0)
    run_eval(cfg.train.total_steps);
  metrics.close();

  save_checkpoint(agent, cfg, cfg.train.total_steps, rng,
                  cfg.out_dir + "/checkpoints/final.json");
  {
    json jr = json::array();
    for (const auto& e : report.evals)
      jr.push_back(json{{"step", e.step},
                        {"success_rate", e.success_rate},
                        {"mean_return", e.mean_return}});
    std::ofstream er(cfg.out_dir + "/eval_report.json");
    er << json{{"evals", jr}, {"final_window_avg", report.final_window_avg()}}.dump(2)
       << "\n";
  }
  {
    std::ofstream mf(cfg.out_dir + "/manifest.json");
    mf << json{{"schema_version", kCheckpointSchemaVersion},
               {"config", to_json(cfg)},
               {"config_hash", config_hash(cfg)},
               {"param_hash", param_hash(agent)},
               {"env_id", cfg.env_id},
               {"num_evals", report.evals.size()}}
              .dump(2)
       << "\n";
  }
  return cfg.out_dir;
}

inline EvalReport read_eval_report(const std::string& run_dir) {
  std::ifstream in(run_dir + "/eval_report.json");
  if (!in) throw std::runtime_error("missing eval_report.json in " + run_dir);
  json j = json::parse(in);
  EvalReport r;
  for (const auto& e : j.at("evals"))
    r.evals.push_back(EvalResult{e.at("step").get<long>(),
                                 e.at("success_rate").get<double>(),
                                 e.at("mean_return").get<double>()});
  return r;
}

// paper-style aggregation: per-run score = final-5 average; report
// mean +- std over runs
inline std::pair<double, double> aggregate_final_window(
    const std::vector<std::string>& run_dirs, int window = 5) {
  if (run_dirs.empty()) throw std::invalid_argument("no run directories");
  std::vector<double> scores;
  for (const auto& d : run_dirs)
    scores.push_back(read_eval_report(d).final_window_avg(window));
  double mean = 0.0;
  for (double v : scores) mean += v;
  mean /= scores.size();
  double var = 0.0;
  for (double v : scores) var += (v - mean) * (v - mean);
  var = scores.size() > 1 ? var / (scores.size() - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

// ---- mode analysis (single-step Hard Move) ----

inline ModeReport analyze_modes(Agent& agent, const std::string& env_id, int trials,
                                uint64_t seed_base) {
  auto env = envs::make_env(env_id);
  if (env->spec().horizon != 1 || env_id.rfind("hard_move_", 0) != 0)
    throw std::invalid_argument("analyze_modes requires a single-step hard_move env");
  int n = 0;
  while ((1 << n) < env->spec().k) ++n;

  Rng rng(seed_base);
  std::map<int, std::vector<double>> by_mask;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd s = env->reset(seed_base + static_cast<uint64_t>(trial));
    ActResult a = act(agent, s, rng, /*explore=*/false);
    by_mask[a.k].push_back(a.a_c(0));
  }

  ModeReport report;
  report.trials = trials;
  for (const auto& [k, actions] : by_mask) {
    ModeRow row;
    row.k = k;
    row.base_direction = envs::hard_move_base_direction(envs::mask_bits(k, n));
    row.frequency = static_cast<double>(actions.size()) / trials;
    double mean = 0.0;
    for (double c : actions) mean += c;
    mean /= actions.size();
    double var = 0.0;
    for (double c : actions) var += (c - mean) * (c - mean);
    var /= actions.size();
    row.action_mean = mean;
    row.action_std = std::sqrt(var);
    report.rows.push_back(row);
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const ModeRow& a, const ModeRow& b) {
              return a.frequency != b.frequency ? a.frequency > b.frequency
                                                : a.k < b.k;
            });
  return report;
}

inline std::string mode_report_csv(const ModeReport& r) {
  std::ostringstream os;
  os << "mask,base_dir_x,base_dir_y,frequency,action_mean,action_std\n";
  for (const auto& row : r.rows)
    os << row.k << "," << row.base_direction(0) << "," << row.base_direction(1)
       << "," << row.frequency << "," << row.action_mean << "," << row.action_std
       << "\n";
  return os.str();
}

inline std::string codebook_csv(const Agent& agent) {
  std::ostringstream os;
  os << "row,selection_count";
  for (int c = 0; c < agent.codebook.d_e(); ++c) os << ",e" << c;
  os << "\n";
  for (int k = 0; k < agent.codebook.k(); ++k) {
    os << k << "," << agent.selection_counts[k];
    for (int c = 0; c < agent.codebook.d_e(); ++c)
      os << "," << agent.codebook.entries.value(k, c);
    os << "\n";
  }
  return os.str();
}

// ---- learning-curve plot (SVG) ----

struct Curve {
  std::vector<long> steps;
  std::vector<double> values;
};

inline Curve read_eval_curve(const std::string& run_dir, int smooth_window = 5) {
  std::ifstream in(run_dir + "/metrics.jsonl");
  if (!in) throw std::runtime_error("missing metrics.jsonl in " + run_dir);
  Curve c;
  std::string line;
  std::vector<double> raw;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.at("type") != "eval") continue;
    raw.push_back(j.at("success_rate").get<double>());
    c.steps.push_back(j.at("step").get<long>());
  }
  // trailing moving average
  for (size_t i = 0; i < raw.size(); ++i) {
    size_t lo = i + 1 >= static_cast<size_t>(smooth_window) ? i + 1 - smooth_window : 0;
    double acc = 0.0;
    for (size_t k = lo; k <= i; ++k) acc += raw[k];
    c.values.push_back(acc / (i - lo + 1));
  }
  return c;
}

// success-rate-vs-steps with a +-1 std band across runs; smoothing window 5
// is stated in the footer
inline void plot_runs(const std::vector<std::string>& run_dirs,
                      const std::string& out_path, int smooth_window = 5) {
  if (run_dirs.empty()) throw std::invalid_argument("plot: no run directories");
  std::vector<Curve> curves;
  for (const auto& d : run_dirs) curves.push_back(read_eval_curve(d, smooth_window));
  size_t npts = curves[0].steps.size();
  for (const auto& c : curves) npts = std::min(npts, c.steps.size());
  if (npts == 0) throw std::runtime_error("plot: no evaluation records");

  std::vector<double> mean(npts, 0.0), sd(npts, 0.0);
  for (size_t i = 0; i < npts; ++i) {
    for (const auto& c : curves) mean[i] += c.values[i];
    mean[i] /= curves.size();
    for (const auto& c : curves) sd[i] += (c.values[i] - mean[i]) * (c.values[i] - mean[i]);
    sd[i] = curves.size() > 1 ? std::sqrt(sd[i] / (curves.size() - 1)) : 0.0;
  }

  const double w = 640, h = 420, ml = 60, mr = 20, mt = 20, mb = 60;
  double xmax = static_cast<double>(curves[0].steps[npts - 1]);
  auto px = [&](double step) { return ml + (w - ml - mr) * (step / xmax); };
  auto py = [&](double v) { return h - mb - (h - mt - mb) * v; };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
      << h - mb << "' stroke='black'/>\n";
  svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  if (curves.size() > 1) {
    svg << "<polygon fill='#fdd' stroke='none' points='";
    for (size_t i = 0; i < npts; ++i)
      svg << px(curves[0].steps[i]) << "," << py(std::min(1.0, mean[i] + sd[i])) << " ";
    for (size_t i = npts; i-- > 0;)
      svg << px(curves[0].steps[i]) << "," << py(std::max(0.0, mean[i] - sd[i])) << " ";
    svg << "'/>\n";
  }
  svg << "<polyline fill='none' stroke='#c00' stroke-width='2' points='";
  for (size_t i = 0; i < npts; ++i)
    svg << px(curves[0].steps[i]) << "," << py(mean[i]) << " ";
  svg << "'/>\n";
  svg << "<text x='" << w / 2 << "' y='" << h - 25
      << "' text-anchor='middle' font-size='13'>environment steps</text>\n";
  svg << "<text x='15' y='" << h / 2
      << "' font-size='13' transform='rotate(-90 15 " << h / 2
      << ")' text-anchor='middle'>success rate</text>\n";
  svg << "<text x='" << w / 2 << "' y='" << h - 8
      << "' text-anchor='middle' font-size='10'>mean of " << curves.size()
      << " run(s), band = +-1 std, smoothing window = " << smooth_window
      << " evaluations</text>\n</svg>\n";

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write plot: " + out_path);
  out << svg.str();
}

}  // namespace hdp

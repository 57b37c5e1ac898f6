#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hdp/codebook.hpp"
#include "hdp/critic.hpp"
#include "hdp/nets.hpp"
#include "hdp/policies.hpp"
#include "hdp/schedule.hpp"
#include "hdp/trainer.hpp"

namespace hdp {

using json = nlohmann::json;

inline json mat_to_json(const ad::Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ad::Mat mat_from_json(const json& j) {
  int rows = static_cast<int>(j.size());
  int cols = rows ? static_cast<int>(j[0].size()) : 0;
  ad::Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

inline json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

inline json param_to_json(const ad::Param& p) {
  return json{{"value", mat_to_json(p.value)},
              {"m", mat_to_json(p.m)},
              {"v", mat_to_json(p.v)},
              {"adam_step", p.adam_step}};
}

inline void param_from_json(const json& j, ad::Param& p) {
  p.value = mat_from_json(j.at("value"));
  p.m = mat_from_json(j.at("m"));
  p.v = mat_from_json(j.at("v"));
  p.adam_step = j.at("adam_step").get<long>();
  p.grad = ad::Mat::Zero(p.value.rows(), p.value.cols());
}

inline json mlp_to_json(const Mlp& net) {
  json layers = json::array();
  for (size_t l = 0; l < net.weights.size(); ++l)
    layers.push_back(json{{"w", param_to_json(net.weights[l])},
                          {"b", param_to_json(net.biases[l])}});
  return json{{"layers", std::move(layers)},
              {"activation", to_string(net.activation)},
              {"in_dim", net.in_dim},
              {"out_dim", net.out_dim}};
}

inline void mlp_from_json(const json& j, Mlp& net) {
  const json& layers = j.at("layers");
  if (layers.size() != net.weights.size())
    throw std::runtime_error("checkpoint layer count mismatch");
  for (size_t l = 0; l < layers.size(); ++l) {
    param_from_json(layers[l].at("w"), net.weights[l]);
    param_from_json(layers[l].at("b"), net.biases[l]);
  }
}

// ---- configs ----

inline json to_json(const PolicyNetworkConfig& c) {
  return json{{"hidden", c.hidden},
              {"critic_hidden", c.critic_hidden},
              {"time_embed_dim", c.time_embed_dim},
              {"activation", to_string(c.activation)}};
}

inline PolicyNetworkConfig policy_network_config_from_json(const json& j) {
  PolicyNetworkConfig c;
  if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<int>>();
  if (j.contains("critic_hidden"))
    c.critic_hidden = j.at("critic_hidden").get<std::vector<int>>();
  if (j.contains("time_embed_dim")) c.time_embed_dim = j.at("time_embed_dim").get<int>();
  if (j.contains("activation"))
    c.activation = activation_from_string(j.at("activation").get<std::string>());
  c.validate();
  return c;
}

inline json to_json(const ScheduleConfig& c) {
  return json{{"kind", to_string(c.kind)},
              {"beta_start", c.beta_start},
              {"beta_end", c.beta_end}};
}

inline ScheduleConfig schedule_config_from_json(const json& j) {
  ScheduleConfig c;
  if (j.contains("kind")) c.kind = schedule_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("beta_start")) c.beta_start = j.at("beta_start").get<double>();
  if (j.contains("beta_end")) c.beta_end = j.at("beta_end").get<double>();
  return c;
}

inline json to_json(const TrainConfig& c) {
  return json{{"gamma", c.gamma},
              {"eta", c.eta},
              {"tau", c.tau},
              {"batch_size", c.batch_size},
              {"buffer_capacity", c.buffer_capacity},
              {"lr_discrete", c.lr_discrete},
              {"lr_continuous", c.lr_continuous},
              {"lr_codebook", c.lr_codebook},
              {"lr_critic", c.lr_critic},
              {"n_diffusion", c.n_diffusion},
              {"d_e", c.d_e},
              {"total_steps", c.total_steps},
              {"warmup_steps", c.warmup_steps},
              {"update_every", c.update_every},
              {"eval_interval", c.eval_interval},
              {"eval_episodes", c.eval_episodes},
              {"exploration_noise", c.exploration_noise},
              {"latent_epsilon", c.latent_epsilon},
              {"deterministic_policy", c.deterministic_policy},
              {"no_codebook", c.no_codebook},
              {"concurrent_update", c.concurrent_update},
              {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("gamma", c.gamma);
  get("eta", c.eta);
  get("tau", c.tau);
  get("batch_size", c.batch_size);
  get("buffer_capacity", c.buffer_capacity);
  get("lr_discrete", c.lr_discrete);
  get("lr_continuous", c.lr_continuous);
  get("lr_codebook", c.lr_codebook);
  get("lr_critic", c.lr_critic);
  get("n_diffusion", c.n_diffusion);
  get("d_e", c.d_e);
  get("total_steps", c.total_steps);
  get("warmup_steps", c.warmup_steps);
  get("update_every", c.update_every);
  get("eval_interval", c.eval_interval);
  get("eval_episodes", c.eval_episodes);
  get("exploration_noise", c.exploration_noise);
  get("latent_epsilon", c.latent_epsilon);
  get("deterministic_policy", c.deterministic_policy);
  get("no_codebook", c.no_codebook);
  get("concurrent_update", c.concurrent_update);
  get("seed", c.seed);
  c.validate();
  return c;
}

// FNV-1a over a string; used for config and parameter content hashes.
inline std::string content_hash(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---- agent checkpoints ----

inline constexpr int kCheckpointSchemaVersion = 1;

inline json agent_params_to_json(const Agent& agent) {
  json j{{"pi_d", mlp_to_json(agent.pi_d.gen.net)},
         {"pi_c", mlp_to_json(agent.pi_c.gen.net)},
         {"pi_d_target", mlp_to_json(agent.pi_d_target.gen.net)},
         {"pi_c_target", mlp_to_json(agent.pi_c_target.gen.net)},
         {"codebook", param_to_json(agent.codebook.entries)},
         {"critic_q1", mlp_to_json(agent.critic.q1)},
         {"critic_q2", mlp_to_json(agent.critic.q2)},
         {"critic_q1_target", mlp_to_json(agent.critic.q1_target)},
         {"critic_q2_target", mlp_to_json(agent.critic.q2_target)}};
  return j;
}

inline void agent_params_from_json(const json& j, Agent& agent) {
  mlp_from_json(j.at("pi_d"), agent.pi_d.gen.net);
  mlp_from_json(j.at("pi_c"), agent.pi_c.gen.net);
  mlp_from_json(j.at("pi_d_target"), agent.pi_d_target.gen.net);
  mlp_from_json(j.at("pi_c_target"), agent.pi_c_target.gen.net);
  param_from_json(j.at("codebook"), agent.codebook.entries);
  mlp_from_json(j.at("critic_q1"), agent.critic.q1);
  mlp_from_json(j.at("critic_q2"), agent.critic.q2);
  mlp_from_json(j.at("critic_q1_target"), agent.critic.q1_target);
  mlp_from_json(j.at("critic_q2_target"), agent.critic.q2_target);
}

inline std::string param_hash(const Agent& agent) {
  return content_hash(agent_params_to_json(agent).dump());
}

}  // namespace hdp

#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "hdp/envs/registry.hpp"
#include "hdp/serialize.hpp"

namespace hdp {

// Everything needed to reproduce a run.
struct RunConfig {
  std::string env_id;
  TrainConfig train;
  PolicyNetworkConfig net;
  ScheduleConfig schedule;
  std::string out_dir = "runs/run";

  void validate() const {
    envs::make_env(env_id);  // throws on unknown id
    train.validate();
    net.validate();
  }
};

inline json to_json(const RunConfig& c) {
  return json{{"env_id", c.env_id},
              {"train", to_json(c.train)},
              {"net", to_json(c.net)},
              {"schedule", to_json(c.schedule)},
              {"out_dir", c.out_dir}};
}

inline RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.env_id = j.at("env_id").get<std::string>();
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("net")) c.net = policy_network_config_from_json(j.at("net"));
  if (j.contains("schedule")) c.schedule = schedule_config_from_json(j.at("schedule"));
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j = json::parse(in);
  return run_config_from_json(j);
}

inline std::string config_hash(const RunConfig& c) {
  return content_hash(to_json(c).dump());
}

}  // namespace hdp

#pragma once

// Experiment configuration files: one JSON object of flat keys, same dialect
// as the graph files. Callers overlay command-line values on the parsed
// object before conversion, so flags always win.

#include <set>
#include <string>

#include "lts/detail/json_text.hpp"
#include "lts/hetero_graph.hpp"
#include "lts/trainer.hpp"

namespace lts {

inline const std::set<std::string>& train_config_keys() {
  static const std::set<std::string> keys = {"scheduler", "lambda0",    "T",          "learning_rate", "optimizer",
                                             "beta1",     "beta2",      "epsilon",    "max_epochs",    "patience",
                                             "hidden_dim", "num_layers", "seed",      "record_time", "zero_head_init"};
  return keys;
}

inline TrainConfig train_config_from_json(const detail::json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object of flat keys");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!train_config_keys().count(it.key())) throw ConfigError("config: unknown key '" + it.key() + "'");

  const auto get = [&j](const char* key) -> const json* {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  };
  const auto num = [&](const char* key, double fallback) {
    const auto* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(std::string(key) + ": expected a number");
    return v->get<double>();
  };
  const auto integer = [&](const char* key, std::int64_t fallback) {
    const auto* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
    return v->get<std::int64_t>();
  };
  const auto positive_size = [&](const char* key, std::size_t fallback) {
    const auto v = integer(key, static_cast<std::int64_t>(fallback));
    if (v < 1) throw ConfigError(std::string(key) + ": must be positive");
    return static_cast<std::size_t>(v);
  };

  TrainConfig cfg;
  std::string scheduler = "linear";
  if (const auto* v = get("scheduler")) {
    if (!v->is_string()) throw ConfigError("scheduler: expected a string");
    scheduler = v->get<std::string>();
  }
  if (scheduler != "none") {
    ScheduleConfig s;
    s.scheduler = parse_scheduler(scheduler);
    s.lambda0 = num("lambda0", 0.25);
    s.T = integer("T", 100);
    s.validate();
    cfg.schedule = s;
  }
  if (const auto* v = get("optimizer")) {
    if (!v->is_string()) throw ConfigError("optimizer: expected a string");
    cfg.optimizer.kind = parse_optimizer(v->get<std::string>());
  }
  cfg.optimizer.learning_rate = num("learning_rate", cfg.optimizer.learning_rate);
  cfg.optimizer.beta1 = num("beta1", cfg.optimizer.beta1);
  cfg.optimizer.beta2 = num("beta2", cfg.optimizer.beta2);
  cfg.optimizer.epsilon = num("epsilon", cfg.optimizer.epsilon);
  cfg.max_epochs = integer("max_epochs", cfg.max_epochs);
  cfg.patience = integer("patience", cfg.patience);
  cfg.hidden_dim = positive_size("hidden_dim", cfg.hidden_dim);
  cfg.num_layers = positive_size("num_layers", cfg.num_layers);
  const auto seed = integer("seed", 0);
  if (seed < 0) throw ConfigError("seed: must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  if (const auto* v = get("record_time")) {
    if (!v->is_boolean()) throw ConfigError("record_time: expected true or false");
    cfg.record_time = v->get<bool>();
  }
  if (const auto* v = get("zero_head_init")) {
    if (!v->is_boolean()) throw ConfigError("zero_head_init: expected true or false");
    cfg.zero_head_init = v->get<bool>();
  }
  cfg.validate();
  return cfg;
}

inline detail::json train_config_to_json(const TrainConfig& cfg) {
  detail::json j;
  if (cfg.schedule) {
    j["scheduler"] = std::string(to_string(cfg.schedule->scheduler));
    j["lambda0"] = cfg.schedule->lambda0;
    j["T"] = cfg.schedule->T;
  } else {
    j["scheduler"] = "none";
  }
  j["optimizer"] = std::string(to_string(cfg.optimizer.kind));
  j["learning_rate"] = cfg.optimizer.learning_rate;
  j["beta1"] = cfg.optimizer.beta1;
  j["beta2"] = cfg.optimizer.beta2;
  j["epsilon"] = cfg.optimizer.epsilon;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["hidden_dim"] = cfg.hidden_dim;
  j["num_layers"] = cfg.num_layers;
  j["seed"] = cfg.seed;
  j["record_time"] = cfg.record_time;
  j["zero_head_init"] = cfg.zero_head_init;
  return j;
}

// Synthetic-graph spec file: {"node_types": [{"name", "count", "feature_dim"}],
// "relations": [{"name", "src", "dst"}], "target_type", "num_classes", "sigma",
// "p_intra", "p_inter", "train_frac", "val_frac", "test_frac"}.
inline SyntheticSpec synthetic_spec_from_json(const detail::json& j) {
  using namespace detail;
  SyntheticSpec s;
  const auto& types = as_array(require(j, "node_types", "spec"), "node_types");
  for (std::size_t i = 0; i < types.size(); ++i) {
    const auto p = "node_types[" + std::to_string(i) + "]";
    SyntheticNodeType t;
    t.name = as_string(require(types[i], "name", p), p + ".name");
    t.count = static_cast<std::size_t>(as_index(require(types[i], "count", p), p + ".count"));
    if (types[i].contains("feature_dim"))
      t.feature_dim = static_cast<std::size_t>(as_index(types[i]["feature_dim"], p + ".feature_dim"));
    s.node_types.push_back(t);
  }
  const auto& rels = as_array(require(j, "relations", "spec"), "relations");
  for (std::size_t i = 0; i < rels.size(); ++i) {
    const auto p = "relations[" + std::to_string(i) + "]";
    s.relations.push_back({as_string(require(rels[i], "name", p), p + ".name"),
                           as_string(require(rels[i], "src", p), p + ".src"),
                           as_string(require(rels[i], "dst", p), p + ".dst")});
  }
  s.target_type = as_string(require(j, "target_type", "spec"), "target_type");
  s.num_classes = static_cast<int>(as_int(require(j, "num_classes", "spec"), "num_classes"));
  const auto opt = [&j](const char* key, double& out) {
    if (j.contains(key)) out = as_double(j[key], key);
  };
  opt("sigma", s.sigma);
  opt("p_intra", s.p_intra);
  opt("p_inter", s.p_inter);
  opt("train_frac", s.train_frac);
  opt("val_frac", s.val_frac);
  opt("test_frac", s.test_frac);
  return s;
}

}  // namespace lts

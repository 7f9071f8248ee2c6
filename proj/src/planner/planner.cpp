#include "e2plan/planner/planner.hpp"

#include <nlohmann/json.hpp>

namespace e2plan::planner {

Variant parse_variant(const std::string& name) {
  if (name == "no_sym") return Variant::no_sym;
  if (name == "group_only") return Variant::group_only;
  if (name == "r2") return Variant::r2;
  if (name == "r2_group") return Variant::r2_group;
  throw ConfigError("unknown planner variant: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::no_sym: return "no_sym";
    case Variant::group_only: return "group_only";
    case Variant::r2: return "r2";
    case Variant::r2_group: return "r2_group";
  }
  throw ConfigError("invalid planner variant value");
}

void validate(const PlannerConfig& cfg) {
  if (cfg.k_iters < 1) throw ConfigError("planner k_iters must be at least 1");
  if (cfg.r_dim < 1) throw ConfigError("planner r_dim must be positive");
  if (cfg.q_size < 1) throw ConfigError("planner q_size must be positive");
  if (cfg.hidden_dim < 1) throw ConfigError("planner hidden_dim must be positive");
  if (variant_constrained(cfg.variant)) sym::parse_group(cfg.group);
}

std::string planner_config_to_json(const PlannerConfig& cfg) {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(cfg.variant);
  j["group"] = cfg.group;
  j["k_iters"] = cfg.k_iters;
  j["r_dim"] = cfg.r_dim;
  j["q_size"] = cfg.q_size;
  j["hidden_dim"] = cfg.hidden_dim;
  return j.dump();
}

PlannerConfig planner_config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("invalid planner config JSON: " + std::string(ex.what()));
  }
  PlannerConfig cfg;
  cfg.variant = parse_variant(j.at("variant").get<std::string>());
  cfg.group = j.value("group", cfg.group);
  cfg.k_iters = j.value("k_iters", cfg.k_iters);
  cfg.r_dim = j.value("r_dim", cfg.r_dim);
  cfg.q_size = j.value("q_size", cfg.q_size);
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  validate(cfg);
  return cfg;
}

}  // namespace e2plan::planner

#include "e2plan/training/training.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace e2plan::training {

void validate(const TrainConfig& cfg) {
  if (cfg.optimizer != "rmsprop") {
    throw ConfigError("unknown optimizer: " + cfg.optimizer);
  }
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.patience < 1) throw ConfigError("patience must be >= 1");
  if (cfg.loss != "mse_unit" && cfg.loss != "cosine") {
    throw ConfigError("unknown loss: " + cfg.loss);
  }
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["optimizer"] = cfg.optimizer;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["patience"] = cfg.patience;
  j["loss"] = cfg.loss;
  j["seed"] = cfg.seed;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.optimizer = j.value("optimizer", cfg.optimizer);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.loss = j.value("loss", cfg.loss);
  cfg.seed = j.value("seed", cfg.seed);
  validate(cfg);
  return cfg;
}

std::string MetricLog::to_csv() const {
  std::ostringstream out;
  out << "epoch,split,metric,value,seed\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.value);
    out << r.epoch << ',' << r.split << ',' << r.metric << ',' << buf << ','
        << r.seed << '\n';
  }
  return out.str();
}

void MetricLog::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics file: " + path.string());
  out << to_csv();
}

std::string MetricLog::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"epoch", r.epoch},
                   {"split", r.split},
                   {"metric", r.metric},
                   {"value", r.value},
                   {"seed", r.seed}});
  }
  return arr.dump();
}

std::vector<int> supervised_rows(const worlds::NavSample& s) {
  std::vector<int> rows;
  for (int i = 0; i < s.graph.num_nodes(); ++i) {
    if (s.reachable[i] && i != s.graph.goal_index) rows.push_back(i);
  }
  return rows;
}

}  // namespace e2plan::training

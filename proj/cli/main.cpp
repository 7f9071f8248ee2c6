#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "e2plan/eval/report.hpp"
#include "e2plan/eval/rollout.hpp"
#include "e2plan/planner/checkpoint.hpp"
#include "e2plan/planner/grid_vin.hpp"
#include "e2plan/planner/planner.hpp"
#include "e2plan/symmetry/representation.hpp"
#include "e2plan/training/training.hpp"
#include "e2plan/worlds/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace e2plan;

namespace {

// ---------------------------------------------------------------------------
// Experiment configuration

struct GridParams {
  int m = 15;
};

struct GraphParams {
  int n_nodes = 128;
  double map_size = 12.0;
  int k = 6;
  double obstacle_frac = 0.15;
};

struct GridVinParams {
  int k_iters = 20;
  int q_size = 4;
  int m = 0;  // 0 = grid.m on the grid task, ceil(sqrt(n_nodes)) on graphs
};

struct ExperimentConfig {
  std::string task = "grid";    // grid | graph
  std::string model = "mp_vin"; // mp_vin | grid_vin
  GridParams grid;
  GraphParams graph;
  GridVinParams grid_vin;
  int train_count = 1000;
  int val_count = 200;
  int test_count = 200;
  planner::PlannerConfig planner_cfg;
  training::TrainConfig train_cfg;
  eval::RolloutConfig rollout_cfg;
  std::vector<std::uint64_t> seeds = {0};
  std::uint64_t data_seed = 0;
  std::string output_dir = "out";
};

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
  }
}

ExperimentConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }

  reject_unknown(j,
                 {"task", "model", "grid", "graph", "grid_vin", "dataset",
                  "planner", "train", "rollout", "seeds", "data_seed",
                  "output_dir"},
                 "config");

  ExperimentConfig cfg;
  cfg.task = j.value("task", cfg.task);
  if (cfg.task != "grid" && cfg.task != "graph") {
    throw ConfigError("task must be \"grid\" or \"graph\"");
  }
  cfg.model = j.value("model", cfg.model);
  if (cfg.model != "mp_vin" && cfg.model != "grid_vin") {
    throw ConfigError("model must be \"mp_vin\" or \"grid_vin\"");
  }

  if (j.contains("grid")) {
    reject_unknown(j["grid"], {"m"}, "grid");
    cfg.grid.m = j["grid"].value("m", cfg.grid.m);
    if (cfg.grid.m < 3) throw ConfigError("grid.m must be at least 3");
  }
  if (j.contains("graph")) {
    reject_unknown(j["graph"], {"n_nodes", "map_size", "k", "obstacle_frac"},
                   "graph");
    const json& g = j["graph"];
    cfg.graph.n_nodes = g.value("n_nodes", cfg.graph.n_nodes);
    cfg.graph.map_size = g.value("map_size", cfg.graph.map_size);
    cfg.graph.k = g.value("k", cfg.graph.k);
    cfg.graph.obstacle_frac = g.value("obstacle_frac", cfg.graph.obstacle_frac);
  }
  if (j.contains("grid_vin")) {
    reject_unknown(j["grid_vin"], {"k_iters", "q_size", "m"}, "grid_vin");
    const json& g = j["grid_vin"];
    cfg.grid_vin.k_iters = g.value("k_iters", cfg.grid_vin.k_iters);
    cfg.grid_vin.q_size = g.value("q_size", cfg.grid_vin.q_size);
    cfg.grid_vin.m = g.value("m", cfg.grid_vin.m);
  }
  if (j.contains("dataset")) {
    reject_unknown(j["dataset"], {"train", "val", "test"}, "dataset");
    const json& d = j["dataset"];
    cfg.train_count = d.value("train", cfg.train_count);
    cfg.val_count = d.value("val", cfg.val_count);
    cfg.test_count = d.value("test", cfg.test_count);
    if (cfg.train_count < 1 || cfg.val_count < 1 || cfg.test_count < 1) {
      throw ConfigError("dataset split sizes must be positive");
    }
  }
  if (j.contains("planner")) {
    reject_unknown(j["planner"],
                   {"variant", "group", "k_iters", "r_dim", "q_size", "hidden_dim"},
                   "planner");
    cfg.planner_cfg = planner::planner_config_from_json(j["planner"].dump());
  }
  if (j.contains("train")) {
    reject_unknown(j["train"],
                   {"optimizer", "learning_rate", "batch_size", "epochs",
                    "patience", "loss", "seed"},
                   "train");
    cfg.train_cfg = training::train_config_from_json(j["train"]);
  }
  if (j.contains("rollout")) {
    reject_unknown(j["rollout"], {"max_steps", "starts_per_sample"}, "rollout");
    const json& r = j["rollout"];
    cfg.rollout_cfg.max_steps = r.value("max_steps", cfg.rollout_cfg.max_steps);
    cfg.rollout_cfg.starts_per_sample =
        r.value("starts_per_sample", cfg.rollout_cfg.starts_per_sample);
    if (cfg.rollout_cfg.max_steps < 0) {
      throw ConfigError("rollout.max_steps must be >= 0 (0 = default budget)");
    }
  }
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) {
      throw ConfigError("seeds must be a non-empty array");
    }
    cfg.seeds.clear();
    for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  cfg.data_seed = j.value("data_seed", cfg.data_seed);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  return cfg;
}

fs::path resolve_output_dir(const ExperimentConfig& cfg) {
  fs::path dir = cfg.output_dir;
  if (dir.is_relative()) {
    if (const char* root = std::getenv("E2PLAN_OUTPUT_ROOT")) dir = fs::path(root) / dir;
  }
  return dir;
}

void copy_config_into(const fs::path& config_path, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  fs::copy_file(config_path, out_dir / "config.json",
                fs::copy_options::overwrite_existing);
}

int effective_grid_m(const ExperimentConfig& cfg) {
  if (cfg.grid_vin.m > 0) return cfg.grid_vin.m;
  if (cfg.task == "grid") return cfg.grid.m;
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.graph.n_nodes))));
}

worlds::Dataset make_split(const ExperimentConfig& cfg, const std::string& split,
                           int count) {
  if (cfg.task == "grid") {
    return worlds::generate_grid_dataset(count, cfg.grid.m, cfg.data_seed, split);
  }
  return worlds::generate_graph_dataset(count, cfg.graph.n_nodes, cfg.graph.map_size,
                                        cfg.graph.k, cfg.graph.obstacle_frac,
                                        cfg.data_seed, split);
}

worlds::Dataset load_split(const fs::path& out_dir, const std::string& split) {
  const fs::path p = out_dir / "data" / (split + ".e2ds");
  if (!fs::exists(p)) {
    throw DataError("dataset archive missing: " + p.string() + " (run gen first)");
  }
  return worlds::load_dataset(p);
}

std::string checkpoint_name(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::string stem = cfg.model == "grid_vin"
                               ? std::string("grid_vin")
                               : planner::variant_name(cfg.planner_cfg.variant);
  return stem + "_s" + std::to_string(seed) + ".e2ck";
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_gen(const fs::path& config_path, bool force) {
  const ExperimentConfig cfg = parse_config(config_path);
  const fs::path out = resolve_output_dir(cfg);
  const fs::path data_dir = out / "data";

  const std::vector<std::pair<std::string, int>> splits = {
      {"train", cfg.train_count}, {"val", cfg.val_count}, {"test", cfg.test_count}};
  for (const auto& [split, count] : splits) {
    (void)count;
    const fs::path p = data_dir / (split + ".e2ds");
    if (fs::exists(p) && !force) {
      throw DataError("output exists: " + p.string() + " (pass --force to overwrite)");
    }
  }

  copy_config_into(config_path, out);
  fs::create_directories(data_dir);
  for (const auto& [split, count] : splits) {
    const worlds::Dataset ds = make_split(cfg, split, count);
    worlds::save_dataset(ds, data_dir / (split + ".e2ds"));
    std::cout << "wrote " << (data_dir / (split + ".e2ds")).string() << " ("
              << ds.samples.size() << " samples)\n";
  }
  return 0;
}

int cmd_train(const fs::path& config_path) {
  const ExperimentConfig cfg = parse_config(config_path);
  const fs::path out = resolve_output_dir(cfg);
  copy_config_into(config_path, out);
  const worlds::Dataset train = load_split(out, "train");
  const worlds::Dataset val = load_split(out, "val");
  fs::create_directories(out / "checkpoints");
  fs::create_directories(out / "metrics");

  for (const std::uint64_t seed : cfg.seeds) {
    training::TrainConfig tc = cfg.train_cfg;
    tc.seed = seed;
    const fs::path ck = out / "checkpoints" / checkpoint_name(cfg, seed);
    training::TrainResult res;
    if (cfg.model == "grid_vin") {
      auto m = planner::make_grid_vin<double>(cfg.grid_vin.k_iters,
                                              cfg.grid_vin.q_size, seed);
      res = training::train_grid_vin(m, train, val, tc, ck, effective_grid_m(cfg));
    } else {
      auto m = planner::make_mp_vin<double>(cfg.planner_cfg, seed);
      res = training::train_mp_vin(m, train, val, tc, ck);
    }
    const fs::path csv = out / "metrics" / ("metrics_s" + std::to_string(seed) + ".csv");
    res.log.save_csv(csv);
    std::cout << "seed " << seed << ": best val success " << res.best_val_success
              << "% at epoch " << res.best_epoch << " (" << res.epochs_run
              << " epochs run), checkpoint " << ck.string() << "\n";
  }
  return 0;
}

int cmd_eval(const fs::path& config_path, const std::string& policy) {
  const ExperimentConfig cfg = parse_config(config_path);
  const fs::path out = resolve_output_dir(cfg);
  copy_config_into(config_path, out);
  const worlds::Dataset test = load_split(out, "test");
  fs::create_directories(out / "reports");

  const int graph_size = test.samples.empty() ? 0 : test.samples.front().graph.num_nodes();
  std::vector<std::pair<std::uint64_t, eval::SuccessStats>> runs;
  std::string variant;
  std::string group = "-";

  if (policy == "oracle" || policy == "random") {
    variant = policy;
    const eval::PolicyFn fn = policy == "oracle"
                                  ? eval::oracle_policy()
                                  : eval::random_policy(cfg.rollout_cfg.seed);
    runs.emplace_back(cfg.seeds.front(), eval::success_rate(fn, test, cfg.rollout_cfg));
  } else if (policy == "model") {
    variant = cfg.model == "grid_vin"
                  ? std::string("grid_vin")
                  : planner::variant_name(cfg.planner_cfg.variant);
    if (cfg.model == "mp_vin" && planner::variant_constrained(cfg.planner_cfg.variant)) {
      group = cfg.planner_cfg.group;
    }
    for (const std::uint64_t seed : cfg.seeds) {
      const fs::path ck = out / "checkpoints" / checkpoint_name(cfg, seed);
      if (!fs::exists(ck)) throw DataError("missing checkpoint: " + ck.string());
      if (cfg.model == "grid_vin") {
        auto m = planner::load_grid_vin_checkpoint<double>(ck);
        runs.emplace_back(seed, eval::success_rate(
                                    eval::grid_vin_policy(m, effective_grid_m(cfg)),
                                    test, cfg.rollout_cfg));
      } else {
        auto m = planner::load_mp_vin_checkpoint<double>(ck);
        runs.emplace_back(seed,
                          eval::success_rate(eval::model_policy(m), test, cfg.rollout_cfg));
      }
    }
  } else {
    throw ConfigError("unknown policy: " + policy + " (model|oracle|random)");
  }

  const auto rep = eval::make_report(cfg.task, variant, group, cfg.train_count,
                                     graph_size, runs);
  const fs::path csv = out / "reports" / ("eval_" + variant + ".csv");
  eval::emit_csv({rep}, csv);
  std::cout << variant << " success rate: " << rep.mean() << "%";
  if (rep.seeds.size() > 1) std::cout << " +- " << rep.sd();
  std::cout << " (" << rep.seeds.size() << " seed" << (rep.seeds.size() == 1 ? "" : "s")
            << ", " << csv.string() << ")\n";
  return 0;
}

int cmd_audit(const fs::path& config_path) {
  const ExperimentConfig cfg = parse_config(config_path);
  const fs::path out = resolve_output_dir(cfg);
  if (cfg.model != "mp_vin") throw ConfigError("audit applies to mp_vin checkpoints");
  const worlds::Dataset test = load_split(out, "test");

  const sym::Group g = sym::parse_group(cfg.planner_cfg.group);

  // Representation sanity for the configured group: rho(ab) = rho(a) rho(b).
  double rep_violation = 0.0;
  for (const auto& rep :
       {sym::rep_trivial(g), sym::rep_standard(g), sym::rep_regular(g)}) {
    for (int a = 0; a < g.order(); ++a) {
      for (int b = 0; b < g.order(); ++b) {
        const auto ea = g.element(a);
        const auto eb = g.element(b);
        const Mat lhs = rep.matrix(g.compose(ea, eb));
        const Mat rhs = rep.matrix(ea) * rep.matrix(eb);
        rep_violation = std::max(rep_violation, (lhs - rhs).cwiseAbs().maxCoeff());
      }
    }
  }
  std::cout << "representation homomorphism violation (" << cfg.planner_cfg.group
            << "): " << rep_violation << "\n";

  double worst = 0.0;
  for (const std::uint64_t seed : cfg.seeds) {
    const fs::path ck = out / "checkpoints" / checkpoint_name(cfg, seed);
    if (!fs::exists(ck)) throw DataError("missing checkpoint: " + ck.string());
    auto m = planner::load_mp_vin_checkpoint<double>(ck);
    double seed_worst = 0.0;
    const std::size_t n_graphs = std::min<std::size_t>(4, test.samples.size());
    for (std::size_t i = 0; i < n_graphs; ++i) {
      const auto report = planner::equivariance_audit(m, test.samples[i].graph, g);
      seed_worst = std::max(seed_worst, report.max_violation);
    }
    std::cout << "seed " << seed << ": max equivariance violation " << seed_worst
              << " over " << n_graphs << " graphs x " << g.order() << " elements\n";
    worst = std::max(worst, seed_worst);
  }
  std::cout << "max violation: " << worst << "\n";
  return 0;
}

// Learning-curve plot from a metrics CSV (epoch,split,metric,value,seed):
// mean +- sd over seeds of one metric.
int plot_metrics(const std::vector<fs::path>& csvs, const std::string& metric,
                 const fs::path& out_png) {
  // epoch -> values across seeds
  std::map<int, std::vector<double>> by_epoch;
  for (const auto& csv : csvs) {
    std::ifstream in(csv);
    if (!in) throw DataError("cannot read metrics file: " + csv.string());
    std::string line;
    std::getline(in, line);
    if (line != "epoch,split,metric,value,seed") {
      throw DataError("not a metrics csv: " + csv.string());
    }
    while (std::getline(in, line)) {
      std::stringstream row(line);
      std::string epoch_s, split, name, value_s, seed_s;
      std::getline(row, epoch_s, ',');
      std::getline(row, split, ',');
      std::getline(row, name, ',');
      std::getline(row, value_s, ',');
      std::getline(row, seed_s, ',');
      if (name == metric) by_epoch[std::stoi(epoch_s)].push_back(std::stod(value_s));
    }
  }
  if (by_epoch.empty()) throw DataError("metric not found in csv: " + metric);

  eval::PlotSeries series{metric, {}};
  for (const auto& [epoch, vals] : by_epoch) {
    double m = 0.0;
    for (double v : vals) m += v;
    m /= static_cast<double>(vals.size());
    double sd = 0.0;
    if (vals.size() > 1) {
      for (double v : vals) sd += (v - m) * (v - m);
      sd = std::sqrt(sd / static_cast<double>(vals.size() - 1));
    }
    series.points.push_back({static_cast<double>(epoch), m, sd});
  }
  eval::plot_success(out_png, metric + " over training", "epoch", {series});
  std::cout << "wrote " << out_png.string() << "\n";
  return 0;
}

// Success-rate plot from eval-report CSVs: mean rows only, one series per
// (variant, group), x = dataset_size or graph_size.
int plot_reports(const std::vector<fs::path>& csvs, const std::string& x_field,
                 const fs::path& out_png) {
  std::map<std::string, std::map<double, std::pair<double, double>>> data;
  std::string task = "eval";
  for (const auto& csv : csvs) {
    std::ifstream in(csv);
    if (!in) throw DataError("cannot read report file: " + csv.string());
    std::string line;
    std::getline(in, line);
    if (line != "task,variant,group,seed,dataset_size,graph_size,success_rate,sd") {
      throw DataError("not an eval report csv: " + csv.string());
    }
    while (std::getline(in, line)) {
      std::stringstream row(line);
      std::string tsk, variant, group, seed, dsize, gsize, rate, sd;
      std::getline(row, tsk, ',');
      std::getline(row, variant, ',');
      std::getline(row, group, ',');
      std::getline(row, seed, ',');
      std::getline(row, dsize, ',');
      std::getline(row, gsize, ',');
      std::getline(row, rate, ',');
      std::getline(row, sd, ',');
      if (seed != "mean") continue;
      task = tsk;
      const double x = std::stod(x_field == "graph_size" ? gsize : dsize);
      std::string name = variant;
      if (group != "-" && !group.empty()) name += " (" + group + ")";
      data[name][x] = {std::stod(rate), sd.empty() ? 0.0 : std::stod(sd)};
    }
  }
  if (data.empty()) throw DataError("no mean rows found in report csvs");

  std::vector<eval::PlotSeries> series;
  for (const auto& [name, pts] : data) {
    eval::PlotSeries s{name, {}};
    for (const auto& [x, ms] : pts) s.points.push_back({x, ms.first, ms.second});
    series.push_back(std::move(s));
  }
  eval::plot_success(out_png, task + " success rate", x_field, series);
  std::cout << "wrote " << out_png.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"E(2)-equivariant message-passing value iteration planner"};
  app.require_subcommand(1);

  std::string config_path;
  bool force = false;
  std::string policy = "model";
  std::vector<std::string> csvs;
  std::string metric;
  std::string x_field = "dataset_size";
  std::string out_png = "plot.png";

  CLI::App* gen = app.add_subcommand("gen", "generate dataset archives");
  gen->add_option("config", config_path, "experiment config JSON")->required();
  gen->add_flag("--force", force, "overwrite existing archives");

  CLI::App* train = app.add_subcommand("train", "train one model per seed");
  train->add_option("config", config_path, "experiment config JSON")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "success rate on the test split");
  eval_cmd->add_option("config", config_path, "experiment config JSON")->required();
  eval_cmd->add_option("--policy", policy, "model|oracle|random");

  CLI::App* audit = app.add_subcommand("audit", "equivariance audit of checkpoints");
  audit->add_option("config", config_path, "experiment config JSON")->required();

  CLI::App* plot = app.add_subcommand("plot", "render CSV reports to PNG");
  plot->add_option("--csv", csvs, "input CSV file(s)")->required();
  plot->add_option("--metric", metric, "metrics-csv mode: metric name to plot");
  plot->add_option("--x", x_field, "report-csv mode: dataset_size|graph_size");
  plot->add_option("--out", out_png, "output PNG path");

  try {
    app.parse(argc, argv);
    std::vector<fs::path> csv_paths(csvs.begin(), csvs.end());
    if (gen->parsed()) return cmd_gen(config_path, force);
    if (train->parsed()) return cmd_train(config_path);
    if (eval_cmd->parsed()) return cmd_eval(config_path, policy);
    if (audit->parsed()) return cmd_audit(config_path);
    if (plot->parsed()) {
      return metric.empty() ? plot_reports(csv_paths, x_field, out_png)
                            : plot_metrics(csv_paths, metric, out_png);
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

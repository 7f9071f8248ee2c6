#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "e2plan/common.hpp"

#include "e2plan/eval/rollout.hpp"
#include "e2plan/planner/checkpoint.hpp"
#include "e2plan/planner/grid_vin.hpp"
#include "e2plan/planner/planner.hpp"
#include "e2plan/worlds/world.hpp"

namespace e2plan::training {

struct TrainConfig {
  std::string optimizer = "rmsprop";
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 30;
  int patience = 10;          // epochs without val-success improvement before stopping
  std::string loss = "mse_unit";  // "mse_unit" or "cosine"
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);
nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct MetricRow {
  int epoch;
  std::string split;
  std::string metric;
  double value;
  std::uint64_t seed;
};

struct MetricLog {
  std::vector<MetricRow> rows;

  void add(int epoch, const std::string& split, const std::string& metric,
           double value, std::uint64_t seed) {
    rows.push_back({epoch, split, metric, value, seed});
  }
  std::string to_csv() const;
  void save_csv(const std::filesystem::path& path) const;
  std::string to_json() const;  // embedded in checkpoint metrics
};

// RMSprop with Hinton's defaults: s <- 0.99 s + 0.01 g^2, w -= lr g / (sqrt(s) + 1e-8).
template <class S>
struct RmsProp {
  double lr;
  double alpha = 0.99;
  double eps = 1e-8;
  std::vector<MatX<S>> sq;

  RmsProp(const nn::ParamStore<S>& params, double lr_in) : lr(lr_in) {
    for (const auto& v : params.values) sq.push_back(MatX<S>::Zero(v.rows(), v.cols()));
  }

  void step(nn::ParamStore<S>& params) {
    for (std::size_t i = 0; i < params.values.size(); ++i) {
      const MatX<S>& g = params.grads[i];
      sq[i] = S(alpha) * sq[i] + S(1.0 - alpha) * g.array().square().matrix();
      params.values[i].array() -=
          S(lr) * g.array() / (sq[i].array().sqrt() + S(eps));
    }
  }
};

// Rows that carry a supervision signal: reachable free nodes other than the goal.
std::vector<int> supervised_rows(const worlds::NavSample& s);

// Fraction (percent) of supervised nodes whose predicted action snaps to the
// same neighbor as the label action.
template <class S>
double action_accuracy(planner::MpVin<S>& m, const worlds::Dataset& ds) {
  long total = 0;
  long hit = 0;
  for (const auto& s : ds.samples) {
    const MatX<S> pi = planner::plan(m, s.graph);
    const auto adj = eval::sorted_adjacency(s.graph);
    for (int i : supervised_rows(s)) {
      const int want = eval::snap_to_neighbor(s.graph, adj, i, s.labels(i, 0), s.labels(i, 1));
      const int got = eval::snap_to_neighbor(s.graph, adj, i, static_cast<double>(pi(i, 0)),
                                             static_cast<double>(pi(i, 1)));
      ++total;
      if (got == want && got >= 0) ++hit;
    }
  }
  return total ? 100.0 * hit / total : 0.0;
}

// Grid-VIN accuracy: argmax NEWS logit at each supervised node's cell vs the
// discretized label action.
template <class S>
double action_accuracy(planner::GridVin<S>& m, const worlds::Dataset& ds, int grid_m) {
  long total = 0;
  long hit = 0;
  for (const auto& s : ds.samples) {
    const worlds::GridProjection proj = worlds::discretize_graph_to_grid(s.graph, grid_m);
    const MatX<S> logits = planner::grid_vin_plan(m, proj.grid);
    for (int i : supervised_rows(s)) {
      const int want = static_cast<int>(worlds::action_discretize(s.labels(i, 0), s.labels(i, 1)));
      int got = 0;
      for (int a = 1; a < 4; ++a) {
        if (logits(proj.node_cell[i], a) > logits(proj.node_cell[i], got)) got = a;
      }
      ++total;
      if (got == want) ++hit;
    }
  }
  return total ? 100.0 * hit / total : 0.0;
}

struct TrainResult {
  MetricLog log;
  int best_epoch = -1;
  double best_val_success = -1.0;
  int epochs_run = 0;
};

// Supervised training on unit-action labels.  Per epoch: shuffled minibatches
// (merged into one disjoint graph each), then val action accuracy and rollout
// success.  The best-val-success model state is written to `checkpoint_path`
// (skipped when empty); training stops early after `patience` epochs without
// improvement.  A non-finite loss aborts with NumericalError.
template <class S>
TrainResult train_mp_vin(planner::MpVin<S>& m, const worlds::Dataset& train,
                         const worlds::Dataset& val, const TrainConfig& cfg,
                         const std::filesystem::path& checkpoint_path) {
  validate(cfg);
  const bool use_cosine = (cfg.loss == "cosine");
  RmsProp<S> opt(m.params, cfg.learning_rate);
  TrainResult res;

  if (cfg.epochs == 0) {
    if (!checkpoint_path.empty()) planner::save_checkpoint(m, checkpoint_path, 0, "[]");
    return res;
  }

  std::vector<int> order(train.samples.size());
  std::iota(order.begin(), order.end(), 0);
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t b0 = 0; b0 < order.size();
         b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 =
          std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      planner::PlanInput<S> in;
      in.positions.resize(0, 2);
      in.feat.resize(0, 2);
      std::vector<int> rows;
      std::vector<std::pair<int, const worlds::NavSample*>> parts;
      for (std::size_t j = b0; j < b1; ++j) {
        const worlds::NavSample& s = train.samples[order[j]];
        const int base = in.topo.n_nodes;
        planner::append_graph(in, s.graph);
        for (int r : supervised_rows(s)) rows.push_back(base + r);
        parts.emplace_back(base, &s);
      }
      if (rows.empty()) continue;
      in.refresh_edge_pos(m.pos_mode());
      MatX<S> target = MatX<S>::Zero(in.topo.n_nodes, 2);
      for (const auto& [base, sp] : parts) {
        for (int i = 0; i < sp->graph.num_nodes(); ++i) {
          target(base + i, 0) = static_cast<S>(sp->labels(i, 0));
          target(base + i, 1) = static_cast<S>(sp->labels(i, 1));
        }
      }

      nn::Tape<S> t(&m.params);
      const planner::PlanNodes nodes = planner::plan_on_tape(m, t, in);
      const int loss = use_cosine ? t.cosine_masked(nodes.pi, &target, &rows)
                                  : t.mse_masked(nodes.pi, &target, &rows);
      const double lv = static_cast<double>(t.scalar(loss));
      if (!std::isfinite(lv)) {
        throw NumericalError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch));
      }
      m.params.zero_grads();
      t.backward(loss);
      opt.step(m.params);
      loss_sum += lv;
      ++batches;
    }

    res.log.add(epoch, "train", "loss", batches ? loss_sum / batches : 0.0, cfg.seed);
    const double acc = action_accuracy(m, val);
    eval::RolloutConfig rc;
    rc.seed = cfg.seed;
    const double success = eval::success_rate(eval::model_policy(m), val, rc).rate();
    res.log.add(epoch, "val", "action_accuracy", acc, cfg.seed);
    res.log.add(epoch, "val", "rollout_success", success, cfg.seed);
    res.epochs_run = epoch;

    if (success > res.best_val_success) {
      res.best_val_success = success;
      res.best_epoch = epoch;
      since_best = 0;
      if (!checkpoint_path.empty()) {
        planner::save_checkpoint(m, checkpoint_path, epoch, res.log.to_json());
      }
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return res;
}

namespace detail {

// One sample rasterized for the grid VIN: the input image, a NEWS class per
// cell (dijkstra re-run on the projected grid), and the supervised cells.
template <class S>
struct GridView {
  MatX<S> input;
  std::vector<int> labels;
  std::vector<int> rows;
};

template <class S>
std::vector<GridView<S>> rasterize(const worlds::Dataset& ds, int grid_m) {
  std::vector<GridView<S>> views;
  views.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    const worlds::GridProjection proj = worlds::discretize_graph_to_grid(s.graph, grid_m);
    GridView<S> v;
    v.input = planner::grid_vin_input<S>(proj.grid);
    v.labels.assign(static_cast<std::size_t>(grid_m) * grid_m, 0);
    const worlds::NavSample gs = worlds::dijkstra_labels(worlds::grid_to_graph(proj.grid));
    for (int c = 0; c < gs.graph.num_nodes(); ++c) {
      if (!gs.reachable[c] || c == gs.graph.goal_index) continue;
      v.labels[c] = static_cast<int>(worlds::action_discretize(gs.labels(c, 0), gs.labels(c, 1)));
      v.rows.push_back(c);
    }
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace detail

// Grid-VIN trainer: cross-entropy over NEWS logits at supervised cells,
// averaged over the batch.  Validation transfers through the grid projection.
template <class S>
TrainResult train_grid_vin(planner::GridVin<S>& m, const worlds::Dataset& train,
                           const worlds::Dataset& val, const TrainConfig& cfg,
                           const std::filesystem::path& checkpoint_path, int grid_m) {
  validate(cfg);
  RmsProp<S> opt(m.params, cfg.learning_rate);
  TrainResult res;

  if (cfg.epochs == 0) {
    if (!checkpoint_path.empty()) planner::save_checkpoint(m, checkpoint_path, 0, "[]");
    return res;
  }

  const std::vector<detail::GridView<S>> views = detail::rasterize<S>(train, grid_m);
  std::vector<int> order(views.size());
  std::iota(order.begin(), order.end(), 0);
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t b0 = 0; b0 < order.size();
         b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 =
          std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      nn::Tape<S> t(&m.params);
      int total = -1;
      int used = 0;
      for (std::size_t j = b0; j < b1; ++j) {
        const detail::GridView<S>& v = views[order[j]];
        if (v.rows.empty()) continue;
        const int input = t.leaf(v.input);
        const int logits = planner::grid_vin_logits(m, t, input, grid_m, grid_m);
        const int ce = t.softmax_ce_masked(logits, &v.labels, &v.rows);
        total = (total < 0) ? ce : t.add(total, ce);
        ++used;
      }
      if (used == 0) continue;
      const int loss = t.scale(total, S(1.0 / used));
      const double lv = static_cast<double>(t.scalar(loss));
      if (!std::isfinite(lv)) {
        throw NumericalError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch));
      }
      m.params.zero_grads();
      t.backward(loss);
      opt.step(m.params);
      loss_sum += lv;
      ++batches;
    }

    res.log.add(epoch, "train", "loss", batches ? loss_sum / batches : 0.0, cfg.seed);
    const double acc = action_accuracy(m, val, grid_m);
    eval::RolloutConfig rc;
    rc.seed = cfg.seed;
    const double success =
        eval::success_rate(eval::grid_vin_policy(m, grid_m), val, rc).rate();
    res.log.add(epoch, "val", "action_accuracy", acc, cfg.seed);
    res.log.add(epoch, "val", "rollout_success", success, cfg.seed);
    res.epochs_run = epoch;

    if (success > res.best_val_success) {
      res.best_val_success = success;
      res.best_epoch = epoch;
      since_best = 0;
      if (!checkpoint_path.empty()) {
        planner::save_checkpoint(m, checkpoint_path, epoch, res.log.to_json());
      }
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return res;
}

}  // namespace e2plan::training

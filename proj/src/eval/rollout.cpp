#include "e2plan/eval/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "e2plan/common.hpp"

namespace e2plan::eval {

// A maze's shortest path can approach the free-cell count, so the budget is
// m^2 rather than a small multiple of m: the oracle always finishes, and the
// cap only cuts genuinely lost walks.
int default_max_steps_grid(int m) { return m * m; }

int default_max_steps_graph(int n_nodes, int k) {
  return static_cast<int>(2.0 * std::sqrt(static_cast<double>(n_nodes)) * k);
}

std::vector<std::vector<int>> sorted_adjacency(const worlds::GeometricGraph& g) {
  std::vector<std::vector<int>> adj(g.num_nodes());
  for (int e = 0; e < g.num_edges(); ++e) {
    adj[g.edge_recv[e]].push_back(g.edge_send[e]);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

int snap_to_neighbor(const worlds::GeometricGraph& g,
                     const std::vector<std::vector<int>>& adj, int node, double dx,
                     double dy) {
  if (node < 0 || node >= g.num_nodes()) throw DataError("snap: node out of range");
  if (adj[node].empty()) return -1;
  if (dx == 0.0 && dy == 0.0) return -1;
  const double dir = std::hypot(dx, dy);
  int best = -1;
  double best_cos = -2.0;
  for (int j : adj[node]) {
    const double ex = static_cast<double>(g.positions(j, 0)) - g.positions(node, 0);
    const double ey = static_cast<double>(g.positions(j, 1)) - g.positions(node, 1);
    const double len = std::hypot(ex, ey);
    if (len == 0.0) continue;
    const double c = (dx * ex + dy * ey) / (dir * len);
    if (c > best_cos) {
      best_cos = c;
      best = j;
    }
  }
  return best;
}

RolloutResult rollout(const worlds::GeometricGraph& g,
                      const std::vector<std::vector<int>>& adj, const Mat& pi,
                      int start, int max_steps) {
  if (start < 0 || start >= g.num_nodes() || g.obstacle[start]) {
    throw DataError("rollout: start must be a free node");
  }
  if (pi.rows() != g.num_nodes() || pi.cols() != 2) {
    throw ShapeError("rollout: policy field must be n_nodes x 2");
  }
  RolloutResult res;
  int node = start;
  for (int step = 0; step < max_steps; ++step) {
    if (node == g.goal_index) break;
    const int next = snap_to_neighbor(g, adj, node, pi(node, 0), pi(node, 1));
    if (next < 0) return res;  // isolated node or zero action: stuck
    node = next;
    res.steps = step + 1;
  }
  res.success = (node == g.goal_index);
  return res;
}

PolicyFn oracle_policy() {
  return [](const worlds::NavSample& s) { return s.labels.cast<double>().eval(); };
}

PolicyFn random_policy(std::uint64_t seed) {
  return [seed](const worlds::NavSample& s) {
    // Deterministic per graph: keyed by node count and goal so repeated calls
    // on the same sample agree.
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(s.graph.num_nodes()) * 131 +
                                            static_cast<std::uint64_t>(s.graph.goal_index)));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::acos(-1.0));
    Mat pi(s.graph.num_nodes(), 2);
    for (int i = 0; i < pi.rows(); ++i) {
      const double a = angle(rng);
      pi(i, 0) = std::cos(a);
      pi(i, 1) = std::sin(a);
    }
    return pi;
  };
}

namespace {

int sample_max_steps(const worlds::Dataset& ds, const worlds::NavSample& s,
                     const RolloutConfig& cfg) {
  if (cfg.max_steps > 0) return cfg.max_steps;
  if (ds.generator == "grid") {
    const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(s.graph.num_nodes()))));
    return default_max_steps_grid(m);
  }
  int k = 6;
  if (!ds.params_json.empty()) {
    const auto params = nlohmann::json::parse(ds.params_json);
    k = params.value("k", 6);
  }
  return default_max_steps_graph(s.graph.num_nodes(), k);
}

}  // namespace

SuccessStats success_rate(const PolicyFn& policy, const worlds::Dataset& ds,
                          const RolloutConfig& cfg) {
  SuccessStats stats;
  for (std::size_t si = 0; si < ds.samples.size(); ++si) {
    const worlds::NavSample& s = ds.samples[si];
    const Mat pi = policy(s);
    const auto adj = sorted_adjacency(s.graph);
    const int budget = sample_max_steps(ds, s, cfg);

    std::vector<int> starts;
    if (ds.generator == "grid") {
      for (int i = 0; i < s.graph.num_nodes(); ++i) {
        if (s.reachable[i]) starts.push_back(i);
      }
    } else {
      std::vector<int> pool;
      for (int i = 0; i < s.graph.num_nodes(); ++i) {
        if (s.reachable[i]) pool.push_back(i);
      }
      std::mt19937_64 rng(mix_seed(cfg.seed, si));
      for (int t = 0; t < cfg.starts_per_sample && !pool.empty(); ++t) {
        starts.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
      }
    }

    int ok = 0;
    for (int start : starts) {
      ok += rollout(s.graph, adj, pi, start, budget).success ? 1 : 0;
    }
    stats.trials += static_cast<int>(starts.size());
    stats.successes += ok;
    stats.per_sample.push_back(starts.empty() ? 0.0 : 100.0 * ok / starts.size());
  }
  return stats;
}

}  // namespace e2plan::eval

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "e2plan/planner/grid_vin.hpp"
#include "e2plan/planner/planner.hpp"
#include "e2plan/worlds/dataset.hpp"

namespace e2plan::eval {

struct RolloutConfig {
  int max_steps = 0;            // 0 = domain default (4m grids, 2*sqrt(N)*k graphs)
  int starts_per_sample = 32;   // graph datasets; grid datasets use every reachable node
  std::uint64_t seed = 0;
};

int default_max_steps_grid(int m);
int default_max_steps_graph(int n_nodes, int k);

// Neighbor lists sorted ascending so ties resolve to the smallest node index.
std::vector<std::vector<int>> sorted_adjacency(const worlds::GeometricGraph& g);

// Neighbor of `node` with the largest cosine to (dx, dy); -1 when the node is
// isolated or the direction is zero.
int snap_to_neighbor(const worlds::GeometricGraph& g,
                     const std::vector<std::vector<int>>& adj, int node, double dx,
                     double dy);

struct RolloutResult {
  bool success = false;
  int steps = 0;
};

// Greedy walk over the precomputed policy field pi (one row per node).
RolloutResult rollout(const worlds::GeometricGraph& g,
                      const std::vector<std::vector<int>>& adj, const Mat& pi,
                      int start, int max_steps);

// Produces the per-node action field for one sample; model adaptors ignore
// the labels, the oracle is the labels.
using PolicyFn = std::function<Mat(const worlds::NavSample&)>;

PolicyFn oracle_policy();
PolicyFn random_policy(std::uint64_t seed);

template <class S>
PolicyFn model_policy(planner::MpVin<S>& m) {
  return [&m](const worlds::NavSample& s) -> Mat {
    return planner::plan(m, s.graph).template cast<double>();
  };
}

// Grid-VIN transfer onto graphs: discretize, run the VIN once, then give each
// node the NEWS unit vector of its cell's argmax action.
template <class S>
PolicyFn grid_vin_policy(planner::GridVin<S>& m, int grid_m) {
  return [&m, grid_m](const worlds::NavSample& s) {
    const worlds::GridProjection proj =
        worlds::discretize_graph_to_grid(s.graph, grid_m);
    const MatX<S> logits = planner::grid_vin_plan(m, proj.grid);
    Mat pi = Mat::Zero(s.graph.num_nodes(), 2);
    for (int i = 0; i < s.graph.num_nodes(); ++i) {
      int best = 0;
      for (int a = 1; a < 4; ++a) {
        if (logits(proj.node_cell[i], a) > logits(proj.node_cell[i], best)) best = a;
      }
      double dx = 0;
      double dy = 0;
      worlds::news_vector(static_cast<worlds::NewsAction>(best), &dx, &dy);
      pi(i, 0) = dx;
      pi(i, 1) = dy;
    }
    return pi;
  };
}

struct SuccessStats {
  int trials = 0;
  int successes = 0;
  std::vector<double> per_sample;  // success percentage per sample

  double rate() const { return trials ? 100.0 * successes / trials : 0.0; }
};

SuccessStats success_rate(const PolicyFn& policy, const worlds::Dataset& ds,
                          const RolloutConfig& cfg);

}  // namespace e2plan::eval

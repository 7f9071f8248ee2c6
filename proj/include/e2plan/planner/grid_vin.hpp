#pragma once

#include <cstdint>

#include "e2plan/nn/layers.hpp"
#include "e2plan/worlds/world.hpp"

namespace e2plan::planner {

// Classic value iteration network on an occupancy grid: a 3x3 reward
// convolution, K iterations of {q = conv3x3([r; v]); v = max over action
// channels}, and a per-cell linear head producing NEWS logits.
template <class S>
struct GridVin {
  int k_iters = 20;
  int q_size = 4;
  nn::ParamStore<S> params;
  nn::Linear<S> r_conv;  // 9*2 patch -> 1
  nn::Linear<S> q_conv;  // 9*2 patch -> q_size
  nn::Linear<S> head;    // q_size -> 4
};

template <class S>
GridVin<S> make_grid_vin(int k_iters, int q_size, std::uint64_t seed) {
  if (k_iters < 1) throw ConfigError("grid VIN k_iters must be at least 1");
  if (q_size < 1) throw ConfigError("grid VIN q_size must be positive");
  GridVin<S> m;
  m.k_iters = k_iters;
  m.q_size = q_size;
  std::mt19937_64 rng(seed);
  m.r_conv = nn::make_dense_linear<S>(18, 1, true, m.params, rng, "r_conv");
  m.q_conv = nn::make_dense_linear<S>(18, q_size, true, m.params, rng, "q_conv");
  m.head = nn::make_dense_linear<S>(q_size, 4, true, m.params, rng, "head");
  return m;
}

// Per-cell [obstacle, goal] channels, cells row-major.
template <class S>
MatX<S> grid_vin_input(const worlds::GridWorld& grid) {
  const int m = grid.size;
  MatX<S> in = MatX<S>::Zero(m * m, 2);
  for (int i = 0; i < m * m; ++i) in(i, 0) = grid.free[i] ? S(0) : S(1);
  in(grid.goal_row * m + grid.goal_col, 1) = S(1);
  return in;
}

template <class S>
int grid_vin_logits(const GridVin<S>& m, nn::Tape<S>& t, int input, int h, int w) {
  const int r = m.r_conv.forward(t, t.im2col3x3(input, h, w));
  int v = t.leaf(MatX<S>::Zero(h * w, 1));
  int q = -1;
  for (int k = 0; k < m.k_iters; ++k) {
    q = m.q_conv.forward(t, t.im2col3x3(t.concat_cols({r, v}), h, w));
    v = t.max_over_copies(q, m.q_size, 1);
  }
  return m.head.forward(t, q);
}

template <class S>
MatX<S> grid_vin_plan(GridVin<S>& m, const worlds::GridWorld& grid) {
  nn::Tape<S> t(&m.params);
  const int input = t.leaf(grid_vin_input<S>(grid));
  return t.value(grid_vin_logits(m, t, input, grid.size, grid.size));
}

}  // namespace e2plan::planner

#pragma once

#include <vector>

#include "e2plan/common.hpp"

namespace e2plan::planner {

// Finite MDP with tabular reward and per-action transition matrices.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  Mat reward;                   // n_states x n_actions
  std::vector<Mat> transition;  // one n_states x n_states row-stochastic matrix per action
};

// Tabular value iteration from V = 0; stops after `iters` sweeps or when the
// sup-norm update drops below `tol`.
Vec exact_vi(const TabularMdp& mdp, double gamma, int iters, double tol = 1e-13);

}  // namespace e2plan::planner

#include "e2plan/planner/oracle.hpp"

#include <cmath>
#include <limits>

namespace e2plan::planner {

Vec exact_vi(const TabularMdp& mdp, double gamma, int iters, double tol) {
  if (mdp.n_states < 1 || mdp.n_actions < 1) {
    throw ConfigError("MDP needs at least one state and action");
  }
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must lie in [0, 1]");
  if (mdp.reward.rows() != mdp.n_states || mdp.reward.cols() != mdp.n_actions) {
    throw ShapeError("reward table must be n_states x n_actions");
  }
  if (static_cast<int>(mdp.transition.size()) != mdp.n_actions) {
    throw ShapeError("one transition matrix per action required");
  }
  for (const Mat& p : mdp.transition) {
    if (p.rows() != mdp.n_states || p.cols() != mdp.n_states) {
      throw ShapeError("transition matrices must be n_states x n_states");
    }
    for (int s = 0; s < mdp.n_states; ++s) {
      if (p.row(s).minCoeff() < -1e-12 || std::abs(p.row(s).sum() - 1.0) > 1e-9) {
        throw DataError("transition rows must be stochastic");
      }
    }
  }

  Vec v = Vec::Zero(mdp.n_states);
  for (int it = 0; it < iters; ++it) {
    Vec next(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.n_actions; ++a) {
        best = std::max(best, mdp.reward(s, a) + gamma * mdp.transition[a].row(s).dot(v));
      }
      next(s) = best;
    }
    const double delta = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (delta <= tol) break;
  }
  return v;
}

}  // namespace e2plan::planner

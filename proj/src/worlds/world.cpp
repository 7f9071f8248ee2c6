#include "e2plan/worlds/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

namespace e2plan::worlds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// CCW angle of u relative to d in [0, 2*pi); exact under 90-degree rotations
// of both vectors since dot and cross commute bitwise with them.
double ccw_angle(double dx, double dy, double ux, double uy) {
  const double dot = dx * ux + dy * uy;
  const double cross = dx * uy - dy * ux;
  double a = std::atan2(cross, dot);
  if (a < 0) a += 2 * M_PI;
  return a;
}

std::vector<std::vector<int>> adjacency(const GeometricGraph& g) {
  std::vector<std::vector<int>> adj(g.num_nodes());
  for (int e = 0; e < g.num_edges(); ++e) adj[g.edge_recv[e]].push_back(g.edge_send[e]);
  return adj;
}

}  // namespace

GridWorld generate_maze(int m, std::uint64_t seed) {
  if (m < 3) throw ConfigError("maze size must be at least 3");
  std::mt19937_64 rng(seed);
  GridWorld grid;
  grid.size = m;
  grid.free.assign(static_cast<std::size_t>(m) * m, 0);

  // Rooms on even coordinates, carved walls between visited neighbors.
  const int rooms = (m + 1) / 2;
  auto room_free = [&](int r, int c) -> std::uint8_t& {
    return grid.free[static_cast<std::size_t>(2 * r) * m + 2 * c];
  };
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(rooms) * rooms, 0);
  std::vector<std::pair<int, int>> stack;
  stack.emplace_back(0, 0);
  visited[0] = 1;
  room_free(0, 0) = 1;
  const int dr[4] = {1, -1, 0, 0};
  const int dc[4] = {0, 0, 1, -1};
  while (!stack.empty()) {
    const auto [r, c] = stack.back();
    int order[4] = {0, 1, 2, 3};
    std::shuffle(order, order + 4, rng);
    bool advanced = false;
    for (int o : order) {
      const int nr = r + dr[o];
      const int nc = c + dc[o];
      if (nr < 0 || nr >= rooms || nc < 0 || nc >= rooms) continue;
      if (2 * nr >= m || 2 * nc >= m) continue;
      if (visited[static_cast<std::size_t>(nr) * rooms + nc]) continue;
      visited[static_cast<std::size_t>(nr) * rooms + nc] = 1;
      room_free(nr, nc) = 1;
      grid.free[static_cast<std::size_t>(r + nr) * m + (c + nc)] = 1;  // wall between
      stack.emplace_back(nr, nc);
      advanced = true;
      break;
    }
    if (!advanced) stack.pop_back();
  }

  // Braid: open a fraction of the walls that join two free cells, which adds
  // loops without creating isolated free cells.
  std::vector<int> candidates;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      if (grid.is_free(r, c)) continue;
      int free_neighbors = 0;
      for (int o = 0; o < 4; ++o) {
        const int nr = r + dr[o];
        const int nc = c + dc[o];
        if (nr >= 0 && nr < m && nc >= 0 && nc < m && grid.is_free(nr, nc)) ++free_neighbors;
      }
      if (free_neighbors >= 2) candidates.push_back(r * m + c);
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const std::size_t open_count = candidates.size() / 10;
  for (std::size_t i = 0; i < open_count; ++i) grid.free[candidates[i]] = 1;

  std::vector<int> free_cells;
  for (int i = 0; i < m * m; ++i)
    if (grid.free[i]) free_cells.push_back(i);
  const int goal = free_cells[std::uniform_int_distribution<std::size_t>(
      0, free_cells.size() - 1)(rng)];
  grid.goal_row = goal / m;
  grid.goal_col = goal % m;
  return grid;
}

GeometricGraph grid_to_graph(const GridWorld& grid) {
  const int m = grid.size;
  const int n = m * m;
  GeometricGraph g;
  g.positions.resize(n, 2);
  g.node_features = MatXf::Zero(n, 4);
  g.obstacle.resize(n);
  g.goal_index = grid.goal_row * m + grid.goal_col;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const int i = r * m + c;
      g.positions(i, 0) = static_cast<float>(r);
      g.positions(i, 1) = static_cast<float>(c);
      g.node_features(i, 0) = static_cast<float>(r);
      g.node_features(i, 1) = static_cast<float>(c);
      g.obstacle[i] = grid.free[i] ? 0 : 1;
      g.node_features(i, kFeatObstacle) = g.obstacle[i] ? 1.0f : 0.0f;
    }
  }
  g.node_features(g.goal_index, kFeatGoal) = 1.0f;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      if (!grid.is_free(r, c)) continue;
      const int i = r * m + c;
      if (r + 1 < m && grid.is_free(r + 1, c)) {
        g.edge_recv.push_back(i);
        g.edge_send.push_back(i + m);
        g.edge_recv.push_back(i + m);
        g.edge_send.push_back(i);
      }
      if (c + 1 < m && grid.is_free(r, c + 1)) {
        g.edge_recv.push_back(i);
        g.edge_send.push_back(i + 1);
        g.edge_recv.push_back(i + 1);
        g.edge_send.push_back(i);
      }
    }
  }
  return g;
}

GeometricGraph generate_graph_world(int n_nodes, double map_size, int k,
                                    double obstacle_frac, std::uint64_t seed) {
  if (n_nodes < k + 1) throw ConfigError("graph world needs more nodes than neighbors");
  if (obstacle_frac < 0 || obstacle_frac >= 1) {
    throw ConfigError("obstacle fraction must lie in [0, 1)");
  }

  for (int attempt = 0; attempt < 20; ++attempt) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    GeometricGraph g;
    g.positions.resize(n_nodes, 2);
    std::uniform_real_distribution<double> coord(0.0, map_size);
    for (int i = 0; i < n_nodes; ++i) {
      g.positions(i, 0) = static_cast<float>(coord(rng));
      g.positions(i, 1) = static_cast<float>(coord(rng));
    }

    g.obstacle.assign(n_nodes, 0);
    std::vector<int> ids(n_nodes);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    const int n_obstacles = static_cast<int>(obstacle_frac * n_nodes);
    for (int i = 0; i < n_obstacles; ++i) g.obstacle[ids[i]] = 1;
    std::vector<int> free_ids(ids.begin() + n_obstacles, ids.end());
    g.goal_index = free_ids[std::uniform_int_distribution<std::size_t>(
        0, free_ids.size() - 1)(rng)];

    // Union-KNN over all nodes, then drop edges touching obstacles.
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n_nodes; ++i) {
      std::vector<std::pair<double, int>> by_dist;
      by_dist.reserve(n_nodes - 1);
      for (int j = 0; j < n_nodes; ++j) {
        if (j == i) continue;
        const double dx = static_cast<double>(g.positions(i, 0)) - g.positions(j, 0);
        const double dy = static_cast<double>(g.positions(i, 1)) - g.positions(j, 1);
        by_dist.emplace_back(dx * dx + dy * dy, j);
      }
      std::partial_sort(by_dist.begin(), by_dist.begin() + k, by_dist.end());
      for (int t = 0; t < k; ++t) {
        const int j = by_dist[t].second;
        pairs.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    for (const auto& [a, b] : pairs) {
      if (g.obstacle[a] || g.obstacle[b]) continue;
      g.edge_recv.push_back(a);
      g.edge_send.push_back(b);
      g.edge_recv.push_back(b);
      g.edge_send.push_back(a);
    }

    g.node_features = MatXf::Zero(n_nodes, 4);
    for (int i = 0; i < n_nodes; ++i) {
      g.node_features(i, 0) = g.positions(i, 0);
      g.node_features(i, 1) = g.positions(i, 1);
      g.node_features(i, kFeatObstacle) = g.obstacle[i] ? 1.0f : 0.0f;
    }
    g.node_features(g.goal_index, kFeatGoal) = 1.0f;

    // Keep the instance only if some other free node can reach the goal.
    const auto adj = adjacency(g);
    std::vector<std::uint8_t> seen(n_nodes, 0);
    std::queue<int> q;
    q.push(g.goal_index);
    seen[g.goal_index] = 1;
    int reached = 0;
    while (!q.empty()) {
      const int i = q.front();
      q.pop();
      for (int j : adj[i]) {
        if (!seen[j]) {
          seen[j] = 1;
          ++reached;
          q.push(j);
        }
      }
    }
    if (reached > 0) return g;
  }
  throw DataError("graph world generation failed: goal isolated after 20 attempts");
}

namespace {

double edge_length(const GeometricGraph& graph, int i, int j) {
  const double dx = static_cast<double>(graph.positions(i, 0)) - graph.positions(j, 0);
  const double dy = static_cast<double>(graph.positions(i, 1)) - graph.positions(j, 1);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Vec shortest_path_distances(const GeometricGraph& graph) {
  const int n = graph.num_nodes();
  const auto adj = adjacency(graph);
  Vec dist = Vec::Constant(n, kInf);
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                      std::greater<>> pq;
  dist(graph.goal_index) = 0.0;
  pq.emplace(0.0, graph.goal_index);
  while (!pq.empty()) {
    const auto [d, i] = pq.top();
    pq.pop();
    if (d > dist(i)) continue;
    for (int j : adj[i]) {
      const double nd = d + edge_length(graph, i, j);
      if (nd < dist(j)) {
        dist(j) = nd;
        pq.emplace(nd, j);
      }
    }
  }
  return dist;
}

NavSample dijkstra_labels(const GeometricGraph& graph) {
  const int n = graph.num_nodes();
  NavSample sample;
  sample.graph = graph;
  sample.labels = MatXf::Zero(n, 2);
  sample.reachable.assign(n, 0);
  sample.distance = shortest_path_distances(graph);
  const auto adj = adjacency(graph);
  const Vec& dist = sample.distance;

  const double gx = graph.positions(graph.goal_index, 0);
  const double gy = graph.positions(graph.goal_index, 1);
  for (int i = 0; i < n; ++i) {
    if (graph.obstacle[i] || dist(i) == kInf) continue;
    sample.reachable[i] = 1;
    if (i == graph.goal_index) continue;

    // Successor on a shortest path; ties resolve to the smallest CCW angle
    // from the straight-to-goal direction, then the smallest node index.
    const double dxg = gx - graph.positions(i, 0);
    const double dyg = gy - graph.positions(i, 1);
    int best = -1;
    double best_val = kInf;
    double best_angle = kInf;
    for (int j : adj[i]) {
      if (dist(j) == kInf) continue;
      const double val = dist(j) + edge_length(graph, i, j);
      const double ux = static_cast<double>(graph.positions(j, 0)) - graph.positions(i, 0);
      const double uy = static_cast<double>(graph.positions(j, 1)) - graph.positions(i, 1);
      const double angle = ccw_angle(dxg, dyg, ux, uy);
      if (val < best_val || (val == best_val && angle < best_angle)) {
        best = j;
        best_val = val;
        best_angle = angle;
      }
    }
    const double ux = static_cast<double>(graph.positions(best, 0)) - graph.positions(i, 0);
    const double uy = static_cast<double>(graph.positions(best, 1)) - graph.positions(i, 1);
    const double norm = std::sqrt(ux * ux + uy * uy);
    sample.labels(i, 0) = static_cast<float>(ux / norm);
    sample.labels(i, 1) = static_cast<float>(uy / norm);
  }
  return sample;
}

GridProjection discretize_graph_to_grid(const GeometricGraph& graph, int m) {
  GridProjection proj;
  proj.grid.size = m;
  proj.grid.free.assign(static_cast<std::size_t>(m) * m, 0);
  proj.node_cell.resize(graph.num_nodes());
  std::vector<std::uint8_t> has_node(static_cast<std::size_t>(m) * m, 0);
  std::vector<std::uint8_t> has_obstacle(static_cast<std::size_t>(m) * m, 0);
  for (int i = 0; i < graph.num_nodes(); ++i) {
    const int r = std::clamp(static_cast<int>(std::floor(graph.positions(i, 0))), 0, m - 1);
    const int c = std::clamp(static_cast<int>(std::floor(graph.positions(i, 1))), 0, m - 1);
    const int cell = r * m + c;
    proj.node_cell[i] = cell;
    has_node[cell] = 1;
    if (graph.obstacle[i]) has_obstacle[cell] = 1;
  }
  for (std::size_t cell = 0; cell < proj.grid.free.size(); ++cell) {
    proj.grid.free[cell] = has_node[cell] && !has_obstacle[cell];
  }
  const int goal_cell = proj.node_cell[graph.goal_index];
  proj.grid.goal_row = goal_cell / m;
  proj.grid.goal_col = goal_cell % m;
  return proj;
}

NewsAction action_discretize(double dx, double dy) {
  if (dx == 0 && dy == 0) throw DataError("cannot discretize a zero action");
  const double dots[4] = {dx, dy, -dy, -dx};  // N, E, W, S
  int best = 0;
  for (int a = 1; a < 4; ++a)
    if (dots[a] > dots[best]) best = a;
  return static_cast<NewsAction>(best);
}

void news_vector(NewsAction a, double* dx, double* dy) {
  switch (a) {
    case NewsAction::north: *dx = 1; *dy = 0; return;
    case NewsAction::east: *dx = 0; *dy = 1; return;
    case NewsAction::west: *dx = 0; *dy = -1; return;
    case NewsAction::south: *dx = -1; *dy = 0; return;
  }
  throw ConfigError("invalid action");
}

}  // namespace e2plan::worlds

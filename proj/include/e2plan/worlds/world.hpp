#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "e2plan/common.hpp"

namespace e2plan::worlds {

// m x m occupancy maze; true = free cell.
struct GridWorld {
  int size = 0;
  std::vector<std::uint8_t> free;  // row-major, size*size
  int goal_row = 0;
  int goal_col = 0;

  bool is_free(int r, int c) const { return free[static_cast<std::size_t>(r) * size + c]; }
};

// Nodes with 2D positions and per-node features [x, y, obstacle, goal].
// Edges are directed pairs stored symmetrically; obstacle nodes are isolated.
struct GeometricGraph {
  MatXf positions;      // N x 2
  MatXf node_features;  // N x 4
  std::vector<int> edge_recv;
  std::vector<int> edge_send;
  std::vector<std::uint8_t> obstacle;  // N
  int goal_index = 0;

  int num_nodes() const { return static_cast<int>(positions.rows()); }
  int num_edges() const { return static_cast<int>(edge_recv.size()); }
};

constexpr int kFeatObstacle = 2;
constexpr int kFeatGoal = 3;

// Expert-labeled navigation instance.  labels: unit step direction toward the
// goal for reachable free nodes, (0,0) at the goal and off-mask nodes.
struct NavSample {
  GeometricGraph graph;
  MatXf labels;                         // N x 2
  std::vector<std::uint8_t> reachable;  // N, free nodes connected to the goal
  Vec distance;                         // N, shortest path length, inf if unreachable
};

struct Dataset {
  std::vector<NavSample> samples;
  std::string split;
  std::uint64_t seed = 0;
  std::string generator;  // "grid" or "graph"
  std::string params_json;
};

GridWorld generate_maze(int m, std::uint64_t seed);
GeometricGraph grid_to_graph(const GridWorld& grid);
GeometricGraph generate_graph_world(int n_nodes, double map_size, int k,
                                    double obstacle_frac, std::uint64_t seed);

NavSample dijkstra_labels(const GeometricGraph& graph);

// Goal distances under Euclidean edge lengths, +inf where unreachable.
Vec shortest_path_distances(const GeometricGraph& graph);

// Floor-maps node positions onto an m x m grid; a cell is free only if it
// holds at least one node and none of its nodes is an obstacle.  The goal
// cell is the goal node's cell.
struct GridProjection {
  GridWorld grid;
  std::vector<int> node_cell;  // node -> row*m + col
};
GridProjection discretize_graph_to_grid(const GeometricGraph& graph, int m);

// NEWS encoding: north [1,0], east [0,1], west [0,-1], south [-1,0].
enum class NewsAction { north = 0, east = 1, west = 2, south = 3 };
NewsAction action_discretize(double dx, double dy);
void news_vector(NewsAction a, double* dx, double* dy);

}  // namespace e2plan::worlds

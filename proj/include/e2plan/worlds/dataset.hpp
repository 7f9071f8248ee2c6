#pragma once

#include <filesystem>
#include <string>

#include "e2plan/worlds/world.hpp"

namespace e2plan::worlds {

// Binary archive (little-endian, magic "E2DS") holding per-sample positions,
// node features, edge index, labels, reachable mask, and goal index, plus an
// ordered JSON sidecar at <path>.json with the generation metadata.  Float
// payloads are written verbatim, so a round trip is bit-identical.  Distances
// are derived data and recomputed on load.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

Dataset generate_grid_dataset(int count, int m, std::uint64_t seed,
                              const std::string& split);
Dataset generate_graph_dataset(int count, int n_nodes, double map_size, int k,
                               double obstacle_frac, std::uint64_t seed,
                               const std::string& split);

}  // namespace e2plan::worlds

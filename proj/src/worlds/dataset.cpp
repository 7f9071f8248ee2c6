#include "e2plan/worlds/dataset.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace e2plan::worlds {

namespace {

constexpr char kMagic[4] = {'E', '2', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
void write_raw(std::ofstream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void write_scalar(std::ofstream& out, T value) {
  write_raw(out, &value, 1);
}

template <typename T>
void read_raw(std::ifstream& in, T* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw DataError("dataset archive truncated");
}

template <typename T>
T read_scalar(std::ifstream& in) {
  T value;
  read_raw(in, &value, 1);
  return value;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open dataset archive for writing: " + path.string());
  out.write(kMagic, 4);
  write_scalar<std::uint32_t>(out, kVersion);
  write_scalar<std::uint64_t>(out, ds.samples.size());
  for (const NavSample& s : ds.samples) {
    const GeometricGraph& g = s.graph;
    const auto n = static_cast<std::uint32_t>(g.num_nodes());
    const auto e = static_cast<std::uint32_t>(g.num_edges());
    write_scalar(out, n);
    write_scalar(out, e);
    write_scalar<std::int32_t>(out, g.goal_index);
    write_raw(out, g.positions.data(), static_cast<std::size_t>(n) * 2);
    write_raw(out, g.node_features.data(), static_cast<std::size_t>(n) * 4);
    std::vector<std::int32_t> edges(2 * static_cast<std::size_t>(e));
    for (std::uint32_t i = 0; i < e; ++i) {
      edges[i] = g.edge_recv[i];
      edges[e + i] = g.edge_send[i];
    }
    write_raw(out, edges.data(), edges.size());
    write_raw(out, s.labels.data(), static_cast<std::size_t>(n) * 2);
    write_raw(out, s.reachable.data(), n);
  }
  if (!out) throw DataError("failed writing dataset archive: " + path.string());
  out.close();

  nlohmann::ordered_json meta;
  meta["format"] = "e2ds";
  meta["version"] = kVersion;
  meta["generator"] = ds.generator;
  meta["split"] = ds.split;
  meta["seed"] = ds.seed;
  meta["count"] = ds.samples.size();
  meta["params"] = ds.params_json.empty() ? nlohmann::ordered_json::object()
                                          : nlohmann::ordered_json::parse(ds.params_json);
  std::ofstream side(sidecar_path(path));
  if (!side) throw DataError("cannot write dataset sidecar: " + sidecar_path(path).string());
  side << meta.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset archive: " + path.string());
  char magic[4];
  read_raw(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("not a dataset archive: " + path.string());
  }
  const auto version = read_scalar<std::uint32_t>(in);
  if (version != kVersion) {
    throw DataError("unsupported dataset archive version " + std::to_string(version));
  }
  Dataset ds;
  const auto count = read_scalar<std::uint64_t>(in);
  ds.samples.resize(count);
  for (NavSample& s : ds.samples) {
    GeometricGraph& g = s.graph;
    const auto n = read_scalar<std::uint32_t>(in);
    const auto e = read_scalar<std::uint32_t>(in);
    g.goal_index = read_scalar<std::int32_t>(in);
    g.positions.resize(n, 2);
    read_raw(in, g.positions.data(), static_cast<std::size_t>(n) * 2);
    g.node_features.resize(n, 4);
    read_raw(in, g.node_features.data(), static_cast<std::size_t>(n) * 4);
    std::vector<std::int32_t> edges(2 * static_cast<std::size_t>(e));
    read_raw(in, edges.data(), edges.size());
    g.edge_recv.assign(edges.begin(), edges.begin() + e);
    g.edge_send.assign(edges.begin() + e, edges.end());
    s.labels.resize(n, 2);
    read_raw(in, s.labels.data(), static_cast<std::size_t>(n) * 2);
    s.reachable.resize(n);
    read_raw(in, s.reachable.data(), n);
    g.obstacle.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      g.obstacle[i] = g.node_features(i, kFeatObstacle) != 0.0f ? 1 : 0;
    }
    s.distance = shortest_path_distances(g);
  }

  const auto side = sidecar_path(path);
  std::ifstream sin(side);
  if (!sin) throw DataError("missing dataset sidecar: " + side.string());
  nlohmann::json meta;
  try {
    sin >> meta;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("invalid dataset sidecar: " + std::string(ex.what()));
  }
  if (meta.value("count", count) != count) {
    throw DataError("dataset sidecar count disagrees with archive");
  }
  ds.split = meta.value("split", "");
  ds.seed = meta.value("seed", std::uint64_t{0});
  ds.generator = meta.value("generator", "");
  if (meta.contains("params")) ds.params_json = meta["params"].dump();
  return ds;
}

Dataset generate_grid_dataset(int count, int m, std::uint64_t seed,
                              const std::string& split) {
  Dataset ds;
  ds.split = split;
  ds.seed = seed;
  ds.generator = "grid";
  nlohmann::ordered_json params;
  params["m"] = m;
  ds.params_json = params.dump();
  const std::uint64_t split_seed = mix_seed(seed, fnv1a(split));
  ds.samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    const GridWorld grid = generate_maze(m, mix_seed(split_seed, static_cast<std::uint64_t>(i)));
    ds.samples.push_back(dijkstra_labels(grid_to_graph(grid)));
  }
  return ds;
}

Dataset generate_graph_dataset(int count, int n_nodes, double map_size, int k,
                               double obstacle_frac, std::uint64_t seed,
                               const std::string& split) {
  Dataset ds;
  ds.split = split;
  ds.seed = seed;
  ds.generator = "graph";
  nlohmann::ordered_json params;
  params["n_nodes"] = n_nodes;
  params["map_size"] = map_size;
  params["k"] = k;
  params["obstacle_frac"] = obstacle_frac;
  ds.params_json = params.dump();
  const std::uint64_t split_seed = mix_seed(seed, fnv1a(split));
  ds.samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    const GeometricGraph g = generate_graph_world(
        n_nodes, map_size, k, obstacle_frac,
        mix_seed(split_seed, static_cast<std::uint64_t>(i)));
    ds.samples.push_back(dijkstra_labels(g));
  }
  return ds;
}

}  // namespace e2plan::worlds

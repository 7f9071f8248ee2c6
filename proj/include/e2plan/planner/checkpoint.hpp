#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "e2plan/planner/grid_vin.hpp"
#include "e2plan/planner/planner.hpp"

namespace e2plan::planner {

// "E2CK" container: JSON header (model kind, config, epoch, metric history,
// parameter table) followed by float64 parameter payloads in table order.
// Reloading rebuilds the model from the embedded config, so forward passes
// reproduce bit-exactly.

namespace detail {

constexpr char kCkMagic[4] = {'E', '2', 'C', 'K'};
constexpr std::uint32_t kCkVersion = 1;

template <class S>
nlohmann::json param_table(const nn::ParamStore<S>& ps) {
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    table.push_back({{"name", ps.names[i]},
                     {"rows", ps.values[i].rows()},
                     {"cols", ps.values[i].cols()}});
  }
  return table;
}

template <class S>
void write_checkpoint(const std::filesystem::path& path, nlohmann::ordered_json header,
                      const nn::ParamStore<S>& ps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  const std::string htext = header.dump();
  out.write(kCkMagic, 4);
  const std::uint32_t version = kCkVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& value : ps.values) {
    const MatX<double> d = value.template cast<double>();
    out.write(reinterpret_cast<const char*>(d.data()),
              static_cast<std::streamsize>(sizeof(double) * d.size()));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

inline nlohmann::json read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCkMagic, 4) != 0) {
    throw DataError("not a checkpoint file: " + path.string());
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || version != kCkVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw DataError("checkpoint header truncated: " + path.string());
  try {
    return nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("invalid checkpoint header: " + std::string(ex.what()));
  }
}

template <class S>
void read_params_into(std::ifstream& in, const nlohmann::json& table,
                      nn::ParamStore<S>& ps, const std::filesystem::path& path) {
  if (table.size() != ps.size()) {
    throw DataError("checkpoint parameter count does not match the model");
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& entry = table[i];
    if (entry.at("name").get<std::string>() != ps.names[i] ||
        entry.at("rows").get<Eigen::Index>() != ps.values[i].rows() ||
        entry.at("cols").get<Eigen::Index>() != ps.values[i].cols()) {
      throw DataError("checkpoint parameter table does not match the model");
    }
    MatX<double> d(ps.values[i].rows(), ps.values[i].cols());
    in.read(reinterpret_cast<char*>(d.data()),
            static_cast<std::streamsize>(sizeof(double) * d.size()));
    if (!in) throw DataError("checkpoint payload truncated: " + path.string());
    ps.values[i] = d.cast<S>();
  }
}

}  // namespace detail

struct CheckpointInfo {
  std::string model;
  std::string config_json;
  int epoch = 0;
  std::string metrics_json;
};

inline CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  const nlohmann::json header = detail::read_header(in, path);
  CheckpointInfo info;
  info.model = header.value("model", "");
  info.config_json = header.at("config").dump();
  info.epoch = header.value("epoch", 0);
  info.metrics_json = header.value("metrics", nlohmann::json::array()).dump();
  return info;
}

template <class S>
void save_checkpoint(const MpVin<S>& m, const std::filesystem::path& path,
                     int epoch = 0, const std::string& metrics_json = "[]") {
  nlohmann::ordered_json header;
  header["format"] = "e2ck";
  header["version"] = detail::kCkVersion;
  header["model"] = "mp_vin";
  header["config"] = nlohmann::json::parse(planner_config_to_json(m.config));
  header["epoch"] = epoch;
  header["metrics"] = nlohmann::json::parse(metrics_json);
  header["params"] = detail::param_table(m.params);
  detail::write_checkpoint(path, std::move(header), m.params);
}

template <class S>
void save_checkpoint(const GridVin<S>& m, const std::filesystem::path& path,
                     int epoch = 0, const std::string& metrics_json = "[]") {
  nlohmann::ordered_json header;
  header["format"] = "e2ck";
  header["version"] = detail::kCkVersion;
  header["model"] = "grid_vin";
  header["config"] = {{"k_iters", m.k_iters}, {"q_size", m.q_size}};
  header["epoch"] = epoch;
  header["metrics"] = nlohmann::json::parse(metrics_json);
  header["params"] = detail::param_table(m.params);
  detail::write_checkpoint(path, std::move(header), m.params);
}

template <class S>
MpVin<S> load_mp_vin_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  const nlohmann::json header = detail::read_header(in, path);
  if (header.value("model", "") != "mp_vin") {
    throw DataError("checkpoint does not hold an MP-VIN model");
  }
  MpVin<S> m = make_mp_vin<S>(planner_config_from_json(header.at("config").dump()), 0);
  detail::read_params_into(in, header.at("params"), m.params, path);
  return m;
}

template <class S>
GridVin<S> load_grid_vin_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  const nlohmann::json header = detail::read_header(in, path);
  if (header.value("model", "") != "grid_vin") {
    throw DataError("checkpoint does not hold a grid VIN model");
  }
  const auto& cfg = header.at("config");
  GridVin<S> m = make_grid_vin<S>(cfg.at("k_iters").get<int>(),
                                  cfg.at("q_size").get<int>(), 0);
  detail::read_params_into(in, header.at("params"), m.params, path);
  return m;
}

}  // namespace e2plan::planner

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "e2plan/eval/rollout.hpp"

namespace e2plan::eval {

// One evaluated configuration: the same model family run for several seeds on
// one dataset.
struct EvalReport {
  std::string task;     // "grid" or "graph"
  std::string variant;  // planner variant, "grid_vin", "oracle", "random"
  std::string group;    // "-" when the variant carries no group
  int dataset_size = 0;
  int graph_size = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_rate;
  std::vector<std::vector<double>> per_sample;  // per seed, percent per sample
  std::string config_json = "{}";

  double mean() const;
  double sd() const;  // sample sd over seeds, 0 for a single seed
};

EvalReport make_report(std::string task, std::string variant, std::string group,
                       int dataset_size, int graph_size,
                       const std::vector<std::pair<std::uint64_t, SuccessStats>>& runs,
                       std::string config_json = "{}");

// Zero-fine-tuning evaluation of one policy across a size series; each
// dataset yields one report labeled by the node count of its samples.
std::vector<EvalReport> size_generalization(
    const PolicyFn& policy, const std::vector<worlds::Dataset>& series,
    const RolloutConfig& cfg, const std::string& task, const std::string& variant,
    const std::string& group, std::uint64_t seed, int dataset_size);

// CSV with one row per seed (sd blank) followed by a mean row (seed = "mean",
// sd filled).  The CSV is the source of truth; plots are derived from it.
void emit_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path);

struct PlotPoint {
  double x;
  double mean;
  double sd;
};

struct PlotSeries {
  std::string name;
  std::vector<PlotPoint> points;  // sorted by x before drawing
};

// Success-rate line plot with shaded +-sd bands, written as a PNG.
void plot_success(const std::filesystem::path& path, const std::string& title,
                  const std::string& x_label, std::vector<PlotSeries> series);

}  // namespace e2plan::eval

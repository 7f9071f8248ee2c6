#include "e2plan/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "e2plan/common.hpp"

namespace e2plan::eval {

double EvalReport::mean() const {
  if (per_seed_rate.empty()) return 0.0;
  double acc = 0.0;
  for (double r : per_seed_rate) acc += r;
  return acc / static_cast<double>(per_seed_rate.size());
}

double EvalReport::sd() const {
  const std::size_t n = per_seed_rate.size();
  if (n < 2) return 0.0;
  const double m = mean();
  double acc = 0.0;
  for (double r : per_seed_rate) acc += (r - m) * (r - m);
  return std::sqrt(acc / static_cast<double>(n - 1));
}

EvalReport make_report(std::string task, std::string variant, std::string group,
                       int dataset_size, int graph_size,
                       const std::vector<std::pair<std::uint64_t, SuccessStats>>& runs,
                       std::string config_json) {
  EvalReport rep;
  rep.task = std::move(task);
  rep.variant = std::move(variant);
  rep.group = std::move(group);
  rep.dataset_size = dataset_size;
  rep.graph_size = graph_size;
  rep.config_json = std::move(config_json);
  for (const auto& [seed, stats] : runs) {
    rep.seeds.push_back(seed);
    rep.per_seed_rate.push_back(stats.rate());
    rep.per_sample.push_back(stats.per_sample);
  }
  return rep;
}

std::vector<EvalReport> size_generalization(
    const PolicyFn& policy, const std::vector<worlds::Dataset>& series,
    const RolloutConfig& cfg, const std::string& task, const std::string& variant,
    const std::string& group, std::uint64_t seed, int dataset_size) {
  std::vector<EvalReport> out;
  for (const auto& ds : series) {
    const int n = ds.samples.empty() ? 0 : ds.samples.front().graph.num_nodes();
    const SuccessStats stats = success_rate(policy, ds, cfg);
    out.push_back(make_report(task, variant, group, dataset_size, n, {{seed, stats}}));
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void emit_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file: " + path.string());
  out << "task,variant,group,seed,dataset_size,graph_size,success_rate,sd\n";
  for (const auto& rep : reports) {
    for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
      out << rep.task << ',' << rep.variant << ',' << rep.group << ','
          << rep.seeds[i] << ',' << rep.dataset_size << ',' << rep.graph_size
          << ',' << fmt(rep.per_seed_rate[i]) << ",\n";
    }
    out << rep.task << ',' << rep.variant << ',' << rep.group << ",mean,"
        << rep.dataset_size << ',' << rep.graph_size << ',' << fmt(rep.mean())
        << ',' << fmt(rep.sd()) << '\n';
  }
}

namespace {

const cv::Scalar kPalette[] = {
    {180, 119, 31},  // blue (BGR)
    {14, 127, 255},  // orange
    {44, 160, 44},   // green
    {40, 39, 214},   // red
    {189, 103, 148}, // purple
    {75, 86, 140},   // brown
};

}  // namespace

void plot_success(const std::filesystem::path& path, const std::string& title,
                  const std::string& x_label, std::vector<PlotSeries> series) {
  const int W = 900;
  const int H = 600;
  const int L = 90, R = 40, T = 60, B = 70;
  cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));

  double xmin = 0.0, xmax = 1.0;
  bool any = false;
  for (auto& s : series) {
    std::sort(s.points.begin(), s.points.end(),
              [](const PlotPoint& a, const PlotPoint& b) { return a.x < b.x; });
    for (const auto& p : s.points) {
      if (!any) {
        xmin = xmax = p.x;
        any = true;
      } else {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
      }
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;

  const auto px = [&](double x) {
    return L + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (W - L - R)));
  };
  const auto py = [&](double rate) {
    const double clamped = std::clamp(rate, 0.0, 100.0);
    return H - B - static_cast<int>(std::lround(clamped / 100.0 * (H - T - B)));
  };

  // Frame, horizontal grid every 20 points, y labels.
  cv::rectangle(img, {L, T}, {W - R, H - B}, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
  for (int g = 0; g <= 100; g += 20) {
    const int y = py(g);
    if (g > 0 && g < 100) {
      cv::line(img, {L, y}, {W - R, y}, cv::Scalar(225, 225, 225), 1, cv::LINE_AA);
    }
    cv::putText(img, std::to_string(g), {L - 42, y + 5}, cv::FONT_HERSHEY_SIMPLEX,
                0.45, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
  }
  cv::putText(img, title, {L, T - 25}, cv::FONT_HERSHEY_SIMPLEX, 0.7,
              cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
  cv::putText(img, x_label, {(L + W - R) / 2 - 60, H - 20}, cv::FONT_HERSHEY_SIMPLEX,
              0.5, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
  cv::putText(img, "success rate (%)", {8, T - 25}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
              cv::Scalar(60, 60, 60), 1, cv::LINE_AA);

  int ci = 0;
  int legend_y = T + 10;
  for (const auto& s : series) {
    const cv::Scalar color = kPalette[ci % (sizeof(kPalette) / sizeof(kPalette[0]))];
    ++ci;

    // sd band first so lines draw on top of it.
    if (s.points.size() >= 2) {
      std::vector<cv::Point> poly;
      for (const auto& p : s.points) poly.emplace_back(px(p.x), py(p.mean + p.sd));
      for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) {
        poly.emplace_back(px(it->x), py(it->mean - it->sd));
      }
      cv::Mat overlay = img.clone();
      cv::fillPoly(overlay, std::vector<std::vector<cv::Point>>{poly}, color,
                   cv::LINE_AA);
      cv::addWeighted(overlay, 0.18, img, 0.82, 0.0, img);
    }

    for (std::size_t i = 0; i + 1 < s.points.size(); ++i) {
      cv::line(img, {px(s.points[i].x), py(s.points[i].mean)},
               {px(s.points[i + 1].x), py(s.points[i + 1].mean)}, color, 2,
               cv::LINE_AA);
    }
    for (const auto& p : s.points) {
      cv::circle(img, {px(p.x), py(p.mean)}, 4, color, cv::FILLED, cv::LINE_AA);
    }

    cv::line(img, {W - R - 170, legend_y}, {W - R - 140, legend_y}, color, 2,
             cv::LINE_AA);
    cv::putText(img, s.name, {W - R - 132, legend_y + 5}, cv::FONT_HERSHEY_SIMPLEX,
                0.45, cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
    legend_y += 20;
  }

  // x tick labels at each distinct point.
  std::vector<double> xs;
  for (const auto& s : series) {
    for (const auto& p : s.points) xs.push_back(p.x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    cv::putText(img, buf, {px(x) - 14, H - B + 22}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
  }

  if (!cv::imwrite(path.string(), img)) {
    throw DataError("cannot write plot file: " + path.string());
  }
}

}  // namespace e2plan::eval

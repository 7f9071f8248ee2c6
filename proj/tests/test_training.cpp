#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "e2plan/training/training.hpp"

using namespace e2plan;
using training::TrainConfig;

namespace {

namespace fs = std::filesystem;

fs::path tmp_file(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("e2plan_train_" + name);
  fs::remove(p);
  return p;
}

// Central-difference check of d(loss)/d(param) for every parameter entry.
template <class Build>
void fd_check(nn::ParamStore<double>& params, Build build, double tol) {
  nn::Tape<double> t0(&params);
  const int loss0 = build(t0);
  params.zero_grads();
  t0.backward(loss0);
  const auto grads = params.grads;

  const double eps = 1e-6;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (int i = 0; i < params.values[p].size(); ++i) {
      const double keep = params.values[p](i);
      params.values[p](i) = keep + eps;
      nn::Tape<double> tp(&params);
      const double up = tp.scalar(build(tp));
      params.values[p](i) = keep - eps;
      nn::Tape<double> tm(&params);
      const double dn = tm.scalar(build(tm));
      params.values[p](i) = keep;
      const double fd = (up - dn) / (2 * eps);
      const double an = grads[p](i);
      const double scale = std::max({1.0, std::abs(fd), std::abs(an)});
      CHECK(std::abs(fd - an) / scale < tol);
    }
  }
}

planner::PlannerConfig small_config(planner::Variant v) {
  planner::PlannerConfig cfg;
  cfg.variant = v;
  cfg.group = "C4";
  cfg.k_iters = 5;
  cfg.r_dim = 1;
  cfg.q_size = 2;
  cfg.hidden_dim = 8;
  return cfg;
}

planner::PlannerConfig overfit_config(planner::Variant v) {
  planner::PlannerConfig cfg;
  cfg.variant = v;
  cfg.group = "C4";
  cfg.k_iters = 6;
  cfg.r_dim = 2;
  cfg.q_size = 4;
  // Smallest widths that comfortably memorize the task; the dense absolute
  // variant needs extra room to encode raw coordinates.
  cfg.hidden_dim = (v == planner::Variant::no_sym) ? 24 : 16;
  return cfg;
}

double min_train_loss(const training::MetricLog& log) {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& r : log.rows) {
    if (r.split == "train" && r.metric == "loss") v = std::min(v, r.value);
  }
  return v;
}

// Loss of the model as it stands, averaged per sample like batch-1 training.
double current_loss(planner::MpVin<double>& m, const worlds::Dataset& ds,
                    bool cosine) {
  double acc = 0.0;
  for (const auto& s : ds.samples) {
    const MatX<double> pi = planner::plan(m, s.graph);
    double sample = 0.0;
    const auto rows = training::supervised_rows(s);
    for (int i : rows) {
      const Eigen::RowVector2d p(pi(i, 0), pi(i, 1));
      const Eigen::RowVector2d l(s.labels(i, 0), s.labels(i, 1));
      if (cosine) {
        sample += 1.0 - p.dot(l) / (p.norm() * l.norm() + 1e-12);
      } else {
        sample += (p - l).squaredNorm();
      }
    }
    acc += sample / static_cast<double>(rows.size());
  }
  return acc / static_cast<double>(ds.samples.size());
}

}  // namespace

TEST_SUITE("tape_losses") {
  TEST_CASE("cosine loss hits its landmark values") {
    nn::ParamStore<double> params;
    nn::Tape<double> t(&params);
    MatX<double> pred(3, 2);
    pred << 1, 0, 0, 2, -3, 0;
    MatX<double> target(3, 2);
    target << 1, 0, 1, 0, 1, 0;
    const std::vector<int> all = {0, 1, 2};
    // aligned -> ~0, orthogonal -> 1, opposed -> 2.
    const std::vector<int> r0 = {0};
    const std::vector<int> r1 = {1};
    const std::vector<int> r2 = {2};
    CHECK(t.scalar(t.cosine_masked(t.leaf(pred), &target, &r0)) ==
          doctest::Approx(0.0).epsilon(1e-9));
    CHECK(t.scalar(t.cosine_masked(t.leaf(pred), &target, &r1)) == doctest::Approx(1.0));
    CHECK(t.scalar(t.cosine_masked(t.leaf(pred), &target, &r2)) == doctest::Approx(2.0));
    const double mean = t.scalar(t.cosine_masked(t.leaf(pred), &target, &all));
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("cosine loss rejects bad inputs") {
    nn::ParamStore<double> params;
    nn::Tape<double> t(&params);
    const MatX<double> pred = MatX<double>::Ones(2, 2);
    const MatX<double> bad = MatX<double>::Ones(3, 2);
    const MatX<double> good = MatX<double>::Ones(2, 2);
    const std::vector<int> rows = {0};
    const std::vector<int> none;
    const int x = t.leaf(pred);
    CHECK_THROWS_AS(t.cosine_masked(x, &bad, &rows), ShapeError);
    CHECK_THROWS_AS(t.cosine_masked(x, &good, &none), DataError);
  }

  TEST_CASE("cosine and scale gradients match finite differences") {
    std::mt19937_64 rng(3);
    nn::ParamStore<double> params;
    auto mlp = nn::make_dense_mlp<double>({3, 6, 2}, params, rng, "f");
    MatX<double> x(5, 3);
    std::normal_distribution<double> dist;
    for (int i = 0; i < x.size(); ++i) x(i) = dist(rng);
    MatX<double> target(5, 2);
    for (int i = 0; i < target.size(); ++i) target(i) = dist(rng);
    const std::vector<int> rows = {0, 2, 4};

    fd_check(params,
             [&](nn::Tape<double>& t) {
               return t.cosine_masked(mlp.forward(t, t.leaf(x)), &target, &rows);
             },
             1e-6);
    fd_check(params,
             [&](nn::Tape<double>& t) {
               const int y = t.scale(mlp.forward(t, t.leaf(x)), 0.37);
               return t.mse_masked(y, &target, &rows);
             },
             1e-6);
    fd_check(params,
             [&](nn::Tape<double>& t) {
               const int a = t.mse_masked(mlp.forward(t, t.leaf(x)), &target, &rows);
               const int b = t.cosine_masked(mlp.forward(t, t.leaf(x)), &target, &rows);
               return t.scale(t.add(a, b), 0.5);
             },
             1e-6);
  }
}

TEST_SUITE("train_config") {
  TEST_CASE("json round trip") {
    TrainConfig cfg;
    cfg.learning_rate = 5e-4;
    cfg.batch_size = 16;
    cfg.epochs = 7;
    cfg.loss = "cosine";
    cfg.seed = 9;
    const auto j = training::train_config_to_json(cfg);
    const TrainConfig back = training::train_config_from_json(j);
    CHECK(back.learning_rate == cfg.learning_rate);
    CHECK(back.batch_size == cfg.batch_size);
    CHECK(back.epochs == cfg.epochs);
    CHECK(back.loss == cfg.loss);
    CHECK(back.seed == cfg.seed);
  }

  TEST_CASE("validation rejects bad fields") {
    TrainConfig cfg;
    cfg.optimizer = "adam";
    CHECK_THROWS_AS(training::validate(cfg), ConfigError);
    cfg = TrainConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(training::validate(cfg), ConfigError);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(training::validate(cfg), ConfigError);
    cfg = TrainConfig{};
    cfg.loss = "hinge";
    CHECK_THROWS_AS(training::validate(cfg), ConfigError);
    cfg = TrainConfig{};
    cfg.epochs = -1;
    CHECK_THROWS_AS(training::validate(cfg), ConfigError);
  }

  TEST_CASE("metric log renders csv") {
    training::MetricLog log;
    log.add(1, "train", "loss", 0.5, 3);
    log.add(1, "val", "rollout_success", 75.0, 3);
    const std::string csv = log.to_csv();
    CHECK(csv.find("epoch,split,metric,value,seed\n") == 0);
    CHECK(csv.find("1,train,loss,0.5,3\n") != std::string::npos);
    CHECK(csv.find("1,val,rollout_success,75,3\n") != std::string::npos);
  }
}

TEST_SUITE("rmsprop") {
  TEST_CASE("matches the hand recurrence on a quadratic") {
    nn::ParamStore<double> params;
    params.add("w", MatX<double>::Constant(1, 1, 2.0));
    MatX<double> target = MatX<double>::Constant(1, 1, 3.0);
    const std::vector<int> rows = {0};
    training::RmsProp<double> opt(params, 0.1);

    double w = 2.0;
    double s = 0.0;
    for (int step = 0; step < 5; ++step) {
      nn::Tape<double> t(&params);
      const int loss = t.mse_masked(t.param(0), &target, &rows);
      params.zero_grads();
      t.backward(loss);
      opt.step(params);

      const double g = 2.0 * (w - 3.0);
      s = 0.99 * s + (1.0 - 0.99) * g * g;
      w -= 0.1 * g / (std::sqrt(s) + 1e-8);
      CHECK(params.values[0](0, 0) == doctest::Approx(w).epsilon(1e-14));
    }
    // Heading toward the minimum at w = 3.
    CHECK(params.values[0](0, 0) > 2.0);
  }
}

TEST_SUITE("action_accuracy") {
  TEST_CASE("agrees with a direct recomputation") {
    const auto ds = worlds::generate_grid_dataset(3, 7, 41, "t");
    auto m = planner::make_mp_vin<double>(small_config(planner::Variant::r2), 5);
    const double got = training::action_accuracy(m, ds);

    long total = 0;
    long hit = 0;
    for (const auto& s : ds.samples) {
      const Mat pi = planner::plan(m, s.graph);
      for (int i = 0; i < s.graph.num_nodes(); ++i) {
        if (!s.reachable[i] || i == s.graph.goal_index) continue;
        auto best_by = [&](double dx, double dy) {
          int best = -1;
          double bc = -2.0;
          for (int e = 0; e < s.graph.num_edges(); ++e) {
            if (s.graph.edge_recv[e] != i) continue;
            const int j = s.graph.edge_send[e];
            const double ex = s.graph.positions(j, 0) - s.graph.positions(i, 0);
            const double ey = s.graph.positions(j, 1) - s.graph.positions(i, 1);
            const double c =
                (dx * ex + dy * ey) / (std::hypot(dx, dy) * std::hypot(ex, ey));
            if (c > bc + 1e-15 || (std::abs(c - bc) <= 1e-15 && j < best)) {
              bc = c;
              best = j;
            }
          }
          return best;
        };
        ++total;
        if (best_by(pi(i, 0), pi(i, 1)) == best_by(s.labels(i, 0), s.labels(i, 1))) {
          ++hit;
        }
      }
    }
    CHECK(got == doctest::Approx(100.0 * hit / total));
  }

  TEST_CASE("grid VIN accuracy agrees with a direct recomputation") {
    const auto ds = worlds::generate_grid_dataset(3, 7, 43, "t");
    auto m = planner::make_grid_vin<double>(4, 4, 6);
    const double got = training::action_accuracy(m, ds, 7);

    long total = 0;
    long hit = 0;
    for (const auto& s : ds.samples) {
      const auto proj = worlds::discretize_graph_to_grid(s.graph, 7);
      const Mat logits = planner::grid_vin_plan(m, proj.grid);
      for (int i = 0; i < s.graph.num_nodes(); ++i) {
        if (!s.reachable[i] || i == s.graph.goal_index) continue;
        int arg = 0;
        for (int a = 1; a < 4; ++a) {
          if (logits(proj.node_cell[i], a) > logits(proj.node_cell[i], arg)) arg = a;
        }
        ++total;
        if (arg == static_cast<int>(worlds::action_discretize(s.labels(i, 0),
                                                              s.labels(i, 1)))) {
          ++hit;
        }
      }
    }
    CHECK(got == doctest::Approx(100.0 * hit / total));
  }
}

TEST_SUITE("train") {
  TEST_CASE("overfit drives the loss down for every variant") {
    const auto ds = worlds::generate_graph_dataset(10, 16, 6.0, 6, 0.1, 31, "t");
    for (const auto v : {planner::Variant::no_sym, planner::Variant::group_only,
                         planner::Variant::r2, planner::Variant::r2_group}) {
      const std::string vn = planner::variant_name(v);
      CAPTURE(vn);
      auto m = planner::make_mp_vin<double>(overfit_config(v), 7);
      const double head = current_loss(m, ds, false);
      TrainConfig cfg;
      cfg.learning_rate = 3e-3;
      cfg.batch_size = 1;
      cfg.epochs = 200;
      cfg.patience = 200;
      cfg.seed = 1;
      const auto res = training::train_mp_vin(m, ds, ds, cfg, fs::path());
      const double tail = min_train_loss(res.log);
      CHECK(head > 0.0);
      CHECK(tail <= 0.1 * head);
    }
  }

  TEST_CASE("cosine loss also overfits") {
    const auto ds = worlds::generate_graph_dataset(10, 16, 6.0, 6, 0.1, 31, "t");
    auto m = planner::make_mp_vin<double>(overfit_config(planner::Variant::r2_group), 7);
    const double head = current_loss(m, ds, true);
    TrainConfig cfg;
    cfg.learning_rate = 3e-3;
    cfg.batch_size = 1;
    cfg.epochs = 200;
    cfg.patience = 200;
    cfg.loss = "cosine";
    cfg.seed = 1;
    const auto res = training::train_mp_vin(m, ds, ds, cfg, fs::path());
    CHECK(min_train_loss(res.log) <= 0.1 * head);
  }

  TEST_CASE("grid VIN overfits a small batch") {
    const auto ds = worlds::generate_grid_dataset(10, 5, 31, "t");
    auto m = planner::make_grid_vin<double>(12, 4, 7);

    // Untrained cross-entropy, averaged per sample as batch-1 training does.
    double head = 0.0;
    for (const auto& s : ds.samples) {
      const auto proj = worlds::discretize_graph_to_grid(s.graph, 5);
      const Mat logits = planner::grid_vin_plan(m, proj.grid);
      const auto gs = worlds::dijkstra_labels(worlds::grid_to_graph(proj.grid));
      double sample = 0.0;
      long n = 0;
      for (int c = 0; c < gs.graph.num_nodes(); ++c) {
        if (!gs.reachable[c] || c == gs.graph.goal_index) continue;
        const int a = static_cast<int>(worlds::action_discretize(gs.labels(c, 0), gs.labels(c, 1)));
        const double mx = logits.row(c).maxCoeff();
        const double lse = std::log((logits.row(c).array() - mx).exp().sum()) + mx;
        sample += lse - logits(c, a);
        ++n;
      }
      head += sample / static_cast<double>(n);
    }
    head /= static_cast<double>(ds.samples.size());

    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 1;
    cfg.epochs = 200;
    cfg.patience = 200;
    cfg.seed = 1;
    const auto res = training::train_grid_vin(m, ds, ds, cfg, fs::path(), 5);
    CHECK(min_train_loss(res.log) <= 0.1 * head);
  }

  TEST_CASE("training is deterministic") {
    const auto ds = worlds::generate_grid_dataset(6, 7, 37, "t");
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 4;
    cfg.seed = 11;
    auto run = [&]() {
      auto m = planner::make_mp_vin<double>(small_config(planner::Variant::r2_group), 7);
      return training::train_mp_vin(m, ds, ds, cfg, fs::path());
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.log.rows.size() == b.log.rows.size());
    for (std::size_t i = 0; i < a.log.rows.size(); ++i) {
      CHECK(a.log.rows[i].value == b.log.rows[i].value);
      CHECK(a.log.rows[i].metric == b.log.rows[i].metric);
    }
  }

  TEST_CASE("divergence raises NumericalError") {
    const auto ds = worlds::generate_grid_dataset(6, 7, 37, "t");
    auto m = planner::make_mp_vin<double>(small_config(planner::Variant::no_sym), 7);
    TrainConfig cfg;
    cfg.learning_rate = 1e80;
    cfg.epochs = 5;
    cfg.batch_size = 3;
    CHECK_THROWS_AS(training::train_mp_vin(m, ds, ds, cfg, fs::path()),
                    NumericalError);
  }

  TEST_CASE("vanishing steps trigger early stopping after patience epochs") {
    const auto ds = worlds::generate_grid_dataset(4, 7, 37, "t");
    auto m = planner::make_mp_vin<double>(small_config(planner::Variant::r2), 7);
    TrainConfig cfg;
    cfg.learning_rate = 1e-300;  // parameters never move, so val never improves
    cfg.epochs = 50;
    cfg.patience = 3;
    const auto res = training::train_mp_vin(m, ds, ds, cfg, fs::path());
    CHECK(res.best_epoch == 1);
    CHECK(res.epochs_run == 1 + cfg.patience);
  }

  TEST_CASE("zero epochs still writes an initial checkpoint") {
    const auto path = tmp_file("init.e2ck");
    auto m = planner::make_mp_vin<double>(small_config(planner::Variant::r2_group), 7);
    TrainConfig cfg;
    cfg.epochs = 0;
    const auto ds = worlds::generate_grid_dataset(2, 7, 37, "t");
    const auto res = training::train_mp_vin(m, ds, ds, cfg, path);
    CHECK(res.log.rows.empty());
    auto back = planner::load_mp_vin_checkpoint<double>(path);
    REQUIRE(back.params.size() == m.params.size());
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      CHECK(back.params.values[i] == m.params.values[i]);
    }
    CHECK(planner::read_checkpoint_info(path).epoch == 0);
    fs::remove(path);
  }

  TEST_CASE("best checkpoint carries the best epoch") {
    const auto path = tmp_file("best.e2ck");
    const auto ds = worlds::generate_grid_dataset(6, 7, 47, "t");
    auto m = planner::make_mp_vin<double>(small_config(planner::Variant::r2_group), 7);
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 12;
    cfg.seed = 2;
    const auto res = training::train_mp_vin(m, ds, ds, cfg, path);
    REQUIRE(fs::exists(path));
    const auto info = planner::read_checkpoint_info(path);
    CHECK(info.epoch == res.best_epoch);

    auto best = planner::load_mp_vin_checkpoint<double>(path);
    eval::RolloutConfig rc;
    rc.seed = cfg.seed;
    const double replay =
        eval::success_rate(eval::model_policy(best), ds, rc).rate();
    CHECK(replay == doctest::Approx(res.best_val_success).epsilon(1e-12));
    fs::remove(path);
  }

  TEST_CASE("constrained model stays equivariant after training") {
    const auto ds = worlds::generate_grid_dataset(6, 7, 53, "t");
    auto m = planner::make_mp_vin<double>(small_config(planner::Variant::r2_group), 7);
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 30;
    cfg.seed = 3;
    training::train_mp_vin(m, ds, ds, cfg, fs::path());
    const auto g = sym::parse_group("C4");
    const auto report = planner::equivariance_audit(m, ds.samples[0].graph, g);
    CHECK(report.max_violation < 1e-10);
  }
}

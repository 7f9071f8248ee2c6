#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "e2plan/nn/layers.hpp"
#include "e2plan/symmetry/field_type.hpp"
#include "e2plan/symmetry/group.hpp"
#include "e2plan/worlds/world.hpp"

namespace e2plan::planner {

enum class Variant { no_sym, group_only, r2, r2_group };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

// group_only and r2_group constrain their layers to intertwiners; r2 and
// r2_group see geometry only through relative positions, the others through
// absolute endpoint positions.
inline bool variant_constrained(Variant v) {
  return v == Variant::group_only || v == Variant::r2_group;
}
inline bool variant_relative(Variant v) {
  return v == Variant::r2 || v == Variant::r2_group;
}

struct PlannerConfig {
  Variant variant = Variant::r2_group;
  std::string group = "D8";  // used by constrained variants only
  int k_iters = 20;
  int r_dim = 1;
  int q_size = 8;
  int hidden_dim = 64;
};

void validate(const PlannerConfig& cfg);
std::string planner_config_to_json(const PlannerConfig& cfg);
PlannerConfig planner_config_from_json(const std::string& json_text);

// Message-passing value iteration network.  r_mp infers the reward field from
// node features, then K rounds of q_mp over [r; v] with a channel max realize
// the Bellman backup; the policy head maps the final q field to a per-node
// planar action.
template <class S>
struct MpVin {
  PlannerConfig config;
  std::optional<sym::Group> group;
  int block = 1;  // group order for constrained variants, else 1
  nn::ParamStore<S> params;
  nn::MessagePassing<S> r_mp;
  nn::MessagePassing<S> q_mp;
  nn::Linear<S> policy_head;

  int v_width() const { return block; }
  int q_width() const { return config.q_size * block; }
  nn::PosMode pos_mode() const {
    return variant_relative(config.variant) ? nn::PosMode::relative
                                            : nn::PosMode::absolute_pair;
  }
};

namespace detail {

inline sym::FieldType concat_types(const std::vector<sym::FieldType>& fts) {
  std::vector<sym::Representation> parts;
  for (const auto& ft : fts) {
    for (const auto& p : ft.parts()) parts.push_back(p);
  }
  return sym::FieldType(parts);
}

}  // namespace detail

template <class S>
MpVin<S> make_mp_vin(const PlannerConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  MpVin<S> m;
  m.config = cfg;
  std::mt19937_64 rng(seed);
  const int posw = variant_relative(cfg.variant) ? 2 : 4;
  if (variant_constrained(cfg.variant)) {
    m.group = sym::parse_group(cfg.group);
    const sym::Group& g = *m.group;
    m.block = g.order();
    nn::BasisCache cache;
    const auto feat_ft = sym::field_type_copies(sym::rep_trivial(g), 2);
    const auto pos_ft = sym::field_type_copies(sym::rep_standard(g), posw / 2);
    const auto regular = sym::rep_regular(g);
    const auto hidden_ft =
        sym::field_type_copies(regular, std::max(1, cfg.hidden_dim / g.order()));
    const auto r_ft = sym::field_type_copies(regular, cfg.r_dim);
    const auto rv_ft = sym::field_type_copies(regular, cfg.r_dim + 1);
    const auto q_ft = sym::field_type_copies(regular, cfg.q_size);
    m.r_mp.propagate = nn::make_equivariant_mlp<S>(
        cache, {detail::concat_types({feat_ft, feat_ft, pos_ft}), hidden_ft, r_ft},
        m.params, rng, "r_mp.prop");
    m.r_mp.update = nn::make_equivariant_mlp<S>(
        cache, {detail::concat_types({feat_ft, r_ft}), hidden_ft, r_ft}, m.params,
        rng, "r_mp.upd");
    m.q_mp.propagate = nn::make_equivariant_mlp<S>(
        cache, {detail::concat_types({rv_ft, rv_ft, pos_ft}), hidden_ft, q_ft},
        m.params, rng, "q_mp.prop");
    m.q_mp.update = nn::make_equivariant_mlp<S>(
        cache, {detail::concat_types({rv_ft, q_ft}), hidden_ft, q_ft}, m.params,
        rng, "q_mp.upd");
    m.policy_head = nn::make_equivariant_linear<S>(
        cache, q_ft, sym::FieldType({sym::rep_standard(g)}), m.params, rng, "policy");
  } else {
    const int h = cfg.hidden_dim;
    const int rvw = cfg.r_dim + 1;
    m.r_mp.propagate =
        nn::make_dense_mlp<S>({4 + posw, h, cfg.r_dim}, m.params, rng, "r_mp.prop");
    m.r_mp.update =
        nn::make_dense_mlp<S>({2 + cfg.r_dim, h, cfg.r_dim}, m.params, rng, "r_mp.upd");
    m.q_mp.propagate =
        nn::make_dense_mlp<S>({2 * rvw + posw, h, cfg.q_size}, m.params, rng, "q_mp.prop");
    m.q_mp.update =
        nn::make_dense_mlp<S>({rvw + cfg.q_size, h, cfg.q_size}, m.params, rng, "q_mp.upd");
    m.policy_head = nn::make_dense_linear<S>(cfg.q_size, 2, false, m.params, rng, "policy");
  }
  return m;
}

// Model-facing view of one or more stacked graphs: node features are the
// [obstacle, goal] flags; geometry enters only through the per-edge position
// features.
template <class S>
struct PlanInput {
  nn::GraphTopology topo;
  MatX<S> positions;  // n x 2
  MatX<S> feat;       // n x 2
  MatX<S> edge_pos;

  void refresh_edge_pos(nn::PosMode mode) {
    edge_pos = nn::edge_pos_features<S>(topo, positions, mode);
  }
};

template <class S>
void append_graph(PlanInput<S>& in, const worlds::GeometricGraph& g) {
  if (g.node_features.cols() != 4) {
    throw ShapeError("graph node features must be [x, y, obstacle, goal]");
  }
  const int base = in.topo.n_nodes;
  const int n = g.num_nodes();
  in.positions.conservativeResize(base + n, 2);
  in.feat.conservativeResize(base + n, 2);
  for (int i = 0; i < n; ++i) {
    in.positions(base + i, 0) = static_cast<S>(g.positions(i, 0));
    in.positions(base + i, 1) = static_cast<S>(g.positions(i, 1));
    in.feat(base + i, 0) = static_cast<S>(g.node_features(i, worlds::kFeatObstacle));
    in.feat(base + i, 1) = static_cast<S>(g.node_features(i, worlds::kFeatGoal));
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    in.topo.recv.push_back(base + g.edge_recv[e]);
    in.topo.send.push_back(base + g.edge_send[e]);
  }
  in.topo.n_nodes = base + n;
}

template <class S>
PlanInput<S> make_plan_input(const MpVin<S>& m, const worlds::GeometricGraph& g) {
  PlanInput<S> in;
  in.positions.resize(0, 2);
  in.feat.resize(0, 2);
  append_graph(in, g);
  in.refresh_edge_pos(m.pos_mode());
  return in;
}

struct PlanNodes {
  int r = -1;
  int q = -1;
  int pi = -1;
};

template <class S>
PlanNodes plan_on_tape(const MpVin<S>& m, nn::Tape<S>& t, const PlanInput<S>& in) {
  PlanNodes out;
  const int feat = t.leaf(in.feat);
  const int edge_pos = t.leaf(in.edge_pos);
  out.r = m.r_mp.forward(t, in.topo, feat, edge_pos);
  int v = t.leaf(MatX<S>::Zero(in.topo.n_nodes, m.v_width()));
  for (int k = 0; k < m.config.k_iters; ++k) {
    const int rv = t.concat_cols({out.r, v});
    out.q = m.q_mp.forward(t, in.topo, rv, edge_pos);
    v = t.max_over_copies(out.q, m.config.q_size, m.block);
  }
  out.pi = m.policy_head.forward(t, out.q);
  return out;
}

template <class S>
MatX<S> plan(MpVin<S>& m, const PlanInput<S>& in) {
  nn::Tape<S> t(&m.params);
  return t.value(plan_on_tape(m, t, in).pi);
}

template <class S>
MatX<S> plan(MpVin<S>& m, const worlds::GeometricGraph& g) {
  const PlanInput<S> in = make_plan_input(m, g);
  return plan(m, in);
}

struct AuditReport {
  std::vector<double> violation;  // indexed by group element
  double max_violation = 0.0;
};

// Relative violation of rho_std(g) * Pi(M) = Pi(g * M) per group element,
// with positions rotated about `center` (graph centroid by default).  The
// input graph is left untouched for the identity so it reports exactly zero.
template <class S>
AuditReport equivariance_audit(MpVin<S>& m, const worlds::GeometricGraph& g,
                               const sym::Group& group,
                               std::optional<std::array<double, 2>> center = {}) {
  const PlanInput<S> base_in = make_plan_input(m, g);
  const MatX<S> base = plan(m, base_in);
  const double base_norm = std::sqrt(static_cast<double>(base.squaredNorm()));
  double cx = 0.0;
  double cy = 0.0;
  if (center) {
    cx = (*center)[0];
    cy = (*center)[1];
  } else {
    for (int i = 0; i < g.num_nodes(); ++i) {
      cx += g.positions(i, 0);
      cy += g.positions(i, 1);
    }
    cx /= g.num_nodes();
    cy /= g.num_nodes();
  }
  const sym::Representation std_rep = sym::rep_standard(group);
  AuditReport report;
  report.violation.assign(group.order(), 0.0);
  for (int e = 0; e < group.order(); ++e) {
    if (group.element(e) == group.identity()) continue;
    const Mat R = std_rep.matrix(e);
    PlanInput<S> in = base_in;
    for (int i = 0; i < in.topo.n_nodes; ++i) {
      const double x = static_cast<double>(base_in.positions(i, 0)) - cx;
      const double y = static_cast<double>(base_in.positions(i, 1)) - cy;
      in.positions(i, 0) = static_cast<S>(R(0, 0) * x + R(0, 1) * y + cx);
      in.positions(i, 1) = static_cast<S>(R(1, 0) * x + R(1, 1) * y + cy);
    }
    in.refresh_edge_pos(m.pos_mode());
    const MatX<S> out = plan(m, in);
    const MatX<S> expected = base * R.cast<S>().transpose();
    const double err = std::sqrt(static_cast<double>((expected - out).squaredNorm()));
    report.violation[e] = base_norm > 0.0 ? err / base_norm : err;
  }
  report.max_violation =
      *std::max_element(report.violation.begin(), report.violation.end());
  return report;
}

}  // namespace e2plan::planner

#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "e2plan/nn/basis.hpp"
#include "e2plan/nn/tape.hpp"

namespace e2plan::nn {

// Linear map, either dense or constrained to an intertwiner span.  For
// constrained layers the learnable parameters are coefficients over an
// orthonormal basis, so W is equivariant for every parameter setting.
template <class S>
struct Linear {
  int din = 0;
  int dout = 0;
  bool constrained = false;
  MatX<S> basis;  // constrained only: rank x (dout*din)
  int w_pid = -1;
  int b_pid = -1;
  VecX<S> bias_mask;

  int forward(Tape<S>& t, int x) const {
    if (t.value(x).cols() != din) throw ShapeError("linear: input width mismatch");
    int w;
    if (constrained) {
      w = t.weight_from_basis(t.param(w_pid), &basis, dout, din);
    } else {
      w = t.param(w_pid);
    }
    int y = t.matmul_nt(x, w);
    if (b_pid >= 0) y = t.add_bias(y, t.param(b_pid), &bias_mask);
    return y;
  }

  // Realized weight matrix (dout x din).
  MatX<S> weight(const ParamStore<S>& ps) const {
    if (!constrained) return ps.values[w_pid];
    MatX<S> flat = ps.values[w_pid] * basis;
    return Eigen::Map<const MatX<S>>(flat.data(), dout, din);
  }
};

template <class S>
S init_bound(int fan_in) {
  return S(1) / std::sqrt(static_cast<S>(fan_in));
}

template <class S>
MatX<S> uniform_init(int rows, int cols, S bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound),
                                              static_cast<double>(bound));
  MatX<S> m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<S>(dist(rng));
  return m;
}

template <class S>
Linear<S> make_equivariant_linear(BasisCache& cache, const sym::FieldType& in,
                                  const sym::FieldType& out, ParamStore<S>& ps,
                                  std::mt19937_64& rng, const std::string& name) {
  Linear<S> l;
  l.din = in.total_dim();
  l.dout = out.total_dim();
  l.constrained = true;
  l.basis = cache.stacked(out, in).cast<S>();
  if (l.basis.rows() == 0) {
    throw ConfigError("no equivariant maps exist between the given field types");
  }
  // The basis rows are Frobenius-orthonormal, so matching the per-entry
  // variance of a dense layer needs bound sqrt(dout / n_basis); with the full
  // basis this reduces to the usual 1/sqrt(din).
  const S bound = std::sqrt(static_cast<S>(l.dout) / static_cast<S>(l.basis.rows()));
  l.w_pid = ps.add(name + ".coeff",
                   uniform_init<S>(1, static_cast<int>(l.basis.rows()), bound, rng));
  VecX<S> mask = VecX<S>::Zero(l.dout);
  bool any = false;
  for (std::size_t p = 0; p < out.parts().size(); ++p) {
    if (out.parts()[p].tag() == sym::RepTag::trivial) {
      mask(out.part_offset(static_cast<int>(p))) = S(1);
      any = true;
    }
  }
  if (any) {
    l.bias_mask = mask;
    l.b_pid = ps.add(name + ".bias", MatX<S>::Zero(1, l.dout));
  }
  return l;
}

template <class S>
Linear<S> make_dense_linear(int din, int dout, bool bias, ParamStore<S>& ps,
                            std::mt19937_64& rng, const std::string& name) {
  Linear<S> l;
  l.din = din;
  l.dout = dout;
  l.w_pid = ps.add(name + ".weight",
                   uniform_init<S>(dout, din, init_bound<S>(din), rng));
  if (bias) {
    l.bias_mask = VecX<S>::Ones(dout);
    l.b_pid = ps.add(name + ".bias", MatX<S>::Zero(1, dout));
  }
  return l;
}

// Alternating Linear / ReLU stack; last layer linear.
template <class S>
struct Mlp {
  std::vector<Linear<S>> layers;

  int forward(Tape<S>& t, int x) const {
    int h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      h = layers[i].forward(t, h);
      if (i + 1 < layers.size()) h = t.relu(h);
    }
    return h;
  }
};

// chain = [input, hidden..., output] field types.  Hidden types must act by
// permutations so the element-wise ReLU stays equivariant.
template <class S>
Mlp<S> make_equivariant_mlp(BasisCache& cache, const std::vector<sym::FieldType>& chain,
                            ParamStore<S>& ps, std::mt19937_64& rng,
                            const std::string& name) {
  if (chain.size() < 2) throw ConfigError("mlp chain needs at least two field types");
  for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
    for (const auto& part : chain[i].parts()) {
      if (!sym::is_permutation_representation(part)) {
        throw ConfigError("mlp hidden field types must consist of regular parts");
      }
    }
  }
  Mlp<S> mlp;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    mlp.layers.push_back(make_equivariant_linear(cache, chain[i], chain[i + 1], ps, rng,
                                                 name + ".l" + std::to_string(i)));
  }
  return mlp;
}

template <class S>
Mlp<S> make_dense_mlp(const std::vector<int>& dims, ParamStore<S>& ps,
                      std::mt19937_64& rng, const std::string& name) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least two widths");
  Mlp<S> mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    mlp.layers.push_back(make_dense_linear<S>(dims[i], dims[i + 1], true, ps, rng,
                                              name + ".l" + std::to_string(i)));
  }
  return mlp;
}

// Directed edge lists for message passing; recv[e] receives from send[e].
struct GraphTopology {
  int n_nodes = 0;
  std::vector<int> recv;
  std::vector<int> send;
};

enum class PosMode { relative, absolute_pair };

// h'_i = update(h_i, sum_j propagate(h_i, h_j, pos_ij)); pos_ij enters as a
// per-edge leaf built by edge_pos_features.
template <class S>
struct MessagePassing {
  Mlp<S> propagate;
  Mlp<S> update;

  int forward(Tape<S>& t, const GraphTopology& topo, int h, int edge_pos) const {
    const int hi = t.gather_rows(h, &topo.recv);
    const int hj = t.gather_rows(h, &topo.send);
    const int msg = propagate.forward(t, t.concat_cols({hi, hj, edge_pos}));
    const int agg = t.scatter_sum(msg, &topo.recv, topo.n_nodes);
    return update.forward(t, t.concat_cols({h, agg}));
  }
};

// Per-edge position features: x_i - x_j (relative) or [x_i, x_j] (absolute).
template <class S>
MatX<S> edge_pos_features(const GraphTopology& topo, const MatX<S>& positions,
                          PosMode mode) {
  const int e = static_cast<int>(topo.recv.size());
  MatX<S> out(e, mode == PosMode::relative ? 2 : 4);
  for (int r = 0; r < e; ++r) {
    const auto xi = positions.row(topo.recv[r]);
    const auto xj = positions.row(topo.send[r]);
    if (mode == PosMode::relative) {
      out.row(r) = xi - xj;
    } else {
      out.block(r, 0, 1, 2) = xi;
      out.block(r, 2, 1, 2) = xj;
    }
  }
  return out;
}

// Lifts C_K-transformable camera features to G-features: a single constrained
// linear map with rep_in = d copies of rho_reg^{C_K} and rep_out = m copies of
// Res^G_{C_K}[rho_reg^G].  Input layout: column c*K + k holds feature c of
// camera k, so each d-copy is one feature across the K cameras.
template <class S>
struct Lift {
  int cameras = 0;
  int features_in = 0;
  int fields_out = 0;
  Linear<S> linear;
  std::optional<sym::FieldType> in_type;   // over C_K
  std::optional<sym::FieldType> out_type;  // over C_K (restricted blocks)

  int forward(Tape<S>& t, int x) const { return linear.forward(t, x); }
};

template <class S>
Lift<S> make_lift(BasisCache& cache, int k_cameras, int d_features, int m_fields,
                  const sym::Group& target, ParamStore<S>& ps, std::mt19937_64& rng,
                  const std::string& name) {
  const sym::Group ck = sym::make_group(sym::GroupKind::cyclic, k_cameras);
  const std::vector<int> embed = sym::canonical_embedding(ck, target);
  Lift<S> lift;
  lift.cameras = k_cameras;
  lift.features_in = d_features;
  lift.fields_out = m_fields;
  lift.in_type = sym::field_type_copies(sym::rep_regular(ck), d_features);
  lift.out_type = sym::field_type_copies(
      sym::rep_restrict(sym::rep_regular(target), ck, embed), m_fields);
  lift.linear =
      make_equivariant_linear(cache, *lift.in_type, *lift.out_type, ps, rng, name);
  return lift;
}

}  // namespace e2plan::nn

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "e2plan/common.hpp"

namespace e2plan::nn {

// Named parameter arrays with matching gradient slots.
template <class S>
struct ParamStore {
  std::vector<std::string> names;
  std::vector<MatX<S>> values;
  std::vector<MatX<S>> grads;

  int add(std::string name, MatX<S> value) {
    names.push_back(std::move(name));
    grads.emplace_back(MatX<S>::Zero(value.rows(), value.cols()));
    values.push_back(std::move(value));
    return static_cast<int>(values.size()) - 1;
  }
  void zero_grads() {
    for (auto& g : grads) g.setZero();
  }
  std::size_t size() const { return values.size(); }
};

enum class OpKind {
  leaf,
  param,
  weight_from_basis,
  matmul_nt,
  add_bias,
  add,
  relu,
  concat_cols,
  gather_rows,
  scatter_sum,
  max_over_copies,
  im2col3x3,
  scale,
  mse_masked,
  cosine_masked,
  softmax_ce_masked,
};

// Reverse-mode tape over row-major matrices.  One tape records one forward
// pass; index vectors, basis matrices and loss targets are borrowed and must
// outlive the tape.
template <class S>
class Tape {
 public:
  explicit Tape(ParamStore<S>* params) : params_(params) {}

  int leaf(MatX<S> v) { return push(OpKind::leaf, {}, std::move(v)); }

  int param(int param_id) {
    const int id = push(OpKind::param, {}, params_->values.at(param_id));
    nodes_[id].param_id = param_id;
    return id;
  }

  // W = sum_k c_k B_k realized as the row vector c * basis reshaped row-major;
  // coeffs is a 1 x rank node, basis is rank x (dout*din).
  int weight_from_basis(int coeffs, const MatX<S>* basis, int dout, int din) {
    check_shape(coeffs, 1, static_cast<int>(basis->rows()), "weight_from_basis coeffs");
    if (basis->cols() != static_cast<Eigen::Index>(dout) * din) {
      throw ShapeError("weight_from_basis: basis columns do not match dout*din");
    }
    MatX<S> flat = nodes_[coeffs].value * (*basis);
    Eigen::Map<const MatX<S>> w(flat.data(), dout, din);
    const int id = push(OpKind::weight_from_basis, {coeffs}, MatX<S>(w));
    nodes_[id].basis = basis;
    return id;
  }

  // Y = X * W^T with X: n x din, W: dout x din.
  int matmul_nt(int x, int w) {
    if (nodes_[x].value.cols() != nodes_[w].value.cols()) {
      throw ShapeError("matmul_nt: inner dimensions disagree");
    }
    return push(OpKind::matmul_nt, {x, w}, nodes_[x].value * nodes_[w].value.transpose());
  }

  // Y = X + ones * (bias .* mask); bias is a 1 x cols node.
  int add_bias(int x, int bias, const VecX<S>* mask) {
    check_shape(bias, 1, static_cast<int>(nodes_[x].value.cols()), "add_bias bias");
    if (mask->size() != nodes_[x].value.cols()) {
      throw ShapeError("add_bias: mask length mismatch");
    }
    MatX<S> v = nodes_[x].value;
    v.rowwise() += (nodes_[bias].value.row(0).array() * mask->transpose().array()).matrix();
    const int id = push(OpKind::add_bias, {x, bias}, std::move(v));
    nodes_[id].mask = mask;
    return id;
  }

  int add(int a, int b) {
    if (nodes_[a].value.rows() != nodes_[b].value.rows() ||
        nodes_[a].value.cols() != nodes_[b].value.cols()) {
      throw ShapeError("add: shape mismatch");
    }
    return push(OpKind::add, {a, b}, nodes_[a].value + nodes_[b].value);
  }

  int relu(int x) {
    return push(OpKind::relu, {x}, nodes_[x].value.cwiseMax(S(0)));
  }

  int concat_cols(const std::vector<int>& xs) {
    if (xs.empty()) throw ShapeError("concat_cols: no inputs");
    Eigen::Index rows = nodes_[xs[0]].value.rows();
    Eigen::Index cols = 0;
    for (int x : xs) {
      if (nodes_[x].value.rows() != rows) throw ShapeError("concat_cols: row mismatch");
      cols += nodes_[x].value.cols();
    }
    MatX<S> v(rows, cols);
    Eigen::Index off = 0;
    for (int x : xs) {
      v.middleCols(off, nodes_[x].value.cols()) = nodes_[x].value;
      off += nodes_[x].value.cols();
    }
    return push(OpKind::concat_cols, xs, std::move(v));
  }

  int gather_rows(int x, const std::vector<int>* idx) {
    const MatX<S>& src = nodes_[x].value;
    MatX<S> v(static_cast<Eigen::Index>(idx->size()), src.cols());
    for (std::size_t r = 0; r < idx->size(); ++r) {
      const int i = (*idx)[r];
      if (i < 0 || i >= src.rows()) throw DataError("gather_rows: index out of range");
      v.row(static_cast<Eigen::Index>(r)) = src.row(i);
    }
    const int id = push(OpKind::gather_rows, {x}, std::move(v));
    nodes_[id].idx = idx;
    return id;
  }

  int scatter_sum(int x, const std::vector<int>* idx, int out_rows) {
    const MatX<S>& src = nodes_[x].value;
    if (static_cast<Eigen::Index>(idx->size()) != src.rows()) {
      throw ShapeError("scatter_sum: one index per input row required");
    }
    MatX<S> v = MatX<S>::Zero(out_rows, src.cols());
    for (std::size_t r = 0; r < idx->size(); ++r) {
      const int i = (*idx)[r];
      if (i < 0 || i >= out_rows) throw DataError("scatter_sum: index out of range");
      v.row(i) += src.row(static_cast<Eigen::Index>(r));
    }
    const int id = push(OpKind::scatter_sum, {x}, std::move(v));
    nodes_[id].idx = idx;
    return id;
  }

  // X: n x (copies*block) -> Y: n x block, max over the copy axis at each
  // block coordinate; ties resolve to the lowest copy.
  int max_over_copies(int x, int copies, int block) {
    const MatX<S>& src = nodes_[x].value;
    if (src.cols() != static_cast<Eigen::Index>(copies) * block) {
      throw ShapeError("max_over_copies: columns do not factor as copies*block");
    }
    MatX<S> v(src.rows(), block);
    std::vector<int> arg(static_cast<std::size_t>(src.rows()) * block);
    for (Eigen::Index n = 0; n < src.rows(); ++n) {
      for (int b = 0; b < block; ++b) {
        S best = src(n, b);
        int best_c = 0;
        for (int c = 1; c < copies; ++c) {
          const S cand = src(n, c * block + b);
          if (cand > best) {
            best = cand;
            best_c = c;
          }
        }
        v(n, b) = best;
        arg[static_cast<std::size_t>(n) * block + b] = best_c;
      }
    }
    const int id = push(OpKind::max_over_copies, {x}, std::move(v));
    nodes_[id].argmax = std::move(arg);
    nodes_[id].copies = copies;
    nodes_[id].block = block;
    return id;
  }

  // X holds an h x w map row-major as (h*w) x c; output (h*w) x (9c) stacks
  // the 3x3 neighborhood (row-major offsets, zero padded).
  int im2col3x3(int x, int h, int w) {
    const MatX<S>& src = nodes_[x].value;
    if (src.rows() != static_cast<Eigen::Index>(h) * w) {
      throw ShapeError("im2col3x3: rows do not match h*w");
    }
    const int c = static_cast<int>(src.cols());
    MatX<S> v = MatX<S>::Zero(src.rows(), 9 * c);
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        const int n = r * w + col;
        for (int k = 0; k < 9; ++k) {
          const int rr = r + k / 3 - 1;
          const int cc = col + k % 3 - 1;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          v.block(n, k * c, 1, c) = src.row(rr * w + cc);
        }
      }
    }
    const int id = push(OpKind::im2col3x3, {x}, std::move(v));
    nodes_[id].copies = h;
    nodes_[id].block = w;
    return id;
  }

  int scale(int x, S factor) {
    const int id = push(OpKind::scale, {x}, (nodes_[x].value * factor).eval());
    nodes_[id].factor = factor;
    return id;
  }

  // Mean over the listed rows of the squared row difference to target.
  int mse_masked(int pred, const MatX<S>* target, const std::vector<int>* rows) {
    const MatX<S>& p = nodes_[pred].value;
    if (target->rows() != p.rows() || target->cols() != p.cols()) {
      throw ShapeError("mse_masked: target shape mismatch");
    }
    if (rows->empty()) throw DataError("mse_masked: empty mask");
    S acc = 0;
    for (int r : *rows) acc += (p.row(r) - target->row(r)).squaredNorm();
    MatX<S> v(1, 1);
    v(0, 0) = acc / static_cast<S>(rows->size());
    const int id = push(OpKind::mse_masked, {pred}, std::move(v));
    nodes_[id].target = target;
    nodes_[id].idx = rows;
    return id;
  }

  // Mean of 1 - cosine(pred_r, target_r) over the listed rows.
  int cosine_masked(int pred, const MatX<S>* target, const std::vector<int>* rows) {
    const MatX<S>& p = nodes_[pred].value;
    if (target->rows() != p.rows() || target->cols() != p.cols()) {
      throw ShapeError("cosine_masked: target shape mismatch");
    }
    if (rows->empty()) throw DataError("cosine_masked: empty mask");
    S acc = 0;
    for (int r : *rows) {
      const S denom = p.row(r).norm() * target->row(r).norm() + S(1e-12);
      acc += S(1) - p.row(r).dot(target->row(r)) / denom;
    }
    MatX<S> v(1, 1);
    v(0, 0) = acc / static_cast<S>(rows->size());
    const int id = push(OpKind::cosine_masked, {pred}, std::move(v));
    nodes_[id].target = target;
    nodes_[id].idx = rows;
    return id;
  }

  // Mean cross entropy of row-wise softmax against integer labels, over the
  // listed rows; labels are indexed per row of the logits.
  int softmax_ce_masked(int logits, const std::vector<int>* labels,
                        const std::vector<int>* rows) {
    const MatX<S>& z = nodes_[logits].value;
    if (static_cast<Eigen::Index>(labels->size()) != z.rows()) {
      throw ShapeError("softmax_ce_masked: one label per row required");
    }
    if (rows->empty()) throw DataError("softmax_ce_masked: empty mask");
    S acc = 0;
    for (int r : *rows) {
      const S m = z.row(r).maxCoeff();
      const S lse = std::log((z.row(r).array() - m).exp().sum()) + m;
      acc += lse - z(r, (*labels)[r]);
    }
    MatX<S> v(1, 1);
    v(0, 0) = acc / static_cast<S>(rows->size());
    const int id = push(OpKind::softmax_ce_masked, {logits}, std::move(v));
    nodes_[id].labels = labels;
    nodes_[id].idx = rows;
    return id;
  }

  const MatX<S>& value(int id) const { return nodes_.at(id).value; }
  S scalar(int id) const {
    const MatX<S>& v = nodes_.at(id).value;
    if (v.size() != 1) throw ShapeError("scalar: node is not 1x1");
    return v(0, 0);
  }

  // Accumulates gradients of the scalar node `loss` into the parameter store.
  void backward(int loss) {
    if (nodes_.at(loss).value.size() != 1) {
      throw ShapeError("backward: loss node must be scalar");
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    grad_of(loss) = MatX<S>::Ones(1, 1);
    for (int id = loss; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.size() == 0) continue;
      step_back(n);
    }
  }

 private:
  struct Node {
    OpKind kind;
    std::vector<int> in;
    MatX<S> value;
    MatX<S> grad;
    int param_id = -1;
    const MatX<S>* basis = nullptr;
    const VecX<S>* mask = nullptr;
    const MatX<S>* target = nullptr;
    const std::vector<int>* idx = nullptr;
    const std::vector<int>* labels = nullptr;
    std::vector<int> argmax;
    int copies = 0;
    int block = 0;
    S factor = 1;
  };

  int push(OpKind kind, std::vector<int> in, MatX<S> value) {
    Node n;
    n.kind = kind;
    n.in = std::move(in);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void check_shape(int id, int rows, int cols, const char* what) {
    if (nodes_.at(id).value.rows() != rows || nodes_.at(id).value.cols() != cols) {
      throw ShapeError(std::string(what) + ": unexpected shape");
    }
  }

  MatX<S>& grad_of(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) {
      n.grad = MatX<S>::Zero(n.value.rows(), n.value.cols());
    }
    return n.grad;
  }

  void step_back(Node& n) {
    switch (n.kind) {
      case OpKind::leaf:
        break;
      case OpKind::param:
        params_->grads[n.param_id] += n.grad;
        break;
      case OpKind::weight_from_basis: {
        Eigen::Map<const MatX<S>> flat(n.grad.data(), 1, n.grad.size());
        grad_of(n.in[0]) += flat * n.basis->transpose();
        break;
      }
      case OpKind::matmul_nt: {
        grad_of(n.in[0]) += n.grad * nodes_[n.in[1]].value;
        grad_of(n.in[1]) += n.grad.transpose() * nodes_[n.in[0]].value;
        break;
      }
      case OpKind::add_bias: {
        grad_of(n.in[0]) += n.grad;
        grad_of(n.in[1]) +=
            (n.grad.colwise().sum().array() * n.mask->transpose().array()).matrix();
        break;
      }
      case OpKind::add:
        grad_of(n.in[0]) += n.grad;
        grad_of(n.in[1]) += n.grad;
        break;
      case OpKind::relu:
        grad_of(n.in[0]) +=
            (n.grad.array() * (nodes_[n.in[0]].value.array() > S(0)).template cast<S>())
                .matrix();
        break;
      case OpKind::concat_cols: {
        Eigen::Index off = 0;
        for (int x : n.in) {
          const Eigen::Index c = nodes_[x].value.cols();
          grad_of(x) += n.grad.middleCols(off, c);
          off += c;
        }
        break;
      }
      case OpKind::gather_rows: {
        MatX<S>& gx = grad_of(n.in[0]);
        for (std::size_t r = 0; r < n.idx->size(); ++r) {
          gx.row((*n.idx)[r]) += n.grad.row(static_cast<Eigen::Index>(r));
        }
        break;
      }
      case OpKind::scatter_sum: {
        MatX<S>& gx = grad_of(n.in[0]);
        for (std::size_t r = 0; r < n.idx->size(); ++r) {
          gx.row(static_cast<Eigen::Index>(r)) += n.grad.row((*n.idx)[r]);
        }
        break;
      }
      case OpKind::max_over_copies: {
        MatX<S>& gx = grad_of(n.in[0]);
        for (Eigen::Index nn = 0; nn < n.grad.rows(); ++nn) {
          for (int b = 0; b < n.block; ++b) {
            const int c = n.argmax[static_cast<std::size_t>(nn) * n.block + b];
            gx(nn, c * n.block + b) += n.grad(nn, b);
          }
        }
        break;
      }
      case OpKind::im2col3x3: {
        MatX<S>& gx = grad_of(n.in[0]);
        const int h = n.copies;
        const int w = n.block;
        const int c = static_cast<int>(gx.cols());
        for (int r = 0; r < h; ++r) {
          for (int col = 0; col < w; ++col) {
            const int row_id = r * w + col;
            for (int k = 0; k < 9; ++k) {
              const int rr = r + k / 3 - 1;
              const int cc = col + k % 3 - 1;
              if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
              gx.row(rr * w + cc) += n.grad.block(row_id, k * c, 1, c);
            }
          }
        }
        break;
      }
      case OpKind::scale:
        grad_of(n.in[0]) += n.factor * n.grad;
        break;
      case OpKind::mse_masked: {
        MatX<S>& gp = grad_of(n.in[0]);
        const MatX<S>& p = nodes_[n.in[0]].value;
        const S scale = n.grad(0, 0) * S(2) / static_cast<S>(n.idx->size());
        for (int r : *n.idx) gp.row(r) += scale * (p.row(r) - n.target->row(r));
        break;
      }
      case OpKind::cosine_masked: {
        MatX<S>& gp = grad_of(n.in[0]);
        const MatX<S>& p = nodes_[n.in[0]].value;
        const S g = n.grad(0, 0) / static_cast<S>(n.idx->size());
        for (int r : *n.idx) {
          const S np = p.row(r).norm();
          const S nt = n.target->row(r).norm();
          const S denom = np * nt + S(1e-12);
          const S dot = p.row(r).dot(n.target->row(r));
          gp.row(r) -= g * (n.target->row(r) / denom);
          if (np > S(1e-30)) {
            gp.row(r) += g * (dot * nt / (np * denom * denom)) * p.row(r);
          }
        }
        break;
      }
      case OpKind::softmax_ce_masked: {
        MatX<S>& gz = grad_of(n.in[0]);
        const MatX<S>& z = nodes_[n.in[0]].value;
        const S scale = n.grad(0, 0) / static_cast<S>(n.idx->size());
        for (int r : *n.idx) {
          const S m = z.row(r).maxCoeff();
          Eigen::Array<S, 1, Eigen::Dynamic> ex = (z.row(r).array() - m).exp();
          ex /= ex.sum();
          gz.row(r) += scale * ex.matrix();
          gz(r, (*n.labels)[r]) -= scale;
        }
        break;
      }
    }
  }

  ParamStore<S>* params_;
  std::vector<Node> nodes_;
};

}  // namespace e2plan::nn

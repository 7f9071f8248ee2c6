#include "e2plan/symmetry/intertwiner.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <unsupported/Eigen/KroneckerProduct>

namespace e2plan::sym {

IntertwinerBasis solve_intertwiner_basis(const Representation& rep_in,
                                         const Representation& rep_out) {
  if (!(rep_in.group() == rep_out.group())) {
    throw ConfigError("intertwiner solve requires representations of the same group");
  }
  const Group& g = rep_in.group();
  const int di = rep_in.dim();
  const int dop = rep_out.dim();

  Mat proj = Mat::Zero(dop * di, dop * di);
  for (int i = 0; i < g.order(); ++i) {
    const Mat in_inv_t = rep_in.matrix(g.inverse_index(i)).transpose();
    proj += Eigen::kroneckerProduct(in_inv_t, rep_out.matrix(i));
  }
  proj /= static_cast<double>(g.order());

  // The projector's column space is the fixed subspace; for orthogonal
  // representations the projector is symmetric, so the eigenvalue-1
  // eigenvectors give an orthonormal basis directly.  (BDCSVD is avoided:
  // it returns NaN on some exactly idempotent inputs.)
  Mat fixed_vectors;
  if ((proj - proj.transpose()).cwiseAbs().maxCoeff() <= 1e-12) {
    Eigen::SelfAdjointEigenSolver<Mat> es(proj);
    const auto& vals = es.eigenvalues();
    int count = 0;
    for (int k = 0; k < vals.size(); ++k)
      if (vals(k) > 0.5) ++count;
    fixed_vectors = es.eigenvectors().rightCols(count);
  } else {
    Eigen::JacobiSVD<Mat> svd(proj, Eigen::ComputeThinU);
    // Nonzero singular values of an idempotent matrix are >= 1.
    int count = 0;
    while (count < svd.singularValues().size() && svd.singularValues()(count) > 0.5)
      ++count;
    fixed_vectors = svd.matrixU().leftCols(count);
  }

  IntertwinerBasis out;
  out.dim_in = di;
  out.dim_out = dop;
  out.rank = static_cast<int>(fixed_vectors.cols());
  out.basis.reserve(out.rank);
  for (int k = 0; k < out.rank; ++k) {
    // vec is column-stacking: entry (r, c) lives at index c * dim_out + r.
    Mat b(dop, di);
    for (int c = 0; c < di; ++c) b.col(c) = fixed_vectors.col(k).segment(c * dop, dop);
    // Fix the sign so the first substantial entry (row-major) is positive.
    for (int r = 0; r < dop * di; ++r) {
      const double e = b(r / di, r % di);
      if (std::abs(e) > 1e-9) {
        if (e < 0) b = -b;
        break;
      }
    }
    out.basis.push_back(std::move(b));
  }
  return out;
}

double check_intertwiner(const IntertwinerBasis& basis, const Representation& rep_in,
                         const Representation& rep_out) {
  double worst = 0.0;
  for (const Mat& b : basis.basis) {
    for (int i = 0; i < rep_in.group().order(); ++i) {
      const double err =
          (b * rep_in.matrix(i) - rep_out.matrix(i) * b).cwiseAbs().maxCoeff();
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace e2plan::sym

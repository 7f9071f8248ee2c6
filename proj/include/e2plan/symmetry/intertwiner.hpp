#pragma once

#include <vector>

#include "e2plan/symmetry/representation.hpp"

namespace e2plan::sym {

// Basis of the space {W : W rho_in(g) = rho_out(g) W for all g}.
struct IntertwinerBasis {
  int dim_in = 0;
  int dim_out = 0;
  int rank = 0;
  std::vector<Mat> basis;  // dim_out x dim_in, orthonormal under the vec inner product
};

// Group-averaging projector P = (1/|G|) sum_g rho_in(g)^{-T} (x) rho_out(g);
// its column space is exactly the intertwiner space, extracted via SVD.
IntertwinerBasis solve_intertwiner_basis(const Representation& rep_in,
                                         const Representation& rep_out);

// Max over basis matrices and elements of |B rho_in(g) - rho_out(g) B|_inf.
double check_intertwiner(const IntertwinerBasis& basis, const Representation& rep_in,
                         const Representation& rep_out);

}  // namespace e2plan::sym

#pragma once

#include <map>
#include <string>
#include <utility>

#include "e2plan/symmetry/field_type.hpp"
#include "e2plan/symmetry/intertwiner.hpp"

namespace e2plan::nn {

// Solves and caches intertwiner bases for field-type pairs.  The space of
// equivariant maps between field types decomposes block-wise over part pairs,
// so bases are solved once per distinct (rep_out, rep_in) pair and assembled
// into a stacked matrix whose row k is the row-major flattening of basis
// element B_k (shape dim_out x dim_in of the full layer).
class BasisCache {
 public:
  // rows = total rank; basis elements are ordered by (out part, in part),
  // out-major, then by the pairwise solver's ordering.
  const Mat& stacked(const sym::FieldType& out, const sym::FieldType& in);

  const sym::IntertwinerBasis& pair_basis(const sym::Representation& out,
                                          const sym::Representation& in);

 private:
  std::map<std::pair<std::string, std::string>, sym::IntertwinerBasis> pairs_;
  std::map<std::pair<std::string, std::string>, Mat> stacked_;
};

}  // namespace e2plan::nn

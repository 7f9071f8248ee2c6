#include "e2plan/nn/basis.hpp"

#include <vector>

namespace e2plan::nn {

const sym::IntertwinerBasis& BasisCache::pair_basis(const sym::Representation& out,
                                                    const sym::Representation& in) {
  if (out.descriptor().empty() || in.descriptor().empty()) {
    throw ConfigError("basis cache requires serializable representations");
  }
  const auto key = std::make_pair(out.descriptor(), in.descriptor());
  auto it = pairs_.find(key);
  if (it == pairs_.end()) {
    it = pairs_.emplace(key, sym::solve_intertwiner_basis(in, out)).first;
  }
  return it->second;
}

const Mat& BasisCache::stacked(const sym::FieldType& out, const sym::FieldType& in) {
  const auto key = std::make_pair(sym::field_type_to_json(out), sym::field_type_to_json(in));
  auto it = stacked_.find(key);
  if (it != stacked_.end()) return it->second;

  const int dout = out.total_dim();
  const int din = in.total_dim();
  int total_rank = 0;
  for (const auto& po : out.parts()) {
    for (const auto& pi : in.parts()) total_rank += pair_basis(po, pi).rank;
  }

  Mat stacked = Mat::Zero(total_rank, static_cast<Eigen::Index>(dout) * din);
  int row = 0;
  for (std::size_t o = 0; o < out.parts().size(); ++o) {
    const int row_off = out.part_offset(static_cast<int>(o));
    for (std::size_t i = 0; i < in.parts().size(); ++i) {
      const int col_off = in.part_offset(static_cast<int>(i));
      const sym::IntertwinerBasis& pb = pair_basis(out.parts()[o], in.parts()[i]);
      for (const Mat& b : pb.basis) {
        for (int r = 0; r < b.rows(); ++r) {
          for (int c = 0; c < b.cols(); ++c) {
            stacked(row, static_cast<Eigen::Index>(row_off + r) * din + col_off + c) =
                b(r, c);
          }
        }
        ++row;
      }
    }
  }
  return stacked_.emplace(key, std::move(stacked)).first->second;
}

}  // namespace e2plan::nn

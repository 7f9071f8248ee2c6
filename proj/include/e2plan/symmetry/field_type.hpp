#pragma once

#include <string>
#include <vector>

#include "e2plan/symmetry/representation.hpp"

namespace e2plan::sym {

// Ordered list of representations describing how a feature vector transforms;
// the group acts block-diagonally, one block per part.
class FieldType {
 public:
  explicit FieldType(std::vector<Representation> parts);

  const Group& group() const { return parts_.front().group(); }
  const std::vector<Representation>& parts() const { return parts_; }
  int total_dim() const { return total_dim_; }
  // Offset of part p within the flattened vector.
  int part_offset(int p) const { return offsets_[p]; }

  // Block-diagonal matrix for one group element (cached after first use).
  const Mat& matrix(int element_index) const;

 private:
  std::vector<Representation> parts_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
  mutable std::vector<Mat> cache_;
};

// n copies of the same representation.
FieldType field_type_copies(const Representation& rep, int count);

Vec field_transform(const FieldType& ft, const GroupElement& g, const Vec& v);
Vec field_transform(const FieldType& ft, int element_index, const Vec& v);

std::string field_type_to_json(const FieldType& ft);
FieldType field_type_from_json(const std::string& json_text);

}  // namespace e2plan::sym

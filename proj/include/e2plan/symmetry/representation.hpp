#pragma once

#include <memory>
#include <string>
#include <vector>

#include "e2plan/symmetry/group.hpp"

namespace e2plan::sym {

enum class RepTag { trivial, standard, regular, restricted, direct_sum, custom };

std::string rep_tag_name(RepTag tag);

// A real matrix representation of a finite group: one dim x dim matrix per
// element, with rho(a*b) = rho(a) rho(b).
class Representation {
 public:
  Representation(Group group, int dim, std::vector<Mat> matrices, RepTag tag);

  const Group& group() const { return group_; }
  int dim() const { return dim_; }
  RepTag tag() const { return tag_; }

  const Mat& matrix(int element_index) const { return matrices_[element_index]; }
  const Mat& matrix(const GroupElement& g) const { return matrices_[group_.index(g)]; }

  // Serialization descriptor; empty for custom representations.
  const std::string& descriptor() const { return descriptor_; }
  void set_descriptor(std::string d) { descriptor_ = std::move(d); }

 private:
  Group group_;
  int dim_;
  std::vector<Mat> matrices_;
  RepTag tag_;
  std::string descriptor_;
};

Representation rep_trivial(const Group& g);
// 2D rep: rotations act as planar rotation matrices, reflections as
// diag(1,-1) composed with the rotation.
Representation rep_standard(const Group& g);
// |G|-dimensional permutation rep, rho(g) e_h = e_{g h}.
Representation rep_regular(const Group& g);
// Representation of H given a rep of G and an injective homomorphism
// H -> G (element indices of G, indexed by element index of H).
Representation rep_restrict(const Representation& rep_of_g, const Group& h,
                            const std::vector<int>& embedding);
Representation rep_direct_sum(const std::vector<Representation>& parts);

// Max over all element pairs of |rho(g g') - rho(g) rho(g')|_inf.
double check_representation(const Representation& rep);

// True iff every element matrix is a 0/1 permutation matrix (exactly).
bool is_permutation_representation(const Representation& rep);

// JSON descriptor round-trip.  Matrices are reconstructed, never stored;
// custom representations cannot be serialized.
std::string rep_to_json(const Representation& rep);
Representation rep_from_json(const std::string& json_text);

}  // namespace e2plan::sym

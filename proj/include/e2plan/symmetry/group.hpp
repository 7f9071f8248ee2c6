#pragma once

#include <string>
#include <vector>

#include "e2plan/common.hpp"

namespace e2plan::sym {

enum class GroupKind { cyclic, dihedral };

// Element of C_n or D_n, stored as r^rot f^reflect with integer arithmetic so
// group composition never touches floating point.
struct GroupElement {
  int rot = 0;
  bool reflect = false;

  friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

// Finite rotation/reflection group C_n (order n) or D_n (order 2n).
// Elements are indexed rot + n * reflect; the identity is index 0.
class Group {
 public:
  Group(GroupKind kind, int n);

  GroupKind kind() const { return kind_; }
  int rotation_order() const { return n_; }
  int order() const { return kind_ == GroupKind::dihedral ? 2 * n_ : n_; }
  bool has_reflections() const { return kind_ == GroupKind::dihedral; }

  GroupElement element(int index) const;
  int index(const GroupElement& g) const;

  GroupElement identity() const { return {0, false}; }
  // a * b means "apply b first, then a", matching matrix multiplication of the
  // standard representation.
  GroupElement compose(const GroupElement& a, const GroupElement& b) const;
  GroupElement inverse(const GroupElement& g) const;

  int compose_index(int a, int b) const;
  int inverse_index(int a) const;

  // Rotation angle of the element's rotation part, 2*pi*rot/n.
  double angle(const GroupElement& g) const;

  std::string name() const;

  friend bool operator==(const Group& a, const Group& b) {
    return a.kind_ == b.kind_ && a.n_ == b.n_;
  }

 private:
  GroupKind kind_;
  int n_;
};

Group make_group(GroupKind kind, int n);
// Parses names like "C4", "D8".
Group parse_group(const std::string& name);

// Embedding of H = C_K into the rotations of G, k -> k * n/K.  Requires H
// cyclic and K dividing G's rotation order.  Returned as element indices of G
// indexed by element index of H.
std::vector<int> canonical_embedding(const Group& h, const Group& g);

}  // namespace e2plan::sym

#include "e2plan/symmetry/group.hpp"

#include <cmath>

namespace e2plan::sym {

Group::Group(GroupKind kind, int n) : kind_(kind), n_(n) {
  if (n <= 0) throw ConfigError("group rotation order must be positive, got " + std::to_string(n));
}

GroupElement Group::element(int index) const {
  if (index < 0 || index >= order()) throw ConfigError("group element index out of range");
  return {index % n_, index >= n_};
}

int Group::index(const GroupElement& g) const {
  return ((g.rot % n_) + n_) % n_ + (g.reflect ? n_ : 0);
}

GroupElement Group::compose(const GroupElement& a, const GroupElement& b) const {
  // rho(a) * rho(b) with rho(r^k f^e) = R(2 pi k / n) * F^e and F R(t) F = R(-t).
  int rot = a.rot + (a.reflect ? -b.rot : b.rot);
  rot = ((rot % n_) + n_) % n_;
  return {rot, a.reflect != b.reflect};
}

GroupElement Group::inverse(const GroupElement& g) const {
  if (g.reflect) return g;  // reflections are involutions
  return {(n_ - g.rot) % n_, false};
}

int Group::compose_index(int a, int b) const { return index(compose(element(a), element(b))); }

int Group::inverse_index(int a) const { return index(inverse(element(a))); }

double Group::angle(const GroupElement& g) const { return 2.0 * M_PI * g.rot / n_; }

std::string Group::name() const {
  return (kind_ == GroupKind::cyclic ? "C" : "D") + std::to_string(n_);
}

Group make_group(GroupKind kind, int n) { return Group(kind, n); }

Group parse_group(const std::string& name) {
  if (name.size() < 2 || (name[0] != 'C' && name[0] != 'D'))
    throw ConfigError("unrecognized group name '" + name + "' (expected e.g. C4, D8)");
  int n = 0;
  try {
    size_t pos = 0;
    n = std::stoi(name.substr(1), &pos);
    if (pos + 1 != name.size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw ConfigError("unrecognized group name '" + name + "'");
  }
  return Group(name[0] == 'C' ? GroupKind::cyclic : GroupKind::dihedral, n);
}

std::vector<int> canonical_embedding(const Group& h, const Group& g) {
  if (h.kind() != GroupKind::cyclic)
    throw ConfigError("canonical embedding is defined for cyclic subgroups");
  if (g.rotation_order() % h.rotation_order() != 0)
    throw ConfigError("canonical embedding C" + std::to_string(h.rotation_order()) + " -> " +
                      g.name() + " requires the subgroup order to divide the rotation order");
  const int step = g.rotation_order() / h.rotation_order();
  std::vector<int> embed(h.order());
  for (int k = 0; k < h.order(); ++k) embed[k] = g.index({k * step, false});
  return embed;
}

}  // namespace e2plan::sym

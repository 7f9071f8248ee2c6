#include "e2plan/symmetry/representation.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

namespace e2plan::sym {

namespace {

using nlohmann::json;

json descriptor_json(const Representation& rep) {
  if (rep.descriptor().empty()) {
    throw ConfigError("representation with tag '" + rep_tag_name(rep.tag()) +
                      "' has no serializable descriptor");
  }
  return json::parse(rep.descriptor());
}

Representation rep_from_descriptor(const json& j);

Representation restricted_from_descriptor(const json& j) {
  Representation parent = rep_from_descriptor(j.at("parent"));
  Group h = parse_group(j.at("group").get<std::string>());
  std::vector<int> embedding = j.at("embedding").get<std::vector<int>>();
  return rep_restrict(parent, h, embedding);
}

Representation rep_from_descriptor(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "restricted") return restricted_from_descriptor(j);
  if (type == "direct_sum") {
    std::vector<Representation> parts;
    for (const auto& part : j.at("parts")) parts.push_back(rep_from_descriptor(part));
    return rep_direct_sum(parts);
  }
  Group g = parse_group(j.at("group").get<std::string>());
  if (type == "trivial") return rep_trivial(g);
  if (type == "standard") return rep_standard(g);
  if (type == "regular") return rep_regular(g);
  throw ConfigError("unknown representation type '" + type + "'");
}

}  // namespace

std::string rep_tag_name(RepTag tag) {
  switch (tag) {
    case RepTag::trivial: return "trivial";
    case RepTag::standard: return "standard";
    case RepTag::regular: return "regular";
    case RepTag::restricted: return "restricted";
    case RepTag::direct_sum: return "direct_sum";
    case RepTag::custom: return "custom";
  }
  throw ConfigError("invalid representation tag");
}

Representation::Representation(Group group, int dim, std::vector<Mat> matrices, RepTag tag)
    : group_(std::move(group)), dim_(dim), matrices_(std::move(matrices)), tag_(tag) {
  if (dim_ <= 0) throw ConfigError("representation dimension must be positive");
  if (static_cast<int>(matrices_.size()) != group_.order()) {
    throw ShapeError("representation needs one matrix per group element");
  }
  for (const Mat& m : matrices_) {
    if (m.rows() != dim_ || m.cols() != dim_) {
      throw ShapeError("representation matrix has wrong shape");
    }
  }
}

Representation rep_trivial(const Group& g) {
  std::vector<Mat> mats(g.order(), Mat::Identity(1, 1));
  Representation rep(g, 1, std::move(mats), RepTag::trivial);
  rep.set_descriptor(nlohmann::json{{"type", "trivial"}, {"group", g.name()}}.dump());
  return rep;
}

Representation rep_standard(const Group& g) {
  std::vector<Mat> mats;
  mats.reserve(g.order());
  for (int i = 0; i < g.order(); ++i) {
    const GroupElement e = g.element(i);
    const double a = g.angle(e);
    Mat m(2, 2);
    m << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    if (e.reflect) m.col(1) = -m.col(1);
    mats.push_back(m);
  }
  Representation rep(g, 2, std::move(mats), RepTag::standard);
  rep.set_descriptor(nlohmann::json{{"type", "standard"}, {"group", g.name()}}.dump());
  return rep;
}

Representation rep_regular(const Group& g) {
  const int n = g.order();
  std::vector<Mat> mats;
  mats.reserve(n);
  for (int i = 0; i < n; ++i) {
    Mat m = Mat::Zero(n, n);
    for (int h = 0; h < n; ++h) m(g.compose_index(i, h), h) = 1.0;
    mats.push_back(std::move(m));
  }
  Representation rep(g, n, std::move(mats), RepTag::regular);
  rep.set_descriptor(nlohmann::json{{"type", "regular"}, {"group", g.name()}}.dump());
  return rep;
}

Representation rep_restrict(const Representation& rep_of_g, const Group& h,
                            const std::vector<int>& embedding) {
  const Group& g = rep_of_g.group();
  if (static_cast<int>(embedding.size()) != h.order()) {
    throw ConfigError("embedding must list one image per subgroup element");
  }
  std::set<int> images;
  for (int idx : embedding) {
    if (idx < 0 || idx >= g.order()) throw ConfigError("embedding image out of range");
    images.insert(idx);
  }
  if (static_cast<int>(images.size()) != h.order()) {
    throw ConfigError("embedding is not injective");
  }
  for (int a = 0; a < h.order(); ++a) {
    for (int b = 0; b < h.order(); ++b) {
      if (embedding[h.compose_index(a, b)] != g.compose_index(embedding[a], embedding[b])) {
        throw ConfigError("embedding is not a homomorphism");
      }
    }
  }

  std::vector<Mat> mats;
  mats.reserve(h.order());
  for (int a = 0; a < h.order(); ++a) mats.push_back(rep_of_g.matrix(embedding[a]));
  Representation rep(h, rep_of_g.dim(), std::move(mats), RepTag::restricted);
  if (!rep_of_g.descriptor().empty()) {
    rep.set_descriptor(nlohmann::json{{"type", "restricted"},
                                      {"group", h.name()},
                                      {"parent", nlohmann::json::parse(rep_of_g.descriptor())},
                                      {"embedding", embedding}}
                           .dump());
  }
  return rep;
}

Representation rep_direct_sum(const std::vector<Representation>& parts) {
  if (parts.empty()) throw ConfigError("direct sum needs at least one part");
  const Group& g = parts.front().group();
  int dim = 0;
  for (const Representation& p : parts) {
    if (!(p.group() == g)) throw ConfigError("direct sum parts must share a group");
    dim += p.dim();
  }
  std::vector<Mat> mats;
  mats.reserve(g.order());
  for (int i = 0; i < g.order(); ++i) {
    Mat m = Mat::Zero(dim, dim);
    int off = 0;
    for (const Representation& p : parts) {
      m.block(off, off, p.dim(), p.dim()) = p.matrix(i);
      off += p.dim();
    }
    mats.push_back(std::move(m));
  }
  Representation rep(g, dim, std::move(mats), RepTag::direct_sum);
  bool serializable = true;
  nlohmann::json part_descriptors = nlohmann::json::array();
  for (const Representation& p : parts) {
    if (p.descriptor().empty()) {
      serializable = false;
      break;
    }
    part_descriptors.push_back(nlohmann::json::parse(p.descriptor()));
  }
  if (serializable) {
    rep.set_descriptor(nlohmann::json{{"type", "direct_sum"},
                                      {"group", g.name()},
                                      {"parts", part_descriptors}}
                           .dump());
  }
  return rep;
}

double check_representation(const Representation& rep) {
  const Group& g = rep.group();
  double worst = 0.0;
  for (int a = 0; a < g.order(); ++a) {
    for (int b = 0; b < g.order(); ++b) {
      const Mat prod = rep.matrix(a) * rep.matrix(b);
      const double err =
          (rep.matrix(g.compose_index(a, b)) - prod).cwiseAbs().maxCoeff();
      worst = std::max(worst, err);
    }
  }
  return worst;
}

bool is_permutation_representation(const Representation& rep) {
  for (int i = 0; i < rep.group().order(); ++i) {
    const Mat& m = rep.matrix(i);
    for (int r = 0; r < m.rows(); ++r) {
      int ones = 0;
      for (int c = 0; c < m.cols(); ++c) {
        if (m(r, c) == 1.0) ++ones;
        else if (m(r, c) != 0.0) return false;
      }
      if (ones != 1) return false;
    }
    for (int c = 0; c < m.cols(); ++c) {
      if (m.col(c).sum() != 1.0) return false;
    }
  }
  return true;
}

std::string rep_to_json(const Representation& rep) { return descriptor_json(rep).dump(2); }

Representation rep_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid representation JSON: ") + e.what());
  }
  try {
    return rep_from_descriptor(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid representation descriptor: ") + e.what());
  }
}

}  // namespace e2plan::sym

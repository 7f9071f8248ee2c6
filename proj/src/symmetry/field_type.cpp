#include "e2plan/symmetry/field_type.hpp"

#include <nlohmann/json.hpp>

namespace e2plan::sym {

FieldType::FieldType(std::vector<Representation> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw ConfigError("field type needs at least one part");
  const Group& g = parts_.front().group();
  for (const Representation& p : parts_) {
    if (!(p.group() == g)) throw ConfigError("field type parts must share a group");
    offsets_.push_back(total_dim_);
    total_dim_ += p.dim();
  }
  cache_.resize(g.order());
}

const Mat& FieldType::matrix(int element_index) const {
  Mat& m = cache_.at(element_index);
  if (m.size() == 0) {
    m = Mat::Zero(total_dim_, total_dim_);
    for (std::size_t p = 0; p < parts_.size(); ++p) {
      const int d = parts_[p].dim();
      m.block(offsets_[p], offsets_[p], d, d) = parts_[p].matrix(element_index);
    }
  }
  return m;
}

FieldType field_type_copies(const Representation& rep, int count) {
  if (count <= 0) throw ConfigError("field type part count must be positive");
  return FieldType(std::vector<Representation>(count, rep));
}

Vec field_transform(const FieldType& ft, int element_index, const Vec& v) {
  if (v.size() != ft.total_dim()) {
    throw ShapeError("field_transform: vector length does not match field type");
  }
  Vec out(v.size());
  for (std::size_t p = 0; p < ft.parts().size(); ++p) {
    const int off = ft.part_offset(static_cast<int>(p));
    const int d = ft.parts()[p].dim();
    out.segment(off, d) = ft.parts()[p].matrix(element_index) * v.segment(off, d);
  }
  return out;
}

Vec field_transform(const FieldType& ft, const GroupElement& g, const Vec& v) {
  return field_transform(ft, ft.group().index(g), v);
}

std::string field_type_to_json(const FieldType& ft) {
  nlohmann::json parts = nlohmann::json::array();
  for (const Representation& p : ft.parts()) {
    if (p.descriptor().empty()) {
      throw ConfigError("field type contains a part without a serializable descriptor");
    }
    parts.push_back(nlohmann::json::parse(p.descriptor()));
  }
  return nlohmann::json{{"group", ft.group().name()}, {"parts", parts}}.dump();
}

FieldType field_type_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid field type JSON: ") + e.what());
  }
  try {
    const Group g = parse_group(j.at("group").get<std::string>());
    std::vector<Representation> parts;
    for (const auto& part : j.at("parts")) {
      Representation rep = rep_from_json(part.dump());
      if (!(rep.group() == g)) {
        throw ConfigError("field type part group does not match field type group");
      }
      parts.push_back(std::move(rep));
    }
    return FieldType(std::move(parts));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid field type descriptor: ") + e.what());
  }
}

}  // namespace e2plan::sym

// Copyright 2026 the sotifval authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sotifval/entity_id.hpp"
#include "sotifval/errors.hpp"
#include "sotifval/interval.hpp"
#include "sotifval/json_util.hpp"
#include "sotifval/validation.hpp"

namespace sotifval {

/// The four entity kinds the scenario vocabulary is built from. Nodes form
/// the hierarchy; enums group symbolic values; params are the quantifiable
/// leaves that constraints attach to.
enum class EntityKind { node, enumeration, value, param };

/// Which end of a param's range describes the worse condition. Drives the
/// most-limiting override when merged constraints conflict.
enum class LimitingDirection { lower_is_worse, higher_is_worse };

inline const char* to_string(EntityKind k) {
  switch (k) {
    case EntityKind::node: return "NODE";
    case EntityKind::enumeration: return "ENUM";
    case EntityKind::value: return "VALUE";
    case EntityKind::param: return "PARAM";
  }
  return "?";
}

inline const char* to_string(LimitingDirection d) {
  return d == LimitingDirection::lower_is_worse ? "LOWER_IS_WORSE"
                                                : "HIGHER_IS_WORSE";
}

struct OntologyEntity {
  EntityId id;
  EntityKind kind = EntityKind::node;
  std::optional<EntityId> parent;
  std::string unit;                          // params only
  std::optional<Interval> physical_bounds;   // params only
  std::optional<LimitingDirection> limiting_direction;  // params only

  /// Effective direction for a param; LOWER_IS_WORSE unless stated.
  LimitingDirection direction() const {
    return limiting_direction.value_or(LimitingDirection::lower_is_worse);
  }

  /// Physical range as an interval, unbounded when no bounds are declared.
  Interval bounds_or_unbounded() const {
    return physical_bounds.value_or(Interval::unbounded());
  }

  bool operator==(const OntologyEntity&) const = default;
};

/// Immutable, fully linked entity hierarchy. Construction via load_ontology
/// rejects structural defects (duplicate ids, dangling parents); semantic
/// invariants are the business of validate_ontology.
class Ontology {
 public:
  Ontology() = default;

  /// Builds the ontology, throwing on duplicate ids and dangling parents.
  static Ontology link(std::vector<OntologyEntity> entities) {
    Ontology o = unchecked(std::move(entities));
    for (const auto& [id, e] : o.entities_) {
      if (e.parent && o.entities_.find(*e.parent) == o.entities_.end()) {
        fail(ErrorCode::dangling_parent,
             "entity \"" + id.str() + "\" references unknown parent \"" +
                 e.parent->str() + "\"",
             id.str());
      }
    }
    return o;
  }

  /// Builds without parent resolution so validate_ontology can report the
  /// defects instead.
  static Ontology unchecked(std::vector<OntologyEntity> entities) {
    Ontology o;
    for (auto& e : entities) {
      const std::string key = e.id.str();
      if (!o.entities_.emplace(e.id, std::move(e)).second) {
        fail(ErrorCode::duplicate_id, "duplicate entity id \"" + key + "\"", key);
      }
    }
    for (const auto& [id, e] : o.entities_) {
      if (!e.parent) o.roots_.push_back(id);
    }
    return o;
  }

  const std::map<EntityId, OntologyEntity>& entities() const { return entities_; }
  const std::vector<EntityId>& roots() const { return roots_; }
  std::size_t size() const { return entities_.size(); }

  const OntologyEntity* find(const EntityId& id) const {
    const auto it = entities_.find(id);
    return it == entities_.end() ? nullptr : &it->second;
  }

  /// Returns the PARAM at `path`; NotFound / WrongKind otherwise.
  const OntologyEntity& resolve_param(const EntityId& path) const {
    const OntologyEntity* e = find(path);
    if (e == nullptr) {
      fail(ErrorCode::not_found, "no entity at \"" + path.str() + "\"", path.str());
    }
    if (e->kind != EntityKind::param) {
      fail(ErrorCode::wrong_kind,
           "entity \"" + path.str() + "\" is " + to_string(e->kind) +
               ", expected PARAM",
           path.str());
    }
    return *e;
  }

  bool operator==(const Ontology& other) const { return entities_ == other.entities_; }

 private:
  std::map<EntityId, OntologyEntity> entities_;
  std::vector<EntityId> roots_;
};

namespace detail {

inline EntityKind parse_kind(const std::string& text, const std::string& context) {
  if (text == "NODE") return EntityKind::node;
  if (text == "ENUM") return EntityKind::enumeration;
  if (text == "VALUE") return EntityKind::value;
  if (text == "PARAM") return EntityKind::param;
  fail(ErrorCode::syntax_error, context + ": unknown kind \"" + text + "\"");
}

inline LimitingDirection parse_direction(const std::string& text,
                                         const std::string& context) {
  if (text == "LOWER_IS_WORSE") return LimitingDirection::lower_is_worse;
  if (text == "HIGHER_IS_WORSE") return LimitingDirection::higher_is_worse;
  fail(ErrorCode::syntax_error,
       context + ": unknown limiting_direction \"" + text + "\"");
}

inline OntologyEntity parse_entity(const nlohmann::json& j) {
  reject_unknown_keys(
      j, {"id", "kind", "parent", "unit", "physical_bounds", "limiting_direction"},
      "entity");
  OntologyEntity e;
  e.id = EntityId::parse(get_string(j, "id", "entity"));
  const std::string context = "entity \"" + e.id.str() + "\"";
  e.kind = parse_kind(get_string(j, "kind", context), context);
  if (has_value(j, "parent")) {
    e.parent = EntityId::parse(get_string(j, "parent", context));
  }
  if (has_value(j, "unit")) {
    e.unit = get_string(j, "unit", context);
  }
  if (has_value(j, "physical_bounds")) {
    e.physical_bounds = as_interval(j.at("physical_bounds"), context + ".physical_bounds");
  }
  if (has_value(j, "limiting_direction")) {
    e.limiting_direction =
        parse_direction(get_string(j, "limiting_direction", context), context);
  }
  return e;
}

inline Ontology ontology_from_json(const nlohmann::json& doc) {
  reject_unknown_keys(doc, {"entities"}, "ontology");
  if (!has_value(doc, "entities") || !doc.at("entities").is_array()) {
    fail(ErrorCode::syntax_error, "ontology: missing \"entities\" array");
  }
  std::vector<OntologyEntity> entities;
  entities.reserve(doc.at("entities").size());
  for (const auto& ej : doc.at("entities")) {
    entities.push_back(parse_entity(ej));
  }
  return Ontology::link(std::move(entities));
}

}  // namespace detail

inline Ontology load_ontology(const std::string& document) {
  return detail::ontology_from_json(detail::parse_json(document));
}

inline nlohmann::json to_json(const OntologyEntity& e) {
  nlohmann::json j{{"id", e.id.str()}, {"kind", to_string(e.kind)}};
  j["parent"] = e.parent ? nlohmann::json(e.parent->str()) : nlohmann::json();
  j["unit"] = e.unit.empty() ? nlohmann::json() : nlohmann::json(e.unit);
  j["physical_bounds"] = e.physical_bounds
                             ? detail::interval_to_json(*e.physical_bounds)
                             : nlohmann::json();
  j["limiting_direction"] = e.limiting_direction
                                ? nlohmann::json(to_string(*e.limiting_direction))
                                : nlohmann::json();
  return j;
}

inline nlohmann::json to_json(const Ontology& o) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, e] : o.entities()) arr.push_back(to_json(e));
  return {{"entities", arr}};
}

inline std::string serialize(const Ontology& o) { return to_json(o).dump(2) + "\n"; }

/// Checks every type invariant and reports violations, sorted by entity path.
/// The report is empty exactly when the ontology is well formed; an ontology
/// without any root entity is flagged as a warning.
inline ValidationReport validate_ontology(const Ontology& o) {
  ValidationReport report;
  const auto& entities = o.entities();

  for (const auto& [id, e] : entities) {
    const std::string path = id.str();
    const OntologyEntity* parent =
        e.parent ? o.find(*e.parent) : nullptr;
    if (e.parent && parent == nullptr) {
      report.add_error(path, "parent \"" + e.parent->str() + "\" does not resolve");
    }

    switch (e.kind) {
      case EntityKind::node:
        if (parent != nullptr && parent->kind != EntityKind::node) {
          report.add_error(path, "NODE parent must be NODE or absent");
        }
        break;
      case EntityKind::enumeration:
        if (!e.parent) {
          report.add_error(path, "ENUM requires a NODE parent");
        } else if (parent != nullptr && parent->kind != EntityKind::node) {
          report.add_error(path, "ENUM parent must be NODE");
        }
        break;
      case EntityKind::param:
        if (!e.parent) {
          report.add_error(path, "PARAM requires a NODE parent");
        } else if (parent != nullptr && parent->kind != EntityKind::node) {
          report.add_error(path, "PARAM parent must be NODE");
        }
        break;
      case EntityKind::value:
        if (!e.parent) {
          report.add_error(path, "VALUE requires an ENUM parent");
        } else if (parent != nullptr && parent->kind != EntityKind::enumeration) {
          report.add_error(path, "VALUE parent must be ENUM");
        }
        break;
    }

    if (e.kind == EntityKind::param) {
      if (e.unit.empty()) {
        report.add_error(path, "PARAM must declare a unit");
      }
      if (e.physical_bounds && !e.physical_bounds->valid()) {
        report.add_error(path, "physical_bounds must be a non-empty interval");
      }
    } else {
      if (!e.unit.empty()) {
        report.add_error(path, "unit is only legal on PARAM entities");
      }
      if (e.physical_bounds) {
        report.add_error(path, "physical_bounds is only legal on PARAM entities");
      }
      if (e.limiting_direction) {
        report.add_error(path, "limiting_direction is only legal on PARAM entities");
      }
    }
  }

  // Cycle detection: walking parent links must terminate within |entities|
  // steps from any start.
  std::set<EntityId> known_cyclic;
  for (const auto& [id, e] : entities) {
    if (known_cyclic.count(id) != 0) continue;
    std::vector<EntityId> path_walk;
    std::set<EntityId> on_path;
    const OntologyEntity* cur = &e;
    EntityId cur_id = id;
    while (true) {
      if (known_cyclic.count(cur_id) != 0) {
        // Tail runs into a cycle reported from another start.
        for (const auto& n : path_walk) known_cyclic.insert(n);
        break;
      }
      if (on_path.count(cur_id) != 0) {
        for (const auto& n : path_walk) known_cyclic.insert(n);
        report.add_error(cur_id.str(), "cycle detected in parent hierarchy");
        break;
      }
      on_path.insert(cur_id);
      path_walk.push_back(cur_id);
      if (!cur->parent) break;
      const OntologyEntity* next = o.find(*cur->parent);
      if (next == nullptr) break;  // dangling parent reported above
      cur_id = *cur->parent;
      cur = next;
    }
  }

  // Every ENUM needs at least one VALUE child.
  for (const auto& [id, e] : entities) {
    if (e.kind != EntityKind::enumeration) continue;
    bool has_value_child = false;
    for (const auto& [cid, c] : entities) {
      if (c.kind == EntityKind::value && c.parent && *c.parent == id) {
        has_value_child = true;
        break;
      }
    }
    if (!has_value_child) {
      report.add_error(id.str(), "ENUM must have at least one VALUE child");
    }
  }

  if (o.roots().empty()) {
    report.add_warning("", "no roots: ontology has no parentless entity");
  }

  return report;
}

/// Document-level validation: hard load errors (syntax, duplicate ids,
/// dangling parents) become report entries instead of exceptions.
inline ValidationReport validate_ontology_document(const std::string& document) {
  try {
    return validate_ontology(load_ontology(document));
  } catch (const Error& e) {
    ValidationReport report;
    report.add_error(e.entity(), e.what());
    return report;
  }
}

}  // namespace sotifval

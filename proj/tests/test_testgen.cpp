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

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "sotifval/testgen.hpp"

using namespace sotifval;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Ontology corpus_ontology() {
  return load_ontology(
      read_file(std::string(SOTIFVAL_DATA_DIR) + "/catalog/ontologies/odd_core.json"));
}

Scenario corpus_scenario() {
  return load_scenario(read_file(std::string(SOTIFVAL_DATA_DIR) +
                                 "/catalog/scenarios/highway_lead_brake.json"));
}

TriggeringCondition corpus_tc(const std::string& id) {
  return load_tc(
      read_file(std::string(SOTIFVAL_DATA_DIR) + "/catalog/tcs/" + id + ".json"));
}

const EntityId kVisibility = EntityId::parse("environment/ambient/visibility");
const EntityId kIlluminance = EntityId::parse("environment/ambient/illuminance");
const EntityId kFriction = EntityId::parse("road/surface/asphalt_friction");

/// Exhaustive pairwise-coverage check, independent of the generator: every
/// cross-param pair of levels must appear in at least one case.
std::size_t uncovered_pairs(const TestMatrix& matrix) {
  std::vector<EntityId> params;
  for (const auto& [param, levels] : matrix.domains) params.push_back(param);
  std::size_t missing = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      for (const double a : matrix.domains.at(params[i])) {
        for (const double b : matrix.domains.at(params[j])) {
          bool found = false;
          for (const auto& tc : matrix.cases) {
            if (tc.assignment.at(params[i]) == a && tc.assignment.at(params[j]) == b) {
              found = true;
              break;
            }
          }
          if (!found) ++missing;
        }
      }
    }
  }
  return missing;
}

ConstrainedScenario free_params_scenario(const std::vector<std::pair<EntityId, Interval>>& ranges,
                                         const Ontology& o) {
  std::ostringstream doc;
  doc << R"({"id": "gen_fixture", "layers": {"4": [{"kind": "ego_vehicle",)"
      << R"( "attrs": {"speed": 10}}]}, "params": [)";
  bool first = true;
  for (const auto& [param, iv] : ranges) {
    if (!first) doc << ",";
    first = false;
    doc << R"({"param": ")" << param.str() << R"(", "range": [)" << iv.lo << ", "
        << iv.hi << "]}";
  }
  doc << "]}";
  return apply_to_scenario(EffectiveConstraintSet{}, load_scenario(doc.str()), o);
}

}  // namespace

TEST_CASE("discretize spaces levels uniformly") {
  CHECK(discretize({0, 500}, 3) == std::vector<double>{0, 250, 500});
  CHECK(discretize({1, 2000}, 2) == std::vector<double>{1, 2000});
  CHECK(discretize({7, 7}, 5) == std::vector<double>{7});
  CHECK(discretize({10, 20}, 1) == std::vector<double>{15});
  try {
    discretize({0, 1}, 0);
    FAIL("expected InvalidLevels");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_levels);
  }
}

TEST_CASE("grid is the full factorial in odometer order") {
  const Ontology o = corpus_ontology();
  const ConstrainedScenario cs = free_params_scenario(
      {{kVisibility, {100, 500}}, {kIlluminance, {0, 1}}}, o);
  const TestMatrix m = generate_grid(cs, LevelSpec{.default_levels = 3,
                                                   .per_param = {{kIlluminance, 2}}},
                                     Provenance::nominal());
  REQUIRE(m.cases.size() == 6);
  // Path order puts illuminance before visibility; the last param is the
  // fastest axis, so the first three cases share illuminance 0.
  CHECK(m.cases[0].assignment.at(kVisibility) == 100);
  CHECK(m.cases[0].assignment.at(kIlluminance) == 0);
  CHECK(m.cases[1].assignment.at(kVisibility) == 300);
  CHECK(m.cases[1].assignment.at(kIlluminance) == 0);
  CHECK(m.cases[2].assignment.at(kVisibility) == 500);
  CHECK(m.cases[3].assignment.at(kIlluminance) == 1);
  for (std::size_t i = 0; i < m.cases.size(); ++i) {
    CHECK(m.cases[i].case_index == i);
  }
}

TEST_CASE("grid cardinality is the product of level counts") {
  const Ontology o = corpus_ontology();
  const ConstrainedScenario cs = free_params_scenario(
      {{kVisibility, {100, 500}}, {kIlluminance, {0, 1000}}, {kFriction, {0.2, 1.0}}},
      o);
  const TestMatrix m =
      generate_grid(cs, LevelSpec{.default_levels = 4}, Provenance::nominal());
  CHECK(m.cases.size() == 64);

  std::set<std::map<EntityId, double>> distinct;
  for (const auto& tc : m.cases) distinct.insert(tc.assignment);
  CHECK(distinct.size() == m.cases.size());

  for (const auto& tc : m.cases) {
    for (const auto& [param, value] : tc.assignment) {
      const auto& levels = m.domains.at(param);
      CHECK(std::find(levels.begin(), levels.end(), value) != levels.end());
    }
  }
}

TEST_CASE("zero free params yields one fixed case") {
  const Ontology o = corpus_ontology();
  const std::string doc = R"({
    "id": "all_fixed",
    "layers": {"4": [{"kind": "ego_vehicle", "attrs": {"speed": 10}}]},
    "params": [{"param": "environment/ambient/visibility", "value": 500}]
  })";
  const ConstrainedScenario cs =
      apply_to_scenario(EffectiveConstraintSet{}, load_scenario(doc), o);
  const TestMatrix m =
      generate_grid(cs, LevelSpec{.default_levels = 3}, Provenance::nominal());
  REQUIRE(m.cases.size() == 1);
  CHECK(m.cases[0].assignment.at(kVisibility) == 500);
  CHECK(m.domains.empty());

  const TestMatrix p = reduce_pairwise(cs, LevelSpec{.default_levels = 3},
                                       Provenance::nominal(), 0);
  REQUIRE(p.cases.size() == 1);
  CHECK(p.cases[0].assignment == m.cases[0].assignment);
}

TEST_CASE("pairwise covers every cross-param pair with fewer cases") {
  const Ontology o = corpus_ontology();
  const ConstrainedScenario cs = free_params_scenario(
      {{kVisibility, {100, 500}}, {kIlluminance, {0, 1000}}, {kFriction, {0.2, 1.0}}},
      o);
  const LevelSpec spec{.default_levels = 4};
  const TestMatrix grid = generate_grid(cs, spec, Provenance::nominal());
  const TestMatrix reduced = reduce_pairwise(cs, spec, Provenance::nominal(), 0);

  CHECK(uncovered_pairs(reduced) == 0);
  CHECK(reduced.cases.size() >= 16);  // 4x4 seed factorial is a hard floor
  CHECK(reduced.cases.size() < grid.cases.size());

  std::set<std::map<EntityId, double>> distinct;
  for (const auto& tc : reduced.cases) {
    distinct.insert(tc.assignment);
    for (const auto& [param, value] : tc.assignment) {
      const auto& levels = reduced.domains.at(param);
      CHECK(std::find(levels.begin(), levels.end(), value) != levels.end());
    }
  }
  CHECK(distinct.size() == reduced.cases.size());
}

TEST_CASE("pairwise of two params is the full factorial") {
  std::map<EntityId, std::vector<double>> domains = {
      {EntityId::parse("a"), {1, 2, 3}},
      {EntityId::parse("b"), {10, 20}},
  };
  const TestMatrix m = reduce_pairwise(domains, 0);
  CHECK(m.cases.size() == 6);
  CHECK(uncovered_pairs(m) == 0);
}

TEST_CASE("pairwise of one param enumerates its levels") {
  std::map<EntityId, std::vector<double>> domains = {
      {EntityId::parse("solo"), {1, 2, 3, 4}},
  };
  const TestMatrix m = reduce_pairwise(domains, 0);
  REQUIRE(m.cases.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(m.cases[i].assignment.at(EntityId::parse("solo")) == double(i + 1));
  }
}

TEST_CASE("pairwise coverage holds over randomized domain shapes") {
  std::mt19937 rng(4242);
  for (int round = 0; round < 60; ++round) {
    const std::size_t n_params = 2 + rng() % 5;  // up to 6 params
    std::map<EntityId, std::vector<double>> domains;
    std::size_t grid_size = 1;
    for (std::size_t p = 0; p < n_params; ++p) {
      const std::size_t k = 2 + rng() % 5;  // up to 6 levels
      std::vector<double> levels;
      for (std::size_t i = 0; i < k; ++i) {
        levels.push_back(static_cast<double>(p * 100 + i));
      }
      domains.emplace(EntityId::parse("p" + std::to_string(p)), levels);
      grid_size *= k;
    }
    const TestMatrix m = reduce_pairwise(domains, round);
    INFO("round " << round << ": " << n_params << " params, grid " << grid_size
                  << ", reduced " << m.cases.size());
    CHECK(uncovered_pairs(m) == 0);
    CHECK(m.cases.size() <= grid_size);
    if (n_params >= 3) CHECK(m.cases.size() < grid_size);
  }
}

TEST_CASE("identical seeds give byte-identical matrices") {
  std::map<EntityId, std::vector<double>> domains = {
      {EntityId::parse("a"), {1, 2, 3, 4, 5}},
      {EntityId::parse("b"), {10, 20, 30}},
      {EntityId::parse("c"), {0.5, 1.5}},
      {EntityId::parse("d"), {7, 8, 9}},
  };
  const std::string first = serialize(reduce_pairwise(domains, 7));
  const std::string second = serialize(reduce_pairwise(domains, 7));
  CHECK(first == second);
}

TEST_CASE("nominal matrix samples the scenario's own ranges") {
  const Ontology o = corpus_ontology();
  const Scenario s = corpus_scenario();
  const TestMatrix m = generate_nominal(s, o, LevelSpec{.default_levels = 3});
  REQUIRE(m.cases.size() == 9);  // two free params, three levels each
  CHECK(m.domains.at(kVisibility) == std::vector<double>{150, 2575, 5000});
  CHECK(m.domains.at(kIlluminance) == std::vector<double>{500, 25250, 50000});
  for (const auto& tc : m.cases) {
    CHECK(tc.provenance.is_nominal());
    CHECK(tc.assignment.at(kFriction) == 1.0);  // fixed param rides along
  }
}

TEST_CASE("heavy snow shifts only the constrained domains") {
  const Ontology o = corpus_ontology();
  const Scenario s = corpus_scenario();
  std::map<std::string, TriggeringCondition> tcs;
  tcs.emplace("heavy_snow", corpus_tc("heavy_snow"));
  const auto lookup = [&tcs](const std::string& id) -> const TriggeringCondition* {
    const auto it = tcs.find(id);
    return it == tcs.end() ? nullptr : &it->second;
  };
  const auto ecs = merge(flatten(tcs.at("heavy_snow"), lookup), o);
  const ConstrainedScenario cs = apply_to_scenario(ecs, s, o);
  const TestMatrix snow =
      generate_grid(cs, LevelSpec{.default_levels = 3}, Provenance::tc_set({"heavy_snow"}));
  const TestMatrix nominal = generate_nominal(s, o, LevelSpec{.default_levels = 3});

  CHECK(snow.domains.at(kVisibility) == std::vector<double>{150, 325, 500});
  CHECK(snow.domains.at(kIlluminance) == std::vector<double>{500, 1250, 2000});
  CHECK(nominal.domains.size() == snow.domains.size());
  for (const auto& tc : snow.cases) {
    CHECK_FALSE(tc.provenance.is_nominal());
    CHECK(tc.assignment.at(kFriction) == 0.8);  // fixed 1.0 scaled by the factor
  }
}

TEST_CASE("matrix serialization round-trips") {
  const Ontology o = corpus_ontology();
  const Scenario s = corpus_scenario();
  const TestMatrix m = generate_nominal(s, o, LevelSpec{.default_levels = 3});
  const std::string text = serialize(m);
  const TestMatrix back = parse_matrix(text);
  CHECK(back.cases == m.cases);
  CHECK(serialize(back) == text);

  const TestMatrix tagged = reduce_pairwise(
      m.domains, 0, s.id, Provenance::tc_set({"heavy_snow", "night_time"}), {});
  const TestMatrix tagged_back = parse_matrix(serialize(tagged));
  CHECK(tagged_back.cases == tagged.cases);
}

TEST_CASE("malformed matrix lines are rejected") {
  CHECK_THROWS_AS(parse_matrix("{\"case_index\": 0}\n"), Error);
  CHECK_THROWS_AS(parse_matrix("not json\n"), Error);
  CHECK(parse_matrix("").cases.empty());
}

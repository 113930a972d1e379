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
#include <sstream>

#include "sotifval/scenario.hpp"

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

std::string corpus_scenario_text() {
  return read_file(std::string(SOTIFVAL_DATA_DIR) +
                   "/catalog/scenarios/highway_lead_brake.json");
}

}  // namespace

TEST_CASE("bundled highway scenario loads with two dynamic objects") {
  const Scenario s = load_scenario(corpus_scenario_text());
  CHECK(s.id == "highway_lead_brake");
  REQUIRE(s.layer(4) != nullptr);
  CHECK(s.layer(4)->size() == 2);
  const SceneElement* ego = s.find_element(4, "ego_vehicle");
  REQUIRE(ego != nullptr);
  REQUIRE(ego->num_attr("speed") != nullptr);
  CHECK(*ego->num_attr("speed") == 30.0);
  const SceneElement* lead = s.find_element(4, "lead_vehicle");
  REQUIRE(lead != nullptr);
  REQUIRE(lead->str_attr("profile") != nullptr);
  CHECK(*lead->str_attr("profile") == "stopped");
  REQUIRE(s.function.has_value());
  CHECK(s.function->sensor_max_range == 400.0);
  CHECK(s.params.size() == 3);
}

TEST_CASE("layer id outside 1..6 is malformed") {
  const std::string doc = R"({
    "id": "bad_layer",
    "layers": {"7": [{"kind": "road_segment"}]}
  })";
  try {
    load_scenario(doc);
    FAIL("expected SyntaxError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::syntax_error);
    CHECK(std::string(e.what()).find("outside 1..6") != std::string::npos);
  }
}

TEST_CASE("scenario structural rejects") {
  SECTION("duplicate param assignment") {
    const std::string doc = R"({
      "id": "dup",
      "params": [
        {"param": "a/b", "value": 1},
        {"param": "a/b", "range": [0, 2]}
      ]
    })";
    CHECK_THROWS_AS(load_scenario(doc), Error);
  }
  SECTION("param with both value and range") {
    const std::string doc = R"({
      "id": "both",
      "params": [{"param": "a/b", "value": 1, "range": [0, 2]}]
    })";
    CHECK_THROWS_AS(load_scenario(doc), Error);
  }
  SECTION("param with neither value nor range") {
    const std::string doc = R"({"id": "neither", "params": [{"param": "a/b"}]})";
    CHECK_THROWS_AS(load_scenario(doc), Error);
  }
  SECTION("unknown top-level key") {
    CHECK_THROWS_AS(load_scenario(std::string(R"({"id": "x", "weather": {}})")), Error);
  }
  SECTION("incomplete function block") {
    const std::string doc = R"({
      "id": "nofun",
      "function": {"sensor_max_range": 200}
    })";
    CHECK_THROWS_AS(load_scenario(doc), Error);
  }
}

TEST_CASE("bundled corpus scenario validates cleanly") {
  const Ontology o = corpus_ontology();
  const Scenario s = load_scenario(corpus_scenario_text());
  const auto report = validate_scenario(s, o);
  INFO(report.to_text());
  CHECK(report.empty());
}

TEST_CASE("validate_scenario flags bounds and resolution defects") {
  const Ontology o = corpus_ontology();
  SECTION("value below physical bounds") {
    const std::string doc = R"({
      "id": "neg_vis",
      "layers": {"4": [{"kind": "ego_vehicle", "attrs": {"speed": 10}}]},
      "params": [{"param": "environment/ambient/visibility", "value": -5}]
    })";
    const auto report = validate_scenario(load_scenario(doc), o);
    REQUIRE(report.error_count() == 1);
    CHECK(report.issues()[0].entity == "environment/ambient/visibility");
    CHECK(report.issues()[0].message.find("below physical bounds") != std::string::npos);
  }
  SECTION("unknown param path") {
    const std::string doc = R"({
      "id": "ghost",
      "layers": {"4": [{"kind": "ego_vehicle", "attrs": {"speed": 10}}]},
      "params": [{"param": "no/such/param", "value": 1}]
    })";
    const auto report = validate_scenario(load_scenario(doc), o);
    REQUIRE(report.error_count() == 1);
    CHECK(report.issues()[0].entity == "no/such/param");
    CHECK(report.issues()[0].message.find("unresolved param") != std::string::npos);
  }
}

TEST_CASE("scenario mutation suite: each violation yields a report entry") {
  const Ontology o = corpus_ontology();
  struct Mutation {
    const char* label;
    const char* doc;
    const char* needle;  // expected in some issue message
  };
  const Mutation mutations[] = {
      {"kind not in layer vocabulary",
       R"({"id": "m", "layers": {"1": [{"kind": "pedestrian"}],
                                 "4": [{"kind": "ego_vehicle"}]}})",
       "not in layer 1 vocabulary"},
      {"two ego vehicles",
       R"({"id": "m", "layers": {"4": [{"kind": "ego_vehicle"},
                                       {"kind": "ego_vehicle"}]}})",
       "more than one ego_vehicle"},
      {"negative ego speed",
       R"({"id": "m", "layers": {"4": [{"kind": "ego_vehicle",
                                        "attrs": {"speed": -3}}]}})",
       "speed must be non-negative"},
      {"unknown lead profile",
       R"({"id": "m", "layers": {"4": [{"kind": "ego_vehicle"},
                                       {"kind": "lead_vehicle",
                                        "attrs": {"profile": "wandering"}}]}})",
       "profile \"wandering\" unknown"},
      {"non-positive initial gap",
       R"({"id": "m", "layers": {"4": [{"kind": "ego_vehicle"},
                                       {"kind": "lead_vehicle",
                                        "attrs": {"initial_gap": 0}}]}})",
       "initial_gap must be positive"},
      {"range above physical bounds",
       R"({"id": "m", "layers": {"4": [{"kind": "ego_vehicle"}]},
           "params": [{"param": "environment/ambient/visibility",
                       "range": [0, 20000]}]})",
       "range above physical bounds"},
      {"inverted range",
       R"({"id": "m", "layers": {"4": [{"kind": "ego_vehicle"}]},
           "params": [{"param": "environment/ambient/visibility",
                       "range": [10, 5]}]})",
       "lower bound exceeds upper bound"},
      {"non-positive function parameter",
       R"({"id": "m", "layers": {"4": [{"kind": "ego_vehicle"}]},
           "function": {"sensor_max_range": 0, "reaction_time": 0.5,
                        "max_decel_at_mu1": 6, "illum_full": 1000,
                        "illum_floor_factor": 0.5}})",
       "must be positive"},
      {"illum floor above one",
       R"({"id": "m", "layers": {"4": [{"kind": "ego_vehicle"}]},
           "function": {"sensor_max_range": 200, "reaction_time": 0.5,
                        "max_decel_at_mu1": 6, "illum_full": 1000,
                        "illum_floor_factor": 1.5}})",
       "must not exceed 1"},
  };
  for (const auto& m : mutations) {
    INFO(m.label);
    const auto report = validate_scenario_document(m.doc, o);
    CHECK_FALSE(report.ok());
    bool found = false;
    for (const auto& issue : report.issues()) {
      if (issue.message.find(m.needle) != std::string::npos) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("missing ego vehicle is a warning, not an error") {
  const Ontology o = corpus_ontology();
  const std::string doc = R"({"id": "static_scene",
                              "layers": {"1": [{"kind": "road_segment"}]}})";
  const auto report = validate_scenario(load_scenario(doc), o);
  CHECK(report.ok());
  REQUIRE(report.issues().size() == 1);
  CHECK(report.issues()[0].severity == Severity::warning);
  CHECK(report.issues()[0].message.find("not simulatable") != std::string::npos);
}

TEST_CASE("scenario round-trips through its serialization") {
  const Scenario s = load_scenario(corpus_scenario_text());
  const Scenario back = load_scenario(serialize(s));
  CHECK(s == back);

  const std::string with_extras = R"({
    "id": "mixed_attrs",
    "odd_tags": ["urban", "night"],
    "layers": {
      "2": [{"kind": "street_lamp", "attrs": {"height_m": 8, "state": "off"}}],
      "4": [{"kind": "ego_vehicle", "attrs": {"speed": 13.9}}],
      "6": [{"kind": "v2x_message", "attrs": {"payload": "roadwork_ahead"}}]
    },
    "params": []
  })";
  const Scenario t = load_scenario(with_extras);
  CHECK(t == load_scenario(serialize(t)));
  CHECK(t.odd_tags.size() == 2);
  CHECK(t.function == std::nullopt);
}

TEST_CASE("zero free params means a single nominal case downstream") {
  const std::string doc = R"({
    "id": "all_fixed",
    "layers": {"4": [{"kind": "ego_vehicle", "attrs": {"speed": 20}},
                     {"kind": "lead_vehicle",
                      "attrs": {"profile": "stopped", "initial_gap": 100}}]},
    "params": [
      {"param": "environment/ambient/visibility", "value": 500},
      {"param": "road/surface/asphalt_friction", "value": 1.0}
    ]
  })";
  const Scenario s = load_scenario(doc);
  std::size_t free_params = 0;
  for (const auto& p : s.params) {
    if (!p.fixed()) ++free_params;
  }
  CHECK(free_params == 0);
  CHECK(validate_scenario(s, corpus_ontology()).empty());
}

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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "sotifval/catalog.hpp"

namespace {

using namespace sotifval;
namespace fs = std::filesystem;

const std::string kCorpusRoot = std::string(SOTIFVAL_DATA_DIR) + "/catalog";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

/// Fresh directory under the system temp root, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "sotifval_XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void copy_corpus(const fs::path& dst) {
  fs::copy(kCorpusRoot, dst,
           fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::syntax_error;
}

TEST_CASE("the bundled catalog opens from its index") {
  const CatalogStore store = CatalogStore::open(kCorpusRoot);

  const auto all = store.list();
  REQUIRE(all.size() == 5);
  CHECK(store.list(EntryKind::ontology).size() == 1);
  CHECK(store.list(EntryKind::scenario).size() == 1);

  const auto tcs = store.list(EntryKind::tc);
  REQUIRE(tcs.size() == 3);
  CHECK(tcs[0].id == "heavy_snow");
  CHECK(tcs[1].id == "heavy_snow_night");
  CHECK(tcs[2].id == "night_time");
  for (const auto& e : tcs) CHECK(e.digest.size() == 64);

  const Ontology o = store.the_ontology();
  CHECK(o.size() == 12);
  const Scenario s = store.scenario("highway_lead_brake");
  CHECK(s.id == "highway_lead_brake");
  const TriggeringCondition tc = store.tc("heavy_snow_night");
  CHECK(tc.sub_conditions.size() == 2);
}

TEST_CASE("stored bytes round-trip exactly") {
  const CatalogStore store = CatalogStore::open(kCorpusRoot);
  const std::string via_store = store.get(EntryKind::tc, "heavy_snow");
  const std::string via_disk = read_file(fs::path(kCorpusRoot) / "tcs/heavy_snow.json");
  CHECK(via_store == via_disk);
}

TEST_CASE("the lookup composes nested conditions from the store") {
  const CatalogStore store = CatalogStore::open(kCorpusRoot);
  const TcLookup lookup = store.tc_lookup();

  REQUIRE(lookup("heavy_snow") != nullptr);
  CHECK(lookup("heavy_snow")->constraints.size() == 3);
  CHECK(lookup("no_such_tc") == nullptr);

  const auto flat = flatten(store.tc("heavy_snow_night"), lookup);
  REQUIRE(flat.size() == 4);
  CHECK(flat[0].first == "heavy_snow");
  CHECK(flat[3].first == "night_time");
}

TEST_CASE("adds round-trip through get and land in a sorted index") {
  TempDir tmp;
  CatalogStore store = CatalogStore::rebuild(tmp.path().string());
  CHECK(store.list().empty());

  const std::string ontology = read_file(fs::path(kCorpusRoot) / "ontologies/odd_core.json");
  const std::string scenario =
      read_file(fs::path(kCorpusRoot) / "scenarios/highway_lead_brake.json");
  const std::string night = read_file(fs::path(kCorpusRoot) / "tcs/night_time.json");
  const std::string snow = read_file(fs::path(kCorpusRoot) / "tcs/heavy_snow.json");

  store.add(EntryKind::ontology, ontology, "odd_core");
  store.add(EntryKind::tc, night);
  store.add(EntryKind::tc, snow);
  const CatalogEntry& entry = store.add(EntryKind::scenario, scenario);
  CHECK(entry.path == "scenarios/highway_lead_brake.json");

  CHECK(store.get(EntryKind::ontology, "odd_core") == ontology);
  CHECK(store.get(EntryKind::tc, "night_time") == night);
  CHECK(store.get(EntryKind::scenario, "highway_lead_brake") == scenario);

  const auto entries = store.list();
  REQUIRE(entries.size() == 4);
  CHECK(entries[0].kind == EntryKind::ontology);
  CHECK(entries[1].kind == EntryKind::scenario);
  CHECK(entries[2].id == "heavy_snow");
  CHECK(entries[3].id == "night_time");

  // A fresh open reads the same picture back from the written index.
  const CatalogStore reopened = CatalogStore::open(tmp.path().string());
  CHECK(reopened.list() == entries);
}

TEST_CASE("rebuild reproduces an incrementally grown index") {
  TempDir tmp;
  CatalogStore store = CatalogStore::rebuild(tmp.path().string());
  store.add(EntryKind::ontology,
            read_file(fs::path(kCorpusRoot) / "ontologies/odd_core.json"), "odd_core");
  store.add(EntryKind::tc, read_file(fs::path(kCorpusRoot) / "tcs/heavy_snow.json"));
  store.add(EntryKind::scenario,
            read_file(fs::path(kCorpusRoot) / "scenarios/highway_lead_brake.json"));

  const std::string incremental = read_file(tmp.path() / "catalog.json");
  const CatalogStore rebuilt = CatalogStore::rebuild(tmp.path().string());
  const std::string rescanned = read_file(tmp.path() / "catalog.json");

  CHECK(incremental == rescanned);
  CHECK(rebuilt.list() == store.list());
}

TEST_CASE("rebuilding the corpus copy matches the shipped index") {
  TempDir tmp;
  copy_corpus(tmp.path());
  const CatalogStore opened = CatalogStore::open(tmp.path().string());
  const CatalogStore rebuilt = CatalogStore::rebuild(tmp.path().string());
  CHECK(opened.list() == rebuilt.list());
}

TEST_CASE("duplicate and malformed ids are rejected") {
  TempDir tmp;
  copy_corpus(tmp.path());
  CatalogStore store = CatalogStore::open(tmp.path().string());

  const std::string snow = read_file(fs::path(kCorpusRoot) / "tcs/heavy_snow.json");
  CHECK(code_of([&] { store.add(EntryKind::tc, snow); }) == ErrorCode::duplicate_id);
  CHECK(code_of([&] {
          store.add(EntryKind::ontology,
                    read_file(fs::path(kCorpusRoot) / "ontologies/odd_core.json"));
        }) == ErrorCode::syntax_error);
  CHECK(code_of([&] { store.add(EntryKind::tc, snow, "renamed_snow"); }) ==
        ErrorCode::syntax_error);
  CHECK(code_of([&] { store.add(EntryKind::tc, R"({"id": "Bad/Id"})"); }) ==
        ErrorCode::syntax_error);
  CHECK(code_of([&] { store.add(EntryKind::tc, R"({"name": "anonymous"})"); }) ==
        ErrorCode::syntax_error);
}

TEST_CASE("invalid documents never enter the catalog") {
  TempDir tmp;
  copy_corpus(tmp.path());
  CatalogStore store = CatalogStore::open(tmp.path().string());

  const std::string bad_tc = R"({
    "id": "slush",
    "name": "Slush",
    "constraints": [
      {"param": "road/surface/asphalt_friction", "type": "FACTOR", "value": 1.5}
    ]
  })";
  CHECK(code_of([&] { store.add(EntryKind::tc, bad_tc); }) ==
        ErrorCode::validation_failed);
  CHECK(store.find(EntryKind::tc, "slush") == nullptr);
  CHECK_FALSE(fs::exists(tmp.path() / "tcs/slush.json"));

  const std::string bad_scenario = R"({
    "id": "ghost_road",
    "odd_tags": [],
    "layers": {"4": [{"kind": "ego_vehicle", "speed": 30}]},
    "params": [{"param": "environment/ambient/fog_density", "range": [0, 1]}]
  })";
  CHECK(code_of([&] { store.add(EntryKind::scenario, bad_scenario); }) ==
        ErrorCode::validation_failed);
}

TEST_CASE("missing entries and tampered content are told apart") {
  TempDir tmp;
  copy_corpus(tmp.path());
  const CatalogStore store = CatalogStore::open(tmp.path().string());

  CHECK(code_of([&] { store.get(EntryKind::tc, "black_ice"); }) ==
        ErrorCode::not_found);
  CHECK(code_of([&] { store.scenario("no_such"); }) == ErrorCode::not_found);

  const fs::path victim = tmp.path() / "tcs/heavy_snow.json";
  write_file(victim, read_file(victim) + " ");
  CHECK(code_of([&] { store.get(EntryKind::tc, "heavy_snow"); }) ==
        ErrorCode::digest_mismatch);
  // Unrelated entries stay readable.
  CHECK_NOTHROW(store.get(EntryKind::tc, "night_time"));
}

TEST_CASE("interrupted writes leave the previous state intact") {
  TempDir tmp;
  copy_corpus(tmp.path());

  // A crashed writer leaves temp files behind; they are not catalog objects.
  write_file(tmp.path() / "tcs/fog.json.tmp", R"({"id": "fog"})");
  write_file(tmp.path() / "catalog.json.tmp", "{garbage");

  const CatalogStore opened = CatalogStore::open(tmp.path().string());
  CHECK(opened.list().size() == 5);
  CHECK(opened.find(EntryKind::tc, "fog") == nullptr);

  const CatalogStore rebuilt = CatalogStore::rebuild(tmp.path().string());
  CHECK(rebuilt.list().size() == 5);
  CHECK(rebuilt.find(EntryKind::tc, "fog") == nullptr);
}

TEST_CASE("a catalog without an index is scanned in place") {
  TempDir tmp;
  copy_corpus(tmp.path());
  fs::remove(tmp.path() / "catalog.json");

  const CatalogStore store = CatalogStore::open(tmp.path().string());
  CHECK(store.list().size() == 5);
  CHECK(store.find(EntryKind::scenario, "highway_lead_brake") != nullptr);
  // open never writes: the index file stays absent until a rebuild.
  CHECK_FALSE(fs::exists(tmp.path() / "catalog.json"));

  CatalogStore::rebuild(tmp.path().string());
  CHECK(fs::exists(tmp.path() / "catalog.json"));
}

TEST_CASE("missing roots are io errors") {
  CHECK(code_of([&] { CatalogStore::open("/nonexistent/sotifval"); }) ==
        ErrorCode::io_error);
  CHECK(code_of([&] { CatalogStore::rebuild("/nonexistent/sotifval"); }) ==
        ErrorCode::io_error);
}

TEST_CASE("scenario listings filter by odd tag") {
  const CatalogStore store = CatalogStore::open(kCorpusRoot);
  CHECK(store.list_scenarios_with_tag("highway").size() == 1);
  CHECK(store.list_scenarios_with_tag("urban").empty());
  CHECK(store
            .list_scenarios_where([](const Scenario& s) {
              return s.find_element(4, "lead_vehicle") != nullptr;
            })
            .size() == 1);
}

}  // namespace

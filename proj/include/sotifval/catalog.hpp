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

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "sotifval/constraints.hpp"
#include "sotifval/errors.hpp"
#include "sotifval/ontology.hpp"
#include "sotifval/scenario.hpp"

namespace sotifval {

enum class EntryKind { ontology, scenario, tc };

inline const char* to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::ontology: return "ONTOLOGY";
    case EntryKind::scenario: return "SCENARIO";
    case EntryKind::tc: return "TC";
  }
  return "UNKNOWN";
}

inline EntryKind entry_kind_from_token(const std::string& token,
                                       const std::string& context) {
  if (token == "ONTOLOGY") return EntryKind::ontology;
  if (token == "SCENARIO") return EntryKind::scenario;
  if (token == "TC") return EntryKind::tc;
  fail(ErrorCode::syntax_error, context + ": unknown entry kind \"" + token + "\"");
}

inline const char* entry_dir(EntryKind kind) {
  switch (kind) {
    case EntryKind::ontology: return "ontologies";
    case EntryKind::scenario: return "scenarios";
    case EntryKind::tc: return "tcs";
  }
  return "";
}

struct CatalogEntry {
  EntryKind kind = EntryKind::ontology;
  std::string id;
  std::string path;  // relative to the catalog root
  std::string digest;

  bool operator==(const CatalogEntry&) const = default;
};

namespace detail {

inline std::string sha256_hex(const std::string& content) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    fail(ErrorCode::io_error, "sha256 digest computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0f]);
  }
  return out;
}

inline std::string read_file_or_fail(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    fail(ErrorCode::io_error, "cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    fail(ErrorCode::io_error, "read failed on " + path.string());
  }
  return ss.str();
}

/// Writes via a sibling temp file and renames over the target, so readers
/// only ever observe the old or the new content, never a torn write.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.good()) {
      fail(ErrorCode::io_error, "cannot write " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out.good()) {
      fail(ErrorCode::io_error, "write failed on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    fail(ErrorCode::io_error,
         "rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
  }
}

/// Advisory exclusive flock on <root>/.catalog.lock, serializing writers.
/// Readers take no lock: stored objects are never mutated in place and every
/// write lands by rename, so any read observes a complete document.
class CatalogLock {
 public:
  explicit CatalogLock(const std::filesystem::path& root) {
    const std::filesystem::path lock_path = root / ".catalog.lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      fail(ErrorCode::io_error, "cannot open lock file " + lock_path.string());
    }
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      fail(ErrorCode::io_error, "cannot lock " + lock_path.string());
    }
  }
  ~CatalogLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  CatalogLock(const CatalogLock&) = delete;
  CatalogLock& operator=(const CatalogLock&) = delete;

 private:
  int fd_ = -1;
};

inline std::string id_of_document(const std::string& content,
                                  const std::string& context) {
  const nlohmann::json j = parse_json(content);
  require_object(j, context);
  if (!has_value(j, "id") || !j.at("id").is_string()) {
    fail(ErrorCode::syntax_error, context + ": missing string \"id\"");
  }
  return j.at("id").get<std::string>();
}

/// Entry ids become file names, so they are restricted to a flat id charset.
inline void check_entry_id(const std::string& id) {
  const bool ok = !id.empty() &&
                  std::all_of(id.begin(), id.end(), [](char c) {
                    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                           c == '_';
                  });
  if (!ok) {
    fail(ErrorCode::syntax_error,
         "catalog id \"" + id + "\" must be non-empty [a-z0-9_]", id);
  }
}

}  // namespace detail

/// Content-addressed store of ontologies, scenarios, and triggering
/// conditions under one directory tree. An index file at the root records
/// ids, relative paths, and content digests; every read verifies its digest.
/// Writers serialize on an advisory file lock, readers share it.
class CatalogStore {
 public:
  /// Opens an existing catalog. A missing index is tolerated: the store
  /// re-indexes the object directories in memory without writing.
  static CatalogStore open(const std::string& root) {
    CatalogStore store(root);
    if (std::filesystem::exists(store.index_path())) {
      store.load_index();
    } else if (std::filesystem::is_directory(store.root_)) {
      store.scan();
    } else {
      fail(ErrorCode::io_error, "catalog root " + root + " does not exist");
    }
    return store;
  }

  /// Re-scans the object directories, recomputes every digest, and rewrites
  /// the index.
  static CatalogStore rebuild(const std::string& root) {
    CatalogStore store(root);
    const detail::CatalogLock lock(store.root_);
    if (!std::filesystem::is_directory(store.root_)) {
      fail(ErrorCode::io_error, "catalog root " + root + " does not exist");
    }
    store.scan();
    store.write_index();
    return store;
  }

  const std::string& root() const { return root_string_; }

  std::vector<CatalogEntry> list(std::optional<EntryKind> kind = {}) const {
    std::vector<CatalogEntry> out;
    for (const auto& e : entries_) {
      if (!kind || e.kind == *kind) out.push_back(e);
    }
    return out;
  }

  /// Scenario entries whose loaded document satisfies the predicate.
  std::vector<CatalogEntry> list_scenarios_where(
      const std::function<bool(const Scenario&)>& pred) const {
    std::vector<CatalogEntry> out;
    for (const auto& e : entries_) {
      if (e.kind != EntryKind::scenario) continue;
      if (pred(load_scenario(get(EntryKind::scenario, e.id)))) out.push_back(e);
    }
    return out;
  }

  std::vector<CatalogEntry> list_scenarios_with_tag(const std::string& odd_tag) const {
    return list_scenarios_where([&](const Scenario& s) {
      return std::find(s.odd_tags.begin(), s.odd_tags.end(), odd_tag) !=
             s.odd_tags.end();
    });
  }

  const CatalogEntry* find(EntryKind kind, const std::string& id) const {
    for (const auto& e : entries_) {
      if (e.kind == kind && e.id == id) return &e;
    }
    return nullptr;
  }

  /// Returns the stored document after verifying its content digest.
  std::string get(EntryKind kind, const std::string& id) const {
    const CatalogEntry* entry = find(kind, id);
    if (entry == nullptr) {
      fail(ErrorCode::not_found,
           std::string(to_string(kind)) + " \"" + id + "\" is not in the catalog",
           id);
    }
    const std::string content = detail::read_file_or_fail(root_ / entry->path);
    const std::string digest = detail::sha256_hex(content);
    if (digest != entry->digest) {
      fail(ErrorCode::digest_mismatch,
           std::string(to_string(kind)) + " \"" + id + "\" content digest " + digest +
               " does not match the index entry " + entry->digest,
           id);
    }
    return content;
  }

  /// Validates and stores a new document, then updates the index. Both
  /// writes are temp-then-rename; the index is only rewritten after the
  /// object file landed. Ontology documents carry no embedded id, so one
  /// must be supplied; for scenarios and conditions a supplied id must match
  /// the embedded one.
  const CatalogEntry& add(EntryKind kind, const std::string& content,
                          const std::string& id_hint = {}) {
    const detail::CatalogLock lock(root_);
    const std::string context = to_string(kind);
    std::string id;
    if (kind == EntryKind::ontology) {
      if (id_hint.empty()) {
        fail(ErrorCode::syntax_error,
             "ontology documents carry no embedded id; supply one");
      }
      id = id_hint;
    } else {
      id = detail::id_of_document(content, context);
      if (!id_hint.empty() && id_hint != id) {
        fail(ErrorCode::syntax_error,
             context + " id \"" + id + "\" does not match requested id \"" +
                 id_hint + "\"",
             id);
      }
    }
    detail::check_entry_id(id);
    if (find(kind, id) != nullptr) {
      fail(ErrorCode::duplicate_id,
           context + std::string(" \"") + id + "\" is already in the catalog", id);
    }
    validate_for_add(kind, content, id);

    CatalogEntry entry;
    entry.kind = kind;
    entry.id = id;
    entry.path = std::string(entry_dir(kind)) + "/" + id + ".json";
    entry.digest = detail::sha256_hex(content);

    std::error_code ec;
    std::filesystem::create_directories(root_ / entry_dir(kind), ec);
    if (ec) {
      fail(ErrorCode::io_error, "cannot create " + (root_ / entry_dir(kind)).string());
    }
    detail::write_file_atomic(root_ / entry.path, content);

    entries_.push_back(entry);
    sort_entries();
    write_index();
    return *find(kind, id);
  }

  /// The catalog's reference ontology. Exactly one must be stored.
  Ontology the_ontology() const {
    const auto ontologies = list(EntryKind::ontology);
    if (ontologies.size() != 1) {
      fail(ErrorCode::not_found,
           "expected exactly one ontology in the catalog, found " +
               std::to_string(ontologies.size()));
    }
    return load_ontology(get(EntryKind::ontology, ontologies.front().id));
  }

  Scenario scenario(const std::string& id) const {
    return load_scenario(get(EntryKind::scenario, id));
  }

  TriggeringCondition tc(const std::string& id) const {
    return load_tc(get(EntryKind::tc, id));
  }

  /// Lookup for composing nested triggering conditions. Loads lazily and
  /// caches; unknown ids resolve to nullptr so composition can report them.
  TcLookup tc_lookup() const {
    auto cache = std::make_shared<std::map<std::string, TriggeringCondition>>();
    return [this, cache](const std::string& id) -> const TriggeringCondition* {
      auto it = cache->find(id);
      if (it != cache->end()) return &it->second;
      if (find(EntryKind::tc, id) == nullptr) return nullptr;
      auto [inserted, unused] = cache->emplace(id, tc(id));
      return &inserted->second;
    };
  }

 private:
  explicit CatalogStore(const std::string& root)
      : root_string_(root), root_(root) {}

  std::filesystem::path index_path() const { return root_ / "catalog.json"; }

  void sort_entries() {
    std::sort(entries_.begin(), entries_.end(),
              [](const CatalogEntry& a, const CatalogEntry& b) {
                if (a.kind != b.kind) return a.kind < b.kind;
                return a.id < b.id;
              });
  }

  void load_index() {
    const std::string text = detail::read_file_or_fail(index_path());
    const nlohmann::json j = detail::parse_json(text);
    detail::require_object(j, "catalog index");
    detail::reject_unknown_keys(j, {"entries"}, "catalog index");
    if (!detail::has_value(j, "entries") || !j.at("entries").is_array()) {
      fail(ErrorCode::syntax_error, "catalog index: missing entries array");
    }
    for (const auto& item : j.at("entries")) {
      detail::require_object(item, "catalog entry");
      detail::reject_unknown_keys(item, {"kind", "id", "path", "digest"},
                                  "catalog entry");
      CatalogEntry entry;
      entry.kind = entry_kind_from_token(
          detail::get_string(item, "kind", "catalog entry"), "catalog entry");
      entry.id = detail::get_string(item, "id", "catalog entry");
      entry.path = detail::get_string(item, "path", "catalog entry");
      entry.digest = detail::get_string(item, "digest", "catalog entry");
      entries_.push_back(std::move(entry));
    }
    sort_entries();
  }

  void scan() {
    entries_.clear();
    for (EntryKind kind :
         {EntryKind::ontology, EntryKind::scenario, EntryKind::tc}) {
      const std::filesystem::path dir = root_ / entry_dir(kind);
      if (!std::filesystem::is_directory(dir)) continue;
      for (const auto& file : std::filesystem::directory_iterator(dir)) {
        if (!file.is_regular_file()) continue;
        if (file.path().extension() != ".json") continue;
        const std::string content = detail::read_file_or_fail(file.path());
        CatalogEntry entry;
        entry.kind = kind;
        if (kind == EntryKind::ontology) {
          entry.id = file.path().stem().string();
        } else {
          try {
            entry.id = detail::id_of_document(content, file.path().string());
          } catch (const Error& e) {
            fail(ErrorCode::io_error,
                 "unreadable catalog object " + file.path().string() + ": " +
                     e.what());
          }
        }
        entry.path = std::string(entry_dir(kind)) + "/" +
                     file.path().filename().string();
        entry.digest = detail::sha256_hex(content);
        entries_.push_back(std::move(entry));
      }
    }
    sort_entries();
    for (std::size_t i = 1; i < entries_.size(); ++i) {
      if (entries_[i].kind == entries_[i - 1].kind &&
          entries_[i].id == entries_[i - 1].id) {
        fail(ErrorCode::duplicate_id,
             std::string(to_string(entries_[i].kind)) + " \"" + entries_[i].id +
                 "\" appears in more than one file",
             entries_[i].id);
      }
    }
  }

  void write_index() {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : entries_) {
      entries.push_back({{"kind", to_string(e.kind)},
                         {"id", e.id},
                         {"path", e.path},
                         {"digest", e.digest}});
    }
    const nlohmann::json j = {{"entries", entries}};
    detail::write_file_atomic(index_path(), j.dump(2) + "\n");
  }

  void validate_for_add(EntryKind kind, const std::string& content,
                        const std::string& id) const {
    ValidationReport report;
    switch (kind) {
      case EntryKind::ontology:
        report = validate_ontology_document(content);
        break;
      case EntryKind::scenario:
        report = validate_scenario_document(content, the_ontology());
        break;
      case EntryKind::tc:
        report = validate_tc_document(content, the_ontology());
        break;
    }
    if (!report.ok()) {
      const auto& issues = report.issues();
      const auto first_error =
          std::find_if(issues.begin(), issues.end(), [](const auto& i) {
            return i.severity == Severity::error;
          });
      fail(ErrorCode::validation_failed,
           std::string(to_string(kind)) + " \"" + id +
               "\" failed validation: " + first_error->message,
           id);
    }
  }

  std::string root_string_;
  std::filesystem::path root_;
  std::vector<CatalogEntry> entries_;
};

}  // namespace sotifval

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "feedaudit/catalog.hpp"
#include "feedaudit/platform.hpp"
#include "feedaudit/puppet.hpp"
#include "feedaudit/scenario.hpp"

namespace feedaudit::store {

inline constexpr int kStoreSchemaVersion = 1;

/// One served post as stored on disk. Self-contained: analysis never needs
/// the catalog.
struct ObservationRow {
  int run = 0;
  std::string user;
  puppet::Role role = puppet::Role::control;
  std::string region;
  std::string language;
  std::size_t batch = 0;
  std::size_t position = 0;
  std::string post;
  std::string creator;
  std::string sound;
  std::vector<std::string> hashtags;
  std::string post_language;
  std::string post_region;
  double duration = 0;
  catalog::Counters counters;
  int bucket = 0;
  puppet::ActionTaken action = puppet::ActionTaken::none;
  double vvr = 0;
  double dwell = 0;

  /// Session label such as "u97_US_en".
  std::string label() const;
  friend bool operator==(const ObservationRow&, const ObservationRow&) = default;
};

struct RunRow {
  int run = 0;
  bool failed = false;
  std::string user;
  double dwell = 0;
  std::size_t likes = 0;
  std::size_t follows = 0;
  std::size_t watches = 0;
  std::string error;
  friend bool operator==(const RunRow&, const RunRow&) = default;
};

struct ScenarioRecord {
  puppet::Scenario scenario;
  std::vector<ObservationRow> observations;
  std::vector<RunRow> runs;

  std::vector<int> failed_runs() const;
};

struct ScenarioEntry {
  int id = 0;
  std::uint64_t seed = 0;
  int runs = 0;
  int failed = 0;
};

struct Manifest {
  std::uint64_t catalog_seed = 0;
  std::string catalog_fingerprint;
  std::map<int, ScenarioEntry> scenarios;
};

std::vector<ObservationRow> to_rows(const std::vector<puppet::Observation>& observations,
                                    const catalog::Catalog& catalog);
std::vector<RunRow> to_rows(const std::vector<puppet::RunRecord>& runs);

void write_observations(std::ostream& out, const std::vector<ObservationRow>& rows);
std::vector<ObservationRow> read_observations(std::istream& in, const std::string& source);
void write_runs(std::ostream& out, const std::vector<RunRow>& rows);
std::vector<RunRow> read_runs(std::istream& in, const std::string& source);
void write_ledger(std::ostream& out, const std::vector<platform::LedgerEntry>& ledger);

/// Hex FNV-1a digest of a file's bytes.
std::string file_fingerprint(const std::filesystem::path& path);

/// Directory layout:
///   manifest.tsv, catalog.tsv, params.yaml
///   scenarios/s<id>/{scenario.yaml, observations.tsv, ledger.tsv, runs.tsv}
///   reports/
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path catalog_path() const { return root_ / "catalog.tsv"; }
  std::filesystem::path params_path() const { return root_ / "params.yaml"; }
  std::filesystem::path reports_dir() const { return root_ / "reports"; }
  std::filesystem::path scenario_dir(int id) const;

  bool exists() const;
  bool has_catalog() const { return std::filesystem::exists(catalog_path()); }

  /// Writes catalog.tsv and a fresh manifest.
  void init(const catalog::Catalog& catalog);
  catalog::Catalog load_catalog() const;

  Manifest read_manifest() const;
  void write_manifest(const Manifest& manifest) const;

  /// Replaces any previous record of the same scenario.
  void save_scenario(const puppet::Scenario& scenario, const puppet::Simulation& simulation,
                     const catalog::Catalog& catalog);
  ScenarioRecord load_scenario(int id) const;
  std::vector<int> scenario_ids() const;

 private:
  std::filesystem::path root_;
};

}  // namespace feedaudit::store

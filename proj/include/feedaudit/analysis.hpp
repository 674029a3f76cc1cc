#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "feedaudit/metrics.hpp"
#include "feedaudit/skipgram.hpp"
#include "feedaudit/store.hpp"

namespace feedaudit::cli {

using metrics::EntityKind;

struct AnalysisOptions {
  bool drop_correction = true;
  double hashtag_max_fraction = 0.2;
  bool similarity = true;
  metrics::SkipGramParams skipgram;
  bool plots = true;
};

struct PairAnalysis {
  std::string active;
  std::string control;
  std::map<EntityKind, metrics::MetricSeries> raw;
  std::map<EntityKind, metrics::MetricSeries> difference;  // drop-corrected unless disabled
};

struct UserAnalysis {
  std::string user;
  puppet::Role role = puppet::Role::control;
  metrics::PopularitySeries popularity;
  std::map<EntityKind, metrics::Histogram> reappearance;  // creator, hashtag, sound
  std::optional<metrics::MetricSeries> similarity;
};

struct ScenarioAnalysis {
  puppet::Scenario scenario;
  std::string family;
  std::vector<int> excluded_runs;
  std::vector<store::RunRow> runs;
  std::vector<PairAnalysis> pairs;
  std::vector<UserAnalysis> users;
  std::optional<metrics::Heatmap> heatmap;
  std::string similarity_note;  // why the similarity series is missing

  /// Means over pairs of the difference series' slope and level. NaN when
  /// no pair has a fitted trend.
  double slope(EntityKind kind) const;
  double mean(EntityKind kind) const;
  std::size_t analyzed_runs() const;
};

/// Every metric for one stored scenario. `heatmap_baseline` is required for
/// locale scenarios and ignored otherwise.
ScenarioAnalysis analyze_scenario(const store::ScenarioRecord& record, const AnalysisOptions& options,
                                  const metrics::NoiseBaseline* heatmap_baseline = nullptr);

/// Averaged slopes of one family over scenarios with a batch count ("3",
/// "5") or over all of them ("all").
struct FamilyRow {
  std::string family;
  std::string batches;
  std::vector<int> scenarios;
  std::map<EntityKind, double> slope;
  std::map<EntityKind, double> mean;
};

std::vector<FamilyRow> family_slopes(const std::vector<ScenarioAnalysis>& scenarios);

/// The families compared for the influence ordering, strongest expected first.
const std::vector<std::string>& ordering_families();

struct OrderingVerdict {
  std::vector<std::pair<std::string, double>> ranked;  // post slope over all batch counts, descending
  bool matches_expected = false;  // ranked order equals ordering_families()
  bool above_control = false;     // every family beats the control of each batch count it has
  std::vector<std::string> missing;

  /// e.g. "follow > vvr-persona > like > control".
  std::string line() const;
};

OrderingVerdict influence_ordering(const std::vector<FamilyRow>& rows);

struct SuiteAnalysis {
  std::vector<ScenarioAnalysis> scenarios;
  std::map<std::size_t, metrics::NoiseBaseline> baselines;  // by batch count
  std::vector<FamilyRow> families;
  OrderingVerdict verdict;
};

/// Control presets (non-excluded) with the given batch count.
std::vector<int> control_presets(std::size_t batch_count);

/// Analyzes the listed scenarios, or every stored scenario when `ids` is
/// empty. Noise baselines come from every stored control scenario.
SuiteAnalysis analyze_store(const store::RunStore& store, const std::vector<int>& ids,
                            const AnalysisOptions& options);

/// Writes CSVs (and SVGs when enabled) under `dir`: suite tables at the top,
/// per-scenario files in s<id>/.
void write_reports(const SuiteAnalysis& suite, const std::filesystem::path& dir, bool plots);

/// Reads a slopes.csv written by write_reports.
std::vector<FamilyRow> read_family_slopes(const std::filesystem::path& path);

}  // namespace feedaudit::cli

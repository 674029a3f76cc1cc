#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "feedaudit/error.hpp"
#include "feedaudit/store.hpp"

namespace feedaudit::metrics {

using store::ObservationRow;

enum class EntityKind { post, hashtag, creator, sound };
inline constexpr std::array<EntityKind, 4> kAllKinds = {EntityKind::post, EntityKind::creator,
                                                        EntityKind::hashtag, EntityKind::sound};
const char* to_string(EntityKind kind);

/// 1 - |A n B| / |A u B|. Both sets empty is an error.
template <class T>
double jaccard_distance(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) throw DataError("jaccard distance of two empty sets");
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return 1.0 - static_cast<double>(common) / static_cast<double>(uni);
}

struct Point {
  double x = 0;  // run index
  double value = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct TrendLine {
  double slope = 0;
  double intercept = 0;
};

/// Ordinary least squares. Needs two distinct x values.
TrendLine fit_trend(const std::vector<Point>& points);

struct DropCorrection {
  std::size_t index = 0;  // the drop lies between points index and index + 1
  double offset = 0;      // added to every point after index
};

struct MetricSeries {
  int scenario_id = 0;
  std::string name;
  std::vector<Point> points;  // sorted by x, excluded runs omitted
  std::vector<int> excluded_runs;
  std::vector<DropCorrection> corrections;
  std::optional<double> drop_threshold;  // set once drops were searched for
  std::optional<TrendLine> trend;

  /// Refits the trend when at least two distinct runs remain.
  void refit();
  double mean() const;
};

/// Twice the sample standard deviation of the first differences.
double default_drop_threshold(const std::vector<Point>& points);

/// Finds first differences below -theta (below median - theta when the
/// median step is negative) and lifts everything after each drop
/// so the step across the drop matches the neighbouring steps. Without an
/// explicit theta, the series' recorded threshold is reused, else the default
/// is computed and recorded. Series shorter than 4 points are returned as is.
MetricSeries detect_and_correct_drops(MetricSeries series, std::optional<double> theta = {});

/// Hashtags dropped before difference, reappearance and embedding analyses.
struct HashtagFilter {
  std::set<std::string> removed;
  bool keeps(const std::string& tag) const { return removed.count(tag) == 0; }
};

/// Globally common tags always removed.
const std::vector<std::string>& default_denylist();

/// Removes tags present on more than `max_fraction` of the distinct posts in
/// `rows`, plus the denylist.
HashtagFilter clean_hashtags(const std::vector<ObservationRow>& rows, double max_fraction = 0.2,
                             const std::vector<std::string>& denylist = default_denylist());

/// Entities in one post under a kind (post id, creator, sound or kept hashtags).
std::vector<std::string> entities(const ObservationRow& row, EntityKind kind,
                                  const HashtagFilter& filter);

/// Per-run entity sets keyed by run index.
std::map<int, std::set<std::string>> run_sets(const std::vector<ObservationRow>& rows,
                                              const std::string& user, EntityKind kind,
                                              const HashtagFilter& filter);

/// Per-run Jaccard distance in percent between two users' feeds. Runs listed
/// in `excluded` or missing for either user are left out and recorded.
MetricSeries feed_difference_series(const std::vector<ObservationRow>& rows,
                                    const std::string& user_a, const std::string& user_b,
                                    EntityKind kind, const HashtagFilter& filter,
                                    const std::vector<int>& excluded = {});

struct NoiseBaseline {
  std::size_t batch_count = 3;
  std::map<EntityKind, double> difference;  // percent
  std::size_t runs = 0;

  double of(EntityKind kind) const;
};

struct ControlPairData {
  const std::vector<ObservationRow>* rows = nullptr;
  std::string user_a;
  std::string user_b;
  std::vector<int> excluded;
  std::size_t batch_count = 3;
};

/// Mean difference per kind over every run of every control pair with a
/// matching batch count.
NoiseBaseline noise_baseline(const std::vector<ControlPairData>& controls, std::size_t batch_count);

struct PopularitySeries {
  MetricSeries views;
  MetricSeries likes;
  MetricSeries shares;
  MetricSeries comments;
  MetricSeries combined;  // mean of the min-max normalized four
};

PopularitySeries popularity_series(const std::vector<ObservationRow>& rows, const std::string& user,
                                   const std::vector<int>& excluded = {});

struct Histogram {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  double variance = 0;  // population variance of the counts
  double entropy = 0;   // Shannon entropy (nats) of the count distribution

  /// Highest counts first, ties by name.
  std::vector<std::pair<std::string, std::size_t>> top(std::size_t k) const;
  std::size_t count(const std::string& key) const;
};

/// Counts per entity across all of the user's non-excluded runs.
Histogram reappearance_counts(const std::vector<ObservationRow>& rows, const std::string& user,
                              EntityKind kind, const HashtagFilter& filter,
                              const std::vector<int>& excluded = {});

struct Heatmap {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;  // NaN where two labels share no run
  double noise_overlap = 0;

  double at(const std::string& a, const std::string& b) const;
};

/// Mean per-run post overlap percent for every pair of session labels minus
/// the post overlap expected from noise (100 - baseline post difference).
Heatmap overlap_heatmap(const std::vector<ObservationRow>& rows, const std::vector<std::string>& labels,
                        const NoiseBaseline& noise, const std::vector<int>& excluded = {});

}  // namespace feedaudit::metrics

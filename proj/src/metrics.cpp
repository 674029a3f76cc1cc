#include "feedaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace feedaudit::metrics {

namespace {

bool contains(const std::vector<int>& runs, int run) {
  return std::find(runs.begin(), runs.end(), run) != runs.end();
}

}  // namespace

const char* to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::post: return "posts";
    case EntityKind::hashtag: return "hashtags";
    case EntityKind::creator: return "creators";
    case EntityKind::sound: return "sounds";
  }
  return "?";
}

TrendLine fit_trend(const std::vector<Point>& points) {
  if (points.size() < 2) throw DataError("trend needs at least two points");
  const double n = static_cast<double>(points.size());
  double mx = 0, my = 0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.value;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (const auto& p : points) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.value - my);
  }
  if (sxx == 0) throw DataError("trend needs two distinct run indices");
  TrendLine t;
  t.slope = sxy / sxx;
  t.intercept = my - t.slope * mx;
  return t;
}

void MetricSeries::refit() {
  trend.reset();
  if (points.size() < 2) return;
  bool distinct = std::any_of(points.begin(), points.end(),
                              [&](const Point& p) { return p.x != points.front().x; });
  if (distinct) trend = fit_trend(points);
}

double MetricSeries::mean() const {
  if (points.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (const auto& p : points) s += p.value;
  return s / static_cast<double>(points.size());
}

double default_drop_threshold(const std::vector<Point>& points) {
  if (points.size() < 3) return std::numeric_limits<double>::infinity();
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) d.push_back(points[i + 1].value - points[i].value);
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  double ss = 0;
  for (double x : d) ss += (x - mean) * (x - mean);
  // floor keeps rounding jitter on an exactly linear series from counting
  return std::max(2.0 * std::sqrt(ss / static_cast<double>(d.size() - 1)), 1e-9);
}

MetricSeries detect_and_correct_drops(MetricSeries series, std::optional<double> theta) {
  auto& pts = series.points;
  if (pts.size() < 4) {
    series.refit();
    return series;
  }
  const double th = theta ? *theta
                          : series.drop_threshold ? *series.drop_threshold
                                                  : default_drop_threshold(pts);
  series.drop_threshold = th;

  const std::size_t m = pts.size() - 1;
  std::vector<double> d(m);
  for (std::size_t k = 0; k < m; ++k) d[k] = pts[k + 1].value - pts[k].value;
  // a steady decline is not a drop: measure below the median step when it is negative
  auto sorted = d;
  std::sort(sorted.begin(), sorted.end());
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  const double typical = std::min(0.0, median);
  std::vector<char> drop(m);
  for (std::size_t k = 0; k < m; ++k) drop[k] = d[k] - typical < -th;
  double calm_total = 0;
  std::size_t calm_count = 0;
  for (std::size_t k = 0; k < m; ++k)
    if (!drop[k]) {
      calm_total += d[k];
      ++calm_count;
    }

  for (std::size_t k = 0; k < m; ++k) {
    if (!drop[k]) continue;
    double step = 0;
    std::size_t used = 0;
    if (k > 0 && !drop[k - 1]) {
      step += d[k - 1];
      ++used;
    }
    if (k + 1 < m && !drop[k + 1]) {
      step += d[k + 1];
      ++used;
    }
    if (used > 0) {
      step /= static_cast<double>(used);
    } else if (calm_count > 0) {
      step = calm_total / static_cast<double>(calm_count);
    }
    const double offset = step - d[k];
    for (std::size_t j = k + 1; j < pts.size(); ++j) pts[j].value += offset;
    series.corrections.push_back(DropCorrection{k, offset});
  }
  series.refit();
  return series;
}

const std::vector<std::string>& default_denylist() {
  static const std::vector<std::string> tags = {"fyp", "foryou", "foryoupage", "viral", "trending"};
  return tags;
}

HashtagFilter clean_hashtags(const std::vector<ObservationRow>& rows, double max_fraction,
                             const std::vector<std::string>& denylist) {
  HashtagFilter filter;
  filter.removed.insert(denylist.begin(), denylist.end());
  std::map<std::string, const ObservationRow*> posts;
  for (const auto& r : rows) posts.emplace(r.post, &r);
  if (posts.empty()) return filter;
  std::map<std::string, std::size_t> doc_freq;
  for (const auto& [id, row] : posts)
    for (const auto& tag : std::set<std::string>(row->hashtags.begin(), row->hashtags.end()))
      ++doc_freq[tag];
  const double n = static_cast<double>(posts.size());
  for (const auto& [tag, count] : doc_freq)
    if (static_cast<double>(count) / n > max_fraction) filter.removed.insert(tag);
  return filter;
}

std::vector<std::string> entities(const ObservationRow& row, EntityKind kind,
                                  const HashtagFilter& filter) {
  switch (kind) {
    case EntityKind::post: return {row.post};
    case EntityKind::creator: return {row.creator};
    case EntityKind::sound: return {row.sound};
    case EntityKind::hashtag: {
      std::vector<std::string> out;
      for (const auto& tag : row.hashtags)
        if (filter.keeps(tag)) out.push_back(tag);
      return out;
    }
  }
  return {};
}

std::map<int, std::set<std::string>> run_sets(const std::vector<ObservationRow>& rows,
                                              const std::string& user, EntityKind kind,
                                              const HashtagFilter& filter) {
  std::map<int, std::set<std::string>> out;
  for (const auto& r : rows) {
    if (r.user != user) continue;
    auto& set = out[r.run];
    for (auto& e : entities(r, kind, filter)) set.insert(std::move(e));
  }
  return out;
}

MetricSeries feed_difference_series(const std::vector<ObservationRow>& rows,
                                    const std::string& user_a, const std::string& user_b,
                                    EntityKind kind, const HashtagFilter& filter,
                                    const std::vector<int>& excluded) {
  MetricSeries series;
  series.name = std::string("difference-") + to_string(kind);
  auto a = run_sets(rows, user_a, kind, filter);
  auto b = run_sets(rows, user_b, kind, filter);
  std::set<int> runs;
  for (const auto& [run, s] : a) runs.insert(run);
  for (const auto& [run, s] : b) runs.insert(run);
  for (int run : runs) {
    auto ia = a.find(run);
    auto ib = b.find(run);
    bool missing = ia == a.end() || ib == b.end() || (ia->second.empty() && ib->second.empty());
    if (contains(excluded, run) || missing) {
      series.excluded_runs.push_back(run);
      continue;
    }
    series.points.push_back(Point{static_cast<double>(run), 100.0 * jaccard_distance(ia->second, ib->second)});
  }
  series.refit();
  return series;
}

double NoiseBaseline::of(EntityKind kind) const {
  auto it = difference.find(kind);
  if (it == difference.end()) throw DataError("noise baseline lacks " + std::string(to_string(kind)));
  return it->second;
}

NoiseBaseline noise_baseline(const std::vector<ControlPairData>& controls, std::size_t batch_count) {
  NoiseBaseline nb;
  nb.batch_count = batch_count;
  std::map<EntityKind, std::pair<double, std::size_t>> acc;
  for (const auto& c : controls) {
    if (c.batch_count != batch_count || !c.rows) continue;
    auto filter = clean_hashtags(*c.rows);
    for (auto kind : kAllKinds) {
      auto s = feed_difference_series(*c.rows, c.user_a, c.user_b, kind, filter, c.excluded);
      for (const auto& p : s.points) {
        acc[kind].first += p.value;
        ++acc[kind].second;
      }
      if (kind == EntityKind::post) nb.runs += s.points.size();
    }
  }
  if (nb.runs == 0)
    throw DataError("no control data with " + std::to_string(batch_count) + " batches per run");
  for (auto kind : kAllKinds)
    nb.difference[kind] = acc[kind].second ? acc[kind].first / static_cast<double>(acc[kind].second) : 0.0;
  return nb;
}

PopularitySeries popularity_series(const std::vector<ObservationRow>& rows, const std::string& user,
                                   const std::vector<int>& excluded) {
  std::map<int, std::array<double, 5>> per_run;  // views, likes, shares, comments, n
  for (const auto& r : rows) {
    if (r.user != user || contains(excluded, r.run)) continue;
    auto& acc = per_run[r.run];
    acc[0] += static_cast<double>(r.counters.views);
    acc[1] += static_cast<double>(r.counters.likes);
    acc[2] += static_cast<double>(r.counters.shares);
    acc[3] += static_cast<double>(r.counters.comments);
    acc[4] += 1;
  }
  PopularitySeries out;
  std::array<MetricSeries*, 4> parts = {&out.views, &out.likes, &out.shares, &out.comments};
  const char* names[] = {"views", "likes", "shares", "comments"};
  for (std::size_t i = 0; i < 4; ++i) parts[i]->name = names[i];
  out.combined.name = "combined";
  for (const auto& [run, acc] : per_run)
    for (std::size_t i = 0; i < 4; ++i)
      parts[i]->points.push_back(Point{static_cast<double>(run), acc[i] / acc[4]});
  for (int run : excluded) {
    for (auto* p : parts) p->excluded_runs.push_back(run);
    out.combined.excluded_runs.push_back(run);
  }

  std::vector<double> combined(per_run.size(), 0.0);
  for (auto* part : parts) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : part->points) {
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
    }
    for (std::size_t k = 0; k < part->points.size(); ++k)
      combined[k] += hi > lo ? (part->points[k].value - lo) / (hi - lo) / 4.0 : 0.0;
    part->refit();
  }
  std::size_t k = 0;
  for (const auto& [run, acc] : per_run) out.combined.points.push_back(Point{static_cast<double>(run), combined[k++]});
  out.combined.refit();
  return out;
}

std::vector<std::pair<std::string, std::size_t>> Histogram::top(std::size_t k) const {
  std::vector<std::pair<std::string, std::size_t>> all(counts.begin(), counts.end());
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (all.size() > k) all.resize(k);
  return all;
}

std::size_t Histogram::count(const std::string& key) const {
  auto it = counts.find(key);
  return it == counts.end() ? 0 : it->second;
}

Histogram reappearance_counts(const std::vector<ObservationRow>& rows, const std::string& user,
                              EntityKind kind, const HashtagFilter& filter,
                              const std::vector<int>& excluded) {
  if (kind == EntityKind::post) throw DataError("reappearance is defined for hashtags, creators and sounds");
  Histogram h;
  for (const auto& r : rows) {
    if (r.user != user || contains(excluded, r.run)) continue;
    for (auto& e : entities(r, kind, filter)) {
      ++h.counts[e];
      ++h.total;
    }
  }
  if (h.counts.empty()) return h;
  const double n = static_cast<double>(h.counts.size());
  const double mean = static_cast<double>(h.total) / n;
  for (const auto& [key, c] : h.counts) {
    const double x = static_cast<double>(c);
    h.variance += (x - mean) * (x - mean) / n;
    const double p = x / static_cast<double>(h.total);
    h.entropy -= p * std::log(p);
  }
  return h;
}

double Heatmap::at(const std::string& a, const std::string& b) const {
  auto ia = std::find(labels.begin(), labels.end(), a);
  auto ib = std::find(labels.begin(), labels.end(), b);
  if (ia == labels.end() || ib == labels.end()) throw DataError("heatmap has no label " + a + "/" + b);
  return values[static_cast<std::size_t>(ia - labels.begin())][static_cast<std::size_t>(ib - labels.begin())];
}

Heatmap overlap_heatmap(const std::vector<ObservationRow>& rows, const std::vector<std::string>& labels,
                        const NoiseBaseline& noise, const std::vector<int>& excluded) {
  if (labels.size() < 2) throw DataError("heatmap needs at least two users");
  std::map<std::string, std::map<int, std::set<std::string>>> sets;
  for (const auto& r : rows) {
    if (contains(excluded, r.run)) continue;
    sets[r.label()][r.run].insert(r.post);
  }
  Heatmap h;
  h.labels = labels;
  h.noise_overlap = 100.0 - noise.of(EntityKind::post);
  const std::size_t n = labels.size();
  h.values.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const auto& a = sets[labels[i]];
      const auto& b = sets[labels[j]];
      double total = 0;
      std::size_t count = 0;
      for (const auto& [run, sa] : a) {
        auto it = b.find(run);
        if (it == b.end()) continue;
        total += 100.0 * (1.0 - jaccard_distance(sa, it->second));
        ++count;
      }
      if (count == 0) continue;
      h.values[i][j] = h.values[j][i] = total / static_cast<double>(count) - h.noise_overlap;
    }
  }
  return h;
}

}  // namespace feedaudit::metrics

#include "feedaudit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "feedaudit/error.hpp"
#include "feedaudit/plots.hpp"
#include "feedaudit/presets.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::cli {

namespace fs = std::filesystem;
using metrics::kAllKinds;
using metrics::MetricSeries;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kReportVersion = 1;
constexpr EntityKind kReappearanceKinds[] = {EntityKind::creator, EntityKind::hashtag, EntityKind::sound};

const std::vector<std::string>& family_order() {
  static const std::vector<std::string> order = {"control", "locale", "like", "follow", "vvr-random",
                                                 "vvr-persona"};
  return order;
}

std::size_t family_rank(const std::string& family) {
  const auto& order = family_order();
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), family) - order.begin());
}

double mean_of(const std::vector<double>& values) {
  double total = 0;
  std::size_t n = 0;
  for (double v : values)
    if (std::isfinite(v)) {
      total += v;
      ++n;
    }
  return n ? total / static_cast<double>(n) : kNaN;
}

std::string cell(double v) { return std::isfinite(v) ? textio::format_fixed4(v) : std::string(); }

std::string run_cell(double x) { return std::to_string(static_cast<long long>(std::llround(x))); }

std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? " " : "") + std::to_string(ids[i]);
  return out;
}

std::string join_list(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? ", " : "") + std::to_string(ids[i]);
  return out;
}

class Csv {
 public:
  Csv(const fs::path& path, std::string_view kind, const std::vector<std::string>& columns)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write " + path.string());
    textio::write_magic(out_, std::string("report-") + std::string(kind), kReportVersion);
    row(columns);
  }
  void row(const std::vector<std::string>& fields) {
    out_ << textio::join(fields, ',') << '\n';
    if (!out_) throw DataError("write failed on " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::vector<store::ObservationRow> kept_rows(const store::ScenarioRecord& record,
                                             const std::vector<int>& excluded) {
  std::vector<store::ObservationRow> rows;
  for (const auto& r : record.observations)
    if (std::find(excluded.begin(), excluded.end(), r.run) == excluded.end()) rows.push_back(r);
  return rows;
}

}  // namespace

double ScenarioAnalysis::slope(EntityKind kind) const {
  std::vector<double> values;
  for (const auto& p : pairs) {
    const auto& s = p.difference.at(kind);
    if (s.trend) values.push_back(s.trend->slope);
  }
  return mean_of(values);
}

double ScenarioAnalysis::mean(EntityKind kind) const {
  std::vector<double> values;
  for (const auto& p : pairs) {
    const auto& s = p.difference.at(kind);
    if (!s.points.empty()) values.push_back(s.mean());
  }
  return mean_of(values);
}

std::size_t ScenarioAnalysis::analyzed_runs() const {
  std::set<int> runs_seen;
  for (const auto& r : runs) runs_seen.insert(r.run);
  return runs_seen.size() - excluded_runs.size();
}

ScenarioAnalysis analyze_scenario(const store::ScenarioRecord& record, const AnalysisOptions& options,
                                  const metrics::NoiseBaseline* heatmap_baseline) {
  ScenarioAnalysis a;
  a.scenario = record.scenario;
  a.family = puppet::family(record.scenario);
  a.excluded_runs = record.failed_runs();
  a.runs = record.runs;
  const int id = record.scenario.id;
  const auto& rows = record.observations;
  const auto filter = metrics::clean_hashtags(kept_rows(record, a.excluded_runs), options.hashtag_max_fraction);

  for (const auto& pair : record.scenario.pairs) {
    PairAnalysis pa;
    pa.active = pair.active_user;
    pa.control = pair.control_user;
    for (auto kind : kAllKinds) {
      auto raw = metrics::feed_difference_series(rows, pair.active_user, pair.control_user, kind, filter,
                                                 a.excluded_runs);
      raw.scenario_id = id;
      pa.difference[kind] = options.drop_correction ? metrics::detect_and_correct_drops(raw) : raw;
      pa.raw[kind] = std::move(raw);
    }
    a.pairs.push_back(std::move(pa));
  }

  std::optional<metrics::EmbeddingTable> embeddings;
  if (options.similarity) {
    auto corpus = metrics::hashtag_corpus(kept_rows(record, a.excluded_runs), filter);
    if (corpus.size() < metrics::kMinCorpusPosts) {
      a.similarity_note = "corpus of " + std::to_string(corpus.size()) + " posts is below " +
                          std::to_string(metrics::kMinCorpusPosts);
    } else {
      try {
        embeddings = metrics::train_skipgram(corpus, options.skipgram, record.scenario.seed);
      } catch (const DataError& e) {
        a.similarity_note = e.what();
      }
    }
  } else {
    a.similarity_note = "disabled";
  }

  for (const auto& pair : record.scenario.pairs) {
    for (const auto* user : {&pair.active_user, &pair.control_user}) {
      UserAnalysis ua;
      ua.user = *user;
      ua.role = user == &pair.active_user ? puppet::Role::active : puppet::Role::control;
      ua.popularity = metrics::popularity_series(rows, *user, a.excluded_runs);
      for (auto kind : kReappearanceKinds)
        ua.reappearance[kind] = metrics::reappearance_counts(rows, *user, kind, filter, a.excluded_runs);
      if (embeddings) {
        ua.similarity = metrics::feed_similarity_series(rows, *user, *embeddings, filter, a.excluded_runs);
        ua.similarity->scenario_id = id;
      }
      a.users.push_back(std::move(ua));
    }
  }

  if (a.family == "locale") {
    if (!heatmap_baseline)
      throw DataError("scenario " + std::to_string(id) + " needs a control baseline with " +
                      std::to_string(record.scenario.batches_per_run) + " batches per run");
    std::set<std::string> labels;
    for (const auto& r : rows)
      if (std::find(a.excluded_runs.begin(), a.excluded_runs.end(), r.run) == a.excluded_runs.end())
        labels.insert(r.label());
    a.heatmap = metrics::overlap_heatmap(rows, {labels.begin(), labels.end()}, *heatmap_baseline,
                                         a.excluded_runs);
  }
  return a;
}

std::vector<FamilyRow> family_slopes(const std::vector<ScenarioAnalysis>& scenarios) {
  std::map<std::pair<std::size_t, std::string>, std::map<std::size_t, std::vector<const ScenarioAnalysis*>>>
      groups;
  for (const auto& s : scenarios)
    groups[{family_rank(s.family), s.family}][s.scenario.batches_per_run].push_back(&s);

  std::vector<FamilyRow> rows;
  auto make = [](const std::string& family, const std::string& batches,
                 const std::vector<const ScenarioAnalysis*>& members) {
    FamilyRow row;
    row.family = family;
    row.batches = batches;
    for (const auto* s : members) row.scenarios.push_back(s->scenario.id);
    std::sort(row.scenarios.begin(), row.scenarios.end());
    for (auto kind : kAllKinds) {
      std::vector<double> slopes, means;
      for (const auto* s : members) {
        slopes.push_back(s->slope(kind));
        means.push_back(s->mean(kind));
      }
      row.slope[kind] = mean_of(slopes);
      row.mean[kind] = mean_of(means);
    }
    return row;
  };
  for (const auto& [key, by_batch] : groups) {
    std::vector<const ScenarioAnalysis*> all;
    for (const auto& [batches, members] : by_batch) {
      rows.push_back(make(key.second, std::to_string(batches), members));
      all.insert(all.end(), members.begin(), members.end());
    }
    rows.push_back(make(key.second, "all", all));
  }
  return rows;
}

const std::vector<std::string>& ordering_families() {
  static const std::vector<std::string> families = {"follow", "vvr-persona", "like", "control"};
  return families;
}

std::string OrderingVerdict::line() const {
  std::string out;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i) out += ranked[i - 1].second == ranked[i].second ? " = " : " > ";
    out += ranked[i].first;
  }
  return out;
}

OrderingVerdict influence_ordering(const std::vector<FamilyRow>& rows) {
  OrderingVerdict v;
  auto find = [&](const std::string& family, const std::string& batches) -> const FamilyRow* {
    for (const auto& r : rows)
      if (r.family == family && r.batches == batches) return &r;
    return nullptr;
  };
  for (const auto& family : ordering_families()) {
    const auto* row = find(family, "all");
    if (!row || !std::isfinite(row->slope.at(EntityKind::post))) {
      v.missing.push_back(family);
      continue;
    }
    v.ranked.emplace_back(family, row->slope.at(EntityKind::post));
  }
  std::stable_sort(v.ranked.begin(), v.ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  if (v.missing.empty()) {
    v.matches_expected = true;
    for (std::size_t i = 0; i < v.ranked.size(); ++i) {
      if (v.ranked[i].first != ordering_families()[i]) v.matches_expected = false;
      if (i > 0 && !(v.ranked[i - 1].second > v.ranked[i].second)) v.matches_expected = false;
    }
  }

  v.above_control = v.missing.empty();
  for (const auto& r : rows) {
    if (r.batches == "all" || r.family == "control") continue;
    if (std::find(ordering_families().begin(), ordering_families().end(), r.family) == ordering_families().end())
      continue;
    const auto* control = find("control", r.batches);
    if (!control) {
      v.above_control = false;
      v.missing.push_back("control (" + r.batches + " batches)");
      continue;
    }
    if (!(r.slope.at(EntityKind::post) > control->slope.at(EntityKind::post))) v.above_control = false;
  }
  return v;
}

std::vector<int> control_presets(std::size_t batch_count) {
  std::vector<int> ids;
  for (const auto& s : puppet::preset_scenarios())
    if (!s.excluded && puppet::family(s) == "control" && s.batches_per_run == batch_count) ids.push_back(s.id);
  return ids;
}

SuiteAnalysis analyze_store(const store::RunStore& store, const std::vector<int>& ids,
                            const AnalysisOptions& options) {
  const auto stored = store.scenario_ids();
  if (stored.empty()) throw DataError("store " + store.root().string() + " holds no scenarios");
  std::vector<int> wanted = ids.empty() ? stored : ids;
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  for (int id : wanted)
    if (!std::binary_search(stored.begin(), stored.end(), id))
      throw DataError("scenario " + std::to_string(id) + " is not in the store");

  SuiteAnalysis suite;

  // Noise baselines from every stored control scenario.
  {
    std::vector<store::ScenarioRecord> controls;
    for (int id : stored) {
      auto scenario = puppet::load_scenario((store.scenario_dir(id) / "scenario.yaml").string());
      if (puppet::family(scenario) != "control") continue;
      controls.push_back(store.load_scenario(id));
    }
    std::vector<metrics::ControlPairData> data;
    std::set<std::size_t> batch_counts;
    for (const auto& rec : controls) {
      for (const auto& p : rec.scenario.pairs)
        data.push_back({&rec.observations, p.active_user, p.control_user, rec.failed_runs(),
                        rec.scenario.batches_per_run});
      batch_counts.insert(rec.scenario.batches_per_run);
    }
    for (auto b : batch_counts) {
      try {
        suite.baselines.emplace(b, metrics::noise_baseline(data, b));
      } catch (const DataError&) {
        // every run of these controls failed; treated as absent
      }
    }
  }

  for (int id : wanted) {
    auto record = store.load_scenario(id);
    const metrics::NoiseBaseline* baseline = nullptr;
    if (puppet::family(record.scenario) == "locale") {
      auto it = suite.baselines.find(record.scenario.batches_per_run);
      if (it == suite.baselines.end()) {
        const auto b = record.scenario.batches_per_run;
        const auto presets = control_presets(b);
        std::string hint = presets.empty() ? "a control scenario with " + std::to_string(b) + " batches"
                                           : "control preset " + join_list(presets);
        throw DataError("heatmap for scenario " + std::to_string(id) + " needs a " + std::to_string(b) +
                        "-batch noise baseline; run " + hint + " first");
      }
      baseline = &it->second;
    }
    suite.scenarios.push_back(analyze_scenario(record, options, baseline));
  }
  suite.families = family_slopes(suite.scenarios);
  suite.verdict = influence_ordering(suite.families);
  return suite;
}

namespace {

std::vector<std::string> kind_columns(const std::string& prefix) {
  std::vector<std::string> cols;
  for (auto kind : kAllKinds) cols.push_back(prefix + metrics::to_string(kind));
  return cols;
}

void write_scenario(const ScenarioAnalysis& a, const fs::path& dir, bool plots) {
  fs::create_directories(dir);

  {
    Csv csv(dir / "difference.csv", "difference", {"pair", "active", "control", "kind", "run", "raw", "value"});
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      const auto& p = a.pairs[i];
      for (auto kind : kAllKinds) {
        const auto& raw = p.raw.at(kind).points;
        const auto& fixed = p.difference.at(kind).points;
        for (std::size_t k = 0; k < fixed.size(); ++k)
          csv.row({std::to_string(i), p.active, p.control, metrics::to_string(kind), run_cell(fixed[k].x),
                   cell(raw[k].value), cell(fixed[k].value)});
      }
    }
  }
  {
    Csv csv(dir / "corrections.csv", "corrections", {"pair", "kind", "threshold", "after_run", "offset"});
    for (std::size_t i = 0; i < a.pairs.size(); ++i)
      for (auto kind : kAllKinds) {
        const auto& s = a.pairs[i].difference.at(kind);
        for (const auto& c : s.corrections)
          csv.row({std::to_string(i), metrics::to_string(kind), cell(s.drop_threshold.value_or(kNaN)),
                   run_cell(s.points[c.index].x), cell(c.offset)});
      }
  }
  {
    Csv csv(dir / "trends.csv", "trends", {"subject", "series", "slope", "intercept", "mean", "points"});
    auto emit = [&](const std::string& subject, const MetricSeries& s) {
      csv.row({subject, s.name, cell(s.trend ? s.trend->slope : kNaN), cell(s.trend ? s.trend->intercept : kNaN),
               cell(s.points.empty() ? kNaN : s.mean()), std::to_string(s.points.size())});
    };
    for (std::size_t i = 0; i < a.pairs.size(); ++i)
      for (auto kind : kAllKinds) {
        auto s = a.pairs[i].difference.at(kind);
        s.name = std::string("difference-") + metrics::to_string(kind);
        emit("pair" + std::to_string(i), s);
      }
    for (const auto& u : a.users) {
      for (const auto* s : {&u.popularity.views, &u.popularity.likes, &u.popularity.shares,
                            &u.popularity.comments, &u.popularity.combined})
        emit(u.user, *s);
      if (u.similarity) emit(u.user, *u.similarity);
    }
  }
  {
    Csv csv(dir / "popularity.csv", "popularity", {"user", "metric", "run", "value"});
    for (const auto& u : a.users)
      for (const auto* s : {&u.popularity.views, &u.popularity.likes, &u.popularity.shares,
                            &u.popularity.comments, &u.popularity.combined})
        for (const auto& p : s->points) csv.row({u.user, s->name, run_cell(p.x), cell(p.value)});
  }
  {
    Csv csv(dir / "reappearance.csv", "reappearance", {"user", "role", "kind", "rank", "entity", "count"});
    Csv summary(dir / "dispersion.csv", "dispersion",
                {"user", "role", "kind", "distinct", "total", "variance", "entropy"});
    for (const auto& u : a.users)
      for (const auto& [kind, h] : u.reappearance) {
        std::size_t rank = 1;
        for (const auto& [entity, count] : h.top(20))
          csv.row({u.user, puppet::to_string(u.role), metrics::to_string(kind), std::to_string(rank++), entity,
                   std::to_string(count)});
        summary.row({u.user, puppet::to_string(u.role), metrics::to_string(kind), std::to_string(h.counts.size()),
                     std::to_string(h.total), cell(h.variance), cell(h.entropy)});
      }
  }
  {
    Csv csv(dir / "similarity.csv", "similarity", {"user", "role", "run", "value"});
    for (const auto& u : a.users)
      if (u.similarity)
        for (const auto& p : u.similarity->points)
          csv.row({u.user, puppet::to_string(u.role), run_cell(p.x), cell(p.value)});
  }
  {
    Csv csv(dir / "durations.csv", "durations",
            {"run", "user", "failed", "dwell_seconds", "likes", "follows", "watches"});
    for (const auto& r : a.runs)
      csv.row({std::to_string(r.run), r.user, r.failed ? "1" : "0", cell(r.dwell), std::to_string(r.likes),
               std::to_string(r.follows), std::to_string(r.watches)});
  }
  if (a.heatmap) {
    std::vector<std::string> header = {"label"};
    header.insert(header.end(), a.heatmap->labels.begin(), a.heatmap->labels.end());
    Csv csv(dir / "heatmap.csv", "heatmap", header);
    for (std::size_t i = 0; i < a.heatmap->labels.size(); ++i) {
      std::vector<std::string> row = {a.heatmap->labels[i]};
      for (double v : a.heatmap->values[i]) row.push_back(cell(v));
      csv.row(row);
    }
  }

  if (!plots) return;
  const std::string sid = "scenario " + std::to_string(a.scenario.id);
  {
    std::vector<metrics::PlotSeries> series;
    if (a.pairs.size() == 1) {
      for (auto kind : kAllKinds) series.push_back({metrics::to_string(kind), a.pairs[0].difference.at(kind).points});
    } else {
      for (const auto& p : a.pairs)
        series.push_back({p.active + " vs " + p.control, p.difference.at(EntityKind::post).points});
    }
    write_text(dir / "difference.svg", metrics::line_chart_svg(sid + ": difference of feeds", "percent", series));
  }
  {
    std::vector<metrics::PlotSeries> series;
    for (const auto& u : a.users) series.push_back({u.user, u.popularity.combined.points});
    write_text(dir / "popularity.svg", metrics::line_chart_svg(sid + ": combined post metrics", "normalized", series));
  }
  bool any_similarity = false;
  std::vector<metrics::PlotSeries> sim;
  for (const auto& u : a.users)
    if (u.similarity) {
      sim.push_back({u.user, u.similarity->points});
      any_similarity = true;
    }
  if (any_similarity)
    write_text(dir / "similarity.svg", metrics::line_chart_svg(sid + ": hashtag similarity", "percent", sim));
  if (a.heatmap) write_text(dir / "heatmap.svg", metrics::heatmap_svg(sid + ": overlap above noise", *a.heatmap));
}

}  // namespace

void write_reports(const SuiteAnalysis& suite, const fs::path& dir, bool plots) {
  fs::create_directories(dir);
  {
    Csv csv(dir / "noise_baseline.csv", "noise", {"batches", "kind", "difference", "runs"});
    for (const auto& [batches, nb] : suite.baselines)
      for (auto kind : kAllKinds)
        csv.row({std::to_string(batches), metrics::to_string(kind), cell(nb.of(kind)), std::to_string(nb.runs)});
  }
  {
    std::vector<std::string> cols = {"family", "batches", "scenarios", "ids"};
    for (const auto& c : kind_columns("slope_")) cols.push_back(c);
    for (const auto& c : kind_columns("mean_")) cols.push_back(c);
    Csv csv(dir / "slopes.csv", "slopes", cols);
    for (const auto& r : suite.families) {
      std::vector<std::string> row = {r.family, r.batches, std::to_string(r.scenarios.size()), join_ids(r.scenarios)};
      for (auto kind : kAllKinds) row.push_back(cell(r.slope.at(kind)));
      for (auto kind : kAllKinds) row.push_back(cell(r.mean.at(kind)));
      csv.row(row);
    }
  }
  {
    std::vector<std::string> cols = {"scenario", "family", "batches", "pairs", "runs", "excluded_runs"};
    for (const auto& c : kind_columns("slope_")) cols.push_back(c);
    for (const auto& c : kind_columns("mean_")) cols.push_back(c);
    cols.push_back("corrections");
    Csv csv(dir / "scenario_slopes.csv", "scenario-slopes", cols);
    for (const auto& a : suite.scenarios) {
      std::size_t corrections = 0;
      for (const auto& p : a.pairs)
        for (const auto& [kind, s] : p.difference) corrections += s.corrections.size();
      std::vector<std::string> row = {std::to_string(a.scenario.id), a.family,
                                      std::to_string(a.scenario.batches_per_run), std::to_string(a.pairs.size()),
                                      std::to_string(a.analyzed_runs()), join_ids(a.excluded_runs)};
      for (auto kind : kAllKinds) row.push_back(cell(a.slope(kind)));
      for (auto kind : kAllKinds) row.push_back(cell(a.mean(kind)));
      row.push_back(std::to_string(corrections));
      csv.row(row);
    }
  }
  for (const auto& a : suite.scenarios) write_scenario(a, dir / ("s" + std::to_string(a.scenario.id)), plots);
}

std::vector<FamilyRow> read_family_slopes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing " + path.string() + "; run analyze first");
  textio::expect_magic(in, "report-slopes", kReportVersion, path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header");
  const auto header = textio::split(line, ',');
  const std::size_t expected = 4 + 2 * kAllKinds.size();
  if (header.size() != expected) throw SchemaError(path.string() + ": unexpected columns");
  std::vector<FamilyRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = textio::split(line, ',');
    if (f.size() != expected) throw SchemaError(path.string() + ": malformed row '" + line + "'");
    FamilyRow r;
    r.family = std::string(f[0]);
    r.batches = std::string(f[1]);
    for (auto id : textio::split(f[3], ' '))
      if (!id.empty()) r.scenarios.push_back(static_cast<int>(textio::parse_int(id)));
    for (std::size_t k = 0; k < kAllKinds.size(); ++k) {
      auto value = [](std::string_view t) { return t.empty() ? kNaN : textio::parse_double(t); };
      r.slope[kAllKinds[k]] = value(f[4 + k]);
      r.mean[kAllKinds[k]] = value(f[4 + kAllKinds.size() + k]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace feedaudit::cli

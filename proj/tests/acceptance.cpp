// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "feedaudit/analysis.hpp"
#include "feedaudit/calibrate.hpp"
#include "feedaudit/cli.hpp"
#include "feedaudit/metrics.hpp"
#include "feedaudit/presets.hpp"
#include "feedaudit/puppet.hpp"
#include "feedaudit/random.hpp"
#include "feedaudit/skipgram.hpp"
#include "feedaudit/store.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace feedaudit;
using metrics::EntityKind;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = secs <= limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  char timing[96];
  std::snprintf(timing, sizeof timing, "%.1fs/%.0fs", secs, limit_s);
  std::cout << (pass ? "PASS" : "FAIL") << "  " << id << ". " << name << " [" << timing
            << (in_time ? "" : " over budget") << "] " << o.detail << std::endl;
}

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

int quiet_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (code != 0) std::cerr << "feedaudit " << args.front() << " exited " << code << ": " << err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

// Every control preset, including the one flagged as failed in the original audit.
std::vector<int> all_controls() {
  std::vector<int> ids;
  for (const auto& s : puppet::preset_scenarios())
    if (puppet::family(s) == "control") ids.push_back(s.id);
  return ids;
}

// ---- 1

Outcome metric_oracles() {
  auto rng = make_rng({1, 2, 3});
  double worst = 0;
  const int instances = 2000;
  for (int i = 0; i < instances; ++i) {
    std::set<int> a, b;
    const std::size_t na = uniform_index(rng, 12), nb = 1 + uniform_index(rng, 12);
    for (std::size_t k = 0; k < na; ++k) a.insert(static_cast<int>(uniform_index(rng, 20)));
    for (std::size_t k = 0; k < nb; ++k) b.insert(static_cast<int>(uniform_index(rng, 20)));
    // brute force over the value domain
    int inter = 0, uni = 0;
    for (int v = 0; v < 20; ++v) {
      const bool in_a = a.count(v) > 0, in_b = b.count(v) > 0;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
    worst = std::max(worst, std::fabs(metrics::jaccard_distance(a, b) - (1.0 - double(inter) / uni)));

    std::vector<metrics::Point> pts;
    const std::size_t n = 2 + uniform_index(rng, 18);
    for (std::size_t k = 0; k < n; ++k)
      pts.push_back({static_cast<double>(k), 100.0 * uniform01(rng)});
    // normal equations solved with Cramer's rule
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
      sx += p.x;
      sy += p.value;
      sxx += p.x * p.x;
      sxy += p.x * p.value;
    }
    const double det = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sxx * sy - sx * sxy) / det;
    const auto fit = metrics::fit_trend(pts);
    worst = std::max({worst, std::fabs(fit.slope - slope), std::fabs(fit.intercept - intercept)});
  }
  return {worst <= 1e-9, std::to_string(instances) + " instances each, max abs error " + sci(worst)};
}

// ---- 2

Outcome noise_calibration(const catalog::Catalog& cat) {
  const auto targets = cli::CalibrationTargets::observed();
  const auto controls = all_controls();
  cli::CalibrationOptions options;
  options.presets = controls;
  auto result = cli::calibrate(cat, recsys::PlatformParams{}, targets, options);
  const auto achieved = cli::control_divergence(cat, result.params, controls);
  double worst = 0;
  std::ostringstream d;
  for (const auto& [batches, target] : targets.values) {
    d << batches << "-batch";
    for (const auto& [kind, value] : target) {
      const double got = achieved.at(batches).at(kind);
      worst = std::max(worst, std::fabs(got - value));
      d << " " << metrics::to_string(kind) << "=" << fmt(got) << "(" << fmt(value) << ")";
    }
    d << "; ";
  }
  d << controls.size() << " controls, max |delta| " << fmt(worst) << " after " << result.iterations
    << " iteration(s)";
  return {worst <= 5.0 && controls.size() == 11, d.str()};
}

// ---- 3

Outcome zero_noise(const catalog::Catalog& cat) {
  recsys::PlatformParams params;
  params.weights.noise = 0.0;
  const auto controls = all_controls();
  double worst_value = 0, worst_slope = 0;
  std::size_t series = 0;
  for (int id : controls) {
    const auto s = puppet::preset(id);
    const auto sim = puppet::simulate(s, cat, params);
    const auto rows = store::to_rows(sim.result.observations, cat);
    const auto filter = metrics::clean_hashtags(rows);
    for (const auto& pair : s.pairs)
      for (auto kind : metrics::kAllKinds) {
        auto diff = metrics::feed_difference_series(rows, pair.active_user, pair.control_user, kind, filter);
        for (const auto& p : diff.points) worst_value = std::max(worst_value, std::fabs(p.value));
        if (!diff.trend) return {false, "no trend for preset " + std::to_string(id)};
        worst_slope = std::max(worst_slope, std::fabs(diff.trend->slope));
        ++series;
      }
  }
  return {worst_value == 0.0 && worst_slope == 0.0,
          std::to_string(series) + " series over " + std::to_string(controls.size()) +
              " controls, max |value| " + sci(worst_value) + ", max |slope| " + sci(worst_slope)};
}

// ---- 4

struct Suite {
  cli::SuiteAnalysis analysis;
  std::string error;
};

Outcome influence_ordering(const std::string& store, Suite& suite) {
  if (quiet_cli({"generate", "--store", store}) != 0) return {false, "generate failed"};
  std::vector<std::string> args = {"run", "--store", store};
  for (const auto& s : puppet::preset_scenarios())
    if (!s.excluded) {
      args.push_back("--preset");
      args.push_back(std::to_string(s.id));
    }
  if (quiet_cli(args) != 0) return {false, "run failed"};
  cli::AnalysisOptions opt;
  opt.plots = false;
  suite.analysis = cli::analyze_store(store::RunStore(store), {}, opt);
  const auto& v = suite.analysis.verdict;
  std::ostringstream d;
  for (std::size_t i = 0; i < v.ranked.size(); ++i)
    d << (i ? " > " : "") << v.ranked[i].first << " " << fmt(v.ranked[i].second);
  for (const auto& row : suite.analysis.families)
    if (row.batches != "all" && (row.family == "control" || row.family == "follow"))
      d << "; " << row.family << "@" << row.batches << " " << fmt(row.slope.at(EntityKind::post));
  d << "; above control: " << (v.above_control ? "yes" : "no");
  return {v.matches_expected && v.above_control && v.missing.empty(), d.str()};
}

// ---- 5

Outcome follow_reappearance(const Suite& suite, const store::RunStore& st) {
  int presets = 0, dispersed = 0, followed = 0, violations = 0;
  std::ostringstream d;
  for (const auto& sa : suite.analysis.scenarios) {
    if (sa.family != "follow") continue;
    ++presets;
    const auto rec = st.load_scenario(sa.scenario.id);
    std::map<std::string, const cli::UserAnalysis*> users;
    for (const auto& u : sa.users) users[u.user] = &u;
    double active_entropy = 0, control_entropy = 0;
    for (const auto& pair : sa.scenario.pairs) {
      const auto& act = users.at(pair.active_user)->reappearance.at(EntityKind::creator);
      const auto& ctl = users.at(pair.control_user)->reappearance.at(EntityKind::creator);
      std::set<std::string> creators;
      for (const auto& row : rec.observations)
        if (row.user == pair.active_user && row.action == puppet::ActionTaken::follow) creators.insert(row.creator);
      for (const auto& c : creators) {
        ++followed;
        if (act.count(c) < ctl.count(c)) ++violations;
      }
      active_entropy += act.entropy;
      control_entropy += ctl.entropy;
    }
    if (control_entropy > active_entropy) ++dispersed;
    const double n = static_cast<double>(sa.scenario.pairs.size());
    d << "s" << sa.scenario.id << " entropy " << fmt(active_entropy / n) << " vs " << fmt(control_entropy / n)
      << "; ";
  }
  d << followed << " followed creators, " << violations << " below control; control more dispersed in "
    << dispersed << "/" << presets;
  return {presets > 0 && followed > 0 && violations == 0 && dispersed >= 4, d.str()};
}

// ---- 6

Outcome hashtag_semantics(const Suite& suite) {
  int presets = 0, wins = 0;
  std::ostringstream d;
  for (const auto& sa : suite.analysis.scenarios) {
    const bool persona = sa.scenario.action.selection == puppet::Selection::persona;
    if (!persona || (sa.family != "like" && sa.family != "vvr-persona")) continue;
    ++presets;
    double active = 0, control = 0;
    int na = 0, nc = 0;
    for (const auto& u : sa.users) {
      if (!u.similarity || !u.similarity->trend) continue;
      if (u.role == puppet::Role::active) {
        active += u.similarity->trend->slope;
        ++na;
      } else {
        control += u.similarity->trend->slope;
        ++nc;
      }
    }
    const bool win = na > 0 && nc > 0 && active / na > control / nc;
    wins += win;
    d << "s" << sa.scenario.id << (win ? "+" : "-") << " ";
  }
  const double share = presets ? static_cast<double>(wins) / presets : 0.0;
  d << "active slope higher in " << wins << "/" << presets << " (" << fmt(100 * share, 0) << "%)";
  return {presets > 0 && share >= 0.7, d.str()};
}

// ---- 7

struct Label {
  std::string region;
  std::string language;
};

Label parse_label(const std::string& label) {
  const auto last = label.rfind('_');
  const auto mid = label.rfind('_', last - 1);
  return {label.substr(mid + 1, last - mid - 1), label.substr(last + 1)};
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome locale_effect(const Suite& suite) {
  std::ostringstream d;
  bool ok = true;
  int found = 0;
  for (const auto& sa : suite.analysis.scenarios) {
    if (sa.scenario.id != 12 && sa.scenario.id != 14) continue;
    if (!sa.heatmap) return {false, "no heatmap for preset " + std::to_string(sa.scenario.id)};
    ++found;
    const auto& h = *sa.heatmap;
    std::vector<double> same_region, cross_region, cross_lang_same_region, same_lang_cross_region;
    for (std::size_t i = 0; i < h.labels.size(); ++i)
      for (std::size_t j = i + 1; j < h.labels.size(); ++j) {
        const double v = h.values[i][j];
        if (std::isnan(v)) continue;
        const auto a = parse_label(h.labels[i]), b = parse_label(h.labels[j]);
        (a.region == b.region ? same_region : cross_region).push_back(v);
        if (a.region == b.region && a.language != b.language) cross_lang_same_region.push_back(v);
        if (a.region != b.region && a.language == b.language) same_lang_cross_region.push_back(v);
      }
    const double sr = mean_of(same_region), cr = mean_of(cross_region);
    const bool region_ok = sr > cr;
    ok = ok && region_ok;
    d << "s" << sa.scenario.id << " same-region " << fmt(sr) << " vs cross-region " << fmt(cr);
    if (sa.scenario.id == 14) {
      const double cl = mean_of(cross_lang_same_region), sl = mean_of(same_lang_cross_region);
      ok = ok && cl > sl;
      d << ", cross-language same-region " << fmt(cl) << " vs same-language cross-region " << fmt(sl);
    }
    d << "; ";
  }
  return {ok && found == 2, d.str()};
}

// ---- 8

Outcome drop_correction() {
  auto rng = make_rng({8, 8});
  double worst = 0;
  int shifted = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 8 + uniform_index(rng, 13);
    const double slope = -1.0 + 3.0 * uniform01(rng);
    const double intercept = 40 + 20 * uniform01(rng);
    const double shift = 10 + 20 * uniform01(rng);
    const std::size_t at = 1 + uniform_index(rng, n - 1);  // first shifted point
    metrics::MetricSeries s;
    for (std::size_t k = 0; k < n; ++k)
      s.points.push_back({double(k), intercept + slope * double(k) - (k >= at ? shift : 0.0)});
    s.refit();
    const auto fixed = metrics::detect_and_correct_drops(s);
    if (!fixed.trend) return {false, "no trend after correction"};
    worst = std::max(worst, std::fabs(fixed.trend->slope - slope));
    shifted += !fixed.corrections.empty();
  }

  int changed = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 4 + uniform_index(rng, 17);
    metrics::MetricSeries s;
    double v = 100 * uniform01(rng);
    const bool linear = i % 4 == 0;
    const double step = -2.0 * uniform01(rng);
    for (std::size_t k = 0; k < n; ++k) {
      s.points.push_back({double(k), v});
      v += linear ? step : 3.0 * uniform01(rng);
    }
    s.refit();
    const auto fixed = metrics::detect_and_correct_drops(s);
    changed += !(fixed.points == s.points);
  }
  return {worst <= 1e-6 && changed == 0, "100 shifted series, max slope error " + sci(worst) + ", " +
                                              std::to_string(shifted) + " corrected; " +
                                              std::to_string(changed) + "/100 drop-free series altered"};
}

// ---- 9

Outcome determinism(const fs::path& base) {
  const auto store = (base / "det").string();
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(store);
    if (quiet_cli({"generate", "--store", store}) != 0) return {false, "generate failed"};
    if (quiet_cli({"run", "--store", store, "--preset", "21"}) != 0) return {false, "run failed"};
    if (quiet_cli({"analyze", "--store", store}) != 0) return {false, "analyze failed"};
    if (quiet_cli({"report", "--store", store}) != 0) return {false, "report failed"};
    auto files = tree(store);
    if (pass == 0) {
      first = std::move(files);
      continue;
    }
    std::size_t bytes = 0;
    for (const auto& [name, content] : first) bytes += content.size();
    if (files.size() != first.size()) return {false, "file sets differ"};
    for (const auto& [name, content] : first) {
      auto it = files.find(name);
      if (it == files.end() || it->second != content) return {false, name + " differs"};
    }
    return {true, std::to_string(first.size()) + " files, " + std::to_string(bytes) + " bytes identical"};
  }
  return {false, "unreachable"};
}

// ---- 10

Outcome skipgram_cliques() {
  int ok = 0;
  double margin = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto table = metrics::train_skipgram(testing::clique_corpus(seed), metrics::SkipGramParams{}, seed);
    const auto score = testing::clique_score(table);
    ok += score.within > score.across;
    margin = std::min(margin, score.within - score.across);
  }
  return {ok == 10, std::to_string(ok) + "/10 seeds, smallest within-minus-cross cosine " + fmt(margin, 3)};
}

}  // namespace

int main() {
  testing::TempDir dir("acceptance");
  const auto& cat = testing::default_catalog();
  Suite suite;
  const auto suite_store = dir.str("suite");

  report(1, "metric oracles", 10, metric_oracles);
  report(2, "noise calibration", 300, [&] { return noise_calibration(cat); });
  report(3, "zero-noise floor", 30, [&] { return zero_noise(cat); });
  report(4, "influence ordering", 900, [&] { return influence_ordering(suite_store, suite); });
  const store::RunStore st(suite_store);
  report(5, "follow reappearance", 60, [&] { return follow_reappearance(suite, st); });
  report(6, "hashtag semantics", 60, [&] { return hashtag_semantics(suite); });
  report(7, "locale effect", 60, [&] { return locale_effect(suite); });
  report(8, "drop correction", 10, drop_correction);
  report(9, "determinism", 300, [&] { return determinism(dir.path()); });
  report(10, "skip-gram cliques", 60, skipgram_cliques);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}

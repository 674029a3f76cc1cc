#include "feedaudit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "feedaudit/analysis.hpp"
#include "feedaudit/calibrate.hpp"
#include "feedaudit/catalog_io.hpp"
#include "feedaudit/error.hpp"
#include "feedaudit/platform.hpp"
#include "feedaudit/presets.hpp"
#include "feedaudit/puppet.hpp"
#include "feedaudit/report.hpp"
#include "feedaudit/store.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  std::string store;
  std::string catalog;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Catalog seed (generate) or scenario seed override (run)");
  cmd->add_option("--store", c.store, std::string("Store root; defaults to $") + kStoreEnv);
  cmd->add_option("--catalog", c.catalog, "Catalog file instead of the store's catalog.tsv");
}

std::string store_root(const Common& c) {
  if (!c.store.empty()) return c.store;
  if (const char* env = std::getenv(kStoreEnv); env && *env) return env;
  return kDefaultStore;
}

recsys::PlatformParams store_params(const store::RunStore& s) {
  if (fs::exists(s.params_path())) return platform::load_params(s.params_path().string());
  return recsys::PlatformParams{};
}

catalog::Catalog resolve_catalog(const Common& c, store::RunStore& s) {
  if (c.catalog.empty()) {
    if (!s.exists()) throw DataError("no store at " + s.root().string() + "; run generate first");
    return s.load_catalog();
  }
  if (!fs::exists(c.catalog)) throw UsageError("catalog file not found: " + c.catalog);
  auto cat = catalog::load_catalog(c.catalog);
  if (!s.exists()) {
    s.init(cat);
  } else if (store::file_fingerprint(c.catalog) != s.read_manifest().catalog_fingerprint) {
    throw DataError(c.catalog + " differs from the catalog of store " + s.root().string());
  }
  return cat;
}

// ---- generate

struct GenerateArgs {
  Common common;
  std::string config;
  bool force = false;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (!a.config.empty() && !fs::exists(a.config)) throw UsageError("config file not found: " + a.config);
  const auto config = a.config.empty() ? catalog::CatalogConfig::defaults() : catalog::load_catalog_config(a.config);
  const std::uint64_t seed = a.common.seed.value_or(42);

  if (!a.common.catalog.empty()) {
    if (fs::exists(a.common.catalog) && !a.force)
      throw UsageError(a.common.catalog + " exists; pass --force to overwrite");
    auto cat = catalog::generate_catalog(config, seed);
    catalog::save_catalog(cat, a.common.catalog);
    out << "wrote " << a.common.catalog << " (" << cat.posts.size() << " posts, seed " << seed << ")\n";
    return kExitOk;
  }
  store::RunStore s(store_root(a.common));
  if ((s.exists() || s.has_catalog()) && !a.force)
    throw UsageError("store " + s.root().string() + " already has a catalog; pass --force to overwrite");
  if (a.force && fs::exists(s.root() / "scenarios")) fs::remove_all(s.root() / "scenarios");
  if (a.force && fs::exists(s.reports_dir())) fs::remove_all(s.reports_dir());
  auto cat = catalog::generate_catalog(config, seed);
  s.init(cat);
  out << "wrote " << s.catalog_path().string() << " (" << cat.posts.size() << " posts, seed " << seed << ")\n";
  return kExitOk;
}

// ---- run

struct RunArgs {
  Common common;
  std::vector<int> presets;
  std::vector<std::string> scenarios;
  bool allow_excluded = false;
  bool permute_order = false;
  std::optional<std::int64_t> tick_scale;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<puppet::Scenario> todo;
  for (int id : a.presets) todo.push_back(puppet::preset(id));
  for (const auto& path : a.scenarios) {
    if (!fs::exists(path)) throw UsageError("scenario file not found: " + path);
    todo.push_back(puppet::load_scenario(path));
  }
  if (todo.empty()) throw UsageError("run needs --preset or --scenario");
  for (auto& s : todo) {
    if (s.excluded && !a.allow_excluded)
      throw UsageError("scenario " + std::to_string(s.id) +
                       " is flagged as failed in the original study; pass --allow-excluded to run it");
    if (a.common.seed) s.seed = *a.common.seed;
    if (a.tick_scale) s.tick_scale = *a.tick_scale;
    if (a.permute_order) s.permute_order = true;
    s.validate();
  }

  store::RunStore st(store_root(a.common));
  const auto cat = resolve_catalog(a.common, st);
  const auto params = store_params(st);

  std::size_t total_runs = 0, failed_runs = 0;
  for (const auto& s : todo) {
    out << "scenario " << s.id << " (" << puppet::family(s) << ", " << s.batches_per_run << " batches, "
        << s.runs << " runs)\n";
    auto sim = puppet::simulate(s, cat, params, [&](const puppet::RunRecord& r) {
      out << "  run " << r.run_index + 1 << "/" << s.runs << (r.failed ? " FAILED: " + r.error : " ok") << "\n";
      out.flush();
    });
    st.save_scenario(s, sim, cat);
    const auto failed = sim.result.failed_runs();
    total_runs += static_cast<std::size_t>(s.runs);
    failed_runs += failed;
    out << "  " << s.runs - static_cast<int>(failed) << " completed, " << failed << " failed, "
        << sim.result.observations.size() << " observations\n";
  }
  if (failed_runs == 0) return kExitOk;
  err << failed_runs << " of " << total_runs << " runs failed\n";
  return failed_runs == total_runs ? kExitData : kExitPartial;
}

// ---- calibrate

struct CalibrateArgs {
  Common common;
  double tolerance = 5.0;
  int max_iterations = 8;
  double noise_floor = 0.005;
  std::vector<int> presets;
  std::string targets;
};

CalibrationTargets load_targets(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("targets file not found: " + path);
  CalibrationTargets t;
  try {
    auto root = YAML::LoadFile(path);
    for (const auto& entry : root) {
      const auto batches = entry.first.as<std::size_t>();
      for (auto kind : metrics::kAllKinds) {
        auto node = entry.second[metrics::to_string(kind)];
        if (!node) throw ConfigError(path + ": batch count " + std::to_string(batches) + " lacks " +
                                     metrics::to_string(kind));
        t.values[batches][kind] = node.as<double>();
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (t.values.empty()) throw ConfigError(path + ": no targets");
  return t;
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  store::RunStore st(store_root(a.common));
  const auto cat = resolve_catalog(a.common, st);
  const auto targets = a.targets.empty() ? CalibrationTargets::observed() : load_targets(a.targets);
  CalibrationOptions opt;
  opt.tolerance = a.tolerance;
  opt.max_iterations = a.max_iterations;
  opt.noise_floor = a.noise_floor;
  opt.presets = a.presets;
  auto result = calibrate(cat, store_params(st), targets, opt, [&](const std::string& line) {
    out << line << "\n";
    out.flush();
  });
  {
    std::ofstream f(st.params_path(), std::ios::binary);
    f << dump_calibration(result, targets, a.tolerance);
    if (!f) throw DataError("cannot write " + st.params_path().string());
  }
  for (const auto& [batches, values] : result.achieved) {
    out << batches << " batches:";
    for (const auto& [kind, v] : values) out << " " << metrics::to_string(kind) << "=" << textio::format_fixed4(v);
    out << "\n";
  }
  out << (result.converged ? "converged" : "NOT converged") << " after " << result.iterations
      << " iteration(s); max |delta| " << textio::format_fixed4(result.max_abs_delta) << "; wrote "
      << st.params_path().string() << "\n";
  return result.converged ? kExitOk : kExitPartial;
}

// ---- analyze / report

struct AnalyzeArgs {
  Common common;
  std::vector<int> ids;
  bool no_drop_correction = false;
  bool no_plots = false;
  bool no_similarity = false;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  store::RunStore st(store_root(a.common));
  AnalysisOptions opt;
  opt.drop_correction = !a.no_drop_correction;
  opt.plots = !a.no_plots;
  opt.similarity = !a.no_similarity;
  const auto suite = analyze_store(st, a.ids, opt);
  write_reports(suite, st.reports_dir(), opt.plots);
  out << "analyzed " << suite.scenarios.size() << " scenario(s) into " << st.reports_dir().string() << "\n";
  if (!suite.verdict.ranked.empty()) out << "influence ordering: " << suite.verdict.line() << "\n";
  return kExitOk;
}

int cmd_report(const Common& c, std::ostream& out) {
  store::RunStore st(store_root(c));
  const auto path = write_summary(st.reports_dir());
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_presets_export(const std::string& dir, bool force, std::ostream& out) {
  fs::create_directories(dir);
  int written = 0;
  for (const auto& s : puppet::preset_scenarios()) {
    char name[32];
    std::snprintf(name, sizeof name, "preset_%02d.yaml", s.id);
    const fs::path path = fs::path(dir) / name;
    if (fs::exists(path) && !force) throw UsageError(path.string() + " exists; pass --force to overwrite");
    std::ofstream f(path, std::ios::binary);
    f << puppet::dump_scenario(s);
    if (!f) throw DataError("cannot write " + path.string());
    ++written;
  }
  out << "wrote " << written << " presets to " << dir << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sock-puppet feed audit workbench with a simulated recommender"};
  app.name("feedaudit");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic catalog");
  add_common(g, gen.common);
  g->add_option("--config", gen.config, "Catalog config YAML (defaults when omitted)");
  g->add_flag("--force", gen.force, "Overwrite an existing catalog");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Execute scenarios and record observations");
  add_common(r, run.common);
  r->add_option("--preset", run.presets, "Preset id 1-42 (repeatable)")->check(CLI::Range(1, 42));
  r->add_option("--scenario", run.scenarios, "Scenario YAML file (repeatable)");
  r->add_flag("--allow-excluded", run.allow_excluded, "Run presets flagged as failed");
  r->add_flag("--permute-order", run.permute_order, "Shuffle session order within each run (seeded)");
  r->add_option("--tick-scale", run.tick_scale, "Platform ticks between runs")->check(CLI::PositiveNumber);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Tune noise so control scenarios match the target divergence");
  add_common(c, cal.common);
  c->add_option("--tolerance", cal.tolerance, "Allowed deviation in percentage points")->capture_default_str();
  c->add_option("--max-iterations", cal.max_iterations, "Iteration budget")->capture_default_str();
  c->add_option("--noise-floor", cal.noise_floor, "Lower bound on w_noise")->capture_default_str();
  c->add_option("--preset", cal.presets, "Control presets to run (default: all usable ones)");
  c->add_option("--targets", cal.targets, "YAML map of batch count to per-kind targets");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Compute metrics and write CSV/SVG reports");
  add_common(a, an.common);
  a->add_option("--scenario-id", an.ids, "Scenario to analyze (repeatable; default all stored)");
  a->add_flag("--no-drop-correction", an.no_drop_correction, "Leave difference series uncorrected");
  a->add_flag("--no-plots", an.no_plots, "Skip SVG output");
  a->add_flag("--no-similarity", an.no_similarity, "Skip hashtag embeddings");

  Common rep;
  auto* rp = app.add_subcommand("report", "Write summary.md from analysis outputs");
  add_common(rp, rep);

  std::string export_dir = "presets";
  bool export_force = false;
  auto* pr = app.add_subcommand("presets", "Preset utilities");
  pr->require_subcommand(1);
  auto* ex = pr->add_subcommand("export", "Write presets 1-42 as scenario YAML");
  ex->add_option("--out", export_dir, "Output directory")->capture_default_str();
  ex->add_flag("--force", export_force, "Overwrite existing files");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*g) return cmd_generate(gen, out);
    if (*r) return cmd_run(run, out, err);
    if (*c) return cmd_calibrate(cal, out);
    if (*a) return cmd_analyze(an, out);
    if (*rp) return cmd_report(rep, out);
    if (*ex) return cmd_presets_export(export_dir, export_force, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitData;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const PoolExhausted& e) {
    err << "pool exhausted: " << e.what() << "\n";
    return kExitData;
  } catch (const ProtocolError& e) {
    err << "protocol error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace feedaudit::cli

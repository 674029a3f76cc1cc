#include "feedaudit/store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "feedaudit/catalog_io.hpp"
#include "feedaudit/error.hpp"
#include "feedaudit/random.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::store {

namespace fs = std::filesystem;
using textio::format_exact;
using textio::parse_double;
using textio::parse_int;
using textio::parse_uint;

namespace {

constexpr const char* kObservationHeader =
    "run\tuser\trole\tregion\tlanguage\tbatch\tposition\tpost\tcreator\tsound\thashtags\t"
    "post_language\tpost_region\tduration\tviews\tlikes\tshares\tcomments\tbucket\taction\tvvr\tdwell";
constexpr const char* kRunHeader = "run\tstatus\tuser\tdwell\tlikes\tfollows\twatches\terror";

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

void expect_header(std::istream& in, const char* header, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw SchemaError(source + ": unexpected column header");
}

// Keeps free text on one TSV field.
std::string sanitize(std::string text) {
  std::replace_if(text.begin(), text.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; },
                  ' ');
  return text;
}

}  // namespace

std::string ObservationRow::label() const { return user + "_" + region + "_" + language; }

std::vector<int> ScenarioRecord::failed_runs() const {
  std::vector<int> out;
  for (const auto& r : runs)
    if (r.failed && (out.empty() || out.back() != r.run)) out.push_back(r.run);
  return out;
}

std::vector<ObservationRow> to_rows(const std::vector<puppet::Observation>& observations,
                                    const catalog::Catalog& catalog) {
  std::vector<ObservationRow> rows;
  rows.reserve(observations.size());
  for (const auto& o : observations) {
    ObservationRow r;
    r.run = o.run_index;
    r.user = o.user_id;
    r.role = o.role;
    r.region = o.region;
    r.language = o.language;
    r.batch = o.batch_index;
    r.position = o.position;
    r.post = catalog::to_string(o.post.id);
    r.creator = catalog::to_string(o.post.creator);
    r.sound = catalog::to_string(o.post.sound);
    for (auto h : o.post.hashtags) r.hashtags.push_back(catalog.hashtag_text(h));
    r.post_language = catalog.languages.at(o.post.language);
    r.post_region = catalog.regions.at(o.post.region);
    r.duration = o.post.duration;
    r.counters = o.post.counters;
    r.bucket = static_cast<int>(o.post.bucket);
    r.action = o.action;
    r.vvr = o.vvr;
    r.dwell = o.dwell;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RunRow> to_rows(const std::vector<puppet::RunRecord>& runs) {
  std::vector<RunRow> rows;
  for (const auto& run : runs)
    for (const auto& u : run.users)
      rows.push_back(RunRow{run.run_index, run.failed, u.user_id, u.dwell_seconds, u.likes,
                            u.follows, u.watches, sanitize(run.error)});
  return rows;
}

void write_observations(std::ostream& out, const std::vector<ObservationRow>& rows) {
  textio::write_magic(out, "observations", kStoreSchemaVersion);
  out << kObservationHeader << '\n';
  for (const auto& r : rows) {
    out << r.run << '\t' << r.user << '\t' << puppet::to_string(r.role) << '\t' << r.region << '\t'
        << r.language << '\t' << r.batch << '\t' << r.position << '\t' << r.post << '\t'
        << r.creator << '\t' << r.sound << '\t' << textio::join(r.hashtags, ',') << '\t'
        << r.post_language << '\t' << r.post_region << '\t' << format_exact(r.duration) << '\t'
        << r.counters.views << '\t' << r.counters.likes << '\t' << r.counters.shares << '\t'
        << r.counters.comments << '\t' << r.bucket << '\t' << puppet::to_string(r.action) << '\t'
        << format_exact(r.vvr) << '\t' << format_exact(r.dwell) << '\n';
  }
}

std::vector<ObservationRow> read_observations(std::istream& in, const std::string& source) {
  textio::expect_magic(in, "observations", kStoreSchemaVersion, source);
  expect_header(in, kObservationHeader, source);
  std::vector<ObservationRow> rows;
  std::string line;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = textio::split(line, '\t');
    if (f.size() != 22)
      throw SchemaError(source + ":" + std::to_string(line_no) + ": expected 22 fields");
    ObservationRow r;
    r.run = static_cast<int>(parse_int(f[0]));
    r.user = f[1];
    r.role = puppet::parse_role(f[2]);
    r.region = f[3];
    r.language = f[4];
    r.batch = parse_uint(f[5]);
    r.position = parse_uint(f[6]);
    r.post = f[7];
    r.creator = f[8];
    r.sound = f[9];
    if (!f[10].empty())
      for (auto tag : textio::split(f[10], ',')) r.hashtags.emplace_back(tag);
    r.post_language = f[11];
    r.post_region = f[12];
    r.duration = parse_double(f[13]);
    r.counters = {parse_int(f[14]), parse_int(f[15]), parse_int(f[16]), parse_int(f[17])};
    r.bucket = static_cast<int>(parse_int(f[18]));
    r.action = puppet::parse_action_taken(f[19]);
    r.vvr = parse_double(f[20]);
    r.dwell = parse_double(f[21]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_runs(std::ostream& out, const std::vector<RunRow>& rows) {
  textio::write_magic(out, "runs", kStoreSchemaVersion);
  out << kRunHeader << '\n';
  for (const auto& r : rows)
    out << r.run << '\t' << (r.failed ? "failed" : "ok") << '\t' << r.user << '\t'
        << format_exact(r.dwell) << '\t' << r.likes << '\t' << r.follows << '\t' << r.watches
        << '\t' << r.error << '\n';
}

std::vector<RunRow> read_runs(std::istream& in, const std::string& source) {
  textio::expect_magic(in, "runs", kStoreSchemaVersion, source);
  expect_header(in, kRunHeader, source);
  std::vector<RunRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = textio::split(line, '\t');
    if (f.size() != 8) throw SchemaError(source + ": expected 8 fields per run row");
    RunRow r;
    r.run = static_cast<int>(parse_int(f[0]));
    if (f[1] != "ok" && f[1] != "failed") throw SchemaError(source + ": bad run status");
    r.failed = f[1] == "failed";
    r.user = f[2];
    r.dwell = parse_double(f[3]);
    r.likes = parse_uint(f[4]);
    r.follows = parse_uint(f[5]);
    r.watches = parse_uint(f[6]);
    r.error = f[7];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_ledger(std::ostream& out, const std::vector<platform::LedgerEntry>& ledger) {
  textio::write_magic(out, "ledger", kStoreSchemaVersion);
  for (const auto& entry : ledger) {
    if (const auto* e = std::get_if<recsys::Event>(&entry)) {
      out << "event\t" << e->tick << '\t' << e->seq << '\t' << e->user_id << '\t'
          << recsys::to_string(e->kind) << '\t' << (e->post ? catalog::to_string(*e->post) : "-")
          << '\t' << (e->creator ? catalog::to_string(*e->creator) : "-") << '\t'
          << format_exact(e->vvr) << '\n';
    } else if (const auto* a = std::get_if<platform::AmbientRecord>(&entry)) {
      out << "ambient\t" << a->tick << '\t' << a->seq << '\t' << catalog::to_string(a->post) << '\t'
          << a->delta.views << '\t' << a->delta.likes << '\t' << a->delta.shares << '\t'
          << a->delta.comments << '\n';
    } else if (const auto* t = std::get_if<platform::TickRecord>(&entry)) {
      out << "tick\t" << t->tick << '\t' << t->seq << '\t' << t->spawned << '\t' << t->promoted
          << '\n';
    }
  }
}

std::string file_fingerprint(const fs::path& path) {
  std::ostringstream hex;
  hex << std::hex << hash_string(textio::read_file(path.string()));
  return hex.str();
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

fs::path RunStore::scenario_dir(int id) const {
  return root_ / "scenarios" / ("s" + std::to_string(id));
}

bool RunStore::exists() const { return fs::exists(root_ / "manifest.tsv"); }

void RunStore::init(const catalog::Catalog& catalog) {
  fs::create_directories(root_);
  catalog::save_catalog(catalog, catalog_path().string());
  Manifest m;
  m.catalog_seed = catalog.seed;
  m.catalog_fingerprint = file_fingerprint(catalog_path());
  write_manifest(m);
}

catalog::Catalog RunStore::load_catalog() const {
  if (!has_catalog()) throw DataError(root_.string() + " holds no catalog");
  return catalog::load_catalog(catalog_path().string());
}

Manifest RunStore::read_manifest() const {
  const auto path = root_ / "manifest.tsv";
  if (!fs::exists(path)) throw DataError("no store at " + root_.string());
  auto in = open_in(path);
  textio::expect_magic(in, "manifest", kStoreSchemaVersion, path.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = textio::split(line, '\t');
    if (f[0] == "catalog" && f.size() == 3) {
      m.catalog_seed = parse_uint(f[1]);
      m.catalog_fingerprint = f[2];
    } else if (f[0] == "scenario" && f.size() == 5) {
      ScenarioEntry e;
      e.id = static_cast<int>(parse_int(f[1]));
      e.seed = parse_uint(f[2]);
      e.runs = static_cast<int>(parse_int(f[3]));
      e.failed = static_cast<int>(parse_int(f[4]));
      m.scenarios[e.id] = e;
    } else {
      throw SchemaError(path.string() + ": unrecognized record '" + std::string(f[0]) + "'");
    }
  }
  return m;
}

void RunStore::write_manifest(const Manifest& m) const {
  fs::create_directories(root_);
  auto out = open_out(root_ / "manifest.tsv");
  textio::write_magic(out, "manifest", kStoreSchemaVersion);
  out << "catalog\t" << m.catalog_seed << '\t' << m.catalog_fingerprint << '\n';
  for (const auto& [id, e] : m.scenarios)
    out << "scenario\t" << id << '\t' << e.seed << '\t' << e.runs << '\t' << e.failed << '\n';
}

void RunStore::save_scenario(const puppet::Scenario& scenario, const puppet::Simulation& sim,
                             const catalog::Catalog& catalog) {
  Manifest m = read_manifest();
  if (file_fingerprint(catalog_path()) != m.catalog_fingerprint)
    throw DataError("catalog.tsv no longer matches the manifest fingerprint");
  const auto dir = scenario_dir(scenario.id);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "scenario.yaml");
    out << puppet::dump_scenario(scenario);
  }
  {
    auto out = open_out(dir / "observations.tsv");
    write_observations(out, to_rows(sim.result.observations, catalog));
  }
  {
    auto out = open_out(dir / "runs.tsv");
    write_runs(out, to_rows(sim.result.runs));
  }
  {
    auto out = open_out(dir / "ledger.tsv");
    write_ledger(out, sim.ledger);
  }
  m.scenarios[scenario.id] = ScenarioEntry{scenario.id, scenario.seed, scenario.runs,
                                           static_cast<int>(sim.result.failed_runs())};
  write_manifest(m);
}

ScenarioRecord RunStore::load_scenario(int id) const {
  const auto dir = scenario_dir(id);
  if (!fs::exists(dir / "observations.tsv"))
    throw DataError("scenario " + std::to_string(id) + " has no records in " + root_.string());
  ScenarioRecord rec;
  rec.scenario = puppet::load_scenario((dir / "scenario.yaml").string());
  {
    auto in = open_in(dir / "observations.tsv");
    rec.observations = read_observations(in, (dir / "observations.tsv").string());
  }
  {
    auto in = open_in(dir / "runs.tsv");
    rec.runs = read_runs(in, (dir / "runs.tsv").string());
  }
  return rec;
}

std::vector<int> RunStore::scenario_ids() const {
  std::vector<int> ids;
  for (const auto& [id, e] : read_manifest().scenarios) ids.push_back(id);
  return ids;
}

}  // namespace feedaudit::store

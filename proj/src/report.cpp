#include "feedaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "feedaudit/analysis.hpp"
#include "feedaudit/error.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::cli {

namespace fs = std::filesystem;

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("report column '" + name + "' missing");
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(const fs::path& path, std::string_view kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing " + path.string() + "; run analyze first");
  textio::expect_magic(in, std::string("report-") + std::string(kind), 1, path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header");
  for (auto f : textio::split(line, ',')) t.header.emplace_back(f);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    for (auto f : textio::split(line, ',')) row.emplace_back(f);
    if (row.size() != t.header.size()) throw SchemaError(path.string() + ": malformed row '" + line + "'");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string md_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + (c.empty() ? std::string("-") : c) + " |";
  return out + "\n";
}

std::string md_rule(std::size_t n) {
  std::string out = "|";
  for (std::size_t i = 0; i < n; ++i) out += "---|";
  return out + "\n";
}

const char* kKinds[] = {"posts", "creators", "hashtags", "sounds"};

}  // namespace

std::string render_summary(const fs::path& dir) {
  const auto noise = read_table(dir / "noise_baseline.csv", "noise");
  const auto slopes = read_table(dir / "slopes.csv", "slopes");
  const auto scenarios = read_table(dir / "scenario_slopes.csv", "scenario-slopes");
  const auto families = read_family_slopes(dir / "slopes.csv");
  const auto verdict = influence_ordering(families);

  std::ostringstream md;
  md << "# Feed audit summary\n\n";

  md << "## Influence ordering\n\n";
  if (verdict.ranked.empty()) {
    md << "No family with a fitted post-difference slope.\n\n";
  } else {
    md << "Averaged post-difference slope over all batch counts: **" << verdict.line() << "**\n\n";
    for (const auto& [family, slope] : verdict.ranked)
      md << "- " << family << ": " << textio::format_fixed4(slope) << " points per run\n";
    md << "\n";
  }
  md << "Expected order (";
  for (std::size_t i = 0; i < ordering_families().size(); ++i)
    md << (i ? " > " : "") << ordering_families()[i];
  md << "): " << (verdict.matches_expected ? "reproduced" : "not reproduced") << ".\n";
  md << "Each family above its matching-batch control: " << (verdict.above_control ? "yes" : "no") << ".\n";
  if (!verdict.missing.empty()) {
    md << "Missing:";
    for (const auto& m : verdict.missing) md << " " << m << ";";
    md << "\n";
  }
  md << "\n";

  md << "## Noise baselines\n\nMean difference of feeds between control users, percent.\n\n";
  {
    std::map<std::string, std::map<std::string, std::string>> by_batch;
    std::map<std::string, std::string> runs;
    const auto cb = noise.column("batches"), ck = noise.column("kind"), cd = noise.column("difference"),
               cr = noise.column("runs");
    for (const auto& r : noise.rows) {
      by_batch[r[cb]][r[ck]] = r[cd];
      runs[r[cb]] = r[cr];
    }
    md << md_row({"batches", "posts", "creators", "hashtags", "sounds", "runs"}) << md_rule(6);
    for (const auto& [b, kinds] : by_batch) {
      std::vector<std::string> row = {b};
      for (const char* k : kKinds) row.push_back(kinds.count(k) ? kinds.at(k) : "");
      row.push_back(runs[b]);
      md << md_row(row);
    }
    if (by_batch.empty()) md << "\nNo control scenarios in the store.\n";
    md << "\n";
  }

  md << "## Averaged trend-line slopes\n\nPercentage points per run, drop-corrected unless analysis ran "
        "without correction.\n\n";
  {
    std::vector<std::string> head = {"family", "batches", "n"};
    for (const char* k : kKinds) head.push_back(k);
    md << md_row(head) << md_rule(head.size());
    for (const auto& r : slopes.rows) {
      std::vector<std::string> row = {r[slopes.column("family")], r[slopes.column("batches")],
                                      r[slopes.column("scenarios")]};
      for (const char* k : kKinds) row.push_back(r[slopes.column(std::string("slope_") + k)]);
      md << md_row(row);
    }
    md << "\n";
  }

  md << "## Scenarios\n\n";
  std::vector<std::string> ids;
  {
    std::vector<std::string> head = {"scenario", "family", "batches", "runs", "excluded", "posts",
                                     "creators", "hashtags", "sounds", "corrections"};
    md << md_row(head) << md_rule(head.size());
    for (const auto& r : scenarios.rows) {
      std::vector<std::string> row = {r[scenarios.column("scenario")], r[scenarios.column("family")],
                                      r[scenarios.column("batches")], r[scenarios.column("runs")],
                                      r[scenarios.column("excluded_runs")]};
      for (const char* k : kKinds) row.push_back(r[scenarios.column(std::string("slope_") + k)]);
      row.push_back(r[scenarios.column("corrections")]);
      md << md_row(row);
      ids.push_back(r[scenarios.column("scenario")]);
    }
    md << "\nSlopes of the difference of feeds between active and control users.\n\n";
  }

  md << "## Figures\n\n";
  for (const auto& id : ids) {
    const fs::path sub = "s" + id;
    bool any = false;
    for (const char* name : {"difference", "popularity", "similarity", "heatmap"}) {
      const auto file = sub / (std::string(name) + ".svg");
      if (!fs::exists(dir / file)) continue;
      if (!any) md << "### Scenario " << id << "\n\n";
      any = true;
      md << "![" << name << "](" << file.generic_string() << ")\n";
    }
    if (any) md << "\n";
  }
  return md.str();
}

fs::path write_summary(const fs::path& dir) {
  const auto text = render_summary(dir);
  const auto path = dir / "summary.md";
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
  return path;
}

}  // namespace feedaudit::cli

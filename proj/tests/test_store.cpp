#include <doctest.h>

#include <fstream>
#include <sstream>

#include "feedaudit/error.hpp"
#include "feedaudit/presets.hpp"
#include "feedaudit/puppet.hpp"
#include "feedaudit/store.hpp"
#include "feedaudit/textio.hpp"
#include "support.hpp"

using namespace feedaudit;
using namespace feedaudit::store;

TEST_CASE("observation and run files round-trip") {
  const auto& c = testing::default_catalog();
  auto sim = puppet::simulate(puppet::preset(38), c, recsys::PlatformParams{});
  auto rows = to_rows(sim.result.observations, c);
  std::ostringstream first;
  write_observations(first, rows);
  std::istringstream in(first.str());
  auto back = read_observations(in, "memory");
  CHECK(back == rows);
  std::ostringstream second;
  write_observations(second, back);
  CHECK(second.str() == first.str());

  auto runs = to_rows(sim.result.runs);
  std::ostringstream r1;
  write_runs(r1, runs);
  std::istringstream rin(r1.str());
  CHECK(read_runs(rin, "memory") == runs);
}

TEST_CASE("schema version is checked on read") {
  std::istringstream in("#feedaudit-observations\t2\n");
  CHECK_THROWS_AS(read_observations(in, "memory"), SchemaError);
  std::istringstream wrong("#feedaudit-runs\t1\n");
  CHECK_THROWS_AS(read_observations(wrong, "memory"), SchemaError);
}

TEST_CASE("store saves and reloads a scenario") {
  testing::TempDir dir("store");
  RunStore s(dir.path() / "st");
  const auto& c = testing::default_catalog();
  s.init(c);
  auto scenario = puppet::preset(9);
  auto sim = puppet::simulate(scenario, c, recsys::PlatformParams{});
  s.save_scenario(scenario, sim, c);

  auto m = s.read_manifest();
  CHECK(m.catalog_seed == 42);
  REQUIRE(m.scenarios.count(9) == 1);
  CHECK(m.scenarios[9].runs == scenario.runs);
  CHECK(s.scenario_ids() == std::vector<int>{9});

  auto rec = s.load_scenario(9);
  CHECK(puppet::dump_scenario(rec.scenario) == puppet::dump_scenario(scenario));
  CHECK(rec.observations == to_rows(sim.result.observations, c));
  CHECK(rec.failed_runs().empty());
  CHECK_THROWS_AS(s.load_scenario(10), DataError);
}

TEST_CASE("a tampered catalog is detected") {
  testing::TempDir dir("tamper");
  RunStore s(dir.path());
  const auto& c = testing::default_catalog();
  s.init(c);
  {
    std::ofstream out(s.catalog_path(), std::ios::app);
    out << "\n";
  }
  auto scenario = puppet::preset(9);
  scenario.runs = 2;
  auto sim = puppet::simulate(scenario, c, recsys::PlatformParams{});
  CHECK_THROWS_AS(s.save_scenario(scenario, sim, c), DataError);
}

TEST_CASE("session labels") {
  ObservationRow r;
  r.user = "u97";
  r.region = "US";
  r.language = "en";
  CHECK(r.label() == "u97_US_en");
}

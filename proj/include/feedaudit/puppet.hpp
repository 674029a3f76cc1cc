#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "feedaudit/catalog.hpp"
#include "feedaudit/platform.hpp"
#include "feedaudit/random.hpp"
#include "feedaudit/recsys.hpp"
#include "feedaudit/scenario.hpp"

namespace feedaudit::puppet {

enum class Role { active, control };
enum class ActionTaken { none, like, follow, watch };

const char* to_string(Role role);
const char* to_string(ActionTaken action);
Role parse_role(std::string_view text);
ActionTaken parse_action_taken(std::string_view text);

struct Observation {
  int scenario_id = 0;
  int run_index = 0;
  std::string user_id;
  Role role = Role::control;
  std::string region;  // session locale for this run
  std::string language;
  std::size_t batch_index = 0;
  std::size_t position = 0;  // within the run, 0 .. 30 * batches - 1
  recsys::PostSnapshot post;
  ActionTaken action = ActionTaken::none;
  double vvr = 0.0;  // set for extended watches
  double dwell = 0.0;
};

struct UserRunStats {
  std::string user_id;
  double dwell_seconds = 0;
  std::size_t likes = 0;
  std::size_t follows = 0;
  std::size_t watches = 0;  // selected posts watched for the scenario fraction
};

struct RunRecord {
  int run_index = 0;
  bool failed = false;
  std::string error;
  std::vector<UserRunStats> users;
};

struct ScenarioResult {
  std::vector<Observation> observations;
  std::vector<RunRecord> runs;

  std::size_t failed_runs() const;
};

/// Positions (sorted) in `batch` the active user acts on.
std::vector<std::size_t> select_targets(const Action& action, const recsys::FeedBatch& batch,
                                        const catalog::Catalog& catalog, Rng& rng);

/// Seconds spent on a post.
double dwell(const recsys::PostSnapshot& post, Role role, bool selected, const Scenario& scenario);

/// One creator to follow on even runs (first batch only), drawn uniformly from
/// the batch's creators not yet followed.
std::optional<catalog::CreatorId> follow_cadence(const Scenario& scenario, int run_index,
                                                 std::size_t batch_index,
                                                 const recsys::FeedBatch& batch,
                                                 const std::set<catalog::CreatorId>& followed,
                                                 Rng& rng);

/// Runs every pair of the scenario in lockstep. A run that hits pool
/// exhaustion is marked failed and the next run proceeds. `catalog` resolves
/// hashtag text and must be the one the platform serves from.
ScenarioResult run_scenario(const Scenario& scenario, platform::PlatformAdapter& platform,
                            const catalog::Catalog& catalog,
                            const std::function<void(const RunRecord&)>& on_run = {});

struct Simulation {
  ScenarioResult result;
  std::vector<platform::LedgerEntry> ledger;
};

/// Platform seed used for a scenario on a given catalog.
std::uint64_t platform_seed(const Scenario& scenario, const catalog::Catalog& catalog);

/// Runs the scenario on a fresh simulated platform over a copy of `catalog`.
Simulation simulate(const Scenario& scenario, const catalog::Catalog& catalog,
                    const recsys::PlatformParams& params,
                    const std::function<void(const RunRecord&)>& on_run = {});

}  // namespace feedaudit::puppet

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feedaudit::puppet {

enum class ActionKind { control, like, follow, vvr };
enum class Selection { none, random, persona, creator, sound };

const char* to_string(ActionKind kind);
const char* to_string(Selection selection);
ActionKind parse_action_kind(std::string_view text);
Selection parse_selection(std::string_view text);

/// Watch fractions a vvr scenario may use.
inline constexpr double kVvrFractions[] = {0.25, 0.5, 0.75, 1.0, 2.0, 4.0};

struct Pair {
  std::string active_user;
  std::string control_user;
  std::string region;
  std::string language;
  /// When set, the control user logs in from this region on odd runs.
  std::optional<std::string> switch_region;
};

struct Action {
  ActionKind kind = ActionKind::control;
  Selection selection = Selection::none;
  std::size_t count = 0;              // random selection: posts per batch
  std::vector<std::size_t> batches;   // 0-based batches that act; empty means all
  double vvr = 1.0;                   // watch fraction for selected posts
  std::vector<std::string> persona;   // hashtags
  std::vector<std::uint32_t> creators;
  std::vector<std::uint32_t> sounds;

  bool acts_in(std::size_t batch) const;
};

struct Scenario {
  int id = 0;
  std::string description;
  std::vector<Pair> pairs;
  Action action;
  std::size_t batches_per_run = 3;
  int runs = 20;
  std::uint64_t seed = 0;
  std::int64_t tick_scale = 1;
  double dwell_baseline = 3.0;  // seconds on unselected posts
  bool collect_first_posts = false;
  bool reuse_cookies = false;
  bool excluded = false;  // failed in the original study; skipped unless forced
  bool permute_order = false;  // shuffle session order within each run

  /// Throws ConfigError on any broken invariant.
  void validate() const;

  std::vector<std::string> users() const;
};

/// Family label used when averaging slopes: control, locale, like,
/// follow, vvr-random or vvr-persona.
std::string family(const Scenario& scenario);

std::string dump_scenario(const Scenario& scenario);
Scenario parse_scenario(const std::string& text, const std::string& source = "scenario");
Scenario load_scenario(const std::string& path);

}  // namespace feedaudit::puppet

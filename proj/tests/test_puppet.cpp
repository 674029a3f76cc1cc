#include <doctest.h>

#include <algorithm>
#include <map>
#include <tuple>
#include <set>
#include <variant>

#include "feedaudit/error.hpp"
#include "feedaudit/presets.hpp"
#include "feedaudit/puppet.hpp"
#include "feedaudit/scenario.hpp"
#include "feedaudit/store.hpp"
#include "support.hpp"

using namespace feedaudit;
using namespace feedaudit::puppet;

namespace {

recsys::PostSnapshot snapshot(const catalog::Catalog& c, std::uint32_t id) {
  const auto& p = c.posts[id];
  recsys::PostSnapshot s;
  s.id = p.id;
  s.creator = p.creator;
  s.sound = p.sound;
  s.hashtags = p.hashtags;
  s.duration = p.duration;
  return s;
}

recsys::FeedBatch batch_of(const catalog::Catalog& c, std::uint32_t first, std::size_t n = 30) {
  recsys::FeedBatch b;
  for (std::uint32_t i = 0; i < n; ++i) b.posts.push_back(snapshot(c, first + i));
  return b;
}

}  // namespace

TEST_CASE("presets") {
  auto all = preset_scenarios();
  REQUIRE(all.size() == 42);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].id == static_cast<int>(i) + 1);
    CHECK_NOTHROW(all[i].validate());
  }
  CHECK_THROWS_AS(preset(0), ConfigError);
  CHECK_THROWS_AS(preset(43), ConfigError);

  auto p1 = preset(1);
  CHECK(family(p1) == "control");
  CHECK(p1.batches_per_run == 5);
  CHECK(p1.collect_first_posts);

  auto p15 = preset(15);
  REQUIRE(p15.pairs.size() == 4);
  std::set<std::string> languages;
  for (const auto& pair : p15.pairs) {
    CHECK(pair.region == "US");
    languages.insert(pair.language);
  }
  CHECK(languages == std::set<std::string>{"de", "en", "es", "fr"});

  auto p28 = preset(28);
  CHECK(family(p28) == "follow");
  CHECK(p28.batches_per_run == 3);
  CHECK(p28.runs == 20);

  auto p33 = preset(33);
  CHECK(p33.action.kind == ActionKind::vvr);
  CHECK(p33.action.selection == Selection::random);
  CHECK(p33.action.vvr == 0.25);
  CHECK(p33.action.count == 10);

  CHECK(preset(3).excluded);
}

TEST_CASE("scenario YAML round-trips") {
  for (const auto& s : preset_scenarios()) {
    auto text = dump_scenario(s);
    CHECK(dump_scenario(parse_scenario(text)) == text);
  }
}

TEST_CASE("broken scenarios are rejected") {
  auto s = preset(21);
  s.action.vvr = 5.0;
  s.action.kind = ActionKind::vvr;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = preset(21);
  s.pairs.clear();
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("persona selection") {
  const auto& c = testing::default_catalog();
  Action action;
  action.kind = ActionKind::like;
  action.selection = Selection::persona;
  action.persona = {"cat", "dog"};

  recsys::FeedBatch batch;
  auto post = snapshot(c, 0);
  post.hashtags = {*c.find_hashtag("cat"), *c.find_hashtag("funny")};
  batch.posts.push_back(post);
  auto other = snapshot(c, 1);
  other.hashtags = {*c.find_hashtag("gaming")};
  batch.posts.push_back(other);
  Rng rng(1);
  CHECK(select_targets(action, batch, c, rng) == std::vector<std::size_t>{0});

  action.persona = {"no-such-tag"};
  CHECK(select_targets(action, batch, c, rng).empty());
}

TEST_CASE("random selection picks distinct positions") {
  const auto& c = testing::default_catalog();
  Action action;
  action.kind = ActionKind::vvr;
  action.selection = Selection::random;
  action.count = 10;
  auto batch = batch_of(c, 100);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    auto picks = select_targets(action, batch, c, rng);
    CHECK(picks.size() == 10);
    CHECK(std::set<std::size_t>(picks.begin(), picks.end()).size() == 10);
    for (auto p : picks) CHECK(p < 30);
  }
}

TEST_CASE("dwell") {
  const auto& c = testing::default_catalog();
  auto s = preset(38);
  s.action.vvr = 4.0;
  auto post = snapshot(c, 0);
  post.duration = 10.0;
  CHECK(dwell(post, Role::active, true, s) == 40.0);
  CHECK(dwell(post, Role::active, false, s) == s.dwell_baseline);
  CHECK(dwell(post, Role::control, true, s) == s.dwell_baseline);
}

TEST_CASE("follow cadence") {
  const auto& c = testing::default_catalog();
  auto s = preset(28);
  auto batch = batch_of(c, 200);
  Rng rng(2);
  CHECK_FALSE(follow_cadence(s, 1, 0, batch, {}, rng).has_value());
  CHECK_FALSE(follow_cadence(s, 0, 1, batch, {}, rng).has_value());
  auto pick = follow_cadence(s, 0, 0, batch, {}, rng);
  REQUIRE(pick.has_value());
  bool in_batch = false;
  for (const auto& p : batch.posts) in_batch = in_batch || p.creator == *pick;
  CHECK(in_batch);
}

TEST_CASE("control scenario produces two users times ninety posts per run") {
  const auto& c = testing::default_catalog();
  auto s = preset(5);
  REQUIRE(family(s) == "control");
  REQUIRE(s.batches_per_run == 3);
  auto sim = simulate(s, c, recsys::PlatformParams{});
  CHECK(sim.result.failed_runs() == 0);
  CHECK(sim.result.observations.size() == static_cast<std::size_t>(s.runs) * 2 * 90);
}

TEST_CASE("random-like preset acts on six posts in batches two to four") {
  const auto& c = testing::default_catalog();
  auto s = preset(16);
  auto sim = simulate(s, c, recsys::PlatformParams{});
  std::map<std::pair<int, std::size_t>, int> likes;
  for (const auto& o : sim.result.observations)
    if (o.action == ActionTaken::like) ++likes[{o.run_index, o.batch_index}];
  for (int run = 0; run < s.runs; ++run)
    for (std::size_t b = 0; b < s.batches_per_run; ++b) {
      auto it = likes.find({run, b});
      const int n = it == likes.end() ? 0 : it->second;
      CHECK(n == (b >= 1 && b <= 3 ? 6 : 0));
    }
}

TEST_CASE("replay gives an identical observation stream") {
  const auto& c = testing::default_catalog();
  auto s = preset(21);
  auto a = simulate(s, c, recsys::PlatformParams{});
  auto b = simulate(s, c, recsys::PlatformParams{});
  CHECK(store::to_rows(a.result.observations, c) == store::to_rows(b.result.observations, c));
}

TEST_CASE("persona watching takes longer than the control twin") {
  const auto& c = testing::default_catalog();
  auto s = preset(38);
  auto sim = simulate(s, c, recsys::PlatformParams{});
  for (const auto& run : sim.result.runs) {
    double active = 0, control = 0;
    for (const auto& u : run.users) (u.user_id == s.pairs[0].active_user ? active : control) += u.dwell_seconds;
    CHECK(active > control);
  }
}

TEST_CASE("follow scenario follows on every other run") {
  const auto& c = testing::default_catalog();
  auto s = preset(28);
  auto sim = simulate(s, c, recsys::PlatformParams{});
  std::size_t follows = 0;
  for (const auto& entry : sim.ledger)
    if (const auto* e = std::get_if<recsys::Event>(&entry))
      if (e->kind == recsys::EventKind::follow) ++follows;
  CHECK(follows == static_cast<std::size_t>(s.runs) / 2);
}

TEST_CASE("session order does not change what each user is served") {
  const auto& c = testing::default_catalog();
  auto s = preset(21);
  s.runs = 6;
  auto fixed = store::to_rows(simulate(s, c, recsys::PlatformParams{}).result.observations, c);
  s.permute_order = true;
  CHECK(dump_scenario(parse_scenario(dump_scenario(s))) == dump_scenario(s));
  auto shuffled = store::to_rows(simulate(s, c, recsys::PlatformParams{}).result.observations, c);
  auto key = [](const store::ObservationRow& a, const store::ObservationRow& b) {
    return std::tie(a.run, a.user, a.position) < std::tie(b.run, b.user, b.position);
  };
  std::sort(fixed.begin(), fixed.end(), key);
  std::sort(shuffled.begin(), shuffled.end(), key);
  CHECK(fixed == shuffled);
}

#include "feedaudit/presets.hpp"

#include <numeric>

#include "feedaudit/error.hpp"

namespace feedaudit::puppet {

namespace {

constexpr std::size_t kLikesPerBatch = 6;
constexpr std::size_t kWatchesPerBatch = 10;

std::string uid(int n) { return "u" + std::to_string(n); }

Pair us_pair(int active, int control) { return Pair{uid(active), uid(control), "US", "en", {}}; }

std::vector<std::uint32_t> id_range(std::uint32_t first, std::uint32_t count) {
  std::vector<std::uint32_t> ids(count);
  std::iota(ids.begin(), ids.end(), first);
  return ids;
}

Scenario base(int id, std::string description, std::vector<Pair> pairs, std::size_t batches = 3) {
  Scenario s;
  s.id = id;
  s.description = std::move(description);
  s.pairs = std::move(pairs);
  s.batches_per_run = batches;
  s.seed = static_cast<std::uint64_t>(id);
  return s;
}

Scenario control(int id, int a, int b, std::size_t batches, bool first_posts, bool cookies) {
  std::string d = "control, " + std::to_string(batches) + " batches";
  if (first_posts) d += ", first posts collected";
  if (cookies) d += ", cookies reused";
  Scenario s = base(id, d, {us_pair(a, b)}, batches);
  s.collect_first_posts = first_posts;
  s.reuse_cookies = cookies;
  return s;
}

Scenario like(int id, int a, int b, Selection selection, std::string description,
              std::size_t batches = 3) {
  Scenario s = base(id, std::move(description), {us_pair(a, b)}, batches);
  s.action.kind = ActionKind::like;
  s.action.selection = selection;
  if (selection == Selection::random) s.action.count = kLikesPerBatch;
  if (selection == Selection::persona) s.action.persona = default_persona();
  return s;
}

Scenario follow(int id, int a, int b, bool cookies) {
  Scenario s = base(id, "follow one random creator every other run", {us_pair(a, b)});
  s.action.kind = ActionKind::follow;
  s.action.selection = Selection::random;
  s.action.count = 1;
  s.reuse_cookies = cookies;
  return s;
}

Scenario vvr(int id, int a, int b, Selection selection, double fraction) {
  std::string pct = std::to_string(static_cast<int>(fraction * 100 + 0.5)) + "%";
  std::string what = selection == Selection::random ? "watch 10 random posts for " + pct
                                                     : "watch persona posts for " + pct;
  Scenario s = base(id, what, {us_pair(a, b)});
  s.action.kind = ActionKind::vvr;
  s.action.selection = selection;
  s.action.vvr = fraction;
  if (selection == Selection::random) s.action.count = kWatchesPerBatch;
  if (selection == Selection::persona) s.action.persona = default_persona();
  return s;
}

}  // namespace

const std::vector<std::string>& default_persona() {
  static const std::vector<std::string> tags = {
      "football", "food",  "euro2020",     "movie",        "foodtiktok", "gaming",
      "film",     "tiktokfood", "gta5",    "gta",          "minecraft",  "marvel",
      "cat",      "dog",   "pet",          "dogsoftiktok", "catsoftiktok", "cute",
      "puppy",    "dogs",  "cats",         "animals",      "petsoftiktok", "kitten"};
  return tags;
}

std::vector<Scenario> preset_scenarios() {
  std::vector<Scenario> out;
  out.push_back(control(1, 72, 73, 5, true, false));
  out.push_back(control(2, 74, 75, 5, false, false));
  out.push_back(control(3, 93, 94, 5, true, false));
  out.back().excluded = true;
  out.push_back(control(4, 95, 96, 5, false, false));
  out.push_back(control(5, 125, 126, 3, true, false));
  out.push_back(control(6, 137, 138, 3, false, false));
  out.push_back(control(7, 139, 140, 3, true, false));
  out.push_back(control(8, 141, 142, 3, false, false));
  out.push_back(control(9, 143, 144, 3, false, false));
  out.push_back(control(10, 147, 148, 3, false, true));
  out.push_back(control(11, 149, 150, 3, false, true));

  out.push_back(base(12, "English, US and CA",
                     {us_pair(97, 98), Pair{uid(99), uid(100), "CA", "en", {}}}));
  out.push_back(base(13, "English, US and CA",
                     {us_pair(101, 102), Pair{uid(105), uid(106), "CA", "en", {}}}));
  out.back().excluded = true;
  out.push_back(base(14, "English/US and German/DE, one user per pair alternating location",
                     {Pair{uid(103), uid(104), "US", "en", "DE"},
                      Pair{uid(107), uid(108), "DE", "de", "US"}}));
  out.push_back(base(15, "US, languages de/en/es/fr",
                     {Pair{uid(109), uid(110), "US", "de", {}}, Pair{uid(129), uid(132), "US", "en", {}},
                      Pair{uid(130), uid(133), "US", "es", {}},
                      Pair{uid(131), uid(134), "US", "fr", {}}}));

  out.push_back(like(16, 45, 46, Selection::random, "like 6 random posts in batches 2-4", 5));
  out.back().action.batches = {1, 2, 3};
  out.push_back(like(17, 59, 60, Selection::random, "like 6 random posts in batches 2-4", 5));
  out.back().action.batches = {1, 2, 3};
  out.push_back(like(18, 61, 62, Selection::persona, "like persona posts", 5));
  out.push_back(like(19, 63, 64, Selection::persona, "like persona posts", 5));
  out.push_back(like(20, 70, 71, Selection::persona, "like persona posts", 5));
  out.push_back(like(21, 123, 124, Selection::persona, "like persona posts"));
  out.push_back(like(22, 159, 160, Selection::persona, "like persona posts, cookies reused"));
  out.back().reuse_cookies = true;
  out.push_back(like(23, 113, 114, Selection::creator, "like posts of specific creators"));
  out.back().action.creators = id_range(0, 25);
  out.push_back(like(24, 135, 136, Selection::creator, "like posts of specific creators"));
  out.back().action.creators = id_range(10, 25);
  out.push_back(like(25, 115, 116, Selection::sound, "like posts with specific sounds"));
  out.back().action.sounds = id_range(0, 20);
  out.push_back(like(26, 117, 118, Selection::sound, "like posts with specific sounds"));
  out.back().action.sounds = id_range(10, 20);

  out.push_back(follow(27, 47, 48, false));
  out.push_back(follow(28, 49, 50, false));
  out.push_back(follow(29, 51, 52, false));
  out.back().excluded = true;
  out.push_back(follow(30, 53, 54, false));
  out.push_back(follow(31, 153, 154, true));
  out.push_back(follow(32, 155, 156, true));

  out.push_back(vvr(33, 77, 78, Selection::random, 0.25));
  out.push_back(vvr(34, 79, 80, Selection::random, 0.5));
  out.push_back(vvr(35, 81, 82, Selection::random, 0.75));
  out.push_back(vvr(36, 83, 84, Selection::random, 1.0));
  out.push_back(vvr(37, 85, 86, Selection::random, 2.0));
  out.push_back(vvr(38, 87, 88, Selection::persona, 0.5));
  out.push_back(vvr(39, 145, 146, Selection::persona, 0.75));
  out.push_back(vvr(40, 91, 92, Selection::persona, 1.0));
  out.push_back(vvr(41, 151, 152, Selection::persona, 4.0));
  out.back().reuse_cookies = true;
  out.push_back(vvr(42, 157, 158, Selection::persona, 4.0));
  out.back().reuse_cookies = true;
  out.back().dwell_baseline = 0.5;

  for (const auto& s : out) s.validate();
  return out;
}

Scenario preset(int id) {
  if (id < 1 || id > 42) throw ConfigError("unknown preset " + std::to_string(id));
  return preset_scenarios()[static_cast<std::size_t>(id - 1)];
}

}  // namespace feedaudit::puppet

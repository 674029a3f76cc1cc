#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feedaudit/error.hpp"
#include "feedaudit/metrics.hpp"
#include "feedaudit/presets.hpp"
#include "feedaudit/puppet.hpp"
#include "feedaudit/store.hpp"
#include "support.hpp"

using namespace feedaudit;
using namespace feedaudit::metrics;

namespace {

ObservationRow row(int run, const std::string& user, const std::string& post,
                   std::vector<std::string> hashtags = {}, const std::string& creator = "c1",
                   const std::string& sound = "s1") {
  ObservationRow r;
  r.run = run;
  r.user = user;
  r.region = "US";
  r.language = "en";
  r.post = post;
  r.creator = creator;
  r.sound = sound;
  r.hashtags = std::move(hashtags);
  return r;
}

MetricSeries series_of(const std::vector<double>& values) {
  MetricSeries s;
  for (std::size_t i = 0; i < values.size(); ++i) s.points.push_back({static_cast<double>(i), values[i]});
  s.refit();
  return s;
}

}  // namespace

TEST_CASE("jaccard distance") {
  std::set<std::string> a{"a", "b", "c"}, b{"b", "c", "d"};
  CHECK(jaccard_distance(a, a) == 0.0);
  CHECK(jaccard_distance(a, std::set<std::string>{"x", "y"}) == 1.0);
  CHECK(jaccard_distance(a, b) == 0.5);
  CHECK_THROWS_AS(jaccard_distance(std::set<int>{}, std::set<int>{}), DataError);
}

TEST_CASE("trend fitting") {
  auto t = fit_trend({{1, 1}, {2, 2}, {3, 3}});
  CHECK(t.slope == doctest::Approx(1.0));
  CHECK(t.intercept == doctest::Approx(0.0));
  auto flat = fit_trend({{0, 4}, {1, 4}, {2, 4}, {3, 4}});
  CHECK(flat.slope == 0.0);
  CHECK_THROWS(fit_trend({{1, 1}, {1, 2}}));
}

TEST_CASE("drop correction") {
  SUBCASE("monotone series is unchanged") {
    auto s = series_of({1, 2, 2, 5, 9, 9, 12});
    auto fixed = detect_and_correct_drops(s);
    CHECK(fixed.points == s.points);
    CHECK(fixed.corrections.empty());
  }
  SUBCASE("a steady decline is not a drop") {
    auto s = series_of({70, 68.5, 67, 65.5, 64, 62.5});
    auto fixed = detect_and_correct_drops(s);
    CHECK(fixed.points == s.points);
    CHECK(fixed.corrections.empty());
  }
  SUBCASE("a drop is lifted to the mean of its neighbouring steps") {
    auto fixed = detect_and_correct_drops(series_of({60, 62, 61, 40, 42, 44}), 10.0);
    REQUIRE(fixed.corrections.size() == 1);
    CHECK(fixed.corrections[0].index == 2);
    // steps around the drop: -1 and +2, so the repaired step is 0.5
    CHECK(fixed.corrections[0].offset == doctest::Approx(21.5));
    const std::vector<double> expected = {60, 62, 61, 61.5, 63.5, 65.5};
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(fixed.points[i].value == doctest::Approx(expected[i]));
    CHECK(fixed.drop_threshold == 10.0);
  }
  SUBCASE("recorded threshold makes correction idempotent") {
    auto once = detect_and_correct_drops(series_of({50, 51, 52, 30, 31, 32, 33, 34}));
    auto twice = detect_and_correct_drops(once);
    CHECK(twice.points == once.points);
    CHECK(twice.corrections.size() == once.corrections.size());
  }
  SUBCASE("a linear series with a level shift recovers its slope") {
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(50 + 0.7 * i - (i >= 9 ? 20.0 : 0.0));
    auto fixed = detect_and_correct_drops(series_of(v));
    REQUIRE(fixed.trend.has_value());
    CHECK(std::fabs(fixed.trend->slope - 0.7) < 1e-6);
  }
}

TEST_CASE("hashtag cleaning") {
  std::vector<ObservationRow> rows;
  for (int i = 0; i < 10; ++i) {
    std::vector<std::string> tags = {"tag" + std::to_string(i)};
    if (i < 4) tags.push_back("fyp");
    if (i < 5) tags.push_back("cooking");
    rows.push_back(row(0, "u", "p" + std::to_string(i), tags));
  }
  auto filter = clean_hashtags(rows);
  CHECK_FALSE(filter.keeps("fyp"));
  CHECK_FALSE(filter.keeps("cooking"));  // on half of the posts
  CHECK(filter.keeps("tag3"));
  auto lenient = clean_hashtags(rows, 1.0);
  CHECK(lenient.keeps("cooking"));
  CHECK_FALSE(lenient.keeps("fyp"));  // denylisted
  CHECK(lenient.removed.size() == default_denylist().size());
}

TEST_CASE("difference series") {
  std::vector<ObservationRow> rows;
  for (int run = 0; run < 4; ++run)
    for (int i = 0; i < 5; ++i) {
      rows.push_back(row(run, "a", "p" + std::to_string(run * 10 + i)));
      rows.push_back(row(run, "b", "p" + std::to_string(run * 10 + i + run)));
    }
  HashtagFilter none;
  auto s = feed_difference_series(rows, "a", "b", EntityKind::post, none);
  REQUIRE(s.points.size() == 4);
  // run r shares 5 - r of 5 posts
  for (int run = 0; run < 4; ++run) {
    const double common = 5.0 - run, uni = 5.0 + run;
    CHECK(s.points[run].value == doctest::Approx(100.0 * (1.0 - common / uni)));
  }
  auto same = feed_difference_series(rows, "a", "a", EntityKind::post, none);
  for (const auto& p : same.points) CHECK(p.value == 0.0);
  REQUIRE(same.trend.has_value());
  CHECK(same.trend->slope == 0.0);

  auto skipped = feed_difference_series(rows, "a", "b", EntityKind::post, none, {1});
  CHECK(skipped.points.size() == 3);
  CHECK(skipped.excluded_runs == std::vector<int>{1});
}

TEST_CASE("noise baseline") {
  std::vector<ObservationRow> rows;
  for (int i = 0; i < 4; ++i) {
    rows.push_back(row(0, "a", "p" + std::to_string(i)));
    rows.push_back(row(0, "b", "p" + std::to_string(i + 2)));
  }
  ControlPairData one{&rows, "a", "b", {}, 3};
  auto nb = noise_baseline({one}, 3);
  CHECK(nb.runs == 1);
  CHECK(nb.of(EntityKind::post) == doctest::Approx(100.0 * (1.0 - 2.0 / 6.0)));
  auto twice = noise_baseline({one, one}, 3);
  CHECK(twice.of(EntityKind::post) == doctest::Approx(nb.of(EntityKind::post)));
  CHECK_THROWS_AS(noise_baseline({one}, 5), DataError);
}

TEST_CASE("popularity series") {
  std::vector<ObservationRow> rows;
  for (int run = 0; run < 3; ++run)
    for (int i = 0; i < 4; ++i) rows.push_back(row(run, "u", "p" + std::to_string(i)));
  auto zero = popularity_series(rows, "u");
  for (const auto* s : {&zero.views, &zero.likes, &zero.shares, &zero.comments, &zero.combined}) {
    CHECK(s->points.size() == 3);
    for (const auto& p : s->points) CHECK(p.value == 0.0);
  }
  std::vector<ObservationRow> single(rows.begin(), rows.begin() + 4);
  auto one = popularity_series(single, "u");
  CHECK(one.views.points.size() == 1);
  CHECK_FALSE(one.views.trend.has_value());
}

TEST_CASE("reappearance") {
  std::vector<ObservationRow> rows;
  for (int i = 0; i < 6; ++i)
    rows.push_back(row(i % 2, "u", "p" + std::to_string(i), {"x", "y", "fyp"}, "c" + std::to_string(i)));
  HashtagFilter filter;
  filter.removed = {"fyp"};
  auto creators = reappearance_counts(rows, "u", EntityKind::creator, filter);
  CHECK(creators.counts.size() == 6);
  for (const auto& [k, n] : creators.counts) CHECK(n == 1);
  CHECK(creators.variance == 0.0);
  auto tags = reappearance_counts(rows, "u", EntityKind::hashtag, filter);
  CHECK(tags.total == 12);  // two kept hashtags on each of six posts
  CHECK(tags.count("x") == 6);
  CHECK(tags.count("fyp") == 0);
  auto top = tags.top(1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].first == "x");
}

TEST_CASE("heatmap") {
  std::vector<ObservationRow> rows;
  for (int run = 0; run < 2; ++run)
    for (int i = 0; i < 4; ++i) {
      auto a = row(run, "a", "p" + std::to_string(i));
      auto b = row(run, "b", "p" + std::to_string(i + 2));
      b.region = "DE";
      rows.push_back(a);
      rows.push_back(b);
    }
  NoiseBaseline nb;
  nb.difference[EntityKind::post] = 60.0;
  auto h = overlap_heatmap(rows, {"a_US_en", "b_DE_en"}, nb);
  CHECK(h.noise_overlap == 40.0);
  CHECK(h.at("a_US_en", "a_US_en") == doctest::Approx(60.0));
  CHECK(h.at("a_US_en", "b_DE_en") == doctest::Approx(100.0 * 2.0 / 6.0 - 40.0));
}

TEST_CASE("popular posts come first for a fresh pair") {
  const auto& c = testing::default_catalog();
  auto s = puppet::preset(7);
  auto sim = puppet::simulate(s, c, recsys::PlatformParams{});
  auto rows = store::to_rows(sim.result.observations, c);
  auto pop = popularity_series(rows, s.pairs[0].control_user);
  std::vector<double> views;
  for (const auto& p : pop.views.points) views.push_back(p.value);
  auto sorted = views;
  std::sort(sorted.begin(), sorted.end());
  CHECK(views.front() > sorted[sorted.size() / 2]);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "feedaudit/error.hpp"
#include "feedaudit/platform.hpp"
#include "feedaudit/recsys.hpp"
#include "support.hpp"

using namespace feedaudit;
using namespace feedaudit::recsys;

namespace {

UserState fresh_user(const Catalog& c, const std::string& id = "u1") {
  return UserState(id, *c.region_index("US"), *c.language_index("en"), c.topic_count());
}

SignalWeights zero_weights() {
  SignalWeights w;
  w.follow = w.vvr = w.like = w.locale = w.language = w.pop = w.noise = 0;
  return w;
}

std::size_t topic_named(const Catalog& c, const std::string& name) {
  for (std::size_t t = 0; t < c.topic_count(); ++t)
    if (c.topics[t].name == name) return t;
  FAIL("no topic " << name);
  return 0;
}

}  // namespace

TEST_CASE("cosine") {
  CHECK(cosine({1, 0}, {0, 1}) == 0.0);
  CHECK(cosine({0, 0}, {0, 1}) == 0.0);
  CHECK(cosine({1, 1}, {2, 2}) == doctest::Approx(1.0));
}

TEST_CASE("score of a cold-start user has no interest or follow terms") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  SignalWeights w;
  w.noise = 0;
  Rng rng(1);
  const double log_max = std::log1p(static_cast<double>(c.max_views()));
  for (std::uint32_t i = 0; i < 200; ++i) {
    const auto& p = c.posts[i];
    double expected = (p.region == user.region ? w.locale : 0.0) + (p.language == user.language ? w.language : 0.0) +
                      w.pop * std::log1p(static_cast<double>(p.counters.views)) / log_max;
    CHECK(score(user, p, c.topic_vectors[i], w, log_max, rng) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("popularity alone scores the most viewed post at exactly one") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  auto w = zero_weights();
  w.pop = 1;
  const double log_max = std::log1p(static_cast<double>(c.max_views()));
  auto top = std::max_element(c.posts.begin(), c.posts.end(),
                              [](const auto& a, const auto& b) { return a.counters.views < b.counters.views; });
  Rng rng(3);
  CHECK(score(user, *top, c.topic_vectors[top->id.value], w, log_max, rng) == 1.0);
}

TEST_CASE("following adds exactly the follow weight") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  SignalWeights w;
  w.noise = 0;
  const auto& p = c.posts[17];
  Rng rng(5);
  const double log_max = std::log1p(static_cast<double>(c.max_views()));
  const double before = score(user, p, c.topic_vectors[17], w, log_max, rng);
  user.follows.insert(p.creator);
  const double after = score(user, p, c.topic_vectors[17], w, log_max, rng);
  CHECK(after - before == doctest::Approx(w.follow).epsilon(1e-12));
}

TEST_CASE("seeded scores replay") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  SignalWeights w;
  Rng a(9), b(9);
  for (std::uint32_t i = 0; i < 50; ++i)
    CHECK(score(user, c.posts[i], c.topic_vectors[i], w, 10.0, a) == score(user, c.posts[i], c.topic_vectors[i], w, 10.0, b));
}

TEST_CASE("interest slice only holds posts sharing the liked topic") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  const auto pets = topic_named(c, "pets");
  user.like_vec.assign(c.topic_count(), 0.0);
  user.like_vec[pets] = 1.0;
  user.like_evidence = 1;
  PlatformParams params;
  params.interest_fraction = 1.0;
  params.explore_fraction = 0.0;
  params.interest_ramp = 0.0;
  auto ids = recall(c, user, params, 77);
  CHECK(ids.size() == params.pool_size);
  for (auto id : ids) CHECK(c.topic_vectors[id.value][pets] > 0);
}

TEST_CASE("without exploration, new small-bucket candidates are locale-affine") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  PlatformParams params;
  params.explore_fraction = 0.0;
  params.locale_mix = 0.0;
  for (auto id : recall(c, user, params, 3)) {
    const auto& p = c.post(id);
    if (p.bucket == catalog::Bucket::small) CHECK((p.region == user.region || p.language == user.language));
  }
}

TEST_CASE("recall is sorted, unique and excludes seen posts") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  for (std::uint32_t i = 0; i < 5000; ++i) user.mark_seen(catalog::PostId{i});
  PlatformParams params;
  auto ids = recall(c, user, params, 11);
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
  for (auto id : ids) CHECK_FALSE(user.has_seen(id));
}

TEST_CASE("interest confidence ramps with evidence") {
  PlatformParams params;
  UserState u;
  CHECK(interest_confidence(u, params) == 0.0);
  u.like_evidence = 10;
  const double ten = interest_confidence(u, params);
  u.like_evidence = 20;
  CHECK(interest_confidence(u, params) > ten);
  CHECK(interest_confidence(u, params) < 1.0);
  params.interest_ramp = 0;
  CHECK(interest_confidence(u, params) == 1.0);
}

TEST_CASE("diversity") {
  const auto& c = testing::default_catalog();

  SUBCASE("inactive constraint keeps score order") {
    std::vector<catalog::PostId> ids;
    std::set<std::uint32_t> creators, topics;
    for (std::uint32_t i = 0; i < c.posts.size() && ids.size() < 12; ++i) {
      if (creators.count(c.posts[i].creator.value) || topics.count(c.dominant_topics[i])) continue;
      creators.insert(c.posts[i].creator.value);
      topics.insert(c.dominant_topics[i]);
      ids.push_back(c.posts[i].id);
    }
    REQUIRE(ids.size() == 12);
    std::vector<double> scores;
    for (std::size_t i = 0; i < ids.size(); ++i) scores.push_back(static_cast<double>((i * 7) % 12));
    auto d = rank_and_diversify(c, ids, scores, 2, 12);
    CHECK(d.satisfied);
    for (std::size_t k = 1; k < d.order.size(); ++k) CHECK(scores[d.order[k - 1]] > scores[d.order[k]]);
  }

  SUBCASE("single creator falls back and reports it") {
    const auto& own = *std::max_element(c.posts_by_creator.begin(), c.posts_by_creator.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    REQUIRE(own.size() >= 30);
    std::vector<catalog::PostId> ids(own.begin(), own.begin() + 30);
    std::vector<double> scores(30);
    for (std::size_t i = 0; i < 30; ++i) scores[i] = static_cast<double>(i);
    auto d = rank_and_diversify(c, ids, scores, 2);
    CHECK(d.order.size() == 30);
    CHECK_FALSE(d.satisfied);
  }

  SUBCASE("random instances never put three same-creator posts in a row") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      // Few creators so that the constraint binds.
      std::vector<catalog::PostId> ids;
      for (int k = 0; k < 4; ++k) {
        const auto& own = c.posts_by_creator[uniform_index(rng, 20)];
        for (std::size_t j = 0; j < std::min<std::size_t>(own.size(), 12); ++j) ids.push_back(own[j]);
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      std::vector<double> scores;
      for (std::size_t i = 0; i < ids.size(); ++i) scores.push_back(uniform01(rng));
      std::set<std::uint32_t> distinct;
      for (auto id : ids) distinct.insert(c.post(id).creator.value);
      if (distinct.size() < 3 || ids.size() < 30) continue;
      auto d = rank_and_diversify(c, ids, scores, 2);
      if (!d.satisfied) continue;  // topic runs may force the fallback
      for (std::size_t k = 2; k < d.order.size(); ++k) {
        auto a = c.post(ids[d.order[k - 2]]).creator, b = c.post(ids[d.order[k - 1]]).creator,
             e = c.post(ids[d.order[k]]).creator;
        CHECK_FALSE((a == b && b == e));
      }
    }
  }
}

TEST_CASE("likes converge towards the liked topic") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  catalog::TopicVector one_hot(c.topic_count(), 0.0);
  one_hot[2] = 1.0;
  Event like;
  like.kind = EventKind::like;
  update_user_state(user, like, one_hot, 20.0, 0.2, 0.15);
  CHECK(user.like_vec == one_hot);

  catalog::TopicVector mixed(c.topic_count(), 1.0 / static_cast<double>(c.topic_count()));
  auto u2 = fresh_user(c);
  update_user_state(u2, like, mixed, 20.0, 0.2, 0.15);
  double gap = 1.0 - u2.like_vec[2];
  for (int i = 0; i < 50; ++i) {
    update_user_state(u2, like, one_hot, 20.0, 0.2, 0.15);
    const double next = 1.0 - u2.like_vec[2];
    CHECK(next <= gap);
    gap = next;
  }
  CHECK(gap < 1e-4);
}

TEST_CASE("follow is idempotent") {
  const auto& c = testing::default_catalog();
  auto user = fresh_user(c);
  Event follow;
  follow.kind = EventKind::follow;
  follow.creator = catalog::CreatorId{12};
  update_user_state(user, follow, {}, 0, 0.2, 0.15);
  update_user_state(user, follow, {}, 0, 0.2, 0.15);
  CHECK(user.follows.size() == 1);
}

TEST_CASE("bucket promotion") {
  auto c = catalog::generate_catalog(catalog::CatalogConfig::defaults(), 3);
  for (auto& p : c.posts) {
    p.counters = {};
    p.bucket = catalog::Bucket::small;
  }
  c.posts[0].counters.views = 500;
  c.posts[1].counters.views = 300000;
  promote_buckets(c, 300, 200000);
  promote_buckets(c, 300, 200000);
  promote_buckets(c, 300, 200000);
  CHECK(c.posts[0].bucket == catalog::Bucket::medium);
  CHECK(c.posts[1].bucket == catalog::Bucket::master);
  CHECK(c.posts[2].bucket == catalog::Bucket::small);

  // Thresholded engagement, recomputed here, decides the level.
  Rng rng(8);
  for (auto& p : c.posts) {
    p.bucket = catalog::Bucket::small;
    p.counters.views = static_cast<std::int64_t>(uniform_index(rng, 400000));
    p.counters.likes = static_cast<std::int64_t>(uniform_index(rng, 1000));
  }
  promote_buckets(c, 300, 200000);
  promote_buckets(c, 300, 200000);
  for (const auto& p : c.posts) {
    const auto e = p.counters.views + 2 * p.counters.likes;
    const int level = e >= 200000 ? 2 : e >= 300 ? 1 : 0;
    CHECK(static_cast<int>(p.bucket) == level);
  }
}

TEST_CASE("platform batches") {
  const auto& c = testing::default_catalog();
  PlatformParams params;
  platform::SimulatedPlatform p(c, params, 99);
  p.open_session(0, {"u1", "US", "en"});
  auto b1 = p.next_batch("u1", 0, 0);
  auto b2 = p.next_batch("u1", 0, 1);
  CHECK(b1.posts.size() == kBatchSize);
  CHECK(b2.posts.size() == kBatchSize);
  std::set<std::uint32_t> first;
  for (const auto& s : b1.posts) first.insert(s.id.value);
  for (const auto& s : b2.posts) CHECK(first.count(s.id.value) == 0);
}

TEST_CASE("noise-free twins see identical batches") {
  const auto& c = testing::default_catalog();
  PlatformParams params;
  params.weights.noise = 0;
  platform::SimulatedPlatform p(c, params, 5);
  for (int run = 0; run < 3; ++run) {
    p.open_session(run, {"a", "US", "en"});
    p.open_session(run, {"b", "US", "en"});
    for (std::size_t batch = 0; batch < 3; ++batch) {
      auto x = p.next_batch("a", run, batch);
      auto y = p.next_batch("b", run, batch);
      REQUIRE(x.posts.size() == y.posts.size());
      for (std::size_t i = 0; i < x.posts.size(); ++i) CHECK(x.posts[i].id == y.posts[i].id);
    }
    p.close_session("a");
    p.close_session("b");
  }
}

TEST_CASE("platform events") {
  const auto& c = testing::default_catalog();
  PlatformParams params;
  platform::SimulatedPlatform p(c, params, 17);
  p.open_session(0, {"u1", "US", "en"});
  auto batch = p.next_batch("u1", 0, 0);
  const auto post = batch.posts[0].id;
  const auto likes = p.catalog().post(post).counters.likes;

  Event like;
  like.user_id = "u1";
  like.kind = EventKind::like;
  like.post = post;
  p.send_event(like);
  p.flush();
  CHECK(p.catalog().post(post).counters.likes == likes + 1);

  Event follow;
  follow.user_id = "u1";
  follow.kind = EventKind::follow;
  follow.creator = batch.posts[1].creator;
  p.send_event(follow);
  CHECK(p.user("u1").follows_creator(batch.posts[1].creator));

  Event watch;
  watch.user_id = "u1";
  watch.kind = EventKind::watch;
  watch.post = batch.posts[2].id;
  watch.vvr = 4.0;
  CHECK_NOTHROW(p.send_event(watch));
  watch.vvr = 4.01;
  CHECK_THROWS_AS(p.send_event(watch), ProtocolError);

  Event unserved = like;
  for (std::uint32_t i = 0;; ++i)
    if (!p.user("u1").has_seen(catalog::PostId{i})) {
      unserved.post = catalog::PostId{i};
      break;
    }
  CHECK_THROWS_AS(p.send_event(unserved), ProtocolError);
}

TEST_CASE("params round-trip through YAML") {
  PlatformParams params;
  params.weights.noise = 0.0123;
  params.locale_mix = 0.17;
  params.level_shifts.push_back({40, 0.5});
  const auto text = platform::dump_params(params);
  auto back = platform::parse_params(text);
  CHECK(platform::dump_params(back) == text);
  CHECK(back.weights.noise == 0.0123);
  CHECK(back.noise_scale_at(39) == 1.0);
  CHECK(back.noise_scale_at(40) == 0.5);
}

TEST_CASE("invalid params are rejected") {
  PlatformParams params;
  params.weights.like = -1;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = {};
  params.explore_fraction = 0.9;
  CHECK_THROWS_AS(params.validate(), ConfigError);
}

#include <doctest.h>

#include <cmath>

#include "feedaudit/error.hpp"
#include "feedaudit/skipgram.hpp"
#include "support.hpp"

using namespace feedaudit;
using namespace feedaudit::metrics;

TEST_CASE("cliques separate for every seed") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto table = train_skipgram(testing::clique_corpus(seed), SkipGramParams{}, seed);
    CHECK(table.vocab.size() == 12);
    auto score = testing::clique_score(table);
    CHECK(score.within > score.across);
  }
}

TEST_CASE("training is reproducible and finite") {
  auto corpus = testing::clique_corpus(3);
  auto a = train_skipgram(corpus, SkipGramParams{}, 17);
  auto b = train_skipgram(corpus, SkipGramParams{}, 17);
  CHECK(a.vectors == b.vectors);
  CHECK(a.vectors.size() == a.vocab.size() * a.dim());
  for (double v : a.vectors) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(a.similarity("a0", "nope"), DataError);
}

TEST_CASE("tiny corpora are refused") {
  HashtagCorpus corpus(10, {"a", "b"});
  CHECK_THROWS_AS(train_skipgram(corpus, SkipGramParams{}, 1), DataError);
  HashtagCorpus single(200, {"a"});
  CHECK_THROWS_AS(train_skipgram(single, SkipGramParams{}, 1), DataError);
  SkipGramParams bad;
  bad.dim = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("feed similarity from fixed vectors") {
  EmbeddingTable table;
  table.params.dim = 2;
  table.params.center = false;
  table.vocab = {"x", "y", "z"};
  table.vectors = {1, 0, 1, 0, 0, 1};

  std::vector<ObservationRow> rows;
  auto add = [&](int run, const std::string& post, const std::string& tag) {
    ObservationRow r;
    r.run = run;
    r.user = "u";
    r.post = post;
    r.hashtags = {tag};
    rows.push_back(r);
  };
  add(0, "p0", "x");
  add(0, "p1", "y");
  add(1, "p2", "x");
  add(1, "p3", "z");
  add(2, "p4", "x");
  add(2, "p5", "unknown");

  auto s = feed_similarity_series(rows, "u", table, HashtagFilter{});
  REQUIRE(s.points.size() == 2);
  CHECK(s.points[0].value == doctest::Approx(100.0));
  CHECK(s.points[1].value == doctest::Approx(0.0));
}

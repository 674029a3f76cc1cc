#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "feedaudit/catalog.hpp"
#include "feedaudit/random.hpp"
#include "feedaudit/skipgram.hpp"

namespace testing {

inline const feedaudit::catalog::Catalog& default_catalog() {
  static const auto catalog =
      feedaudit::catalog::generate_catalog(feedaudit::catalog::CatalogConfig::defaults(), 42);
  return catalog;
}

// Posts draw three tags from one of two disjoint cliques of six.
inline feedaudit::metrics::HashtagCorpus clique_corpus(std::uint64_t seed, std::size_t posts = 400) {
  auto rng = feedaudit::make_rng({seed, 0xc11c});
  feedaudit::metrics::HashtagCorpus corpus;
  for (std::size_t i = 0; i < posts; ++i) {
    const std::string prefix = i % 2 == 0 ? "a" : "b";
    std::vector<int> ids = {0, 1, 2, 3, 4, 5};
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<std::string> post;
    for (int k = 0; k < 3; ++k) post.push_back(prefix + std::to_string(ids[k]));
    corpus.push_back(post);
  }
  return corpus;
}

struct CliqueScore {
  double within = 0;
  double across = 0;
};

inline CliqueScore clique_score(const feedaudit::metrics::EmbeddingTable& table) {
  CliqueScore s;
  int nw = 0, na = 0;
  for (const auto& x : table.vocab)
    for (const auto& y : table.vocab) {
      if (x >= y) continue;
      const double c = table.similarity(x, y);
      if (x[0] == y[0]) {
        s.within += c;
        ++nw;
      } else {
        s.across += c;
        ++na;
      }
    }
  s.within /= nw;
  s.across /= na;
  return s;
}

// Removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("feedaudit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const { return (child.empty() ? path_ : path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "feedaudit/metrics.hpp"

namespace feedaudit::metrics {

struct SkipGramParams {
  std::size_t dim = 32;
  std::size_t negatives = 5;
  std::size_t epochs = 20;
  double learning_rate = 0.025;  // decays linearly towards learning_rate * 1e-4
  double unigram_power = 0.75;
  bool center = true;  // subtract the vocabulary mean vector after training

  void validate() const;
};

/// Hashtag embeddings. Vectors are the input-side weights of the model,
/// mean-centered unless disabled.
struct EmbeddingTable {
  SkipGramParams params;
  std::uint64_t seed = 0;
  std::vector<std::string> vocab;  // sorted
  std::vector<double> vectors;     // vocab.size() * dim, row major

  std::size_t dim() const { return params.dim; }
  std::optional<std::size_t> index(const std::string& tag) const;
  std::span<const double> vector(std::size_t i) const;
  /// Cosine of two vocabulary entries; throws DataError for unknown tags.
  double similarity(const std::string& a, const std::string& b) const;
};

/// One hashtag list per post; the post is the context window.
using HashtagCorpus = std::vector<std::vector<std::string>>;

inline constexpr std::size_t kMinCorpusPosts = 100;

/// Skip-gram with negative sampling over every ordered hashtag pair within a
/// post. Throws DataError on a vocabulary below 2 or fewer than
/// kMinCorpusPosts posts.
EmbeddingTable train_skipgram(const HashtagCorpus& corpus, const SkipGramParams& params,
                              std::uint64_t seed);

/// Cleaned hashtag lists of the distinct posts in `rows`, ordered by post id.
HashtagCorpus hashtag_corpus(const std::vector<ObservationRow>& rows, const HashtagFilter& filter);

/// Per run, the mean pairwise cosine (percent) between the user's posts, each
/// post being the mean of its known cleaned hashtags' vectors. Posts without
/// such hashtags are skipped, as are runs with fewer than two usable posts.
MetricSeries feed_similarity_series(const std::vector<ObservationRow>& rows, const std::string& user,
                                    const EmbeddingTable& embeddings, const HashtagFilter& filter,
                                    const std::vector<int>& excluded = {});

}  // namespace feedaudit::metrics

#include "feedaudit/skipgram.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "feedaudit/error.hpp"
#include "feedaudit/random.hpp"

namespace feedaudit::metrics {

namespace {

bool contains(const std::vector<int>& runs, int run) {
  return std::find(runs.begin(), runs.end(), run) != runs.end();
}

double sigmoid(double x) {
  if (x > 30) return 1.0;
  if (x < -30) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

double cosine_span(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

void SkipGramParams::validate() const {
  if (dim == 0) throw ConfigError("skip-gram dimension must be positive");
  if (epochs == 0) throw ConfigError("skip-gram needs at least one epoch");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    throw ConfigError("skip-gram learning rate must be positive");
  if (!(unigram_power >= 0) || !std::isfinite(unigram_power))
    throw ConfigError("unigram power must be non-negative");
}

std::optional<std::size_t> EmbeddingTable::index(const std::string& tag) const {
  auto it = std::lower_bound(vocab.begin(), vocab.end(), tag);
  if (it == vocab.end() || *it != tag) return std::nullopt;
  return static_cast<std::size_t>(it - vocab.begin());
}

std::span<const double> EmbeddingTable::vector(std::size_t i) const {
  return {vectors.data() + i * dim(), dim()};
}

double EmbeddingTable::similarity(const std::string& a, const std::string& b) const {
  auto ia = index(a);
  auto ib = index(b);
  if (!ia || !ib) throw DataError("no embedding for '" + (ia ? b : a) + "'");
  return cosine_span(vector(*ia), vector(*ib));
}

EmbeddingTable train_skipgram(const HashtagCorpus& corpus, const SkipGramParams& params,
                              std::uint64_t seed) {
  params.validate();
  if (corpus.size() < kMinCorpusPosts)
    throw DataError("skip-gram corpus has " + std::to_string(corpus.size()) + " posts, needs " +
                    std::to_string(kMinCorpusPosts));

  EmbeddingTable table;
  table.params = params;
  table.seed = seed;
  std::set<std::string> words;
  for (const auto& post : corpus) words.insert(post.begin(), post.end());
  table.vocab.assign(words.begin(), words.end());
  const std::size_t v = table.vocab.size();
  if (v < 2) throw DataError("skip-gram vocabulary needs at least two hashtags");
  const std::size_t d = params.dim;

  // Posts as index lists, duplicates within a post dropped.
  std::vector<std::vector<std::size_t>> posts;
  std::vector<double> freq(v, 0.0);
  std::size_t pairs_per_epoch = 0;
  for (const auto& post : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& tag : post) ids.push_back(*table.index(tag));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (auto id : ids) freq[id] += 1.0;
    pairs_per_epoch += ids.size() * (ids.size() - 1);
    posts.push_back(std::move(ids));
  }
  for (auto& f : freq) f = std::pow(f, params.unigram_power);
  WeightedSampler noise(freq);

  Rng rng = make_rng({seed, hash_string("skipgram")});
  auto& in = table.vectors;
  in.resize(v * d);
  for (auto& x : in) x = (uniform01(rng) - 0.5) / static_cast<double>(d);
  std::vector<double> out(v * d, 0.0);
  std::vector<double> grad(d);

  const double total = static_cast<double>(std::max<std::size_t>(pairs_per_epoch * params.epochs, 1));
  const double lr_floor = params.learning_rate * 1e-4;
  std::size_t done = 0;
  std::vector<std::size_t> order(posts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto update = [&](std::size_t center, std::size_t target, double label, double lr) {
    double* u = &in[center * d];
    double* w = &out[target * d];
    double dot = 0;
    for (std::size_t k = 0; k < d; ++k) dot += u[k] * w[k];
    const double g = lr * (label - sigmoid(dot));
    for (std::size_t k = 0; k < d; ++k) {
      grad[k] += g * w[k];
      w[k] += g * u[k];
    }
  };

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t pi : order) {
      const auto& ids = posts[pi];
      for (std::size_t a : ids) {
        for (std::size_t b : ids) {
          if (a == b) continue;
          const double lr =
              std::max(lr_floor, params.learning_rate * (1.0 - static_cast<double>(done) / total));
          ++done;
          std::fill(grad.begin(), grad.end(), 0.0);
          update(a, b, 1.0, lr);
          for (std::size_t n = 0; n < params.negatives; ++n) {
            std::size_t neg = noise(rng);
            if (neg == b) continue;
            update(a, neg, 0.0, lr);
          }
          double* u = &in[a * d];
          for (std::size_t k = 0; k < d; ++k) u[k] += grad[k];
        }
      }
    }
  }
  // Remove the shared component.
  if (params.center) {
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < v; ++i)
      for (std::size_t k = 0; k < d; ++k) mean[k] += in[i * d + k] / static_cast<double>(v);
    for (std::size_t i = 0; i < v; ++i)
      for (std::size_t k = 0; k < d; ++k) in[i * d + k] -= mean[k];
  }
  return table;
}

HashtagCorpus hashtag_corpus(const std::vector<ObservationRow>& rows, const HashtagFilter& filter) {
  std::map<std::string, const ObservationRow*> posts;
  for (const auto& r : rows) posts.emplace(r.post, &r);
  HashtagCorpus corpus;
  for (const auto& [id, row] : posts) {
    auto tags = entities(*row, EntityKind::hashtag, filter);
    if (!tags.empty()) corpus.push_back(std::move(tags));
  }
  return corpus;
}

MetricSeries feed_similarity_series(const std::vector<ObservationRow>& rows, const std::string& user,
                                    const EmbeddingTable& embeddings, const HashtagFilter& filter,
                                    const std::vector<int>& excluded) {
  MetricSeries series;
  series.name = "similarity-hashtags";
  const std::size_t d = embeddings.dim();
  std::map<int, std::vector<std::vector<double>>> per_run;
  std::set<int> runs;
  for (const auto& r : rows) {
    if (r.user != user) continue;
    runs.insert(r.run);
    if (contains(excluded, r.run)) continue;
    std::vector<double> mean(d, 0.0);
    std::size_t used = 0;
    for (const auto& tag : entities(r, EntityKind::hashtag, filter)) {
      auto i = embeddings.index(tag);
      if (!i) continue;
      auto vec = embeddings.vector(*i);
      for (std::size_t k = 0; k < d; ++k) mean[k] += vec[k];
      ++used;
    }
    if (used == 0) continue;
    for (auto& x : mean) x /= static_cast<double>(used);
    per_run[r.run].push_back(std::move(mean));
  }
  for (int run : runs) {
    auto it = per_run.find(run);
    if (contains(excluded, run) || it == per_run.end() || it->second.size() < 2) {
      series.excluded_runs.push_back(run);
      continue;
    }
    const auto& vecs = it->second;
    double total = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < vecs.size(); ++i)
      for (std::size_t j = i + 1; j < vecs.size(); ++j) {
        total += cosine_span(vecs[i], vecs[j]);
        ++pairs;
      }
    series.points.push_back(Point{static_cast<double>(run), 100.0 * total / static_cast<double>(pairs)});
  }
  series.refit();
  return series;
}

}  // namespace feedaudit::metrics

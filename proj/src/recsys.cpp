#include "feedaudit/recsys.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feedaudit/error.hpp"

namespace feedaudit::recsys {

namespace {

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0; }

bool all_zero(const TopicVector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

void blend_and_normalize(TopicVector& vec, const TopicVector& target, double alpha, double strength) {
  if (vec.size() != target.size()) vec.assign(target.size(), 0.0);
  double total = 0;
  for (std::size_t i = 0; i < vec.size(); ++i) {
    vec[i] = (1.0 - alpha) * vec[i] + alpha * strength * target[i];
    total += vec[i];
  }
  if (total > 0)
    for (auto& x : vec) x /= total;
}

// Keeps the best `k` ids under `better` (a strict weak ordering).
template <class Better>
void keep_top(std::vector<std::uint32_t>& ids, std::size_t k, Better better) {
  if (ids.size() > k) {
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), better);
    ids.resize(k);
  } else {
    std::sort(ids.begin(), ids.end(), better);
  }
}

}  // namespace

void SignalWeights::validate() const {
  for (double w : {follow, vvr, like, locale, language, pop, noise})
    if (!finite_non_negative(w)) throw ConfigError("signal weights must be finite and non-negative");
}

void PlatformParams::validate() const {
  weights.validate();
  if (pool_size < kBatchSize) throw ConfigError("pool_size must be at least the batch size");
  for (double f : {explore_fraction, interest_fraction, locale_mix})
    if (!(f >= 0 && f <= 1)) throw ConfigError("recall fractions must lie in [0,1]");
  if (!finite_non_negative(popularity_exponent)) throw ConfigError("popularity exponent must be >= 0");
  if (!finite_non_negative(interest_ramp)) throw ConfigError("interest ramp must be >= 0");
  if (follow_per_creator == 0) throw ConfigError("follow_per_creator must be positive");
  if (explore_fraction + interest_fraction > 1)
    throw ConfigError("exploration and interest slices exceed the pool");
  if (!(alpha_like > 0 && alpha_like < 1) || !(alpha_watch > 0 && alpha_watch < 1))
    throw ConfigError("interest learning rates must lie in (0,1)");
  if (bucket_t1 >= bucket_t2) throw ConfigError("bucket thresholds need T1 < T2");
  if (k_div == 0) throw ConfigError("k_div must be positive");
  for (const auto& shift : level_shifts)
    if (!finite_non_negative(shift.noise_scale)) throw ConfigError("level shift scale must be >= 0");
}

double PlatformParams::noise_scale_at(std::int64_t tick) const {
  double scale = 1.0;
  std::int64_t latest = INT64_MIN;
  for (const auto& shift : level_shifts) {
    if (shift.tick <= tick && shift.tick >= latest) {
      latest = shift.tick;
      scale = shift.noise_scale;
    }
  }
  return scale;
}

void DwellMedian::push(double value) {
  if (low_.empty() || value <= low_.top()) {
    low_.push(value);
  } else {
    high_.push(value);
  }
  if (low_.size() > high_.size() + 1) {
    high_.push(low_.top());
    low_.pop();
  } else if (high_.size() > low_.size()) {
    low_.push(high_.top());
    high_.pop();
  }
}

double DwellMedian::median() const {
  if (low_.empty()) return 0.0;
  if (low_.size() > high_.size()) return low_.top();
  return 0.5 * (low_.top() + high_.top());
}

UserState::UserState(std::string id, LocaleIndex region_, LocaleIndex language_, std::size_t topics)
    : user_id(std::move(id)),
      region(region_),
      language(language_),
      like_vec(topics, 0.0),
      watch_vec(topics, 0.0) {}

void UserState::mark_seen(PostId id) {
  if (id.value >= seen.size()) seen.resize(std::max<std::size_t>(id.value + 1, seen.size() * 2), false);
  if (!seen[id.value]) {
    seen[id.value] = true;
    ++seen_count;
  }
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::view: return "view";
    case EventKind::like: return "like";
    case EventKind::follow: return "follow";
    case EventKind::watch: return "watch";
  }
  return "?";
}

EventKind parse_event_kind(std::string_view text) {
  if (text == "view") return EventKind::view;
  if (text == "like") return EventKind::like;
  if (text == "follow") return EventKind::follow;
  if (text == "watch") return EventKind::watch;
  throw SchemaError("unknown event kind '" + std::string(text) + "'");
}

double cosine(const TopicVector& a, const TopicVector& b) {
  double dot = 0, na = 0, nb = 0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

double draw_key(std::uint64_t round_seed, PostId id, double weight) {
  const std::uint64_t bits = splitmix64(round_seed ^ splitmix64(id.value + 0x9e3779b97f4a7c15ULL));
  const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  return std::log(u) / weight;
}

std::vector<PostId> recall(const Catalog& catalog, const UserState& user,
                           const PlatformParams& params, std::uint64_t round_seed) {
  const std::size_t n_posts = catalog.posts.size();
  std::vector<char> taken(n_posts, 0);
  std::vector<PostId> result;
  result.reserve(params.pool_size + 64);
  auto take = [&](std::uint32_t id) {
    if (!taken[id]) {
      taken[id] = 1;
      result.push_back(PostId{id});
    }
  };
  auto by_views = [&](std::uint32_t a, std::uint32_t b) {
    auto va = catalog.posts[a].counters.views, vb = catalog.posts[b].counters.views;
    return va != vb ? va > vb : a < b;
  };

  auto newest = [&](std::uint32_t a, std::uint32_t b) {
    auto ta = catalog.posts[a].upload_tick, tb = catalog.posts[b].upload_tick;
    return ta != tb ? ta > tb : a < b;
  };

  // Followed creators, the newest few of each.
  if (!user.follows.empty()) {
    std::vector<std::uint32_t> followed;
    for (auto creator : user.follows) {
      std::vector<std::uint32_t> own;
      for (auto id : catalog.posts_by_creator[creator.value])
        if (!user.has_seen(id)) own.push_back(id.value);
      keep_top(own, params.follow_per_creator, newest);
      followed.insert(followed.end(), own.begin(), own.end());
    }
    keep_top(followed, params.pool_size / 2, newest);
    for (auto id : followed) take(id);
  }

  std::vector<std::uint32_t> affine;
  std::vector<std::uint32_t> foreign;
  std::vector<std::uint32_t> fresh;
  affine.reserve(n_posts);
  for (std::uint32_t id = 0; id < n_posts; ++id) {
    if (taken[id] || user.has_seen(PostId{id})) continue;
    const Post& p = catalog.posts[id];
    if (p.region == user.region || p.language == user.language) {
      affine.push_back(id);
      if (p.bucket == catalog::Bucket::small) fresh.push_back(id);
    } else {
      foreign.push_back(id);
    }
  }

  // Interest affinity against like + watch signals.
  TopicVector interest(catalog.topic_count(), 0.0);
  for (std::size_t t = 0; t < interest.size(); ++t) {
    if (t < user.like_vec.size()) interest[t] += user.like_vec[t];
    if (t < user.watch_vec.size()) interest[t] += user.watch_vec[t];
  }
  if (!all_zero(interest)) {
    // The slice widens as evidence accumulates.
    double share = interest_confidence(user, params);
    auto n_interest =
        static_cast<std::size_t>(std::lround(params.interest_fraction * share * params.pool_size));
    std::vector<std::pair<double, std::uint32_t>> scored;
    for (auto id : affine) {
      double c = cosine(interest, catalog.topic_vectors[id]);
      if (c > 0) scored.emplace_back(c, id);
    }
    auto better = [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return by_views(a.second, b.second);
    };
    if (scored.size() > n_interest) {
      std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n_interest),
                        scored.end(), better);
      scored.resize(n_interest);
    }
    for (const auto& [c, id] : scored) take(id);
  }

  // Newest small-bucket uploads.
  auto n_fresh = static_cast<std::size_t>(std::lround(params.explore_fraction * params.pool_size));
  if (n_fresh > 0) {
    std::erase_if(fresh, [&](std::uint32_t id) { return taken[id] != 0; });
    keep_top(fresh, n_fresh, newest);
    for (auto id : fresh) take(id);
  }

  // Popularity-weighted draw of locale-affine posts plus a cross-region share.
  auto weight = [&](std::uint32_t id) {
    return std::pow(1.0 + static_cast<double>(catalog.posts[id].counters.views),
                    params.popularity_exponent);
  };
  auto keyed = [&](std::vector<std::uint32_t>& ids, std::size_t k) {
    std::vector<std::pair<double, std::uint32_t>> keys;
    keys.reserve(ids.size());
    for (auto id : ids) keys.emplace_back(draw_key(round_seed, PostId{id}, weight(id)), id);
    auto later = [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    };
    if (keys.size() > k) {
      std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(), later);
      keys.resize(k);
    }
    for (const auto& [key, id] : keys) take(id);
  };
  std::size_t remaining = params.pool_size > result.size() ? params.pool_size - result.size() : 0;
  auto n_cross = static_cast<std::size_t>(std::lround(params.locale_mix * remaining));
  std::erase_if(affine, [&](std::uint32_t id) { return taken[id] != 0; });
  if (affine.size() < remaining - n_cross) n_cross = remaining - affine.size();
  keyed(affine, remaining - n_cross);
  keyed(foreign, n_cross);

  if (result.size() < kBatchSize)
    throw PoolExhausted("recall for " + user.user_id + " found only " +
                        std::to_string(result.size()) + " unseen candidates");
  std::sort(result.begin(), result.end());
  return result;
}

double interest_confidence(const UserState& user, const PlatformParams& params) {
  if (params.interest_ramp == 0) return 1.0;
  double evidence = params.weights.like * user.like_evidence + params.weights.vvr * user.watch_evidence;
  return -std::expm1(-evidence / params.interest_ramp);
}

double score(const UserState& user, const Post& post, const TopicVector& topics,
             const SignalWeights& w, double log_max_views, Rng& rng, double noise_scale,
             double confidence) {
  double s = 0;
  if (user.follows_creator(post.creator)) s += w.follow;
  s += confidence * w.vvr * cosine(user.watch_vec, topics);
  s += confidence * w.like * cosine(user.like_vec, topics);
  if (post.region == user.region) s += w.locale;
  if (post.language == user.language) s += w.language;
  if (log_max_views > 0)
    s += w.pop * std::log1p(static_cast<double>(post.counters.views)) / log_max_views;
  s += w.noise * noise_scale * uniform01(rng);
  return s;
}

Diversified rank_and_diversify(const Catalog& catalog, std::span<const PostId> candidates,
                               std::span<const double> scores, std::size_t k_div,
                               std::size_t count) {
  std::vector<std::size_t> ranked(candidates.size());
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  Diversified out;
  const std::size_t target = std::min(count, ranked.size());
  std::vector<char> used(ranked.size(), 0);
  auto creator_of = [&](std::size_t i) { return catalog.post(candidates[i]).creator; };
  auto topic_of = [&](std::size_t i) { return catalog.dominant_topics[candidates[i].value]; };

  // Would appending candidate i make a run longer than k_div?
  auto breaks_run = [&](std::size_t i) {
    if (out.order.size() < k_div) return false;
    bool same_creator = true, same_topic = true;
    for (std::size_t back = 1; back <= k_div; ++back) {
      std::size_t prev = out.order[out.order.size() - back];
      same_creator = same_creator && creator_of(prev) == creator_of(i);
      same_topic = same_topic && topic_of(prev) == topic_of(i);
    }
    return same_creator || same_topic;
  };

  std::size_t first_unused = 0;
  while (out.order.size() < target) {
    while (used[first_unused]) ++first_unused;
    std::size_t pick = ranked.size();
    for (std::size_t r = first_unused; r < ranked.size(); ++r) {
      if (!used[r] && !breaks_run(ranked[r])) {
        pick = r;
        break;
      }
    }
    if (pick == ranked.size()) {
      out.satisfied = false;
      pick = first_unused;
    }
    used[pick] = 1;
    out.order.push_back(ranked[pick]);
  }
  return out;
}

void update_user_state(UserState& user, const Event& event, const TopicVector& post_topics,
                       double post_duration, double alpha_like, double alpha_watch) {
  switch (event.kind) {
    case EventKind::view:
      break;
    case EventKind::like:
      blend_and_normalize(user.like_vec, post_topics, alpha_like, 1.0);
      user.like_evidence += 1.0;
      ++user.event_count;
      break;
    case EventKind::watch: {
      // vvr * duration does not round-trip exactly; equal dwells must not count as longer.
      double dwell = event.vvr * post_duration;
      user.dwell.push(dwell);
      if (dwell > user.dwell.median() * (1.0 + 1e-9)) {
        blend_and_normalize(user.watch_vec, post_topics, alpha_watch, std::min(event.vvr, 1.0));
        user.watch_evidence += std::min(event.vvr, 1.0);
        ++user.event_count;
      }
      break;
    }
    case EventKind::follow:
      if (event.creator) user.follows.insert(*event.creator);
      ++user.event_count;
      break;
  }
}

std::size_t promote_buckets(Catalog& catalog, std::int64_t t1, std::int64_t t2) {
  if (t1 >= t2) throw ConfigError("bucket thresholds need T1 < T2");
  std::size_t promoted = 0;
  for (auto& p : catalog.posts) {
    auto e = catalog::engagement(p.counters);
    if (p.bucket == catalog::Bucket::small && e >= t1) {
      p.bucket = catalog::Bucket::medium;
      ++promoted;
    } else if (p.bucket == catalog::Bucket::medium && e >= t2) {
      p.bucket = catalog::Bucket::master;
      ++promoted;
    }
  }
  return promoted;
}

}  // namespace feedaudit::recsys

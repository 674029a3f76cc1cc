#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "feedaudit/catalog.hpp"
#include "feedaudit/random.hpp"

namespace feedaudit::recsys {

using catalog::Catalog;
using catalog::CreatorId;
using catalog::LocaleIndex;
using catalog::Post;
using catalog::PostId;
using catalog::TopicVector;

/// Posts preloaded per feed page.
inline constexpr std::size_t kBatchSize = 30;

/// Watch fractions above this are rejected (four full replays).
inline constexpr double kMaxVvr = 4.0;

struct SignalWeights {
  double follow = 1.0;
  double vvr = 0.05;
  double like = 0.04;
  double locale = 0.6;
  double language = 0.3;
  double pop = 0.3;
  double noise = 0.037;

  /// Finite and non-negative. A zero noise weight is accepted for
  /// diagnostic runs; calibration never goes below its floor.
  void validate() const;
};

/// Scripted platform change: from `tick` on, exploration noise is scaled.
struct LevelShift {
  std::int64_t tick = 0;
  double noise_scale = 1.0;
};

struct PlatformParams {
  SignalWeights weights;
  std::size_t pool_size = 500;
  double explore_fraction = 0.10;
  double interest_fraction = 0.30;
  double locale_mix = 0.10;
  double popularity_exponent = 1.0;  // locale slice draws posts with weight (1 + views)^exponent
  // Weighted evidence (w_like per like, w_vvr per long watch) at which the
  // interest slice reaches 1 - 1/e of its full size. Zero keeps it full.
  double interest_ramp = 10.0;
  std::size_t follow_per_creator = 2;  // followed-creator posts recalled per creator
  std::size_t k_div = 2;
  double alpha_like = 0.2;
  double alpha_watch = 0.15;
  std::int64_t bucket_t1 = 300;
  std::int64_t bucket_t2 = 200000;
  std::size_t spawn_rate = 3000;    // uploads per tick
  std::size_t ambient_posts = 300;  // posts touched by background traffic per tick
  std::vector<LevelShift> level_shifts;

  void validate() const;
  double noise_scale_at(std::int64_t tick) const;
};

/// Streaming median of all dwell times seen so far.
class DwellMedian {
 public:
  void push(double value);
  double median() const;
  std::size_t size() const { return low_.size() + high_.size(); }

 private:
  std::priority_queue<double> low_;
  std::priority_queue<double, std::vector<double>, std::greater<double>> high_;
};

struct UserState {
  std::string user_id;
  LocaleIndex region = 0;
  LocaleIndex language = 0;
  std::set<CreatorId> follows;
  TopicVector like_vec;   // all zero until the first like
  TopicVector watch_vec;  // all zero until the first long watch
  std::vector<bool> seen;
  std::size_t seen_count = 0;
  std::uint64_t event_count = 0;
  double like_evidence = 0;   // number of likes
  double watch_evidence = 0;  // long watches, each counted min(vvr, 1)
  DwellMedian dwell;

  UserState() = default;
  UserState(std::string id, LocaleIndex region, LocaleIndex language, std::size_t topics);

  bool has_seen(PostId id) const { return id.value < seen.size() && seen[id.value]; }
  void mark_seen(PostId id);
  bool follows_creator(CreatorId id) const { return follows.count(id) != 0; }
};

enum class EventKind { view, like, follow, watch };

const char* to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);

struct Event {
  std::int64_t tick = 0;
  std::uint64_t seq = 0;
  std::string user_id;
  EventKind kind = EventKind::view;
  std::optional<PostId> post;
  std::optional<CreatorId> creator;
  double vvr = 0.0;  // watch only
};

struct PostSnapshot {
  PostId id;
  CreatorId creator;
  catalog::SoundId sound;
  std::vector<catalog::HashtagId> hashtags;
  LocaleIndex language = 0;
  LocaleIndex region = 0;
  double duration = 0;
  catalog::Counters counters;  // as of serve time
  catalog::Bucket bucket = catalog::Bucket::small;
};

struct FeedBatch {
  int run_index = 0;
  std::string user_id;
  std::size_t batch_index = 0;
  std::vector<PostSnapshot> posts;
  bool diversity_satisfied = true;
};

double cosine(const TopicVector& a, const TopicVector& b);

/// Candidate generation. Slices: followed creators, interest affinity,
/// newest small-bucket uploads for exploration, and a popularity-weighted
/// draw of locale-affine posts (with a cross-region share). The draw is keyed
/// by `round_seed` and post id only, so every user served in the same round
/// sees the same ordering. Returned ids are sorted and unique.
std::vector<PostId> recall(const Catalog& catalog, const UserState& user,
                           const PlatformParams& params, std::uint64_t round_seed);

/// Weighted-sampling key of a post in a round; larger keys are drawn first.
double draw_key(std::uint64_t round_seed, PostId id, double weight);

/// Share of the full interest signal the platform trusts so far, in [0, 1).
/// Grows with weighted like and long-watch evidence; 1 when the ramp is off.
double interest_confidence(const UserState& user, const PlatformParams& params);

/// Linear ranking score. `log_max_views` is log(1 + max views in catalog).
/// The two cosine terms are scaled by `confidence`.
double score(const UserState& user, const Post& post, const TopicVector& topics,
             const SignalWeights& weights, double log_max_views, Rng& rng,
             double noise_scale = 1.0, double confidence = 1.0);

struct Diversified {
  std::vector<std::size_t> order;  // indexes into the candidate list
  bool satisfied = true;
};

/// Descending score order, repaired so that no more than `k_div` consecutive
/// posts share a creator or a dominant topic. Falls back to plain score
/// order at a slot where no candidate fits.
Diversified rank_and_diversify(const Catalog& catalog, std::span<const PostId> candidates,
                               std::span<const double> scores, std::size_t k_div,
                               std::size_t count = kBatchSize);

/// Applies one like/watch/follow event to the user's interest state.
void update_user_state(UserState& user, const Event& event, const TopicVector& post_topics,
                       double post_duration, double alpha_like, double alpha_watch);

/// One promotion step per call: bucket 0 -> 1 at engagement >= t1,
/// 1 -> 2 at engagement >= t2. Returns the number of posts promoted.
std::size_t promote_buckets(Catalog& catalog, std::int64_t t1, std::int64_t t2);

}  // namespace feedaudit::recsys

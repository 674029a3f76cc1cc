#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace feedaudit::catalog {

template <class Tag>
struct Id {
  std::uint32_t value = 0;
  friend auto operator<=>(const Id&, const Id&) = default;
};

using TopicId = Id<struct TopicTag>;
using CreatorId = Id<struct CreatorTag>;
using SoundId = Id<struct SoundTag>;
using PostId = Id<struct PostTag>;
using HashtagId = Id<struct HashtagTag>;

// External spellings: t03, c00042, s00017, p000123.
std::string to_string(TopicId id);
std::string to_string(CreatorId id);
std::string to_string(SoundId id);
std::string to_string(PostId id);
TopicId parse_topic_id(std::string_view text);
CreatorId parse_creator_id(std::string_view text);
SoundId parse_sound_id(std::string_view text);
PostId parse_post_id(std::string_view text);

/// Index into Catalog::regions / Catalog::languages.
using LocaleIndex = std::uint8_t;

/// Probability vector over topics.
using TopicVector = std::vector<double>;

struct Topic {
  TopicId id;
  std::string name;
  std::vector<std::string> hashtag_pool;  // ordered by popularity rank
  double base_popularity = 1.0;
};

struct Creator {
  CreatorId id;
  LocaleIndex home_region = 0;
  LocaleIndex primary_language = 0;
  TopicVector topic_mixture;
  double activity = 1.0;  // relative upload rate
};

struct Counters {
  std::int64_t views = 0;
  std::int64_t likes = 0;
  std::int64_t shares = 0;
  std::int64_t comments = 0;
  friend bool operator==(const Counters&, const Counters&) = default;
};

enum class Bucket : std::uint8_t { small = 0, medium = 1, master = 2 };

struct Post {
  PostId id;
  CreatorId creator;
  SoundId sound;
  std::vector<HashtagId> hashtags;  // sorted, unique
  LocaleIndex language = 0;
  LocaleIndex region = 0;
  std::int64_t upload_tick = 0;
  double duration = 15.0;  // seconds
  Counters counters;
  Bucket bucket = Bucket::small;
};

/// Engagement score driving bucket promotion.
std::int64_t engagement(const Counters& c);

struct HashtagInfo {
  std::string text;
  std::optional<TopicId> topic;  // empty for the global common pool
};

struct RegionSpec {
  std::string code;
  double weight = 1.0;
  std::vector<std::pair<std::string, double>> languages;
};

struct TopicSpec {
  std::string name;
  std::vector<std::string> seed_hashtags;
  double base_popularity = 1.0;
};

struct CatalogConfig {
  std::vector<TopicSpec> topics;
  std::size_t hashtags_per_topic = 300;
  double hashtag_zipf = 0.7;
  std::size_t creators = 4000;
  double creator_zipf = 0.7;
  std::size_t sounds = 4000;
  double sound_zipf = 0.5;
  std::size_t posts = 40000;
  std::size_t min_hashtags = 3;
  std::size_t max_hashtags = 8;
  std::vector<std::string> common_pool;
  double common_fraction = 0.4;
  double locale_mixing = 0.05;   // posts tagged outside the creator's home region
  double language_drift = 0.1;   // posts not in the creator's primary language
  double secondary_topic_rate = 0.25;
  std::vector<RegionSpec> regions;
  std::vector<std::string> languages;
  double views_log_mean = 7.0;
  double views_log_sd = 2.0;
  std::int64_t bucket_t1 = 2000;
  std::int64_t bucket_t2 = 200000;

  /// The shipped configuration: 12 topics, US/CA/DE, en/de/es/fr.
  static CatalogConfig defaults();

  /// Throws ConfigError on unusable settings.
  void validate() const;
};

/// Reads a YAML catalog config; missing keys keep their default values.
CatalogConfig load_catalog_config(const std::string& path);

struct Catalog {
  std::uint64_t seed = 0;
  std::vector<std::string> regions;
  std::vector<std::string> languages;
  std::vector<Topic> topics;
  std::vector<std::string> common_pool;
  std::vector<Creator> creators;
  std::vector<double> sound_weights;
  std::vector<Post> posts;

  // Generation model, kept so that new uploads follow the same process.
  std::size_t min_hashtags = 3;
  std::size_t max_hashtags = 8;
  double hashtag_zipf = 1.0;
  double common_fraction = 0.4;
  double locale_mixing = 0.05;
  double language_drift = 0.1;
  double secondary_topic_rate = 0.25;
  std::vector<std::vector<double>> region_languages;  // [region][language]

  // Derived indexes, rebuilt by rebuild_indexes().
  std::vector<HashtagInfo> hashtags;
  std::unordered_map<std::string, HashtagId> hashtag_lookup;
  std::vector<TopicVector> topic_vectors;      // per post
  std::vector<std::uint32_t> dominant_topics;  // per post
  std::vector<std::vector<PostId>> posts_by_creator;

  void rebuild_indexes();
  /// Registers derived data for a post appended after the last rebuild.
  void index_post(const Post& post);

  const Post& post(PostId id) const { return posts[id.value]; }
  Post& post(PostId id) { return posts[id.value]; }
  const Creator& creator(CreatorId id) const { return creators[id.value]; }
  const std::string& hashtag_text(HashtagId id) const { return hashtags[id.value].text; }
  std::optional<HashtagId> find_hashtag(std::string_view text) const;
  bool is_common(HashtagId id) const { return !hashtags[id.value].topic.has_value(); }
  std::size_t topic_count() const { return topics.size(); }
  std::size_t sound_count() const { return sound_weights.size(); }
  std::optional<LocaleIndex> region_index(std::string_view code) const;
  std::optional<LocaleIndex> language_index(std::string_view code) const;
  std::int64_t max_views() const;

  /// Throws DataError when any foreign key or invariant is broken.
  void check_integrity() const;
};

Catalog generate_catalog(const CatalogConfig& config, std::uint64_t seed);

struct TopicProfile {
  TopicVector weights;
  bool uniform_fallback = false;  // post carried only common-pool hashtags
};

/// Share of the post's non-common hashtags falling into each topic pool.
TopicProfile topic_vector(const Post& post, const Catalog& catalog);

/// Appends `rate` fresh uploads at `tick`. Deterministic in
/// (catalog seed, tick, catalog size).
std::vector<PostId> spawn_new_posts(Catalog& catalog, std::int64_t tick, std::size_t rate);

}  // namespace feedaudit::catalog

template <class Tag>
struct std::hash<feedaudit::catalog::Id<Tag>> {
  std::size_t operator()(const feedaudit::catalog::Id<Tag>& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};

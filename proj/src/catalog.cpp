#include "feedaudit/catalog.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>

#include "feedaudit/error.hpp"
#include "feedaudit/random.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::catalog {

namespace {

std::string format_id(char prefix, int width, std::uint32_t value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*u", prefix, width, value);
  return buf;
}

std::uint32_t parse_id(char prefix, std::string_view text) {
  if (text.size() < 2 || text[0] != prefix)
    throw SchemaError("malformed id '" + std::string(text) + "'");
  return static_cast<std::uint32_t>(textio::parse_uint(text.substr(1)));
}

// Hashtags the persona presets rely on sit at the head of their pools.
std::vector<TopicSpec> builtin_topics() {
  return {
      {"pets",
       {"cat", "dog", "pet", "dogsoftiktok", "catsoftiktok", "cute", "puppy", "dogs", "cats",
        "animals", "petsoftiktok", "kitten"},
       1.0},
      {"food", {"food", "foodtiktok", "tiktokfood", "recipe", "cooking", "foodie"}, 1.0},
      {"gaming", {"gaming", "gta5", "gta", "minecraft", "fortnite", "gamer"}, 1.0},
      {"movies", {"movie", "film", "marvel", "netflix", "series"}, 1.0},
      {"sports", {"football", "euro2020", "soccer", "nba", "basketball"}, 1.0},
      {"music", {"music", "song", "rap", "guitar", "cover"}, 1.0},
      {"dance", {"dance", "dancechallenge", "choreography"}, 1.0},
      {"comedy", {"comedy", "funny", "meme", "prank"}, 1.0},
      {"fashion", {"fashion", "outfit", "style", "ootd"}, 1.0},
      {"travel", {"travel", "beach", "roadtrip"}, 1.0},
      {"fitness", {"fitness", "gym", "workout"}, 1.0},
      {"diy", {"diy", "crafts", "lifehack"}, 1.0},
  };
}

template <class T>
T yaml_or(const YAML::Node& node, const char* key, T fallback) {
  if (auto child = node[key]) return child.as<T>();
  return fallback;
}

// Everything needed to draw one post; shared by generation and uploads.
class PostFactory {
 public:
  explicit PostFactory(const Catalog& catalog) : catalog_(catalog) {
    std::vector<double> activity;
    for (const auto& c : catalog.creators) activity.push_back(c.activity);
    creator_sampler_ = WeightedSampler(activity);
    sound_sampler_ = WeightedSampler(catalog.sound_weights);
    for (const auto& topic : catalog.topics)
      pool_samplers_.emplace_back(zipf_weights(topic.hashtag_pool.size(), catalog.hashtag_zipf));
    if (!catalog.common_pool.empty())
      common_sampler_ = WeightedSampler(zipf_weights(catalog.common_pool.size(), 1.0));
    for (const auto& row : catalog.region_languages) language_samplers_.emplace_back(row);
    for (const auto& creator : catalog.creators)
      mixture_samplers_.emplace_back(creator.topic_mixture);
  }

  Post draw(Rng& rng, PostId id) const {
    Post post;
    post.id = id;
    post.creator = CreatorId{static_cast<std::uint32_t>(creator_sampler_(rng))};
    const Creator& creator = catalog_.creator(post.creator);
    post.sound = SoundId{static_cast<std::uint32_t>(sound_sampler_(rng))};

    post.region = creator.home_region;
    if (catalog_.regions.size() > 1 && uniform01(rng) < catalog_.locale_mixing) {
      auto other = uniform_index(rng, catalog_.regions.size() - 1);
      post.region = static_cast<LocaleIndex>(other >= creator.home_region ? other + 1 : other);
    }
    post.language = creator.primary_language;
    if (uniform01(rng) < catalog_.language_drift)
      post.language = static_cast<LocaleIndex>(language_samplers_[post.region](rng));

    std::size_t span = catalog_.max_hashtags - catalog_.min_hashtags + 1;
    std::size_t total = catalog_.min_hashtags + uniform_index(rng, span);
    std::set<std::uint32_t> chosen;
    std::size_t common = 0;
    if (!catalog_.common_pool.empty() && uniform01(rng) < catalog_.common_fraction)
      common = (uniform01(rng) < 0.25 && total > 2) ? 2 : 1;
    for (std::size_t attempts = 0; chosen.size() < common && attempts < 64; ++attempts) {
      auto h = catalog_.find_hashtag(catalog_.common_pool[common_sampler_(rng)]);
      chosen.insert(h->value);
    }

    std::size_t primary = mixture_samplers_[post.creator.value](rng);
    std::size_t secondary = primary;
    if (catalog_.topics.size() > 1 && uniform01(rng) < catalog_.secondary_topic_rate) {
      auto other = uniform_index(rng, catalog_.topics.size() - 1);
      secondary = other >= primary ? other + 1 : other;
    }
    std::size_t topical_target = chosen.size() + (total - common);
    for (std::size_t k = 0, attempts = 0; chosen.size() < topical_target && attempts < 256;
         ++attempts) {
      std::size_t topic = (secondary != primary && k % 3 == 2) ? secondary : primary;
      const auto& pool = catalog_.topics[topic].hashtag_pool;
      auto h = catalog_.find_hashtag(pool[pool_samplers_[topic](rng)]);
      if (chosen.insert(h->value).second) ++k;
    }
    for (auto v : chosen) post.hashtags.push_back(HashtagId{v});

    post.duration = 5.0 + 55.0 * uniform01(rng);
    return post;
  }

 private:
  const Catalog& catalog_;
  WeightedSampler creator_sampler_;
  WeightedSampler sound_sampler_;
  WeightedSampler common_sampler_;
  std::vector<WeightedSampler> pool_samplers_;
  std::vector<WeightedSampler> language_samplers_;
  std::vector<WeightedSampler> mixture_samplers_;
};

}  // namespace

std::string to_string(TopicId id) { return format_id('t', 2, id.value); }
std::string to_string(CreatorId id) { return format_id('c', 5, id.value); }
std::string to_string(SoundId id) { return format_id('s', 5, id.value); }
std::string to_string(PostId id) { return format_id('p', 6, id.value); }
TopicId parse_topic_id(std::string_view text) { return TopicId{parse_id('t', text)}; }
CreatorId parse_creator_id(std::string_view text) { return CreatorId{parse_id('c', text)}; }
SoundId parse_sound_id(std::string_view text) { return SoundId{parse_id('s', text)}; }
PostId parse_post_id(std::string_view text) { return PostId{parse_id('p', text)}; }

std::int64_t engagement(const Counters& c) {
  return c.views + 2 * c.likes + 3 * c.shares + 4 * c.comments;
}

CatalogConfig CatalogConfig::defaults() {
  CatalogConfig config;
  config.topics = builtin_topics();
  config.common_pool = {"fyp", "foryou", "foryoupage", "viral", "trending"};
  config.languages = {"en", "de", "es", "fr"};
  config.regions = {
      {"US", 0.45, {{"en", 0.80}, {"es", 0.12}, {"de", 0.04}, {"fr", 0.04}}},
      {"CA", 0.20, {{"en", 0.70}, {"fr", 0.25}, {"es", 0.03}, {"de", 0.02}}},
      {"DE", 0.35, {{"de", 0.82}, {"en", 0.14}, {"es", 0.02}, {"fr", 0.02}}},
  };
  return config;
}

void CatalogConfig::validate() const {
  if (topics.empty()) throw ConfigError("catalog config: at least one topic is required");
  if (regions.empty()) throw ConfigError("catalog config: empty region set");
  if (languages.empty()) throw ConfigError("catalog config: empty language set");
  if (creators == 0 || sounds == 0) throw ConfigError("catalog config: zero creators or sounds");
  if (min_hashtags < 1 || max_hashtags < min_hashtags)
    throw ConfigError("catalog config: bad hashtags-per-post range");
  if (regions.size() > 255 || languages.size() > 255)
    throw ConfigError("catalog config: too many locales");
  if (!(common_fraction >= 0 && common_fraction <= 1) || !(locale_mixing >= 0 && locale_mixing <= 1) ||
      !(language_drift >= 0 && language_drift <= 1) ||
      !(secondary_topic_rate >= 0 && secondary_topic_rate <= 1))
    throw ConfigError("catalog config: rates must lie in [0,1]");
  if (common_fraction > 0 && common_pool.empty())
    throw ConfigError("catalog config: common_fraction > 0 needs a common pool");
  if (bucket_t1 >= bucket_t2) throw ConfigError("catalog config: bucket thresholds need T1 < T2");
  std::set<std::string> seen_tags(common_pool.begin(), common_pool.end());
  if (seen_tags.size() != common_pool.size()) throw ConfigError("catalog config: duplicate common hashtag");
  for (const auto& topic : topics) {
    if (!(topic.base_popularity >= 0) || !std::isfinite(topic.base_popularity))
      throw ConfigError("catalog config: topic weight must be finite and non-negative");
    if (std::max(topic.seed_hashtags.size(), hashtags_per_topic) < max_hashtags)
      throw ConfigError("catalog config: topic '" + topic.name + "' pool smaller than max hashtags");
    for (const auto& tag : topic.seed_hashtags)
      if (!seen_tags.insert(tag).second)
        throw ConfigError("catalog config: hashtag '" + tag + "' appears in two pools");
  }
  double region_total = 0;
  for (const auto& region : regions) {
    if (!(region.weight >= 0)) throw ConfigError("catalog config: negative region weight");
    region_total += region.weight;
    double lang_total = 0;
    for (const auto& [code, weight] : region.languages) {
      if (std::find(languages.begin(), languages.end(), code) == languages.end())
        throw ConfigError("catalog config: region " + region.code + " uses unknown language " + code);
      if (!(weight >= 0)) throw ConfigError("catalog config: negative language weight");
      lang_total += weight;
    }
    if (!(lang_total > 0)) throw ConfigError("catalog config: region " + region.code + " has no languages");
  }
  if (!(region_total > 0)) throw ConfigError("catalog config: region weights sum to zero");
}

CatalogConfig load_catalog_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("catalog config not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  CatalogConfig c = CatalogConfig::defaults();
  try {
    if (auto n = root["topic_count"]) {
      auto count = n.as<std::size_t>();
      auto base = builtin_topics();
      c.topics.clear();
      for (std::size_t i = 0; i < count; ++i) {
        if (i < base.size()) {
          c.topics.push_back(base[i]);
        } else {
          c.topics.push_back({"topic" + std::to_string(i), {}, 1.0});
        }
      }
    }
    if (auto n = root["topics"]) {
      c.topics.clear();
      for (const auto& t : n) {
        TopicSpec spec;
        spec.name = t["name"].as<std::string>();
        spec.seed_hashtags = yaml_or(t, "hashtags", std::vector<std::string>{});
        spec.base_popularity = yaml_or(t, "base_popularity", 1.0);
        c.topics.push_back(std::move(spec));
      }
    }
    c.hashtags_per_topic = yaml_or(root, "hashtags_per_topic", c.hashtags_per_topic);
    c.hashtag_zipf = yaml_or(root, "hashtag_zipf", c.hashtag_zipf);
    c.creators = yaml_or(root, "creators", c.creators);
    c.creator_zipf = yaml_or(root, "creator_zipf", c.creator_zipf);
    c.sounds = yaml_or(root, "sounds", c.sounds);
    c.sound_zipf = yaml_or(root, "sound_zipf", c.sound_zipf);
    c.posts = yaml_or(root, "posts", c.posts);
    if (auto n = root["hashtags_per_post"]) {
      auto range = n.as<std::vector<std::size_t>>();
      if (range.size() != 2) throw ConfigError(path + ": hashtags_per_post needs [min, max]");
      c.min_hashtags = range[0];
      c.max_hashtags = range[1];
    }
    c.common_pool = yaml_or(root, "common_pool", c.common_pool);
    c.common_fraction = yaml_or(root, "common_fraction", c.common_fraction);
    c.locale_mixing = yaml_or(root, "locale_mixing", c.locale_mixing);
    c.language_drift = yaml_or(root, "language_drift", c.language_drift);
    c.secondary_topic_rate = yaml_or(root, "secondary_topic_rate", c.secondary_topic_rate);
    c.languages = yaml_or(root, "languages", c.languages);
    if (auto n = root["regions"]) {
      c.regions.clear();
      for (const auto& r : n) {
        RegionSpec spec;
        spec.code = r["code"].as<std::string>();
        spec.weight = yaml_or(r, "weight", 1.0);
        for (const auto& l : r["languages"])
          spec.languages.emplace_back(l.first.as<std::string>(), l.second.as<double>());
        c.regions.push_back(std::move(spec));
      }
    }
    c.views_log_mean = yaml_or(root, "views_log_mean", c.views_log_mean);
    c.views_log_sd = yaml_or(root, "views_log_sd", c.views_log_sd);
    if (auto n = root["bucket_thresholds"]) {
      auto t = n.as<std::vector<std::int64_t>>();
      if (t.size() != 2) throw ConfigError(path + ": bucket_thresholds needs [T1, T2]");
      c.bucket_t1 = t[0];
      c.bucket_t2 = t[1];
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  c.validate();
  return c;
}

void Catalog::rebuild_indexes() {
  hashtags.clear();
  hashtag_lookup.clear();
  for (const auto& tag : common_pool) {
    hashtag_lookup.emplace(tag, HashtagId{static_cast<std::uint32_t>(hashtags.size())});
    hashtags.push_back({tag, std::nullopt});
  }
  for (const auto& topic : topics) {
    for (const auto& tag : topic.hashtag_pool) {
      hashtag_lookup.emplace(tag, HashtagId{static_cast<std::uint32_t>(hashtags.size())});
      hashtags.push_back({tag, topic.id});
    }
  }
  topic_vectors.clear();
  dominant_topics.clear();
  posts_by_creator.assign(creators.size(), {});
  for (const auto& p : posts) index_post(p);
}

void Catalog::index_post(const Post& p) {
  auto profile = topic_vector(p, *this);
  auto dominant = std::max_element(profile.weights.begin(), profile.weights.end());
  dominant_topics.push_back(static_cast<std::uint32_t>(dominant - profile.weights.begin()));
  topic_vectors.push_back(std::move(profile.weights));
  posts_by_creator[p.creator.value].push_back(p.id);
}

std::optional<HashtagId> Catalog::find_hashtag(std::string_view text) const {
  auto it = hashtag_lookup.find(std::string(text));
  if (it == hashtag_lookup.end()) return std::nullopt;
  return it->second;
}

std::optional<LocaleIndex> Catalog::region_index(std::string_view code) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i] == code) return static_cast<LocaleIndex>(i);
  return std::nullopt;
}

std::optional<LocaleIndex> Catalog::language_index(std::string_view code) const {
  for (std::size_t i = 0; i < languages.size(); ++i)
    if (languages[i] == code) return static_cast<LocaleIndex>(i);
  return std::nullopt;
}

std::int64_t Catalog::max_views() const {
  std::int64_t best = 0;
  for (const auto& p : posts) best = std::max(best, p.counters.views);
  return best;
}

void Catalog::check_integrity() const {
  auto fail = [](const std::string& what) { throw DataError("catalog integrity: " + what); };
  for (std::size_t i = 0; i < topics.size(); ++i) {
    if (topics[i].id.value != i) fail("topic ids not dense");
    if (topics[i].hashtag_pool.empty()) fail("empty hashtag pool");
  }
  for (std::size_t i = 0; i < creators.size(); ++i) {
    const auto& c = creators[i];
    if (c.id.value != i) fail("creator ids not dense");
    if (c.home_region >= regions.size() || c.primary_language >= languages.size())
      fail("creator locale out of range");
    if (c.topic_mixture.size() != topics.size()) fail("creator mixture dimension");
    double sum = std::accumulate(c.topic_mixture.begin(), c.topic_mixture.end(), 0.0);
    if (std::fabs(sum - 1.0) > 1e-9) fail("creator mixture does not sum to 1");
  }
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const auto& p = posts[i];
    if (p.id.value != i) fail("post ids not dense");
    if (p.creator.value >= creators.size()) fail("post creator unknown");
    if (p.sound.value >= sound_weights.size()) fail("post sound unknown");
    if (p.region >= regions.size() || p.language >= languages.size()) fail("post locale out of range");
    if (p.hashtags.empty()) fail("post without hashtags");
    for (auto h : p.hashtags)
      if (h.value >= hashtags.size()) fail("post hashtag unknown");
    if (!std::is_sorted(p.hashtags.begin(), p.hashtags.end()) ||
        std::adjacent_find(p.hashtags.begin(), p.hashtags.end()) != p.hashtags.end())
      fail("post hashtags not a sorted set");
    if (p.counters.views < 0 || p.counters.likes < 0 || p.counters.shares < 0 ||
        p.counters.comments < 0)
      fail("negative counter");
  }
  if (topic_vectors.size() != posts.size()) fail("indexes stale");
}

Catalog generate_catalog(const CatalogConfig& config, std::uint64_t seed) {
  config.validate();
  Catalog cat;
  cat.seed = seed;
  cat.languages = config.languages;
  for (const auto& r : config.regions) cat.regions.push_back(r.code);
  cat.min_hashtags = config.min_hashtags;
  cat.max_hashtags = config.max_hashtags;
  cat.hashtag_zipf = config.hashtag_zipf;
  cat.common_fraction = config.common_fraction;
  cat.locale_mixing = config.locale_mixing;
  cat.language_drift = config.language_drift;
  cat.secondary_topic_rate = config.secondary_topic_rate;
  cat.common_pool = config.common_pool;
  for (const auto& r : config.regions) {
    std::vector<double> row(cat.languages.size(), 0.0);
    for (const auto& [code, weight] : r.languages) row[*cat.language_index(code)] += weight;
    cat.region_languages.push_back(std::move(row));
  }

  for (std::size_t t = 0; t < config.topics.size(); ++t) {
    const auto& spec = config.topics[t];
    Topic topic{TopicId{static_cast<std::uint32_t>(t)}, spec.name, spec.seed_hashtags,
                spec.base_popularity};
    for (std::size_t k = topic.hashtag_pool.size(); k < config.hashtags_per_topic; ++k)
      topic.hashtag_pool.push_back(spec.name + "_" + std::to_string(k));
    cat.topics.push_back(std::move(topic));
  }

  Rng rng = make_rng({seed, hash_string("catalog")});
  std::vector<double> region_weights;
  for (const auto& r : config.regions) region_weights.push_back(r.weight);
  WeightedSampler region_sampler(region_weights);
  std::vector<WeightedSampler> language_samplers;
  for (const auto& row : cat.region_languages) language_samplers.emplace_back(row);
  std::vector<double> topic_weights;
  for (const auto& t : cat.topics) topic_weights.push_back(t.base_popularity);
  WeightedSampler topic_sampler(topic_weights);

  auto activity = zipf_weights(config.creators, config.creator_zipf);
  for (std::size_t i = 0; i < config.creators; ++i) {
    Creator c;
    c.id = CreatorId{static_cast<std::uint32_t>(i)};
    c.home_region = static_cast<LocaleIndex>(region_sampler(rng));
    c.primary_language = static_cast<LocaleIndex>(language_samplers[c.home_region](rng));
    c.topic_mixture.assign(cat.topics.size(), 0.0);
    std::size_t main_topic = topic_sampler(rng);
    double main_share = cat.topics.size() > 1 ? 0.6 + 0.4 * uniform01(rng) : 1.0;
    c.topic_mixture[main_topic] = main_share;
    if (main_share < 1.0) {
      auto other = uniform_index(rng, cat.topics.size() - 1);
      c.topic_mixture[other >= main_topic ? other + 1 : other] = 1.0 - main_share;
    }
    c.activity = activity[i];
    cat.creators.push_back(std::move(c));
  }
  cat.sound_weights = zipf_weights(config.sounds, config.sound_zipf);
  cat.rebuild_indexes();

  PostFactory factory(cat);
  std::lognormal_distribution<double> views_dist(config.views_log_mean, config.views_log_sd);
  cat.posts.reserve(config.posts);
  for (std::size_t i = 0; i < config.posts; ++i) {
    Post p = factory.draw(rng, PostId{static_cast<std::uint32_t>(i)});
    p.upload_tick = -static_cast<std::int64_t>(uniform_index(rng, 201));
    auto views = static_cast<std::int64_t>(std::floor(views_dist(rng)));
    p.counters.views = views;
    p.counters.likes = static_cast<std::int64_t>(views * (0.03 + 0.09 * uniform01(rng)));
    p.counters.shares = static_cast<std::int64_t>(views * (0.001 + 0.009 * uniform01(rng)));
    p.counters.comments = static_cast<std::int64_t>(views * (0.001 + 0.019 * uniform01(rng)));
    auto e = engagement(p.counters);
    p.bucket = e >= config.bucket_t2 ? Bucket::master : e >= config.bucket_t1 ? Bucket::medium
                                                                              : Bucket::small;
    cat.posts.push_back(std::move(p));
    cat.index_post(cat.posts.back());
  }
  return cat;
}

TopicProfile topic_vector(const Post& post, const Catalog& catalog) {
  TopicProfile profile;
  profile.weights.assign(catalog.topic_count(), 0.0);
  std::size_t counted = 0;
  for (auto h : post.hashtags) {
    const auto& info = catalog.hashtags[h.value];
    if (!info.topic) continue;
    profile.weights[info.topic->value] += 1.0;
    ++counted;
  }
  if (counted == 0) {
    profile.uniform_fallback = true;
    std::fill(profile.weights.begin(), profile.weights.end(),
              1.0 / static_cast<double>(catalog.topic_count()));
    return profile;
  }
  for (auto& w : profile.weights) w /= static_cast<double>(counted);
  return profile;
}

std::vector<PostId> spawn_new_posts(Catalog& catalog, std::int64_t tick, std::size_t rate) {
  std::vector<PostId> ids;
  if (rate == 0) return ids;
  Rng rng = make_rng({catalog.seed, hash_string("spawn"), static_cast<std::uint64_t>(tick),
                      catalog.posts.size()});
  PostFactory factory(catalog);
  for (std::size_t i = 0; i < rate; ++i) {
    Post p = factory.draw(rng, PostId{static_cast<std::uint32_t>(catalog.posts.size())});
    p.upload_tick = tick;
    ids.push_back(p.id);
    catalog.posts.push_back(std::move(p));
    catalog.index_post(catalog.posts.back());
  }
  return ids;
}

}  // namespace feedaudit::catalog

#include "feedaudit/platform.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "feedaudit/error.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::platform {

using catalog::Counters;
using catalog::PostId;
using recsys::EventKind;

namespace {

constexpr std::size_t kRecentTicks = 20;
constexpr int kParamsVersion = 1;

void add_counters(Counters& into, const Counters& delta) {
  into.views += delta.views;
  into.likes += delta.likes;
  into.shares += delta.shares;
  into.comments += delta.comments;
}

catalog::LocaleIndex locale_or_throw(std::optional<catalog::LocaleIndex> index,
                                     const std::string& code, const char* what) {
  if (!index) throw ConfigError(std::string("unknown ") + what + " '" + code + "'");
  return *index;
}

}  // namespace

SimulatedPlatform::SimulatedPlatform(Catalog catalog, PlatformParams params, std::uint64_t seed,
                                     std::int64_t tick_scale)
    : catalog_(std::move(catalog)), params_(std::move(params)), seed_(seed), tick_scale_(tick_scale) {
  params_.validate();
  if (tick_scale_ < 0) throw ConfigError("tick scale must be >= 0");
}

SimulatedPlatform::UserSlot& SimulatedPlatform::slot(const std::string& user_id) {
  auto it = users_.find(user_id);
  if (it == users_.end()) throw ProtocolError("unknown user " + user_id);
  return it->second;
}

const UserState& SimulatedPlatform::user(const std::string& user_id) const {
  auto it = users_.find(user_id);
  if (it == users_.end()) throw ProtocolError("unknown user " + user_id);
  return it->second.state;
}

void SimulatedPlatform::open_session(int run_index, const SessionProfile& profile) {
  if (run_index < 0) throw ProtocolError("negative run index");
  advance_to(static_cast<std::int64_t>(run_index) * tick_scale_);
  auto region = locale_or_throw(catalog_.region_index(profile.region), profile.region, "region");
  auto language =
      locale_or_throw(catalog_.language_index(profile.language), profile.language, "language");
  auto it = users_.find(profile.user_id);
  if (it == users_.end()) {
    UserSlot fresh{UserState(profile.user_id, region, language, catalog_.topic_count()),
                   make_rng({seed_, hash_string("session"), hash_string(profile.user_id)}), false};
    it = users_.emplace(profile.user_id, std::move(fresh)).first;
  }
  UserSlot& s = it->second;
  if (s.open) throw ProtocolError("session for " + profile.user_id + " already open");
  s.state.region = region;
  s.state.language = language;
  s.open = true;
}

void SimulatedPlatform::close_session(const std::string& user_id) {
  UserSlot& s = slot(user_id);
  if (!s.open) throw ProtocolError("session for " + user_id + " is not open");
  s.open = false;
}

void SimulatedPlatform::begin_round(int run_index, std::size_t batch_index) {
  std::pair<int, std::size_t> key{run_index, batch_index};
  if (round_ && *round_ == key) return;
  flush();
  round_ = key;
}

void SimulatedPlatform::flush() {
  for (const auto& [id, delta] : pending_) add_counters(catalog_.post(id).counters, delta);
  pending_.clear();
}

FeedBatch SimulatedPlatform::next_batch(const std::string& user_id, int run_index,
                                        std::size_t batch_index) {
  UserSlot& s = slot(user_id);
  if (!s.open) throw ProtocolError("session for " + user_id + " is not open");
  begin_round(run_index, batch_index);

  const std::uint64_t round_seed =
      splitmix64(seed_ ^ splitmix64(hash_string("round") + static_cast<std::uint64_t>(run_index) * 131 +
                                    batch_index));
  auto candidates = recsys::recall(catalog_, s.state, params_, round_seed);
  const double log_max = std::log1p(static_cast<double>(catalog_.max_views()));
  const double noise_scale = params_.noise_scale_at(tick_);
  const double confidence = recsys::interest_confidence(s.state, params_);
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& post = catalog_.post(candidates[i]);
    scores[i] = recsys::score(s.state, post, catalog_.topic_vectors[post.id.value],
                              params_.weights, log_max, s.rng, noise_scale, confidence);
  }
  auto ranked = recsys::rank_and_diversify(catalog_, candidates, scores, params_.k_div);

  FeedBatch batch;
  batch.run_index = run_index;
  batch.user_id = user_id;
  batch.batch_index = batch_index;
  batch.diversity_satisfied = ranked.satisfied;
  batch.posts.reserve(ranked.order.size());
  for (std::size_t idx : ranked.order) {
    const auto& post = catalog_.post(candidates[idx]);
    batch.posts.push_back(recsys::PostSnapshot{post.id, post.creator, post.sound, post.hashtags,
                                               post.language, post.region, post.duration,
                                               post.counters, post.bucket});
    s.state.mark_seen(post.id);
    pending_.emplace_back(post.id, Counters{1, 0, 0, 0});
    Event view;
    view.tick = tick_;
    view.seq = seq_++;
    view.user_id = user_id;
    view.kind = EventKind::view;
    view.post = post.id;
    view.creator = post.creator;
    ledger_.emplace_back(std::move(view));
  }
  return batch;
}

void SimulatedPlatform::send_event(Event event) {
  UserSlot& s = slot(event.user_id);
  if (!s.open) throw ProtocolError("session for " + event.user_id + " is not open");
  const catalog::Post* post = nullptr;
  if (event.post) {
    if (event.post->value >= catalog_.posts.size())
      throw ProtocolError("event references unknown post " + catalog::to_string(*event.post));
    post = &catalog_.post(*event.post);
  }
  switch (event.kind) {
    case EventKind::view:
      throw ProtocolError("views are recorded by serving, not sent");
    case EventKind::like:
    case EventKind::watch:
      if (!post) throw ProtocolError(std::string(recsys::to_string(event.kind)) + " without a post");
      if (!s.state.has_seen(post->id))
        throw ProtocolError(event.user_id + " acted on unserved post " + catalog::to_string(post->id));
      if (event.kind == EventKind::watch && !(event.vvr > 0 && event.vvr <= recsys::kMaxVvr))
        throw ProtocolError("watch fraction outside (0, 4]");
      event.creator = post->creator;
      break;
    case EventKind::follow:
      if (!event.creator && post) event.creator = post->creator;
      if (!event.creator || event.creator->value >= catalog_.creators.size())
        throw ProtocolError("follow of unknown creator");
      break;
  }
  if (event.kind == EventKind::like) pending_.emplace_back(post->id, Counters{0, 1, 0, 0});

  static const catalog::TopicVector kNone;
  const auto& topics = post ? catalog_.topic_vectors[post->id.value] : kNone;
  recsys::update_user_state(s.state, event, topics, post ? post->duration : 0.0,
                            params_.alpha_like, params_.alpha_watch);
  event.tick = tick_;
  event.seq = seq_++;
  ledger_.emplace_back(std::move(event));
}

void SimulatedPlatform::advance_to(std::int64_t tick) {
  if (tick <= tick_) return;
  flush();
  round_.reset();
  while (tick_ < tick) {
    ++tick_;
    run_tick();
  }
}

void SimulatedPlatform::run_tick() {
  auto spawned = catalog::spawn_new_posts(catalog_, tick_, params_.spawn_rate);
  recent_uploads_.insert(recent_uploads_.end(), spawned.begin(), spawned.end());
  const std::size_t keep = params_.spawn_rate * kRecentTicks;
  if (recent_uploads_.size() > keep)
    recent_uploads_.erase(recent_uploads_.begin(),
                          recent_uploads_.end() - static_cast<std::ptrdiff_t>(keep));
  apply_ambient();
  std::size_t promoted = recsys::promote_buckets(catalog_, params_.bucket_t1, params_.bucket_t2);
  ledger_.emplace_back(TickRecord{tick_, seq_++, spawned.size(), promoted});
}

void SimulatedPlatform::apply_ambient() {
  if (params_.ambient_posts == 0 || catalog_.posts.empty()) return;
  Rng rng = make_rng({seed_, hash_string("ambient"), static_cast<std::uint64_t>(tick_)});
  for (std::size_t i = 0; i < params_.ambient_posts; ++i) {
    PostId id;
    if (!recent_uploads_.empty() && uniform01(rng) < 0.5) {
      id = recent_uploads_[uniform_index(rng, recent_uploads_.size())];
    } else {
      id = PostId{static_cast<std::uint32_t>(uniform_index(rng, catalog_.posts.size()))};
    }
    Counters delta;
    delta.views = 1 + static_cast<std::int64_t>(uniform_index(rng, 200));
    const double v = static_cast<double>(delta.views);
    delta.likes = std::llround(v * (0.02 + 0.10 * uniform01(rng)));
    delta.shares = std::llround(v * 0.01 * uniform01(rng));
    delta.comments = std::llround(v * 0.02 * uniform01(rng));
    add_counters(catalog_.post(id).counters, delta);
    ledger_.emplace_back(AmbientRecord{tick_, seq_++, id, delta});
  }
}

std::string dump_params(const PlatformParams& p) {
  using textio::format_exact;
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "weights" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "follow" << YAML::Value << format_exact(p.weights.follow);
  out << YAML::Key << "vvr" << YAML::Value << format_exact(p.weights.vvr);
  out << YAML::Key << "like" << YAML::Value << format_exact(p.weights.like);
  out << YAML::Key << "locale" << YAML::Value << format_exact(p.weights.locale);
  out << YAML::Key << "language" << YAML::Value << format_exact(p.weights.language);
  out << YAML::Key << "pop" << YAML::Value << format_exact(p.weights.pop);
  out << YAML::Key << "noise" << YAML::Value << format_exact(p.weights.noise);
  out << YAML::EndMap;
  out << YAML::Key << "pool_size" << YAML::Value << p.pool_size;
  out << YAML::Key << "explore_fraction" << YAML::Value << format_exact(p.explore_fraction);
  out << YAML::Key << "interest_fraction" << YAML::Value << format_exact(p.interest_fraction);
  out << YAML::Key << "locale_mix" << YAML::Value << format_exact(p.locale_mix);
  out << YAML::Key << "popularity_exponent" << YAML::Value << format_exact(p.popularity_exponent);
  out << YAML::Key << "interest_ramp" << YAML::Value << format_exact(p.interest_ramp);
  out << YAML::Key << "follow_per_creator" << YAML::Value << p.follow_per_creator;
  out << YAML::Key << "k_div" << YAML::Value << p.k_div;
  out << YAML::Key << "alpha_like" << YAML::Value << format_exact(p.alpha_like);
  out << YAML::Key << "alpha_watch" << YAML::Value << format_exact(p.alpha_watch);
  out << YAML::Key << "bucket_t1" << YAML::Value << p.bucket_t1;
  out << YAML::Key << "bucket_t2" << YAML::Value << p.bucket_t2;
  out << YAML::Key << "spawn_rate" << YAML::Value << p.spawn_rate;
  out << YAML::Key << "ambient_posts" << YAML::Value << p.ambient_posts;
  out << YAML::Key << "level_shifts" << YAML::Value << YAML::BeginSeq;
  for (const auto& shift : p.level_shifts) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "tick" << YAML::Value << shift.tick;
    out << YAML::Key << "noise_scale" << YAML::Value << format_exact(shift.noise_scale);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;

  std::ostringstream text;
  textio::write_magic(text, "params", kParamsVersion);
  text << out.c_str() << '\n';
  return text.str();
}

PlatformParams parse_params(const std::string& yaml_text) {
  std::istringstream in(yaml_text);
  textio::expect_magic(in, "params", kParamsVersion, "params");
  PlatformParams p;
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw SchemaError(std::string("params: ") + e.what());
  }
  if (!root.IsMap()) throw SchemaError("params: top level must be a mapping");
  try {
    auto read = [](const YAML::Node& node, const char* key, auto& field) {
      if (node[key]) field = node[key].as<std::decay_t<decltype(field)>>();
    };
    if (auto w = root["weights"]) {
      read(w, "follow", p.weights.follow);
      read(w, "vvr", p.weights.vvr);
      read(w, "like", p.weights.like);
      read(w, "locale", p.weights.locale);
      read(w, "language", p.weights.language);
      read(w, "pop", p.weights.pop);
      read(w, "noise", p.weights.noise);
    }
    read(root, "pool_size", p.pool_size);
    read(root, "explore_fraction", p.explore_fraction);
    read(root, "interest_fraction", p.interest_fraction);
    read(root, "locale_mix", p.locale_mix);
    read(root, "popularity_exponent", p.popularity_exponent);
    read(root, "interest_ramp", p.interest_ramp);
    read(root, "follow_per_creator", p.follow_per_creator);
    read(root, "k_div", p.k_div);
    read(root, "alpha_like", p.alpha_like);
    read(root, "alpha_watch", p.alpha_watch);
    read(root, "bucket_t1", p.bucket_t1);
    read(root, "bucket_t2", p.bucket_t2);
    read(root, "spawn_rate", p.spawn_rate);
    read(root, "ambient_posts", p.ambient_posts);
    if (auto shifts = root["level_shifts"]) {
      for (const auto& node : shifts) {
        recsys::LevelShift shift;
        read(node, "tick", shift.tick);
        read(node, "noise_scale", shift.noise_scale);
        p.level_shifts.push_back(shift);
      }
    }
  } catch (const YAML::Exception& e) {
    throw SchemaError(std::string("params: ") + e.what());
  }
  p.validate();
  return p;
}

PlatformParams load_params(const std::string& path) {
  return parse_params(textio::read_file(path));
}

}  // namespace feedaudit::platform

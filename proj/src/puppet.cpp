#include "feedaudit/puppet.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "feedaudit/error.hpp"

namespace feedaudit::puppet {

using recsys::EventKind;
using recsys::FeedBatch;
using recsys::PostSnapshot;

const char* to_string(Role role) { return role == Role::active ? "active" : "control"; }

const char* to_string(ActionTaken action) {
  switch (action) {
    case ActionTaken::none: return "none";
    case ActionTaken::like: return "like";
    case ActionTaken::follow: return "follow";
    case ActionTaken::watch: return "watch";
  }
  return "?";
}

Role parse_role(std::string_view text) {
  if (text == "active") return Role::active;
  if (text == "control") return Role::control;
  throw SchemaError("unknown role '" + std::string(text) + "'");
}

ActionTaken parse_action_taken(std::string_view text) {
  for (auto a : {ActionTaken::none, ActionTaken::like, ActionTaken::follow, ActionTaken::watch})
    if (text == to_string(a)) return a;
  throw SchemaError("unknown action '" + std::string(text) + "'");
}

std::size_t ScenarioResult::failed_runs() const {
  return static_cast<std::size_t>(
      std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return r.failed; }));
}

std::vector<std::size_t> select_targets(const Action& action, const FeedBatch& batch,
                                        const catalog::Catalog& catalog, Rng& rng) {
  std::vector<std::size_t> out;
  const std::size_t n = batch.posts.size();
  switch (action.selection) {
    case Selection::none:
      break;
    case Selection::random: {
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      const std::size_t k = std::min(action.count, n);
      for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + uniform_index(rng, n - i)]);
      out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
    case Selection::persona: {
      std::unordered_set<std::string> wanted(action.persona.begin(), action.persona.end());
      for (std::size_t i = 0; i < n; ++i)
        for (auto tag : batch.posts[i].hashtags)
          if (wanted.count(catalog.hashtag_text(tag))) {
            out.push_back(i);
            break;
          }
      break;
    }
    case Selection::creator:
      for (std::size_t i = 0; i < n; ++i)
        if (std::find(action.creators.begin(), action.creators.end(),
                      batch.posts[i].creator.value) != action.creators.end())
          out.push_back(i);
      break;
    case Selection::sound:
      for (std::size_t i = 0; i < n; ++i)
        if (std::find(action.sounds.begin(), action.sounds.end(), batch.posts[i].sound.value) !=
            action.sounds.end())
          out.push_back(i);
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

double dwell(const PostSnapshot& post, Role role, bool selected, const Scenario& scenario) {
  if (role == Role::active && selected && scenario.action.kind == ActionKind::vvr)
    return scenario.action.vvr * post.duration;
  return scenario.dwell_baseline;
}

std::optional<catalog::CreatorId> follow_cadence(const Scenario& scenario, int run_index,
                                                 std::size_t batch_index, const FeedBatch& batch,
                                                 const std::set<catalog::CreatorId>& followed,
                                                 Rng& rng) {
  if (scenario.action.kind != ActionKind::follow) return std::nullopt;
  if (run_index % 2 != 0 || batch_index != 0) return std::nullopt;
  std::vector<catalog::CreatorId> fresh;
  for (const auto& p : batch.posts)
    if (!followed.count(p.creator) && std::find(fresh.begin(), fresh.end(), p.creator) == fresh.end())
      fresh.push_back(p.creator);
  if (fresh.empty()) return std::nullopt;
  return fresh[uniform_index(rng, fresh.size())];
}

namespace {

struct PairState {
  std::set<catalog::CreatorId> followed;
};

class RunDriver {
 public:
  RunDriver(const Scenario& scenario, platform::PlatformAdapter& platform,
            const catalog::Catalog& catalog, int run, std::vector<PairState>& pairs,
            std::vector<Observation>& sink)
      : s_(scenario), platform_(platform), catalog_(catalog), run_(run), pairs_(pairs), sink_(sink) {
    for (const auto& user : scenario.users()) record_.users.push_back(UserRunStats{user});
    record_.run_index = run;
    for (std::size_t i = 0; i < 2 * scenario.pairs.size(); ++i) order_.push_back(i);
    if (scenario.permute_order) {
      Rng rng = make_rng({scenario.seed, hash_string("order"), static_cast<std::uint64_t>(run)});
      std::shuffle(order_.begin(), order_.end(), rng);
    }
  }

  RunRecord execute() {
    std::vector<std::string> opened;
    try {
      for (const auto& pair : s_.pairs) {
        platform_.open_session(run_, {pair.active_user, pair.region, pair.language});
        opened.push_back(pair.active_user);
        std::string region = pair.region;
        if (pair.switch_region && run_ % 2 == 1) region = *pair.switch_region;
        platform_.open_session(run_, {pair.control_user, region, pair.language});
        opened.push_back(pair.control_user);
        locale_[pair.active_user] = {pair.region, pair.language};
        locale_[pair.control_user] = {region, pair.language};
      }
      for (std::size_t b = 0; b < s_.batches_per_run; ++b) round(b);
    } catch (const PoolExhausted& e) {
      record_.failed = true;
      record_.error = e.what();
    }
    for (const auto& user : opened) platform_.close_session(user);
    return record_;
  }

 private:
  void round(std::size_t b) {
    const std::size_t n_pairs = s_.pairs.size();
    std::vector<FeedBatch> active(n_pairs), control(n_pairs);
    // slot 2i is pair i's active user, 2i + 1 its control
    for (std::size_t slot : order_) {
      const auto& pair = s_.pairs[slot / 2];
      if (slot % 2 == 0) {
        active[slot / 2] = platform_.next_batch(pair.active_user, run_, b);
      } else {
        control[slot / 2] = platform_.next_batch(pair.control_user, run_, b);
      }
    }

    std::vector<std::vector<char>> selected(n_pairs);
    std::vector<std::optional<std::size_t>> follow_at(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
      selected[i].assign(active[i].posts.size(), 0);
      Rng rng = make_rng({s_.seed, hash_string("select"), static_cast<std::uint64_t>(run_), b, i});
      if (s_.action.kind == ActionKind::follow) {
        auto creator = follow_cadence(s_, run_, b, active[i], pairs_[i].followed, rng);
        if (creator) {
          for (std::size_t j = 0; j < active[i].posts.size(); ++j)
            if (active[i].posts[j].creator == *creator) {
              follow_at[i] = j;
              break;
            }
          pairs_[i].followed.insert(*creator);
        }
      } else if (s_.action.kind != ActionKind::control && s_.action.acts_in(b)) {
        for (auto j : select_targets(s_.action, active[i], catalog_, rng)) selected[i][j] = 1;
      }
    }

    const std::size_t n_posts = active.empty() ? 0 : active.front().posts.size();
    for (std::size_t j = 0; j < n_posts; ++j) {
      for (std::size_t slot : order_) {
        const std::size_t i = slot / 2;
        if (slot % 2 == 1) {
          view(control[i], j, Role::control, ActionTaken::none);
          continue;
        }
        ActionTaken act = ActionTaken::none;
        if (follow_at[i] == j) {
          act = ActionTaken::follow;
        } else if (selected[i][j]) {
          act = s_.action.kind == ActionKind::like ? ActionTaken::like : ActionTaken::watch;
        }
        view(active[i], j, Role::active, act);
      }
    }
  }

  UserRunStats& stats(const std::string& user) {
    for (auto& u : record_.users)
      if (u.user_id == user) return u;
    throw ProtocolError("no stats slot for " + user);
  }

  void view(const FeedBatch& batch, std::size_t j, Role role, ActionTaken act) {
    const PostSnapshot& post = batch.posts[j];
    const bool selected = act == ActionTaken::watch;
    const double seconds = dwell(post, role, selected, s_);

    Observation obs;
    obs.scenario_id = s_.id;
    obs.run_index = run_;
    obs.user_id = batch.user_id;
    obs.role = role;
    obs.region = locale_[batch.user_id].first;
    obs.language = locale_[batch.user_id].second;
    obs.batch_index = batch.batch_index;
    obs.position = batch.batch_index * recsys::kBatchSize + j;
    obs.post = post;
    obs.action = act;
    obs.vvr = selected ? s_.action.vvr : 0.0;
    obs.dwell = seconds;
    sink_.push_back(std::move(obs));

    auto& st = stats(batch.user_id);
    st.dwell_seconds += seconds;

    recsys::Event watch;
    watch.user_id = batch.user_id;
    watch.kind = EventKind::watch;
    watch.post = post.id;
    watch.vvr = std::min(seconds / post.duration, recsys::kMaxVvr);
    platform_.send_event(std::move(watch));
    if (selected) ++st.watches;

    if (act == ActionTaken::like) {
      recsys::Event like;
      like.user_id = batch.user_id;
      like.kind = EventKind::like;
      like.post = post.id;
      platform_.send_event(std::move(like));
      ++st.likes;
    } else if (act == ActionTaken::follow) {
      recsys::Event follow;
      follow.user_id = batch.user_id;
      follow.kind = EventKind::follow;
      follow.post = post.id;
      follow.creator = post.creator;
      platform_.send_event(std::move(follow));
      ++st.follows;
    }
  }

  const Scenario& s_;
  platform::PlatformAdapter& platform_;
  const catalog::Catalog& catalog_;
  int run_;
  std::vector<PairState>& pairs_;
  std::vector<Observation>& sink_;
  RunRecord record_;
  std::vector<std::size_t> order_;
  std::map<std::string, std::pair<std::string, std::string>> locale_;
};

}  // namespace

ScenarioResult run_scenario(const Scenario& scenario, platform::PlatformAdapter& platform,
                            const catalog::Catalog& catalog,
                            const std::function<void(const RunRecord&)>& on_run) {
  scenario.validate();
  ScenarioResult result;
  std::vector<PairState> pairs(scenario.pairs.size());
  for (int run = 0; run < scenario.runs; ++run) {
    RunDriver driver(scenario, platform, catalog, run, pairs, result.observations);
    result.runs.push_back(driver.execute());
    if (on_run) on_run(result.runs.back());
  }
  return result;
}

std::uint64_t platform_seed(const Scenario& scenario, const catalog::Catalog& catalog) {
  return splitmix64(catalog.seed ^ splitmix64(scenario.seed + 0x5ce9a110));
}

Simulation simulate(const Scenario& scenario, const catalog::Catalog& catalog,
                    const recsys::PlatformParams& params,
                    const std::function<void(const RunRecord&)>& on_run) {
  platform::SimulatedPlatform platform(catalog, params, platform_seed(scenario, catalog),
                                       scenario.tick_scale);
  Simulation sim;
  sim.result = run_scenario(scenario, platform, platform.catalog(), on_run);
  platform.flush();
  sim.ledger = platform.ledger();
  return sim;
}

}  // namespace feedaudit::puppet

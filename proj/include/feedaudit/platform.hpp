#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "feedaudit/catalog.hpp"
#include "feedaudit/random.hpp"
#include "feedaudit/recsys.hpp"

namespace feedaudit::platform {

using catalog::Catalog;
using recsys::Event;
using recsys::FeedBatch;
using recsys::PlatformParams;
using recsys::UserState;

/// Who a session logs in as and from where. Region and language may change
/// between runs for the same user.
struct SessionProfile {
  std::string user_id;
  std::string region;
  std::string language;
};

/// Background engagement applied to one post during a tick.
struct AmbientRecord {
  std::int64_t tick = 0;
  std::uint64_t seq = 0;
  catalog::PostId post;
  catalog::Counters delta;
};

struct TickRecord {
  std::int64_t tick = 0;
  std::uint64_t seq = 0;
  std::size_t spawned = 0;
  std::size_t promoted = 0;
};

using LedgerEntry = std::variant<Event, AmbientRecord, TickRecord>;

/// The boundary a live backend would implement.
class PlatformAdapter {
 public:
  virtual ~PlatformAdapter() = default;
  virtual void open_session(int run_index, const SessionProfile& profile) = 0;
  virtual FeedBatch next_batch(const std::string& user_id, int run_index,
                               std::size_t batch_index) = 0;
  /// Tick and sequence number are assigned by the platform.
  virtual void send_event(Event event) = 0;
  virtual void close_session(const std::string& user_id) = 0;
};

class SimulatedPlatform final : public PlatformAdapter {
 public:
  /// `tick_scale` platform ticks elapse between consecutive runs.
  SimulatedPlatform(Catalog catalog, PlatformParams params, std::uint64_t seed,
                    std::int64_t tick_scale = 1);

  void open_session(int run_index, const SessionProfile& profile) override;
  FeedBatch next_batch(const std::string& user_id, int run_index,
                       std::size_t batch_index) override;
  void send_event(Event event) override;
  void close_session(const std::string& user_id) override;

  /// Applies counter changes held back for the current serving round.
  void flush();

  const Catalog& catalog() const { return catalog_; }
  const PlatformParams& params() const { return params_; }
  const std::vector<LedgerEntry>& ledger() const { return ledger_; }
  const UserState& user(const std::string& user_id) const;
  bool has_user(const std::string& user_id) const { return users_.count(user_id) != 0; }
  std::int64_t tick() const { return tick_; }

 private:
  struct UserSlot {
    UserState state;
    Rng rng;
    bool open = false;
  };

  UserSlot& slot(const std::string& user_id);
  void advance_to(std::int64_t tick);
  void run_tick();
  void apply_ambient();
  void begin_round(int run_index, std::size_t batch_index);

  Catalog catalog_;
  PlatformParams params_;
  std::uint64_t seed_;
  std::int64_t tick_scale_;
  std::int64_t tick_ = 0;
  std::uint64_t seq_ = 0;
  std::map<std::string, UserSlot> users_;
  std::vector<LedgerEntry> ledger_;
  // Counter deltas from the current round, applied when the round changes so
  // that every session in a round sees the same catalog state.
  std::vector<std::pair<catalog::PostId, catalog::Counters>> pending_;
  std::optional<std::pair<int, std::size_t>> round_;
  std::vector<catalog::PostId> recent_uploads_;
};

/// YAML rendering of the tunable platform parameters.
std::string dump_params(const PlatformParams& params);

/// Reads parameters written by dump_params; absent keys keep defaults.
/// Unknown top-level sections are ignored.
PlatformParams parse_params(const std::string& yaml_text);

PlatformParams load_params(const std::string& path);

}  // namespace feedaudit::platform

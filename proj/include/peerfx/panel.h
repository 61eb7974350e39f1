#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "peerfx/frame.h"
#include "peerfx/netgraph.h"
#include "peerfx/types.h"

namespace peerfx {

// ---- Adoption schedule ------------------------------------------------------

struct AchievementEvent {
  PlayerId player;
  GameId game;
  std::int64_t unlocked_unix;
};

// Purchase week per player for one game. The first achievement unlock is the
// purchase proxy.
class AdoptionSchedule {
 public:
  AdoptionSchedule() = default;
  AdoptionSchedule(GameId game, std::vector<std::pair<PlayerId, WeekIndex>> entries);

  const GameId& game() const noexcept { return game_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  // Sorted by player id, one entry per player.
  std::span<const std::pair<PlayerId, WeekIndex>> entries() const noexcept { return entries_; }
  std::optional<WeekIndex> purchase_week(PlayerId player) const;

  // Purchase week per node index of `net`; kNever for non-purchasers.
  std::vector<WeekIndex> aligned_to(const TemporalNetwork& net) const;

 private:
  GameId game_;
  std::vector<std::pair<PlayerId, WeekIndex>> entries_;
};

struct ScheduleStats {
  std::size_t events_for_game = 0;
  std::size_t players_after_cutoff = 0;
};

// purchase_week = week of the earliest event for `game`; players whose
// earliest event falls after cutoff_week are excluded (the cutoff week itself
// is included). No events for the game yields an empty schedule.
AdoptionSchedule derive_schedule(std::span<const AchievementEvent> events, const GameId& game,
                                 WeekIndex cutoff_week, const WeekClock& clock = {},
                                 ScheduleStats* stats = nullptr);

// CSV `player_id,game,unlocked_unix`.
std::vector<AchievementEvent> read_achievements_csv(const std::filesystem::path& path);

// Weekly purchase counts over [first, last], zero-filled.
std::vector<std::pair<WeekIndex, std::size_t>> weekly_purchases(const AdoptionSchedule& schedule,
                                                                WeekIndex first, WeekIndex last);

// ---- Treatment / control sampling ----------------------------------------

struct GroupAssignment {
  std::vector<PlayerId> treatment;  // ascending
  std::vector<PlayerId> control;    // ascending
  std::uint64_t seed = 0;
  std::size_t treatment_pool = 0;
  std::size_t control_pool = 0;
  // Sampled treatment players whose friends only purchased after the horizon.
  std::size_t dropped_after_horizon = 0;

  std::vector<PlayerId> members() const;
};

// Pools use the network as of `horizon`. Treatment: at least one friend with
// a purchase week (any week). Control: at least one friend, none purchasing.
// Each pool is sampled without replacement by a seeded partial Fisher-Yates
// over the pool in ascending id order; treatment members whose friends'
// purchases all fall after `horizon` are then dropped. Throws
// InsufficientPool if either pool is smaller than n_per_group.
GroupAssignment assign_groups(const TemporalNetwork& net, const AdoptionSchedule& schedule,
                              std::size_t n_per_group, std::uint64_t seed, WeekIndex horizon);

// ---- Panel --------------------------------------------------------------------

enum class OutcomeMode { Absorbing, Event };
enum class Aggregation { Any, Sum, Mean };

struct PanelWindow {
  WeekIndex start = 0;
  WeekIndex end = 0;
  // Row weeks are (start, end]; the first week only feeds the lag.
  std::size_t row_weeks() const noexcept {
    return end > start ? static_cast<std::size_t>(end - start) : 0;
  }
};

struct PanelConfig {
  OutcomeMode mode = OutcomeMode::Absorbing;
  // Week rule for x_* and z_* columns; unset follows `mode`. Event outcomes
  // with absorbing peer counts and censoring give a linear adoption hazard.
  std::optional<OutcomeMode> peer_mode;
  Aggregation aggregation = Aggregation::Any;
  bool censor_after_purchase = false;

  OutcomeMode peers() const { return peer_mode.value_or(mode); }
};

// Row count of a balanced panel: players x (window weeks - 1).
constexpr std::uint64_t balanced_row_count(std::uint64_t players, std::uint64_t window_weeks) {
  return window_weeks == 0 ? 0 : players * (window_weeks - 1);
}

struct PanelDataset {
  // Columns: y, x_friend, z_sd_lag, x_kp, x_of, z_kp_lag, z_of_lag.
  Frame frame;
  PanelWindow window;
  PanelConfig config;
  std::uint64_t seed = 0;
  std::size_t players = 0;
  WeekIndex lag_dropped_week = 0;
  std::size_t censored_rows = 0;

  std::size_t rows() const noexcept { return frame.rows(); }
};

inline const std::vector<std::string>& panel_columns() {
  static const std::vector<std::string> names{"y",    "x_friend", "z_sd_lag", "x_kp",
                                              "x_of", "z_kp_lag", "z_of_lag"};
  return names;
}

// One row per (player, week) for week in (window.start, window.end], players
// in ascending id order, weeks ascending:
//   y         own purchase (absorbing: week <= t; event: week == t)
//   x_friend  friends j in N(i, t) purchasing (config.peers() week rule)
//   z_sd_lag  second-degree k in SD(i, t-1) purchasing by/at t-1
//   x_kp      x_friend restricted to key-player friends
//   x_of      x_friend restricted to old-friend pairs (i, j)
//   z_kp_lag  z_sd_lag restricted to k reached through a key-player friend
//   z_of_lag  z_sd_lag restricted to k reached through an old friend
// Each is aggregated by config.aggregation (indicator, count or share).
PanelDataset build_panel(const TemporalNetwork& net, const AdoptionSchedule& schedule,
                         const PeerTags& tags, std::span<const PlayerId> players,
                         PanelWindow window, const PanelConfig& config = {},
                         std::uint64_t seed = 0);

PanelDataset build_panel(const TemporalNetwork& net, const AdoptionSchedule& schedule,
                         const PeerTags& tags, const GroupAssignment& groups,
                         PanelWindow window, const PanelConfig& config = {});

std::string to_string(OutcomeMode mode);
std::string to_string(Aggregation aggregation);
OutcomeMode parse_outcome_mode(const std::string& text);
Aggregation parse_aggregation(const std::string& text);

// `player,week,y,x_friend,z_sd_lag,x_kp,x_of,z_kp_lag,z_of_lag` plus a JSON
// sidecar at `<path>.meta.json`.
void write_panel(const PanelDataset& panel, const std::filesystem::path& path);
PanelDataset read_panel(const std::filesystem::path& path);

// ---- Playtime cross-section --------------------------------------------------

struct PlayerCovariates {
  double num_games = 0;
  double num_groups = 0;
  double start_week = 0;
  double owns_smb = 0;
  double owns_nv = 0;
};

struct PlaytimeRow {
  PlayerId player;
  GameId game;
  double log_playtime = 0;  // ln(max(hours, 1))
  int kp_purchase = 0;
  int of_purchase = 0;
  int no_friend_purchase = 0;
  PlayerId first_friend{0};  // meaningful when no_friend_purchase == 0
  double num_games = 0;
  double num_groups = 0;
  double start_week = 0;
  double num_friends = 0;
  double owns_smb = 0;
  double owns_nv = 0;
};

struct PlaytimeCrossSection {
  std::vector<PlaytimeRow> rows;
  std::size_t excluded_no_purchase = 0;
  std::size_t excluded_no_covariates = 0;
  std::size_t excluded_below_minimum = 0;
};

using PlaytimeTable = std::map<std::pair<PlayerId, GameId>, double>;  // minutes
using CovariateTable = std::map<PlayerId, PlayerCovariates>;

// Rows for every (player, game) with recorded playtime >= 1 minute and an
// own purchase week. The first purchasing friend is the friend (as of the
// player's purchase week) with the earliest purchase week strictly before
// it, ties broken by smallest id. num_friends is the degree at `horizon`.
PlaytimeCrossSection build_playtime_crosssection(const TemporalNetwork& net,
                                                 std::span<const AdoptionSchedule> schedules,
                                                 const PeerTags& tags,
                                                 const PlaytimeTable& playtimes,
                                                 const CovariateTable& covariates,
                                                 WeekIndex horizon);

Frame playtime_frame(const PlaytimeCrossSection& section);

// CSV `player_id,game,playtime_minutes`.
PlaytimeTable read_playtime_csv(const std::filesystem::path& path);
// CSV `player_id,num_games,num_groups,start_week,owns_smb,owns_nv`.
CovariateTable read_covariates_csv(const std::filesystem::path& path);

}  // namespace peerfx

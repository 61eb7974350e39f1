#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "peerfx/estimator.h"
#include "peerfx/panel.h"
#include "peerfx/simulate.h"
#include "peerfx/types.h"

namespace peerfx {

// Settings shared by every subcommand. Loaded from a flat `key = value` file
// (`#` starts a comment); each key can also be overridden by a flag.
struct RunConfig {
  // Inputs default to files under data_dir; outputs go to output_dir.
  std::filesystem::path data_dir = "data";
  std::filesystem::path output_dir = "out";
  std::filesystem::path edges;
  std::filesystem::path players;
  std::filesystem::path achievements;
  std::filesystem::path playtime;
  std::filesystem::path covariates;
  std::filesystem::path panel;

  std::int64_t epoch_unix = kDefaultEpochUnix;
  WeekIndex window_start = 116;
  WeekIndex window_end = 269;
  WeekIndex cutoff_week = 269;
  WeekIndex release_week = 116;
  GameId game = "SMB";
  std::vector<GameId> playtime_games;  // empty: just `game`

  OutcomeMode outcome_mode = OutcomeMode::Absorbing;
  std::optional<OutcomeMode> peer_mode;  // unset: follows outcome_mode
  Aggregation aggregation = Aggregation::Any;
  bool censor_after_purchase = false;
  ClusterBy cluster = ClusterBy::Player;
  FixedEffects fixed_effects = FixedEffects::Both;
  HeterogeneityEstimator heterogeneity_estimator = HeterogeneityEstimator::TwoStage;
  int playtime_variant = 0;  // 0: all four columns

  double katz_alpha = 0.0;  // 0: katz_fraction / spectral radius
  double katz_fraction = 0.9;
  double katz_tol = 1e-10;
  int katz_max_iter = 1000;
  double kp_percentile = 0.99;
  int old_friend_min_age = 52;
  int kp_lead_weeks = 4;
  bool kp_connected_only = false;
  std::size_t degree_cap = 2000;

  std::size_t sample_per_group = 0;  // 0: every player in the network
  std::uint64_t seed = 1;
  unsigned threads = 0;

  SimConfig sim;
  SimTruth truth;

  WeekClock clock() const { return {epoch_unix}; }
  std::filesystem::path input(const std::filesystem::path& explicit_path, const char* file) const;
};

struct ConfigKey {
  std::string name;
  std::string doc;
};

// Every key in declaration order with its documentation.
const std::vector<ConfigKey>& config_keys();

// Current value of `key` rendered as config text.
std::string config_value(const RunConfig& config, const std::string& key);

// Throws ConfigError naming the key for unknown keys or malformed values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Parses config text; `source` names it in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

// Cross-field checks (window order, shares, counts). Throws ConfigError.
void validate_config(const RunConfig& config);

// The full default config as commented text.
std::string default_config_text();

}  // namespace peerfx

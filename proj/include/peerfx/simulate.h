#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "peerfx/netgraph.h"
#include "peerfx/panel.h"
#include "peerfx/types.h"

namespace peerfx {

enum class DegreeDistribution { Poisson, PowerLaw };

struct SimConfig {
  std::size_t n_players = 20000;
  std::uint64_t first_id = 1;
  double mean_degree = 2.15;
  DegreeDistribution degree_distribution = DegreeDistribution::Poisson;
  double powerlaw_exponent = 2.5;
  std::size_t degree_cap = 2000;
  WeekIndex release_week = 116;
  int n_weeks = 154;  // window [release_week, release_week + n_weeks - 1]
  // Share of edges formed early enough to count as old friendships at the
  // key-player reference week.
  double old_fraction = 0.5;
  double key_player_share = 0.01;
  int min_age_weeks = 52;
  int lead_weeks = 4;
  GameId game = "SMB";
  std::uint64_t seed = 1;

  WeekIndex window_end() const { return release_week + n_weeks - 1; }
  WeekIndex reference_week() const { return release_week - lead_weeks; }
};

// Planted parameters. Adoption is a linear hazard: a player who does not yet
// own the game buys it in week t with probability
//   clip(baseline_hazard + alpha_i + w_t + beta*x + beta_kp*x_kp + beta_of*x_of)
// where x, x_kp, x_of indicate a friend (key-player friend, old friend) who
// owns the game by the end of week t.
struct SimTruth {
  double beta = 0.05;
  double beta_kp = 0.0;
  double beta_of = 0.0;
  double sigma_alpha = 0.00008;  // sd of the centred uniform alpha_i
  double baseline_hazard = 0.00015;
  double release_spike = 0.0;   // added to w_t in the release week
  std::vector<double> week_effects;  // w_t per window week; filled when empty
  double homophily = 0.0;       // shared-taste loading added to alpha_i
  // Playtime: ln hours = mu + gammas + covariates'lambda + N(0, noise_sd^2).
  double playtime_mu = 2.8;
  double noise_sd = 1.0;
  double gamma_kp = 0.0;
  double gamma_of = 0.0;
  double gamma_nofriend = 0.5;
  std::vector<double> playtime_loadings{0.002, 0.003, -0.001, 0.01, 0.0, 0.1};
  // Diagnostics.
  std::size_t clip_events = 0;
  std::size_t decisions = 0;
};

// Configuration-model network with degree-matched stubs; self-loops and
// multi-edges are rewired by reshuffling the leftover stubs (bounded rounds).
// Throws GenerationFailed if more than 1% of stubs stay unmatched.
TemporalNetwork gen_network(const SimConfig& cfg);

struct AdoptionResult {
  AdoptionSchedule schedule;
  std::vector<double> alpha;  // per node index
};

// Week loop over the window. Each week every non-owner draws one uniform, in
// a seeded random order; a player adopts when the draw falls below the hazard.
// Friends of new adopters are re-evaluated against their same draw until the
// week settles, so each decision reflects every friend who owns the game by
// the end of the week. Fills truth.week_effects and the clip diagnostics.
AdoptionResult simulate_adoption(const TemporalNetwork& net, const PeerTags& tags, SimTruth& truth,
                                 const SimConfig& cfg);

struct PlaytimeRecord {
  PlayerId player;
  GameId game;
  double minutes;
};

struct SimPlaytime {
  std::vector<PlaytimeRecord> playtime;
  CovariateTable covariates;
};

// Covariates for every player, playtime for every purchaser; hours are
// floored at 1.
SimPlaytime simulate_playtime(const TemporalNetwork& net, const AdoptionSchedule& schedule,
                              const PeerTags& tags, const SimTruth& truth, const SimConfig& cfg);

// One full synthetic world.
struct SimWorld {
  TemporalNetwork net;
  CentralityScores katz;
  PeerTags tags;
  AdoptionResult adoption;
  SimTruth truth;
  PanelWindow window;
};

SimWorld simulate_world(const SimConfig& cfg, const SimTruth& truth);

// Writes edges.csv, players.csv, achievements.csv, playtime.csv,
// covariates.csv and truth.json into `dir`, each atomically.
struct SimFiles {
  std::size_t edges = 0;
  std::size_t players = 0;
  std::size_t achievements = 0;
  std::size_t playtime = 0;
};
SimFiles write_simulation(const SimWorld& world, const SimPlaytime& playtime, const SimConfig& cfg,
                          const WeekClock& clock, const std::filesystem::path& dir);

std::string truth_json(const SimTruth& truth, const SimConfig& cfg);

}  // namespace peerfx

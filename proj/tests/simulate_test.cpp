#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "peerfx/error.h"
#include "peerfx/simulate.h"

using namespace peerfx;

namespace {

SimConfig small_config(std::uint64_t seed) {
  SimConfig cfg;
  cfg.n_players = 3000;
  cfg.n_weeks = 40;
  cfg.seed = seed;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("Poisson network hits the mean degree") {
  SimConfig cfg;
  cfg.n_players = 50000;
  cfg.mean_degree = 2.15;
  const auto net = gen_network(cfg);
  CHECK(net.node_count() == 50000);
  const double mean = 2.0 * static_cast<double>(net.edge_count()) / 50000.0;
  CHECK(std::abs(mean / 2.15 - 1.0) < 0.05);
  CHECK(net.stats().self_loops == 0);
  CHECK(net.stats().duplicates == 0);
}

TEST_CASE("power-law degrees respect the cap") {
  SimConfig cfg;
  cfg.n_players = 20000;
  cfg.mean_degree = 4;
  cfg.degree_distribution = DegreeDistribution::PowerLaw;
  cfg.degree_cap = 50;
  const auto net = gen_network(cfg);
  std::size_t top = 0;
  for (TemporalNetwork::NodeIndex i = 0; i < net.node_count(); ++i) top = std::max(top, net.adjacency(i).size());
  CHECK(top <= 50);
  CHECK(top >= 20);
}

TEST_CASE("formation weeks split old and new edges") {
  SimConfig cfg = small_config(3);
  cfg.n_players = 20000;
  cfg.old_fraction = 0.3;
  const auto net = gen_network(cfg);
  const WeekIndex cutoff = cfg.reference_week() - cfg.min_age_weeks;
  std::size_t old = 0;
  const auto edges = net.edges();
  for (const auto& e : edges) {
    old += e.formed <= cutoff;
    CHECK(e.formed >= 0);
    CHECK(e.formed <= cfg.window_end());
  }
  CHECK(std::abs(static_cast<double>(old) / static_cast<double>(edges.size()) - 0.3) < 0.02);
}

TEST_CASE("same seed gives the same world") {
  const SimTruth truth;
  const auto a = simulate_world(small_config(9), truth);
  const auto b = simulate_world(small_config(9), truth);
  const auto ea = a.net.edges(), eb = b.net.edges();
  REQUIRE(ea.size() == eb.size());
  for (std::size_t i = 0; i < ea.size(); ++i) {
    CHECK(ea[i].a == eb[i].a);
    CHECK(ea[i].b == eb[i].b);
    CHECK(ea[i].formed == eb[i].formed);
  }
  CHECK(std::equal(a.adoption.schedule.entries().begin(), a.adoption.schedule.entries().end(),
                   b.adoption.schedule.entries().begin(), b.adoption.schedule.entries().end()));
  CHECK(a.tags.key_players == b.tags.key_players);
  const auto c = simulate_world(small_config(10), truth);
  CHECK(c.adoption.schedule.size() != a.adoption.schedule.size());
}

TEST_CASE("without peers adoption follows the baseline hazard") {
  SimConfig cfg = small_config(4);
  cfg.n_players = 40000;
  SimTruth truth;
  truth.beta = 0.0;
  truth.sigma_alpha = 0.0;
  truth.baseline_hazard = 0.002;
  const auto world = simulate_world(cfg, truth);
  const double expected = 1.0 - std::pow(1.0 - 0.002, cfg.n_weeks);
  const double share = static_cast<double>(world.adoption.schedule.size()) / 40000.0;
  const double sd = std::sqrt(expected * (1 - expected) / 40000.0);
  CHECK(std::abs(share - expected) < 4 * sd);
  for (const auto& [player, week] : world.adoption.schedule.entries()) {
    CHECK(week >= cfg.release_week);
    CHECK(week <= cfg.window_end());
  }
}

TEST_CASE("a positive peer effect raises adoption among friends of adopters") {
  SimConfig cfg = small_config(5);
  cfg.n_players = 20000;
  cfg.mean_degree = 4;
  SimTruth none;
  none.beta = 0.0;
  SimTruth strong;
  strong.beta = 0.2;
  const auto a = simulate_world(cfg, none);
  const auto b = simulate_world(cfg, strong);
  CHECK(b.adoption.schedule.size() > a.adoption.schedule.size() * 2);
}

TEST_CASE("clipped hazards are counted") {
  SimConfig cfg = small_config(6);
  SimTruth truth;
  truth.baseline_hazard = 0.9;
  truth.beta = 0.5;
  const auto world = simulate_world(cfg, truth);
  CHECK(world.truth.clip_events > 0);
  CHECK(world.truth.decisions >= world.truth.clip_events);
}

TEST_CASE("release spike lands in the first week") {
  SimConfig cfg = small_config(7);
  cfg.n_players = 20000;
  SimTruth truth;
  truth.release_spike = 0.05;
  const auto world = simulate_world(cfg, truth);
  REQUIRE(world.truth.week_effects.size() == static_cast<std::size_t>(cfg.n_weeks));
  CHECK(world.truth.week_effects[0] == 0.05);
  const auto series = weekly_purchases(world.adoption.schedule, cfg.release_week, cfg.window_end());
  CHECK(series[0].second > 3 * series[1].second);
}

TEST_CASE("playtime covers every purchaser") {
  const SimConfig cfg = small_config(8);
  const SimTruth truth;
  const auto world = simulate_world(cfg, truth);
  const auto pt = simulate_playtime(world.net, world.adoption.schedule, world.tags, world.truth, cfg);
  CHECK(pt.playtime.size() == world.adoption.schedule.size());
  CHECK(pt.covariates.size() == cfg.n_players);
  for (const auto& r : pt.playtime) CHECK(r.minutes >= 60.0);
}

TEST_CASE("written files round trip and repeat byte for byte") {
  const SimConfig cfg = small_config(12);
  const SimTruth truth;
  const auto world = simulate_world(cfg, truth);
  const auto pt = simulate_playtime(world.net, world.adoption.schedule, world.tags, world.truth, cfg);
  const auto root = std::filesystem::temp_directory_path() / "peerfx_sim_test";
  std::filesystem::remove_all(root);
  const WeekClock clock;
  const auto files = write_simulation(world, pt, cfg, clock, root / "a");
  write_simulation(world, pt, cfg, clock, root / "b");
  for (const char* name : {"edges.csv", "players.csv", "achievements.csv", "playtime.csv", "covariates.csv", "truth.json"}) {
    CHECK(slurp(root / "a" / name) == slurp(root / "b" / name));
  }
  CHECK(files.edges == world.net.edge_count());

  const auto edges = read_edges_csv(root / "a" / "edges.csv", clock);
  CHECK(edges.size() == world.net.edge_count());
  const auto events = read_achievements_csv(root / "a" / "achievements.csv");
  const auto schedule = derive_schedule(events, cfg.game, cfg.window_end(), clock);
  CHECK(std::equal(schedule.entries().begin(), schedule.entries().end(), world.adoption.schedule.entries().begin(),
                   world.adoption.schedule.entries().end()));

  const auto j = nlohmann::json::parse(slurp(root / "a" / "truth.json"));
  CHECK(j.at("beta").get<double>() == truth.beta);
  CHECK(j.at("gamma_nofriend").get<double>() == truth.gamma_nofriend);
  std::filesystem::remove_all(root);
}

TEST_CASE("bad configurations are rejected") {
  SimConfig cfg = small_config(1);
  cfg.key_player_share = 1.5;
  CHECK_THROWS(simulate_world(cfg, SimTruth{}));
  cfg = small_config(1);
  cfg.n_weeks = 0;
  CHECK_THROWS(simulate_world(cfg, SimTruth{}));
}

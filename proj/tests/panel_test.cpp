#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.h"
#include "peerfx/error.h"
#include "peerfx/panel.h"
#include "peerfx/parallel.h"

using namespace peerfx;

namespace {

PlayerId P(std::uint64_t v) { return PlayerId{v}; }

struct World {
  oracle::RandomGraph graph;
  TemporalNetwork net;
  AdoptionSchedule schedule;
  PeerTags tags;
  std::map<PlayerId, WeekIndex> purchase;
};

World random_world(Rng& rng, std::size_t n, std::size_t m) {
  World w;
  w.graph = oracle::random_graph(rng, n, m, 30);
  NetworkOptions options;
  options.nodes = w.graph.nodes;
  w.net = build_network(w.graph.edges, options);
  std::vector<std::pair<PlayerId, WeekIndex>> entries;
  for (const PlayerId id : w.graph.nodes) {
    if (rng.bernoulli(0.4)) {
      const auto week = static_cast<WeekIndex>(5 + rng.below(25));
      entries.push_back({id, week});
      w.purchase[id] = week;
    }
  }
  w.schedule = AdoptionSchedule("G", entries);
  const auto scores = katz_centrality(w.net, 16, 0.05);
  TagOptions options_tags;
  options_tags.percentile = 0.8;
  options_tags.min_age_weeks = 6;
  options_tags.lead_weeks = 2;
  w.tags = tag_peers(w.net, scores, 18, options_tags);
  return w;
}

void check_against_oracle(const World& w, PanelWindow window, const PanelConfig& config) {
  const oracle::Graph ref(w.graph);
  const std::set<PlayerId> kp(w.tags.key_players.begin(), w.tags.key_players.end());
  const auto expected =
      oracle::panel(ref, w.purchase, kp, w.tags.old_friend_cutoff, w.graph.nodes, window, config);
  const auto panel = build_panel(w.net, w.schedule, w.tags, w.graph.nodes, window, config);
  REQUIRE(panel.rows() == expected.size());
  const auto& f = panel.frame;
  const auto y = f.column("y"), x = f.column("x_friend"), z = f.column("z_sd_lag");
  const auto xkp = f.column("x_kp"), xof = f.column("x_of");
  const auto zkp = f.column("z_kp_lag"), zof = f.column("z_of_lag");
  for (std::size_t r = 0; r < expected.size(); ++r) {
    const auto& e = expected[r];
    REQUIRE(f.players()[r] == e.player);
    REQUIRE(f.weeks()[r] == e.week);
    CHECK(y[r] == e.y);
    CHECK(x[r] == doctest::Approx(e.x).epsilon(1e-14));
    CHECK(z[r] == doctest::Approx(e.z).epsilon(1e-14));
    CHECK(xkp[r] == doctest::Approx(e.x_kp).epsilon(1e-14));
    CHECK(xof[r] == doctest::Approx(e.x_of).epsilon(1e-14));
    CHECK(zkp[r] == doctest::Approx(e.z_kp).epsilon(1e-14));
    CHECK(zof[r] == doctest::Approx(e.z_of).epsilon(1e-14));
  }
}

}  // namespace

TEST_CASE("schedule keeps the earliest unlock and applies the cutoff") {
  const WeekClock clock{0};
  const std::int64_t w = kSecondsPerWeek;
  const std::vector<AchievementEvent> events{
      {P(1), "SMB", 5 * w + 10}, {P(1), "SMB", 3 * w}, {P(2), "SMB", 9 * w},
      {P(3), "NV", 2 * w},       {P(4), "SMB", 10 * w}, {P(5), "SMB", 11 * w}};
  ScheduleStats stats;
  const auto s = derive_schedule(events, "SMB", 10, clock, &stats);
  CHECK(s.size() == 3);
  CHECK(*s.purchase_week(P(1)) == 3);
  CHECK(*s.purchase_week(P(2)) == 9);
  CHECK(*s.purchase_week(P(4)) == 10);
  CHECK_FALSE(s.purchase_week(P(5)));
  CHECK_FALSE(s.purchase_week(P(3)));
  CHECK(stats.events_for_game == 5);
  CHECK(stats.players_after_cutoff == 1);
  CHECK(derive_schedule(events, "XYZ", 10, clock).empty());
}

TEST_CASE("weekly purchases are zero filled") {
  const AdoptionSchedule s("G", {{P(1), 5}, {P(2), 5}, {P(3), 7}});
  const auto series = weekly_purchases(s, 4, 8);
  const std::vector<std::pair<WeekIndex, std::size_t>> expected{{4, 0}, {5, 2}, {6, 0}, {7, 1}, {8, 0}};
  CHECK(series == expected);
}

TEST_CASE("weekly purchases match a group-by count") {
  Rng rng(3);
  std::vector<std::pair<PlayerId, WeekIndex>> entries;
  std::map<WeekIndex, std::size_t> counts;
  for (std::uint64_t i = 1; i <= 500; ++i) {
    const auto week = static_cast<WeekIndex>(rng.below(60));
    entries.push_back({P(i), week});
    ++counts[week];
  }
  const AdoptionSchedule s("G", entries);
  std::size_t total = 0;
  for (const auto& [week, n] : weekly_purchases(s, 10, 50)) {
    CHECK(n == counts[week]);
    total += n;
  }
  std::size_t in_window = 0;
  for (const auto& [week, n] : counts) {
    if (week >= 10 && week <= 50) in_window += n;
  }
  CHECK(total == in_window);
}

TEST_CASE("balanced panel row count") {
  CHECK(balanced_row_count(89546, 154) == 13700538ULL);
  CHECK(balanced_row_count(10, 1) == 0);
  CHECK(balanced_row_count(10, 0) == 0);
  Rng rng(9);
  const auto w = random_world(rng, 40, 80);
  const auto panel = build_panel(w.net, w.schedule, w.tags, w.graph.nodes, PanelWindow{4, 20});
  CHECK(panel.rows() == balanced_row_count(40, 17));
  CHECK(panel.lag_dropped_week == 4);
}

TEST_CASE("hand example: friend, second degree and lag") {
  // 1-2 formed week 0, 2-3 formed week 0; 3 buys week 3, 2 buys week 5.
  const std::vector<TemporalEdge> edges{{P(1), P(2), 0}, {P(2), P(3), 0}};
  const auto net = build_network(edges);
  const AdoptionSchedule s("G", {{P(3), 3}, {P(2), 5}});
  PeerTags tags;
  tags.key_players = {P(2)};
  tags.old_friend_pairs = {{P(1), P(2)}};
  const std::vector<PlayerId> players{P(1)};
  const auto panel = build_panel(net, s, tags, players, PanelWindow{1, 7});
  REQUIRE(panel.rows() == 6);
  const auto x = panel.frame.column("x_friend");
  const auto z = panel.frame.column("z_sd_lag");
  const auto zkp = panel.frame.column("z_kp_lag");
  const std::vector<double> ex{0, 0, 0, 1, 1, 1};
  const std::vector<double> ez{0, 0, 1, 1, 1, 1};
  for (std::size_t r = 0; r < 6; ++r) {
    CHECK(x[r] == ex[r]);
    CHECK(z[r] == ez[r]);
    CHECK(zkp[r] == ez[r]);
  }
  PanelConfig event;
  event.mode = OutcomeMode::Event;
  const auto ep = build_panel(net, s, tags, players, PanelWindow{1, 7}, event);
  const auto xe = ep.frame.column("x_friend");
  const auto ze = ep.frame.column("z_sd_lag");
  CHECK(xe[3] == 1);
  CHECK(xe[4] == 0);
  CHECK(ze[2] == 1);
  CHECK(ze[3] == 0);
}

TEST_CASE("panel matches the brute-force oracle in every mode") {
  Rng rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const auto w = random_world(rng, 10 + rng.below(40), 20 + rng.below(120));
    const PanelWindow window{static_cast<WeekIndex>(3 + rng.below(5)), static_cast<WeekIndex>(20 + rng.below(10))};
    for (auto mode : {OutcomeMode::Absorbing, OutcomeMode::Event}) {
      for (auto peers : {std::optional<OutcomeMode>{}, std::optional{OutcomeMode::Absorbing},
                         std::optional{OutcomeMode::Event}}) {
        for (auto agg : {Aggregation::Any, Aggregation::Sum, Aggregation::Mean}) {
          for (bool censor : {false, true}) {
            PanelConfig config;
            config.mode = mode;
            config.peer_mode = peers;
            config.aggregation = agg;
            config.censor_after_purchase = censor;
            check_against_oracle(w, window, config);
          }
        }
      }
    }
  }
}

TEST_CASE("censoring drops rows after the own purchase") {
  const std::vector<TemporalEdge> edges{{P(1), P(2), 0}};
  const auto net = build_network(edges);
  const AdoptionSchedule s("G", {{P(1), 4}, {P(2), 1}});
  PanelConfig config;
  config.censor_after_purchase = true;
  const auto panel = build_panel(net, s, PeerTags{}, std::vector<PlayerId>{P(1), P(2)}, PanelWindow{1, 8}, config);
  // Player 1 keeps weeks 2..4; player 2 bought at the window start.
  CHECK(panel.rows() == 3);
  CHECK(panel.frame.weeks()[2] == 4);
  CHECK(panel.frame.column("y")[2] == 1);
}

TEST_CASE("panel is identical across thread counts") {
  Rng rng(4);
  const auto w = random_world(rng, 2000, 5000);
  set_thread_count(1);
  const auto one = build_panel(w.net, w.schedule, w.tags, w.graph.nodes, PanelWindow{3, 29});
  set_thread_count(4);
  const auto four = build_panel(w.net, w.schedule, w.tags, w.graph.nodes, PanelWindow{3, 29});
  set_thread_count(0);
  for (const auto& name : panel_columns()) {
    const auto a = one.frame.column(name), b = four.frame.column(name);
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST_CASE("group assignment samples both pools reproducibly") {
  // Treatment pool: friends of purchasers 1 and 2. Control: friends of 9 only.
  std::vector<TemporalEdge> edges;
  for (std::uint64_t j = 10; j < 30; ++j) edges.push_back({P(1), P(j), 0});
  for (std::uint64_t j = 30; j < 50; ++j) edges.push_back({P(9), P(j), 0});
  const auto net = build_network(edges);
  const AdoptionSchedule s("G", {{P(1), 3}});
  const auto a = assign_groups(net, s, 5, 42, 10);
  const auto b = assign_groups(net, s, 5, 42, 10);
  CHECK(a.treatment == b.treatment);
  CHECK(a.control == b.control);
  CHECK(a.treatment.size() == 5);
  CHECK(a.control.size() == 5);
  for (const PlayerId id : a.treatment) CHECK((raw(id) >= 10 && raw(id) < 30));
  for (const PlayerId id : a.control) CHECK((raw(id) >= 30 || raw(id) == 9 || raw(id) == 1));
  CHECK(std::is_sorted(a.treatment.begin(), a.treatment.end()));
  CHECK_THROWS_AS(assign_groups(net, s, 25, 42, 10), InsufficientPool);
}

TEST_CASE("panel CSV round trip keeps every column") {
  Rng rng(6);
  const auto w = random_world(rng, 30, 60);
  PanelConfig config;
  config.aggregation = Aggregation::Mean;
  config.mode = OutcomeMode::Event;
  config.peer_mode = OutcomeMode::Absorbing;
  const auto panel = build_panel(w.net, w.schedule, w.tags, w.graph.nodes, PanelWindow{2, 25}, config, 77);
  const auto dir = std::filesystem::temp_directory_path() / "peerfx_panel_test";
  std::filesystem::create_directories(dir);
  write_panel(panel, dir / "panel.csv");
  const auto back = read_panel(dir / "panel.csv");
  CHECK(back.rows() == panel.rows());
  CHECK(back.config.mode == OutcomeMode::Event);
  CHECK(back.config.peers() == OutcomeMode::Absorbing);
  CHECK(back.config.aggregation == Aggregation::Mean);
  CHECK(back.window.start == 2);
  CHECK(back.window.end == 25);
  for (const auto& name : panel_columns()) {
    const auto a = panel.frame.column(name), b = back.frame.column(name);
    for (std::size_t r = 0; r < a.size(); ++r) CHECK(a[r] == b[r]);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("achievement CSV rejects malformed timestamps") {
  const auto dir = std::filesystem::temp_directory_path() / "peerfx_ach_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "a.csv");
    f << "player_id,game,unlocked_unix\n1,SMB,100\n2,SMB,later\n";
  }
  CHECK_THROWS_AS(read_achievements_csv(dir / "a.csv"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("playtime cross-section picks the earliest purchasing friend") {
  // 1 buys at week 10. Friends: 2 (KP, bought 4), 3 (old, bought 4), 4 bought 12.
  const std::vector<TemporalEdge> edges{{P(1), P(2), 0}, {P(1), P(3), 0}, {P(1), P(4), 0}, {P(5), P(4), 0}};
  const auto net = build_network(edges);
  std::vector<AdoptionSchedule> schedules{
      AdoptionSchedule("SMB", {{P(1), 10}, {P(2), 4}, {P(3), 4}, {P(4), 12}, {P(5), 2}})};
  PeerTags tags;
  tags.key_players = {P(2)};
  tags.old_friend_pairs = {{P(4), P(5)}};
  PlaytimeTable playtime{{{P(1), "SMB"}, 600.0}, {{P(4), "SMB"}, 30.0}, {{P(5), "SMB"}, 0.5}};
  CovariateTable covariates{{P(1), {5, 1, 3, 1, 0}}, {P(4), {2, 0, 1, 0, 0}}};
  const auto section = build_playtime_crosssection(net, schedules, tags, playtime, covariates, 20);
  REQUIRE(section.rows.size() == 2);
  const auto& r1 = section.rows[0];
  CHECK(r1.player == P(1));
  CHECK(r1.first_friend == P(2));
  CHECK(r1.kp_purchase == 1);
  CHECK(r1.of_purchase == 0);
  CHECK(r1.no_friend_purchase == 0);
  CHECK(r1.log_playtime == doctest::Approx(std::log(10.0)));
  CHECK(r1.num_friends == 3);
  const auto& r4 = section.rows[1];
  CHECK(r4.first_friend == P(5));
  CHECK(r4.of_purchase == 1);
  CHECK(r4.kp_purchase == 0);
  CHECK(r4.log_playtime == 0.0);
  CHECK(section.excluded_below_minimum == 1);
}

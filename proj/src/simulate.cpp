#include "peerfx/simulate.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "peerfx/csv.h"
#include "peerfx/error.h"
#include "peerfx/random.h"

namespace peerfx {

using NodeIndex = TemporalNetwork::NodeIndex;

namespace {

enum Stream : std::uint64_t { kDegrees, kWiring, kFormation, kAdoption, kPlaytime, kCovariates, kFiles };

std::size_t draw_degree(Rng& rng, const SimConfig& cfg) {
  if (cfg.mean_degree <= 0.0) return 0;
  if (cfg.degree_distribution == DegreeDistribution::Poisson) return rng.poisson(cfg.mean_degree);
  // Continuous Pareto tail rounded down; the scale matches the requested mean
  // before rounding.
  const double gamma = cfg.powerlaw_exponent;
  const double scale = gamma > 2.0 ? cfg.mean_degree * (gamma - 2.0) / (gamma - 1.0) + 0.5 : 1.0;
  const double draw = scale * std::pow(1.0 - rng.uniform(), -1.0 / (gamma - 1.0));
  return static_cast<std::size_t>(std::min(draw, 1e9));
}

void validate(const SimConfig& cfg) {
  if (cfg.n_players == 0) throw InvalidParameter("n_players must be positive");
  if (cfg.n_weeks < 2) throw InvalidParameter("n_weeks must be at least 2");
  if (cfg.mean_degree < 0.0) throw InvalidParameter("mean_degree must be non-negative");
  if (cfg.degree_distribution == DegreeDistribution::PowerLaw && cfg.powerlaw_exponent <= 1.0) {
    throw InvalidParameter("powerlaw exponent must exceed 1");
  }
  auto share = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidParameter(std::string(name) + " must lie in [0, 1]");
  };
  share(cfg.old_fraction, "old_fraction");
  share(cfg.key_player_share, "key_player_share");
  if (cfg.release_week < cfg.lead_weeks) throw InvalidParameter("release_week must be at least lead_weeks");
}

}  // namespace

TemporalNetwork gen_network(const SimConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.n_players;
  std::vector<PlayerId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = PlayerId{cfg.first_id + i};

  Rng degree_rng(derive_seed(cfg.seed, kDegrees));
  std::vector<std::uint32_t> stubs;
  const std::size_t cap = std::min<std::size_t>(cfg.degree_cap, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = std::min(draw_degree(degree_rng, cfg), cap);
    stubs.insert(stubs.end(), d, static_cast<std::uint32_t>(i));
  }
  if (stubs.size() % 2 == 1) stubs.pop_back();
  const std::size_t total_stubs = stubs.size();

  Rng wire_rng(derive_seed(cfg.seed, kWiring));
  std::vector<std::pair<std::uint32_t, std::uint32_t>> accepted;
  accepted.reserve(total_stubs / 2);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(total_stubs / 2);
  for (int round = 0; round < 50 && stubs.size() >= 2; ++round) {
    wire_rng.shuffle(stubs);
    std::vector<std::uint32_t> leftover;
    for (std::size_t s = 0; s + 1 < stubs.size(); s += 2) {
      auto a = stubs[s];
      auto b = stubs[s + 1];
      if (a > b) std::swap(a, b);
      if (a == b || !seen.insert((std::uint64_t{a} << 32) | b).second) {
        leftover.push_back(stubs[s]);
        leftover.push_back(stubs[s + 1]);
      } else {
        accepted.emplace_back(a, b);
      }
    }
    stubs = std::move(leftover);
  }
  if (total_stubs > 0 && static_cast<double>(stubs.size()) > 0.01 * static_cast<double>(total_stubs)) {
    throw GenerationFailed(fmt::format("{} of {} stubs could not be wired without self-loops or multi-edges",
                                       stubs.size(), total_stubs));
  }
  std::sort(accepted.begin(), accepted.end());

  // Old friendships form before the tagging cutoff, the rest afterwards up to
  // the end of the window.
  const WeekIndex cutoff = cfg.reference_week() - cfg.min_age_weeks;
  const WeekIndex last = cfg.window_end();
  Rng formed_rng(derive_seed(cfg.seed, kFormation));
  std::vector<TemporalEdge> edges;
  edges.reserve(accepted.size());
  for (const auto& [a, b] : accepted) {
    WeekIndex formed;
    if (cutoff >= 0 && formed_rng.bernoulli(cfg.old_fraction)) {
      formed = static_cast<WeekIndex>(formed_rng.below(static_cast<std::uint64_t>(cutoff) + 1));
    } else {
      const WeekIndex lo = std::max<WeekIndex>(cutoff + 1, 0);
      formed = lo + static_cast<WeekIndex>(formed_rng.below(static_cast<std::uint64_t>(last - lo) + 1));
    }
    edges.push_back({ids[a], ids[b], formed});
  }
  NetworkOptions options;
  options.nodes = ids;
  options.degree_cap = cfg.degree_cap;
  return build_network(edges, options);
}

AdoptionResult simulate_adoption(const TemporalNetwork& net, const PeerTags& tags, SimTruth& truth,
                                 const SimConfig& cfg) {
  validate(cfg);
  const std::size_t n = net.node_count();
  Rng rng(derive_seed(cfg.seed, kAdoption));

  std::vector<double> u(n, 1.0), alpha(n), taste(n);
  const double half_width = truth.sigma_alpha * std::sqrt(3.0);
  for (std::size_t i = 0; i < n; ++i) {
    alpha[i] = half_width * (2.0 * rng.uniform() - 1.0);
    taste[i] = rng.uniform();
  }
  if (truth.homophily != 0.0) {
    for (NodeIndex i = 0; i < n; ++i) {
      const auto friends = net.adjacency(i);
      if (friends.empty()) continue;
      double shared = 0.0;
      for (const auto& j : friends) shared += taste[j.node];
      alpha[i] += truth.homophily * shared / static_cast<double>(friends.size());
    }
  }

  const WeekIndex first = cfg.release_week;
  const WeekIndex last = cfg.window_end();
  const std::size_t weeks = static_cast<std::size_t>(last - first + 1);
  if (truth.week_effects.size() != weeks) {
    truth.week_effects.assign(weeks, 0.0);
    truth.week_effects[0] = truth.release_spike;
  }

  std::vector<char> key_player(n, 0);
  for (const PlayerId id : tags.key_players) {
    if (const auto index = net.index_of(id)) key_player[*index] = 1;
  }

  std::vector<WeekIndex> purchase(n, kNever);
  std::vector<NodeIndex> order(n);
  for (NodeIndex i = 0; i < n; ++i) order[i] = i;
  std::vector<NodeIndex> queue;
  std::vector<char> queued(n, 0);
  truth.clip_events = 0;
  truth.decisions = 0;

  auto hazard = [&](NodeIndex i, WeekIndex t, double w) {
    bool any = false, kp = false, of = false;
    const PlayerId id = net.id_at(i);
    for (const auto& j : net.adjacency_at(i, t)) {
      if (purchase[j.node] > t) continue;
      any = true;
      kp = kp || key_player[j.node] != 0;
      of = of || tags.is_old_friend(id, net.id_at(j.node));
    }
    return truth.baseline_hazard + alpha[i] + w + (any ? truth.beta : 0.0) + (kp ? truth.beta_kp : 0.0) +
           (of ? truth.beta_of : 0.0);
  };
  // Clip diagnostics count the first evaluation of each player-week.
  auto adopts = [&](NodeIndex i, WeekIndex t, double w, bool count) {
    const double h = hazard(i, t, w);
    if (count) {
      ++truth.decisions;
      if (h < 0.0 || h > 1.0) ++truth.clip_events;
    }
    return u[i] < std::clamp(h, 0.0, 1.0);
  };

  for (WeekIndex t = first; t <= last; ++t) {
    const double w = truth.week_effects[static_cast<std::size_t>(t - first)];
    rng.shuffle(order);
    queue.clear();
    for (const NodeIndex i : order) {
      if (purchase[i] != kNever) continue;
      u[i] = rng.uniform();
      queue.push_back(i);
      queued[i] = 1;
    }
    const std::size_t initial = queue.size();
    // Re-visit friends of each new owner until the week settles.
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const NodeIndex i = queue[q];
      queued[i] = 0;
      if (purchase[i] != kNever || !adopts(i, t, w, q < initial)) continue;
      purchase[i] = t;
      for (const auto& j : net.adjacency_at(i, t)) {
        if (purchase[j.node] == kNever && queued[j.node] == 0) {
          queued[j.node] = 1;
          queue.push_back(j.node);
        }
      }
    }
  }

  std::vector<std::pair<PlayerId, WeekIndex>> entries;
  for (NodeIndex i = 0; i < n; ++i) {
    if (purchase[i] != kNever) entries.emplace_back(net.id_at(i), purchase[i]);
  }
  return {AdoptionSchedule(cfg.game, std::move(entries)), std::move(alpha)};
}

SimPlaytime simulate_playtime(const TemporalNetwork& net, const AdoptionSchedule& schedule,
                              const PeerTags& tags, const SimTruth& truth, const SimConfig& cfg) {
  const std::size_t n = net.node_count();
  const auto purchase = schedule.aligned_to(net);
  const WeekIndex horizon = cfg.window_end();
  Rng cov_rng(derive_seed(cfg.seed, kCovariates));
  Rng rng(derive_seed(cfg.seed, kPlaytime));

  SimPlaytime out;
  std::vector<PlayerCovariates> covs(n);
  for (NodeIndex i = 0; i < n; ++i) {
    auto& c = covs[i];
    c.num_games = static_cast<double>(cov_rng.poisson(20.0));
    c.num_groups = static_cast<double>(cov_rng.poisson(4.0));
    c.start_week = static_cast<double>(cov_rng.below(static_cast<std::uint64_t>(cfg.release_week) + 1));
    c.owns_smb = purchase[i] != kNever && cfg.game == "SMB" ? 1.0 : 0.0;
    c.owns_nv = cfg.game == "NV" ? (purchase[i] != kNever ? 1.0 : 0.0) : (cov_rng.bernoulli(0.3) ? 1.0 : 0.0);
    out.covariates[net.id_at(i)] = c;
  }

  const auto& lambda = truth.playtime_loadings;
  auto loading = [&](std::size_t k) { return k < lambda.size() ? lambda[k] : 0.0; };
  for (NodeIndex i = 0; i < n; ++i) {
    const WeekIndex own = purchase[i];
    if (own == kNever) continue;
    WeekIndex first_week = kNever;
    PlayerId first{0};
    for (const auto& j : net.adjacency_at(i, own)) {
      const WeekIndex p = purchase[j.node];
      const PlayerId id = net.id_at(j.node);
      if (p < own && (p < first_week || (p == first_week && id < first))) {
        first_week = p;
        first = id;
      }
    }
    const PlayerId id = net.id_at(i);
    const bool none = first_week == kNever;
    const bool kp = !none && tags.is_key_player(first);
    const bool of = !none && tags.is_old_friend(id, first);
    const auto& c = covs[i];
    const double friends = static_cast<double>(net.degree_at(i, horizon));
    const double log_hours = truth.playtime_mu + (kp ? truth.gamma_kp : 0.0) + (of ? truth.gamma_of : 0.0) +
                             (none ? truth.gamma_nofriend : 0.0) + loading(0) * c.num_games +
                             loading(1) * c.num_groups + loading(2) * c.start_week + loading(3) * friends +
                             loading(4) * c.owns_smb + loading(5) * c.owns_nv + truth.noise_sd * rng.normal();
    const double hours = std::max(std::exp(log_hours), 1.0);
    out.playtime.push_back({id, schedule.game(), hours * 60.0});
  }
  return out;
}

SimWorld simulate_world(const SimConfig& cfg, const SimTruth& truth) {
  validate(cfg);
  SimWorld world;
  world.truth = truth;
  world.net = gen_network(cfg);
  const WeekIndex reference = cfg.reference_week();
  world.katz = katz_centrality(world.net, reference, default_katz_alpha(world.net, reference));
  TagOptions options;
  options.percentile = std::clamp(1.0 - cfg.key_player_share, 1e-9, 1.0 - 1e-9);
  options.min_age_weeks = cfg.min_age_weeks;
  options.lead_weeks = cfg.lead_weeks;
  world.tags = tag_peers(world.net, world.katz, cfg.release_week, options);
  world.adoption = simulate_adoption(world.net, world.tags, world.truth, cfg);
  world.window = {cfg.release_week, cfg.window_end()};
  return world;
}

std::string truth_json(const SimTruth& truth, const SimConfig& cfg) {
  nlohmann::ordered_json j;
  j["beta"] = truth.beta;
  j["beta_kp"] = truth.beta_kp;
  j["beta_of"] = truth.beta_of;
  j["sigma_alpha"] = truth.sigma_alpha;
  j["baseline_hazard"] = truth.baseline_hazard;
  j["release_spike"] = truth.release_spike;
  j["homophily"] = truth.homophily;
  j["week_effects"] = truth.week_effects;
  j["playtime_mu"] = truth.playtime_mu;
  j["noise_sd"] = truth.noise_sd;
  j["gamma_kp"] = truth.gamma_kp;
  j["gamma_of"] = truth.gamma_of;
  j["gamma_nofriend"] = truth.gamma_nofriend;
  j["playtime_loadings"] = truth.playtime_loadings;
  j["clip_events"] = truth.clip_events;
  j["decisions"] = truth.decisions;
  j["clip_rate"] = truth.decisions == 0 ? 0.0
                                        : static_cast<double>(truth.clip_events) / static_cast<double>(truth.decisions);
  auto& c = j["config"];
  c["n_players"] = cfg.n_players;
  c["first_id"] = cfg.first_id;
  c["mean_degree"] = cfg.mean_degree;
  c["degree_distribution"] = cfg.degree_distribution == DegreeDistribution::Poisson ? "poisson" : "powerlaw";
  c["powerlaw_exponent"] = cfg.powerlaw_exponent;
  c["degree_cap"] = cfg.degree_cap;
  c["release_week"] = cfg.release_week;
  c["n_weeks"] = cfg.n_weeks;
  c["old_fraction"] = cfg.old_fraction;
  c["key_player_share"] = cfg.key_player_share;
  c["min_age_weeks"] = cfg.min_age_weeks;
  c["lead_weeks"] = cfg.lead_weeks;
  c["game"] = cfg.game;
  c["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

SimFiles write_simulation(const SimWorld& world, const SimPlaytime& playtime, const SimConfig& cfg,
                          const WeekClock& clock, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SimFiles counts;
  Rng rng(derive_seed(cfg.seed, kFiles));
  auto within_week = [&] { return static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(kSecondsPerWeek))); };

  {
    AtomicFile file(dir / "edges.csv");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "player_a,player_b,formed_unix\n");
    for (const auto& e : world.net.edges()) {
      fmt::format_to(std::back_inserter(buf), "{},{},{}\n", raw(e.a), raw(e.b), clock.start_of(e.formed) + within_week());
      ++counts.edges;
    }
    file.write({buf.data(), buf.size()});
    file.commit();
  }

  std::map<PlayerId, double> minutes;
  for (const auto& p : playtime.playtime) minutes[p.player] += p.minutes;
  {
    AtomicFile file(dir / "players.csv");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "player_id,total_playtime_minutes\n");
    for (const PlayerId id : world.net.nodes()) {
      const auto cov = playtime.covariates.find(id);
      double total = 60.0 * (1.0 + (cov == playtime.covariates.end() ? 0.0 : cov->second.num_games));
      if (const auto it = minutes.find(id); it != minutes.end()) total += it->second;
      fmt::format_to(std::back_inserter(buf), "{},{}\n", raw(id), total);
      ++counts.players;
    }
    file.write({buf.data(), buf.size()});
    file.commit();
  }

  {
    // The first unlock marks the purchase; some players unlock a second
    // achievement later on.
    AtomicFile file(dir / "achievements.csv");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "player_id,game,unlocked_unix\n");
    for (const auto& [id, week] : world.adoption.schedule.entries()) {
      const std::int64_t first = clock.start_of(week) + within_week();
      fmt::format_to(std::back_inserter(buf), "{},{},{}\n", raw(id), cfg.game, first);
      ++counts.achievements;
      if (rng.bernoulli(0.5)) {
        fmt::format_to(std::back_inserter(buf), "{},{},{}\n", raw(id), cfg.game,
                       first + static_cast<std::int64_t>(rng.below(8 * kSecondsPerWeek)));
        ++counts.achievements;
      }
    }
    file.write({buf.data(), buf.size()});
    file.commit();
  }

  {
    AtomicFile file(dir / "playtime.csv");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "player_id,game,playtime_minutes\n");
    for (const auto& p : playtime.playtime) {
      fmt::format_to(std::back_inserter(buf), "{},{},{}\n", raw(p.player), p.game, p.minutes);
      ++counts.playtime;
    }
    file.write({buf.data(), buf.size()});
    file.commit();
  }

  {
    AtomicFile file(dir / "covariates.csv");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "player_id,num_games,num_groups,start_week,owns_smb,owns_nv\n");
    for (const auto& [id, c] : playtime.covariates) {
      fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{}\n", raw(id), c.num_games, c.num_groups,
                     c.start_week, c.owns_smb, c.owns_nv);
    }
    file.write({buf.data(), buf.size()});
    file.commit();
  }

  write_file_atomic(dir / "truth.json", truth_json(world.truth, cfg));
  return counts;
}

}  // namespace peerfx

#include "peerfx/cli.h"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "peerfx/config.h"
#include "peerfx/csv.h"
#include "peerfx/error.h"
#include "peerfx/parallel.h"
#include "peerfx/report.h"

namespace peerfx {

namespace {

std::string flag_name(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '_', '-');
  return "--" + out;
}

std::filesystem::path existing(const std::filesystem::path& path, const char* key) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(fmt::format("{}: input file {} does not exist", key, path.string()));
  }
  return path;
}

struct Inputs {
  TemporalNetwork net;
  std::vector<AchievementEvent> events;
  AdoptionSchedule schedule;
  CentralityScores katz;
  PeerTags tags;
};

TemporalNetwork load_network(const RunConfig& c) {
  const auto edges = read_edges_csv(existing(c.input(c.edges, "edges.csv"), "edges"), c.clock());
  NetworkOptions options;
  options.degree_cap = c.degree_cap;
  const auto players_path = c.input(c.players, "players.csv");
  if (!c.players.empty()) existing(players_path, "players");
  if (std::filesystem::exists(players_path)) {
    std::set<PlayerId> dropped;
    for (const auto& record : read_nodes_csv(players_path)) {
      if (record.total_playtime_minutes > 0.0) {
        options.nodes.push_back(record.id);
      } else {
        dropped.insert(record.id);
      }
    }
    if (!dropped.empty()) {
      options.keep = [dropped = std::move(dropped)](PlayerId id) { return dropped.count(id) == 0; };
    }
  }
  return build_network(edges, options);
}

PeerTags compute_tags(const RunConfig& c, const TemporalNetwork& net, CentralityScores& scores) {
  const WeekIndex reference = c.release_week - c.kp_lead_weeks;
  const double alpha = c.katz_alpha > 0.0 ? c.katz_alpha : default_katz_alpha(net, reference, c.katz_fraction);
  scores = katz_centrality(net, reference, alpha, c.katz_tol, c.katz_max_iter);
  TagOptions options;
  options.percentile = c.kp_percentile;
  options.min_age_weeks = c.old_friend_min_age;
  options.lead_weeks = c.kp_lead_weeks;
  options.connected_only = c.kp_connected_only;
  return tag_peers(net, scores, c.release_week, options);
}

Inputs load_inputs(const RunConfig& c) {
  Inputs in;
  in.net = load_network(c);
  in.events = read_achievements_csv(existing(c.input(c.achievements, "achievements.csv"), "achievements"));
  in.schedule = derive_schedule(in.events, c.game, c.cutoff_week, c.clock());
  in.tags = compute_tags(c, in.net, in.katz);
  return in;
}

PanelDataset make_panel(const RunConfig& c) {
  if (!c.panel.empty()) return read_panel(existing(c.panel, "panel"));
  const Inputs in = load_inputs(c);
  const PanelWindow window{c.window_start, c.window_end};
  PanelConfig config;
  config.mode = c.outcome_mode;
  config.peer_mode = c.peer_mode;
  config.aggregation = c.aggregation;
  config.censor_after_purchase = c.censor_after_purchase;
  if (c.sample_per_group > 0) {
    const auto groups = assign_groups(in.net, in.schedule, c.sample_per_group, c.seed, c.window_end);
    return build_panel(in.net, in.schedule, in.tags, groups, window, config);
  }
  return build_panel(in.net, in.schedule, in.tags, in.net.nodes(), window, config, c.seed);
}

void require_rows(const PanelDataset& panel) {
  if (panel.rows() == 0) throw EmptyPanel("empty panel: the window and sample select no rows");
}

std::filesystem::path output(const RunConfig& c, const char* file) {
  std::filesystem::create_directories(c.output_dir);
  return c.output_dir / file;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  SimConfig sim = c.sim;
  sim.release_week = c.release_week;
  sim.n_weeks = c.window_end - c.release_week + 1;
  sim.seed = c.seed;
  sim.game = c.game;
  sim.min_age_weeks = c.old_friend_min_age;
  sim.lead_weeks = c.kp_lead_weeks;
  sim.degree_cap = c.degree_cap;
  sim.key_player_share = 1.0 - c.kp_percentile;
  const SimWorld world = simulate_world(sim, c.truth);
  const SimPlaytime playtime = simulate_playtime(world.net, world.adoption.schedule, world.tags, world.truth, sim);
  const SimFiles files = write_simulation(world, playtime, sim, c.clock(), c.data_dir);
  out << fmt::format("simulated {} players, {} edges, {} purchasers ({} achievement rows, {} playtime rows) in {}\n",
                     files.players, files.edges, world.adoption.schedule.size(), files.achievements, files.playtime,
                     c.data_dir.string());
  return 0;
}

int cmd_build_panel(const RunConfig& c, std::ostream& out) {
  const PanelDataset panel = make_panel(c);
  require_rows(panel);
  const auto path = output(c, "panel.csv");
  write_panel(panel, path);
  out << fmt::format("wrote {} rows for {} players to {}\n", panel.rows(), panel.players, path.string());
  return 0;
}

int cmd_estimate(const RunConfig& c, std::ostream& out) {
  const PanelDataset panel = make_panel(c);
  require_rows(panel);
  DesignSpec base;
  base.cluster = c.cluster;
  base.fixed_effects = c.fixed_effects;

  BaselineFits fits;
  DesignSpec ols = base;
  ols.endogenous = {"x_friend"};
  fits.ols = ols_fit(ols, panel.frame);
  DesignSpec rf = base;
  rf.endogenous = {"z_sd_lag"};
  fits.reduced_form = ols_fit(rf, panel.frame);
  DesignSpec fs = base;
  fs.outcome = "x_friend";
  fs.endogenous = {"z_sd_lag"};
  fits.first_stage = ols_fit(fs, panel.frame);
  DesignSpec iv = base;
  iv.endogenous = {"x_friend"};
  iv.instruments = {"z_sd_lag"};
  fits.iv = tsls_fit(iv, panel.frame);
  fits.ar_stat = fits.iv.ar_stat.value_or(0.0);

  const std::string report = render_baseline(fits, c.game,
                                             c.fixed_effects == FixedEffects::Both || c.fixed_effects == FixedEffects::Player,
                                             c.fixed_effects == FixedEffects::Both || c.fixed_effects == FixedEffects::Week);
  write_file_atomic(output(c, "estimates.txt"), report);
  write_file_atomic(output(c, "estimates.csv"), fits_csv({{"ols", &fits.ols},
                                                          {"reduced_form", &fits.reduced_form},
                                                          {"first_stage", &fits.first_stage},
                                                          {"iv", &fits.iv}}));
  out << report;
  return 0;
}

int cmd_heterogeneity(const RunConfig& c, std::ostream& out) {
  const PanelDataset panel = make_panel(c);
  require_rows(panel);
  const FitResult fit = heterogeneity_fit(panel.frame, c.heterogeneity_estimator, c.cluster, c.fixed_effects);
  const std::string report = render_heterogeneity(fit, c.game);
  write_file_atomic(output(c, "heterogeneity.txt"), report);
  write_file_atomic(output(c, "heterogeneity.csv"), fits_csv({{"heterogeneity", &fit}}));
  out << report;
  return 0;
}

int cmd_playtime(const RunConfig& c, std::ostream& out) {
  Inputs in = load_inputs(c);
  const auto games = c.playtime_games.empty() ? std::vector<GameId>{c.game} : c.playtime_games;
  std::vector<AdoptionSchedule> schedules;
  for (const auto& game : games) schedules.push_back(derive_schedule(in.events, game, c.cutoff_week, c.clock()));
  const auto playtimes = read_playtime_csv(existing(c.input(c.playtime, "playtime.csv"), "playtime"));
  const auto covariates = read_covariates_csv(existing(c.input(c.covariates, "covariates.csv"), "covariates"));
  const auto section = build_playtime_crosssection(in.net, schedules, in.tags, playtimes, covariates, c.window_end);
  if (section.rows.empty()) throw EmptyPanel("empty panel: no purchaser has recorded playtime");
  const Frame frame = playtime_frame(section);

  std::vector<int> variants;
  if (c.playtime_variant == 0) {
    variants = {1, 2, 3, 4};
  } else {
    variants = {c.playtime_variant};
  }
  std::vector<FitResult> fits;
  for (const int v : variants) fits.push_back(playtime_fit(frame, v));
  std::vector<std::pair<std::string, const FitResult*>> labelled;
  for (const auto& fit : fits) labelled.emplace_back(fit.model, &fit);
  const std::string report = render_playtime(fits);
  write_file_atomic(output(c, "playtime.txt"), report);
  write_file_atomic(output(c, "playtime.csv"), fits_csv(labelled));
  out << report;
  return 0;
}

int cmd_katz(const RunConfig& c, std::ostream& out) {
  const TemporalNetwork net = load_network(c);
  CentralityScores scores;
  const PeerTags tags = compute_tags(c, net, scores);
  std::string text = "player_id,katz,key_player\n";
  for (std::size_t i = 0; i < scores.ids.size(); ++i) {
    text += fmt::format("{},{},{}\n", raw(scores.ids[i]), scores.scores[i], tags.is_key_player(scores.ids[i]) ? 1 : 0);
  }
  const auto path = output(c, "katz.csv");
  write_file_atomic(path, text);
  out << fmt::format("week {}: alpha {:.6g}, {} iterations{}, {} key players (threshold {:.6g}), {} old-friend pairs\n",
                     scores.asof, scores.alpha, scores.iterations, scores.converged ? "" : " (not converged)",
                     tags.key_players.size(), tags.key_player_threshold, tags.old_friend_pairs.size());
  return 0;
}

int cmd_series(const RunConfig& c, std::ostream& out) {
  const auto events = read_achievements_csv(existing(c.input(c.achievements, "achievements.csv"), "achievements"));
  const auto schedule = derive_schedule(events, c.game, c.cutoff_week, c.clock());
  std::string text = "week,purchases\n";
  std::size_t total = 0;
  for (const auto& [week, count] : weekly_purchases(schedule, c.window_start, c.window_end)) {
    text += fmt::format("{},{}\n", week, count);
    total += count;
  }
  const auto path = output(c, "series.csv");
  write_file_atomic(path, text);
  out << fmt::format("{} purchases over weeks {}-{} written to {}\n", total, c.window_start, c.window_end,
                     path.string());
  return 0;
}

using Command = int (*)(const RunConfig&, std::ostream&);

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peer-effect estimation on temporal friendship networks", "peerfx"};
  app.require_subcommand(1);
  const RunConfig defaults;

  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"simulate", "write a synthetic network, purchases and playtime with planted effects", cmd_simulate},
      {"build-panel", "build the player-week panel and write it as CSV", cmd_build_panel},
      {"estimate", "OLS, reduced form, first stage and 2SLS of the peer effect", cmd_estimate},
      {"heterogeneity", "key-player and old-friend peer effects", cmd_heterogeneity},
      {"playtime", "playtime regressions on the type of the first purchasing friend", cmd_playtime},
      {"katz", "Katz centrality and key-player tags at the reference week", cmd_katz},
      {"series", "weekly purchase counts over the window", cmd_series},
  };

  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::map<CLI::App*, Command> handlers;
  bool print_config = false;
  for (const auto& [name, doc, handler] : commands) {
    CLI::App* sub = app.add_subcommand(name, doc);
    sub->add_option("-c,--config", config_path, "config file (key = value lines, # comments)");
    for (const auto& key : config_keys()) {
      sub->add_option_function<std::string>(
          flag_name(key.name), [&overrides, name = key.name](const std::string& v) { overrides[name] = v; },
          fmt::format("{} (default: {})", key.doc, config_value(defaults, key.name)));
    }
    handlers[sub] = handler;
  }
  app.add_subcommand("config", "print the default configuration file")->callback([&] { print_config = true; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (print_config) {
    out << default_config_text();
    return 0;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& [key, value] : overrides) {
      try {
        set_config_value(config, key, value);
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", flag_name(key), e.what()));
      }
    }
    validate_config(config);
    set_thread_count(config.threads);
    for (const auto& [sub, handler] : handlers) {
      if (sub->parsed()) return handler(config, out);
    }
    return 2;
  } catch (const ConfigError& e) {
    err << "error [ConfigError]: " << e.what() << "\n";
    return 2;
  } catch (const EmptyPanel& e) {
    err << "error [EmptyPanel]: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error [" << e.kind() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace peerfx

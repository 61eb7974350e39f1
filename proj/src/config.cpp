#include "peerfx/config.h"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "peerfx/csv.h"
#include "peerfx/error.h"

namespace peerfx {

namespace {

struct Entry {
  ConfigKey key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError(fmt::format("{}: expected {}, got '{}'", key, expected, value));
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return std::string(text.substr(first, last - first + 1));
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0;
  if (!parse_double(value, out)) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "true or false");
}

std::string real_text(double v) { return fmt::format("{}", v); }

template <typename T>
Entry integer(std::string name, std::string doc, T RunConfig::*field) {
  return {{name, std::move(doc)},
          [field](const RunConfig& c) { return fmt::format("{}", c.*field); },
          [field, name](RunConfig& c, const std::string& v) { c.*field = parse_integer<T>(name, v); }};
}

template <typename T, typename Owner>
Entry nested_integer(std::string name, std::string doc, Owner RunConfig::*owner, T Owner::*field) {
  return {{name, std::move(doc)},
          [owner, field](const RunConfig& c) { return fmt::format("{}", c.*owner.*field); },
          [owner, field, name](RunConfig& c, const std::string& v) { c.*owner.*field = parse_integer<T>(name, v); }};
}

Entry real(std::string name, std::string doc, double RunConfig::*field) {
  return {{name, std::move(doc)},
          [field](const RunConfig& c) { return real_text(c.*field); },
          [field, name](RunConfig& c, const std::string& v) { c.*field = parse_real(name, v); }};
}

template <typename Owner>
Entry nested_real(std::string name, std::string doc, Owner RunConfig::*owner, double Owner::*field) {
  return {{name, std::move(doc)},
          [owner, field](const RunConfig& c) { return real_text(c.*owner.*field); },
          [owner, field, name](RunConfig& c, const std::string& v) { c.*owner.*field = parse_real(name, v); }};
}

Entry boolean(std::string name, std::string doc, bool RunConfig::*field) {
  return {{name, std::move(doc)},
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [field, name](RunConfig& c, const std::string& v) { c.*field = parse_bool(name, v); }};
}

Entry path(std::string name, std::string doc, std::filesystem::path RunConfig::*field) {
  return {{name, std::move(doc)},
          [field](const RunConfig& c) { return (c.*field).string(); },
          [field](RunConfig& c, const std::string& v) { c.*field = v; }};
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ",";
    out += item;
  }
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back(path("data_dir", "directory for input data (simulate writes here)", &RunConfig::data_dir));
    t.push_back(path("output_dir", "directory for panels, reports and series", &RunConfig::output_dir));
    t.push_back(path("edges", "friendship edges CSV; empty means <data_dir>/edges.csv", &RunConfig::edges));
    t.push_back(path("players", "node filter CSV; empty means <data_dir>/players.csv if present", &RunConfig::players));
    t.push_back(path("achievements", "achievement CSV; empty means <data_dir>/achievements.csv",
                     &RunConfig::achievements));
    t.push_back(path("playtime", "playtime CSV; empty means <data_dir>/playtime.csv", &RunConfig::playtime));
    t.push_back(path("covariates", "player covariates CSV; empty means <data_dir>/covariates.csv",
                     &RunConfig::covariates));
    t.push_back(path("panel", "prebuilt panel CSV for estimation; empty builds it from the inputs", &RunConfig::panel));
    t.push_back(integer("epoch_unix", "unix time of week 0", &RunConfig::epoch_unix));
    t.push_back(integer("window_start", "first panel week (feeds the lag only)", &RunConfig::window_start));
    t.push_back(integer("window_end", "last panel week", &RunConfig::window_end));
    t.push_back(integer("cutoff_week", "purchases after this week are ignored", &RunConfig::cutoff_week));
    t.push_back(integer("release_week", "game release week; key players are tagged before it",
                        &RunConfig::release_week));
    t.push_back({{"game", "game tag to study"},
                 [](const RunConfig& c) { return c.game; },
                 [](RunConfig& c, const std::string& v) {
                   if (v.empty()) bad_value("game", v, "a game tag");
                   c.game = v;
                 }});
    t.push_back({{"playtime_games", "comma-separated games pooled in the playtime cross-section; empty means game"},
                 [](const RunConfig& c) { return join(c.playtime_games); },
                 [](RunConfig& c, const std::string& v) { c.playtime_games = split_list(v); }});
    t.push_back({{"outcome_mode", "absorbing or event"},
                 [](const RunConfig& c) { return to_string(c.outcome_mode); },
                 [](RunConfig& c, const std::string& v) {
                   if (v != "absorbing" && v != "event") bad_value("outcome_mode", v, "absorbing or event");
                   c.outcome_mode = parse_outcome_mode(v);
                 }});
    t.push_back({{"peer_mode", "week rule for peer columns: same (follow outcome_mode), absorbing or event"},
                 [](const RunConfig& c) { return c.peer_mode ? to_string(*c.peer_mode) : std::string("same"); },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "same") c.peer_mode.reset();
                   else if (v == "absorbing" || v == "event") c.peer_mode = parse_outcome_mode(v);
                   else bad_value("peer_mode", v, "same, absorbing or event");
                 }});
    t.push_back({{"aggregation", "any, sum or mean"},
                 [](const RunConfig& c) { return to_string(c.aggregation); },
                 [](RunConfig& c, const std::string& v) {
                   if (v != "any" && v != "sum" && v != "mean") bad_value("aggregation", v, "any, sum or mean");
                   c.aggregation = parse_aggregation(v);
                 }});
    t.push_back(boolean("censor_after_purchase", "drop a player's rows after their purchase week",
                        &RunConfig::censor_after_purchase));
    t.push_back({{"cluster", "standard-error clusters: player, week or row"},
                 [](const RunConfig& c) {
                   return std::string(c.cluster == ClusterBy::Player ? "player"
                                      : c.cluster == ClusterBy::Week ? "week"
                                                                     : "row");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "player") c.cluster = ClusterBy::Player;
                   else if (v == "week") c.cluster = ClusterBy::Week;
                   else if (v == "row") c.cluster = ClusterBy::Row;
                   else bad_value("cluster", v, "player, week or row");
                 }});
    t.push_back({{"fixed_effects", "absorbed effects: both, player, week or none"},
                 [](const RunConfig& c) {
                   switch (c.fixed_effects) {
                     case FixedEffects::Both: return std::string("both");
                     case FixedEffects::Player: return std::string("player");
                     case FixedEffects::Week: return std::string("week");
                     case FixedEffects::None: break;
                   }
                   return std::string("none");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "both") c.fixed_effects = FixedEffects::Both;
                   else if (v == "player") c.fixed_effects = FixedEffects::Player;
                   else if (v == "week") c.fixed_effects = FixedEffects::Week;
                   else if (v == "none") c.fixed_effects = FixedEffects::None;
                   else bad_value("fixed_effects", v, "both, player, week or none");
                 }});
    t.push_back({{"heterogeneity_estimator", "2sls or ols"},
                 [](const RunConfig& c) {
                   return std::string(c.heterogeneity_estimator == HeterogeneityEstimator::TwoStage ? "2sls" : "ols");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "2sls") c.heterogeneity_estimator = HeterogeneityEstimator::TwoStage;
                   else if (v == "ols") c.heterogeneity_estimator = HeterogeneityEstimator::Ols;
                   else bad_value("heterogeneity_estimator", v, "2sls or ols");
                 }});
    t.push_back(integer("playtime_variant", "playtime column 1-4; 0 renders all four", &RunConfig::playtime_variant));
    t.push_back(real("katz_alpha", "Katz attenuation; 0 means katz_fraction / spectral radius", &RunConfig::katz_alpha));
    t.push_back(real("katz_fraction", "fraction of 1/spectral radius used for the default alpha",
                     &RunConfig::katz_fraction));
    t.push_back(real("katz_tol", "Katz convergence tolerance (sup norm)", &RunConfig::katz_tol));
    t.push_back(integer("katz_max_iter", "Katz iteration limit", &RunConfig::katz_max_iter));
    t.push_back(real("kp_percentile", "Katz percentile a key player must reach", &RunConfig::kp_percentile));
    t.push_back(integer("old_friend_min_age", "weeks a friendship must predate the reference week",
                        &RunConfig::old_friend_min_age));
    t.push_back(integer("kp_lead_weeks", "weeks before release at which tags are computed", &RunConfig::kp_lead_weeks));
    t.push_back(boolean("kp_connected_only", "rank only players with friends at the reference week",
                        &RunConfig::kp_connected_only));
    t.push_back(integer("degree_cap", "maximum friends per player", &RunConfig::degree_cap));
    t.push_back(integer("sample_per_group", "treatment and control sample size; 0 uses every player",
                        &RunConfig::sample_per_group));
    t.push_back(integer("seed", "random seed for sampling and simulation", &RunConfig::seed));
    t.push_back(integer("threads", "worker threads; 0 uses every core", &RunConfig::threads));

    t.push_back(nested_integer("sim_players", "simulated players", &RunConfig::sim, &SimConfig::n_players));
    t.push_back(nested_integer("sim_first_id", "first simulated player id", &RunConfig::sim, &SimConfig::first_id));
    t.push_back(nested_real("sim_mean_degree", "mean friends per simulated player", &RunConfig::sim,
                            &SimConfig::mean_degree));
    t.push_back({{"sim_degree_distribution", "poisson or powerlaw"},
                 [](const RunConfig& c) {
                   return std::string(c.sim.degree_distribution == DegreeDistribution::Poisson ? "poisson" : "powerlaw");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "poisson") c.sim.degree_distribution = DegreeDistribution::Poisson;
                   else if (v == "powerlaw") c.sim.degree_distribution = DegreeDistribution::PowerLaw;
                   else bad_value("sim_degree_distribution", v, "poisson or powerlaw");
                 }});
    t.push_back(nested_real("sim_powerlaw_exponent", "tail exponent of the powerlaw degrees", &RunConfig::sim,
                            &SimConfig::powerlaw_exponent));
    t.push_back(nested_real("sim_old_fraction", "share of simulated friendships that are old", &RunConfig::sim,
                            &SimConfig::old_fraction));
    t.push_back(nested_real("beta", "planted peer effect", &RunConfig::truth, &SimTruth::beta));
    t.push_back(nested_real("beta_kp", "planted key-player increment", &RunConfig::truth, &SimTruth::beta_kp));
    t.push_back(nested_real("beta_of", "planted old-friend increment", &RunConfig::truth, &SimTruth::beta_of));
    t.push_back(nested_real("sigma_alpha", "sd of the player effect", &RunConfig::truth, &SimTruth::sigma_alpha));
    t.push_back(nested_real("baseline_hazard", "weekly growth of the week effect", &RunConfig::truth,
                            &SimTruth::baseline_hazard));
    t.push_back(nested_real("release_spike", "extra week effect in the release week", &RunConfig::truth,
                            &SimTruth::release_spike));
    t.push_back(nested_real("homophily", "shared-taste loading among friends", &RunConfig::truth, &SimTruth::homophily));
    t.push_back(nested_real("playtime_mu", "mean log hours", &RunConfig::truth, &SimTruth::playtime_mu));
    t.push_back(nested_real("noise_sd", "sd of log-hours noise", &RunConfig::truth, &SimTruth::noise_sd));
    t.push_back(nested_real("gamma_kp", "planted key-player playtime effect", &RunConfig::truth, &SimTruth::gamma_kp));
    t.push_back(nested_real("gamma_of", "planted old-friend playtime effect", &RunConfig::truth, &SimTruth::gamma_of));
    t.push_back(nested_real("gamma_nofriend", "planted no-friend playtime effect", &RunConfig::truth,
                            &SimTruth::gamma_nofriend));
    return t;
  }();
  return table;
}

const Entry& find_entry(const std::string& key) {
  const auto& table = entries();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return e.key.name == key; });
  if (it == table.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  return *it;
}

}  // namespace

std::filesystem::path RunConfig::input(const std::filesystem::path& explicit_path, const char* file) const {
  return explicit_path.empty() ? data_dir / file : explicit_path;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

std::string config_value(const RunConfig& config, const std::string& key) { return find_entry(key).get(config); }

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_entry(key).set(config, trim(value));
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig config;
  std::stringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key = value", source, number));
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    try {
      set_config_value(config, key, content.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source, number, e.what()));
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError(fmt::format("config file {} does not exist", path.string()));
  LineReader reader(path);
  std::string text;
  std::string_view line;
  while (reader.next(line)) text.append(line).push_back('\n');
  return parse_config(text, path.string());
}

void validate_config(const RunConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError(fmt::format("{}: {}", key, why));
  };
  if (c.window_start < 0) fail("window_start", "must be non-negative");
  if (c.window_end <= c.window_start) fail("window_end", "must be after window_start");
  if (c.cutoff_week < 0) fail("cutoff_week", "must be non-negative");
  if (c.release_week < c.kp_lead_weeks) fail("release_week", "must be at least kp_lead_weeks");
  if (c.release_week > c.window_end) fail("release_week", "must not be after window_end");
  if (c.playtime_variant < 0 || c.playtime_variant > 4) fail("playtime_variant", "must be 0-4");
  if (!(c.katz_alpha >= 0.0)) fail("katz_alpha", "must be non-negative");
  if (!(c.katz_fraction > 0.0 && c.katz_fraction < 1.0)) fail("katz_fraction", "must lie in (0, 1)");
  if (!(c.katz_tol > 0.0)) fail("katz_tol", "must be positive");
  if (c.katz_max_iter <= 0) fail("katz_max_iter", "must be positive");
  if (!(c.kp_percentile > 0.0 && c.kp_percentile < 1.0)) fail("kp_percentile", "must lie in (0, 1)");
  if (c.old_friend_min_age < 0) fail("old_friend_min_age", "must be non-negative");
  if (c.kp_lead_weeks < 0) fail("kp_lead_weeks", "must be non-negative");
  if (c.degree_cap == 0) fail("degree_cap", "must be positive");
  if (c.sim.n_players == 0) fail("sim_players", "must be positive");
  if (!(c.sim.mean_degree >= 0.0)) fail("sim_mean_degree", "must be non-negative");
  if (!(c.sim.powerlaw_exponent > 1.0)) fail("sim_powerlaw_exponent", "must exceed 1");
  if (!(c.sim.old_fraction >= 0.0 && c.sim.old_fraction <= 1.0)) fail("sim_old_fraction", "must lie in [0, 1]");
  if (!(c.truth.sigma_alpha >= 0.0)) fail("sigma_alpha", "must be non-negative");
  if (!(c.truth.baseline_hazard >= 0.0)) fail("baseline_hazard", "must be non-negative");
  if (!(c.truth.noise_sd >= 0.0)) fail("noise_sd", "must be non-negative");
}

std::string default_config_text() {
  const RunConfig defaults;
  std::string out = "# peerfx configuration\n";
  for (const auto& e : entries()) {
    out += fmt::format("\n# {}\n{} = {}\n", e.key.doc, e.key.name, e.get(defaults));
  }
  return out;
}

}  // namespace peerfx

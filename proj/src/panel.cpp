#include "peerfx/panel.h"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "peerfx/csv.h"
#include "peerfx/error.h"
#include "peerfx/parallel.h"
#include "peerfx/random.h"
#include "scratch.h"

namespace peerfx {

using NodeIndex = TemporalNetwork::NodeIndex;

// ---- Adoption schedule ------------------------------------------------------

AdoptionSchedule::AdoptionSchedule(GameId game, std::vector<std::pair<PlayerId, WeekIndex>> entries)
    : game_(std::move(game)), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  // Keep the earliest week when a player appears more than once.
  entries_.erase(std::unique(entries_.begin(), entries_.end(),
                             [](const auto& l, const auto& r) { return l.first == r.first; }),
                 entries_.end());
}

std::optional<WeekIndex> AdoptionSchedule::purchase_week(PlayerId player) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), player,
                                   [](const auto& e, PlayerId p) { return e.first < p; });
  if (it == entries_.end() || it->first != player) return std::nullopt;
  return it->second;
}

std::vector<WeekIndex> AdoptionSchedule::aligned_to(const TemporalNetwork& net) const {
  std::vector<WeekIndex> weeks(net.node_count(), kNever);
  for (const auto& [player, week] : entries_) {
    if (const auto index = net.index_of(player)) weeks[*index] = week;
  }
  return weeks;
}

AdoptionSchedule derive_schedule(std::span<const AchievementEvent> events, const GameId& game,
                                 WeekIndex cutoff_week, const WeekClock& clock, ScheduleStats* stats) {
  std::unordered_map<std::uint64_t, std::int64_t> earliest;
  std::size_t matched = 0;
  for (const auto& e : events) {
    if (e.game != game) continue;
    ++matched;
    auto [it, inserted] = earliest.try_emplace(raw(e.player), e.unlocked_unix);
    if (!inserted && e.unlocked_unix < it->second) it->second = e.unlocked_unix;
  }
  std::vector<std::pair<PlayerId, WeekIndex>> entries;
  entries.reserve(earliest.size());
  std::size_t late = 0;
  for (const auto& [player, unix_seconds] : earliest) {
    const WeekIndex week = clock.week_of(unix_seconds);
    if (week > cutoff_week) {
      ++late;
      continue;
    }
    entries.emplace_back(PlayerId{player}, week);
  }
  if (stats != nullptr) *stats = {matched, late};
  return AdoptionSchedule(game, std::move(entries));
}

std::vector<AchievementEvent> read_achievements_csv(const std::filesystem::path& path) {
  LineReader reader(path);
  expect_header(reader, {"player_id", "game", "unlocked_unix"});
  std::vector<AchievementEvent> events;
  std::vector<std::string_view> fields;
  std::string_view line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_fields(line, fields);
    std::uint64_t id = 0;
    std::int64_t unlocked = 0;
    if (fields.size() < 3 || !parse_u64(fields[0], id)) {
      throw ParseError(reader.source(), reader.line_number(), "malformed player id");
    }
    if (!parse_i64(fields[2], unlocked)) {
      throw ParseError(reader.source(), reader.line_number(), "malformed timestamp");
    }
    events.push_back({PlayerId{id}, GameId(fields[1]), unlocked});
  }
  return events;
}

std::vector<std::pair<WeekIndex, std::size_t>> weekly_purchases(const AdoptionSchedule& schedule,
                                                                WeekIndex first, WeekIndex last) {
  std::vector<std::pair<WeekIndex, std::size_t>> out;
  if (last < first) return out;
  out.reserve(static_cast<std::size_t>(last - first + 1));
  for (WeekIndex w = first; w <= last; ++w) out.emplace_back(w, 0);
  for (const auto& [player, week] : schedule.entries()) {
    if (week >= first && week <= last) ++out[static_cast<std::size_t>(week - first)].second;
  }
  return out;
}

// ---- Groups -------------------------------------------------------------------

std::vector<PlayerId> GroupAssignment::members() const {
  std::vector<PlayerId> all;
  all.reserve(treatment.size() + control.size());
  std::merge(treatment.begin(), treatment.end(), control.begin(), control.end(),
             std::back_inserter(all));
  return all;
}

GroupAssignment assign_groups(const TemporalNetwork& net, const AdoptionSchedule& schedule,
                              std::size_t n_per_group, std::uint64_t seed, WeekIndex horizon) {
  const auto purchase = schedule.aligned_to(net);
  std::vector<NodeIndex> treatment_pool;
  std::vector<NodeIndex> control_pool;
  for (NodeIndex v = 0; v < net.node_count(); ++v) {
    const auto friends = net.adjacency_at(v, horizon);
    if (friends.empty()) continue;
    const bool any_purchase = std::any_of(friends.begin(), friends.end(), [&](const auto& j) {
      return purchase[j.node] != kNever;
    });
    (any_purchase ? treatment_pool : control_pool).push_back(v);
  }

  GroupAssignment groups;
  groups.seed = seed;
  groups.treatment_pool = treatment_pool.size();
  groups.control_pool = control_pool.size();
  if (treatment_pool.size() < n_per_group || control_pool.size() < n_per_group) {
    throw InsufficientPool("need " + std::to_string(n_per_group) + " players per group; treatment pool " +
                           std::to_string(treatment_pool.size()) + ", control pool " +
                           std::to_string(control_pool.size()));
  }

  Rng rng(seed);
  auto sample = [&](std::vector<NodeIndex>& pool) {
    for (std::size_t i = 0; i < n_per_group; ++i) {
      std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    }
    pool.resize(n_per_group);
  };
  sample(treatment_pool);
  sample(control_pool);

  for (NodeIndex v : treatment_pool) {
    const auto friends = net.adjacency_at(v, horizon);
    const bool purchased_in_horizon = std::any_of(friends.begin(), friends.end(), [&](const auto& j) {
      return purchase[j.node] <= horizon;
    });
    if (purchased_in_horizon) {
      groups.treatment.push_back(net.id_at(v));
    } else {
      ++groups.dropped_after_horizon;
    }
  }
  for (NodeIndex v : control_pool) groups.control.push_back(net.id_at(v));
  std::sort(groups.treatment.begin(), groups.treatment.end());
  std::sort(groups.control.begin(), groups.control.end());
  return groups;
}

// ---- Panel --------------------------------------------------------------------

std::string to_string(OutcomeMode mode) { return mode == OutcomeMode::Absorbing ? "absorbing" : "event"; }

std::string to_string(Aggregation aggregation) {
  switch (aggregation) {
    case Aggregation::Any: return "any";
    case Aggregation::Sum: return "sum";
    case Aggregation::Mean: return "mean";
  }
  return "any";
}

OutcomeMode parse_outcome_mode(const std::string& text) {
  if (text == "absorbing") return OutcomeMode::Absorbing;
  if (text == "event") return OutcomeMode::Event;
  throw InvalidParameter("outcome mode must be absorbing or event, got '" + text + "'");
}

Aggregation parse_aggregation(const std::string& text) {
  if (text == "any") return Aggregation::Any;
  if (text == "sum") return Aggregation::Sum;
  if (text == "mean") return Aggregation::Mean;
  throw InvalidParameter("aggregation must be any, sum or mean, got '" + text + "'");
}

namespace {

constexpr std::size_t kColumns = 7;
enum Col : std::size_t { kY, kX, kZ, kXkp, kXof, kZkp, kZof };

struct PanelScratch {
  detail::NodeMarks second;  // touched second-degree candidates
  detail::NodeMarks direct;  // direct friends of the root
  std::vector<WeekIndex> enter_all, enter_kp, enter_of, exit_week;
  std::vector<NodeIndex> touched;
  // Difference arrays over row offsets, one per counted quantity.
  std::vector<std::int64_t> diff;

  void ensure(std::size_t n) {
    second.ensure(n);
    direct.ensure(n);
    if (enter_all.size() < n) {
      enter_all.resize(n);
      enter_kp.resize(n);
      enter_of.resize(n);
      exit_week.resize(n);
    }
  }
};

// Quantities accumulated per root: counts for x, x_kp, x_of, z, z_kp, z_of and
// the friend / second-degree set sizes used by mean aggregation.
enum Counter : std::size_t { cX, cXkp, cXof, cZ, cZkp, cZof, cFriends, cSecond, cSecondKp, cSecondOf, kCounters };

struct PanelInputs {
  const TemporalNetwork& net;
  const std::vector<WeekIndex>& purchase;
  const std::vector<char>& key_player;
  const PeerTags& tags;
  PanelWindow window;
  PanelConfig config;
};

}  // namespace

namespace {

// Adds +1 on rows [lo, hi] (row weeks, inclusive) of counter c.
inline void add_rows(std::vector<std::int64_t>& diff, std::size_t width, Counter c, WeekIndex lo,
                     WeekIndex hi, const PanelWindow& window) {
  lo = std::max(lo, window.start + 1);
  hi = std::min(hi, window.end);
  if (lo > hi) return;
  diff[c * (width + 1) + static_cast<std::size_t>(lo - window.start - 1)] += 1;
  diff[c * (width + 1) + static_cast<std::size_t>(hi - window.start)] -= 1;
}

inline WeekIndex later(WeekIndex a, WeekIndex b) { return std::max(a, b); }

void fill_player(const PanelInputs& in, NodeIndex root, std::size_t first_row, std::size_t rows,
                 std::array<std::vector<double>*, kColumns>& out, PanelScratch& scratch) {
  const auto& net = in.net;
  const auto& window = in.window;
  const std::size_t width = window.row_weeks();
  const bool absorbing = in.config.peers() == OutcomeMode::Absorbing;
  const bool absorbing_outcome = in.config.mode == OutcomeMode::Absorbing;
  auto& diff = scratch.diff;
  diff.assign(kCounters * (width + 1), 0);

  const PlayerId root_id = net.id_at(root);
  const auto friends = net.adjacency_at(root, window.end);

  // First-degree counts.
  const std::uint32_t direct_mark = scratch.direct.next_epoch();
  for (const auto& j : friends) {
    scratch.direct.stamp[j.node] = direct_mark;
    scratch.exit_week[j.node] = j.formed;
    add_rows(diff, width, cFriends, j.formed, window.end, window);
    const WeekIndex p = in.purchase[j.node];
    if (p == kNever) continue;
    const bool kp = in.key_player[j.node] != 0;
    const bool of = in.tags.is_old_friend(root_id, net.id_at(j.node));
    WeekIndex lo, hi;
    if (absorbing) {
      lo = later(j.formed, p);
      hi = window.end;
    } else {
      if (j.formed > p) continue;
      lo = hi = p;
    }
    add_rows(diff, width, cX, lo, hi, window);
    if (kp) add_rows(diff, width, cXkp, lo, hi, window);
    if (of) add_rows(diff, width, cXof, lo, hi, window);
  }

  // Second-degree membership intervals [enter, exit) in lag weeks.
  const std::uint32_t second_mark = scratch.second.next_epoch();
  scratch.touched.clear();
  const WeekIndex last_lag = window.end - 1;
  for (const auto& j : friends) {
    if (j.formed > last_lag) break;
    const bool kp = in.key_player[j.node] != 0;
    const bool of = in.tags.is_old_friend(root_id, net.id_at(j.node));
    for (const auto& k : net.adjacency_at(j.node, last_lag)) {
      if (k.node == root) continue;
      const WeekIndex enter = later(j.formed, k.formed);
      if (scratch.second.stamp[k.node] != second_mark) {
        scratch.second.stamp[k.node] = second_mark;
        scratch.enter_all[k.node] = kNever;
        scratch.enter_kp[k.node] = kNever;
        scratch.enter_of[k.node] = kNever;
        scratch.touched.push_back(k.node);
      }
      scratch.enter_all[k.node] = std::min(scratch.enter_all[k.node], enter);
      if (kp) scratch.enter_kp[k.node] = std::min(scratch.enter_kp[k.node], enter);
      if (of) scratch.enter_of[k.node] = std::min(scratch.enter_of[k.node], enter);
    }
  }
  for (const NodeIndex k : scratch.touched) {
    const WeekIndex exit =
        scratch.direct.stamp[k] == direct_mark ? scratch.exit_week[k] : kNever;
    const WeekIndex p = in.purchase[k];
    const std::array<std::pair<WeekIndex, std::pair<Counter, Counter>>, 3> routes{{
        {scratch.enter_all[k], {cZ, cSecond}},
        {scratch.enter_kp[k], {cZkp, cSecondKp}},
        {scratch.enter_of[k], {cZof, cSecondOf}},
    }};
    for (const auto& [enter, counters] : routes) {
      if (enter == kNever || enter >= exit) continue;
      // Member at lag week s for enter <= s < exit, i.e. rows t = s + 1.
      const WeekIndex row_hi = exit == kNever ? window.end : exit;
      add_rows(diff, width, counters.second, enter + 1, row_hi, window);
      if (p == kNever) continue;
      if (absorbing) {
        add_rows(diff, width, counters.first, later(enter, p) + 1, row_hi, window);
      } else if (p >= enter && p < exit) {
        add_rows(diff, width, counters.first, p + 1, p + 1, window);
      }
    }
  }

  const WeekIndex own = in.purchase[root];
  std::array<std::int64_t, kCounters> running{};
  std::size_t row = first_row;
  for (std::size_t w = 0; w < width; ++w) {
    for (std::size_t c = 0; c < kCounters; ++c) running[c] += diff[c * (width + 1) + w];
    const WeekIndex t = window.start + 1 + static_cast<WeekIndex>(w);
    if (row >= first_row + rows) break;
    if (in.config.censor_after_purchase && own != kNever && t > own) break;
    auto value = [&](Counter count, Counter size) -> double {
      const auto n = running[count];
      switch (in.config.aggregation) {
        case Aggregation::Any: return n > 0 ? 1.0 : 0.0;
        case Aggregation::Sum: return static_cast<double>(n);
        case Aggregation::Mean:
          return running[size] > 0 ? static_cast<double>(n) / static_cast<double>(running[size]) : 0.0;
      }
      return 0.0;
    };
    (*out[kY])[row] = absorbing_outcome ? (own <= t ? 1.0 : 0.0) : (own == t ? 1.0 : 0.0);
    (*out[kX])[row] = value(cX, cFriends);
    (*out[kXkp])[row] = value(cXkp, cFriends);
    (*out[kXof])[row] = value(cXof, cFriends);
    (*out[kZ])[row] = value(cZ, cSecond);
    (*out[kZkp])[row] = value(cZkp, cSecondKp);
    (*out[kZof])[row] = value(cZof, cSecondOf);
    ++row;
  }
}

}  // namespace

PanelDataset build_panel(const TemporalNetwork& net, const AdoptionSchedule& schedule,
                         const PeerTags& tags, std::span<const PlayerId> players, PanelWindow window,
                         const PanelConfig& config, std::uint64_t seed) {
  if (window.end < window.start) throw InvalidParameter("panel window end precedes its start");

  std::vector<PlayerId> sorted(players.begin(), players.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<NodeIndex> roots(sorted.size());
  for (std::size_t p = 0; p < sorted.size(); ++p) roots[p] = net.require_index(sorted[p]);

  const auto purchase = schedule.aligned_to(net);
  std::vector<char> key_player(net.node_count(), 0);
  for (const PlayerId id : tags.key_players) {
    if (const auto index = net.index_of(id)) key_player[*index] = 1;
  }

  const std::size_t width = window.row_weeks();
  std::vector<std::size_t> offsets(sorted.size() + 1, 0);
  for (std::size_t p = 0; p < sorted.size(); ++p) {
    std::size_t rows = width;
    const WeekIndex own = purchase[roots[p]];
    if (config.censor_after_purchase && own != kNever) {
      rows = own <= window.start ? 0 : std::min<std::size_t>(width, static_cast<std::size_t>(own - window.start));
    }
    offsets[p + 1] = offsets[p] + rows;
  }
  const std::size_t total = offsets.back();

  std::vector<PlayerId> row_player(total);
  std::vector<WeekIndex> row_week(total);
  std::array<std::vector<double>, kColumns> columns;
  for (auto& c : columns) c.assign(total, 0.0);
  std::array<std::vector<double>*, kColumns> out{};
  for (std::size_t c = 0; c < kColumns; ++c) out[c] = &columns[c];

  const PanelInputs inputs{net, purchase, key_player, tags, window, config};
  parallel_for(sorted.size(), 256, [&](std::size_t begin, std::size_t end) {
    thread_local PanelScratch scratch;
    scratch.ensure(net.node_count());
    for (std::size_t p = begin; p < end; ++p) {
      const std::size_t rows = offsets[p + 1] - offsets[p];
      for (std::size_t r = 0; r < rows; ++r) {
        row_player[offsets[p] + r] = sorted[p];
        row_week[offsets[p] + r] = window.start + 1 + static_cast<WeekIndex>(r);
      }
      fill_player(inputs, roots[p], offsets[p], rows, out, scratch);
    }
  });

  PanelDataset panel;
  panel.frame = Frame(std::move(row_player), std::move(row_week));
  for (std::size_t c = 0; c < kColumns; ++c) panel.frame.set_column(panel_columns()[c], std::move(columns[c]));
  panel.window = window;
  panel.config = config;
  panel.seed = seed;
  panel.players = sorted.size();
  panel.lag_dropped_week = window.start;
  panel.censored_rows = sorted.size() * width - total;
  return panel;
}

PanelDataset build_panel(const TemporalNetwork& net, const AdoptionSchedule& schedule,
                         const PeerTags& tags, const GroupAssignment& groups, PanelWindow window,
                         const PanelConfig& config) {
  const auto members = groups.members();
  return build_panel(net, schedule, tags, members, window, config, groups.seed);
}

// ---- Panel I/O ----------------------------------------------------------------

namespace {
std::filesystem::path meta_path(const std::filesystem::path& path) {
  auto meta = path;
  meta += ".meta.json";
  return meta;
}
}  // namespace

void write_panel(const PanelDataset& panel, const std::filesystem::path& path) {
  AtomicFile file(path);
  fmt::memory_buffer buffer;
  fmt::format_to(std::back_inserter(buffer), "player,week");
  for (const auto& name : panel_columns()) fmt::format_to(std::back_inserter(buffer), ",{}", name);
  buffer.push_back('\n');
  std::vector<std::span<const double>> columns;
  for (const auto& name : panel_columns()) columns.push_back(panel.frame.column(name));
  const auto players = panel.frame.players();
  const auto weeks = panel.frame.weeks();
  for (std::size_t r = 0; r < panel.rows(); ++r) {
    fmt::format_to(std::back_inserter(buffer), "{},{}", raw(players[r]), weeks[r]);
    for (const auto& c : columns) fmt::format_to(std::back_inserter(buffer), ",{}", c[r]);
    buffer.push_back('\n');
    if (buffer.size() > (1 << 20)) {
      file.write({buffer.data(), buffer.size()});
      buffer.clear();
    }
  }
  file.write({buffer.data(), buffer.size()});
  file.commit();

  nlohmann::ordered_json meta;
  meta["window_start"] = panel.window.start;
  meta["window_end"] = panel.window.end;
  meta["lag_dropped_week"] = panel.lag_dropped_week;
  meta["outcome_mode"] = to_string(panel.config.mode);
  meta["peer_mode"] = to_string(panel.config.peers());
  meta["aggregation"] = to_string(panel.config.aggregation);
  meta["censor_after_purchase"] = panel.config.censor_after_purchase;
  meta["seed"] = panel.seed;
  meta["players"] = panel.players;
  meta["rows"] = panel.rows();
  meta["censored_rows"] = panel.censored_rows;
  write_file_atomic(meta_path(path), meta.dump(2) + "\n");
}

PanelDataset read_panel(const std::filesystem::path& path) {
  PanelDataset panel;
  if (std::filesystem::exists(meta_path(path))) {
    LineReader meta_reader(meta_path(path));
    std::string text;
    std::string_view line;
    while (meta_reader.next(line)) text.append(line).push_back('\n');
    try {
      const auto meta = nlohmann::json::parse(text);
      panel.window = {meta.at("window_start").get<WeekIndex>(), meta.at("window_end").get<WeekIndex>()};
      panel.lag_dropped_week = meta.at("lag_dropped_week").get<WeekIndex>();
      panel.config.mode = parse_outcome_mode(meta.at("outcome_mode").get<std::string>());
      if (meta.contains("peer_mode")) panel.config.peer_mode = parse_outcome_mode(meta.at("peer_mode").get<std::string>());
      panel.config.aggregation = parse_aggregation(meta.at("aggregation").get<std::string>());
      panel.config.censor_after_purchase = meta.at("censor_after_purchase").get<bool>();
      panel.seed = meta.at("seed").get<std::uint64_t>();
      panel.players = meta.at("players").get<std::size_t>();
      panel.censored_rows = meta.value("censored_rows", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path(path).string(), 1, e.what());
    }
  }

  LineReader reader(path);
  std::vector<std::string> expected{"player", "week"};
  expected.insert(expected.end(), panel_columns().begin(), panel_columns().end() - 2);
  const auto header = expect_header(reader, expected);
  std::vector<PlayerId> players;
  std::vector<WeekIndex> weeks;
  std::vector<std::vector<double>> columns(header.size() - 2);
  std::vector<std::string_view> fields;
  std::string_view line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_fields(line, fields);
    if (fields.size() != header.size()) {
      throw ParseError(reader.source(), reader.line_number(), "expected " + std::to_string(header.size()) + " fields");
    }
    std::uint64_t id = 0;
    std::int64_t week = 0;
    if (!parse_u64(fields[0], id)) throw ParseError(reader.source(), reader.line_number(), "malformed player id");
    if (!parse_i64(fields[1], week)) throw ParseError(reader.source(), reader.line_number(), "malformed week");
    players.push_back(PlayerId{id});
    weeks.push_back(static_cast<WeekIndex>(week));
    for (std::size_t c = 2; c < fields.size(); ++c) {
      double v = 0;
      if (!parse_double(fields[c], v)) {
        throw ParseError(reader.source(), reader.line_number(), "malformed value in column " + header[c]);
      }
      columns[c - 2].push_back(v);
    }
  }
  panel.frame = Frame(std::move(players), std::move(weeks));
  for (std::size_t c = 0; c < columns.size(); ++c) panel.frame.set_column(header[c + 2], std::move(columns[c]));
  if (panel.players == 0 && panel.rows() > 0) {
    auto ids = std::vector<PlayerId>(panel.frame.players().begin(), panel.frame.players().end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    panel.players = ids.size();
  }
  return panel;
}

}  // namespace peerfx

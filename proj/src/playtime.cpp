#include <algorithm>
#include <cmath>

#include "peerfx/csv.h"
#include "peerfx/error.h"
#include "peerfx/panel.h"

namespace peerfx {

PlaytimeCrossSection build_playtime_crosssection(const TemporalNetwork& net,
                                                 std::span<const AdoptionSchedule> schedules,
                                                 const PeerTags& tags,
                                                 const PlaytimeTable& playtimes,
                                                 const CovariateTable& covariates,
                                                 WeekIndex horizon) {
  PlaytimeCrossSection section;
  for (const auto& schedule : schedules) {
    const auto purchase = schedule.aligned_to(net);
    for (const auto& [player, own] : schedule.entries()) {
      const auto index = net.index_of(player);
      if (!index) continue;
      const auto minutes = playtimes.find({player, schedule.game()});
      if (minutes == playtimes.end()) {
        ++section.excluded_no_purchase;
        continue;
      }
      if (minutes->second < 1.0) {
        ++section.excluded_below_minimum;
        continue;
      }
      const auto cov = covariates.find(player);
      if (cov == covariates.end()) {
        ++section.excluded_no_covariates;
        continue;
      }

      PlaytimeRow row;
      row.player = player;
      row.game = schedule.game();
      row.log_playtime = std::log(std::max(minutes->second / 60.0, 1.0));

      WeekIndex first_week = kNever;
      PlayerId first{0};
      for (const auto& j : net.adjacency_at(*index, own)) {
        const WeekIndex p = purchase[j.node];
        if (p >= own) continue;
        const PlayerId id = net.id_at(j.node);
        if (p < first_week || (p == first_week && id < first)) {
          first_week = p;
          first = id;
        }
      }
      if (first_week == kNever) {
        row.no_friend_purchase = 1;
      } else {
        row.first_friend = first;
        row.kp_purchase = tags.is_key_player(first) ? 1 : 0;
        row.of_purchase = tags.is_old_friend(player, first) ? 1 : 0;
      }

      row.num_games = cov->second.num_games;
      row.num_groups = cov->second.num_groups;
      row.start_week = cov->second.start_week;
      row.num_friends = static_cast<double>(net.degree_at(*index, horizon));
      row.owns_smb = cov->second.owns_smb;
      row.owns_nv = cov->second.owns_nv;
      section.rows.push_back(std::move(row));
    }
  }
  return section;
}

Frame playtime_frame(const PlaytimeCrossSection& section) {
  const std::size_t n = section.rows.size();
  std::vector<PlayerId> players(n);
  std::vector<WeekIndex> weeks(n, 0);
  std::vector<double> y(n), kp(n), of(n), nf(n), games(n), groups(n), start(n), friends(n), smb(n), nv(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = section.rows[r];
    players[r] = row.player;
    y[r] = row.log_playtime;
    kp[r] = row.kp_purchase;
    of[r] = row.of_purchase;
    nf[r] = row.no_friend_purchase;
    games[r] = row.num_games;
    groups[r] = row.num_groups;
    start[r] = row.start_week;
    friends[r] = row.num_friends;
    smb[r] = row.owns_smb;
    nv[r] = row.owns_nv;
  }
  Frame frame(std::move(players), std::move(weeks));
  frame.set_column("log_playtime", std::move(y));
  frame.set_column("kp_purchase", std::move(kp));
  frame.set_column("of_purchase", std::move(of));
  frame.set_column("no_friend_purchase", std::move(nf));
  frame.set_column("num_games", std::move(games));
  frame.set_column("num_groups", std::move(groups));
  frame.set_column("start_week", std::move(start));
  frame.set_column("num_friends", std::move(friends));
  frame.set_column("owns_smb", std::move(smb));
  frame.set_column("owns_nv", std::move(nv));
  return frame;
}

PlaytimeTable read_playtime_csv(const std::filesystem::path& path) {
  LineReader reader(path);
  expect_header(reader, {"player_id", "game", "playtime_minutes"});
  PlaytimeTable table;
  std::vector<std::string_view> fields;
  std::string_view line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_fields(line, fields);
    std::uint64_t id = 0;
    double minutes = 0;
    if (fields.size() < 3 || !parse_u64(fields[0], id)) {
      throw ParseError(reader.source(), reader.line_number(), "malformed player id");
    }
    if (!parse_double(fields[2], minutes) || minutes < 0) {
      throw ParseError(reader.source(), reader.line_number(), "malformed playtime");
    }
    table[{PlayerId{id}, GameId(fields[1])}] += minutes;
  }
  return table;
}

CovariateTable read_covariates_csv(const std::filesystem::path& path) {
  LineReader reader(path);
  expect_header(reader, {"player_id", "num_games", "num_groups", "start_week", "owns_smb", "owns_nv"});
  CovariateTable table;
  std::vector<std::string_view> fields;
  std::string_view line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_fields(line, fields);
    std::uint64_t id = 0;
    if (fields.size() < 6 || !parse_u64(fields[0], id)) {
      throw ParseError(reader.source(), reader.line_number(), "malformed player id");
    }
    PlayerCovariates cov;
    double* slots[] = {&cov.num_games, &cov.num_groups, &cov.start_week, &cov.owns_smb, &cov.owns_nv};
    for (std::size_t c = 0; c < 5; ++c) {
      if (!parse_double(fields[c + 1], *slots[c])) {
        throw ParseError(reader.source(), reader.line_number(), "malformed covariate");
      }
    }
    table[PlayerId{id}] = cov;
  }
  return table;
}

}  // namespace peerfx

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "peerfx/types.h"

namespace peerfx {

struct TemporalEdge {
  PlayerId a;
  PlayerId b;
  WeekIndex formed;
};

// Per-record diagnostics from build_network; none of these are fatal.
struct BuildStats {
  std::size_t records = 0;
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
  std::size_t filtered_nodes = 0;
  std::size_t filtered_edges = 0;
  std::size_t cap_rejected = 0;
};

struct NetworkOptions {
  // Extra nodes to include even without edges (friendless accounts).
  std::vector<PlayerId> nodes;
  // Nodes failing the predicate are dropped with all incident edges.
  std::function<bool(PlayerId)> keep;
  // Platform friend limit. An edge that would push either endpoint past the
  // cap is rejected; edges are admitted in (formed, a, b) order.
  std::size_t degree_cap = 2000;
};

// Undirected friendship graph with permanent, time-stamped edges. Immutable
// after construction; all queries are safe from any number of threads.
//
// Nodes are held in ascending PlayerId order and addressed internally by
// their position ("node index"). Each adjacency list is sorted by
// (formed, neighbor index), so the neighborhood as of week t is a prefix.
class TemporalNetwork {
 public:
  using NodeIndex = std::uint32_t;

  struct Neighbor {
    NodeIndex node;
    WeekIndex formed;
  };

  TemporalNetwork() = default;

  std::size_t node_count() const noexcept { return ids_.size(); }
  std::size_t edge_count() const noexcept { return entries_.size() / 2; }

  std::span<const PlayerId> nodes() const noexcept { return ids_; }
  PlayerId id_at(NodeIndex index) const { return ids_[index]; }
  std::optional<NodeIndex> index_of(PlayerId id) const;
  // Throws NotFound for unknown players.
  NodeIndex require_index(PlayerId id) const;

  std::span<const Neighbor> adjacency(NodeIndex node) const {
    return {entries_.data() + offsets_[node], entries_.data() + offsets_[node + 1]};
  }
  // Neighbors whose edge formed at or before week t.
  std::span<const Neighbor> adjacency_at(NodeIndex node, WeekIndex t) const;
  std::size_t degree_at(NodeIndex node, WeekIndex t) const {
    return adjacency_at(node, t).size();
  }

  // Formation week of edge (a, b), if the edge exists.
  std::optional<WeekIndex> edge_formed(NodeIndex a, NodeIndex b) const;

  // All edges once each as (lower index, higher index, formed), sorted.
  std::vector<TemporalEdge> edges() const;

  const BuildStats& stats() const noexcept { return stats_; }

 private:
  friend TemporalNetwork build_network(std::span<const TemporalEdge>, const NetworkOptions&);

  std::vector<PlayerId> ids_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> entries_;
  BuildStats stats_;
};

// Deduplicates (keeping the earliest formation week per unordered pair),
// symmetrizes, and drops self-loops (counted in stats).
TemporalNetwork build_network(std::span<const TemporalEdge> edges,
                              const NetworkOptions& options = {});

// Sorted player ids with an edge to i formed at or before t.
std::vector<PlayerId> neighbors_at(const TemporalNetwork& net, PlayerId i, WeekIndex t);

// Friends of friends as of week t, excluding i and i's direct friends.
std::vector<PlayerId> second_degree_at(const TemporalNetwork& net, PlayerId i, WeekIndex t);

// second_degree_at for many players; parallel, output aligned with input.
std::vector<std::vector<PlayerId>> second_degree_batch(const TemporalNetwork& net,
                                                       std::span<const PlayerId> players,
                                                       WeekIndex t);

// ---- Katz centrality --------------------------------------------------------

struct CentralityScores {
  std::vector<PlayerId> ids;     // aligned with scores, ascending
  std::vector<double> scores;
  WeekIndex asof = 0;
  double alpha = 0.0;
  int iterations = 0;
  bool converged = false;
  double last_change = 0.0;

  double score(PlayerId id) const;
};

// Largest adjacency eigenvalue of the week-t graph from `steps` power
// iterations started at the all-ones vector (a lower bound that tightens
// with steps).
double estimate_spectral_radius(const TemporalNetwork& net, WeekIndex t, int steps = 50);

// Fixed point of x <- alpha * A_t x + 1 by synchronous power iteration.
// converged is false (scores still returned) if the sup-norm change is still
// >= tol after max_iter sweeps. Throws InvalidParameter for alpha <= 0 and
// Diverged when scores pass the overflow guard.
CentralityScores katz_centrality(const TemporalNetwork& net, WeekIndex t, double alpha,
                                 double tol = 1e-10, int max_iter = 1000);

// alpha = fraction / estimate_spectral_radius(net, t, 50). An edgeless graph
// uses alpha = fraction.
double default_katz_alpha(const TemporalNetwork& net, WeekIndex t, double fraction = 0.9);

// ---- Key players and old friends ------------------------------------------

struct PeerTags {
  std::vector<PlayerId> key_players;                       // ascending
  std::vector<std::pair<PlayerId, PlayerId>> old_friend_pairs;  // (low, high), ascending
  WeekIndex reference_week = 0;
  WeekIndex old_friend_cutoff = 0;  // formed <= cutoff qualifies
  double key_player_threshold = 0.0;

  bool is_key_player(PlayerId id) const;
  bool is_old_friend(PlayerId a, PlayerId b) const;
};

struct TagOptions {
  double percentile = 0.99;
  int min_age_weeks = 52;
  int lead_weeks = 4;  // reference_week = release_week - lead_weeks
  // Compute the percentile over nodes with at least one edge at the
  // reference week only.
  bool connected_only = false;
};

// Key players: score >= the empirical percentile (linear interpolation
// between order statistics) of the scores. Old friends: edges formed at or
// before reference_week - min_age_weeks. Throws InvalidParameter if
// release_week < lead_weeks or percentile is outside (0, 1).
PeerTags tag_peers(const TemporalNetwork& net, const CentralityScores& scores,
                   WeekIndex release_week, const TagOptions& options = {});

// Linear-interpolation quantile of an unsorted sample.
double empirical_quantile(std::vector<double> values, double p);

// ---- Input ------------------------------------------------------------------

// CSV `player_a,player_b,formed_unix` (gzip accepted). Throws ParseError with
// the line number on malformed ids or timestamps.
std::vector<TemporalEdge> read_edges_csv(const std::filesystem::path& path,
                                         const WeekClock& clock);

struct NodeRecord {
  PlayerId id;
  double total_playtime_minutes;
};

// CSV `player_id,total_playtime_minutes`.
std::vector<NodeRecord> read_nodes_csv(const std::filesystem::path& path);

}  // namespace peerfx

#include "peerfx/netgraph.h"

#include <algorithm>
#include <bit>
#include <tuple>
#include <unordered_set>

#include "peerfx/csv.h"
#include "peerfx/error.h"
#include "peerfx/parallel.h"
#include "scratch.h"

namespace peerfx {

std::optional<TemporalNetwork::NodeIndex> TemporalNetwork::index_of(PlayerId id) const {
  const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return std::nullopt;
  return static_cast<NodeIndex>(it - ids_.begin());
}

TemporalNetwork::NodeIndex TemporalNetwork::require_index(PlayerId id) const {
  const auto index = index_of(id);
  if (!index) throw NotFound("player " + std::to_string(raw(id)) + " is not in the network");
  return *index;
}

std::span<const TemporalNetwork::Neighbor> TemporalNetwork::adjacency_at(NodeIndex node,
                                                                         WeekIndex t) const {
  const auto all = adjacency(node);
  const auto end = std::upper_bound(all.begin(), all.end(), t,
                                    [](WeekIndex week, const Neighbor& n) { return week < n.formed; });
  return all.first(static_cast<std::size_t>(end - all.begin()));
}

std::optional<WeekIndex> TemporalNetwork::edge_formed(NodeIndex a, NodeIndex b) const {
  auto list = adjacency(a);
  if (adjacency(b).size() < list.size()) {
    list = adjacency(b);
    std::swap(a, b);
  }
  for (const auto& n : list) {
    if (n.node == b) return n.formed;
  }
  return std::nullopt;
}

std::vector<TemporalEdge> TemporalNetwork::edges() const {
  std::vector<TemporalEdge> out;
  out.reserve(edge_count());
  for (NodeIndex a = 0; a < node_count(); ++a) {
    for (const auto& n : adjacency(a)) {
      if (a < n.node) out.push_back({ids_[a], ids_[n.node], n.formed});
    }
  }
  std::sort(out.begin(), out.end(), [](const TemporalEdge& l, const TemporalEdge& r) {
    return std::tie(l.a, l.b) < std::tie(r.a, r.b);
  });
  return out;
}

TemporalNetwork build_network(std::span<const TemporalEdge> edges, const NetworkOptions& options) {
  TemporalNetwork net;
  BuildStats& stats = net.stats_;
  stats.records = edges.size();

  std::vector<PlayerId> ids(options.nodes.begin(), options.nodes.end());
  ids.reserve(ids.size() + 2 * edges.size());
  for (const auto& e : edges) {
    if (e.a == e.b) continue;
    ids.push_back(e.a);
    ids.push_back(e.b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (options.keep) {
    const auto before = ids.size();
    std::erase_if(ids, [&](PlayerId id) { return !options.keep(id); });
    stats.filtered_nodes = before - ids.size();
  }
  net.ids_ = std::move(ids);

  struct Pending {
    TemporalNetwork::NodeIndex lo, hi;
    WeekIndex formed;
  };
  std::vector<Pending> pending;
  pending.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.a == e.b) {
      ++stats.self_loops;
      continue;
    }
    const auto a = net.index_of(e.a);
    const auto b = net.index_of(e.b);
    if (!a || !b) {
      ++stats.filtered_edges;
      continue;
    }
    pending.push_back({std::min(*a, *b), std::max(*a, *b), e.formed});
  }
  std::sort(pending.begin(), pending.end(), [](const Pending& l, const Pending& r) {
    return std::tie(l.lo, l.hi, l.formed) < std::tie(r.lo, r.hi, r.formed);
  });
  // Sorted by formed within a pair, so the first copy is the earliest.
  const auto last = std::unique(pending.begin(), pending.end(), [](const Pending& l, const Pending& r) {
    return l.lo == r.lo && l.hi == r.hi;
  });
  stats.duplicates = static_cast<std::size_t>(pending.end() - last);
  pending.erase(last, pending.end());

  std::sort(pending.begin(), pending.end(), [](const Pending& l, const Pending& r) {
    return std::tie(l.formed, l.lo, l.hi) < std::tie(r.formed, r.lo, r.hi);
  });
  const std::size_t n = net.ids_.size();
  std::vector<std::size_t> degree(n, 0);
  std::vector<Pending> admitted;
  admitted.reserve(pending.size());
  for (const auto& p : pending) {
    if (degree[p.lo] >= options.degree_cap || degree[p.hi] >= options.degree_cap) {
      ++stats.cap_rejected;
      continue;
    }
    ++degree[p.lo];
    ++degree[p.hi];
    admitted.push_back(p);
  }

  net.offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) net.offsets_[v + 1] = net.offsets_[v] + degree[v];
  net.entries_.resize(net.offsets_[n]);
  std::vector<std::size_t> fill(net.offsets_.begin(), net.offsets_.end() - 1);
  // admitted is in (formed, lo, hi) order, so each list receives neighbors
  // in formation order; ties within a week are re-sorted by index below.
  for (const auto& p : admitted) {
    net.entries_[fill[p.lo]++] = {p.hi, p.formed};
    net.entries_[fill[p.hi]++] = {p.lo, p.formed};
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(net.entries_.begin() + static_cast<std::ptrdiff_t>(net.offsets_[v]),
              net.entries_.begin() + static_cast<std::ptrdiff_t>(net.offsets_[v + 1]),
              [](const TemporalNetwork::Neighbor& l, const TemporalNetwork::Neighbor& r) {
                return std::tie(l.formed, l.node) < std::tie(r.formed, r.node);
              });
  }
  return net;
}

std::vector<PlayerId> neighbors_at(const TemporalNetwork& net, PlayerId i, WeekIndex t) {
  const auto node = net.require_index(i);
  std::vector<PlayerId> out;
  for (const auto& n : net.adjacency_at(node, t)) out.push_back(net.id_at(n.node));
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

using NodeIndex = TemporalNetwork::NodeIndex;

// Friends are marked with stamp 2e, collected second-degree nodes with 2e+1
// (epochs advance by two per query).
std::vector<PlayerId> second_degree_with(const TemporalNetwork& net, NodeIndex root, WeekIndex t,
                                         detail::NodeMarks& scratch) {
  const std::uint32_t friend_mark = scratch.next_epoch();
  const std::uint32_t found_mark = scratch.next_epoch();
  auto& stamp = scratch.stamp;
  const auto friends = net.adjacency_at(root, t);
  stamp[root] = friend_mark;
  for (const auto& j : friends) stamp[j.node] = friend_mark;
  std::vector<NodeIndex> found;
  for (const auto& j : friends) {
    for (const auto& k : net.adjacency_at(j.node, t)) {
      const std::uint32_t s = stamp[k.node];
      if (s == friend_mark || s == found_mark) continue;
      stamp[k.node] = found_mark;
      found.push_back(k.node);
    }
  }
  std::vector<PlayerId> out;
  out.reserve(found.size());
  if (found.size() * 256 < net.node_count()) {
    std::sort(found.begin(), found.end());
    for (auto k : found) out.push_back(net.id_at(k));
    return out;
  }
  // Dense result: a bitset scan emits indices in order without sorting.
  auto& bits = scratch.bits;
  for (auto k : found) bits[k >> 6] |= std::uint64_t{1} << (k & 63);
  for (std::size_t w = 0; w < bits.size(); ++w) {
    std::uint64_t word = bits[w];
    if (word == 0) continue;
    bits[w] = 0;
    while (word != 0) {
      const auto bit = static_cast<std::size_t>(std::countr_zero(word));
      out.push_back(net.id_at(static_cast<NodeIndex>(w * 64 + bit)));
      word &= word - 1;
    }
  }
  return out;
}

}  // namespace

std::vector<PlayerId> second_degree_at(const TemporalNetwork& net, PlayerId i, WeekIndex t) {
  const auto root = net.require_index(i);
  const auto friends = net.adjacency_at(root, t);
  std::vector<NodeIndex> direct;
  direct.reserve(friends.size() + 1);
  for (const auto& j : friends) direct.push_back(j.node);
  direct.push_back(root);
  std::sort(direct.begin(), direct.end());
  std::vector<NodeIndex> found;
  for (const auto& j : friends) {
    for (const auto& k : net.adjacency_at(j.node, t)) {
      if (!std::binary_search(direct.begin(), direct.end(), k.node)) found.push_back(k.node);
    }
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  std::vector<PlayerId> out;
  out.reserve(found.size());
  for (auto k : found) out.push_back(net.id_at(k));
  return out;
}

std::vector<std::vector<PlayerId>> second_degree_batch(const TemporalNetwork& net,
                                                       std::span<const PlayerId> players,
                                                       WeekIndex t) {
  std::vector<NodeIndex> roots(players.size());
  for (std::size_t p = 0; p < players.size(); ++p) roots[p] = net.require_index(players[p]);
  std::vector<std::vector<PlayerId>> out(players.size());
  parallel_for(players.size(), 1024, [&](std::size_t begin, std::size_t end) {
    thread_local detail::NodeMarks scratch;
    scratch.ensure(net.node_count());
    for (std::size_t p = begin; p < end; ++p) out[p] = second_degree_with(net, roots[p], t, scratch);
  });
  return out;
}

std::vector<TemporalEdge> read_edges_csv(const std::filesystem::path& path, const WeekClock& clock) {
  LineReader reader(path);
  expect_header(reader, {"player_a", "player_b", "formed_unix"});
  std::vector<TemporalEdge> edges;
  std::vector<std::string_view> fields;
  std::string_view line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_fields(line, fields);
    std::uint64_t a = 0, b = 0;
    std::int64_t formed = 0;
    if (fields.size() < 3) throw ParseError(reader.source(), reader.line_number(), "expected 3 fields");
    if (!parse_u64(fields[0], a) || !parse_u64(fields[1], b)) {
      throw ParseError(reader.source(), reader.line_number(), "malformed player id");
    }
    if (!parse_i64(fields[2], formed)) {
      throw ParseError(reader.source(), reader.line_number(), "malformed timestamp");
    }
    edges.push_back({PlayerId{a}, PlayerId{b}, clock.week_of(formed)});
  }
  return edges;
}

std::vector<NodeRecord> read_nodes_csv(const std::filesystem::path& path) {
  LineReader reader(path);
  expect_header(reader, {"player_id", "total_playtime_minutes"});
  std::vector<NodeRecord> nodes;
  std::vector<std::string_view> fields;
  std::string_view line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_fields(line, fields);
    std::uint64_t id = 0;
    double minutes = 0;
    if (fields.size() < 2 || !parse_u64(fields[0], id)) {
      throw ParseError(reader.source(), reader.line_number(), "malformed player id");
    }
    if (!parse_double(fields[1], minutes)) {
      throw ParseError(reader.source(), reader.line_number(), "malformed playtime");
    }
    nodes.push_back({PlayerId{id}, minutes});
  }
  return nodes;
}

}  // namespace peerfx

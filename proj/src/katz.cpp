#include "peerfx/netgraph.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "peerfx/error.h"
#include "peerfx/parallel.h"

namespace peerfx {

namespace {

constexpr std::size_t kGrain = 4096;
constexpr double kOverflowGuard = 1e12;

// out = A_t * in, one row per node; rows are independent so the result does
// not depend on the thread count.
void multiply_adjacency(const TemporalNetwork& net, WeekIndex t, const std::vector<double>& in,
                        std::vector<double>& out) {
  parallel_for(net.node_count(), kGrain, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      double sum = 0.0;
      for (const auto& n : net.adjacency_at(static_cast<TemporalNetwork::NodeIndex>(v), t)) {
        sum += in[n.node];
      }
      out[v] = sum;
    }
  });
}

double norm2(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace

double CentralityScores::score(PlayerId id) const {
  const auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) {
    throw NotFound("no centrality score for player " + std::to_string(raw(id)));
  }
  return scores[static_cast<std::size_t>(it - ids.begin())];
}

double estimate_spectral_radius(const TemporalNetwork& net, WeekIndex t, int steps) {
  const std::size_t n = net.node_count();
  if (n == 0) return 0.0;
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(n);
  double estimate = 0.0;
  for (int s = 0; s < steps; ++s) {
    multiply_adjacency(net, t, x, y);
    estimate = norm2(y);
    if (estimate == 0.0) return 0.0;
    for (std::size_t v = 0; v < n; ++v) x[v] = y[v] / estimate;
  }
  return estimate;
}

double default_katz_alpha(const TemporalNetwork& net, WeekIndex t, double fraction) {
  const double radius = estimate_spectral_radius(net, t, 50);
  return radius > 0.0 ? fraction / radius : fraction;
}

CentralityScores katz_centrality(const TemporalNetwork& net, WeekIndex t, double alpha, double tol,
                                 int max_iter) {
  if (!(alpha > 0.0)) throw InvalidParameter("Katz alpha must be positive, got " + std::to_string(alpha));
  if (!(tol > 0.0)) throw InvalidParameter("Katz tolerance must be positive");

  const std::size_t n = net.node_count();
  CentralityScores result;
  result.ids.assign(net.nodes().begin(), net.nodes().end());
  result.asof = t;
  result.alpha = alpha;
  std::vector<double> x(n, 1.0);
  std::vector<double> ax(n);
  for (int iter = 1; iter <= max_iter; ++iter) {
    multiply_adjacency(net, t, x, ax);
    double change = 0.0;
    double peak = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double next = alpha * ax[v] + 1.0;
      change = std::max(change, std::abs(next - x[v]));
      peak = std::max(peak, next);
      x[v] = next;
    }
    result.iterations = iter;
    result.last_change = change;
    if (!(peak < kOverflowGuard)) {
      throw Diverged("Katz iteration diverged with alpha = " + std::to_string(alpha) +
                     " (alpha must stay below 1 / spectral radius)");
    }
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  if (max_iter <= 0) result.converged = n == 0;
  result.scores = std::move(x);
  return result;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  const double position = p * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const double fraction = position - static_cast<double>(lower);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lower), values.end());
  const double low = values[lower];
  if (fraction == 0.0 || lower + 1 >= values.size()) return low;
  const double high = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lower) + 1, values.end());
  return low + fraction * (high - low);
}

bool PeerTags::is_key_player(PlayerId id) const {
  return std::binary_search(key_players.begin(), key_players.end(), id);
}

bool PeerTags::is_old_friend(PlayerId a, PlayerId b) const {
  const auto pair = a < b ? std::pair{a, b} : std::pair{b, a};
  return std::binary_search(old_friend_pairs.begin(), old_friend_pairs.end(), pair);
}

PeerTags tag_peers(const TemporalNetwork& net, const CentralityScores& scores,
                   WeekIndex release_week, const TagOptions& options) {
  if (release_week < options.lead_weeks) {
    throw InvalidParameter("release week " + std::to_string(release_week) + " is earlier than the " +
                           std::to_string(options.lead_weeks) + "-week key-player lead");
  }
  if (!(options.percentile > 0.0 && options.percentile < 1.0)) {
    throw InvalidParameter("percentile must lie in (0, 1)");
  }
  if (scores.scores.size() != net.node_count()) {
    throw InvalidParameter("centrality scores do not match the network");
  }

  PeerTags tags;
  tags.reference_week = release_week - options.lead_weeks;
  tags.old_friend_cutoff = tags.reference_week - options.min_age_weeks;

  std::vector<double> sample;
  sample.reserve(scores.scores.size());
  for (std::size_t v = 0; v < scores.scores.size(); ++v) {
    if (options.connected_only &&
        net.degree_at(static_cast<TemporalNetwork::NodeIndex>(v), tags.reference_week) == 0) {
      continue;
    }
    sample.push_back(scores.scores[v]);
  }
  if (!sample.empty()) {
    tags.key_player_threshold = empirical_quantile(sample, options.percentile);
    for (std::size_t v = 0; v < scores.scores.size(); ++v) {
      if (options.connected_only &&
          net.degree_at(static_cast<TemporalNetwork::NodeIndex>(v), tags.reference_week) == 0) {
        continue;
      }
      if (scores.scores[v] >= tags.key_player_threshold) tags.key_players.push_back(net.id_at(
          static_cast<TemporalNetwork::NodeIndex>(v)));
    }
  }

  for (TemporalNetwork::NodeIndex a = 0; a < net.node_count(); ++a) {
    for (const auto& n : net.adjacency_at(a, tags.old_friend_cutoff)) {
      if (a < n.node) tags.old_friend_pairs.emplace_back(net.id_at(a), net.id_at(n.node));
    }
  }
  std::sort(tags.old_friend_pairs.begin(), tags.old_friend_pairs.end());
  return tags;
}

}  // namespace peerfx

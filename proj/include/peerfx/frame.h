#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerfx/types.h"

namespace peerfx {

// Column store keyed by row: player and week identify each observation,
// numeric columns carry the regression variables.
class Frame {
 public:
  Frame() = default;
  Frame(std::vector<PlayerId> players, std::vector<WeekIndex> weeks);

  std::size_t rows() const noexcept { return players_.size(); }
  std::span<const PlayerId> players() const noexcept { return players_; }
  std::span<const WeekIndex> weeks() const noexcept { return weeks_; }

  // Replaces an existing column of the same name. Length must equal rows().
  void set_column(const std::string& name, std::vector<double> values);
  bool has_column(std::string_view name) const;
  // Throws NotFound.
  std::span<const double> column(std::string_view name) const;
  std::vector<double>& mutable_column(std::string_view name);
  const std::vector<std::string>& column_names() const noexcept { return names_; }

 private:
  std::vector<PlayerId> players_;
  std::vector<WeekIndex> weeks_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

}  // namespace peerfx

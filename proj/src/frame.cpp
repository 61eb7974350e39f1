#include "peerfx/frame.h"

#include <algorithm>

#include "peerfx/error.h"

namespace peerfx {

Frame::Frame(std::vector<PlayerId> players, std::vector<WeekIndex> weeks)
    : players_(std::move(players)), weeks_(std::move(weeks)) {
  if (players_.size() != weeks_.size()) throw InvalidParameter("player and week columns differ in length");
}

void Frame::set_column(const std::string& name, std::vector<double> values) {
  if (values.size() != rows()) {
    throw InvalidParameter("column " + name + " has " + std::to_string(values.size()) +
                           " values for " + std::to_string(rows()) + " rows");
  }
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it != names_.end()) {
    columns_[static_cast<std::size_t>(it - names_.begin())] = std::move(values);
    return;
  }
  names_.push_back(name);
  columns_.push_back(std::move(values));
}

bool Frame::has_column(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::span<const double> Frame::column(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw NotFound("no column named " + std::string(name));
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

std::vector<double>& Frame::mutable_column(std::string_view name) {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw NotFound("no column named " + std::string(name));
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

}  // namespace peerfx

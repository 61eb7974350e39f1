#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>

namespace peerfx {

// Platform account identifier (a Steam ID in the original data).
enum class PlayerId : std::uint64_t {};

constexpr std::uint64_t raw(PlayerId id) noexcept {
  return static_cast<std::uint64_t>(id);
}

// Whole weeks elapsed since the configured epoch.
using WeekIndex = std::int32_t;

inline constexpr WeekIndex kNever = std::numeric_limits<WeekIndex>::max();

inline constexpr std::int64_t kSecondsPerWeek = 604800;

// 2008-09-01T00:00:00Z, the start of the friendship crawl horizon.
inline constexpr std::int64_t kDefaultEpochUnix = 1220227200;

using GameId = std::string;

struct WeekClock {
  std::int64_t epoch_unix = kDefaultEpochUnix;

  // floor((unix - epoch) / 604800); instants before the epoch map to week 0.
  WeekIndex week_of(std::int64_t unix_seconds) const noexcept {
    const std::int64_t delta = unix_seconds - epoch_unix;
    if (delta <= 0) return 0;
    return static_cast<WeekIndex>(delta / kSecondsPerWeek);
  }

  std::int64_t start_of(WeekIndex week) const noexcept {
    return epoch_unix + static_cast<std::int64_t>(week) * kSecondsPerWeek;
  }
};

}  // namespace peerfx

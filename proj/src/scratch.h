#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace peerfx::detail {

// Epoch-stamped marks over node indices, reused across queries on one
// thread. A slot is "set" when stamp[v] equals the current epoch.
struct NodeMarks {
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
  // All-zero between queries.
  std::vector<std::uint64_t> bits;

  void ensure(std::size_t n) {
    if (stamp.size() < n) {
      stamp.assign(n, 0);
      epoch = 0;
      bits.assign((n + 63) / 64, 0);
    }
  }

  std::uint32_t next_epoch() {
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      epoch = 1;
    }
    return epoch;
  }
};

}  // namespace peerfx::detail

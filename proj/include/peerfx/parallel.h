#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

namespace peerfx {

// Process-wide worker cap. 0 restores the hardware default.
void set_thread_count(unsigned threads);
unsigned thread_count();

// Calls body(begin, end) over [0, n) split into chunks of `grain` items.
// Chunk boundaries depend only on n and grain, never on the thread count,
// so any per-chunk result is reproducible.
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

inline std::size_t chunk_count(std::size_t n, std::size_t grain) {
  return grain == 0 ? 0 : (n + grain - 1) / grain;
}

// Pairwise reduction in fixed order: ((p0+p1)+(p2+p3))+...
template <typename T, typename Combine>
T tree_reduce(std::vector<T> parts, Combine combine) {
  if (parts.empty()) return T{};
  std::size_t width = 1;
  while (width < parts.size()) {
    for (std::size_t i = 0; i + width < parts.size(); i += 2 * width) {
      parts[i] = combine(parts[i], parts[i + width]);
    }
    width *= 2;
  }
  return parts.front();
}

}  // namespace peerfx

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace backbone {

// An indicator id indexes the problem's indicator universe: a feature for
// supervised problems, a point (for sampling) or a point-pair (for the
// backbone set) in clustering.
using IndicatorId = std::uint32_t;

// Sorted ascending, no duplicates.
using IndexSet = std::vector<IndicatorId>;

inline void sort_unique(IndexSet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

inline bool contains(const IndexSet& s, IndicatorId id) {
  return std::binary_search(s.begin(), s.end(), id);
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool is_subset(const IndexSet& sub, const IndexSet& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

// Unordered point pair (i, j), i < j, flattened to a single id so the engine
// can treat pairs as indicators.
inline IndicatorId pair_to_id(std::uint32_t i, std::uint32_t j, std::uint32_t n) {
  if (i > j) std::swap(i, j);
  // row-major upper triangle
  return static_cast<IndicatorId>(i * (2 * static_cast<std::uint64_t>(n) - i - 1) / 2 + (j - i - 1));
}

inline std::pair<std::uint32_t, std::uint32_t> id_to_pair(IndicatorId id, std::uint32_t n) {
  std::uint32_t i = 0;
  std::uint64_t offset = id;
  while (offset >= n - i - 1) {
    offset -= n - i - 1;
    ++i;
  }
  return {i, static_cast<std::uint32_t>(i + 1 + offset)};
}

inline std::uint64_t num_pairs(std::uint32_t n) {
  return static_cast<std::uint64_t>(n) * (n - 1) / 2;
}

}  // namespace backbone

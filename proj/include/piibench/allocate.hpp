#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "piibench/error.hpp"

namespace piibench {

/// Largest-remainder apportionment of `target` units over integer weights.
///
/// Each bucket first receives floor(target * w / W), computed exactly in
/// integer arithmetic, capped at `capacity`. Leftover units go one at a time
/// to the buckets with the largest fractional remainders; equal remainders are
/// ordered by `rank` (lower first). Buckets at capacity are skipped, which
/// passes the unit on to the next-largest remainder.
inline std::vector<std::uint64_t> apportion(const std::vector<std::uint64_t>& weights,
                                            std::uint64_t target,
                                            const std::vector<std::uint64_t>& capacity,
                                            const std::vector<std::size_t>& rank) {
  const std::size_t n = weights.size();
  const std::uint64_t total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
  std::vector<std::uint64_t> alloc(n, 0);
  if (target == 0) return alloc;
  if (total == 0) throw DataError("cannot apportion over zero total weight");
  const std::uint64_t room =
      std::accumulate(capacity.begin(), capacity.end(), std::uint64_t{0});
  if (target > room)
    throw DataError("allocation target " + std::to_string(target) + " exceeds capacity " +
                    std::to_string(room));

  using u128 = unsigned __int128;
  std::vector<std::uint64_t> remainder(n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    u128 num = static_cast<u128>(target) * weights[i];
    alloc[i] = std::min<std::uint64_t>(static_cast<std::uint64_t>(num / total), capacity[i]);
    remainder[i] = static_cast<std::uint64_t>(num % total);
    assigned += alloc[i];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return rank[a] < rank[b];
  });

  while (assigned < target) {
    bool progressed = false;
    for (std::size_t i : order) {
      if (assigned == target) break;
      if (alloc[i] < capacity[i]) {
        ++alloc[i];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return alloc;
}

/// Per-source allocation proportional to record counts. Equal remainders go
/// to the larger source first, then to the lexicographically smaller name.
inline std::map<std::string, std::uint64_t> largest_remainder_allocate(
    const std::map<std::string, std::uint64_t>& counts, std::uint64_t target_total) {
  std::vector<std::string> names;
  std::vector<std::uint64_t> weights;
  for (const auto& [name, count] : counts) {
    names.push_back(name);
    weights.push_back(count);
  }
  const std::uint64_t total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
  if (target_total > total)
    throw DataError("target " + std::to_string(target_total) + " exceeds total count " +
                    std::to_string(total));

  std::vector<std::size_t> by_priority(names.size());
  std::iota(by_priority.begin(), by_priority.end(), std::size_t{0});
  std::stable_sort(by_priority.begin(), by_priority.end(), [&](std::size_t a, std::size_t b) {
    return weights[a] > weights[b];  // names are already ascending
  });
  std::vector<std::size_t> rank(names.size());
  for (std::size_t r = 0; r < by_priority.size(); ++r) rank[by_priority[r]] = r;

  auto alloc = apportion(weights, target_total, weights, rank);
  std::map<std::string, std::uint64_t> out;
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = alloc[i];
  return out;
}

/// Splits `count` items by real-valued fractions. Fractions are scaled to
/// integer weights at 1e-9 resolution; ties go to the earlier fraction.
inline std::vector<std::uint64_t> allocate_by_fractions(std::uint64_t count,
                                                        const std::vector<double>& fractions) {
  std::vector<std::uint64_t> weights;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw UsageError("fractions must be non-negative");
    weights.push_back(static_cast<std::uint64_t>(std::llround(f * 1e9)));
  }
  std::vector<std::size_t> rank(fractions.size());
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::vector<std::uint64_t> capacity(fractions.size(), count);
  return apportion(weights, count, capacity, rank);
}

}  // namespace piibench

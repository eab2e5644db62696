#pragma once

// Test-only reference implementations. These deliberately avoid the library's
// code paths so they can serve as independent oracles.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

/// (type, start, end_exclusive)
using SpanTuple = std::tuple<std::string, std::size_t, std::size_t>;

/// Chunk-boundary state machine over raw tag strings, written in the style of
/// the reference evaluation library: every position is classified by the
/// (previous tag, current tag) pair.
inline std::vector<SpanTuple> spans(const std::vector<std::string>& labels) {
  auto tag_of = [](const std::string& l) { return l == "O" ? 'O' : l[0]; };
  auto type_of = [](const std::string& l) { return l == "O" ? std::string() : l.substr(2); };

  std::vector<SpanTuple> out;
  char prev_tag = 'O';
  std::string prev_type;
  std::size_t begin = 0;
  bool inside = false;
  for (std::size_t i = 0; i <= labels.size(); ++i) {
    char tag = i < labels.size() ? tag_of(labels[i]) : 'O';
    std::string type = i < labels.size() ? type_of(labels[i]) : std::string();

    bool chunk_end = false;
    if (prev_tag == 'B' && (tag == 'B' || tag == 'O')) chunk_end = true;
    if (prev_tag == 'I' && (tag == 'B' || tag == 'O')) chunk_end = true;
    if (prev_tag != 'O' && prev_type != type) chunk_end = true;

    bool chunk_start = false;
    if (tag == 'B') chunk_start = true;
    if (prev_tag == 'O' && tag == 'I') chunk_start = true;
    if (tag != 'O' && prev_type != type) chunk_start = true;

    if (chunk_end && inside) {
      out.emplace_back(prev_type, begin, i);
      inside = false;
    }
    if (chunk_start) {
      begin = i;
      inside = true;
    }
    prev_tag = tag;
    prev_type = type;
  }
  return out;
}

/// Naive whole-corpus scorer: collects every span of every record into sets
/// keyed by record index and intersects them.
struct Counts {
  std::uint64_t tp = 0, pred = 0, gold = 0;
  bool operator==(const Counts&) const = default;
};

inline std::map<std::string, Counts> batch_score(const std::vector<std::vector<std::string>>& gold,
                                                 const std::vector<std::vector<std::string>>& pred) {
  using Key = std::tuple<std::size_t, std::string, std::size_t, std::size_t>;
  std::set<Key> g, p;
  for (std::size_t r = 0; r < gold.size(); ++r) {
    for (auto& [t, b, e] : spans(gold[r])) g.emplace(r, t, b, e);
    for (auto& [t, b, e] : spans(pred[r])) p.emplace(r, t, b, e);
  }
  std::map<std::string, Counts> out;
  for (const auto& k : g) ++out[std::get<1>(k)].gold;
  for (const auto& k : p) {
    ++out[std::get<1>(k)].pred;
    if (g.count(k)) ++out[std::get<1>(k)].tp;
  }
  return out;
}

/// Random BIO tag strings over `types`; O is drawn about a third of the time.
inline std::vector<std::string> random_labels(std::mt19937_64& rng, std::size_t len,
                                              const std::vector<std::string>& types) {
  std::vector<std::string> out;
  std::uniform_int_distribution<std::size_t> pick(0, 2 * types.size());
  for (std::size_t i = 0; i < len; ++i) {
    std::size_t k = pick(rng);
    if (k == 2 * types.size())
      out.push_back("O");
    else
      out.push_back((k % 2 ? "I-" : "B-") + types[k / 2]);
  }
  return out;
}

/// Largest-remainder by exhaustive search: among all allocations with
/// floor(quota) <= a_i <= floor(quota) + 1 summing to target, pick the one
/// whose set of +1 buckets has the lexicographically largest remainders.
/// Small inputs only.
inline std::vector<std::uint64_t> brute_force_allocate(const std::vector<std::uint64_t>& counts,
                                                       std::uint64_t target) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  const std::size_t n = counts.size();
  std::vector<std::uint64_t> floors(n);
  std::vector<double> rem(n);
  std::uint64_t base = 0;
  for (std::size_t i = 0; i < n; ++i) {
    floors[i] = target * counts[i] / total;
    rem[i] = static_cast<double>(target * counts[i] % total) / static_cast<double>(total);
    base += floors[i];
  }
  const std::uint64_t extra = target - base;
  std::vector<std::uint64_t> best;
  std::vector<double> best_key;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    if (static_cast<std::uint64_t>(__builtin_popcountll(mask)) != extra) continue;
    std::vector<double> key;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) key.push_back(rem[i]);
    std::sort(key.rbegin(), key.rend());
    if (best.empty() || key > best_key) {
      best_key = key;
      best = floors;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1) ++best[i];
    }
  }
  return best;
}

}  // namespace oracle

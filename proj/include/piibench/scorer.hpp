#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "piibench/biospan.hpp"
#include "piibench/error.hpp"
#include "piibench/labelspace.hpp"
#include "piibench/record.hpp"

namespace piibench {

struct TypeCounts {
  std::uint64_t tp = 0;
  std::uint64_t pred = 0;
  std::uint64_t gold = 0;

  TypeCounts& operator+=(const TypeCounts& o) {
    tp += o.tp;
    pred += o.pred;
    gold += o.gold;
    return *this;
  }
  friend bool operator==(const TypeCounts&, const TypeCounts&) = default;
};

/// Per-type span counters. Merging is fieldwise addition, so counters form a
/// commutative monoid and chunks can be combined in any order.
class TypeCounters {
 public:
  TypeCounts& operator[](const std::string& type) { return counts_[type]; }
  const std::map<std::string, TypeCounts>& by_type() const noexcept { return counts_; }

  TypeCounts total() const {
    TypeCounts t;
    for (const auto& [_, c] : counts_) t += c;
    return t;
  }

  TypeCounters& merge(const TypeCounters& other) {
    for (const auto& [type, c] : other.counts_) counts_[type] += c;
    return *this;
  }

  bool empty() const noexcept { return counts_.empty(); }

  friend bool operator==(const TypeCounters&, const TypeCounters&) = default;

 private:
  std::map<std::string, TypeCounts> counts_;
};

inline TypeCounters merge(TypeCounters a, const TypeCounters& b) { return a.merge(b); }

/// Exact-match span counts for one aligned gold/prediction pair.
inline TypeCounters score_pair(const BioSequence& gold, const BioSequence& pred) {
  if (gold.size() != pred.size())
    throw DataError("length mismatch: gold has " + std::to_string(gold.size()) +
                    " labels, prediction has " + std::to_string(pred.size()));
  TypeCounters delta;
  auto g = extract_spans(gold);
  auto p = extract_spans(pred);
  for (const auto& s : g) ++delta[s.entity].gold;
  for (const auto& s : p) ++delta[s.entity].pred;
  // Spans are sorted by start and non-overlapping within each list.
  std::size_t i = 0, j = 0;
  while (i < g.size() && j < p.size()) {
    if (g[i].start < p[j].start) {
      ++i;
    } else if (p[j].start < g[i].start) {
      ++j;
    } else {
      if (g[i].end == p[j].end && g[i].entity == p[j].entity) ++delta[g[i].entity].tp;
      ++i;
      ++j;
    }
  }
  return delta;
}

struct Metrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

inline double harmonic_f1(double precision, double recall) {
  double s = precision + recall;
  return s > 0 ? 2.0 * precision * recall / s : 0.0;
}

/// Precision, recall and F1 with 0 for any zero denominator.
inline Metrics metrics_from(const TypeCounts& c) {
  Metrics m;
  m.precision = c.pred ? static_cast<double>(c.tp) / static_cast<double>(c.pred) : 0.0;
  m.recall = c.gold ? static_cast<double>(c.tp) / static_cast<double>(c.gold) : 0.0;
  m.f1 = harmonic_f1(m.precision, m.recall);
  return m;
}

struct TypeMetrics {
  Metrics metrics;
  TypeCounts counts;  // counts.gold is the support
};

struct MetricsReport {
  Metrics micro;
  TypeCounts totals;
  std::map<std::string, TypeMetrics> per_type;
  std::uint64_t records = 0;
  std::uint64_t chunks = 0;
};

/// Micro metrics come from the summed counters, never from averaging types.
inline MetricsReport finalize(const TypeCounters& counters, std::uint64_t records = 0,
                              std::uint64_t chunks = 0) {
  MetricsReport r;
  r.totals = counters.total();
  r.micro = metrics_from(r.totals);
  for (const auto& [type, c] : counters.by_type()) r.per_type[type] = {metrics_from(c), c};
  r.records = records;
  r.chunks = chunks;
  return r;
}

// --- streaming -------------------------------------------------------------

struct StreamOptions {
  std::size_t chunk_size = 5000;
  /// Index the prediction file by id instead of requiring gold order.
  bool unordered = false;
};

namespace detail {

struct IdLabels {
  std::string id;
  BioSequence labels;
};

inline IdLabels parse_id_labels(const std::string& line, std::size_t lineno, const std::string& name) {
  try {
    auto j = parse_json_object(line, lineno);
    return {get_field<std::string>(j, "id", lineno),
            parse_bio_sequence(get_field<std::vector<std::string>>(j, "labels", lineno))};
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
}

}  // namespace detail

/// Scores aligned gold and prediction JSON-lines streams chunk by chunk.
/// Only the current chunk and the per-type counters are held in memory
/// (plus the prediction index in unordered mode).
inline MetricsReport stream_score(std::istream& gold_in, std::istream& pred_in,
                                  const StreamOptions& opts = {},
                                  const std::string& gold_name = "gold",
                                  const std::string& pred_name = "pred") {
  if (opts.chunk_size == 0) throw UsageError("chunk size must be positive");
  JsonlLineReader gold_lines(gold_in, gold_name);
  JsonlLineReader pred_lines(pred_in, pred_name);

  std::unordered_map<std::string, BioSequence> pred_index;
  if (opts.unordered) {
    while (auto line = pred_lines.next()) {
      auto p = detail::parse_id_labels(*line, pred_lines.line_number(), pred_name);
      if (!pred_index.emplace(p.id, std::move(p.labels)).second)
        throw DataError(pred_name + ": duplicate prediction id '" + p.id + "'");
    }
  }

  TypeCounters total;
  std::uint64_t records = 0, chunks = 0;
  std::vector<std::pair<detail::IdLabels, BioSequence>> chunk;
  chunk.reserve(opts.chunk_size);

  auto flush = [&] {
    if (chunk.empty()) return;
    TypeCounters part;
    for (const auto& [g, p] : chunk) {
      try {
        part.merge(score_pair(g.labels, p));
      } catch (const DataError& e) {
        throw DataError("record '" + g.id + "': " + e.what());
      }
    }
    total.merge(part);
    records += chunk.size();
    ++chunks;
    chunk.clear();
  };

  while (auto line = gold_lines.next()) {
    auto g = detail::parse_id_labels(*line, gold_lines.line_number(), gold_name);
    BioSequence p;
    if (opts.unordered) {
      auto it = pred_index.find(g.id);
      if (it == pred_index.end()) throw DataError("no prediction for record '" + g.id + "'");
      p = std::move(it->second);
      pred_index.erase(it);
    } else {
      auto pl = pred_lines.next();
      if (!pl) throw DataError("prediction file ends before record '" + g.id + "'");
      auto pr = detail::parse_id_labels(*pl, pred_lines.line_number(), pred_name);
      if (pr.id != g.id)
        throw DataError("id mismatch at " + pred_name + " line " +
                        std::to_string(pred_lines.line_number()) + ": expected '" + g.id +
                        "', found '" + pr.id + "'");
      p = std::move(pr.labels);
    }
    chunk.emplace_back(std::move(g), std::move(p));
    if (chunk.size() == opts.chunk_size) flush();
  }
  flush();

  if (opts.unordered) {
    if (!pred_index.empty())
      throw DataError("prediction for unknown record '" + pred_index.begin()->first + "'");
  } else if (auto extra = pred_lines.next()) {
    auto pr = detail::parse_id_labels(*extra, pred_lines.line_number(), pred_name);
    throw DataError("prediction for unknown record '" + pr.id + "' after end of gold file");
  }
  return finalize(total, records, chunks);
}

inline MetricsReport stream_score_files(const std::string& gold_path, const std::string& pred_path,
                                        const StreamOptions& opts = {}) {
  auto g = open_input(gold_path);
  auto p = open_input(pred_path);
  return stream_score(g, p, opts, gold_path, pred_path);
}

// --- report I/O -------------------------------------------------------------

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["records"] = r.records;
  j["chunks"] = r.chunks;
  j["micro"] = {{"precision", r.micro.precision}, {"recall", r.micro.recall}, {"f1", r.micro.f1},
                {"tp", r.totals.tp},               {"pred", r.totals.pred},     {"gold", r.totals.gold}};
  j["per_type"] = nlohmann::ordered_json::object();
  for (const auto& [type, t] : r.per_type)
    j["per_type"][type] = {{"precision", t.metrics.precision}, {"recall", t.metrics.recall},
                           {"f1", t.metrics.f1},               {"support", t.counts.gold},
                           {"tp", t.counts.tp},                {"pred", t.counts.pred}};
  return j;
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    const auto& m = j.at("micro");
    r.micro = {m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>()};
    r.totals = {m.value("tp", std::uint64_t{0}), m.value("pred", std::uint64_t{0}),
                m.value("gold", std::uint64_t{0})};
    r.records = j.value("records", std::uint64_t{0});
    r.chunks = j.value("chunks", std::uint64_t{0});
    if (j.contains("per_type"))
      for (const auto& [type, t] : j["per_type"].items())
        r.per_type[type] = {{t.at("precision").get<double>(), t.at("recall").get<double>(),
                             t.at("f1").get<double>()},
                            {t.value("tp", std::uint64_t{0}), t.value("pred", std::uint64_t{0}),
                             t.at("support").get<std::uint64_t>()}};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
  return r;
}

/// CSV with columns type,group,support,precision,recall,f1. The group is
/// left empty for types outside `space` (or when no space is given).
inline std::string report_to_csv(const MetricsReport& r, const LabelSpace* space = nullptr) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(6);
  out << "type,group,support,precision,recall,f1\n";
  for (const auto& [type, t] : r.per_type) {
    out << type << ',' << (space && space->contains(type) ? space->coarse_of(type) : "") << ','
        << t.counts.gold << ',' << t.metrics.precision << ',' << t.metrics.recall << ','
        << t.metrics.f1 << '\n';
  }
  return out.str();
}

}  // namespace piibench

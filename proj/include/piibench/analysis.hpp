#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "piibench/error.hpp"
#include "piibench/labelspace.hpp"
#include "piibench/scorer.hpp"

namespace piibench {

/// One fine entity type with its gold support and F1 per system.
struct EntityRow {
  std::string entity;
  std::string group;
  std::uint64_t support = 0;
  std::map<std::string, double> f1;
};

struct GroupScore {
  std::string group;
  std::uint64_t support = 0;
  double f1 = 0;
};

struct WinCount {
  std::uint64_t wins_a = 0;
  std::uint64_t wins_b = 0;
  std::uint64_t ties = 0;
  friend bool operator==(const WinCount&, const WinCount&) = default;
};

/// Support-weighted group F1 for two systems side by side.
struct GroupRow {
  std::string group;
  std::uint64_t support = 0;
  double f1_a = 0;
  double f1_b = 0;
  double delta = 0;  // f1_a - f1_b
  WinCount wins;
};

struct Advantage {
  std::string entity;
  std::string group;
  std::uint64_t support = 0;
  double f1_a = 0;
  double f1_b = 0;
  double delta = 0;  // always f1_a - f1_b
};

enum class Favour { a, b };

// --- CSV input ---------------------------------------------------------------

namespace detail {

/// Splits one CSV line; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError("unterminated quote in CSV line");
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("invalid number '" + s + "' for " + what);
  }
}

inline std::uint64_t parse_count(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw DataError("invalid count '" + s + "' for " + what);
  return std::stoull(s);
}

inline std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::string& name) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      rows.push_back(split_csv_line(line));
    } catch (const DataError& e) {
      throw DataError(name + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace detail

/// Reads `entity,group,support,f1_<system>...`; returns rows in file order.
inline std::vector<EntityRow> read_entity_rows(std::istream& in, const std::string& name = "<rows>") {
  auto rows = detail::read_csv(in, name);
  if (rows.empty()) throw DataError(name + ": empty entity table");
  const auto& header = rows.front();
  if (header.size() < 3 || header[0] != "entity" || header[1] != "group" || header[2] != "support")
    throw DataError(name + ": header must start with entity,group,support");
  std::vector<std::string> systems;
  for (std::size_t c = 3; c < header.size(); ++c) {
    if (header[c].rfind("f1_", 0) != 0 || header[c].size() == 3)
      throw DataError(name + ": column '" + header[c] + "' is not of the form f1_<system>");
    systems.push_back(header[c].substr(3));
  }

  std::vector<EntityRow> out;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    std::string where = name + " row " + std::to_string(r + 1);
    if (f.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
    EntityRow row;
    row.entity = f[0];
    row.group = f[1];
    if (!is_coarse_group(row.group)) throw DataError(where + ": unknown group '" + row.group + "'");
    if (!seen.insert(row.entity).second) throw DataError(where + ": duplicate entity '" + row.entity + "'");
    row.support = detail::parse_count(f[2], where + " support");
    for (std::size_t s = 0; s < systems.size(); ++s) {
      double v = detail::parse_double(f[3 + s], where + " f1_" + systems[s]);
      if (v < 0 || v > 1) throw DataError(where + ": F1 out of [0,1]");
      row.f1[systems[s]] = v;
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<EntityRow> load_entity_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_entity_rows(in, path);
}

// --- aggregation -------------------------------------------------------------

namespace detail {

inline double f1_of(const EntityRow& row, const std::string& system) {
  auto it = row.f1.find(system);
  if (it == row.f1.end())
    throw DataError("entity '" + row.entity + "' has no F1 for system '" + system + "'");
  return it->second;
}

/// Groups sorted by total support descending, then name.
inline std::vector<std::pair<std::string, std::vector<const EntityRow*>>> by_group(
    const std::vector<EntityRow>& rows) {
  std::map<std::string, std::vector<const EntityRow*>> groups;
  for (const auto& r : rows) groups[r.group].push_back(&r);
  std::vector<std::pair<std::string, std::vector<const EntityRow*>>> out(groups.begin(), groups.end());
  auto support = [](const auto& members) {
    std::uint64_t s = 0;
    for (const auto* m : members) s += m->support;
    return s;
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& x, const auto& y) {
    return support(x.second) > support(y.second);
  });
  return out;
}

}  // namespace detail

/// Per group: sum(support * f1) / sum(support).
inline std::vector<GroupScore> group_weighted_f1(const std::vector<EntityRow>& rows, const std::string& system) {
  std::vector<GroupScore> out;
  for (const auto& [group, members] : detail::by_group(rows)) {
    if (!is_coarse_group(group)) throw DataError("unknown group '" + group + "'");
    GroupScore g{group, 0, 0};
    double weighted = 0;
    for (const auto* m : members) {
      g.support += m->support;
      weighted += static_cast<double>(m->support) * detail::f1_of(*m, system);
    }
    if (g.support == 0) throw DataError("group '" + group + "' has zero total support");
    g.f1 = weighted / static_cast<double>(g.support);
    out.push_back(g);
  }
  return out;
}

inline WinCount count_wins(const std::vector<const EntityRow*>& rows, const std::string& a, const std::string& b) {
  WinCount w;
  for (const auto* r : rows) {
    double fa = detail::f1_of(*r, a), fb = detail::f1_of(*r, b);
    if (fa > fb) ++w.wins_a;
    else if (fb > fa) ++w.wins_b;
    else ++w.ties;
  }
  return w;
}

struct WinnerCounts {
  WinCount overall;
  std::map<std::string, WinCount> per_group;
};

/// Strict per-entity F1 comparison, overall and per group.
inline WinnerCounts winner_counts(const std::vector<EntityRow>& rows, const std::string& a, const std::string& b) {
  WinnerCounts out;
  std::vector<const EntityRow*> all;
  for (const auto& r : rows) all.push_back(&r);
  out.overall = count_wins(all, a, b);
  for (const auto& [group, members] : detail::by_group(rows)) out.per_group[group] = count_wins(members, a, b);
  return out;
}

inline std::vector<GroupRow> group_table(const std::vector<EntityRow>& rows, const std::string& a,
                                         const std::string& b) {
  auto ga = group_weighted_f1(rows, a);
  auto gb = group_weighted_f1(rows, b);
  auto wins = winner_counts(rows, a, b);
  std::vector<GroupRow> out;
  for (std::size_t i = 0; i < ga.size(); ++i)
    out.push_back({ga[i].group, ga[i].support, ga[i].f1, gb[i].f1, ga[i].f1 - gb[i].f1,
                   wins.per_group.at(ga[i].group)});
  return out;
}

/// Entities ranked by advantage of the favoured system. Equal advantages are
/// ordered by support descending, then entity name.
inline std::vector<Advantage> top_advantage(const std::vector<EntityRow>& rows, const std::string& a,
                                            const std::string& b, std::size_t n, Favour favour) {
  if (n == 0) throw UsageError("top_advantage needs n >= 1");
  std::vector<Advantage> all;
  for (const auto& r : rows) {
    double fa = detail::f1_of(r, a), fb = detail::f1_of(r, b);
    all.push_back({r.entity, r.group, r.support, fa, fb, fa - fb});
  }
  const double sign = favour == Favour::a ? 1.0 : -1.0;
  std::sort(all.begin(), all.end(), [&](const Advantage& x, const Advantage& y) {
    double ax = sign * x.delta, ay = sign * y.delta;
    if (std::abs(ax - ay) > 1e-12) return ax > ay;
    if (x.support != y.support) return x.support > y.support;
    return x.entity < y.entity;
  });
  if (all.size() > n) all.resize(n);
  return all;
}

// --- system comparison -------------------------------------------------------

struct SystemEntry {
  std::string name;
  std::string category;
  Metrics metrics;
};

struct SystemSummary {
  std::string name;
  std::string category;
  Metrics metrics;
  bool best_f1 = false;
  bool best_precision = false;
  bool best_recall = false;
};

/// Ranked by micro F1 descending; equal F1 ordered by name.
inline std::vector<SystemSummary> compare_systems(const std::vector<SystemEntry>& entries) {
  if (entries.empty()) throw UsageError("compare needs at least one system");
  std::set<std::string> names;
  for (const auto& e : entries)
    if (!names.insert(e.name).second) throw DataError("duplicate system name '" + e.name + "'");

  std::vector<SystemSummary> out;
  for (const auto& e : entries) out.push_back({e.name, e.category, e.metrics});
  std::sort(out.begin(), out.end(), [](const SystemSummary& x, const SystemSummary& y) {
    if (x.metrics.f1 != y.metrics.f1) return x.metrics.f1 > y.metrics.f1;
    return x.name < y.name;
  });
  double bf = 0, bp = 0, br = 0;
  for (const auto& s : out) {
    bf = std::max(bf, s.metrics.f1);
    bp = std::max(bp, s.metrics.precision);
    br = std::max(br, s.metrics.recall);
  }
  for (auto& s : out) {
    s.best_f1 = s.metrics.f1 == bf;
    s.best_precision = s.metrics.precision == bp;
    s.best_recall = s.metrics.recall == br;
  }
  return out;
}

/// Highest-ranked system whose name is not in `own`.
inline const SystemSummary* best_comparator(const std::vector<SystemSummary>& ranked,
                                            const std::set<std::string>& own) {
  for (const auto& s : ranked)
    if (!own.count(s.name)) return &s;
  return nullptr;
}

/// Reads `system,category,f1,precision,recall`.
inline std::vector<SystemEntry> read_system_table(std::istream& in, const std::string& name = "<systems>") {
  auto rows = detail::read_csv(in, name);
  if (rows.empty() || rows.front() != std::vector<std::string>{"system", "category", "f1", "precision", "recall"})
    throw DataError(name + ": header must be system,category,f1,precision,recall");
  std::vector<SystemEntry> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    std::string where = name + " row " + std::to_string(r + 1);
    if (f.size() != 5) throw DataError(where + ": expected 5 fields");
    out.push_back({f[0], f[1],
                   {detail::parse_double(f[3], where), detail::parse_double(f[4], where),
                    detail::parse_double(f[2], where)}});
  }
  return out;
}

inline std::vector<SystemEntry> load_system_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_system_table(in, path);
}

// --- rendering ---------------------------------------------------------------

enum class ReportFormat { json, csv, markdown };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  throw UsageError("unknown report format '" + s + "' (expected json, csv or markdown)");
}

namespace detail {

inline std::string fixed(double v, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  std::string s = o.str();
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);  // no "-0.000"
  return s;
}

inline std::string signed_fixed(double v, int digits) {
  std::string s = fixed(v, digits);
  return s[0] == '-' ? s : "+" + s;
}

inline std::string thousands(std::uint64_t v) {
  std::string digits = std::to_string(v), out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

}  // namespace detail

struct AnalysisReport {
  std::string system_a;
  std::string system_b;
  std::vector<GroupRow> groups;
  WinCount overall;
  std::vector<Advantage> top_a;
  std::vector<Advantage> top_b;
};

inline AnalysisReport analyze(const std::vector<EntityRow>& rows, const std::string& a, const std::string& b,
                              std::size_t top_n = 10) {
  AnalysisReport r{a, b, group_table(rows, a, b), winner_counts(rows, a, b).overall,
                   top_advantage(rows, a, b, top_n, Favour::a), top_advantage(rows, a, b, top_n, Favour::b)};
  return r;
}

inline std::string group_table_csv(const std::vector<GroupRow>& groups) {
  std::ostringstream o;
  o << "group,support,f1_a,f1_b,delta,wins_a,wins_b\n";
  for (const auto& g : groups)
    o << g.group << ',' << g.support << ',' << detail::fixed(g.f1_a, 4) << ',' << detail::fixed(g.f1_b, 4) << ','
      << detail::signed_fixed(g.delta, 4) << ',' << g.wins.wins_a << ',' << g.wins.wins_b << '\n';
  return o.str();
}

inline nlohmann::ordered_json to_json(const Advantage& a) {
  return {{"entity", a.entity}, {"group", a.group}, {"support", a.support},
          {"f1_a", a.f1_a},     {"f1_b", a.f1_b},   {"delta", a.delta}};
}

/// Serializes an analysis. CSV carries the group table only.
inline std::string render_analysis(const AnalysisReport& r, ReportFormat format) {
  if (format == ReportFormat::csv) return group_table_csv(r.groups);

  if (format == ReportFormat::json) {
    nlohmann::ordered_json j;
    j["system_a"] = r.system_a;
    j["system_b"] = r.system_b;
    j["overall_wins"] = {{"a", r.overall.wins_a}, {"b", r.overall.wins_b}, {"ties", r.overall.ties}};
    j["groups"] = nlohmann::ordered_json::array();
    for (const auto& g : r.groups)
      j["groups"].push_back({{"group", g.group},
                             {"support", g.support},
                             {"f1_a", g.f1_a},
                             {"f1_b", g.f1_b},
                             {"delta", g.delta},
                             {"wins_a", g.wins.wins_a},
                             {"wins_b", g.wins.wins_b},
                             {"ties", g.wins.ties}});
    j["top_a"] = nlohmann::ordered_json::array();
    for (const auto& a : r.top_a) j["top_a"].push_back(to_json(a));
    j["top_b"] = nlohmann::ordered_json::array();
    for (const auto& a : r.top_b) j["top_b"].push_back(to_json(a));
    return j.dump(2) + "\n";
  }

  const std::string& A = r.system_a;
  const std::string& B = r.system_b;
  std::ostringstream o;
  o << "# Entity-level comparison: " << A << " vs " << B << "\n\n";
  o << "Entity types won: " << A << " " << r.overall.wins_a << ", " << B << " " << r.overall.wins_b
    << ", ties " << r.overall.ties << ".\n\n";

  o << "## Coarse groups (support-weighted mean F1, delta = " << A << " - " << B << ")\n\n";
  o << "| Group | Support | " << A << " F1 | " << B << " F1 | Delta | Wins " << A << "/" << B << " |\n";
  o << "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& g : r.groups)
    o << "| " << g.group << " | " << detail::thousands(g.support) << " | " << detail::fixed(g.f1_a, 4) << " | "
      << detail::fixed(g.f1_b, 4) << " | " << detail::signed_fixed(g.delta, 3) << " | " << g.wins.wins_a << "/"
      << g.wins.wins_b << " |\n";

  auto entity_table = [&](const std::vector<Advantage>& rows, bool favour_b) {
    o << "| Entity | Group | Supp. | " << A << " | " << B << " | Delta |\n";
    o << "|---|---|---:|---:|---:|---:|\n";
    for (const auto& a : rows)
      o << "| " << a.entity << " | " << a.group << " | " << detail::thousands(a.support) << " | "
        << detail::fixed(a.f1_a, 4) << " | " << detail::fixed(a.f1_b, 4) << " | "
        << detail::signed_fixed(favour_b ? -a.delta : a.delta, 3) << " |\n";
  };
  o << "\n## Top " << r.top_a.size() << " entity types by " << A << " advantage\n\n";
  entity_table(r.top_a, false);
  o << "\n## Top " << r.top_b.size() << " entity types by " << B << " advantage\n\n";
  o << "Delta here is " << B << " - " << A << ".\n\n";
  entity_table(r.top_b, true);
  return o.str();
}

/// Ranked system table. `own` names the systems excluded when looking for the
/// best comparator; when non-empty, a gap line is added.
inline std::string render_comparison(const std::vector<SystemSummary>& ranked, ReportFormat format,
                                     const std::set<std::string>& own = {}) {
  const SystemSummary* comparator = own.empty() ? nullptr : best_comparator(ranked, own);
  const SystemSummary& top = ranked.front();

  if (format == ReportFormat::csv) {
    std::ostringstream o;
    o << "rank,system,category,f1,precision,recall,best_f1,best_precision,best_recall\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& s = ranked[i];
      o << i + 1 << ',' << detail::csv_field(s.name) << ',' << detail::csv_field(s.category) << ','
        << detail::fixed(s.metrics.f1, 4) << ',' << detail::fixed(s.metrics.precision, 4) << ','
        << detail::fixed(s.metrics.recall, 4) << ',' << s.best_f1 << ',' << s.best_precision << ','
        << s.best_recall << '\n';
    }
    return o.str();
  }

  if (format == ReportFormat::json) {
    nlohmann::ordered_json j;
    j["systems"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& s = ranked[i];
      j["systems"].push_back({{"rank", i + 1},
                              {"system", s.name},
                              {"category", s.category},
                              {"f1", s.metrics.f1},
                              {"precision", s.metrics.precision},
                              {"recall", s.metrics.recall},
                              {"best", {{"f1", s.best_f1}, {"precision", s.best_precision}, {"recall", s.best_recall}}}});
    }
    if (comparator) {
      j["best_comparator"] = comparator->name;
      j["gap_f1"] = top.metrics.f1 - comparator->metrics.f1;
    }
    return j.dump(2) + "\n";
  }

  std::ostringstream o;
  auto cell = [](double v, bool best) {
    std::string s = detail::fixed(v, 4);
    return best ? "**" + s + "**" : s;
  };
  o << "| Rank | System | Type | F1 | P | R |\n|---:|---|---|---:|---:|---:|\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& s = ranked[i];
    o << "| " << i + 1 << " | " << s.name << " | " << s.category << " | " << cell(s.metrics.f1, s.best_f1) << " | "
      << cell(s.metrics.precision, s.best_precision) << " | " << cell(s.metrics.recall, s.best_recall) << " |\n";
  }
  if (comparator)
    o << "\n" << top.name << " leads the best comparator (" << comparator->name << ", F1 "
      << detail::fixed(comparator->metrics.f1, 4) << ") by " << detail::signed_fixed(top.metrics.f1 - comparator->metrics.f1, 3)
      << " F1.\n";
  return o.str();
}

}  // namespace piibench

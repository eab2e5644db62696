#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "piibench/allocate.hpp"
#include "piibench/biospan.hpp"
#include "piibench/error.hpp"
#include "piibench/ingest_xml.hpp"
#include "piibench/labelspace.hpp"
#include "piibench/manifest.hpp"
#include "piibench/record.hpp"
#include "piibench/rng.hpp"
#include "piibench/sha256.hpp"

namespace piibench {

enum class SourceFormat { bio_jsonl, xml_text, xml_jsonl };
enum class OnError { fail, skip, log };

struct SourceSpec {
  std::string name;
  std::string path;
  SourceFormat format = SourceFormat::bio_jsonl;
};

inline constexpr std::array<const char*, 3> kSplitNames = {"train", "val", "test"};

struct PipelineConfig {
  std::vector<SourceSpec> sources;
  std::map<std::string, double> rebalance;     // source -> target share of the corpus
  std::map<std::string, std::uint64_t> caps;   // source -> max records
  std::uint64_t rare_label_threshold = 100;
  std::array<double, 3> split_fractions = {0.8, 0.1, 0.1};
  std::uint64_t seed = 42;
  OnError on_error = OnError::fail;
  UnknownTagPolicy unknown_tag = UnknownTagPolicy::error;
  std::optional<std::string> taxonomy;  // required by XML sources
  std::string output_dir = ".";
};

/// Warnings and skip counts gathered while running pipeline steps.
struct Diagnostics {
  std::vector<std::string> warnings;
  std::size_t skipped = 0;
  std::ostream* log = nullptr;

  void warn(std::string msg) {
    if (log) *log << "warning: " << msg << '\n';
    warnings.push_back(std::move(msg));
  }
};

// --- configuration ---------------------------------------------------------

inline SourceFormat parse_source_format(const std::string& s) {
  if (s == "bio_jsonl") return SourceFormat::bio_jsonl;
  if (s == "xml_text") return SourceFormat::xml_text;
  if (s == "xml_jsonl") return SourceFormat::xml_jsonl;
  throw UsageError("unknown source format '" + s + "'");
}

inline const char* to_string(SourceFormat f) {
  switch (f) {
    case SourceFormat::bio_jsonl: return "bio_jsonl";
    case SourceFormat::xml_text: return "xml_text";
    case SourceFormat::xml_jsonl: return "xml_jsonl";
  }
  return "?";
}

inline OnError parse_on_error(const std::string& s) {
  if (s == "fail") return OnError::fail;
  if (s == "skip") return OnError::skip;
  if (s == "log") return OnError::log;
  throw UsageError("unknown on_error policy '" + s + "'");
}

inline const char* to_string(OnError e) {
  switch (e) {
    case OnError::fail: return "fail";
    case OnError::skip: return "skip";
    case OnError::log: return "log";
  }
  return "?";
}

inline void validate(const PipelineConfig& c) {
  std::set<std::string> names;
  for (const auto& s : c.sources)
    if (!names.insert(s.name).second) throw UsageError("duplicate source '" + s.name + "'");
  for (const auto& [src, f] : c.rebalance)
    if (!(f > 0.0 && f < 1.0))
      throw UsageError("rebalance fraction for '" + src + "' must be in (0,1)");
  double sum = 0;
  for (double f : c.split_fractions) {
    if (!(f > 0.0 && f < 1.0)) throw UsageError("split fractions must be in (0,1)");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError("split fractions must sum to 1");
}

/// Canonical JSON form; its SHA-256 is the config digest in manifests.
inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["sources"] = nlohmann::ordered_json::array();
  for (const auto& s : c.sources)
    j["sources"].push_back({{"name", s.name}, {"path", s.path}, {"format", to_string(s.format)}});
  j["rebalance"] = c.rebalance;
  j["caps"] = c.caps;
  j["rare_label_threshold"] = c.rare_label_threshold;
  j["split_fractions"] = {{"train", c.split_fractions[0]},
                          {"val", c.split_fractions[1]},
                          {"test", c.split_fractions[2]}};
  j["on_error"] = to_string(c.on_error);
  j["unknown_tag"] = c.unknown_tag == UnknownTagPolicy::error ? "error" : "drop";
  j["taxonomy"] = c.taxonomy ? nlohmann::ordered_json(*c.taxonomy) : nullptr;
  j["output_dir"] = c.output_dir;
  return j;
}

inline std::string config_digest(const PipelineConfig& c) {
  auto j = to_json(c);
  // Paths depend on where the config lives; leave them out of the digest.
  for (auto& s : j["sources"]) s.erase("path");
  j.erase("taxonomy");
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

/// Reads a JSON config. Relative paths resolve against `base_dir`.
inline PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    auto full = (path.is_absolute() ? path : base_dir / path).lexically_normal();
    if (!full.has_filename() && full.has_relative_path()) full = full.parent_path();  // "dir/." -> "dir"
    return full.string();
  };
  PipelineConfig c;
  try {
    for (const auto& s : j.at("sources")) {
      SourceSpec spec;
      spec.name = s.at("name").get<std::string>();
      spec.path = resolve(s.at("path").get<std::string>());
      spec.format = parse_source_format(s.value("format", std::string("bio_jsonl")));
      c.sources.push_back(std::move(spec));
    }
    if (j.contains("rebalance")) c.rebalance = j["rebalance"].get<std::map<std::string, double>>();
    if (j.contains("caps")) c.caps = j["caps"].get<std::map<std::string, std::uint64_t>>();
    c.rare_label_threshold = j.value("rare_label_threshold", c.rare_label_threshold);
    if (j.contains("split_fractions")) {
      const auto& f = j["split_fractions"];
      for (std::size_t i = 0; i < 3; ++i) c.split_fractions[i] = f.at(kSplitNames[i]).get<double>();
    }
    c.seed = j.value("seed", c.seed);
    c.on_error = parse_on_error(j.value("on_error", std::string("fail")));
    std::string unknown = j.value("unknown_tag", std::string("error"));
    if (unknown == "error")
      c.unknown_tag = UnknownTagPolicy::error;
    else if (unknown == "drop")
      c.unknown_tag = UnknownTagPolicy::drop_span;
    else
      throw UsageError("unknown_tag must be 'error' or 'drop'");
    if (j.contains("taxonomy") && !j["taxonomy"].is_null())
      c.taxonomy = resolve(j["taxonomy"].get<std::string>());
    c.output_dir = resolve(j.value("output_dir", std::string(".")));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  validate(c);
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

// --- statistics ------------------------------------------------------------

struct SourceStat {
  std::uint64_t records = 0;
  std::uint64_t tokens = 0;
  std::map<std::string, std::uint64_t> b_mentions;
};

/// Per-source stats in order of first appearance.
using SourceStats = std::vector<std::pair<std::string, SourceStat>>;

inline SourceStats compute_source_stats(const std::vector<Record>& records) {
  SourceStats stats;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, fresh] = index.emplace(r.source, stats.size());
    if (fresh) stats.emplace_back(r.source, SourceStat{});
    SourceStat& s = stats[it->second].second;
    ++s.records;
    s.tokens += r.tokens.size();
    for (const auto& l : r.labels)
      if (l.prefix == BioPrefix::B) ++s.b_mentions[l.entity];
  }
  return stats;
}

inline void print_source_stats(std::ostream& out, const std::string& step, const SourceStats& stats) {
  std::uint64_t records = 0, tokens = 0;
  for (const auto& [_, s] : stats) {
    records += s.records;
    tokens += s.tokens;
  }
  out << "[" << step << "] records=" << records << " tokens=" << tokens << '\n';
  for (const auto& [name, s] : stats) {
    std::uint64_t mentions = 0;
    for (const auto& [_, n] : s.b_mentions) mentions += n;
    out << "  " << name << ": records=" << s.records << " tokens=" << s.tokens
        << " b_mentions=" << mentions << " types=" << s.b_mentions.size() << '\n';
  }
}

// --- steps -----------------------------------------------------------------

namespace detail {

inline void handle_record_error(const Error& e, const std::string& where, OnError policy,
                                Diagnostics& diag) {
  if (policy == OnError::fail) {
    if (e.kind() == ErrorKind::io) throw;
    throw DataError(where + ": " + e.what());
  }
  ++diag.skipped;
  if (policy == OnError::log && diag.log) *diag.log << "skip: " << where << ": " << e.what() << '\n';
}

}  // namespace detail

/// Reads every source in config order into one stream, stamping source tags.
/// XML sources go through ingest_record; records without spans are dropped.
inline std::vector<Record> consolidate(const PipelineConfig& config, Diagnostics& diag) {
  std::optional<LabelSpace> space;
  std::vector<Record> out;
  std::unordered_set<std::string> ids;

  for (const SourceSpec& src : config.sources) {
    bool xml = src.format != SourceFormat::bio_jsonl;
    if (xml && !space) {
      if (!config.taxonomy) throw UsageError("XML source '" + src.name + "' requires a taxonomy");
      space = load_taxonomy(*config.taxonomy);
    }
    std::ifstream in(src.path, std::ios::binary);
    if (!in) throw IoError("cannot read source '" + src.name + "' at '" + src.path + "'");

    std::string line;
    std::size_t lineno = 0;
    std::size_t dropped_without_spans = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::string where = src.name + " line " + std::to_string(lineno);
      try {
        std::optional<Record> rec;
        std::string fallback_id = src.name + ":" + std::to_string(lineno);
        if (src.format == SourceFormat::bio_jsonl) {
          auto j = detail::parse_json_object(line, lineno);
          if (!j.contains("id")) j["id"] = fallback_id;
          rec = record_from_json(j, lineno);
          rec->source = src.name;
        } else if (src.format == SourceFormat::xml_text) {
          rec = ingest_record(line, fallback_id, src.name, *space, config.unknown_tag);
        } else {
          auto j = detail::parse_json_object(line, lineno);
          auto text = detail::get_field<std::string>(j, "text", lineno);
          std::string id = j.contains("id") ? detail::get_field<std::string>(j, "id", lineno) : fallback_id;
          rec = ingest_record(text, id, src.name, *space, config.unknown_tag);
        }
        if (!rec) {
          ++dropped_without_spans;
          continue;
        }
        if (!ids.insert(rec->id).second) throw DataError("duplicate record id '" + rec->id + "'");
        out.push_back(std::move(*rec));
      } catch (const Error& e) {
        detail::handle_record_error(e, where, config.on_error, diag);
      }
    }
    if (dropped_without_spans && diag.log)
      *diag.log << src.name << ": dropped " << dropped_without_spans << " records without spans\n";
  }
  return out;
}

/// Stratum used for within-source stratified sampling: the type of the
/// record's first span, or "O" for records without spans.
inline std::string primary_entity_type(const Record& r) {
  for (const auto& l : r.labels)
    if (!l.is_outside()) return l.entity;
  return "O";
}

/// Keeps `k` records of `source`, allocated across entity-type strata by
/// largest remainder and sampled uniformly within each stratum.
inline std::vector<Record> stratified_downsample(std::vector<Record> records, const std::string& source,
                                                 std::uint64_t k, std::uint64_t seed,
                                                 const std::string& purpose) {
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].source == source) strata[primary_entity_type(records[i])].push_back(i);

  std::map<std::string, std::uint64_t> counts;
  for (const auto& [type, idx] : strata) counts[type] = idx.size();
  auto quota = largest_remainder_allocate(counts, k);

  std::vector<char> keep(records.size(), 1);
  for (const auto& [type, idx] : strata) {
    for (std::size_t i : idx) keep[i] = 0;
    Rng rng = make_rng(seed, purpose + "/" + source + "/" + type);
    for (std::size_t pick : sample_indices(idx.size(), quota[type], rng)) keep[idx[pick]] = 1;
  }
  std::vector<Record> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) out.push_back(std::move(records[i]));
  return out;
}

/// Number of source records that gives the source `target_fraction` of the
/// corpus when `others` records from other sources are kept.
inline std::uint64_t rebalance_target_count(std::uint64_t others, double target_fraction) {
  return static_cast<std::uint64_t>(
      std::llround(target_fraction * static_cast<double>(others) / (1.0 - target_fraction)));
}

/// Downsamples one source to `target_fraction` of the stream. Upsampling is
/// not possible without replacement, so an undersized source is kept whole
/// and a warning is recorded.
inline std::vector<Record> rebalance_source(std::vector<Record> records, const std::string& source,
                                            double target_fraction, std::uint64_t seed,
                                            Diagnostics& diag) {
  if (!(target_fraction > 0.0 && target_fraction < 1.0))
    throw UsageError("rebalance target fraction must be in (0,1)");
  std::uint64_t have = 0;
  for (const auto& r : records) have += r.source == source;
  const std::uint64_t others = records.size() - have;
  if (have == 0) {
    diag.warn("rebalance: source '" + source + "' is absent; stream unchanged");
    return records;
  }
  std::uint64_t want = rebalance_target_count(others, target_fraction);
  if (want > have) {
    diag.warn("rebalance: source '" + source + "' has " + std::to_string(have) + " records, " +
              std::to_string(want) + " needed for share " + std::to_string(target_fraction) +
              "; keeping all");
    return records;
  }
  if (want == have) return records;
  return stratified_downsample(std::move(records), source, want, seed, "rebalance");
}

/// Keeps at most `cap` records of `source`, chosen uniformly.
inline std::vector<Record> cap_source(std::vector<Record> records, const std::string& source,
                                      std::uint64_t cap, std::uint64_t seed) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].source == source) idx.push_back(i);
  if (idx.size() <= cap) return records;

  Rng rng = make_rng(seed, "cap/" + source);
  std::vector<char> keep(records.size(), 1);
  for (std::size_t i : idx) keep[i] = 0;
  for (std::size_t pick : sample_indices(idx.size(), cap, rng)) keep[idx[pick]] = 1;
  std::vector<Record> out;
  out.reserve(records.size() - idx.size() + cap);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) out.push_back(std::move(records[i]));
  return out;
}

struct RareLabelResult {
  std::vector<Record> records;
  std::vector<std::string> removed;  // sorted
};

/// Relabels every tag of a type with fewer than `threshold` corpus-wide
/// B- mentions to O. Records and tokens are untouched.
inline RareLabelResult filter_rare_labels(std::vector<Record> records, std::uint64_t threshold) {
  std::map<std::string, std::uint64_t> mentions;
  for (const auto& r : records)
    for (const auto& l : r.labels) {
      if (l.prefix == BioPrefix::B) ++mentions[l.entity];
      else if (l.prefix == BioPrefix::I) mentions.try_emplace(l.entity, 0);
    }

  std::set<std::string> rare;
  for (const auto& [type, n] : mentions)
    if (n < threshold) rare.insert(type);

  if (!rare.empty())
    for (auto& r : records)
      for (auto& l : r.labels)
        if (!l.is_outside() && rare.count(l.entity)) l = BioLabel::outside();
  return {std::move(records), {rare.begin(), rare.end()}};
}

using Splits = std::array<std::vector<Record>, 3>;

/// Per source: seeded shuffle, then largest-remainder partition by the
/// split fractions. Each split keeps the input order.
inline Splits stratified_split(const std::vector<Record>& records, const std::array<double, 3>& fractions,
                               std::uint64_t seed, Diagnostics& diag) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, fresh] = by_source.try_emplace(records[i].source);
    if (fresh) order.push_back(records[i].source);
    it->second.push_back(i);
  }

  std::vector<int> split_of(records.size(), -1);
  for (const auto& source : order) {
    auto& idx = by_source[source];
    if (idx.size() < fractions.size())
      diag.warn("split: source '" + source + "' has only " + std::to_string(idx.size()) +
                " records; some splits receive none");
    Rng rng = make_rng(seed, "split/" + source);
    shuffle(idx, rng);
    auto sizes = allocate_by_fractions(idx.size(), {fractions.begin(), fractions.end()});
    std::size_t pos = 0;
    for (std::size_t s = 0; s < sizes.size(); ++s)
      for (std::uint64_t k = 0; k < sizes[s]; ++k) split_of[idx[pos++]] = static_cast<int>(s);
  }

  Splits out;
  for (std::size_t i = 0; i < records.size(); ++i) out[static_cast<std::size_t>(split_of[i])].push_back(records[i]);
  return out;
}

/// Source-stratified subset of `target_total` records. Output is grouped by
/// source in order of first appearance, original order within a source.
inline std::vector<Record> sample_subset(const std::vector<Record>& artifact, std::uint64_t target_total,
                                         std::uint64_t seed) {
  if (target_total > artifact.size())
    throw DataError("requested " + std::to_string(target_total) + " records from an artifact of " +
                    std::to_string(artifact.size()));
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < artifact.size(); ++i) {
    auto [it, fresh] = by_source.try_emplace(artifact[i].source);
    if (fresh) order.push_back(artifact[i].source);
    it->second.push_back(i);
  }
  std::map<std::string, std::uint64_t> counts;
  for (const auto& [s, idx] : by_source) counts[s] = idx.size();
  auto quota = largest_remainder_allocate(counts, target_total);

  std::vector<Record> out;
  out.reserve(target_total);
  for (const auto& source : order) {
    const auto& idx = by_source[source];
    Rng rng = make_rng(seed, "sample/" + source);
    for (std::size_t pick : sample_indices(idx.size(), quota[source], rng)) out.push_back(artifact[idx[pick]]);
  }
  return out;
}

inline std::string source_token(const std::string& source) { return "[SRC=" + source + "]"; }

/// Prepends `[SRC=<source>]` (or `[SRC=general]` for unknown sources) with label O.
inline Record prepend_source_token(const Record& record, const std::set<std::string>& known_sources) {
  Record out;
  out.id = record.id;
  out.source = record.source;
  out.tokens.reserve(record.tokens.size() + 1);
  out.labels.reserve(record.labels.size() + 1);
  out.tokens.push_back(source_token(known_sources.count(record.source) ? record.source : "general"));
  out.labels.push_back(BioLabel::outside());
  out.tokens.insert(out.tokens.end(), record.tokens.begin(), record.tokens.end());
  out.labels.insert(out.labels.end(), record.labels.begin(), record.labels.end());
  return out;
}

// --- full run --------------------------------------------------------------

struct PipelineResult {
  Splits splits;
  std::vector<std::string> removed_types;
  std::vector<std::pair<std::string, SourceStats>> step_stats;
  std::vector<std::string> artifact_paths;
  std::vector<Manifest> manifests;
};

/// Runs consolidate/re-parse, rebalance, cap, rare-label filter and split in
/// that order, then writes `<split>.jsonl` files with manifests.
inline PipelineResult run_pipeline(const PipelineConfig& config, Diagnostics& diag,
                                   std::ostream* progress = nullptr) {
  validate(config);
  PipelineResult result;
  auto snapshot = [&](const char* step, const std::vector<Record>& recs) {
    result.step_stats.emplace_back(step, compute_source_stats(recs));
    if (progress) print_source_stats(*progress, step, result.step_stats.back().second);
  };

  auto records = consolidate(config, diag);
  snapshot("consolidate", records);
  for (const auto& [source, fraction] : config.rebalance)
    records = rebalance_source(std::move(records), source, fraction, config.seed, diag);
  snapshot("rebalance", records);
  for (const auto& [source, cap] : config.caps)
    records = cap_source(std::move(records), source, cap, config.seed);
  snapshot("cap", records);
  auto filtered = filter_rare_labels(std::move(records), config.rare_label_threshold);
  result.removed_types = filtered.removed;
  snapshot("filter", filtered.records);
  result.splits = stratified_split(filtered.records, config.split_fractions, config.seed, diag);

  std::filesystem::create_directories(config.output_dir);
  ManifestContext ctx{config.seed, config_digest(config), config.rare_label_threshold};
  for (std::size_t s = 0; s < result.splits.size(); ++s) {
    snapshot(kSplitNames[s], result.splits[s]);
    auto path = (std::filesystem::path(config.output_dir) / (std::string(kSplitNames[s]) + ".jsonl")).string();
    write_records(path, result.splits[s]);
    result.manifests.push_back(write_manifest(path, ctx));
    result.artifact_paths.push_back(path);
  }
  return result;
}

}  // namespace piibench

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "piibench/biospan.hpp"
#include "piibench/record.hpp"
#include "piibench/rng.hpp"
#include "piibench/sha256.hpp"

namespace piibench {

/// Provenance that cannot be recovered from the artifact bytes alone.
struct ManifestContext {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config_digest;
  std::optional<std::uint64_t> rare_label_threshold;

  friend bool operator==(const ManifestContext&, const ManifestContext&) = default;
};

/// Descriptor of one JSON-lines artifact.
struct Manifest {
  std::string path;  // file name only, so manifests compare equal across directories
  std::string sha256;
  std::uint64_t records = 0;
  std::uint64_t tokens = 0;
  std::uint64_t gold_spans = 0;
  std::uint64_t entity_types = 0;
  std::uint64_t sources = 0;
  std::map<std::string, std::uint64_t> per_source_records;
  std::map<std::string, std::uint64_t> per_type_b_mentions;
  std::map<std::string, std::uint64_t> per_type_spans;
  std::uint64_t orphan_continuations = 0;
  std::map<std::string, std::uint64_t> orphan_continuations_by_source;
  ManifestContext context;
  std::string generator{kGeneratorName};

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Accumulates manifest counts one record at a time.
class ManifestBuilder {
 public:
  void add(const Record& r) {
    ++m_.records;
    m_.tokens += r.tokens.size();
    ++m_.per_source_records[r.source];
    for (const auto& l : r.labels)
      if (l.prefix == BioPrefix::B) ++m_.per_type_b_mentions[l.entity];
    for (const auto& s : extract_spans(r.labels)) {
      ++m_.gold_spans;
      ++m_.per_type_spans[s.entity];
    }
    auto orphans = count_orphan_continuations(r.labels);
    m_.orphan_continuations += orphans;
    if (orphans) m_.orphan_continuations_by_source[r.source] += orphans;
  }

  Manifest finish(std::string path, std::string sha256, ManifestContext ctx = {}) {
    m_.path = std::move(path);
    m_.sha256 = std::move(sha256);
    m_.entity_types = m_.per_type_spans.size();
    m_.sources = m_.per_source_records.size();
    m_.context = std::move(ctx);
    return m_;
  }

 private:
  Manifest m_;
};

/// Hashes the exact file bytes and recounts the records.
inline Manifest compute_manifest(const std::string& artifact_path, ManifestContext ctx = {}) {
  std::string digest = sha256_file(artifact_path);
  auto in = open_input(artifact_path);
  RecordReader reader(in, artifact_path);
  ManifestBuilder builder;
  while (auto r = reader.next()) builder.add(*r);
  return builder.finish(std::filesystem::path(artifact_path).filename().string(),
                        std::move(digest), std::move(ctx));
}

inline nlohmann::ordered_json to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["path"] = m.path;
  j["sha256"] = m.sha256;
  j["records"] = m.records;
  j["tokens"] = m.tokens;
  j["gold_spans"] = m.gold_spans;
  j["entity_types"] = m.entity_types;
  j["sources"] = m.sources;
  j["per_source_records"] = m.per_source_records;
  j["per_type_b_mentions"] = m.per_type_b_mentions;
  j["per_type_spans"] = m.per_type_spans;
  j["orphan_continuations"] = m.orphan_continuations;
  j["orphan_continuations_by_source"] = m.orphan_continuations_by_source;
  j["seed"] = m.context.seed ? nlohmann::ordered_json(*m.context.seed) : nullptr;
  j["config_digest"] =
      m.context.config_digest ? nlohmann::ordered_json(*m.context.config_digest) : nullptr;
  j["rare_label_threshold"] = m.context.rare_label_threshold
                                  ? nlohmann::ordered_json(*m.context.rare_label_threshold)
                                  : nullptr;
  j["generator"] = m.generator;
  return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    m.path = j.at("path").get<std::string>();
    m.sha256 = j.at("sha256").get<std::string>();
    m.records = j.at("records").get<std::uint64_t>();
    m.tokens = j.at("tokens").get<std::uint64_t>();
    m.gold_spans = j.at("gold_spans").get<std::uint64_t>();
    m.entity_types = j.at("entity_types").get<std::uint64_t>();
    m.sources = j.at("sources").get<std::uint64_t>();
    m.per_source_records = j.at("per_source_records").get<std::map<std::string, std::uint64_t>>();
    m.per_type_b_mentions = j.at("per_type_b_mentions").get<std::map<std::string, std::uint64_t>>();
    m.per_type_spans = j.at("per_type_spans").get<std::map<std::string, std::uint64_t>>();
    m.orphan_continuations = j.at("orphan_continuations").get<std::uint64_t>();
    m.orphan_continuations_by_source =
        j.at("orphan_continuations_by_source").get<std::map<std::string, std::uint64_t>>();
    if (!j.at("seed").is_null()) m.context.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("config_digest").is_null())
      m.context.config_digest = j.at("config_digest").get<std::string>();
    if (!j.at("rare_label_threshold").is_null())
      m.context.rare_label_threshold = j.at("rare_label_threshold").get<std::uint64_t>();
    m.generator = j.at("generator").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline std::string manifest_path_for(const std::string& artifact_path) {
  return artifact_path + ".manifest.json";
}

/// Computes the manifest and writes it next to the artifact.
inline Manifest write_manifest(const std::string& artifact_path, ManifestContext ctx = {}) {
  Manifest m = compute_manifest(artifact_path, std::move(ctx));
  auto out = open_output(manifest_path_for(artifact_path));
  out << to_json(m).dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("failed writing manifest for '" + artifact_path + "'");
  return m;
}

}  // namespace piibench

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "piibench/analysis.hpp"
#include "piibench/error.hpp"
#include "piibench/manifest.hpp"
#include "piibench/pipeline.hpp"
#include "piibench/record.hpp"
#include "piibench/scorer.hpp"
#include "piibench/sha256.hpp"

namespace piibench {

/// Exit codes: 0 success, 1 data error, 2 usage error, 3 I/O error.
struct CommandResult {
  int exit_code = 0;
  std::string summary;
  std::vector<std::string> artifacts;
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::data: return 1;
    case ErrorKind::usage: return 2;
    case ErrorKind::io: return 3;
  }
  return 1;
}

/// Runs a command body, mapping exceptions onto exit codes. The error message
/// goes to `err` and becomes the summary.
inline CommandResult run_command(const std::function<CommandResult()>& body, std::ostream& err) {
  auto fail = [&](int code, const std::string& msg) {
    err << "error: " << msg << '\n';
    return CommandResult{code, msg, {}};
  };
  try {
    return body();
  } catch (const Error& e) {
    return fail(exit_code_for(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(3, e.what());
  } catch (const std::exception& e) {
    return fail(1, e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

// --- prepare -----------------------------------------------------------------

struct PrepareOptions {
  std::string config;
  std::optional<std::string> output_dir;  // overrides the config's output_dir
};

inline CommandResult cmd_prepare(const PrepareOptions& opts, std::ostream& out, std::ostream& err) {
  PipelineConfig config = load_config(opts.config);
  if (opts.output_dir) config.output_dir = *opts.output_dir;
  for (const auto& s : config.sources)
    if (!std::filesystem::exists(s.path))
      throw IoError("source '" + s.name + "' not found at '" + s.path + "'");

  Diagnostics diag;
  diag.log = &err;
  PipelineResult result = run_pipeline(config, diag, &out);

  CommandResult r;
  r.artifacts = result.artifact_paths;
  for (const auto& p : result.artifact_paths) r.artifacts.push_back(manifest_path_for(p));
  std::string removed;
  for (const auto& t : result.removed_types) removed += (removed.empty() ? "" : ",") + t;
  out << "removed_types: " << (removed.empty() ? "(none)" : removed) << '\n';
  if (diag.skipped) out << "skipped_records: " << diag.skipped << '\n';
  for (const auto& m : result.manifests) out << m.path << " sha256=" << m.sha256 << " records=" << m.records << '\n';
  r.summary = "prepared " + std::to_string(result.manifests[0].records) + "/" +
              std::to_string(result.manifests[1].records) + "/" + std::to_string(result.manifests[2].records) +
              " train/val/test records; removed types: " + (removed.empty() ? "(none)" : removed);
  out << r.summary << '\n';
  return r;
}

// --- sample ------------------------------------------------------------------

struct SampleOptions {
  std::string artifact;
  std::uint64_t n = 0;
  std::uint64_t seed = 42;
  std::optional<std::string> out;
};

inline std::string default_sample_path(const std::string& artifact, std::uint64_t n) {
  std::filesystem::path p(artifact);
  return (p.parent_path() / (p.stem().string() + "_" + std::to_string(n) + ".jsonl")).string();
}

inline CommandResult cmd_sample(const SampleOptions& opts, std::ostream& out, std::ostream&) {
  if (opts.n == 0) throw UsageError("--n must be at least 1");
  auto records = read_records(opts.artifact);
  auto subset = sample_subset(records, opts.n, opts.seed);
  std::string path = opts.out.value_or(default_sample_path(opts.artifact, opts.n));
  write_records(path, subset);
  ManifestContext ctx;
  ctx.seed = opts.seed;
  Manifest m = write_manifest(path, ctx);

  CommandResult r;
  r.artifacts = {path, manifest_path_for(path)};
  r.summary = "sampled " + std::to_string(m.records) + " records from " + std::to_string(m.sources) +
              " sources; sha256 " + m.sha256;
  out << r.summary << '\n';
  return r;
}

// --- validate ----------------------------------------------------------------

struct ValidateOptions {
  std::string artifact;
  bool strict = false;
};

inline CommandResult cmd_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err) {
  Manifest m = compute_manifest(opts.artifact);
  out << "records: " << m.records << '\n'
      << "gold_spans: " << m.gold_spans << '\n'
      << "entity_types: " << m.entity_types << '\n'
      << "sources: " << m.sources << '\n'
      << "orphan_continuations: " << m.orphan_continuations << '\n';
  for (const auto& [source, n] : m.orphan_continuations_by_source)
    out << "orphan_continuations[" << source << "]: " << n << '\n';
  for (const auto& [type, n] : m.per_type_spans) {
    auto b = m.per_type_b_mentions.find(type);
    out << "type " << type << ": spans=" << n << " b_mentions=" << (b == m.per_type_b_mentions.end() ? 0 : b->second)
        << '\n';
  }
  out << "sha256: " << m.sha256 << '\n';

  CommandResult r;
  r.summary = std::to_string(m.records) + " records, " + std::to_string(m.gold_spans) + " spans, " +
              std::to_string(m.orphan_continuations) + " orphan continuations";
  if (opts.strict && m.orphan_continuations > 0) {
    err << "error: " << m.orphan_continuations << " orphan continuation labels (strict mode)\n";
    r.exit_code = 1;
  }
  return r;
}

// --- score -------------------------------------------------------------------

struct ScoreOptions {
  std::string gold;
  std::string pred;
  std::size_t chunk_size = 5000;
  bool unordered = false;
  std::string out = "report.json";
  std::optional<std::string> csv;
  std::optional<std::string> taxonomy;
};

inline CommandResult cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream&) {
  if (opts.chunk_size == 0) throw UsageError("--chunk-size must be positive");
  std::optional<LabelSpace> space;
  if (opts.taxonomy) space = load_taxonomy(*opts.taxonomy);
  MetricsReport report = stream_score_files(opts.gold, opts.pred, {opts.chunk_size, opts.unordered});

  CommandResult r;
  write_text_file(opts.out, to_json(report).dump(2) + "\n");
  r.artifacts.push_back(opts.out);
  if (opts.csv) {
    write_text_file(*opts.csv, report_to_csv(report, space ? &*space : nullptr));
    r.artifacts.push_back(*opts.csv);
  }
  r.summary = "records=" + std::to_string(report.records) + " chunks=" + std::to_string(report.chunks) +
              " f1=" + detail::fixed(report.micro.f1, 4) + " p=" + detail::fixed(report.micro.precision, 4) +
              " r=" + detail::fixed(report.micro.recall, 4);
  out << r.summary << '\n';
  return r;
}

// --- compare -----------------------------------------------------------------

struct CompareOptions {
  std::vector<std::string> reports;
  std::vector<std::string> names;
  std::vector<std::string> categories;
  std::optional<std::string> table;
  std::vector<std::string> ours;
  std::string format = "markdown";
  std::optional<std::string> out;
};

inline CommandResult cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream&) {
  ReportFormat format = parse_report_format(opts.format);
  if (opts.reports.empty() && !opts.table) throw UsageError("give --reports and/or --table");
  if (!opts.names.empty() && opts.names.size() != opts.reports.size())
    throw UsageError("--names must match --reports one to one");
  if (!opts.categories.empty() && opts.categories.size() != opts.reports.size())
    throw UsageError("--categories must match --reports one to one");

  std::vector<SystemEntry> entries;
  if (opts.table) entries = load_system_table(*opts.table);
  for (std::size_t i = 0; i < opts.reports.size(); ++i) {
    auto in = open_input(opts.reports[i]);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(opts.reports[i] + ": " + e.what());
    }
    MetricsReport rep = report_from_json(j);
    std::string name = opts.names.empty() ? std::filesystem::path(opts.reports[i]).stem().string() : opts.names[i];
    std::string category = opts.categories.empty() ? "unspecified" : opts.categories[i];
    entries.push_back({name, category, rep.micro});
  }

  auto ranked = compare_systems(entries);
  std::string text = render_comparison(ranked, format, {opts.ours.begin(), opts.ours.end()});
  CommandResult r;
  if (opts.out) {
    write_text_file(*opts.out, text);
    r.artifacts.push_back(*opts.out);
  } else {
    out << text;
  }
  r.summary = std::to_string(ranked.size()) + " systems ranked; best " + ranked.front().name;
  return r;
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeOptions {
  std::string rows;
  std::string a;
  std::string b;
  std::size_t top = 10;
  std::optional<std::string> format;
  std::optional<std::string> out;
};

/// Format from --format, else from the output extension, else markdown.
inline ReportFormat resolve_format(const std::optional<std::string>& format, const std::optional<std::string>& out) {
  if (format) return parse_report_format(*format);
  if (out) {
    auto ext = std::filesystem::path(*out).extension().string();
    if (ext == ".json") return ReportFormat::json;
    if (ext == ".csv") return ReportFormat::csv;
  }
  return ReportFormat::markdown;
}

inline CommandResult cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream&) {
  if (opts.top == 0) throw UsageError("--top must be at least 1");
  ReportFormat format = resolve_format(opts.format, opts.out);
  auto rows = load_entity_rows(opts.rows);
  AnalysisReport report = analyze(rows, opts.a, opts.b, opts.top);
  std::string text = render_analysis(report, format);

  CommandResult r;
  if (opts.out) {
    write_text_file(*opts.out, text);
    r.artifacts.push_back(*opts.out);
  } else {
    out << text;
  }
  r.summary = opts.a + " wins " + std::to_string(report.overall.wins_a) + ", " + opts.b + " wins " +
              std::to_string(report.overall.wins_b) + ", ties " + std::to_string(report.overall.ties);
  return r;
}

// --- hash --------------------------------------------------------------------

inline CommandResult cmd_hash(const std::string& path, std::ostream& out, std::ostream&) {
  CommandResult r;
  r.summary = sha256_file(path);
  out << r.summary << "  " << path << '\n';
  return r;
}

}  // namespace piibench

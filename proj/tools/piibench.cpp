// piibench: corpus preparation, validation, scoring and analysis CLI.

#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "piibench/commands.hpp"

using piibench::CommandResult;

int main(int argc, char** argv) {
  CLI::App app{"PII token-classification corpus and evaluation toolkit", "piibench"};
  app.require_subcommand(1);

  std::function<CommandResult()> action;
  auto& out = std::cout;
  auto& err = std::cerr;

  piibench::PrepareOptions prepare;
  auto* prepare_cmd = app.add_subcommand("prepare", "Run the corpus preparation pipeline");
  prepare_cmd->add_option("config,--config", prepare.config, "Pipeline config (JSON)")->required();
  std::string prepare_out;
  prepare_cmd->add_option("--output-dir", prepare_out, "Override the config's output directory");
  prepare_cmd->callback([&] {
    if (!prepare_out.empty()) prepare.output_dir = prepare_out;
    action = [&] { return piibench::cmd_prepare(prepare, out, err); };
  });

  piibench::SampleOptions sample;
  std::string sample_out;
  auto* sample_cmd = app.add_subcommand("sample", "Draw a source-stratified subset with a manifest");
  sample_cmd->add_option("artifact,--artifact", sample.artifact, "Input JSON-lines artifact")->required();
  sample_cmd->add_option("--n", sample.n, "Subset size")->required();
  sample_cmd->add_option("--seed", sample.seed, "Random seed")->capture_default_str();
  sample_cmd->add_option("--out", sample_out, "Output path (default <stem>_<n>.jsonl)");
  sample_cmd->callback([&] {
    if (!sample_out.empty()) sample.out = sample_out;
    action = [&] { return piibench::cmd_sample(sample, out, err); };
  });

  piibench::ValidateOptions validate;
  auto* validate_cmd = app.add_subcommand("validate", "Report counts and BIO anomalies of an artifact");
  validate_cmd->add_option("artifact,--artifact", validate.artifact, "JSON-lines artifact")->required();
  validate_cmd->add_flag("--strict", validate.strict, "Fail when orphan continuations are present");
  validate_cmd->callback([&] { action = [&] { return piibench::cmd_validate(validate, out, err); }; });

  piibench::ScoreOptions score;
  std::string score_csv, score_taxonomy;
  auto* score_cmd = app.add_subcommand("score", "Span-level exact-match scoring");
  score_cmd->add_option("--gold", score.gold, "Gold JSON-lines records")->required();
  score_cmd->add_option("--pred", score.pred, "Predictions: {\"id\", \"labels\"} per line")->required();
  score_cmd->add_option("--chunk-size", score.chunk_size, "Records per chunk")->capture_default_str();
  score_cmd->add_flag("--unordered", score.unordered, "Align predictions by id instead of by order");
  score_cmd->add_option("--out", score.out, "Report JSON path")->capture_default_str();
  score_cmd->add_option("--csv", score_csv, "Optional per-type CSV path");
  score_cmd->add_option("--taxonomy", score_taxonomy, "Taxonomy for the CSV group column");
  score_cmd->callback([&] {
    if (!score_csv.empty()) score.csv = score_csv;
    if (!score_taxonomy.empty()) score.taxonomy = score_taxonomy;
    action = [&] { return piibench::cmd_score(score, out, err); };
  });

  piibench::CompareOptions compare;
  std::string compare_table, compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Rank systems by micro F1");
  compare_cmd->add_option("--reports", compare.reports, "Report JSON files from `score`");
  compare_cmd->add_option("--names", compare.names, "System names, one per report");
  compare_cmd->add_option("--categories", compare.categories, "System categories, one per report");
  compare_cmd->add_option("--table", compare_table, "CSV: system,category,f1,precision,recall");
  compare_cmd->add_option("--ours", compare.ours, "Systems excluded when finding the best comparator");
  compare_cmd->add_option("--format", compare.format, "json, csv or markdown")->capture_default_str();
  compare_cmd->add_option("--out", compare_out, "Output path (default stdout)");
  compare_cmd->callback([&] {
    if (!compare_table.empty()) compare.table = compare_table;
    if (!compare_out.empty()) compare.out = compare_out;
    action = [&] { return piibench::cmd_compare(compare, out, err); };
  });

  piibench::AnalyzeOptions analyze;
  std::string analyze_format, analyze_out;
  auto* analyze_cmd = app.add_subcommand("analyze", "Entity- and group-level comparison of two systems");
  analyze_cmd->add_option("--rows", analyze.rows, "CSV: entity,group,support,f1_<system>...")->required();
  analyze_cmd->add_option("--a", analyze.a, "First system (delta = a - b)")->required();
  analyze_cmd->add_option("--b", analyze.b, "Second system")->required();
  analyze_cmd->add_option("--top", analyze.top, "Rows in each advantage table")->capture_default_str();
  analyze_cmd->add_option("--format", analyze_format, "json, csv or markdown (default from --out)");
  analyze_cmd->add_option("--out", analyze_out, "Output path (default stdout)");
  analyze_cmd->callback([&] {
    if (!analyze_format.empty()) analyze.format = analyze_format;
    if (!analyze_out.empty()) analyze.out = analyze_out;
    action = [&] { return piibench::cmd_analyze(analyze, out, err); };
  });

  std::string hash_path;
  auto* hash_cmd = app.add_subcommand("hash", "Print the SHA-256 of a file");
  hash_cmd->add_option("file,--file", hash_path, "File to hash")->required();
  hash_cmd->callback([&] { action = [&] { return piibench::cmd_hash(hash_path, out, err); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CommandResult result = piibench::run_command(action, err);
  return result.exit_code;
}

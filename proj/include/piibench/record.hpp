#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "piibench/biospan.hpp"
#include "piibench/error.hpp"

namespace piibench {

/// One annotated sequence.
struct Record {
  std::string id;
  std::vector<std::string> tokens;
  BioSequence labels;
  std::string source;

  friend bool operator==(const Record&, const Record&) = default;
};

inline void check_record(const Record& r) {
  if (r.tokens.empty()) throw DataError("record '" + r.id + "' has no tokens");
  if (r.tokens.size() != r.labels.size())
    throw DataError("record '" + r.id + "' has " + std::to_string(r.tokens.size()) +
                    " tokens but " + std::to_string(r.labels.size()) + " labels");
}

/// Serializes as `{"id":..,"tokens":[..],"labels":[..],"source":..}`, no newline.
inline std::string to_json_line(const Record& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["tokens"] = r.tokens;
  j["labels"] = format_bio_sequence(r.labels);
  j["source"] = r.source;
  return j.dump();
}

namespace detail {

inline nlohmann::json parse_json_object(const std::string& line, std::size_t lineno) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("line " + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError("line " + std::to_string(lineno) + ": expected a JSON object");
  return j;
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key, std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end())
    throw DataError("line " + std::to_string(lineno) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("line " + std::to_string(lineno) + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline Record record_from_json(const nlohmann::json& j, std::size_t lineno) {
  Record r;
  r.id = detail::get_field<std::string>(j, "id", lineno);
  r.tokens = detail::get_field<std::vector<std::string>>(j, "tokens", lineno);
  try {
    r.labels = parse_bio_sequence(detail::get_field<std::vector<std::string>>(j, "labels", lineno));
  } catch (const DataError& e) {
    throw DataError("line " + std::to_string(lineno) + ": " + e.what());
  }
  if (auto it = j.find("source"); it != j.end() && it->is_string()) r.source = it->get<std::string>();
  try {
    check_record(r);
  } catch (const DataError& e) {
    throw DataError("line " + std::to_string(lineno) + ": " + e.what());
  }
  return r;
}

inline Record parse_record_line(const std::string& line, std::size_t lineno) {
  return record_from_json(detail::parse_json_object(line, lineno), lineno);
}

/// Line reader for JSON-lines files. A final line without its terminating
/// newline is reported as a truncated file.
class JsonlLineReader {
 public:
  explicit JsonlLineReader(std::istream& in, std::string name = "<stream>")
      : in_(in), name_(std::move(name)) {}

  /// Next non-empty line, or nullopt at end of input.
  std::optional<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (in_.eof()) {
        if (line.empty()) return std::nullopt;
        throw DataError(name_ + ": truncated file (line " + std::to_string(lineno_) +
                        " has no terminating newline)");
      }
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    return std::nullopt;
  }

  std::size_t line_number() const noexcept { return lineno_; }
  const std::string& name() const noexcept { return name_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t lineno_ = 0;
};

class RecordReader {
 public:
  explicit RecordReader(std::istream& in, std::string name = "<stream>")
      : lines_(in, std::move(name)) {}

  std::optional<Record> next() {
    auto line = lines_.next();
    if (!line) return std::nullopt;
    try {
      return parse_record_line(*line, lines_.line_number());
    } catch (const DataError& e) {
      throw DataError(lines_.name() + ": " + e.what());
    }
  }

  std::size_t line_number() const noexcept { return lines_.line_number(); }

 private:
  JsonlLineReader lines_;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

inline std::vector<Record> read_records(const std::string& path) {
  auto in = open_input(path);
  RecordReader reader(in, path);
  std::vector<Record> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

inline void write_records(std::ostream& out, const std::vector<Record>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

inline void write_records(const std::string& path, const std::vector<Record>& records) {
  auto out = open_output(path);
  write_records(out, records);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace piibench

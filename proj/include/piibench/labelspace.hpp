#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "piibench/error.hpp"

namespace piibench {

/// The ten coarse entity groups, in their canonical order.
inline constexpr std::array<std::string_view, 10> kCoarseGroups = {
    "PERSON_GROUP", "CONTACT",  "FINANCIAL_ID", "TEMPORAL", "CREDENTIAL",
    "NETWORK",      "ORG_ROLE", "LOCATION",     "MISC",     "FINANCIAL_NER"};

inline bool is_coarse_group(std::string_view name) {
  return std::find(kCoarseGroups.begin(), kCoarseGroups.end(), name) !=
         kCoarseGroups.end();
}

inline std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

enum class BioPrefix : char { B = 'B', I = 'I', O = 'O' };

/// One BIO tag. `entity` is empty iff the prefix is O.
struct BioLabel {
  BioPrefix prefix = BioPrefix::O;
  std::string entity;

  static BioLabel outside() { return {}; }
  static BioLabel begin(std::string type) { return {BioPrefix::B, std::move(type)}; }
  static BioLabel inside(std::string type) { return {BioPrefix::I, std::move(type)}; }

  bool is_outside() const noexcept { return prefix == BioPrefix::O; }

  std::string str() const {
    if (prefix == BioPrefix::O) return "O";
    std::string out;
    out.reserve(entity.size() + 2);
    out += static_cast<char>(prefix);
    out += '-';
    out += entity;
    return out;
  }

  friend bool operator==(const BioLabel&, const BioLabel&) = default;
};

inline BioLabel parse_bio_label(std::string_view text) {
  if (text.empty()) throw DataError("empty BIO label");
  if (text == "O") return BioLabel::outside();
  if (text.size() < 2 || text[1] != '-' || (text[0] != 'B' && text[0] != 'I'))
    throw DataError("invalid BIO label '" + std::string(text) + "'");
  if (text.size() == 2)
    throw DataError("BIO label '" + std::string(text) + "' has no entity type");
  return {static_cast<BioPrefix>(text[0]), std::string(text.substr(2))};
}

using BioSequence = std::vector<BioLabel>;

inline BioSequence parse_bio_sequence(const std::vector<std::string>& labels) {
  BioSequence seq;
  seq.reserve(labels.size());
  for (const auto& l : labels) seq.push_back(parse_bio_label(l));
  return seq;
}

inline std::vector<std::string> format_bio_sequence(const BioSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (const auto& l : seq) out.push_back(l.str());
  return out;
}

/// Fine entity types, their coarse groups and the derived BIO vocabularies.
/// Immutable once built.
class LabelSpace {
 public:
  LabelSpace() : fine_labels_{"O"}, coarse_labels_{"O"} {}

  const std::vector<std::string>& fine_types() const noexcept { return fine_types_; }
  /// Groups in order of first use by a fine type.
  const std::vector<std::string>& groups() const noexcept { return groups_; }
  const std::vector<std::string>& fine_labels() const noexcept { return fine_labels_; }
  const std::vector<std::string>& coarse_labels() const noexcept { return coarse_labels_; }

  bool contains(std::string_view type) const {
    return group_of_.find(std::string(type)) != group_of_.end();
  }

  const std::string& coarse_of(std::string_view type) const {
    auto it = group_of_.find(std::string(type));
    if (it == group_of_.end())
      throw DataError("unknown entity type '" + std::string(type) + "'");
    return it->second;
  }

  /// Index into fine_labels(); throws for labels outside the vocabulary.
  std::size_t fine_index(const BioLabel& label) const {
    return index_in(fine_index_, label.str(), "fine");
  }
  std::size_t coarse_index(const BioLabel& label) const {
    return index_in(coarse_index_, label.str(), "coarse");
  }

  friend LabelSpace build_label_space(
      const std::vector<std::string>& fine_types,
      const std::vector<std::pair<std::string, std::string>>& coarse_map);

 private:
  static std::size_t index_in(const std::unordered_map<std::string, std::size_t>& m,
                              const std::string& key, const char* which) {
    auto it = m.find(key);
    if (it == m.end())
      throw DataError("label '" + key + "' is not in the " + which + " vocabulary");
    return it->second;
  }

  std::vector<std::string> fine_types_;
  std::vector<std::string> groups_;
  std::unordered_map<std::string, std::string> group_of_;
  std::vector<std::string> fine_labels_;
  std::vector<std::string> coarse_labels_;
  std::unordered_map<std::string, std::size_t> fine_index_{{"O", 0}};
  std::unordered_map<std::string, std::size_t> coarse_index_{{"O", 0}};
};

/// Builds a label space. Type and group names are upper-cased. Vocabularies
/// put O at index 0 followed by B-/I- pairs in input order.
inline LabelSpace build_label_space(
    const std::vector<std::string>& fine_types,
    const std::vector<std::pair<std::string, std::string>>& coarse_map) {
  std::unordered_map<std::string, std::string> mapping;
  for (const auto& [type, group] : coarse_map) {
    std::string t = to_upper(type), g = to_upper(group);
    if (!is_coarse_group(g)) throw DataError("unknown coarse group '" + group + "'");
    auto [it, inserted] = mapping.emplace(t, g);
    if (!inserted && it->second != g)
      throw DataError("type '" + t + "' mapped to two groups");
  }

  LabelSpace space;
  for (const auto& raw : fine_types) {
    std::string t = to_upper(raw);
    if (t.empty()) throw DataError("empty entity type name");
    if (t.find('-') != std::string::npos)
      throw DataError("entity type '" + t + "' contains '-'");
    if (space.group_of_.count(t)) throw DataError("duplicate entity type '" + t + "'");
    auto m = mapping.find(t);
    if (m == mapping.end()) throw DataError("entity type '" + t + "' has no coarse group");

    space.group_of_.emplace(t, m->second);
    space.fine_types_.push_back(t);
    for (const char* p : {"B-", "I-"}) {
      space.fine_index_.emplace(p + t, space.fine_labels_.size());
      space.fine_labels_.push_back(p + t);
    }
    if (std::find(space.groups_.begin(), space.groups_.end(), m->second) ==
        space.groups_.end()) {
      space.groups_.push_back(m->second);
      for (const char* p : {"B-", "I-"}) {
        space.coarse_index_.emplace(p + m->second, space.coarse_labels_.size());
        space.coarse_labels_.push_back(p + m->second);
      }
    }
  }
  return space;
}

/// Reads a `TYPE<TAB>GROUP` taxonomy. Blank lines and `#` comments are skipped.
inline LabelSpace parse_taxonomy(std::istream& in) {
  std::vector<std::string> types;
  std::vector<std::pair<std::string, std::string>> map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw DataError("taxonomy line " + std::to_string(lineno) +
                      ": expected TYPE<TAB>GROUP");
    types.push_back(line.substr(0, tab));
    map.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return build_label_space(types, map);
}

inline LabelSpace load_taxonomy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open taxonomy file '" + path + "'");
  return parse_taxonomy(in);
}

}  // namespace piibench

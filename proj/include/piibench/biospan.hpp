#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "piibench/labelspace.hpp"

namespace piibench {

/// Half-open token interval [start, end) carrying an entity type.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string entity;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

/// True when the label at `pos` is an I- tag that does not continue a
/// same-type span (including position 0).
inline bool is_orphan_continuation(const BioSequence& seq, std::size_t pos) {
  const BioLabel& cur = seq[pos];
  if (cur.prefix != BioPrefix::I) return false;
  if (pos == 0) return true;
  const BioLabel& prev = seq[pos - 1];
  return prev.is_outside() || prev.entity != cur.entity;
}

/// Spans under the lenient evaluation convention: B-X opens, I-X continues an
/// open X span and otherwise opens a new one, O closes.
inline std::vector<Span> extract_spans(const BioSequence& seq) {
  std::vector<Span> spans;
  bool open = false;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const BioLabel& l = seq[i];
    if (l.is_outside()) {
      open = false;
      continue;
    }
    bool continues = open && l.prefix == BioPrefix::I && spans.back().entity == l.entity;
    if (continues) {
      spans.back().end = i + 1;
    } else {
      spans.push_back({i, i + 1, l.entity});
      open = true;
    }
  }
  return spans;
}

inline std::size_t count_orphan_continuations(const BioSequence& seq) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) n += is_orphan_continuation(seq, i);
  return n;
}

template <typename Range>
std::size_t count_orphan_continuations_all(const Range& sequences) {
  std::size_t n = 0;
  for (const BioSequence& s : sequences) n += count_orphan_continuations(s);
  return n;
}

/// Rewrites orphan I- tags to B-. Span extraction is unchanged by this.
inline BioSequence normalize_bio(const BioSequence& seq) {
  BioSequence out = seq;
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (is_orphan_continuation(seq, i)) out[i].prefix = BioPrefix::B;
  return out;
}

/// Maps every tag onto its coarse group. An orphan I- whose predecessor falls
/// in the same group is emitted as B- so it does not fuse with that span.
inline BioSequence project_to_coarse(const BioSequence& seq, const LabelSpace& space) {
  BioSequence out;
  out.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const BioLabel& l = seq[i];
    if (l.is_outside()) {
      out.push_back(l);
      continue;
    }
    BioLabel mapped{l.prefix, space.coarse_of(l.entity)};
    if (is_orphan_continuation(seq, i) && i > 0 && !out[i - 1].is_outside() &&
        out[i - 1].entity == mapped.entity)
      mapped.prefix = BioPrefix::B;
    out.push_back(std::move(mapped));
  }
  return out;
}

}  // namespace piibench

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "piibench/error.hpp"
#include "piibench/labelspace.hpp"
#include "piibench/record.hpp"

namespace piibench {

/// Byte-offset interval [start, end) into the tag-free text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string entity;

  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct OffsetToken {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const OffsetToken&, const OffsetToken&) = default;
};

struct TaggedText {
  std::string plain;
  std::vector<CharSpan> spans;
};

/// What to do with a well-formed tag whose type is not in the label space.
enum class UnknownTagPolicy { error, drop_span };

namespace detail {

/// Decodes one UTF-8 code point at `pos`. Invalid sequences decode as a single
/// byte so that offsets always advance.
inline char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& len) {
  auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t k) {
    return pos + k < s.size() && (static_cast<unsigned char>(s[pos + k]) & 0xC0) == 0x80;
  };
  auto byte = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[pos + k]) & 0x3F); };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    len = 2;
    return (static_cast<char32_t>(b0 & 0x1F) << 6) | byte(1);
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    len = 3;
    return (static_cast<char32_t>(b0 & 0x0F) << 12) | (byte(1) << 6) | byte(2);
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    len = 4;
    return (static_cast<char32_t>(b0 & 0x07) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
  }
  len = 1;
  return 0xFFFD;
}

inline bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

inline bool is_tag_name_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

inline bool is_tag_name_char(char c) {
  return is_tag_name_start(c) || (c >= '0' && c <= '9');
}

}  // namespace detail

/// Strips `<TYPE>`/`</TYPE>` markers and records each tagged region as a
/// span over the remaining text. A `<` followed by a letter, `_` or `/` must
/// start a bare tag; any other `<` is literal text.
inline TaggedText parse_tagged_text(std::string_view raw, const LabelSpace& space,
                                    UnknownTagPolicy policy = UnknownTagPolicy::error) {
  TaggedText out;
  out.plain.reserve(raw.size());
  std::optional<std::string> open_type;
  std::size_t open_at = 0;

  std::size_t i = 0;
  while (i < raw.size()) {
    char c = raw[i];
    bool tag_like = c == '<' && i + 1 < raw.size() &&
                    (raw[i + 1] == '/' || detail::is_tag_name_start(raw[i + 1]));
    if (!tag_like) {
      out.plain.push_back(c);
      ++i;
      continue;
    }

    bool closing = raw[i + 1] == '/';
    std::size_t name_begin = i + (closing ? 2 : 1);
    std::size_t j = name_begin;
    if (j < raw.size() && detail::is_tag_name_start(raw[j]))
      while (j < raw.size() && detail::is_tag_name_char(raw[j])) ++j;
    if (j == name_begin || j >= raw.size() || raw[j] != '>')
      throw DataError("malformed tag at offset " + std::to_string(i));
    std::string name = to_upper(raw.substr(name_begin, j - name_begin));

    if (!closing) {
      if (open_type)
        throw DataError("nested tag <" + name + "> inside <" + *open_type + "> at offset " +
                        std::to_string(i));
      open_type = name;
      open_at = out.plain.size();
    } else {
      if (!open_type)
        throw DataError("closing tag </" + name + "> without an open tag at offset " +
                        std::to_string(i));
      if (*open_type != name)
        throw DataError("mismatched closing tag </" + name + "> for <" + *open_type +
                        "> at offset " + std::to_string(i));
      if (out.plain.size() == open_at)
        throw DataError("empty tagged region <" + name + "> at offset " + std::to_string(i));
      if (space.contains(name))
        out.spans.push_back({open_at, out.plain.size(), name});
      else if (policy == UnknownTagPolicy::error)
        throw DataError("tag type '" + name + "' is not in the label space");
      open_type.reset();
    }
    i = j + 1;
  }
  if (open_type) throw DataError("unclosed tag <" + *open_type + ">");
  return out;
}

/// Splits on runs of Unicode whitespace. Offsets are byte offsets into `plain`.
inline std::vector<OffsetToken> tokenize_with_offsets(std::string_view plain) {
  std::vector<OffsetToken> tokens;
  std::size_t pos = 0;
  constexpr std::size_t none = std::string_view::npos;
  std::size_t start = none;
  while (pos < plain.size()) {
    std::size_t len = 1;
    char32_t cp = detail::decode_utf8(plain, pos, len);
    if (detail::is_unicode_space(cp)) {
      if (start != none) {
        tokens.push_back({std::string(plain.substr(start, pos - start)), start, pos});
        start = none;
      }
    } else if (start == none) {
      start = pos;
    }
    pos += len;
  }
  if (start != none) tokens.push_back({std::string(plain.substr(start)), start, plain.size()});
  return tokens;
}

/// Token-level BIO from character spans. A token belongs to a span when the
/// two intervals share at least one character. A token touched by two spans
/// stays with the first; the second span then begins at its next token, or
/// vanishes if it has none.
inline BioSequence char_spans_to_bio(const std::vector<OffsetToken>& tokens,
                                     const std::vector<CharSpan>& spans,
                                     std::size_t text_length) {
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const CharSpan& s = spans[k];
    if (s.start >= s.end) throw DataError("empty character span for " + s.entity);
    if (s.end > text_length)
      throw DataError("character span [" + std::to_string(s.start) + "," +
                      std::to_string(s.end) + ") extends beyond text of length " +
                      std::to_string(text_length));
    if (k > 0 && s.start < spans[k - 1].end)
      throw DataError("overlapping or unsorted character spans");
  }

  BioSequence labels(tokens.size());
  std::size_t t = 0;
  for (const CharSpan& s : spans) {
    while (t < tokens.size() && tokens[t].end <= s.start) ++t;
    bool first = true;
    for (std::size_t u = t; u < tokens.size() && tokens[u].start < s.end; ++u) {
      if (!labels[u].is_outside()) continue;
      labels[u] = first ? BioLabel::begin(s.entity) : BioLabel::inside(s.entity);
      first = false;
    }
  }
  return labels;
}

/// Parses, tokenizes and labels one raw record. Returns nullopt when the
/// record carries no spans (or only spans over whitespace).
inline std::optional<Record> ingest_record(std::string_view raw, const std::string& id,
                                           const std::string& source, const LabelSpace& space,
                                           UnknownTagPolicy policy = UnknownTagPolicy::error) {
  TaggedText parsed = parse_tagged_text(raw, space, policy);
  if (parsed.spans.empty()) return std::nullopt;
  auto tokens = tokenize_with_offsets(parsed.plain);
  Record r;
  r.id = id;
  r.source = source;
  r.labels = char_spans_to_bio(tokens, parsed.spans, parsed.plain.size());
  if (extract_spans(r.labels).empty()) return std::nullopt;
  r.tokens.reserve(tokens.size());
  for (auto& tok : tokens) r.tokens.push_back(std::move(tok.text));
  return r;
}

}  // namespace piibench

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "piibench/biospan.hpp"
#include "support/oracles.hpp"

using namespace piibench;

namespace {

BioSequence seq(std::initializer_list<const char*> labels) {
  BioSequence out;
  for (const char* l : labels) out.push_back(parse_bio_label(l));
  return out;
}

std::vector<oracle::SpanTuple> as_tuples(const std::vector<Span>& spans) {
  std::vector<oracle::SpanTuple> out;
  for (const auto& s : spans) out.emplace_back(s.entity, s.start, s.end);
  return out;
}

LabelSpace small_space() {
  return build_label_space({"A", "B", "C", "NAME", "IBAN", "CITY", "PERSON"},
                           {{"A", "MISC"},
                            {"B", "MISC"},
                            {"C", "CONTACT"},
                            {"NAME", "PERSON_GROUP"},
                            {"IBAN", "FINANCIAL_ID"},
                            {"CITY", "LOCATION"},
                            {"PERSON", "PERSON_GROUP"}});
}

}  // namespace

TEST(ExtractSpans, Examples) {
  EXPECT_EQ(extract_spans(seq({"B-NAME", "I-NAME", "O"})), (std::vector<Span>{{0, 2, "NAME"}}));
  EXPECT_EQ(extract_spans(seq({"O", "I-NAME"})), (std::vector<Span>{{1, 2, "NAME"}}));
  EXPECT_EQ(extract_spans(seq({"B-A", "I-B", "I-B"})), (std::vector<Span>{{0, 1, "A"}, {1, 3, "B"}}));
  EXPECT_EQ(extract_spans(seq({"B-A", "B-A"})), (std::vector<Span>{{0, 1, "A"}, {1, 2, "A"}}));
  EXPECT_TRUE(extract_spans({}).empty());
  EXPECT_TRUE(extract_spans(seq({"O", "O"})).empty());
}

// Frozen output of the reference evaluation library (tests/data/make_seqeval_golden.py).
TEST(ExtractSpans, MatchesSeqevalGolden) {
  std::ifstream in(std::string(PIIBENCH_SOURCE_DIR) + "/tests/data/seqeval_spans.jsonl");
  ASSERT_TRUE(in);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    auto labels = j["labels"].get<std::vector<std::string>>();
    std::vector<oracle::SpanTuple> expected;
    for (const auto& s : j["spans"])
      expected.emplace_back(s[0].get<std::string>(), s[1].get<std::size_t>(), s[2].get<std::size_t>());
    EXPECT_EQ(as_tuples(extract_spans(parse_bio_sequence(labels))), expected) << line;
    ++n;
  }
  EXPECT_EQ(n, 507u);
}

TEST(ExtractSpans, AgreesWithStateMachineOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    auto labels = oracle::random_labels(rng, rng() % 16, {"A", "B", "C"});
    EXPECT_EQ(as_tuples(extract_spans(parse_bio_sequence(labels))), oracle::spans(labels));
  }
}

TEST(ExtractSpans, SpansAreOrderedAndDisjoint) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    auto labels = oracle::random_labels(rng, rng() % 20, {"A", "B"});
    auto spans = extract_spans(parse_bio_sequence(labels));
    for (std::size_t i = 0; i < spans.size(); ++i) {
      EXPECT_LT(spans[i].start, spans[i].end);
      EXPECT_LE(spans[i].end, labels.size());
      if (i) EXPECT_LE(spans[i - 1].end, spans[i].start);
    }
  }
}

TEST(OrphanContinuations, Counts) {
  EXPECT_EQ(count_orphan_continuations(seq({"O", "I-NAME"})), 1u);
  EXPECT_EQ(count_orphan_continuations(seq({"B-A", "I-A", "I-A"})), 0u);
  std::vector<BioSequence> corpus = {seq({"I-A", "O", "I-A"}), seq({"B-A", "I-B"})};
  EXPECT_EQ(count_orphan_continuations_all(corpus), 3u);
}

TEST(OrphanContinuations, EqualsSpansOpenedByI) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    auto labels = parse_bio_sequence(oracle::random_labels(rng, rng() % 16, {"A", "B"}));
    std::size_t opened_by_i = 0;
    for (const auto& s : extract_spans(labels)) opened_by_i += labels[s.start].prefix == BioPrefix::I;
    EXPECT_EQ(count_orphan_continuations(labels), opened_by_i);
  }
}

TEST(NormalizeBio, Examples) {
  EXPECT_EQ(normalize_bio(seq({"O", "I-NAME"})), seq({"O", "B-NAME"}));
  EXPECT_EQ(normalize_bio(seq({"B-A", "I-A"})), seq({"B-A", "I-A"}));
  EXPECT_EQ(normalize_bio(seq({"I-A", "I-B"})), seq({"B-A", "B-B"}));
  EXPECT_EQ(extract_spans(seq({"I-A", "I-B"})), extract_spans(seq({"B-A", "B-B"})));
}

TEST(NormalizeBio, PreservesSpansAndRemovesOrphans) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 2000; ++trial) {
    auto s = parse_bio_sequence(oracle::random_labels(rng, rng() % 16, {"A", "B", "C"}));
    auto n = normalize_bio(s);
    EXPECT_EQ(extract_spans(n), extract_spans(s));
    EXPECT_EQ(count_orphan_continuations(n), 0u);
    EXPECT_EQ(normalize_bio(n), n);
  }
}

TEST(ProjectToCoarse, Examples) {
  LabelSpace space = small_space();
  EXPECT_EQ(project_to_coarse(seq({"B-IBAN", "I-IBAN", "O"}), space),
            seq({"B-FINANCIAL_ID", "I-FINANCIAL_ID", "O"}));
  EXPECT_EQ(project_to_coarse(seq({"O", "O"}), space), seq({"O", "O"}));
  EXPECT_EQ(project_to_coarse(seq({"B-CITY", "B-PERSON"}), space), seq({"B-LOCATION", "B-PERSON_GROUP"}));
  EXPECT_THROW(project_to_coarse(seq({"B-UNKNOWN"}), space), DataError);
}

TEST(ProjectToCoarse, SameGroupTypeChangeStaysSeparate) {
  LabelSpace space = small_space();
  // A and B share MISC; the I-B starts its own span and must not fuse with A.
  EXPECT_EQ(project_to_coarse(seq({"B-A", "I-B"}), space), seq({"B-MISC", "B-MISC"}));
  // Orphans after O or another group keep their I- prefix.
  EXPECT_EQ(project_to_coarse(seq({"O", "I-A"}), space), seq({"O", "I-MISC"}));
  EXPECT_EQ(project_to_coarse(seq({"B-C", "I-A"}), space), seq({"B-CONTACT", "I-MISC"}));
}

TEST(ProjectToCoarse, CommutesWithSpanExtraction) {
  LabelSpace space = small_space();
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    auto s = parse_bio_sequence(oracle::random_labels(rng, rng() % 16, {"A", "B", "C"}));
    auto projected = project_to_coarse(s, space);
    ASSERT_EQ(projected.size(), s.size());
    auto expected = extract_spans(s);
    for (auto& sp : expected) sp.entity = space.coarse_of(sp.entity);
    EXPECT_EQ(extract_spans(projected), expected);
  }
}

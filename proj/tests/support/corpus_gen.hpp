#pragma once

// Random gold/prediction JSON-lines pairs for scorer tests.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support/oracles.hpp"

namespace testing_support {

struct ScoringCorpus {
  std::vector<std::vector<std::string>> gold;
  std::vector<std::vector<std::string>> pred;
  std::string gold_jsonl;
  std::string pred_jsonl;
};

/// Predictions are perturbed copies of gold so that true positives occur.
inline ScoringCorpus random_scoring_corpus(std::mt19937_64& rng, std::size_t records, std::size_t n_types) {
  std::vector<std::string> types;
  for (std::size_t t = 0; t < n_types; ++t) types.push_back("T" + std::to_string(t));
  ScoringCorpus c;
  std::ostringstream g, p;
  for (std::size_t i = 0; i < records; ++i) {
    std::size_t len = 1 + rng() % 12;
    auto gold = oracle::random_labels(rng, len, types);
    auto pred = gold;
    for (auto& l : pred)
      if (rng() % 4 == 0) l = oracle::random_labels(rng, 1, types)[0];
    std::string id = "r" + std::to_string(i);
    g << nlohmann::json{{"id", id}, {"tokens", std::vector<std::string>(len, "w")}, {"labels", gold}}.dump() << '\n';
    p << nlohmann::json{{"id", id}, {"labels", pred}}.dump() << '\n';
    c.gold.push_back(std::move(gold));
    c.pred.push_back(std::move(pred));
  }
  c.gold_jsonl = g.str();
  c.pred_jsonl = p.str();
  return c;
}

}  // namespace testing_support

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "piibench/error.hpp"
#include "piibench/labelspace.hpp"

namespace piibench {

/// Probabilities over a BIO vocabulary, indexed like LabelSpace::fine_labels()
/// (or coarse_labels()).
using TokenDistribution = std::vector<double>;

struct LossWeights {
  double w_outside = 0.1;
  double w_entity = 1.0;
};

enum class LossReduction {
  mean,             // sum of weighted token losses / token count
  weighted_mean,    // sum of weighted token losses / sum of weights
  sum,
};

struct LossOptions {
  /// Probabilities are clamped to this floor before the log. 0 disables the
  /// clamp, and a zero gold probability then yields +infinity.
  double clamp_floor = 1e-12;
  LossReduction reduction = LossReduction::mean;
  double normalization_tolerance = 1e-9;
};

enum class Vocabulary { fine, coarse };

/// Class-weighted token cross-entropy against gold BIO labels.
inline double weighted_cross_entropy(std::span<const TokenDistribution> dists,
                                     const BioSequence& gold, const LabelSpace& space,
                                     const LossWeights& weights = {},
                                     const LossOptions& opts = {},
                                     Vocabulary vocab = Vocabulary::fine) {
  if (dists.size() != gold.size())
    throw DataError("loss: " + std::to_string(dists.size()) + " distributions for " +
                    std::to_string(gold.size()) + " gold labels");
  if (weights.w_outside < 0 || weights.w_entity < 0)
    throw UsageError("loss weights must be non-negative");
  const std::size_t width =
      vocab == Vocabulary::fine ? space.fine_labels().size() : space.coarse_labels().size();

  double total = 0, weight_sum = 0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    const TokenDistribution& p = dists[t];
    if (p.size() != width)
      throw DataError("loss: distribution " + std::to_string(t) + " has " +
                      std::to_string(p.size()) + " entries, vocabulary has " +
                      std::to_string(width));
    double mass = 0;
    for (double v : p) {
      if (!(v >= 0)) throw DataError("loss: negative or NaN probability at token " + std::to_string(t));
      mass += v;
    }
    if (std::abs(mass - 1.0) > opts.normalization_tolerance)
      throw DataError("loss: distribution " + std::to_string(t) + " is not normalized");

    std::size_t g = vocab == Vocabulary::fine ? space.fine_index(gold[t]) : space.coarse_index(gold[t]);
    double w = gold[t].is_outside() ? weights.w_outside : weights.w_entity;
    double prob = std::max(p[g], opts.clamp_floor);
    double nll = prob > 0 ? -std::log(prob) : std::numeric_limits<double>::infinity();
    total += w == 0 ? 0.0 : w * nll;
    weight_sum += w;
  }

  switch (opts.reduction) {
    case LossReduction::sum:
      return total;
    case LossReduction::weighted_mean:
      return weight_sum > 0 ? total / weight_sum : 0.0;
    case LossReduction::mean:
      break;
  }
  return gold.empty() ? 0.0 : total / static_cast<double>(gold.size());
}

/// fine + coarse_weight * coarse.
inline double combined_loss(double fine_loss, double coarse_loss, double coarse_weight = 0.3) {
  if (coarse_weight < 0) throw UsageError("coarse loss weight must be non-negative");
  if (coarse_weight == 0) return fine_loss;
  return fine_loss + coarse_weight * coarse_loss;
}

}  // namespace piibench

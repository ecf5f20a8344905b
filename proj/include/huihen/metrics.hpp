// AUC (Mann-Whitney, midranks for ties) and the KS separation statistic.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "huihen/common.hpp"

namespace huihen {

struct ScoredSample {
  double score = 0.0;
  int label = 0;
};

namespace detail {

inline void count_classes(std::span<const ScoredSample> samples, std::size_t& pos,
                          std::size_t& neg, const char* metric) {
  pos = neg = 0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score))
      throw Error(std::string(metric) + ": non-finite score");
    if (s.label == 1)
      ++pos;
    else if (s.label == 0)
      ++neg;
    else
      throw Error(std::string(metric) + ": label must be 0 or 1");
  }
  if (pos == 0 || neg == 0)
    throw Error(std::string(metric) + " undefined: needs both classes");
}

inline std::vector<std::size_t> order_by_score(std::span<const ScoredSample> samples) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score < samples[b].score;
  });
  return order;
}

}  // namespace detail

// Probability that a random positive outscores a random negative, ties = 1/2.
inline double auc(std::span<const ScoredSample> samples) {
  std::size_t pos = 0, neg = 0;
  detail::count_classes(samples, pos, neg, "AUC");
  const auto order = detail::order_by_score(samples);
  // Sum of doubled midranks of the positives keeps everything integral.
  double rank2_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
    const double doubled_midrank = static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (samples[order[k]].label == 1) rank2_sum += doubled_midrank;
    i = j;
  }
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  const double u = rank2_sum / 2.0 - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

// max |TPR - FPR| over thresholds placed between distinct scores.
inline double ks(std::span<const ScoredSample> samples) {
  std::size_t pos = 0, neg = 0;
  detail::count_classes(samples, pos, neg, "KS");
  auto order = detail::order_by_score(samples);
  std::reverse(order.begin(), order.end());
  std::size_t tp = 0, fp = 0;
  double best = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    const double s = samples[order[i]].score;
    while (j < order.size() && samples[order[j]].score == s) {
      if (samples[order[j]].label == 1)
        ++tp;
      else
        ++fp;
      ++j;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    best = std::max(best, std::abs(tpr - fpr));
    i = j;
  }
  return best;
}

inline std::vector<ScoredSample> zip_scores(std::span<const double> scores,
                                            std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("zip_scores: length mismatch");
  std::vector<ScoredSample> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = {scores[i], labels[i]};
  return out;
}

}  // namespace huihen

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "factcheck/errors.hpp"
#include "factcheck/labels.hpp"

namespace factcheck {

// Rows = gold, columns = predicted, in scheme label order.
struct ConfusionMatrix {
  std::vector<Verdict> labels;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
      for (auto c : row) t += c;
    return t;
  }

  std::size_t& at(std::size_t gold, std::size_t pred) { return counts[gold][pred]; }
  std::size_t at(std::size_t gold, std::size_t pred) const { return counts[gold][pred]; }
};

inline ConfusionMatrix confusion(const std::vector<std::pair<Verdict, Verdict>>& records,
                                 const LabelScheme& scheme) {
  ConfusionMatrix cm;
  cm.labels = scheme.labels();
  cm.counts.assign(scheme.size(), std::vector<std::size_t>(scheme.size(), 0));
  for (const auto& [gold, predicted] : records)
    cm.counts[scheme.position(gold)][scheme.position(predicted)]++;
  return cm;
}

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct MetricsReport {
  double accuracy = 0;
  double f1_macro = 0;
  double f1_weighted = 0;
  double f1_micro = 0;
  std::map<Verdict, ClassScores> per_class;
  std::size_t n = 0;
};

// Macro F1 averages over every scheme class; zero-support classes contribute
// F1 = 0 rather than being skipped. Micro scores come from global TP/FP/FN,
// which for single-label classification coincide with accuracy.
inline MetricsReport metrics(const ConfusionMatrix& cm) {
  const std::size_t k = cm.labels.size();
  const std::size_t total = cm.total();
  if (total == 0) throw DomainError("cannot compute metrics of an empty confusion matrix");

  MetricsReport report;
  report.n = total;
  double tp_global = 0, fp_global = 0, fn_global = 0;
  double macro_sum = 0, weighted_sum = 0, trace = 0;

  for (std::size_t i = 0; i < k; ++i) {
    double tp = static_cast<double>(cm.at(i, i));
    double fp = 0, fn = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      fp += static_cast<double>(cm.at(j, i));
      fn += static_cast<double>(cm.at(i, j));
    }
    ClassScores cs;
    for (std::size_t j = 0; j < k; ++j) cs.support += cm.at(i, j);
    cs.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    cs.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    cs.f1 = 2 * tp + fp + fn > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    report.per_class[cm.labels[i]] = cs;

    trace += tp;
    tp_global += tp;
    fp_global += fp;
    fn_global += fn;
    macro_sum += cs.f1;
    weighted_sum += cs.f1 * static_cast<double>(cs.support);
  }

  report.accuracy = trace / static_cast<double>(total);
  report.f1_macro = macro_sum / static_cast<double>(k);
  report.f1_weighted = weighted_sum / static_cast<double>(total);
  report.f1_micro = 2 * tp_global / (2 * tp_global + fp_global + fn_global);
  return report;
}

// Analytic expectations for a guesser that samples predictions from the
// class marginal: accuracy (and micro/weighted F1) = sum of squared
// proportions, macro F1 = 1/k, plus the majority-class rate for context.
struct ChanceBaseline {
  double accuracy = 0;       // sum p_i^2
  double f1_micro = 0;       // = accuracy
  double f1_weighted = 0;    // = accuracy
  double f1_macro = 0;       // = 1/k
  double majority_accuracy = 0;  // max p_i
};

inline ChanceBaseline chance_baseline(const ClassDistribution& dist) {
  ChanceBaseline b;
  double sum_sq = 0, max_p = 0;
  for (const auto& [label, p] : dist.proportions) {
    sum_sq += p * p;
    if (p > max_p) max_p = p;
  }
  b.accuracy = b.f1_micro = b.f1_weighted = sum_sq;
  b.f1_macro = 1.0 / static_cast<double>(dist.labels.size());
  b.majority_accuracy = max_p;
  return b;
}

}  // namespace factcheck

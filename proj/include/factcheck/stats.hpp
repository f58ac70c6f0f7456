#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "factcheck/errors.hpp"
#include "factcheck/specfun.hpp"

namespace factcheck {

enum class TestMethod { Friedman, Conover, PairedT };

inline std::string_view to_string(TestMethod m) {
  switch (m) {
    case TestMethod::Friedman: return "friedman";
    case TestMethod::Conover: return "conover";
    case TestMethod::PairedT: return "paired_t";
  }
  return "";
}

struct PairwiseResult {
  double statistic = 0;
  double p_value = 1;
  double p_holm = 1;
};

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  TestMethod method = TestMethod::Friedman;
  double dof = 0;
  bool degenerate = false;  // zero-variance input; statistic/p are conventions
  // Post-hoc detail, keyed by treatment index pair (i < j).
  std::map<std::pair<std::size_t, std::size_t>, PairwiseResult> pairwise;
};

namespace detail {

// Mid-rank ranking of one block.
inline std::vector<double> mid_ranks(const std::vector<double>& row) {
  const std::size_t k = row.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
  std::vector<double> ranks(k, 0.0);
  std::size_t i = 0;
  while (i < k) {
    std::size_t j = i;
    while (j + 1 < k && row[order[j + 1]] == row[order[i]]) ++j;
    double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = shared;
    i = j + 1;
  }
  return ranks;
}

struct FriedmanWork {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> column_rank_sums;
  double a1 = 0;  // sum of squared individual ranks
  double c1 = 0;  // n*k*(k+1)^2/4
  double t1 = 0;  // tie-corrected chi-square statistic
  bool degenerate = false;
};

inline FriedmanWork friedman_work(const std::vector<std::vector<double>>& scores) {
  const std::size_t n = scores.size();
  if (n < 2) throw DomainError("friedman test requires at least 2 blocks");
  const std::size_t k = scores.front().size();
  if (k < 2) throw DomainError("friedman test requires at least 2 treatments");
  for (const auto& row : scores)
    if (row.size() != k) throw DomainError("friedman score matrix rows must have equal length");

  FriedmanWork w;
  w.n = n;
  w.k = k;
  w.column_rank_sums.assign(k, 0.0);
  for (const auto& row : scores) {
    auto ranks = mid_ranks(row);
    for (std::size_t j = 0; j < k; ++j) {
      w.column_rank_sums[j] += ranks[j];
      w.a1 += ranks[j] * ranks[j];
    }
  }
  double nd = static_cast<double>(n), kd = static_cast<double>(k);
  w.c1 = nd * kd * (kd + 1.0) * (kd + 1.0) / 4.0;

  double ss = 0;
  for (double rj : w.column_rank_sums) {
    double dev = rj - nd * (kd + 1.0) / 2.0;
    ss += dev * dev;
  }
  // a1 == c1 only when every block is completely tied; the statistic is 0 by
  // convention and the result is flagged degenerate.
  if (w.a1 - w.c1 <= 0) {
    w.degenerate = true;
    w.t1 = 0;
  } else {
    w.t1 = (kd - 1.0) * ss / (w.a1 - w.c1);
  }
  return w;
}

}  // namespace detail

// Friedman rank test over an n-blocks x k-treatments score matrix. Ties
// within a block are mid-ranked; the statistic carries the standard tie
// correction and is referred to chi-square with k-1 degrees of freedom.
inline TestResult friedman(const std::vector<std::vector<double>>& scores) {
  auto w = detail::friedman_work(scores);
  TestResult r;
  r.method = TestMethod::Friedman;
  r.dof = static_cast<double>(w.k - 1);
  r.degenerate = w.degenerate;
  r.statistic = w.t1;
  r.p_value = w.degenerate ? 1.0 : specfun::chi_square_sf(w.t1, r.dof);
  return r;
}

inline double holm_adjust(std::vector<std::pair<double, PairwiseResult*>>& entries) {
  // Step-down Holm over the collected raw p-values; returns nothing useful,
  // fills p_holm on each entry.
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t m = entries.size();
  double running = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double adj = std::min(1.0, static_cast<double>(m - i) * entries[i].first);
    running = std::max(running, adj);
    entries[i].second->p_holm = running;
  }
  return 0;
}

// Conover post-hoc on Friedman ranks: pairwise rank-sum differences referred
// to a t distribution with (n-1)(k-1) degrees of freedom. Raw p-values are
// reported alongside Holm-adjusted ones.
inline TestResult conover_posthoc(const std::vector<std::vector<double>>& scores) {
  auto w = detail::friedman_work(scores);
  TestResult r;
  r.method = TestMethod::Conover;
  double nd = static_cast<double>(w.n), kd = static_cast<double>(w.k);
  r.dof = (nd - 1.0) * (kd - 1.0);
  r.degenerate = w.degenerate;
  r.statistic = w.t1;
  r.p_value = w.degenerate ? 1.0 : specfun::chi_square_sf(w.t1, kd - 1.0);

  // Variance term vanishes when the blocks agree perfectly (t1 == n(k-1));
  // equal rank sums then give p = 1 and unequal ones p = 0.
  double var_term = w.degenerate
                        ? 0.0
                        : 2.0 * nd * (w.a1 - w.c1) / r.dof * (1.0 - w.t1 / (nd * (kd - 1.0)));
  for (std::size_t i = 0; i < w.k; ++i) {
    for (std::size_t j = i + 1; j < w.k; ++j) {
      double diff = std::fabs(w.column_rank_sums[i] - w.column_rank_sums[j]);
      PairwiseResult pr;
      if (w.degenerate) {
        pr.statistic = 0;
        pr.p_value = 1.0;
      } else if (var_term <= 0) {
        pr.statistic = diff == 0 ? 0 : std::numeric_limits<double>::infinity();
        pr.p_value = diff == 0 ? 1.0 : 0.0;
      } else {
        pr.statistic = diff / std::sqrt(var_term);
        pr.p_value = specfun::t_two_sided_p(pr.statistic, r.dof);
      }
      r.pairwise[{i, j}] = pr;
    }
  }
  std::vector<std::pair<double, PairwiseResult*>> entries;
  for (auto& [key, pr] : r.pairwise) entries.emplace_back(pr.p_value, &pr);
  holm_adjust(entries);
  return r;
}

// Two-sided paired t test on differences a - b. Zero-variance differences
// are flagged degenerate instead of crashing: p is 1 when the mean
// difference is zero too, otherwise 0.
inline TestResult paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("paired t test requires equal-length samples");
  const std::size_t n = a.size();
  if (n < 2) throw DomainError("paired t test requires at least 2 pairs");

  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
  }
  double var = ss / static_cast<double>(n - 1);

  TestResult r;
  r.method = TestMethod::PairedT;
  r.dof = static_cast<double>(n - 1);
  if (var <= 0) {
    r.degenerate = true;
    r.statistic = 0;
    r.p_value = mean == 0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = mean / std::sqrt(var / static_cast<double>(n));
  r.p_value = specfun::t_two_sided_p(r.statistic, r.dof);
  return r;
}

}  // namespace factcheck

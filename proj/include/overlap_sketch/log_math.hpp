#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "overlap_sketch/types.hpp"

namespace overlap_sketch {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(n!) via log-gamma. boost's lgamma is reentrant, std::lgamma writes signgam.
inline double log_factorial(count_t n) {
  if (n < 2) return 0.0;
  return boost::math::lgamma(static_cast<double>(n) + 1.0);
}

// log C(n, k); -inf outside 0 <= k <= n.
inline double log_choose(count_t n, count_t k) {
  if (k < 0 || n < 0 || k > n) return neg_inf;
  if (k == 0 || k == n) return 0.0;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// Table of log(j!) for j in [0, size). Cumulative sums of log(j) stay accurate
// to ~1e-12 for the sizes the exact likelihood is meant for.
class LogFactorialTable {
 public:
  explicit LogFactorialTable(count_t max_n) : values_(static_cast<std::size_t>(max_n) + 1, 0.0) {
    for (count_t j = 2; j <= max_n; ++j) {
      values_[static_cast<std::size_t>(j)] =
          values_[static_cast<std::size_t>(j - 1)] + std::log(static_cast<double>(j));
    }
  }

  count_t max_n() const noexcept { return static_cast<count_t>(values_.size()) - 1; }

  double log_factorial(count_t n) const { return values_[static_cast<std::size_t>(n)]; }

  double log_choose(count_t n, count_t k) const {
    if (k < 0 || n < 0 || k > n) return neg_inf;
    return values_[static_cast<std::size_t>(n)] - values_[static_cast<std::size_t>(k)] -
           values_[static_cast<std::size_t>(n - k)];
  }

 private:
  std::vector<double> values_;
};

// log(sum(exp(v))) with the usual max shift; -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> values) {
  double peak = neg_inf;
  for (double v : values) peak = std::max(peak, v);
  if (peak == neg_inf) return neg_inf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

// Streaming log-sum-exp. Rescales when a larger term arrives, so one pass
// suffices; the result depends only on the order terms are added.
class LogSumAccumulator {
 public:
  void add(double log_term) {
    if (log_term == neg_inf) return;
    if (log_term <= peak_) {
      sum_ += std::exp(log_term - peak_);
    } else {
      sum_ = sum_ * std::exp(peak_ - log_term) + 1.0;
      peak_ = log_term;
    }
  }

  double value() const { return peak_ == neg_inf ? neg_inf : peak_ + std::log(sum_); }

 private:
  double peak_ = neg_inf;
  double sum_ = 0.0;
};

}  // namespace overlap_sketch

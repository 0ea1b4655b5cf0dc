#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "overlap_sketch/errors.hpp"

namespace overlap_sketch {

using count_t = std::int64_t;

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw domain_error(message);
}

// Product of two counts, or a domain_error if it does not fit in count_t.
inline count_t checked_mul(count_t lhs, count_t rhs, const char* what) {
  count_t out = 0;
  if (__builtin_mul_overflow(lhs, rhs, &out)) {
    throw domain_error(std::string(what) + ": count product overflows 64 bits");
  }
  return out;
}

}  // namespace detail

// Hidden truth for a pair of finite sets A, B. A is the reference set, so
// callers orient the pair such that |A| <= |B|.
class PopulationPair {
 public:
  PopulationPair(count_t n1, count_t n2, count_t intersection)
      : n1_(n1), n2_(n2), i_(intersection) {
    detail::require(n1 > 0 && n2 > 0, "population sizes must be positive");
    detail::require(intersection >= 0, "intersection must be non-negative");
    detail::require(intersection <= n1, "intersection exceeds |A|");
    detail::require(n1 <= n2, "reference set A must be the smaller set (n1 <= n2)");
  }

  count_t n1() const noexcept { return n1_; }
  count_t n2() const noexcept { return n2_; }
  count_t intersection() const noexcept { return i_; }

  double containment1() const noexcept { return static_cast<double>(i_) / static_cast<double>(n1_); }
  double containment2() const noexcept { return static_cast<double>(i_) / static_cast<double>(n2_); }
  double jaccard() const noexcept {
    return static_cast<double>(i_) / static_cast<double>(n1_ + n2_ - i_);
  }

  friend bool operator==(const PopulationPair&, const PopulationPair&) = default;

 private:
  count_t n1_;
  count_t n2_;
  count_t i_;
};

// Sample sizes |P| = m1 and |Q| = m2.
class SampleDesign {
 public:
  SampleDesign(count_t m1, count_t m2) : m1_(m1), m2_(m2) {
    detail::require(m1 > 0 && m2 > 0, "sample sizes must be positive");
  }

  count_t m1() const noexcept { return m1_; }
  count_t m2() const noexcept { return m2_; }

  // Throws unless the samples fit inside their sets.
  void check_against(count_t n1, count_t n2) const {
    detail::require(m1_ <= n1, "m1 exceeds n1");
    detail::require(m2_ <= n2, "m2 exceeds n2");
  }
  void check_against(const PopulationPair& pop) const { check_against(pop.n1(), pop.n2()); }

  double alpha1(count_t n1) const noexcept { return static_cast<double>(m1_) / static_cast<double>(n1); }
  double alpha2(count_t n2) const noexcept { return static_cast<double>(m2_) / static_cast<double>(n2); }

  friend bool operator==(const SampleDesign&, const SampleDesign&) = default;

 private:
  count_t m1_;
  count_t m2_;
};

// Regime diagnostics. The estimators assume all three are small; nothing
// enforces that.
struct RegimeRatios {
  double alpha1;
  double alpha2;
  double pair_density;  // m1*m2 / (n1*n2)
};

inline RegimeRatios regime_ratios(const PopulationPair& pop, const SampleDesign& design) {
  const double a1 = design.alpha1(pop.n1());
  const double a2 = design.alpha2(pop.n2());
  return {a1, a2, a1 * a2};
}

}  // namespace overlap_sketch

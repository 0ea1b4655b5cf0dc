#pragma once

#include <algorithm>
#include <cmath>

#include "overlap_sketch/likelihood.hpp"
#include "overlap_sketch/types.hpp"

namespace overlap_sketch {

struct ClampedValue {
  double value = 0.0;
  bool clamped = false;
};

// J = I / (n1 + n2 - I), clamped to [0, 1]. The flag tells callers the raw
// ratio left the unit interval.
inline ClampedValue jaccard_from_intersection(double i_hat, double n1, double n2) {
  const double denom = n1 + n2 - i_hat;
  if (!(denom > 0.0)) throw domain_error("jaccard_from_intersection: n1 + n2 - i_hat must be positive");
  const double raw = i_hat / denom;
  const double clamped = std::clamp(raw, 0.0, 1.0);
  return {clamped, clamped != raw};
}

// Inverse of jaccard_from_intersection: I = J (n1 + n2) / (1 + J).
inline double intersection_from_jaccard(double j, double n1, double n2) { return j * (n1 + n2) / (1.0 + j); }

struct ContainmentEstimate {
  double i_hat = 0.0;
  double phi1_hat = 0.0;  // i_hat / n1
  double phi2_hat = 0.0;  // i_hat / n2
  double j_hat = 0.0;
  bool j_clamped = false;
  // i_hat <= n1. Equality is still a usable estimate.
  bool valid = true;
};

// Binomial-model estimator I_hat = x n1 n2 / (m1 m2).
inline ContainmentEstimate estimate_binomial(count_t x, count_t n1, count_t n2, const SampleDesign& design) {
  if (x < 0) throw domain_error("estimate_binomial: x must be non-negative");
  if (x > std::min(design.m1(), design.m2())) throw domain_error("estimate_binomial: x exceeds min(m1, m2)");
  design.check_against(n1, n2);

  ContainmentEstimate est;
  const long double i_hat = static_cast<long double>(x) * static_cast<long double>(n1) * static_cast<long double>(n2) /
                            (static_cast<long double>(design.m1()) * static_cast<long double>(design.m2()));
  est.i_hat = static_cast<double>(i_hat);
  est.phi1_hat = static_cast<double>(i_hat / static_cast<long double>(n1));
  est.phi2_hat = static_cast<double>(i_hat / static_cast<long double>(n2));
  est.valid = i_hat <= static_cast<long double>(n1);
  const double union_size = static_cast<double>(n1) + static_cast<double>(n2);
  if (est.i_hat < union_size) {
    const auto j = jaccard_from_intersection(est.i_hat, static_cast<double>(n1), static_cast<double>(n2));
    est.j_hat = j.value;
    est.j_clamped = j.clamped;
  } else {
    est.j_hat = 1.0;
    est.j_clamped = true;
  }
  return est;
}

// Maximum-likelihood I under the union model: argmax over I in [x, n1] of the
// unnormalized P_u(x | I). Ties go to the smaller I.
inline count_t estimate_union_mle(count_t x, count_t n1, count_t n2, const SampleDesign& design) {
  design.check_against(n1, n2);
  if (x < 0) throw domain_error("estimate_union_mle: x must be non-negative");
  // Beyond these caps a binomial coefficient in the numerator vanishes.
  const count_t i_hi = std::min({n1, n1 - design.m1() + x, n2 - design.m2() + x});
  count_t best = -1;
  double best_ll = neg_inf;
  for (count_t i = x; i <= i_hi; ++i) {
    const double ll = union_log_likelihood(x, n1, n2, i, design);
    if (ll > best_ll) {
      best_ll = ll;
      best = i;
    }
  }
  if (best < 0) throw empty_support_error("estimate_union_mle: no intersection size admits x");
  return best;
}

struct JaccardErrorBound {
  double tight = 0.0;  // (1 + n1/n2) / sqrt(x)
  double loose = 0.0;  // 2 / sqrt(x)
};

// Fractional standard error of J_hat, to first order in the error of I_hat.
inline JaccardErrorBound fractional_jaccard_error_bound(count_t x, double n1, double n2) {
  if (x < 1) throw domain_error("fractional_jaccard_error_bound: insufficient overlap (x = 0)");
  const double root = std::sqrt(static_cast<double>(x));
  return {(1.0 + n1 / n2) / root, 2.0 / root};
}

}  // namespace overlap_sketch

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "overlap_sketch/types.hpp"

namespace overlap_sketch {

// Beta(x+1, m1 m2 - x + 1) posterior summaries and the MSE bounds built on it.
struct PosteriorSummary {
  double alpha = 1.0;
  double beta = 1.0;
  double beta_variance = 0.0;
  double mse_bound_i = 0.0;     // (n1 n2)^2 x (m1m2 - x) / ((m1m2)^2 (m1m2 + 1))
  double mse_bound_i_loose = 0.0;  // x (n1 n2)^2 / (m1m2)^2
  double mse_bound_phi1 = 0.0;  // x n2^2 / (m1m2)^2
  double mse_bound_phi2 = 0.0;  // x n1^2 / (m1m2)^2
};

inline double beta_variance(double alpha, double beta) {
  const double s = alpha + beta;
  return alpha * beta / (s * s * (s + 1.0));
}

inline PosteriorSummary posterior_summary(count_t x, count_t n1, count_t n2, const SampleDesign& design) {
  const count_t pairs = detail::checked_mul(design.m1(), design.m2(), "posterior_summary");
  if (x < 0 || x > pairs) throw domain_error("posterior_summary: x must lie in [0, m1*m2]");
  using ld = long double;
  const ld mm = static_cast<ld>(pairs);
  const ld nn = static_cast<ld>(n1) * static_cast<ld>(n2);
  const ld xl = static_cast<ld>(x);

  PosteriorSummary s;
  s.alpha = static_cast<double>(x) + 1.0;
  s.beta = static_cast<double>(mm - xl + 1.0L);
  s.beta_variance = beta_variance(s.alpha, s.beta);
  s.mse_bound_i = static_cast<double>(nn * nn * xl * (mm - xl) / (mm * mm * (mm + 1.0L)));
  s.mse_bound_i_loose = static_cast<double>(xl * nn * nn / (mm * mm));
  s.mse_bound_phi1 = static_cast<double>(xl * static_cast<ld>(n2) * static_cast<ld>(n2) / (mm * mm));
  s.mse_bound_phi2 = static_cast<double>(xl * static_cast<ld>(n1) * static_cast<ld>(n1) / (mm * mm));
  return s;
}

// RMSE target delta and failure probability epsilon, both in (0, 1).
class AccuracySpec {
 public:
  AccuracySpec(double delta, double epsilon) : delta_(delta), epsilon_(epsilon) {
    detail::require(delta > 0.0, "delta must be positive");
    detail::require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  }

  double delta() const noexcept { return delta_; }
  double epsilon() const noexcept { return epsilon_; }
  double log_inv_epsilon() const { return -std::log(epsilon_); }

 private:
  double delta_;
  double epsilon_;
};

struct ValidityCondition {
  // ln(1/eps)/n1 * (2 + phi/(1-phi)) / (1-phi), from the upper-tail Chernoff bound.
  double chernoff = 0.0;
  // 2 ln(1/eps) / ((1-phi)^2 n1). Never smaller than the Chernoff form.
  double simplified = 0.0;
};

// Required alpha1*alpha2 so that I_hat <= n1 holds with probability >= 1 - eps.
inline ValidityCondition validity_condition(double phi, double epsilon, double n1) {
  if (!(phi >= 0.0 && phi < 1.0)) throw domain_error("validity_condition: phi must lie in [0, 1)");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw domain_error("validity_condition: epsilon must lie in (0, 1]");
  if (!(n1 > 0.0)) throw domain_error("validity_condition: n1 must be positive");
  const double log_inv = -std::log(epsilon);
  const double one_minus = 1.0 - phi;
  return {log_inv / n1 * (2.0 + phi / one_minus) / one_minus, 2.0 * log_inv / (one_minus * one_minus * n1)};
}

enum class PlanMode { valid_case, posterior_only };
enum class PlanBinding { accuracy, validity, jaccard };

inline std::string_view to_string(PlanMode m) {
  return m == PlanMode::valid_case ? "valid-case" : "posterior-only";
}

inline std::string_view to_string(PlanBinding b) {
  switch (b) {
    case PlanBinding::accuracy: return "accuracy";
    case PlanBinding::validity: return "validity";
    case PlanBinding::jaccard: return "jaccard";
  }
  return "unknown";
}

struct SamplingPlan {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  count_t m1 = 0;
  count_t m2 = 0;
  PlanBinding binding = PlanBinding::accuracy;
  // Named condition -> required alpha1*alpha2.
  std::map<std::string, double> condition_values;
};

namespace detail {

// ceil() that forgives the last few ulps, so alpha*n = 1e6 + 1e-10 is 1e6.
inline count_t ceil_count(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v))) return static_cast<count_t>(r);
  return static_cast<count_t>(std::ceil(v));
}

inline void finish_plan(SamplingPlan& plan, count_t n1, count_t n2) {
  if (!(plan.alpha1 <= 1.0) || !(plan.alpha2 <= 1.0)) {
    throw infeasible_plan_error("required sampling rate exceeds 1 (alpha1 = " + std::to_string(plan.alpha1) +
                                ", alpha2 = " + std::to_string(plan.alpha2) + ")");
  }
  plan.m1 = std::max<count_t>(1, ceil_count(plan.alpha1 * static_cast<double>(n1)));
  plan.m2 = std::max<count_t>(1, ceil_count(plan.alpha2 * static_cast<double>(n2)));
}

}  // namespace detail

// Sampling rates for containment estimation.
//
// valid-case:     alpha1 alpha2 >= max(1/(delta^2 n1), 2 ln(1/eps)/((1-phi)^2 n1))
// posterior-only: alpha1 alpha2^2 >= 1/(delta^2 n1), i.e. alpha >= (1/(delta^2 n1))^(1/3)
//                 when symmetric; no validity requirement.
//
// With fixed_alpha1 unset the plan is symmetric; otherwise alpha2 is solved
// from the given alpha1.
inline SamplingPlan plan_containment(const AccuracySpec& spec, double phi, count_t n1, count_t n2, PlanMode mode,
                                     std::optional<double> fixed_alpha1 = std::nullopt) {
  if (!(phi >= 0.0 && phi < 1.0)) throw domain_error("plan_containment: phi must lie in [0, 1)");
  detail::require(n1 > 0 && n2 > 0, "plan_containment: set sizes must be positive");
  if (fixed_alpha1) detail::require(*fixed_alpha1 > 0.0, "plan_containment: alpha1 must be positive");
  const double dn1 = static_cast<double>(n1);
  const double delta = spec.delta();
  const double accuracy = 1.0 / (delta * delta * dn1);
  const auto validity = validity_condition(phi, spec.epsilon(), dn1);

  SamplingPlan plan;
  if (mode == PlanMode::valid_case) {
    plan.condition_values["validity_chernoff"] = validity.chernoff;
    plan.condition_values["validity_simplified"] = validity.simplified;
    plan.condition_values["accuracy"] = accuracy;
    const double required = std::max(accuracy, validity.simplified);
    plan.binding = accuracy >= validity.simplified ? PlanBinding::accuracy : PlanBinding::validity;
    if (fixed_alpha1) {
      plan.alpha1 = *fixed_alpha1;
      plan.alpha2 = required / plan.alpha1;
    } else {
      plan.alpha1 = plan.alpha2 = std::sqrt(required);
    }
  } else {
    // The unconditioned posterior bound constrains alpha1 * alpha2^2.
    plan.binding = PlanBinding::accuracy;
    if (fixed_alpha1) {
      plan.alpha1 = *fixed_alpha1;
      plan.alpha2 = std::sqrt(accuracy / plan.alpha1);
    } else {
      plan.alpha1 = plan.alpha2 = std::cbrt(accuracy);
    }
    plan.condition_values["accuracy_posterior_only"] = plan.alpha1 * plan.alpha2;
  }
  detail::finish_plan(plan, n1, n2);
  return plan;
}

struct JaccardCondition {
  // Required alpha1*alpha2 = mu / I where mu = c + L + sqrt(L (2c + L)),
  // c = 4/delta^2, L = ln(1/eps): the root of (mu - c)^2 / (2 mu) = L with
  // mu > c, which the lower-tail bound needs.
  double exact = 0.0;
  // The other root, (c + L - sqrt(L (2c + L))) / I. It lies below c / I, so it
  // does not satisfy c < mu; kept for comparison.
  double lower_root = 0.0;
  // 4 / (delta^2 I), ignoring the ln(1/eps) term.
  double simplified = 0.0;
};

// Required alpha1*alpha2 so that x >= 4/delta^2 with probability >= 1 - eps,
// which keeps the fractional standard error of J_hat below delta.
inline JaccardCondition jaccard_condition(double delta, double log_inv_epsilon, double expected_intersection) {
  if (!(expected_intersection >= 1.0)) throw domain_error("plan_jaccard: expected intersection must be >= 1");
  if (!(delta > 0.0)) throw domain_error("plan_jaccard: delta must be positive");
  if (!(log_inv_epsilon >= 0.0)) throw domain_error("plan_jaccard: ln(1/eps) must be non-negative");
  const double c = 4.0 / (delta * delta);
  const double l = log_inv_epsilon;
  const double root = std::sqrt(l * (2.0 * c + l));
  return {(c + l + root) / expected_intersection, (c + l - root) / expected_intersection, c / expected_intersection};
}

inline JaccardCondition plan_jaccard(const AccuracySpec& spec, double expected_intersection) {
  return jaccard_condition(spec.delta(), spec.log_inv_epsilon(), expected_intersection);
}

// Symmetric (or alpha1-fixed) rates meeting plan_jaccard's exact condition.
inline SamplingPlan plan_jaccard_rates(const AccuracySpec& spec, double expected_intersection, count_t n1, count_t n2,
                                       std::optional<double> fixed_alpha1 = std::nullopt) {
  const auto cond = plan_jaccard(spec, expected_intersection);
  SamplingPlan plan;
  plan.binding = PlanBinding::jaccard;
  plan.condition_values["jaccard_exact"] = cond.exact;
  plan.condition_values["jaccard_lower_root"] = cond.lower_root;
  plan.condition_values["jaccard_simplified"] = cond.simplified;
  if (fixed_alpha1) {
    detail::require(*fixed_alpha1 > 0.0, "plan_jaccard: alpha1 must be positive");
    plan.alpha1 = *fixed_alpha1;
    plan.alpha2 = cond.exact / plan.alpha1;
  } else {
    plan.alpha1 = plan.alpha2 = std::sqrt(cond.exact);
  }
  detail::finish_plan(plan, n1, n2);
  return plan;
}

// Per-operation costs for the sketching runtime model. The in-memory
// elementary operation is the unit.
struct CostModel {
  double fetch = 0.0;  // F: fetch one hash value from the database
  double hash = 0.0;   // H: evaluate one hash inside the database
  double disk = 0.0;   // S: read or write one element on local disk
  double c1 = 50.0;    // per-position comparison constant, plain MinHash
  double c2 = 50.0;    // per-position comparison constant, batched
};

struct RuntimeEstimate {
  double t1 = 0.0;          // build a plain MinHash sketch of A
  double t2 = 0.0;          // compare two plain sketches
  double t1_batched = 0.0;  // build the a batch sketches of a sample of A
  double t2_batched = 0.0;  // compare a x b batch sketches
};

struct RuntimeInputs {
  double n1 = 0;
  double m1 = 0;
  double a = 0;
  double b = 0;
  double k = 0;
  double batch_size = 0;  // M, rows per database round trip for plain MinHash
};

inline RuntimeEstimate runtime_estimate(const CostModel& costs, const RuntimeInputs& in) {
  detail::require(costs.fetch >= 0 && costs.hash >= 0 && costs.disk >= 0 && costs.c1 >= 0 && costs.c2 >= 0,
                  "runtime_estimate: costs must be non-negative");
  detail::require(in.n1 > 0 && in.m1 > 0 && in.a > 0 && in.b > 0 && in.k > 0 && in.batch_size > 0,
                  "runtime_estimate: counts must be positive");
  const double round_trips = in.n1 / in.batch_size;
  RuntimeEstimate r;
  r.t1 = in.k * in.n1 * costs.hash + in.k * round_trips * costs.fetch + in.k * round_trips + in.k * costs.disk;
  r.t2 = 2.0 * in.k * costs.disk + costs.c1 * in.k;
  r.t1_batched = in.k * in.m1 * costs.hash + in.a * in.m1 * costs.hash + in.k * in.a * costs.fetch +
                 in.k * in.a * costs.disk;
  r.t2_batched = in.k * in.a * costs.disk + in.k * in.b * costs.disk + costs.c2 * in.a * in.b * in.k;
  return r;
}

}  // namespace overlap_sketch

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "overlap_sketch/log_math.hpp"
#include "overlap_sketch/types.hpp"

namespace overlap_sketch {

// Models for the distribution of the sample overlap x = |P ∩ Q| given I.
enum class ModelTag { binomial, union_model, exact };

inline std::string_view to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::binomial: return "binomial";
    case ModelTag::union_model: return "union";
    case ModelTag::exact: return "exact";
  }
  return "unknown";
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  count_t median = 0;

  double stddev() const { return std::sqrt(variance); }
};

// A probability mass function over x in [support_min, support_max], stored as
// log probabilities. Immutable after construction.
class OverlapPmf {
 public:
  OverlapPmf(ModelTag model, count_t support_min, std::vector<double> log_prob, double log_normalizer)
      : model_(model),
        support_min_(support_min),
        log_prob_(std::move(log_prob)),
        log_normalizer_(log_normalizer) {
    if (log_prob_.empty()) throw empty_support_error("pmf support is empty");
  }

  static OverlapPmf point_mass(ModelTag model, count_t x) { return OverlapPmf(model, x, {0.0}, 0.0); }

  ModelTag model() const noexcept { return model_; }
  count_t support_min() const noexcept { return support_min_; }
  count_t support_max() const noexcept { return support_min_ + static_cast<count_t>(log_prob_.size()) - 1; }
  const std::vector<double>& log_probs() const noexcept { return log_prob_; }

  // Log of the mass the raw model put on the support before normalization.
  // Zero for the exact model (up to rounding), the log of the kept mass for the
  // truncated binomial, and the arbitrary normalizer of the union model.
  double log_normalizer() const noexcept { return log_normalizer_; }

  double log_prob(count_t x) const {
    if (x < support_min_ || x > support_max()) return neg_inf;
    return log_prob_[static_cast<std::size_t>(x - support_min_)];
  }
  double prob(count_t x) const { return std::exp(log_prob(x)); }

  double total_mass() const {
    double acc = 0.0;
    for (double lp : log_prob_) acc += std::exp(lp);
    return acc;
  }

  // Moments of the model before truncation, when the model has them in closed
  // form (binomial only).
  const std::optional<Moments>& untruncated_moments() const noexcept { return untruncated_; }
  void set_untruncated_moments(Moments m) { untruncated_ = m; }

 private:
  ModelTag model_;
  count_t support_min_;
  std::vector<double> log_prob_;
  double log_normalizer_;
  std::optional<Moments> untruncated_;
};

namespace detail {

inline OverlapPmf normalized_pmf(ModelTag model, count_t support_min, std::vector<double> raw) {
  // Trim -inf tails so the support reflects where the model has mass.
  std::size_t first = 0;
  while (first < raw.size() && raw[first] == neg_inf) ++first;
  if (first == raw.size()) throw empty_support_error(std::string(to_string(model)) + " model has empty support");
  std::size_t last = raw.size() - 1;
  while (raw[last] == neg_inf) --last;
  std::vector<double> kept(raw.begin() + static_cast<std::ptrdiff_t>(first),
                           raw.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  const double norm = log_sum_exp(kept);
  for (double& v : kept) v -= norm;
  return OverlapPmf(model, support_min + static_cast<count_t>(first), std::move(kept), norm);
}

}  // namespace detail

// Bin(m1*m2, I/(n1*n2)) truncated to x <= min(m1, m2) and renormalized. The
// untruncated mean and variance are attached for the bound formulas.
inline OverlapPmf binomial_pmf(const PopulationPair& pop, const SampleDesign& design) {
  design.check_against(pop);
  const count_t trials = detail::checked_mul(design.m1(), design.m2(), "binomial_pmf");
  const long double p_ld = static_cast<long double>(pop.intersection()) /
                           (static_cast<long double>(pop.n1()) * static_cast<long double>(pop.n2()));
  const double p = static_cast<double>(p_ld);
  const double n = static_cast<double>(trials);
  const Moments untruncated{n * p, n * p * (1.0 - p), 0};

  if (pop.intersection() == 0) {
    auto pmf = OverlapPmf::point_mass(ModelTag::binomial, 0);
    pmf.set_untruncated_moments(untruncated);
    return pmf;
  }
  const count_t hi = std::min(design.m1(), design.m2());
  if (p == 1.0) {
    // Only reachable with n1 = n2 = I = 1, where trials = 1 <= hi.
    auto pmf = OverlapPmf::point_mass(ModelTag::binomial, trials);
    pmf.set_untruncated_moments(untruncated);
    return pmf;
  }

  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  std::vector<double> raw(static_cast<std::size_t>(hi) + 1);
  // log C(trials, x) by the multiplicative recurrence; lgamma differences at
  // trials ~ 1e9 would lose ~1e-6 per term.
  double log_coeff = 0.0;
  for (count_t x = 0; x <= hi; ++x) {
    raw[static_cast<std::size_t>(x)] = log_coeff + static_cast<double>(x) * log_p + (n - static_cast<double>(x)) * log_q;
    log_coeff += std::log(n - static_cast<double>(x)) - std::log(static_cast<double>(x) + 1.0);
  }
  auto pmf = detail::normalized_pmf(ModelTag::binomial, 0, std::move(raw));
  pmf.set_untruncated_moments(untruncated);
  return pmf;
}

// Union-decomposition likelihood
//   C(I,x) C(n1-I, m1-x) C(n2-I, m2-x) / C(n1+n2-I, m1+m2-x),
// which does not sum to one over x; it is normalized numerically and the raw
// log-normalizer is kept on the result.
inline OverlapPmf union_pmf(const PopulationPair& pop, const SampleDesign& design) {
  design.check_against(pop);
  const count_t n1 = pop.n1(), n2 = pop.n2(), i = pop.intersection();
  const count_t m1 = design.m1(), m2 = design.m2();
  const count_t lo = std::max({count_t{0}, m1 - (n1 - i), m2 - (n2 - i)});
  const count_t hi = std::min({m1, m2, i});
  if (lo > hi) throw empty_support_error("union model: no x admits a positive likelihood");

  std::vector<double> raw(static_cast<std::size_t>(hi - lo) + 1);
  for (count_t x = lo; x <= hi; ++x) {
    raw[static_cast<std::size_t>(x - lo)] = log_choose(i, x) + log_choose(n1 - i, m1 - x) +
                                            log_choose(n2 - i, m2 - x) - log_choose(n1 + n2 - i, m1 + m2 - x);
  }
  return detail::normalized_pmf(ModelTag::union_model, lo, std::move(raw));
}

// Unnormalized log P_u(x | I) for a single (x, I); -inf where any binomial
// coefficient vanishes.
inline double union_log_likelihood(count_t x, count_t n1, count_t n2, count_t i, const SampleDesign& design) {
  const count_t m1 = design.m1(), m2 = design.m2();
  const double num = log_choose(i, x) + log_choose(n1 - i, m1 - x) + log_choose(n2 - i, m2 - x);
  if (num == neg_inf) return neg_inf;
  return num - log_choose(n1 + n2 - i, m1 + m2 - x);
}

inline constexpr count_t default_exact_term_budget = 100'000'000;

// Number of (a, b) grid cells summed by exact_pmf: sum over x of
// (m1 - x + 1)(m2 - x + 1).
inline double exact_grid_size(const SampleDesign& design, count_t intersection) {
  const count_t hi = std::min({design.m1(), design.m2(), intersection});
  double total = 0.0;
  for (count_t x = 0; x <= hi; ++x) {
    total += static_cast<double>(design.m1() - x + 1) * static_cast<double>(design.m2() - x + 1);
  }
  return total;
}

// Exact likelihood of x from counting (P, Q) configurations:
//   n(x|I) = sum_{a,b} C(I,x) C(I-x,a+b) C(a+b,a) C(n1-I,m1-x-a) C(n2-I,m2-x-b)
//   P(x|I) = n(x|I) / (C(n1,m1) C(n2,m2))
// a counts elements of P in (A∩B)\Q, b elements of Q in (A∩B)\P. Summation
// order is x ascending, then a ascending, then b ascending; the result is
// not renormalized.
inline OverlapPmf exact_pmf(const PopulationPair& pop, const SampleDesign& design,
                            count_t term_budget = default_exact_term_budget) {
  design.check_against(pop);
  const count_t n1 = pop.n1(), n2 = pop.n2(), i = pop.intersection();
  const count_t m1 = design.m1(), m2 = design.m2();
  const double grid = exact_grid_size(design, i);
  if (grid > static_cast<double>(term_budget)) {
    throw resource_error("exact likelihood grid of " + std::to_string(static_cast<long long>(grid)) +
                         " terms exceeds budget of " + std::to_string(term_budget));
  }

  constexpr count_t table_limit = count_t{1} << 22;
  std::optional<LogFactorialTable> table;
  if (n2 <= table_limit) table.emplace(n2);
  auto lc = [&](count_t n, count_t k) { return table ? table->log_choose(n, k) : log_choose(n, k); };

  const double log_total = lc(n1, m1) + lc(n2, m2);
  const count_t hi = std::min({m1, m2, i});
  std::vector<double> log_prob(static_cast<std::size_t>(hi) + 1, neg_inf);
  for (count_t x = 0; x <= hi; ++x) {
    const double log_x_part = lc(i, x);
    const count_t free_common = i - x;
    const count_t a_lo = std::max(count_t{0}, m1 - x - (n1 - i));
    const count_t a_hi = std::min(m1 - x, free_common);
    const count_t b_lo = std::max(count_t{0}, m2 - x - (n2 - i));
    LogSumAccumulator acc;
    for (count_t a = a_lo; a <= a_hi; ++a) {
      const double log_a_part = lc(n1 - i, m1 - x - a);
      const count_t b_hi = std::min(m2 - x, free_common - a);
      for (count_t b = b_lo; b <= b_hi; ++b) {
        acc.add(lc(free_common, a + b) + lc(a + b, a) + log_a_part + lc(n2 - i, m2 - x - b));
      }
    }
    const double log_count = acc.value();
    if (log_count != neg_inf) log_prob[static_cast<std::size_t>(x)] = log_x_part + log_count - log_total;
  }

  std::size_t first = 0;
  while (first < log_prob.size() && log_prob[first] == neg_inf) ++first;
  if (first == log_prob.size()) throw empty_support_error("exact model has empty support");
  std::size_t last = log_prob.size() - 1;
  while (log_prob[last] == neg_inf) --last;
  std::vector<double> kept(log_prob.begin() + static_cast<std::ptrdiff_t>(first),
                           log_prob.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  const double log_mass = log_sum_exp(kept);
  return OverlapPmf(ModelTag::exact, static_cast<count_t>(first), std::move(kept), log_mass);
}

// Mean, variance, and median (smallest x with CDF >= 0.5) of a normalized pmf.
inline Moments pmf_moments(const OverlapPmf& pmf) {
  Moments m;
  const auto& lp = pmf.log_probs();
  for (std::size_t j = 0; j < lp.size(); ++j) {
    m.mean += static_cast<double>(pmf.support_min() + static_cast<count_t>(j)) * std::exp(lp[j]);
  }
  double cdf = 0.0;
  bool median_found = false;
  for (std::size_t j = 0; j < lp.size(); ++j) {
    const double x = static_cast<double>(pmf.support_min() + static_cast<count_t>(j));
    const double p = std::exp(lp[j]);
    m.variance += (x - m.mean) * (x - m.mean) * p;
    cdf += p;
    if (!median_found && cdf >= 0.5) {
      m.median = pmf.support_min() + static_cast<count_t>(j);
      median_found = true;
    }
  }
  if (!median_found) m.median = pmf.support_max();
  return m;
}

// Total variation distance 1/2 sum |p(x) - q(x)| over the union of supports.
inline double total_variation(const OverlapPmf& p, const OverlapPmf& q) {
  const count_t lo = std::min(p.support_min(), q.support_min());
  const count_t hi = std::max(p.support_max(), q.support_max());
  double acc = 0.0;
  for (count_t x = lo; x <= hi; ++x) acc += std::abs(p.prob(x) - q.prob(x));
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

}  // namespace overlap_sketch

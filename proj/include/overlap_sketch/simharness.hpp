#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "overlap_sketch/batch.hpp"
#include "overlap_sketch/estimators.hpp"
#include "overlap_sketch/hashing.hpp"
#include "overlap_sketch/likelihood.hpp"
#include "overlap_sketch/minhash.hpp"
#include "overlap_sketch/parallel.hpp"
#include "overlap_sketch/planner.hpp"

namespace overlap_sketch {

using Rng = std::mt19937_64;

// Closed integer interval [lo, hi]; an empty interval has hi = lo - 1.
struct Interval {
  std::int64_t lo = 1;
  std::int64_t hi = 0;

  count_t length() const noexcept { return hi - lo + 1; }
  bool contains(std::int64_t e) const noexcept { return lo <= e && e <= hi; }
  std::int64_t at(count_t index) const noexcept { return lo + index; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline count_t overlap_length(const Interval& a, const Interval& b) {
  return std::max<count_t>(0, intersect(a, b).length());
}

// A = [i - n1 + 1, i], B = [1, n2], so |A ∩ B| = i.
inline std::pair<Interval, Interval> make_overlapping_sets(count_t n1, count_t n2, count_t i) {
  if (!(0 <= i && i <= n1 && n1 <= n2)) throw domain_error("make_overlapping_sets: need 0 <= i <= n1 <= n2");
  return {Interval{i - n1 + 1, i}, Interval{1, n2}};
}

// m distinct elements of the interval, every m-subset equally likely, returned
// in ascending order. Uses Floyd's algorithm over the index space, with a
// bitmap for membership when the interval is small enough and a hash set
// otherwise.
inline std::vector<std::int64_t> sample_uniform(const Interval& interval, count_t m, Rng& rng) {
  const count_t n = interval.length();
  if (m < 0) throw domain_error("sample_uniform: m must be non-negative");
  if (m > n) throw domain_error("sample_uniform: m exceeds the interval length");
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(m));
  if (m == 0) return out;
  if (m == n) {
    for (count_t j = 0; j < n; ++j) out.push_back(interval.at(j));
    return out;
  }

  constexpr count_t bitmap_limit = count_t{1} << 27;
  if (n <= bitmap_limit) {
    std::vector<std::uint64_t> taken(static_cast<std::size_t>((n + 63) / 64), 0);
    auto test_and_set = [&](count_t idx) {
      auto& word = taken[static_cast<std::size_t>(idx >> 6)];
      const std::uint64_t bit = std::uint64_t{1} << (idx & 63);
      const bool was = (word & bit) != 0;
      word |= bit;
      return was;
    };
    for (count_t j = n - m; j < n; ++j) {
      const count_t t = std::uniform_int_distribution<count_t>(0, j)(rng);
      if (test_and_set(t)) test_and_set(j);
    }
    // Scanning the bitmap yields ascending order without a sort.
    for (std::size_t w = 0; w < taken.size(); ++w) {
      for (std::uint64_t bits = taken[w]; bits != 0; bits &= bits - 1) {
        out.push_back(interval.at(static_cast<count_t>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)))));
      }
    }
    return out;
  } else {
    std::unordered_set<count_t> taken;
    taken.reserve(static_cast<std::size_t>(m) * 2);
    for (count_t j = n - m; j < n; ++j) {
      const count_t t = std::uniform_int_distribution<count_t>(0, j)(rng);
      const count_t pick = taken.insert(t).second ? t : j;
      if (pick == j) taken.insert(j);
      out.push_back(interval.at(pick));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// |P ∩ Q| for ascending inputs.
inline count_t sorted_overlap(std::span<const std::int64_t> p, std::span<const std::int64_t> q) {
  count_t x = 0;
  std::size_t i = 0, j = 0;
  while (i < p.size() && j < q.size()) {
    if (p[i] < q[j]) {
      ++i;
    } else if (q[j] < p[i]) {
      ++j;
    } else {
      ++x;
      ++i;
      ++j;
    }
  }
  return x;
}

inline std::vector<std::int64_t> sorted_common(std::span<const std::int64_t> p, std::span<const std::int64_t> q) {
  std::vector<std::int64_t> out;
  std::set_intersection(p.begin(), p.end(), q.begin(), q.end(), std::back_inserter(out));
  return out;
}

// ---------------------------------------------------------------------------
// Configuration and records

enum class ExperimentMode { overlap_dist, containment, batch_phi, jaccard_z };

inline std::string_view to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::overlap_dist: return "overlap-dist";
    case ExperimentMode::containment: return "containment";
    case ExperimentMode::batch_phi: return "batch-phi";
    case ExperimentMode::jaccard_z: return "jaccard-z";
  }
  return "unknown";
}

inline ExperimentMode parse_mode(std::string_view s) {
  if (s == "overlap-dist" || s == "overlap") return ExperimentMode::overlap_dist;
  if (s == "containment") return ExperimentMode::containment;
  if (s == "batch-phi") return ExperimentMode::batch_phi;
  if (s == "jaccard-z" || s == "jaccard") return ExperimentMode::jaccard_z;
  throw domain_error("unknown experiment mode: " + std::string(s));
}

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::overlap_dist;
  PopulationPair pop{1, 1, 0};
  SampleDesign design{1, 1};
  count_t trials = 1;
  std::uint64_t master_seed = 0;
  std::optional<std::size_t> a;  // batches of P (batch-phi)
  std::optional<std::size_t> b;  // batches of Q (batch-phi)
  std::optional<std::size_t> k;  // hash functions (batch-phi, jaccard-z)
  unsigned threads = 0;          // 0: machine parallelism; never affects results
  bool model_comparison = true;  // overlap-dist: evaluate union/exact models too

  // Throws unless the mode's parameters are present exactly when required.
  void validate() const {
    design.check_against(pop);
    detail::require(trials >= 1, "trials must be >= 1");
    const bool batches = mode == ExperimentMode::batch_phi;
    const bool needs_k = batches || mode == ExperimentMode::jaccard_z;
    detail::require(a.has_value() == batches && b.has_value() == batches,
                    "parameters a and b are required by batch-phi and only by it");
    detail::require(k.has_value() == needs_k, "parameter k is required by batch-phi and jaccard-z and only by them");
    if (batches) detail::require(*a >= 1 && *b >= 1, "a and b must be >= 1");
    if (needs_k) detail::require(*k >= 1, "k must be >= 1");
  }
};

struct TrialRecord {
  count_t trial_index = 0;
  std::optional<count_t> x;
  std::optional<double> estimate;
  std::optional<double> comparator;
  std::optional<double> delta;
  std::optional<double> z;
  bool valid = true;
  std::map<std::string, double> extra;
};

struct Summary {
  std::size_t n = 0;
  double truth = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // unbiased, n - 1 denominator
  double rmse = 0.0;
  double bias = 0.0;
};

// Statistics of `values` against `truth`. Sums run in input order.
inline Summary summarize(std::span<const double> values, double truth) {
  if (values.empty()) throw domain_error("summarize: no records");
  Summary s;
  s.n = values.size();
  s.truth = truth;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  double ss = 0.0, se = 0.0;
  for (double v : values) {
    ss += (v - s.mean) * (v - s.mean);
    se += (v - truth) * (v - truth);
  }
  s.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.rmse = std::sqrt(se / n);
  s.bias = s.mean - truth;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<TrialRecord> records;
  Summary summary;  // over the mode's primary quantity, see run_experiment
  std::map<std::string, double> bound_values;
  std::map<std::string, count_t> counts;
};

// ---------------------------------------------------------------------------
// Runners

namespace detail {

struct DrawnSamples {
  std::vector<std::int64_t> p;
  std::vector<std::int64_t> q;
  count_t x = 0;
};

inline DrawnSamples draw_samples(const ExperimentConfig& cfg, Rng& rng) {
  const auto [a_set, b_set] = make_overlapping_sets(cfg.pop.n1(), cfg.pop.n2(), cfg.pop.intersection());
  DrawnSamples d;
  d.p = sample_uniform(a_set, cfg.design.m1(), rng);
  d.q = sample_uniform(b_set, cfg.design.m2(), rng);
  d.x = sorted_overlap(d.p, d.q);
  return d;
}

template <typename TrialFn>
std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, TrialFn&& trial) {
  std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
  parallel_for(records.size(), cfg.threads, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.master_seed, t));
    records[t] = trial(static_cast<count_t>(t), rng);
    records[t].trial_index = static_cast<count_t>(t);
  });
  return records;
}

inline std::vector<double> collect(const std::vector<TrialRecord>& records,
                                   const std::optional<double> TrialRecord::*field, bool valid_only = false) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (valid_only && !r.valid) continue;
    if ((r.*field).has_value()) out.push_back(*(r.*field));
  }
  return out;
}

inline double mean_extra(const std::vector<TrialRecord>& records, const std::string& key) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (auto it = r.extra.find(key); it != r.extra.end()) {
      acc += it->second;
      ++n;
    }
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

inline double sum_extra(const std::vector<TrialRecord>& records, const std::string& key) {
  double acc = 0.0;
  for (const auto& r : records) {
    if (auto it = r.extra.find(key); it != r.extra.end()) acc += it->second;
  }
  return acc;
}

}  // namespace detail

// Distribution of x = |P ∩ Q| against the likelihood models. The summary is
// over x with the binomial mean as truth.
inline ExperimentReport run_overlap_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.mode != ExperimentMode::overlap_dist) throw domain_error("run_overlap_experiment needs mode overlap-dist");
  ExperimentReport report;
  report.config = cfg;
  report.records = detail::run_trials(cfg, [&](count_t, Rng& rng) {
    const auto d = detail::draw_samples(cfg, rng);
    TrialRecord r;
    r.x = d.x;
    const auto est = estimate_binomial(d.x, cfg.pop.n1(), cfg.pop.n2(), cfg.design);
    r.estimate = est.i_hat;
    r.valid = est.valid;
    return r;
  });

  std::vector<double> xs;
  for (const auto& r : report.records) xs.push_back(static_cast<double>(*r.x));
  const auto binom = binomial_pmf(cfg.pop, cfg.design);
  const auto& untruncated = *binom.untruncated_moments();
  report.summary = summarize(xs, untruncated.mean);
  report.bound_values["binomial_mean"] = untruncated.mean;
  report.bound_values["binomial_std"] = untruncated.stddev();
  const auto binom_trunc = pmf_moments(binom);
  report.bound_values["binomial_truncated_mean"] = binom_trunc.mean;
  report.bound_values["binomial_truncated_std"] = binom_trunc.stddev();

  // Empirical histogram as a pmf, for distances to the models.
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const count_t lo = static_cast<count_t>(*lo_it), hi = static_cast<count_t>(*hi_it);
  std::vector<double> hist(static_cast<std::size_t>(hi - lo) + 1, 0.0);
  for (double x : xs) hist[static_cast<std::size_t>(static_cast<count_t>(x) - lo)] += 1.0;
  std::vector<double> log_hist;
  for (double c : hist) log_hist.push_back(c > 0 ? std::log(c / static_cast<double>(xs.size())) : neg_inf);
  const OverlapPmf empirical(ModelTag::exact, lo, std::move(log_hist), 0.0);
  report.bound_values["tv_empirical_binomial"] = total_variation(empirical, binom);

  if (cfg.model_comparison) {
    try {
      const auto u = pmf_moments(union_pmf(cfg.pop, cfg.design));
      report.bound_values["union_mean"] = u.mean;
      report.bound_values["union_std"] = u.stddev();
    } catch (const empty_support_error&) {
      report.counts["union_empty_support"] = 1;
    }
    if (exact_grid_size(cfg.design, cfg.pop.intersection()) <= 1e7) {
      const auto exact = exact_pmf(cfg.pop, cfg.design);
      const auto em = pmf_moments(exact);
      report.bound_values["exact_mean"] = em.mean;
      report.bound_values["exact_std"] = em.stddev();
      report.bound_values["tv_empirical_exact"] = total_variation(empirical, exact);
    }
  }
  report.counts["invalid"] = static_cast<count_t>(
      std::count_if(report.records.begin(), report.records.end(), [](const TrialRecord& r) { return !r.valid; }));
  return report;
}

// Binomial estimator I_hat against the posterior MSE bounds and the validity
// condition. Summary is over I_hat with the true I as truth.
inline ExperimentReport run_containment_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.mode != ExperimentMode::containment) throw domain_error("run_containment_experiment needs mode containment");
  const count_t n1 = cfg.pop.n1(), n2 = cfg.pop.n2();
  ExperimentReport report;
  report.config = cfg;
  report.records = detail::run_trials(cfg, [&](count_t, Rng& rng) {
    const auto d = detail::draw_samples(cfg, rng);
    const auto est = estimate_binomial(d.x, n1, n2, cfg.design);
    const auto post = posterior_summary(d.x, n1, n2, cfg.design);
    TrialRecord r;
    r.x = d.x;
    r.estimate = est.i_hat;
    r.comparator = est.phi1_hat;
    r.valid = est.valid;
    r.extra["mse_bound_i"] = post.mse_bound_i;
    r.extra["mse_bound_i_loose"] = post.mse_bound_i_loose;
    r.extra["mse_bound_phi1"] = post.mse_bound_phi1;
    return r;
  });

  const double truth = static_cast<double>(cfg.pop.intersection());
  const auto i_hats = detail::collect(report.records, &TrialRecord::estimate);
  report.summary = summarize(i_hats, truth);
  report.bound_values["empirical_mse_i"] = report.summary.rmse * report.summary.rmse;
  report.bound_values["mean_mse_bound_i"] = detail::mean_extra(report.records, "mse_bound_i");
  report.bound_values["mean_mse_bound_i_loose"] = detail::mean_extra(report.records, "mse_bound_i_loose");

  const double phi = cfg.pop.containment1();
  double se = 0.0;
  std::size_t valid = 0;
  for (const auto& r : report.records) {
    if (!r.valid) continue;
    se += (*r.comparator - phi) * (*r.comparator - phi);
    ++valid;
  }
  report.bound_values["empirical_mse_phi1_valid"] = valid ? se / static_cast<double>(valid) : 0.0;
  report.bound_values["valid_case_bound_phi1"] =
      static_cast<double>(n2) / (static_cast<double>(cfg.design.m1()) * static_cast<double>(cfg.design.m2()));
  const count_t invalid = static_cast<count_t>(report.records.size() - valid);
  report.counts["invalid"] = invalid;
  report.bound_values["invalid_frequency"] = static_cast<double>(invalid) / static_cast<double>(report.records.size());
  return report;
}

// Batch-MinHash containment with fresh hash families and partition seeds per
// trial. Summary is over phi_hat with phi = I/n1 as truth; the estimate from
// the merged sketches is the comparator. Per-pair overlap errors are scored
// against 3 sqrt((m1i + m2j) x_ij / k).
inline ExperimentReport run_batch_phi_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.mode != ExperimentMode::batch_phi) throw domain_error("run_batch_phi_experiment needs mode batch-phi");
  const std::size_t a = *cfg.a, b = *cfg.b, k = *cfg.k;
  const count_t n2 = cfg.pop.n2(), m1 = cfg.design.m1(), m2 = cfg.design.m2();
  const double phi = cfg.pop.containment1();

  ExperimentReport report;
  report.config = cfg;
  report.records = detail::run_trials(cfg, [&](count_t, Rng& rng) {
    const auto d = detail::draw_samples(cfg, rng);
    const auto family = HashFamily::random(k, rng());
    const std::uint64_t seed_p = rng();
    const std::uint64_t seed_q = rng();
    const auto p_set = build_batch_sketches(d.p, a, seed_p, family);
    const auto q_set = build_batch_sketches(d.q, b, seed_q, family);
    const auto res = batch_containment(p_set, q_set, n2, m1, m2);

    const double j_full = estimate_sample_jaccard(p_set.merged(), q_set.merged());
    const double x_full = pair_xhat(j_full, static_cast<double>(m1), static_cast<double>(m2));

    // True pair overlaps from the common elements' batch assignments.
    std::vector<count_t> x_true(a * b, 0);
    for (std::int64_t e : sorted_common(d.p, d.q)) {
      ++x_true[partition_index(seed_p, e, a) * b + partition_index(seed_q, e, b)];
    }
    double within = 0, nonzero = 0, nonzero_within = 0, sq_err = 0, bound_sum = 0;
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const double size_sum = static_cast<double>(p_set[i].size + q_set[j].size);
        const double xt = static_cast<double>(x_true[i * b + j]);
        const double err = std::abs(res.x_hat_at(i, j) - xt);
        const bool ok = err <= 3.0 * std::sqrt(size_sum * xt / static_cast<double>(k));
        within += ok ? 1 : 0;
        if (xt > 0) {
          nonzero += 1;
          nonzero_within += ok ? 1 : 0;
        }
        sq_err += err * err;
        bound_sum += pair_xhat_mse_bound(xt, static_cast<double>(p_set[i].size), static_cast<double>(q_set[j].size), k);
      }
    }

    BatchErrorInputs bin{phi, k, static_cast<double>(p_set.max_batch_size()), static_cast<double>(q_set.max_batch_size()),
                         static_cast<double>(m1), static_cast<double>(m2), static_cast<double>(n2)};
    TrialRecord r;
    r.x = d.x;
    r.estimate = res.phi_hat;
    r.comparator = x_full * static_cast<double>(n2) / (static_cast<double>(m1) * static_cast<double>(m2));
    r.delta = batch_containment_error(bin, BatchErrorMode::binomial);
    r.extra["bound_unequal"] = batch_containment_error(bin, BatchErrorMode::unequal);
    r.extra["pairs_total"] = static_cast<double>(a * b);
    r.extra["pairs_within"] = within;
    r.extra["pairs_nonzero"] = nonzero;
    r.extra["pairs_nonzero_within"] = nonzero_within;
    r.extra["pair_sq_error"] = sq_err;
    r.extra["pair_mse_bound_sum"] = bound_sum;
    return r;
  });

  const auto phis = detail::collect(report.records, &TrialRecord::estimate);
  report.summary = summarize(phis, phi);
  const auto full = summarize(detail::collect(report.records, &TrialRecord::comparator), phi);
  report.bound_values["phi_full_mean"] = full.mean;
  report.bound_values["phi_full_bias"] = full.bias;
  report.bound_values["phi_full_rmse"] = full.rmse;
  report.bound_values["bound_binomial"] = summarize(detail::collect(report.records, &TrialRecord::delta), 0.0).mean;
  BatchErrorInputs nominal{phi, k, static_cast<double>(m1) / static_cast<double>(a),
                           static_cast<double>(m2) / static_cast<double>(b), static_cast<double>(m1),
                           static_cast<double>(m2), static_cast<double>(n2)};
  report.bound_values["bound_binomial_nominal"] = batch_containment_error(nominal, BatchErrorMode::binomial);
  report.bound_values["bound_unequal"] = detail::mean_extra(report.records, "bound_unequal");
  const double pairs_total = detail::sum_extra(report.records, "pairs_total");
  report.bound_values["pair_fraction_within"] = detail::sum_extra(report.records, "pairs_within") / pairs_total;
  const double nz = detail::sum_extra(report.records, "pairs_nonzero");
  report.bound_values["pair_fraction_nonzero_within"] =
      nz > 0 ? detail::sum_extra(report.records, "pairs_nonzero_within") / nz : 1.0;
  const double bound_sum = detail::sum_extra(report.records, "pair_mse_bound_sum");
  report.bound_values["pair_mse_to_bound_ratio"] =
      bound_sum > 0 ? detail::sum_extra(report.records, "pair_sq_error") / bound_sum : 0.0;
  return report;
}

// Corrected Jaccard from sketches of the two samples, scored by
// Z = (J_hat - J) / Delta. Trials with r - J'(1-r) <= 0 are invalid and left
// out of the Z statistics. Summary is over Z of valid trials with truth 0.
inline ExperimentReport run_jaccard_z_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.mode != ExperimentMode::jaccard_z) throw domain_error("run_jaccard_z_experiment needs mode jaccard-z");
  const std::size_t k = *cfg.k;
  const count_t n1 = cfg.pop.n1(), n2 = cfg.pop.n2(), m1 = cfg.design.m1(), m2 = cfg.design.m2();
  const double truth_j = cfg.pop.jaccard();
  const auto ratio = correction_ratio(static_cast<double>(n1), static_cast<double>(n2), static_cast<double>(m1),
                                      static_cast<double>(m2));

  ExperimentReport report;
  report.config = cfg;
  report.records = detail::run_trials(cfg, [&](count_t, Rng& rng) {
    const auto d = detail::draw_samples(cfg, rng);
    const auto family = HashFamily::random(k, rng());
    const double j_prime = estimate_sample_jaccard(build_sketch(d.p, family), build_sketch(d.q, family));
    TrialRecord r;
    r.x = d.x;
    r.extra["j_prime"] = j_prime;
    const auto sampled = estimate_binomial(d.x, n1, n2, cfg.design);
    r.extra["j_hat_sampling"] = sampled.j_hat;
    if (d.x > 0 && truth_j > 0) {
      const double limit = 2.0 / std::sqrt(static_cast<double>(d.x));
      r.extra["sampling_within_2_over_sqrt_x"] = std::abs(sampled.j_hat - truth_j) / truth_j <= limit ? 1.0 : 0.0;
    }
    if (!(correction_denominator(j_prime, ratio.r) > 0.0)) {
      r.valid = false;
      return r;
    }
    const double j_hat = correct_jaccard(j_prime, ratio).value;
    const auto err = jaccard_error_model(j_prime, ratio, static_cast<double>(m1), static_cast<double>(m2), k);
    r.estimate = j_hat;
    r.delta = err.delta_total;
    if (err.delta_total > 0.0) r.z = (j_hat - truth_j) / err.delta_total;
    if (d.x > 0 && truth_j > 0) {
      const double limit = 2.0 / std::sqrt(static_cast<double>(d.x));
      r.extra["sketch_within_2_over_sqrt_x"] = std::abs(j_hat - truth_j) / truth_j <= limit ? 1.0 : 0.0;
    }
    return r;
  });

  const auto zs = detail::collect(report.records, &TrialRecord::z, true);
  const count_t invalid = static_cast<count_t>(
      std::count_if(report.records.begin(), report.records.end(), [](const TrialRecord& r) { return !r.valid; }));
  report.counts["invalid"] = invalid;
  report.counts["z_defined"] = static_cast<count_t>(zs.size());
  if (!zs.empty()) {
    report.summary = summarize(zs, 0.0);
  } else {
    report.summary.truth = 0.0;
  }
  const auto j_hats = detail::collect(report.records, &TrialRecord::estimate, true);
  if (!j_hats.empty()) {
    const auto js = summarize(j_hats, truth_j);
    report.bound_values["j_hat_mean"] = js.mean;
    report.bound_values["j_hat_std"] = js.std;
    report.bound_values["j_hat_bias"] = js.bias;
    report.bound_values["j_hat_rmse"] = js.rmse;
    report.bound_values["mean_delta"] = summarize(detail::collect(report.records, &TrialRecord::delta, true), 0.0).mean;
  }
  report.bound_values["j_true"] = truth_j;
  report.bound_values["correction_ratio"] = ratio.r;
  auto fraction = [&](const std::string& key, bool valid_only) {
    double hits = 0, n = 0;
    for (const auto& r : report.records) {
      if (valid_only && !r.valid) continue;
      if (auto it = r.extra.find(key); it != r.extra.end()) {
        hits += it->second;
        n += 1;
      }
    }
    return n > 0 ? hits / n : 0.0;
  };
  report.bound_values["fraction_sampling_within_2_over_sqrt_x"] = fraction("sampling_within_2_over_sqrt_x", true);
  report.bound_values["fraction_sketch_within_2_over_sqrt_x"] = fraction("sketch_within_2_over_sqrt_x", true);
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case ExperimentMode::overlap_dist: return run_overlap_experiment(cfg);
    case ExperimentMode::containment: return run_containment_experiment(cfg);
    case ExperimentMode::batch_phi: return run_batch_phi_experiment(cfg);
    case ExperimentMode::jaccard_z: return run_jaccard_z_experiment(cfg);
  }
  throw domain_error("unknown experiment mode");
}

}  // namespace overlap_sketch

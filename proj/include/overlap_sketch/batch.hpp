#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "overlap_sketch/estimators.hpp"
#include "overlap_sketch/minhash.hpp"
#include "overlap_sketch/sketch_io.hpp"

namespace overlap_sketch {

// ---------------------------------------------------------------------------
// Stratified partitioning

inline std::size_t partition_index(std::uint64_t partition_seed, std::int64_t element, std::size_t batch_count) {
  return static_cast<std::size_t>(splitmix64(encode_element(element) ^ partition_seed) % batch_count);
}

// Element e goes to group hash(seed, e) mod batch_count. Groups are disjoint,
// cover the input, and keep the input order.
inline std::vector<std::vector<std::int64_t>> stratified_partition(std::span<const std::int64_t> elements,
                                                                   std::size_t batch_count,
                                                                   std::uint64_t partition_seed) {
  if (batch_count == 0) throw domain_error("stratified_partition: batch_count must be >= 1");
  std::vector<std::vector<std::int64_t>> groups(batch_count);
  for (auto& g : groups) g.reserve(elements.size() / batch_count + 1);
  for (std::int64_t e : elements) groups[partition_index(partition_seed, e, batch_count)].push_back(e);
  return groups;
}

struct BatchSketch {
  count_t size = 0;
  MinHashSketch sketch;
};

// Sketches of the disjoint batches of one sample, all from one hash family.
class BatchSketchSet {
 public:
  BatchSketchSet(std::vector<BatchSketch> batches, std::uint64_t partition_seed)
      : batches_(std::move(batches)), partition_seed_(partition_seed) {
    if (batches_.empty()) throw domain_error("batch sketch set needs at least one batch");
    for (const auto& b : batches_) {
      if (b.size < 0) throw domain_error("batch size must be non-negative");
      require_same_family(batches_.front().sketch, b.sketch);
    }
  }

  std::size_t batch_count() const noexcept { return batches_.size(); }
  std::uint64_t partition_seed() const noexcept { return partition_seed_; }
  const std::vector<BatchSketch>& batches() const noexcept { return batches_; }
  const BatchSketch& operator[](std::size_t i) const { return batches_[i]; }
  const HashFamilyPtr& family() const noexcept { return batches_.front().sketch.family(); }
  std::size_t k() const noexcept { return family()->k(); }

  count_t total_size() const noexcept {
    count_t total = 0;
    for (const auto& b : batches_) total += b.size;
    return total;
  }
  count_t max_batch_size() const noexcept {
    count_t m = 0;
    for (const auto& b : batches_) m = std::max(m, b.size);
    return m;
  }

  // Sketch of the whole sample, by position-wise minimum over batches.
  MinHashSketch merged() const {
    MinHashSketch out = batches_.front().sketch;
    for (std::size_t i = 1; i < batches_.size(); ++i) out = merge_sketches(out, batches_[i].sketch);
    return out;
  }

 private:
  std::vector<BatchSketch> batches_;
  std::uint64_t partition_seed_;
};

inline BatchSketchSet build_batch_sketches(std::span<const std::int64_t> elements, std::size_t batch_count,
                                           std::uint64_t partition_seed, const HashFamilyPtr& family) {
  const auto groups = stratified_partition(elements, batch_count, partition_seed);
  std::vector<BatchSketch> batches;
  batches.reserve(groups.size());
  for (const auto& g : groups) batches.push_back({static_cast<count_t>(g.size()), build_sketch(g, family)});
  return BatchSketchSet(std::move(batches), partition_seed);
}

// Container layout: u32 batch_count | u64 partition_seed | batch_count sketch
// records. Each record's source_size is the batch size.
inline std::vector<std::uint8_t> serialize_batch_set(const BatchSketchSet& set) {
  std::vector<std::uint8_t> out;
  detail::ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(set.batch_count()));
  w.u64(set.partition_seed());
  for (const auto& b : set.batches()) append_sketch(b.sketch, out);
  return out;
}

inline BatchSketchSet deserialize_batch_set(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, 0);
  const std::uint32_t count = r.u32("batch_count");
  if (count == 0) throw format_error("batch container with zero batches", 0);
  const std::uint64_t seed = r.u64("partition_seed");
  std::size_t offset = r.position();
  std::vector<BatchSketch> batches;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = offset;
    auto sketch = read_sketch(bytes, offset);
    if (!batches.empty() && !batches.front().sketch.family()->same_as(*sketch.family())) {
      throw format_error("batch sketches use different hash families", start);
    }
    const count_t size = sketch.source_size();
    batches.push_back({size, std::move(sketch)});
  }
  if (offset != bytes.size()) throw format_error("trailing bytes after batch container", offset);
  return BatchSketchSet(std::move(batches), seed);
}

// ---------------------------------------------------------------------------
// Batch-MinHash containment

// Overlap implied by a sketch Jaccard between batches of sizes m1i and m2j:
// x_hat = (m1i + m2j) J' / (1 + J').
inline double pair_xhat(double j_prime, double m1i, double m2j) {
  if (!(j_prime >= 0.0 && j_prime <= 1.0)) throw domain_error("pair_xhat: J' must lie in [0, 1]");
  return (m1i + m2j) * j_prime / (1.0 + j_prime);
}

// MSE[x_hat | x] < (m1i + m2j) x / k.
inline double pair_xhat_mse_bound(double x, double m1i, double m2j, std::size_t k) {
  return (m1i + m2j) * x / static_cast<double>(k);
}

inline double batch_pair_jaccard(const BatchSketch& p, const BatchSketch& q) {
  if (p.size == 0 || q.size == 0) {
    require_same_family(p.sketch, q.sketch);
    return 0.0;
  }
  return estimate_sample_jaccard(p.sketch, q.sketch);
}

struct BatchContainmentResult {
  double phi_hat = 0.0;
  double x_hat = 0.0;
  std::size_t rows = 0;  // a
  std::size_t cols = 0;  // b
  std::vector<double> j_prime;  // row-major a x b
  std::vector<double> pair_x_hat;  // row-major a x b

  double j_prime_at(std::size_t i, std::size_t j) const { return j_prime[i * cols + j]; }
  double x_hat_at(std::size_t i, std::size_t j) const { return pair_x_hat[i * cols + j]; }
};

// phi_hat = x_hat n2 / (m1 m2) with x_hat the sum of pair overlaps. m1, m2
// are the sample sizes |P|, |Q|.
inline BatchContainmentResult batch_containment(const BatchSketchSet& p, const BatchSketchSet& q, count_t n2, count_t m1,
                                                count_t m2) {
  if (!p.family()->same_as(*q.family())) throw family_mismatch_error("batch sets use different hash families");
  detail::require(n2 > 0 && m1 > 0 && m2 > 0, "batch_containment: sizes must be positive");
  BatchContainmentResult out;
  out.rows = p.batch_count();
  out.cols = q.batch_count();
  out.j_prime.resize(out.rows * out.cols);
  out.pair_x_hat.resize(out.rows * out.cols);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) {
      const double jp = batch_pair_jaccard(p[i], q[j]);
      const double xh = pair_xhat(jp, static_cast<double>(p[i].size), static_cast<double>(q[j].size));
      out.j_prime[i * out.cols + j] = jp;
      out.pair_x_hat[i * out.cols + j] = xh;
      out.x_hat += xh;
    }
  }
  out.phi_hat = out.x_hat * static_cast<double>(n2) / (static_cast<double>(m1) * static_cast<double>(m2));
  return out;
}

enum class BatchErrorMode { binomial, fallback, unequal };

struct BatchErrorInputs {
  double phi_hat = 0.0;
  std::size_t k = 1;
  double m1_max = 0;  // largest batch of P
  double m2_max = 0;  // largest batch of Q
  double sample1 = 0;  // M1 = |P|
  double sample2 = 0;  // M2 = |Q|
  double n2 = 0;
};

// RMSE bound on phi_hat. With M = (m1_max + m2_max)/2 (the common batch size
// when batches are equal):
//   binomial: sqrt(2 M n2 phi / (k M1 M2)), phi = clamp(phi_hat, 0, 1)
//   fallback: (n2/M2) sqrt(2 M / (k M1))      ( = (n2/M2) sqrt(2/(k a)) when M1 = a M )
//   unequal:  (n2/M2) sqrt((m1_max + m2_max) / (k M1))
inline double batch_containment_error(const BatchErrorInputs& in, BatchErrorMode mode) {
  detail::require(in.k > 0 && in.sample1 > 0 && in.sample2 > 0 && in.n2 > 0, "batch_containment_error: bad sizes");
  const double k = static_cast<double>(in.k);
  const double batch = 0.5 * (in.m1_max + in.m2_max);
  switch (mode) {
    case BatchErrorMode::binomial: {
      const double phi = std::clamp(in.phi_hat, 0.0, 1.0);
      return std::sqrt(2.0 * batch * in.n2 * phi / (k * in.sample1 * in.sample2));
    }
    case BatchErrorMode::fallback:
      return in.n2 / in.sample2 * std::sqrt(2.0 * batch / (k * in.sample1));
    case BatchErrorMode::unequal:
      return in.n2 / in.sample2 * std::sqrt((in.m1_max + in.m2_max) / (k * in.sample1));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Jaccard correction for sketches of samples

// r = (1/n1 + 1/n2) / (1/m1 + 1/m2); r = 1 when nothing was sampled away.
struct CorrectionRatio {
  double r = 1.0;
};

inline CorrectionRatio correction_ratio(double n1, double n2, double m1, double m2) {
  detail::require(n1 > 0 && n2 > 0 && m1 > 0 && m2 > 0, "correction_ratio: sizes must be positive");
  return {(1.0 / n1 + 1.0 / n2) / (1.0 / m1 + 1.0 / m2)};
}

// r - J'(1 - r), the denominator shared by the correction and its error terms.
inline double correction_denominator(double j_prime, double r) { return r - j_prime * (1.0 - r); }

// J_hat = J' / (r - J'(1 - r)), clamped to [0, 1]. A non-positive denominator
// means the implied intersection reaches |A ∪ B|, which no estimate can.
inline ClampedValue correct_jaccard(double j_prime, CorrectionRatio ratio) {
  if (!(j_prime >= 0.0 && j_prime <= 1.0)) throw domain_error("correct_jaccard: J' must lie in [0, 1]");
  const double denom = correction_denominator(j_prime, ratio.r);
  if (!(denom > 0.0)) throw invalid_pair_error("correct_jaccard: non-positive denominator r - J'(1-r)");
  const double raw = j_prime / denom;
  const double clamped = std::clamp(raw, 0.0, 1.0);
  return {clamped, clamped != raw};
}

struct JaccardErrorModel {
  double delta_s = 0.0;  // sampling
  double delta_m = 0.0;  // MinHash, propagated through the correction
  double delta_total = 0.0;
};

// delta_s = sqrt(3 / ((m1 + m2) D^2)),  D = r - J'(1 - r)
// delta_m = sqrt(J'(1-J')/k) (1 - J'(1 - r)) / D^2
inline JaccardErrorModel jaccard_error_model(double j_prime, CorrectionRatio ratio, double m1, double m2, std::size_t k) {
  if (!(j_prime >= 0.0 && j_prime <= 1.0)) throw domain_error("jaccard_error_model: J' must lie in [0, 1]");
  detail::require(k > 0 && m1 > 0 && m2 > 0, "jaccard_error_model: sizes must be positive");
  const double r = ratio.r;
  const double denom = correction_denominator(j_prime, r);
  if (!(denom > 0.0)) throw invalid_pair_error("jaccard_error_model: non-positive denominator r - J'(1-r)");
  JaccardErrorModel e;
  e.delta_s = std::sqrt(3.0 / ((m1 + m2) * denom * denom));
  const double delta_minhash = std::sqrt(j_prime * (1.0 - j_prime) / static_cast<double>(k));
  e.delta_m = delta_minhash * (1.0 - j_prime * (1.0 - r)) / (denom * denom);
  e.delta_total = std::hypot(e.delta_s, e.delta_m);
  return e;
}

// ---------------------------------------------------------------------------
// Removal-based batched similarity

// One batch pair as seen by the removal loop.
struct PairTerm {
  std::size_t index = 0;  // row-major pair index i * b + j
  double j_prime = 0.0;
  double r = 1.0;
  double size_sum = 0.0;  // m1i + m2j, i.e. 2M for equal batches
};

struct RemovalScore {
  double c_m = 0.0;
  double c_s = 0.0;
  double c = 0.0;
};

struct RemovalState {
  std::vector<std::size_t> v;  // valid pair indices, ascending
  double cal_m_sq = 0.0;
  double cal_s_sq = 0.0;
  std::map<std::size_t, RemovalScore> c_scores;
};

// C_m = (1/k) (1 - J'(1-r))^2 / D^4 * J'(1 - J')
// C_s = 3 / (m1i + m2j) / D^2          ( = 3/(2M) D^-2 )
inline RemovalScore removal_score(const PairTerm& t, std::size_t k) {
  const double d = correction_denominator(t.j_prime, t.r);
  if (!(d > 0.0)) throw invalid_pair_error("removal score requested for an invalid pair");
  const double lift = 1.0 - t.j_prime * (1.0 - t.r);
  const double d2 = d * d;
  RemovalScore s;
  s.c_m = lift * lift / (d2 * d2) * t.j_prime * (1.0 - t.j_prime) / static_cast<double>(k);
  s.c_s = 3.0 / (t.size_sum * d2);
  s.c = s.c_m + s.c_s;
  return s;
}

// Scores for every pair in V and the aggregates
//   M^2 = sum C_m / |V|^2,   S^2 = sum C_s / |V|^2.
inline RemovalState removal_scores(std::span<const PairTerm> v, std::size_t k) {
  if (v.empty()) throw domain_error("removal_scores: V is empty");
  RemovalState state;
  double sum_m = 0.0, sum_s = 0.0;
  for (const auto& t : v) {
    const auto s = removal_score(t, k);
    state.v.push_back(t.index);
    state.c_scores[t.index] = s;
    sum_m += s.c_m;
    sum_s += s.c_s;
  }
  std::sort(state.v.begin(), state.v.end());
  const double n = static_cast<double>(v.size());
  state.cal_m_sq = sum_m / (n * n);
  state.cal_s_sq = sum_s / (n * n);
  return state;
}

// Uniform-size convenience: every pair has the same r and batch size M.
inline RemovalState removal_scores(std::span<const std::size_t> v, std::span<const double> j_primes, double r,
                                   double batch_size, std::size_t k) {
  std::vector<PairTerm> terms;
  terms.reserve(v.size());
  for (std::size_t idx : v) terms.push_back({idx, j_primes[idx], r, 2.0 * batch_size});
  return removal_scores(terms, k);
}

// Final fallback test against the full-merge MinHash error (1/k) J_fm (1 - J_fm).
enum class FallbackRule {
  batch_error_worse,    // fall back when M^2 + S^2 > full-merge error
  pseudocode_literal,   // fall back when M^2 + S^2 < full-merge error
};

struct BatchSimilarityOptions {
  FallbackRule fallback = FallbackRule::batch_error_worse;
};

struct PairEstimate {
  double j_prime = 0.0;
  double x_hat = 0.0;
  double i_hat = 0.0;
  double j_hat = 0.0;  // corrected to full-set scale, 0 when invalid
  bool valid = false;
};

struct BatchSimilarityResult {
  double j_hat = 0.0;
  double j_fm = 0.0;           // corrected full-merge estimate
  double j_prime_fm = 0.0;     // sample-level Jaccard of the merged sketches
  bool used_full_merge = false;
  std::string reason;          // why the final estimate was chosen
  std::vector<PairEstimate> pairs;  // row-major a x b
  std::vector<std::size_t> removed;  // in removal order
  RemovalState state;          // at loop exit; empty V when none survived
};

namespace detail {

inline PairEstimate make_pair_estimate(double j_prime, double m1i, double m2j, double n1, double n2) {
  PairEstimate pe;
  pe.j_prime = j_prime;
  if (m1i <= 0 || m2j <= 0) return pe;
  pe.x_hat = pair_xhat(j_prime, m1i, m2j);
  pe.i_hat = pe.x_hat * n1 * n2 / (m1i * m2j);
  const auto ratio = correction_ratio(n1, n2, m1i, m2j);
  pe.valid = pe.i_hat <= n1 && correction_denominator(j_prime, ratio.r) > 0.0;
  if (pe.valid) pe.j_hat = correct_jaccard(j_prime, ratio).value;
  return pe;
}

}  // namespace detail

// Batched Jaccard estimate with removal of high-error pairs:
//  1. J'_{ij} for every batch pair, and J_fm from the merged sketches;
//  2. V = pairs with I_hat(J'_{ij}) <= n1;
//  3. while |V| > 1, drop the pair with the largest C while C > 2|V|(M^2 + S^2);
//  4. J_hat = mean of corrected J_hat_{ij} over V, unless |V| <= 1 or the
//     fallback rule selects J_fm.
// M^2 and S^2 are recomputed exactly after each removal. Ties in C go to the
// lowest pair index.
inline BatchSimilarityResult batch_similarity(const BatchSketchSet& p, const BatchSketchSet& q, count_t n1, count_t n2,
                                              BatchSimilarityOptions options = {}) {
  if (!p.family()->same_as(*q.family())) throw family_mismatch_error("batch sets use different hash families");
  detail::require(n1 > 0 && n2 > 0, "batch_similarity: set sizes must be positive");
  const std::size_t k = p.k();
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
  const std::size_t a = p.batch_count(), b = q.batch_count();

  BatchSimilarityResult out;
  out.pairs.resize(a * b);
  std::vector<PairTerm> v;
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double m1i = static_cast<double>(p[i].size), m2j = static_cast<double>(q[j].size);
      const double jp = batch_pair_jaccard(p[i], q[j]);
      auto& pe = out.pairs[i * b + j];
      pe = detail::make_pair_estimate(jp, m1i, m2j, dn1, dn2);
      if (pe.valid) v.push_back({i * b + j, jp, correction_ratio(dn1, dn2, m1i, m2j).r, m1i + m2j});
    }
  }

  out.j_prime_fm = estimate_sample_jaccard(p.merged(), q.merged());
  const auto full_ratio = correction_ratio(dn1, dn2, static_cast<double>(p.total_size()),
                                           static_cast<double>(q.total_size()));
  if (correction_denominator(out.j_prime_fm, full_ratio.r) > 0.0) {
    out.j_fm = correct_jaccard(out.j_prime_fm, full_ratio).value;
  } else {
    out.j_fm = 1.0;
  }

  bool have_batch_estimate = false;
  while (v.size() > 1) {
    out.state = removal_scores(v, k);
    std::size_t worst = 0;
    for (std::size_t t = 1; t < v.size(); ++t) {
      if (out.state.c_scores.at(v[t].index).c > out.state.c_scores.at(v[worst].index).c) worst = t;
    }
    const double c_max = out.state.c_scores.at(v[worst].index).c;
    const double threshold = 2.0 * static_cast<double>(v.size()) * (out.state.cal_m_sq + out.state.cal_s_sq);
    if (c_max > threshold) {
      out.removed.push_back(v[worst].index);
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(worst));
      continue;
    }
    double acc = 0.0;
    for (const auto& t : v) acc += out.pairs[t.index].j_hat;
    out.j_hat = acc / static_cast<double>(v.size());
    have_batch_estimate = true;
    break;
  }
  if (!have_batch_estimate) {
    out.state = v.empty() ? RemovalState{} : removal_scores(v, k);
    out.j_hat = out.j_fm;
    out.used_full_merge = true;
    out.reason = v.empty() ? "no valid pairs" : "single valid pair";
    return out;
  }

  const double batch_error = out.state.cal_m_sq + out.state.cal_s_sq;
  const double full_error = out.j_fm * (1.0 - out.j_fm) / static_cast<double>(k);
  const bool fall_back = options.fallback == FallbackRule::batch_error_worse ? batch_error > full_error
                                                                             : batch_error < full_error;
  if (fall_back) {
    out.j_hat = out.j_fm;
    out.used_full_merge = true;
    out.reason = options.fallback == FallbackRule::batch_error_worse ? "batch error exceeds full-merge error"
                                                                     : "pseudocode rule selected full merge";
  } else {
    out.reason = "batch estimate";
  }
  return out;
}

}  // namespace overlap_sketch

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "overlap_sketch/errors.hpp"
#include "overlap_sketch/hashing.hpp"
#include "overlap_sketch/types.hpp"

namespace overlap_sketch {

inline constexpr std::uint64_t sketch_sentinel = std::numeric_limits<std::uint64_t>::max();

// k seeded hash functions h_t(e) = mix64(e ^ seed_t).
class HashFamily {
 public:
  explicit HashFamily(std::vector<std::uint64_t> seeds) : seeds_(std::move(seeds)) {
    if (seeds_.empty()) throw domain_error("hash family needs at least one function");
    std::unordered_set<std::uint64_t> seen(seeds_.begin(), seeds_.end());
    if (seen.size() != seeds_.size()) throw domain_error("hash family seeds must be pairwise distinct");
    digest_ = splitmix64(seeds_.size());
    for (std::uint64_t s : seeds_) digest_ = splitmix64(digest_ ^ mix64(s));
  }

  // k seeds drawn from the full 64-bit range by a generator seeded with `master`.
  static std::shared_ptr<const HashFamily> random(std::size_t k, std::uint64_t master) {
    std::mt19937_64 gen(master);
    std::vector<std::uint64_t> seeds;
    seeds.reserve(k);
    std::unordered_set<std::uint64_t> seen;
    while (seeds.size() < k) {
      const std::uint64_t s = gen();
      if (seen.insert(s).second) seeds.push_back(s);
    }
    return std::make_shared<const HashFamily>(std::move(seeds));
  }

  std::size_t k() const noexcept { return seeds_.size(); }
  const std::vector<std::uint64_t>& seeds() const noexcept { return seeds_; }
  std::uint64_t digest() const noexcept { return digest_; }

  std::uint64_t hash(std::size_t t, std::uint64_t encoded) const noexcept { return seeded_hash(seeds_[t], encoded); }

  // Same k and same seeds in the same order. The digest is only a fast path.
  bool same_as(const HashFamily& other) const noexcept {
    return digest_ == other.digest_ && seeds_ == other.seeds_;
  }

 private:
  std::vector<std::uint64_t> seeds_;
  std::uint64_t digest_ = 0;
};

using HashFamilyPtr = std::shared_ptr<const HashFamily>;

// Position-wise minima of k hash functions over a set. An empty source leaves
// every position at the sentinel.
class MinHashSketch {
 public:
  MinHashSketch(HashFamilyPtr family, std::vector<std::uint64_t> minima, count_t source_size)
      : family_(std::move(family)), minima_(std::move(minima)), source_size_(source_size) {
    if (!family_) throw domain_error("sketch requires a hash family");
    if (minima_.size() != family_->k()) throw domain_error("sketch minima length differs from family k");
    if (source_size_ < 0) throw domain_error("sketch source size must be non-negative");
  }

  static MinHashSketch empty(HashFamilyPtr family) {
    const std::size_t k = family->k();
    return MinHashSketch(std::move(family), std::vector<std::uint64_t>(k, sketch_sentinel), 0);
  }

  std::size_t k() const noexcept { return minima_.size(); }
  const HashFamilyPtr& family() const noexcept { return family_; }
  std::uint64_t family_id() const noexcept { return family_->digest(); }
  const std::vector<std::uint64_t>& minima() const noexcept { return minima_; }

  // Distinct elements sketched. After a merge this is the sum of the inputs,
  // which is exact only when their sources were disjoint.
  count_t source_size() const noexcept { return source_size_; }

  bool is_empty() const noexcept {
    return std::all_of(minima_.begin(), minima_.end(), [](std::uint64_t v) { return v == sketch_sentinel; });
  }

  friend bool operator==(const MinHashSketch& a, const MinHashSketch& b) {
    return a.family_->same_as(*b.family_) && a.minima_ == b.minima_ && a.source_size_ == b.source_size_;
  }

 private:
  HashFamilyPtr family_;
  std::vector<std::uint64_t> minima_;
  count_t source_size_;
};

// Folds already-encoded elements into running minima.
inline void accumulate_minima(const HashFamily& family, std::span<const std::uint64_t> encoded,
                              std::span<std::uint64_t> minima) {
  const auto& seeds = family.seeds();
  const std::size_t k = seeds.size();
  for (std::uint64_t e : encoded) {
    for (std::size_t t = 0; t < k; ++t) {
      const std::uint64_t h = seeded_hash(seeds[t], e);
      minima[t] = h < minima[t] ? h : minima[t];
    }
  }
}

// Sketch of distinct encoded elements. Duplicates leave the minima unchanged
// but are counted in source_size, so callers deduplicate first.
inline MinHashSketch build_sketch_encoded(std::span<const std::uint64_t> encoded, HashFamilyPtr family) {
  std::vector<std::uint64_t> minima(family->k(), sketch_sentinel);
  accumulate_minima(*family, encoded, minima);
  return MinHashSketch(std::move(family), std::move(minima), static_cast<count_t>(encoded.size()));
}

inline MinHashSketch build_sketch(std::span<const std::int64_t> elements, HashFamilyPtr family) {
  std::vector<std::uint64_t> minima(family->k(), sketch_sentinel);
  const auto& seeds = family->seeds();
  const std::size_t k = seeds.size();
  for (std::int64_t raw : elements) {
    const std::uint64_t e = encode_element(raw);
    for (std::size_t t = 0; t < k; ++t) {
      const std::uint64_t h = seeded_hash(seeds[t], e);
      minima[t] = h < minima[t] ? h : minima[t];
    }
  }
  return MinHashSketch(std::move(family), std::move(minima), static_cast<count_t>(elements.size()));
}

inline void require_same_family(const MinHashSketch& a, const MinHashSketch& b) {
  if (!a.family()->same_as(*b.family())) throw family_mismatch_error("sketches come from different hash families");
}

// Position-wise minimum. source_size adds up (nominal for overlapping sources).
inline MinHashSketch merge_sketches(const MinHashSketch& a, const MinHashSketch& b) {
  require_same_family(a, b);
  std::vector<std::uint64_t> minima(a.k());
  for (std::size_t t = 0; t < a.k(); ++t) minima[t] = std::min(a.minima()[t], b.minima()[t]);
  return MinHashSketch(a.family(), std::move(minima), a.source_size() + b.source_size());
}

// Fraction of positions where both sketches hold the same minimum.
inline double estimate_sample_jaccard(const MinHashSketch& a, const MinHashSketch& b) {
  require_same_family(a, b);
  if (a.is_empty() || b.is_empty()) throw empty_sketch_error("cannot estimate Jaccard from an empty sketch");
  std::size_t matches = 0;
  for (std::size_t t = 0; t < a.k(); ++t) matches += a.minima()[t] == b.minima()[t] ? 1 : 0;
  return static_cast<double>(matches) / static_cast<double>(a.k());
}

}  // namespace overlap_sketch

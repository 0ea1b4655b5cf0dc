#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "overlap_sketch/planner.hpp"

using namespace overlap_sketch;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("posterior summary at x = 0", "[posterior]") {
  const auto s = posterior_summary(0, 1000, 2000, SampleDesign(10, 20));
  CHECK(s.alpha == 1.0);
  CHECK(s.beta == 201.0);
  CHECK(s.mse_bound_i == 0.0);
  CHECK(s.mse_bound_phi1 == 0.0);
}

TEST_CASE("posterior summary at the reference parameters", "[posterior][regression]") {
  const auto s = posterior_summary(300, 1'000'000, 2'000'000, SampleDesign(30'000, 40'000));
  // Exact rational evaluation of both bounds.
  const oracle::rational nn(oracle::big_int(2'000'000'000'000LL));
  const oracle::rational mm(oracle::big_int(1'200'000'000LL));
  const double tight = oracle::to_double(nn * nn * 300 * (mm - 300) / (mm * mm * (mm + 1)));
  const double loose = oracle::to_double(nn * nn * 300 / (mm * mm));
  CHECK_THAT(s.mse_bound_i, WithinRel(tight, 1e-14));
  CHECK_THAT(s.mse_bound_i_loose, WithinRel(loose, 1e-14));
  CHECK_THAT(s.mse_bound_i, WithinRel(833333124.3055557, 1e-14));
  CHECK(s.mse_bound_i <= s.mse_bound_i_loose);
  CHECK_THAT(s.mse_bound_phi1, WithinRel(300.0 * 4e12 / 1.44e18, 1e-14));
  CHECK_THAT(s.mse_bound_phi2, WithinRel(300.0 * 1e12 / 1.44e18, 1e-14));
  CHECK_THAT(s.beta_variance, WithinRel(beta_variance(301.0, 1.2e9 - 299.0), 1e-15));
}

TEST_CASE("posterior bound is monotone and below the loose chain", "[posterior]") {
  const SampleDesign d(40, 50);
  double prev = -1.0;
  for (count_t x = 0; x <= 1000; ++x) {
    const auto s = posterior_summary(x, 300, 400, d);
    CHECK(s.mse_bound_i <= s.mse_bound_i_loose * (1 + 1e-15));
    CHECK(s.mse_bound_i >= prev);
    prev = s.mse_bound_i;
    CHECK(s.alpha >= 1.0);
    CHECK(s.beta >= 1.0);
  }
  CHECK_THROWS_AS(posterior_summary(2001, 300, 400, d), domain_error);
}

TEST_CASE("valid-case bound holds on the valid range", "[posterior]") {
  const count_t n1 = 1'000'000, n2 = 2'000'000;
  const SampleDesign d(30'000, 40'000);
  const double mm = 1.2e9;
  for (count_t x = 0; x < 600; ++x) {
    CHECK(posterior_summary(x, n1, n2, d).mse_bound_phi1 < static_cast<double>(n2) / mm);
  }
}

TEST_CASE("beta variance in the symmetric case", "[posterior]") {
  for (double a : {1.0, 2.5, 10.0, 1e4}) CHECK_THAT(beta_variance(a, a), WithinRel(1.0 / (4.0 * (2.0 * a + 1.0)), 1e-14));
}

TEST_CASE("validity condition values", "[validity]") {
  const double n1 = 1e6;
  const auto v = validity_condition(0.9, 1e-3, n1);
  CHECK_THAT(v.chernoff * n1, WithinRel(760.0, 0.01));
  CHECK_THAT(v.chernoff * n1, WithinRel(759.853080688035, 1e-12));
  CHECK(v.simplified >= v.chernoff);
  CHECK_THAT(validity_condition(0.0, std::exp(-1.0), 50.0).chernoff, WithinRel(2.0 / 50.0, 1e-15));
  const auto realistic = validity_condition(0.1, 1e-3, 1e8);
  CHECK_THAT(std::sqrt(realistic.chernoff), WithinAbs(0.000403, 0.0000005));
  CHECK_THROWS_AS(validity_condition(1.0, 1e-3, 10.0), domain_error);
}

TEST_CASE("containment plan in the accuracy-bound regime", "[plan]") {
  const auto p = plan_containment(AccuracySpec(0.01, 1e-3), 0.1, 100'000'000, 500'000'000, PlanMode::valid_case);
  CHECK_THAT(p.alpha1, WithinRel(0.01, 1e-12));
  CHECK_THAT(p.alpha2, WithinRel(0.01, 1e-12));
  CHECK(p.binding == PlanBinding::accuracy);
  CHECK(p.m1 == 1'000'000);
  CHECK(p.m2 == 5'000'000);
}

TEST_CASE("containment plan regression values", "[plan][regression]") {
  const auto p = plan_containment(AccuracySpec(0.05, 1e-3), 0.1, 100'000'000, 500'000'000, PlanMode::valid_case);
  CHECK_THAT(p.condition_values.at("accuracy"), WithinRel(4e-6, 1e-12));
  CHECK_THAT(p.condition_values.at("validity_simplified"), WithinRel(1.7056185874029968e-07, 1e-12));
  CHECK_THAT(p.condition_values.at("validity_chernoff"), WithinRel(1.620337658032847e-07, 1e-12));
  CHECK_THAT(p.alpha1, WithinRel(0.002, 1e-12));
  CHECK(p.m1 == 200'000);
  CHECK(p.m2 == 1'000'000);
  CHECK(p.binding == PlanBinding::accuracy);
}

TEST_CASE("validity binds once accuracy is vacuous", "[plan]") {
  const auto p = plan_containment(AccuracySpec(1e6, 1e-3), 0.5, 10'000, 20'000, PlanMode::valid_case);
  CHECK(p.binding == PlanBinding::validity);
  CHECK_THAT(p.alpha1 * p.alpha2, WithinRel(p.condition_values.at("validity_simplified"), 1e-12));
}

TEST_CASE("plan products cover every listed condition and survive rounding", "[plan][property]") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 500; ++t) {
    const double delta = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    const double eps = std::uniform_real_distribution<double>(1e-6, 0.5)(rng);
    const double phi = std::uniform_real_distribution<double>(0.0, 0.95)(rng);
    const count_t n1 = std::uniform_int_distribution<count_t>(10'000, 100'000'000)(rng);
    const count_t n2 = std::uniform_int_distribution<count_t>(n1, 2 * n1)(rng);
    for (auto mode : {PlanMode::valid_case, PlanMode::posterior_only}) {
      SamplingPlan p;
      try {
        p = plan_containment(AccuracySpec(delta, eps), phi, n1, n2, mode);
      } catch (const infeasible_plan_error&) {
        continue;
      }
      for (const auto& [name, need] : p.condition_values) {
        INFO(name);
        CHECK(p.alpha1 * p.alpha2 >= need * (1 - 1e-12));
      }
      CHECK(static_cast<double>(p.m1) >= p.alpha1 * static_cast<double>(n1) * (1 - 1e-12));
      CHECK(static_cast<double>(p.m2) >= p.alpha2 * static_cast<double>(n2) * (1 - 1e-12));
    }
  }
}

TEST_CASE("posterior-only plan uses the cube root", "[plan]") {
  const auto p = plan_containment(AccuracySpec(0.01, 1e-3), 0.1, 100'000'000, 500'000'000, PlanMode::posterior_only);
  CHECK_THAT(p.alpha1, WithinRel(std::cbrt(1e-4), 1e-12));
  CHECK_THAT(p.alpha1 * p.alpha2 * p.alpha2, WithinRel(1e-4, 1e-12));
  CHECK(p.condition_values.count("validity_chernoff") == 0);
}

TEST_CASE("asymmetric plans solve alpha2 from a fixed alpha1", "[plan]") {
  const auto p =
      plan_containment(AccuracySpec(0.01, 1e-3), 0.1, 100'000'000, 500'000'000, PlanMode::valid_case, 0.05);
  CHECK(p.alpha1 == 0.05);
  CHECK_THAT(p.alpha2, WithinRel(1e-4 / 0.05, 1e-12));
}

TEST_CASE("infeasible plans raise instead of clamping", "[plan]") {
  CHECK_THROWS_AS(plan_containment(AccuracySpec(0.01, 1e-3), 0.1, 100, 200, PlanMode::valid_case),
                  infeasible_plan_error);
  CHECK_THROWS_AS(plan_containment(AccuracySpec(0.01, 1e-3), 1.0, 100, 200, PlanMode::valid_case), domain_error);
}

TEST_CASE("jaccard condition", "[jaccard]") {
  const double delta = 0.1;
  const double c = 4.0 / (delta * delta);
  CHECK_THAT(jaccard_condition(delta, 0.0, 5e5).exact, WithinRel(c / 5e5, 1e-15));
  const auto cond = plan_jaccard(AccuracySpec(delta, 1e-3), 5e5);
  const double l = std::log(1000.0);
  CHECK_THAT(cond.exact, WithinRel((c + l + std::sqrt(l * (2 * c + l))) / 5e5, 1e-14));
  CHECK(cond.exact > (c + l) / 5e5);
  CHECK(cond.lower_root < c / 5e5);
  CHECK_THAT(cond.simplified, WithinRel(c / 5e5, 1e-15));
  // mu = I * exact solves (mu - c)^2 / (2 mu) = ln(1/eps).
  const double mu = cond.exact * 5e5;
  CHECK_THAT((mu - c) * (mu - c) / (2 * mu), WithinRel(l, 1e-12));
  double prev = 1e300;
  for (double i = 1; i < 1e7; i *= 3.7) {
    const double v = plan_jaccard(AccuracySpec(delta, 1e-3), i).exact;
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(plan_jaccard(AccuracySpec(delta, 1e-3), 0.5), domain_error);
}

TEST_CASE("jaccard plan keeps x >= c with probability 1 - eps", "[jaccard][property]") {
  // x ~ Bin(m1 m2, I / (n1 n2)) with alpha1 alpha2 at the returned value.
  const double delta = 0.2, eps = 0.01;
  const count_t n1 = 100'000, n2 = 100'000;
  const double i = 50'000;
  const auto plan = plan_jaccard_rates(AccuracySpec(delta, eps), i, n1, n2);
  std::binomial_distribution<long long> draw(plan.m1 * plan.m2, i / (static_cast<double>(n1) * n2));
  std::mt19937_64 rng(17);
  const double c = 4.0 / (delta * delta);
  constexpr int trials = 20'000;
  int below = 0;
  for (int t = 0; t < trials; ++t) below += static_cast<double>(draw(rng)) < c ? 1 : 0;
  const double freq = static_cast<double>(below) / trials;
  CHECK(freq <= eps + 3.0 * std::sqrt(eps / trials));
}

TEST_CASE("runtime model", "[cost]") {
  const RuntimeInputs in{1e6, 1e5, 100, 10, 200, 1000};
  // Only the in-memory unit cost k N1 / M of the round trips remains.
  const auto zero = runtime_estimate(CostModel{0, 0, 0, 0, 0}, in);
  CHECK(zero.t1 == 200.0 * 1e6 / 1000.0);
  CHECK(zero.t2 == 0.0);
  CHECK(zero.t1_batched == 0.0);
  CHECK(zero.t2_batched == 0.0);

  // H = 1 only: hashing plus the per-round-trip unit cost k N1 / M.
  const auto h = runtime_estimate(CostModel{0, 1, 0, 0, 0}, in);
  CHECK(h.t1 == 200.0 * 1e6 + 200.0 * 1e6 / 1000.0);
  CHECK(h.t1_batched == (200.0 + 100.0) * 1e5);

  const auto r = runtime_estimate(CostModel{100, 5, 1, 50, 50}, in);
  CHECK(r.t1 == 1'020'200'200.0);
  CHECK(r.t2 == 10'400.0);
  CHECK(r.t1_batched == 152'020'000.0);
  CHECK(r.t2_batched == 10'022'000.0);

  CHECK_THROWS_AS(runtime_estimate(CostModel{-1, 0, 0, 0, 0}, in), domain_error);
  CHECK_THROWS_AS(runtime_estimate(CostModel{}, RuntimeInputs{0, 1, 1, 1, 1, 1}), domain_error);
}

#include "mecrl/model.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <limits>

#include "instances.hpp"
#include "mecrl/rng.hpp"

using namespace mecrl;
using testinst::Closed;
using testinst::closed_form_space;

static constexpr double kInf = std::numeric_limits<double>::infinity();

TEST_CASE("pattern probabilities: log form agrees with the naive product") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.next_below(20);
    std::vector<double> probs(k);
    for (auto& p : probs) p = 0.05 + 0.9 * rng.next_unit();
    const PatternBits bits = rng.next() & ((PatternBits{1} << k) - 1);

    double naive = 1.0;
    for (std::size_t f = 0; f < k; ++f) {
      naive *= ((bits >> f) & 1u) ? probs[f] : 1.0 - probs[f];
    }
    CHECK(std::exp(log_pattern_prob(bits, probs)) ==
          Catch::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("simple probability and ratio values") {
  LinkageParams p;
  p.theta = {0.9, 0.8};
  p.xi = {0.1, 0.2};
  p.n_m = 1;
  p.n = 4;
  CHECK(m_prob(0b11, p) == Catch::Approx(0.72).epsilon(1e-12));
  CHECK(m_prob(0b01, p) == Catch::Approx(0.18).epsilon(1e-12));
  CHECK(u_prob(0b00, p) == Catch::Approx(0.72).epsilon(1e-12));
  CHECK(u_prob(0b11, p) == Catch::Approx(0.02).epsilon(1e-12));
  CHECK(ratio(0b11, p) == Catch::Approx(36.0).epsilon(1e-12));
}

TEST_CASE("ratio boundary cases") {
  LinkageParams p;
  p.theta = {1.0};
  p.xi = {0.0};
  p.n_m = 20;
  p.n = 400;
  CHECK(ratio(0b1, p) == kInf);  // u = 0, m > 0
  CHECK(ratio(0b0, p) == 0.0);   // m = 0

  LinkageParams q;
  q.theta = {0.5};
  q.xi = {0.5};
  q.n_m = 3;
  q.n = 9;
  CHECK(ratio(0b1, q) == 1.0);
  CHECK(ratio(0b0, q) == 1.0);
}

TEST_CASE("match posterior formula and edges") {
  // g = n_m r / (n_m (r-1) + n)
  CHECK(match_posterior_from_ratio(7.0, 1.0, 4.0) ==
        Catch::Approx(0.7).epsilon(1e-12));
  CHECK(match_posterior_from_ratio(kInf, 5.0, 100.0) == 1.0);
  CHECK(match_posterior_from_ratio(kInf, 0.0, 100.0) == 0.0);
  CHECK(match_posterior_from_ratio(0.0, 5.0, 100.0) == 0.0);
  CHECK(match_posterior_from_ratio(3.0, 0.0, 100.0) == 0.0);
  // huge finite r clamps to 1
  CHECK(match_posterior_from_ratio(1e308, 1.0, 100.0) == 1.0);
}

TEST_CASE("posterior sum reduces to n_m when theta equals xi") {
  auto space = closed_form_space(Closed::kMiss4);
  LinkageParams p;
  p.theta = {0.37};
  p.xi = {0.37};
  p.n = 400;
  for (double nm : {0.0, 1.0, 7.5, 20.0, 19.999}) {
    p.n_m = nm;
    CHECK(expected_matches(space, p) == Catch::Approx(nm).epsilon(1e-9));
  }
}

TEST_CASE("closed-form posterior sums on the 20x20 instances") {
  SECTION("perfect keys: infinite ratio drives the diagonal to 1") {
    auto space = closed_form_space(Closed::kPerfect);
    LinkageParams p{{1.0}, {0.0}, 20.0, 400.0};
    CHECK(match_posterior(0b1, p) == 1.0);
    CHECK(match_posterior(0b0, p) == 0.0);
    CHECK(expected_matches(space, p) == Catch::Approx(20.0).margin(1e-9));
  }
  SECTION("four damaged matches: posterior mass returns via gamma = 0") {
    auto space = closed_form_space(Closed::kMiss4);
    LinkageParams p{{0.8}, {0.0}, 20.0, 400.0};
    CHECK(match_posterior(0b1, p) == 1.0);
    CHECK(match_posterior(0b0, p) == Catch::Approx(4.0 / 384.0).margin(1e-12));
    CHECK(expected_matches(space, p) == Catch::Approx(20.0).margin(1e-9));
  }
  SECTION("four stray agreements: finite ratio 95, posterior 5/6") {
    auto space = closed_form_space(Closed::kStray4);
    LinkageParams p{{1.0}, {1.0 / 95.0}, 20.0, 400.0};
    CHECK(ratio(0b1, p) == Catch::Approx(95.0).epsilon(1e-12));
    CHECK(match_posterior(0b1, p) == Catch::Approx(5.0 / 6.0).margin(1e-12));
    CHECK(expected_matches(space, p) == Catch::Approx(20.0).margin(1e-9));
  }
}

TEST_CASE("fixed point iteration") {
  SECTION("perfect keys converge in one substitution from any start") {
    auto space = closed_form_space(Closed::kPerfect);
    for (double init : {0.0, 5.0, 20.0, 400.0}) {
      auto fp = solve_fixed_point(space, {1.0}, {0.0}, init);
      CHECK(fp.converged);
      CHECK(fp.n_m == Catch::Approx(20.0).margin(1e-9));
      CHECK(fp.iterations <= 2);
    }
  }
  SECTION("starting at the fixed point stays there") {
    auto space = closed_form_space(Closed::kMiss4);
    auto fp = solve_fixed_point(space, {0.8}, {0.0}, 20.0);
    CHECK(fp.converged);
    CHECK(fp.n_m == Catch::Approx(20.0).margin(1e-9));
  }
  SECTION("cold start reaches the same point at solver tolerance") {
    auto space = closed_form_space(Closed::kStray4);
    auto fp = solve_fixed_point(space, {1.0}, {1.0 / 95.0}, 1.0);
    CHECK(fp.converged);
    CHECK(fp.n_m == Catch::Approx(20.0).margin(1e-4));
  }
  SECTION("theta == xi returns the initial value, flagged degenerate-stable") {
    auto space = closed_form_space(Closed::kMiss4);
    auto fp = solve_fixed_point(space, {0.4}, {0.4}, 7.25);
    CHECK(fp.converged);
    CHECK(fp.n_m == 7.25);
  }
  SECTION("iterates are clamped to [0, min(sides)]") {
    auto space = closed_form_space(Closed::kPerfect);
    auto fp = solve_fixed_point(space, {1.0}, {0.0}, 1e9);
    CHECK(fp.n_m <= 20.0 + 1e-12);
  }
}

TEST_CASE("supervised objectives") {
  SECTION("single shared pattern with matched subset gives q = q_f = 1") {
    // 2x2, every pair fully agrees; M = the diagonal. uhat(11) = 2/2 = 1,
    // fhat(11) = 1, m(11; theta=1) = 1, so both objectives equal 1 - 0.
    std::vector<std::vector<PatternBits>> g{{1, 1}, {1, 1}};
    auto space = pattern_table_from_gammas({"a1", "a2"}, {"b1", "b2"}, 1, g);
    auto obj = supervised_objectives({1, 1}, space, {1.0});
    CHECK(obj.q_f == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(obj.q.has_value());
    CHECK(*obj.q == Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("perfect keys: grid minimizer of q_f sits at theta = 1") {
    auto space = closed_form_space(Closed::kPerfect);
    std::vector<PatternBits> matched(20, 1);
    double best = 1e300, best_theta = -1;
    for (int i = 50; i <= 100; ++i) {
      const double theta = i / 100.0;
      auto obj = supervised_objectives(matched, space, {theta});
      if (obj.q_f < best) {
        best = obj.q_f;
        best_theta = theta;
      }
    }
    CHECK(best_theta == 1.0);

    // q is undefined here: the matched pattern never occurs among
    // non-matches.
    CHECK_FALSE(supervised_objectives(matched, space, {0.9}).q.has_value());
  }

  SECTION("four damaged matches: grid minimizer of q_f sits at 0.8") {
    auto space = closed_form_space(Closed::kMiss4);
    std::vector<PatternBits> matched(20, 1);
    for (int i = 16; i < 20; ++i) matched[i] = 0;
    double best = 1e300, best_theta = -1;
    for (int i = 1; i <= 99; ++i) {
      const double theta = i / 100.0;
      auto obj = supervised_objectives(matched, space, {theta});
      if (obj.q_f < best) {
        best = obj.q_f;
        best_theta = theta;
      }
    }
    CHECK(best_theta == Catch::Approx(0.8).margin(1e-12));
  }
}

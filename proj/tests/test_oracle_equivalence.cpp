#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mecrl/mec.hpp"
#include "mecrl/model.hpp"
#include "mecrl/rng.hpp"
#include "oracle.hpp"

using namespace mecrl;

namespace {

struct Realized {
  oracle::TinyInstance tiny;
  PatternTable space;
  LinkageParams params;
};

Realized random_instance(SplitMix64& rng) {
  oracle::TinyInstance inst;
  const std::size_t k = 1 + rng.next_below(6);
  const std::size_t na = 1 + rng.next_below(8), nb = 1 + rng.next_below(8);
  for (std::size_t i = 0; i < na; ++i)
    inst.a_ids.push_back("a" + std::to_string(i + 1));
  for (std::size_t j = 0; j < nb; ++j)
    inst.b_ids.push_back("b" + std::to_string(j + 1));
  inst.gamma.assign(na, std::vector<std::uint64_t>(nb, 0));
  for (auto& row : inst.gamma) {
    for (auto& bits : row) bits = rng.next() & ((1ull << k) - 1);
  }
  for (std::size_t f = 0; f < k; ++f) {
    inst.params.theta.push_back(0.05 + 0.9 * rng.next_unit());
    inst.params.xi.push_back(0.05 + 0.9 * rng.next_unit());
  }
  inst.params.n = static_cast<double>(na * nb);
  inst.params.n_m = rng.next_unit() * std::min(na, nb);

  Realized out;
  out.space = pattern_table_from_gammas(inst.a_ids, inst.b_ids, k, inst.gamma);
  out.params.theta = inst.params.theta;
  out.params.xi = inst.params.xi;
  out.params.n_m = inst.params.n_m;
  out.params.n = inst.params.n;
  out.tiny = std::move(inst);
  return out;
}

void check_same_links(const std::vector<oracle::OracleLink>& want,
                      const MecSet& got, const PatternTable& space) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(space.a_id(got.links[i].a_index) == want[i].a_id);
    CHECK(space.b_id(got.links[i].b_index) == want[i].b_id);
    if (std::isfinite(want[i].r)) {
      CHECK(got.links[i].r == Catch::Approx(want[i].r).epsilon(1e-9));
    } else {
      CHECK(std::isinf(got.links[i].r));
    }
  }
}

}  // namespace

TEST_CASE("production mec sets equal the brute-force oracle") {
  SplitMix64 rng(808);
  for (int trial = 0; trial < 250; ++trial) {
    auto inst = random_instance(rng);
    const std::size_t cap = std::min(inst.tiny.a_ids.size(),
                                     inst.tiny.b_ids.size());
    for (std::size_t n_star = 0; n_star <= cap; ++n_star) {
      check_same_links(oracle::mec_set(inst.tiny, n_star),
                       mec_set_of_size(inst.space, inst.params, n_star),
                       inst.space);
    }
  }
}

TEST_CASE("production threshold sets equal the brute-force oracle") {
  SplitMix64 rng(809);
  for (int trial = 0; trial < 250; ++trial) {
    auto inst = random_instance(rng);
    for (double c : {0.0, 0.5, 1.0, 2.0, 10.0}) {
      check_same_links(oracle::threshold_set(inst.tiny, c),
                       mec_set_by_threshold(inst.space, inst.params, c),
                       inst.space);
    }
  }
}

TEST_CASE("posterior sums match pairwise enumeration") {
  SplitMix64 rng(810);
  for (int trial = 0; trial < 250; ++trial) {
    auto inst = random_instance(rng);
    const double want = oracle::expected_matches(inst.tiny, inst.params.n_m);
    const double got = expected_matches(inst.space, inst.params);
    CHECK(got == Catch::Approx(want).margin(1e-9));
  }
}

TEST_CASE("fixed points land on the oracle grid") {
  SplitMix64 rng(811);
  int converged_count = 0;
  int supercritical_count = 0;
  for (int trial = 0; trial < 120; ++trial) {
    auto inst = random_instance(rng);
    const double cap = static_cast<double>(
        std::min(inst.tiny.a_ids.size(), inst.tiny.b_ids.size()));
    auto fp = solve_fixed_point(inst.space, inst.params.theta, inst.params.xi,
                                inst.params.n_m);
    LinkageParams at = inst.params;
    if (!fp.converged) {
      // the only failure mode these instances admit: the map pushes every
      // iterate against the one-to-one capacity, so no positive fixed point
      // exists inside the domain and the solver must say so
      supercritical_count++;
      CHECK(fp.n_m == Catch::Approx(cap));
      at.n_m = cap;
      CHECK(expected_matches(inst.space, at) > cap);
      continue;
    }
    converged_count++;
    // a converged iterate is itself (almost) a fixed point: the residual
    // must vanish and the point must appear in the oracle's grid scan
    at.n_m = fp.n_m;
    CHECK(std::fabs(expected_matches(inst.space, at) - fp.n_m) < 2e-6);

    auto scan = oracle::fixed_points(inst.tiny, 4000, 5e-3);
    if (!scan.degenerate) {
      REQUIRE(!scan.points.empty());
      double nearest = 1e300;
      for (double x : scan.points) {
        nearest = std::min(nearest, std::fabs(x - fp.n_m));
      }
      const double grid_step =
          std::min(inst.tiny.a_ids.size(), inst.tiny.b_ids.size()) / 4000.0;
      CHECK(nearest <= grid_step + 1e-6);
    }
  }
  // both regimes occur in force on these random instances, and together they
  // account for every trial
  CHECK(converged_count >= 25);
  CHECK(supercritical_count >= 25);
  CHECK(converged_count + supercritical_count == 120);
}

TEST_CASE("theta equal to xi flags every grid point as fixed") {
  oracle::TinyInstance inst;
  inst.a_ids = {"a1", "a2"};
  inst.b_ids = {"b1", "b2"};
  inst.gamma = {{1, 0}, {0, 1}};
  inst.params.theta = {0.4};
  inst.params.xi = {0.4};
  inst.params.n = 4;
  auto scan = oracle::fixed_points(inst, 100, 1e-6);
  CHECK(scan.degenerate);
  CHECK(scan.points.size() == 101);  // every grid point is fixed
}

#include <doctest.h>

#include <cmath>

#include "bfrontier/montecarlo.hpp"
#include "bfrontier/rng.hpp"

using namespace bfrontier;

TEST_CASE("simulation draws: moments, support, determinism") {
  const McDgp dgp;
  const std::size_t n = 1000000;
  const Dataset ds = dgp_sample(dgp, n, 42);
  double sum1 = 0.0, cnt1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = dgp.shift * ds.x[i] + (dgp.scale_offset * ds.x[i] + 1.0) * -4.0;
    const double hi = dgp.shift * ds.x[i] + (dgp.scale_offset * ds.x[i] + 1.0) * 4.0;
    REQUIRE(ds.y[i] >= lo);
    REQUIRE(ds.y[i] <= hi);
    if (ds.x[i] == 1) {
      sum1 += ds.y[i];
      cnt1 += 1.0;
    }
  }
  CHECK(std::fabs(sum1 / cnt1 - 1.0) < 0.01);
  CHECK(std::fabs(cnt1 / n - 0.5) < 0.002);

  const Dataset again = dgp_sample(dgp, 500, 7);
  const Dataset same = dgp_sample(dgp, 500, 7);
  CHECK(again.y == same.y);
  CHECK(again.x == same.x);
}

TEST_CASE("population frontier is nonincreasing and its window is positive") {
  const McDgp dgp;
  std::vector<double> grid(40);
  for (int j = 0; j < 40; ++j) grid[j] = 0.45 * j / 39.0;
  const FrontierCurve fc = population_frontier(dgp, Claim::dte(0.0, 0.25), grid);
  for (std::size_t j = 1; j < grid.size(); ++j)
    CHECK(fc.t_values[j] <= fc.t_values[j - 1] + 1e-12);
  const double death = population_death_point(dgp, Claim::dte(0.0, 0.25));
  CHECK(death > 0.2);
  CHECK(death < 0.45);
  // the frontier is positive just inside the death point, zero past it
  const PopulationDgp pop(dgp);
  CHECK(frontier_value(pop, Claim::dte(0.0, 0.25), death - 0.01) > 0.0);
  CHECK(frontier_value(pop, Claim::dte(0.0, 0.25), death + 0.01) == 0.0);
}

TEST_CASE("bias study: single simulation returns that curve") {
  const McDgp dgp;
  const BiasStudy one = bias_study(dgp, Claim::dte(0.0, 0.25), 200, 1, 5,
                                   FrontierConfig{}, 1, 10, 0.5);
  REQUIRE(one.simulations == 1);
  const Dataset ds = dgp_sample(dgp, 200, derive_seed(5, 0));
  bool changed = false;
  const CellEstimates ce =
      clamp_propensities(estimate_theta(ds), one.c_grid.back(), changed);
  const FrontierCurve fc = breakdown_frontier(ce, Claim::dte(0.0, 0.25), one.c_grid);
  for (std::size_t j = 0; j < one.c_grid.size(); ++j) {
    CHECK(one.mean_frontier[j] == doctest::Approx(fc.t_values[j]));
    CHECK(one.mc_se[j] == 0.0);
  }
}

TEST_CASE("coverage study: shape, determinism, thread invariance") {
  const McDgp dgp;
  CoverageStudyConfig cc;
  cc.sample_size = 150;
  cc.simulations = 4;
  cc.replications = 12;
  cc.seed = 3;
  cc.grid_points = 8;
  cc.threads = 2;
  FrontierConfig fcfg;
  fcfg.u_cells = 200;
  const auto rows = coverage_study(dgp, {0.25, 0.5}, {1.0, 2.0}, cc, fcfg);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.coverage >= 0.0);
    CHECK(r.coverage <= 1.0);
    CHECK(r.area_ratio >= 0.0);
    CHECK(r.area_ratio <= 1.0 + 1e-12);
    CHECK(r.epsilon == doctest::Approx(r.epsilon_ratio / std::sqrt(150.0)));
  }
  cc.threads = 1;
  const auto serial = coverage_study(dgp, {0.25, 0.5}, {1.0, 2.0}, cc, fcfg);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].coverage == serial[i].coverage);
    CHECK(rows[i].area_ratio == serial[i].area_ratio);
  }
}

#include <doctest.h>

#include <cmath>

#include "bfrontier/montecarlo.hpp"
#include "bfrontier/rng.hpp"
#include "bfrontier/smoothing.hpp"
#include "helpers.hpp"

using namespace bfrontier;

TEST_CASE("exp-weighted extremes") {
  CHECK(soft_minmax({0.4, 0.4}, 3.0) == doctest::Approx(0.4));
  CHECK(soft_minmax({0.4, 0.4}, -3.0) == doctest::Approx(0.4));
  const double e = std::exp(1.0);
  CHECK(soft_minmax({0.0, 1.0}, 1.0) == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));

  // large-sharpness limit reaches the exact extremes
  CHECK(std::fabs(soft_minmax({0.0, 0.1, 0.7}, 1e3) - 0.7) < 1e-6);
  CHECK(std::fabs(soft_minmax({0.0, 0.1, 0.7}, -1e3) - 0.0) < 1e-6);

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(2 + rng.uniform_below(4));
    for (auto& v : xs) v = rng.logistic();
    const double kappa = 0.5 + 50.0 * rng.uniform01();
    const double lo = *std::min_element(xs.begin(), xs.end());
    const double hi = *std::max_element(xs.begin(), xs.end());
    CHECK(soft_minmax(xs, kappa) <= hi + 1e-12);
    CHECK(soft_minmax(xs, -kappa) >= lo - 1e-12);
    CHECK(soft_minmax3(xs[0], xs[1], xs.back(), kappa) <=
          std::max(xs[0], std::max(xs[1], xs.back())) + 1e-12);
  }
  // overflow safety at extreme sharpness and spread
  CHECK(std::isfinite(soft_minmax({-700.0, 700.0}, 1e3)));
  CHECK_THROWS_AS(soft_minmax({}, 1.0), std::invalid_argument);
}

TEST_CASE("spline step envelopes") {
  CHECK(smooth_step(0.0, 50.0, Side::lower) == 0.0);
  CHECK(smooth_step(0.0, 50.0, Side::upper) == 1.0);
  CHECK(smooth_step(-1.0, 50.0, Side::lower) == 0.0);
  CHECK(smooth_step(1.0, 50.0, Side::upper) == 1.0);
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const double x = rng.logistic();
    const double kappa = 1.0 + 100.0 * rng.uniform01();
    const double ind = x >= 0.0 ? 1.0 : 0.0;
    CHECK(smooth_step(x, kappa, Side::lower) <= ind);
    CHECK(smooth_step(x, kappa, Side::upper) >= ind);
  }
  // L1 gap: the spline integrates to 1/2 over its window, so the distance
  // to the indicator is exactly 1/(2 kappa) on each side
  for (double kappa : {5.0, 40.0, 300.0}) {
    double gap_lower = 0.0, gap_upper = 0.0;
    const int K = 200000;
    for (int i = 0; i < K; ++i) {
      const double x = -2.0 + 4.0 * (i + 0.5) / K;
      const double ind = x >= 0.0 ? 1.0 : 0.0;
      gap_lower += std::fabs(smooth_step(x, kappa, Side::lower) - ind) * (4.0 / K);
      gap_upper += std::fabs(smooth_step(x, kappa, Side::upper) - ind) * (4.0 / K);
    }
    CHECK(gap_lower == doctest::Approx(0.5 / kappa).epsilon(1e-3));
    CHECK(gap_upper == doctest::Approx(0.5 / kappa).epsilon(1e-3));
    CHECK(gap_lower <= 1.0 / kappa);
    CHECK(gap_upper <= 1.0 / kappa);
  }
  CHECK_THROWS_AS(smooth_step(0.0, 0.0, Side::lower), std::invalid_argument);
}

TEST_CASE("smoothed rank measure: limits and orientation") {
  const auto u = u_midpoints(500);
  std::vector<double> f(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) f[i] = u[i] - 0.37;

  const double exact = pr_measure(f, 0.0);
  CHECK(std::fabs(smoothed_prerearrangement(f, 0.0, 1e4, Side::lower) - exact) < 2e-3);
  CHECK(std::fabs(smoothed_prerearrangement(f, 0.0, 1e4, Side::upper) - exact) < 2e-3);

  // lower-side step makes the smoothed measure an upper envelope of the raw
  // one, upper-side a lower envelope
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto& v : f) v = rng.logistic() * 0.3;
    const double kappa = 5.0 + 200.0 * rng.uniform01();
    const double z = rng.logistic() * 0.2;
    const double raw = pr_measure(f, z);
    CHECK(smoothed_prerearrangement(f, z, kappa, Side::lower) >= raw - 1e-12);
    CHECK(smoothed_prerearrangement(f, z, kappa, Side::upper) <= raw + 1e-12);
  }

  std::fill(f.begin(), f.end(), 1.0);
  CHECK(smoothed_prerearrangement(f, 0.0, 200.0, Side::upper) == doctest::Approx(0.0));
  CHECK(smoothed_prerearrangement(f, 0.0, 200.0, Side::lower) == doctest::Approx(0.0));
  std::fill(f.begin(), f.end(), -1.0);
  CHECK(smoothed_prerearrangement(f, 0.0, 200.0, Side::upper) == doctest::Approx(1.0));
  CHECK(smoothed_prerearrangement(f, 0.0, 200.0, Side::lower) == doctest::Approx(1.0));
}

TEST_CASE("soft infimum: constants, envelope, accuracy, zero norm") {
  std::vector<double> sites(101);
  for (int i = 0; i <= 100; ++i) sites[i] = 2.0 + 3.0 * i / 100.0;

  std::vector<double> flat(101, -0.8);
  for (double p : {1.0, 8.0, 64.0})
    CHECK(lp_soft_infimum(sites, flat, p) == doctest::Approx(-0.8).epsilon(1e-12));

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> f(101);
    for (auto& v : f) v = -2.0 * rng.uniform01();
    const double inf = *std::min_element(f.begin(), f.end() - 1);
    CHECK(lp_soft_infimum(sites, f, 16.0) >= inf - 1e-12);
  }

  // piecewise function: p = 64 lands within 0.02 of the true infimum
  std::vector<double> piece(101);
  for (int i = 0; i <= 100; ++i) piece[i] = (i < 40 ? -0.3 : (i < 80 ? -1.1 : -0.6));
  const double soft = lp_soft_infimum(sites, piece, 64.0);
  CHECK(soft >= -1.1);
  CHECK(std::fabs(soft - (-1.1)) < 0.02);

  std::vector<double> zero(101, 0.0);
  CHECK_THROWS_WITH_AS(lp_soft_infimum(sites, zero, 64.0),
                       doctest::Contains("zero norm"), std::runtime_error);
  std::vector<double> bad(101, 0.5);
  CHECK_THROWS_AS(lp_soft_infimum(sites, bad, 64.0), std::invalid_argument);
}

TEST_CASE("smoothed frontier is a lower envelope of the raw frontier") {
  Rng rng(17);
  const SmoothingConfig scfg;
  FrontierConfig fcfg;
  fcfg.u_cells = 400;
  for (int trial = 0; trial < 25; ++trial) {
    const Dataset ds = testutil::random_dataset(rng);
    const CellEstimates ce = estimate_theta(ds);
    GridSpec gs;
    gs.points = 12;
    const auto grid = make_c_grid(gs, ce.min_propensity());
    const double p_floor = 0.1 + 0.6 * rng.uniform01();
    const Claim claim = Claim::dte(0.0, p_floor);
    const FrontierCurve raw = breakdown_frontier(ce, claim, grid, fcfg);
    const FrontierCurve soft = smoothed_frontier(ce, claim, grid, scfg, fcfg);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      CHECK(soft.t_values[j] <= raw.t_values[j] + 1e-12);
      CHECK(soft.t_values[j] >= 0.0);
      CHECK(soft.t_values[j] <= 1.0);
    }
  }
}

TEST_CASE("smoothed frontier: degenerate claim clips to zero") {
  Rng rng(19);
  const Dataset ds = testutil::random_dataset(rng);
  const CellEstimates ce = estimate_theta(ds);
  const double upper_at_origin = dte_bounds(ce, 0.0, 0.0, 0.0).upper;
  const double p_floor = std::min(1.0, 1.0 - upper_at_origin + 0.1);
  GridSpec gs;
  gs.points = 8;
  const auto grid = make_c_grid(gs, ce.min_propensity());
  const FrontierCurve soft = smoothed_frontier(ce, Claim::dte(0.0, p_floor), grid);
  for (double t : soft.t_values) CHECK(t == 0.0);
  CHECK_THROWS_AS(smoothed_frontier(ce, Claim::ate(0.0), grid), std::invalid_argument);
}

TEST_CASE("smoothing gap shrinks along a sharpness ladder") {
  Rng rng(23);
  const Dataset ds = testutil::random_dataset(rng, 80, 140, 1);
  const CellEstimates ce = estimate_theta(ds);
  GridSpec gs;
  gs.points = 10;
  const auto grid = make_c_grid(gs, ce.min_propensity());
  const Claim claim = Claim::dte(0.0, 0.35);
  FrontierConfig fcfg;
  fcfg.u_cells = 400;
  const FrontierCurve raw = breakdown_frontier(ce, claim, grid, fcfg);
  double prev_gap = 1e300;
  for (double kappa : {50.0, 100.0, 200.0, 400.0, 800.0}) {
    SmoothingConfig scfg;
    scfg.kappa_minmax = scfg.kappa_step = kappa;
    scfg.p_norm = kappa / 2.0;
    const FrontierCurve soft = smoothed_frontier(ce, claim, grid, scfg, fcfg);
    double gap = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j)
      gap = std::max(gap, raw.t_values[j] - soft.t_values[j]);
    CHECK(gap <= prev_gap + 1e-9);
    prev_gap = gap;
  }
}

TEST_CASE("smoothed band: exact reproduction when the resample is forced") {
  // with two observations and overlap enforcement, the only valid resample
  // is the dataset itself: every draw is zero and the band equals the
  // smoothed frontier
  const Dataset tiny = Dataset::from_records({0.0, 1.0}, {0, 1}, {});
  const std::vector<double> grid{0.0, 0.1, 0.2};
  const BandResult band = smoothed_band(tiny, Claim::dte(0.0, 0.2), grid,
                                        SmoothingConfig{}, 1, 0.05, 5);
  const CellEstimates ce = estimate_theta(tiny);
  const FrontierCurve soft = smoothed_frontier(ce, Claim::dte(0.0, 0.2), grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    CHECK(band.k_values[j] == 0.0);
    CHECK(band.lower_band[j] == doctest::Approx(soft.t_values[j]));
  }
}

TEST_CASE("smoothed band sits below the smoothed and raw frontiers") {
  Rng rng(29);
  const Dataset ds = testutil::random_dataset(rng, 80, 140, 1);
  const CellEstimates ce = estimate_theta(ds);
  GridSpec gs;
  gs.points = 8;
  gs.upper_frac = 0.6;
  const auto grid = make_c_grid(gs, ce.min_propensity());
  const Claim claim = Claim::dte(0.0, 0.3);
  FrontierConfig fcfg;
  fcfg.u_cells = 300;
  const BandResult band =
      smoothed_band(ds, claim, grid, SmoothingConfig{}, 40, 0.1, 7, fcfg, 2);
  const FrontierCurve soft = smoothed_frontier(ce, claim, grid, SmoothingConfig{}, fcfg);
  const FrontierCurve raw = breakdown_frontier(ce, claim, grid, fcfg);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    CHECK(band.lower_band[j] <= soft.t_values[j] + 1e-12);
    CHECK(soft.t_values[j] <= raw.t_values[j] + 1e-12);
  }
}

#include <doctest.h>

#include <cmath>

#include "bfrontier/bounds.hpp"
#include "bfrontier/empirical.hpp"
#include "bfrontier/montecarlo.hpp"
#include "bfrontier/rng.hpp"
#include "helpers.hpp"

using namespace bfrontier;

namespace {

// arm 1 has cdf exactly 0.5 at y=0 with p = 0.5
Dataset half_half() {
  return Dataset::from_records({-1, 1, -1, 1}, {1, 1, 0, 0}, {});
}

}  // namespace

TEST_CASE("cdf bounds: point identification at c=0") {
  const CellEstimates ce = estimate_theta(half_half());
  const Interval b = cdf_bounds(ce, 0.0, 1, 0, 0.0);
  CHECK(b.lower == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(b.upper == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("cdf bounds at F=0.5, p=0.5, c=0.1") {
  // frozen from evaluating the two bound formulas by hand:
  //   upper = min{0.25/0.4, 0.35/0.6} = 0.58333..., lower = max{0.25/0.6,
  //   0.15/0.4} = 0.41666...
  const CellEstimates ce = estimate_theta(half_half());
  const Interval b = cdf_bounds(ce, 0.0, 1, 0, 0.1);
  CHECK(b.upper == doctest::Approx(0.35 / 0.6).epsilon(1e-14));
  CHECK(b.lower == doctest::Approx(0.25 / 0.6).epsilon(1e-14));
}

TEST_CASE("cdf bounds clip to probabilities") {
  const CellEstimates ce = estimate_theta(half_half());
  const Interval top = cdf_bounds(ce, 2.0, 1, 0, 0.3);  // F = 1
  CHECK(top.upper == 1.0);
  const Interval bottom = cdf_bounds(ce, -2.0, 1, 0, 0.3);  // F = 0
  CHECK(bottom.lower == 0.0);
  CHECK_THROWS_WITH_AS(cdf_bounds(ce, 0.0, 1, 0, 0.5),
                       doctest::Contains("identification region"),
                       std::invalid_argument);
}

TEST_CASE("quantile bounds move the rank by (c/p) min(tau, 1-tau)") {
  Rng rng(5);
  const Dataset ds = testutil::random_dataset(rng, 60, 120, 1);
  const CellEstimates ce = estimate_theta(ds);
  const double p = ce.propensity(1, 0);
  const double c = 0.2 * p;

  const Interval at_half = quantile_bounds(ce, 0.5, 1, 0, c);
  CHECK(at_half.upper == ce.quantile(0.5 + (c / p) * 0.5, 1, 0));
  CHECK(at_half.lower == ce.quantile(0.5 - (c / p) * 0.5, 1, 0));

  const Interval at_09 = quantile_bounds(ce, 0.9, 1, 0, c);
  CHECK(at_09.upper == ce.quantile(0.9 + (c / p) * 0.1, 1, 0));
  CHECK(at_09.lower == ce.quantile(0.9 - (c / p) * 0.1, 1, 0));

  const Interval at_zero = quantile_bounds(ce, 0.5, 1, 0, 0.0);
  CHECK(at_zero.lower == at_zero.upper);
  CHECK(at_zero.lower == ce.quantile(0.5, 1, 0));
  CHECK_THROWS_AS(quantile_bounds(ce, 1.0, 1, 0, c), std::invalid_argument);
}

TEST_CASE("identical arms give zero CQTE at c=0 and nested intervals in c") {
  const Dataset ds =
      Dataset::from_records({1, 2, 3, 1, 2, 3}, {0, 0, 0, 1, 1, 1}, {});
  const CellEstimates ce = estimate_theta(ds);
  const Interval b = cqte_bounds(ce, 0.37, 0, 0.0);
  CHECK(b.lower == 0.0);
  CHECK(b.upper == 0.0);
}

TEST_CASE("bound widths weakly increase in c") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset ds = testutil::random_dataset(rng);
    const CellEstimates ce = estimate_theta(ds);
    const double cmax = ce.min_propensity();
    const double c1 = 0.8 * cmax * rng.uniform01();
    const double c2 = c1 + (0.8 * cmax - c1) * rng.uniform01();
    const double tau = 0.05 + 0.9 * rng.uniform01();
    for (std::size_t w = 0; w < ce.cell_count(); ++w) {
      const Interval narrow = cqte_bounds(ce, tau, w, c1);
      const Interval wide = cqte_bounds(ce, tau, w, c2);
      CHECK(narrow.lower <= narrow.upper);
      CHECK(wide.lower <= narrow.lower + 1e-12);
      CHECK(wide.upper >= narrow.upper - 1e-12);
      const Interval f1 = cdf_bounds(ce, ce.quantile(tau, 1, w), 1, w, c1);
      const Interval f2 = cdf_bounds(ce, ce.quantile(tau, 1, w), 1, w, c2);
      CHECK(f2.lower <= f1.lower + 1e-12);
      CHECK(f2.upper >= f1.upper - 1e-12);
    }
    const TauGrid grid(199);
    const Interval a1 = ate_bounds(ce, c1, grid);
    const Interval a2 = ate_bounds(ce, c2, grid);
    CHECK(a2.lower <= a1.lower + 1e-12);
    CHECK(a2.upper >= a1.upper - 1e-12);
  }
}

TEST_CASE("ATE bounds collapse at c=0 and are exact on the population design") {
  Rng rng(23);
  const Dataset ds = testutil::random_dataset(rng);
  const CellEstimates ce = estimate_theta(ds);
  const TauGrid grid;
  const Interval a = ate_bounds(ce, 0.0, grid);
  CHECK(a.upper - a.lower <= 1e-12);

  // symmetric truncation has mean zero, so the population ATE is the shift
  const PopulationDgp pop{McDgp{}};
  const Interval pa = ate_bounds(pop, 0.0, grid);
  CHECK(pa.lower == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pa.upper == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("breakdown point: degenerate, bisection vs grid scan, monotone in mu") {
  Rng rng(31);
  const Dataset ds = testutil::random_dataset(rng, 120, 200, 2);
  const CellEstimates ce = estimate_theta(ds);
  const TauGrid grid(299);
  const double cmax = 0.8 * ce.min_propensity();
  const double ate0 = ate_bounds(ce, 0.0, grid).lower;

  const BreakdownPoint degen = ate_breakdown_point(ce, ate0 + 0.5, cmax, 1e-4, grid);
  CHECK(degen.degenerate);
  CHECK(degen.c_star == 0.0);

  const double ate_end = ate_bounds(ce, cmax, grid).lower;
  const double mu = 0.5 * (ate0 + ate_end);  // guaranteed interior
  const BreakdownPoint bp = ate_breakdown_point(ce, mu, cmax, 1e-4, grid);
  REQUIRE(!bp.degenerate);
  REQUIRE(bp.reached);

  // oracle: dense scan for the first grid c with lower bound <= mu
  double scan = cmax;
  for (double c = 0.0; c <= cmax; c += 1e-4)
    if (ate_bounds(ce, c, grid).lower <= mu) {
      scan = c;
      break;
    }
  CHECK(std::fabs(bp.c_star - scan) <= 2e-4);

  const BreakdownPoint weaker = ate_breakdown_point(ce, mu - 0.05, cmax, 1e-4, grid);
  CHECK(weaker.c_star >= bp.c_star - 1e-12);

  const BreakdownPoint never = ate_breakdown_point(ce, ate_end - 10.0, cmax, 1e-4, grid);
  CHECK(!never.reached);
  CHECK(never.c_star == cmax);
}

TEST_CASE("leave-out gap vanishes for a duplicated covariate") {
  Rng rng(41);
  std::vector<double> y;
  std::vector<int> x;
  std::vector<std::vector<double>> cov;
  for (int i = 0; i < 200; ++i) {
    const double w = static_cast<double>(i % 3);
    y.push_back(rng.logistic());
    x.push_back(i % 2);
    cov.push_back({w, w});  // identical columns
  }
  const Dataset ds = Dataset::from_records(y, x, cov);
  CHECK(leave_out_cbar(ds, 0) == 0.0);
  CHECK(leave_out_cbar(ds, 1) == 0.0);
}

TEST_CASE("leave-out gap reduces to the marginal comparison when the rest is constant") {
  Rng rng(43);
  std::vector<double> y;
  std::vector<int> x;
  std::vector<std::vector<double>> cov;
  for (int i = 0; i < 300; ++i) {
    const double w = static_cast<double>(i % 2);
    y.push_back(rng.logistic());
    x.push_back(rng.uniform01() < (0.3 + 0.4 * w) ? 1 : 0);
    cov.push_back({w, 7.0});  // second covariate constant
  }
  const Dataset ds = Dataset::from_records(y, x, cov);
  // dropping covariate 0 leaves the constant: conditional becomes marginal
  int treated = 0;
  for (int v : ds.x) treated += v;
  const double marginal = static_cast<double>(treated) / ds.n();
  double expected = 0.0;
  for (int w = 0; w < 2; ++w) {
    int cnt = 0, t = 0;
    for (std::size_t i = 0; i < ds.n(); ++i)
      if (ds.covariates[i][0] == w) {
        ++cnt;
        t += ds.x[i];
      }
    expected = std::max(expected, std::fabs(static_cast<double>(t) / cnt - marginal));
  }
  CHECK(leave_out_cbar(ds, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(leave_out_cbar(ds, 5), std::invalid_argument);
}

TEST_CASE("leave-out gap is near zero under independence") {
  Rng rng(47);
  std::vector<double> y;
  std::vector<int> x;
  std::vector<std::vector<double>> cov;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const double w1 = static_cast<double>(rng.uniform_below(2));
    const double w2 = static_cast<double>(rng.uniform_below(3));  // independent of x, w1
    y.push_back(rng.logistic());
    x.push_back(rng.uniform01() < (0.35 + 0.25 * w1) ? 1 : 0);
    cov.push_back({w1, w2});
  }
  const Dataset ds = Dataset::from_records(y, x, cov);
  CHECK(leave_out_cbar(ds, 1) < 0.05);
}

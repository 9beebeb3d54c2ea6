#include "bfrontier/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace bfrontier {

namespace {
constexpr double kRankEps = 1e-9;

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }
}  // namespace

TauGrid::TauGrid(int interior_points) {
  if (interior_points < 1) throw std::invalid_argument("need at least 1 rank point");
  spacing = 1.0 / (interior_points + 1);
  taus.resize(interior_points);
  for (int i = 0; i < interior_points; ++i) taus[i] = (i + 1) * spacing;
}

void require_identifiable(double c, double p) {
  if (!(c >= 0.0)) throw std::invalid_argument("sensitivity level must be >= 0");
  if (!(c < p))
    throw std::invalid_argument("c exceeds identification region (c=" +
                                std::to_string(c) + ", p=" + std::to_string(p) + ")");
}

Interval cdf_bounds(const Theta& th, double y, int x, std::size_t w, double c) {
  const double p = th.propensity(x, w);
  require_identifiable(c, p);
  const double f = th.cdf(y, x, w);
  const double upper = std::min(f * p / (p - c), (f * p + c) / (p + c));
  const double lower = std::max(f * p / (p + c), (f * p - c) / (p - c));
  return {clip01(lower), clip01(upper)};
}

Interval quantile_bounds(const Theta& th, double tau, int x, std::size_t w, double c) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  const double p = th.propensity(x, w);
  require_identifiable(c, p);
  const double bump = (c / p) * std::min(tau, 1.0 - tau);
  const double hi = std::min(1.0 - kRankEps, std::max(kRankEps, tau + bump));
  const double lo = std::min(1.0 - kRankEps, std::max(kRankEps, tau - bump));
  return {th.quantile(lo, x, w), th.quantile(hi, x, w)};
}

Interval cqte_bounds(const Theta& th, double tau, std::size_t w, double c) {
  const Interval q1 = quantile_bounds(th, tau, 1, w, c);
  const Interval q0 = quantile_bounds(th, tau, 0, w, c);
  return {q1.lower - q0.upper, q1.upper - q0.lower};
}

Interval cate_bounds(const Theta& th, std::size_t w, double c, const TauGrid& grid) {
  // trapezoid over the interior grid plus nearest-value tail strips; for an
  // equally spaced grid this collapses to h * (sum + (first + last)/2)
  double lo_sum = 0.0, hi_sum = 0.0;
  for (double tau : grid.taus) {
    const Interval b = cqte_bounds(th, tau, w, c);
    lo_sum += b.lower;
    hi_sum += b.upper;
  }
  const Interval first = cqte_bounds(th, grid.taus.front(), w, c);
  const Interval last = cqte_bounds(th, grid.taus.back(), w, c);
  const double h = grid.spacing;
  return {h * (lo_sum + 0.5 * (first.lower + last.lower)),
          h * (hi_sum + 0.5 * (first.upper + last.upper))};
}

Interval ate_bounds(const Theta& th, double c, const TauGrid& grid) {
  Interval total{0.0, 0.0};
  for (std::size_t w = 0; w < th.cell_count(); ++w) {
    const Interval b = cate_bounds(th, w, c, grid);
    total.lower += th.cell_mass(w) * b.lower;
    total.upper += th.cell_mass(w) * b.upper;
  }
  return total;
}

BreakdownPoint ate_breakdown_point(const Theta& th, double mu, double c_search_max,
                                   double tol, const TauGrid& grid) {
  if (!(c_search_max > 0.0) || !(c_search_max < th.min_propensity()))
    throw std::invalid_argument("search window must satisfy 0 < c_max < min propensity");
  auto lower_at = [&](double c) { return ate_bounds(th, c, grid).lower; };

  if (lower_at(0.0) <= mu) return {0.0, true, true};
  if (lower_at(c_search_max) > mu) return {c_search_max, false, false};

  double lo = 0.0, hi = c_search_max;  // lower_at(lo) > mu >= lower_at(hi)
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (lower_at(mid) > mu ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false, true};
}

double leave_out_cbar(const Dataset& ds, std::size_t k) {
  if (ds.covariate_count() < 2)
    throw std::invalid_argument("leave-out diagnostic needs at least 2 covariates");
  if (k >= ds.covariate_count())
    throw std::invalid_argument("covariate index out of range");

  struct Tally { int treated = 0; int total = 0; };
  std::map<std::vector<double>, Tally> full, reduced;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto& row = ds.covariates[i];
    std::vector<double> rest;
    rest.reserve(row.size() - 1);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (j != k) rest.push_back(row[j]);
    auto& f = full[row];
    auto& r = reduced[rest];
    f.total++, r.total++;
    if (ds.x[i] == 1) f.treated++, r.treated++;
  }

  double worst = 0.0;
  for (const auto& [row, tally] : full) {
    std::vector<double> rest;
    for (std::size_t j = 0; j < row.size(); ++j)
      if (j != k) rest.push_back(row[j]);
    const auto& r = reduced.at(rest);
    const double p_full = static_cast<double>(tally.treated) / tally.total;
    const double p_rest = static_cast<double>(r.treated) / r.total;
    worst = std::max(worst, std::fabs(p_full - p_rest));
  }
  return worst;
}

std::vector<double> leave_out_cbar_all(const Dataset& ds) {
  std::vector<double> out(ds.covariate_count());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = leave_out_cbar(ds, k);
  return out;
}

}  // namespace bfrontier

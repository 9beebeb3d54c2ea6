#include "bfrontier/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfrontier/empirical.hpp"
#include "bfrontier/parallel.hpp"
#include "bfrontier/rng.hpp"

namespace bfrontier {

namespace {

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

double spline01(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * (3.0 - 2.0 * x);
}

// soft min{0, x} used where an upper approximation of the minimum is the
// envelope-preserving direction; exact outside (-1/kappa, 0)
double soft_min_zero(double x, double kappa) {
  return x * (1.0 - smooth_step(x, kappa, Side::upper));
}

}  // namespace

double soft_minmax(const std::vector<double>& values, double kappa) {
  if (values.empty()) throw std::invalid_argument("soft_minmax of empty set");
  double anchor = values.front();  // subtract the extremum to keep exp in range
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("soft_minmax of non-finite value");
    anchor = kappa >= 0.0 ? std::max(anchor, v) : std::min(anchor, v);
  }
  double num = 0.0, den = 0.0;
  for (double v : values) {
    const double wgt = std::exp(kappa * (v - anchor));
    num += v * wgt;
    den += wgt;
  }
  return num / den;
}

double soft_minmax2(double a, double b, double kappa) {
  const double anchor = kappa >= 0.0 ? std::max(a, b) : std::min(a, b);
  const double wa = std::exp(kappa * (a - anchor));
  const double wb = std::exp(kappa * (b - anchor));
  return (a * wa + b * wb) / (wa + wb);
}

double soft_minmax3(double a, double b, double c, double kappa) {
  const double anchor = kappa >= 0.0 ? std::max(a, std::max(b, c))
                                     : std::min(a, std::min(b, c));
  const double wa = std::exp(kappa * (a - anchor));
  const double wb = std::exp(kappa * (b - anchor));
  const double wc = std::exp(kappa * (c - anchor));
  return (a * wa + b * wb + c * wc) / (wa + wb + wc);
}

double smooth_step(double x, double kappa, Side side) {
  if (!(kappa > 0.0)) throw std::invalid_argument("step sharpness must be positive");
  return side == Side::lower ? spline01(kappa * x) : spline01(kappa * x + 1.0);
}

double smoothed_prerearrangement(const std::vector<double>& f_on_grid, double z,
                                 double kappa, Side side) {
  if (f_on_grid.empty()) throw std::invalid_argument("empty grid");
  double acc = 0.0;
  for (double v : f_on_grid) acc += smooth_step(v - z, kappa, side);
  return 1.0 - acc / f_on_grid.size();
}

double lp_soft_infimum(const std::vector<double>& sites,
                       const std::vector<double>& values, double p_norm) {
  if (sites.size() != values.size() || sites.size() < 2)
    throw std::invalid_argument("need matching sites and values");
  if (!(p_norm >= 1.0)) throw std::invalid_argument("norm order must be >= 1");
  const double range = sites.back() - sites.front();
  if (!(range > 0.0)) throw std::invalid_argument("degenerate site range");

  double peak = 0.0;
  for (double v : values) {
    if (v > 1e-12 || v < -2.0 - 1e-12)
      throw std::invalid_argument("soft infimum argument must lie in [-2, 0]");
    peak = std::max(peak, -v);
  }
  if (!(peak > 0.0)) throw std::runtime_error("soft infimum undefined at zero norm");
  // factor out the peak so |v/peak|^p never underflows the whole integral
  double integral = 0.0;  // of (|v|/peak)^p over left-constant segments
  for (std::size_t i = 0; i + 1 < sites.size(); ++i) {
    const double seg = sites[i + 1] - sites[i];
    if (seg <= 0.0) continue;
    integral += std::pow(std::max(0.0, -values[i]) / peak, p_norm) * seg;
  }
  if (!(peak * std::pow(integral, 1.0 / p_norm) >= 1e-8))
    throw std::runtime_error("soft infimum undefined at zero norm");
  return -peak * std::pow(integral / range, 1.0 / p_norm);
}

namespace {

struct SmoothCellTerms {
  double p_num = 0.0;     // upper rank term smoothed with the lower-side step
  double p_den = 0.0;     // upper rank term smoothed with the upper-side step
  double minzero = 0.0;   // soft min{ soft inf term, 0 }
  bool degenerate = false;
  double degenerate_value = 0.0;
};

SmoothCellTerms smooth_cell_terms(const Theta& th, double z, std::size_t w, double c,
                                  const SmoothingConfig& scfg,
                                  const FrontierConfig& fcfg) {
  SmoothCellTerms out;
  const auto [l1, h1] = th.support(1, w);
  const auto [l0, h0] = th.support(0, w);
  const double lo = std::max(l1, l0 + z);
  const double hi = std::min(h1, h0 + z);
  if (lo > hi) {
    out.degenerate = true;
    out.degenerate_value = (z > h1 - l0) ? 1.0 : 0.0;
    return out;
  }

  std::vector<double> f(fcfg.u_cells);
  for (int i = 0; i < fcfg.u_cells; ++i) {
    const double u = (i + 0.5) / fcfg.u_cells;
    const Interval q1 = quantile_bounds(th, u, 1, w, c);
    const Interval q0 = quantile_bounds(th, u, 0, w, c);
    f[i] = q1.lower - q0.upper;
  }
  out.p_num = smoothed_prerearrangement(f, z, scfg.kappa_step, Side::lower);
  out.p_den = smoothed_prerearrangement(f, z, scfg.kappa_step, Side::upper);

  const double p1 = th.propensity(1, w);
  const double p0 = th.propensity(0, w);
  require_identifiable(c, p1);
  require_identifiable(c, p0);
  std::vector<double> sites;
  th.makarov_sites(w, z, lo, hi, sites);
  std::vector<double> arg(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double y = sites[i];
    const double f1 = th.cdf(y, 1, w);
    const double f0 = th.cdf(y - z, 0, w);
    // soft versions of the clipped cdf bounds: the upper bound is a 3-way
    // min with 1, the lower bound a 3-way max with 0
    const double up1 = soft_minmax3(f1 * p1 / (p1 - c), (f1 * p1 + c) / (p1 + c),
                                    1.0, -scfg.kappa_minmax);
    const double lo0 = soft_minmax3(f0 * p0 / (p0 + c), (f0 * p0 - c) / (p0 - c),
                                    0.0, scfg.kappa_minmax);
    arg[i] = std::min(0.0, std::max(-2.0, -1.0 + up1 - lo0));
  }
  const double inf_soft = 1.0 + lp_soft_infimum(sites, arg, scfg.p_norm);
  out.minzero = soft_min_zero(inf_soft, scfg.kappa_step);
  return out;
}

double smoothed_frontier_value(const Theta& th, const Claim& claim, double c,
                               const SmoothingConfig& scfg, const FrontierConfig& fcfg,
                               bool* undefined) {
  double p_num = 0.0, p_den = 0.0, minzero = 0.0;
  for (std::size_t w = 0; w < th.cell_count(); ++w) {
    const SmoothCellTerms terms = smooth_cell_terms(th, claim.z, w, c, scfg, fcfg);
    const double q = th.cell_mass(w);
    if (terms.degenerate) {
      p_num += q * terms.degenerate_value;
      p_den += q * terms.degenerate_value;
      minzero += q * (terms.degenerate_value - 1.0);
    } else {
      p_num += q * terms.p_num;
      p_den += q * terms.p_den;
      minzero += q * terms.minzero;
    }
  }
  const double num = 1.0 - claim.p_floor - p_num;
  const double denom = 1.0 + minzero - p_den;
  double bf;
  if (std::fabs(denom) <= fcfg.denom_tol) {
    if (undefined) *undefined = true;
    bf = num > fcfg.denom_tol ? 1.0 : 0.0;
  } else {
    if (undefined) *undefined = false;
    bf = num / denom;
  }
  // smooth outer clip: soft max with 0, then the soft min{.,1} written as
  // 1 + smin0(x - 1); a final hard clip keeps the value a probability
  const double smax = soft_minmax2(bf, 0.0, scfg.kappa_minmax);
  const double sminone = 1.0 + soft_min_zero(smax - 1.0, scfg.kappa_step);
  return clip01(sminone);
}

}  // namespace

FrontierCurve smoothed_frontier(const Theta& th, const Claim& claim,
                                std::vector<double> c_grid,
                                const SmoothingConfig& scfg,
                                const FrontierConfig& fcfg) {
  if (c_grid.empty()) throw std::invalid_argument("empty sensitivity grid");
  if (!(c_grid.back() < th.min_propensity()))
    throw std::invalid_argument("sensitivity grid exceeds identification region");

  FrontierCurve fc;
  fc.c_grid = std::move(c_grid);
  fc.t_values.resize(fc.c_grid.size());

  switch (claim.kind) {
    case Claim::Kind::dte_at_least:
      for (std::size_t j = 0; j < fc.c_grid.size(); ++j) {
        bool undefined = false;
        fc.t_values[j] = smoothed_frontier_value(th, claim, fc.c_grid[j], scfg, fcfg,
                                                 &undefined);
        if (undefined) fc.undefined_points.push_back(j);
      }
      break;
    case Claim::Kind::ate_at_least:
      throw std::invalid_argument(
          "smoothed frontier is defined for threshold-probability claims");
    case Claim::Kind::joint_and:
    case Claim::Kind::joint_or: {
      const bool take_min = claim.kind == Claim::Kind::joint_and;
      std::fill(fc.t_values.begin(), fc.t_values.end(), take_min ? 1.0 : 0.0);
      for (const Claim& member : claim.members) {
        const FrontierCurve part = smoothed_frontier(th, member, fc.c_grid, scfg, fcfg);
        for (std::size_t j = 0; j < fc.c_grid.size(); ++j)
          fc.t_values[j] = take_min ? std::min(fc.t_values[j], part.t_values[j])
                                    : std::max(fc.t_values[j], part.t_values[j]);
      }
      break;
    }
  }
  return fc;
}

BandResult smoothed_band(const Dataset& ds, const Claim& claim,
                         const std::vector<double>& c_grid,
                         const SmoothingConfig& scfg, int replications,
                         double alpha, std::uint64_t seed,
                         const FrontierConfig& fcfg, unsigned threads) {
  const CellEstimates base = estimate_theta(ds);
  const FrontierCurve fc = smoothed_frontier(base, claim, c_grid, scfg, fcfg);
  const double root_n = std::sqrt(static_cast<double>(ds.n()));

  std::vector<std::vector<double>> rows(replications);
  std::vector<char> bad(replications, 0);
  parallel_for(replications, threads, [&](std::size_t b) {
    const std::uint64_t seed_b = derive_seed(seed, b);
    try {
      const Dataset redraw = bootstrap_resample(ds, seed_b);
      bool changed = false;
      const CellEstimates star =
          clamp_propensities(estimate_theta(redraw), c_grid.back(), changed);
      const FrontierCurve star_fc = smoothed_frontier(star, claim, c_grid, scfg, fcfg);
      auto& row = rows[b];
      row.resize(c_grid.size());
      for (std::size_t j = 0; j < row.size(); ++j)
        row[j] = root_n * (star_fc.t_values[j] - fc.t_values[j]);
    } catch (const std::runtime_error&) {
      bad[b] = 1;
    }
  });

  std::vector<std::vector<double>> draws;
  int flagged = 0;
  for (int b = 0; b < replications; ++b) {
    if (bad[b]) {
      ++flagged;
      continue;
    }
    draws.push_back(std::move(rows[b]));
  }
  if (draws.empty()) throw std::runtime_error("all bootstrap draws failed");

  const double z =
      std::max(0.0, critical_value(draws, std::vector<double>(c_grid.size(), 1.0), alpha));
  BandResult out;
  out.c_grid = c_grid;
  out.frontier = fc.t_values;
  out.flagged_draws = flagged;
  out.k_values.assign(c_grid.size(), z / root_n);
  out.lower_band.resize(c_grid.size());
  for (std::size_t j = 0; j < c_grid.size(); ++j)
    out.lower_band[j] = std::max(0.0, out.frontier[j] - out.k_values[j]);
  long covered = 0;
  for (const auto& row : draws) {
    bool ok = true;
    for (double v : row)
      if (v > z) { ok = false; break; }
    covered += ok;
  }
  out.realized_coverage = static_cast<double>(covered) / draws.size();
  out.area =
      monotone_step_extension(out.c_grid, out.lower_band, out.c_grid.back()).area() /
      out.c_grid.back();
  return out;
}

}  // namespace bfrontier

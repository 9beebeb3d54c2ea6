#include "bfrontier/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bfrontier/empirical.hpp"
#include "bfrontier/rng.hpp"

namespace bfrontier {

namespace {

constexpr double kRankEps = 1e-9;

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

double clamp_rank(double r) {
  return std::min(1.0 - kRankEps, std::max(kRankEps, r));
}

struct CellTerms {
  double p_upper = 0.0;
  double p_lower = 0.0;
  double mak_upper = 0.0;  // 1 + min{inf_term, 0}
  double mak_lower = 0.0;  // max{sup_term, 0}
};

// Shared fast path: one forward scan over the sorted step cdf per arm.
// Perturbed ranks are increasing in u on both halves, so each lookup
// advances a cursor instead of binary searching. Produces bitwise the same
// values as the generic virtual-dispatch path (asserted in tests).
struct StepScanner {
  const std::vector<double>* values;
  const std::vector<double>* cdf;
  std::size_t idx = 0;
  // type-1 inverse for a nondecreasing rank sequence
  double quantile_monotone(double tau) {
    while (idx < cdf->size() && (*cdf)[idx] < tau) ++idx;
    if (idx >= cdf->size()) return values->back();
    return (*values)[idx];
  }
};

CellTerms cell_terms_empirical(const CellEstimates& ce, double z, std::size_t w,
                               double c, const FrontierConfig& cfg, bool need_lower,
                               const MakarovTerms& mk) {
  CellTerms out;
  const double p1 = ce.propensity(1, w);
  const double p0 = ce.propensity(0, w);
  const ArmCell& a1 = ce.arm(1, w);
  const ArmCell& a0 = ce.arm(0, w);
  const int m = cfg.u_cells;

  StepScanner lo1{&a1.values, &a1.cdf};
  StepScanner hi0{&a0.values, &a0.cdf};
  StepScanner hi1{&a1.values, &a1.cdf};
  StepScanner lo0{&a0.values, &a0.cdf};
  long count_upper = 0, count_lower = 0;
  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) / m;
    const double bump = std::min(u, 1.0 - u);
    const double q1_lo = lo1.quantile_monotone(clamp_rank(u - (c / p1) * bump));
    const double q0_hi = hi0.quantile_monotone(clamp_rank(u + (c / p0) * bump));
    if (q1_lo - q0_hi <= z) ++count_upper;
    if (need_lower) {
      const double q1_hi = hi1.quantile_monotone(clamp_rank(u + (c / p1) * bump));
      const double q0_lo = lo0.quantile_monotone(clamp_rank(u - (c / p0) * bump));
      if (q1_hi - q0_lo <= z) ++count_lower;
    }
  }
  out.p_upper = static_cast<double>(count_upper) / m;
  out.p_lower = static_cast<double>(count_lower) / m;

  out.mak_upper = 1.0 + std::min(mk.inf_term, 0.0);
  out.mak_lower = std::max(mk.sup_term, 0.0);
  return out;
}

CellTerms cell_terms_generic(const Theta& th, double z, std::size_t w, double c,
                             const FrontierConfig& cfg, bool need_lower,
                             const MakarovTerms& mk) {
  CellTerms out;
  const int m = cfg.u_cells;
  long count_upper = 0, count_lower = 0;
  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) / m;
    const Interval q1 = quantile_bounds(th, u, 1, w, c);
    const Interval q0 = quantile_bounds(th, u, 0, w, c);
    if (q1.lower - q0.upper <= z) ++count_upper;
    if (need_lower && q1.upper - q0.lower <= z) ++count_lower;
  }
  out.p_upper = static_cast<double>(count_upper) / m;
  out.p_lower = static_cast<double>(count_lower) / m;
  out.mak_upper = 1.0 + std::min(mk.inf_term, 0.0);
  out.mak_lower = std::max(mk.sup_term, 0.0);
  return out;
}

CellTerms cell_terms(const Theta& th, double z, std::size_t w, double c,
                     const FrontierConfig& cfg, bool need_lower) {
  const MakarovTerms mk = makarov_terms(th, z, w, c);
  if (mk.degenerate) {
    const double v = mk.degenerate_value;
    return {v, v, v, v};  // constant in t: rank and Makarov parts all equal v
  }
  if (const auto* ce = dynamic_cast<const CellEstimates*>(&th))
    return cell_terms_empirical(*ce, z, w, c, cfg, need_lower, mk);
  return cell_terms_generic(th, z, w, c, cfg, need_lower, mk);
}

// Unclipped ratio, capped where the denominator vanishes; the clipped
// frontier value is clip01 of this. The denominator is the gap between the
// arbitrary-dependence and rank-invariant upper bounds, which is nonnegative
// in population but can graze zero (or dip just below, through the rank-grid
// approximation); at or below the tolerance the numerator's sign settles
// membership: num > 0 means even arbitrary dependence satisfies the
// conclusion, num < 0 means even rank invariance fails it.
constexpr double kRatioCap = 1e3;

double raw_ratio_or_limit(double num, double denom, double tol, bool* undefined) {
  if (denom <= tol) {
    if (undefined) *undefined = true;
    if (num > tol) return kRatioCap;
    if (num < -tol) return -kRatioCap;
    return 0.0;
  }
  if (undefined) *undefined = false;
  return std::min(kRatioCap, std::max(-kRatioCap, num / denom));
}

}  // namespace

Claim Claim::dte(double z, double p_floor) {
  if (!(p_floor >= 0.0 && p_floor <= 1.0))
    throw std::invalid_argument("probability floor must be in [0,1]");
  Claim c;
  c.kind = Kind::dte_at_least;
  c.z = z;
  c.p_floor = p_floor;
  return c;
}

Claim Claim::ate(double mu) {
  Claim c;
  c.kind = Kind::ate_at_least;
  c.mu = mu;
  return c;
}

Claim Claim::joint_and(std::vector<Claim> members) {
  if (members.empty()) throw std::invalid_argument("joint claim needs members");
  Claim c;
  c.kind = Kind::joint_and;
  c.members = std::move(members);
  return c;
}

Claim Claim::joint_or(std::vector<Claim> members) {
  if (members.empty()) throw std::invalid_argument("joint claim needs members");
  Claim c;
  c.kind = Kind::joint_or;
  c.members = std::move(members);
  return c;
}

std::string Claim::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::dte_at_least:
      os << "P(Y1-Y0>" << z << ")>=" << p_floor;
      break;
    case Kind::ate_at_least:
      os << "ATE>=" << mu;
      break;
    case Kind::joint_and:
    case Kind::joint_or: {
      const char* sep = kind == Kind::joint_and ? " and " : " or ";
      for (std::size_t i = 0; i < members.size(); ++i)
        os << (i ? sep : "") << members[i].describe();
      break;
    }
  }
  return os.str();
}

std::vector<double> u_midpoints(int u_cells) {
  if (u_cells < 1) throw std::invalid_argument("need at least one u cell");
  std::vector<double> u(u_cells);
  for (int i = 0; i < u_cells; ++i) u[i] = (i + 0.5) / u_cells;
  return u;
}

double pr_measure(const std::vector<double>& f_on_grid, double z) {
  if (f_on_grid.empty()) throw std::invalid_argument("empty grid");
  long count = 0;
  for (double v : f_on_grid)
    if (v <= z) ++count;
  return static_cast<double>(count) / f_on_grid.size();
}

double prerearrangement(const Theta& th, double z, std::size_t w, double c,
                        Side side, int u_cells) {
  std::vector<double> f(u_cells);
  for (int i = 0; i < u_cells; ++i) {
    const double u = (i + 0.5) / u_cells;
    const Interval q1 = quantile_bounds(th, u, 1, w, c);
    const Interval q0 = quantile_bounds(th, u, 0, w, c);
    f[i] = side == Side::upper ? q1.lower - q0.upper : q1.upper - q0.lower;
  }
  return pr_measure(f, z);
}

MakarovTerms makarov_terms(const Theta& th, double z, std::size_t w, double c) {
  const auto [l1, h1] = th.support(1, w);
  const auto [l0, h0] = th.support(0, w);
  const double lo = std::max(l1, l0 + z);
  const double hi = std::min(h1, h0 + z);
  MakarovTerms out;
  if (lo > hi) {
    out.degenerate = true;
    out.degenerate_value = (z > h1 - l0) ? 1.0 : 0.0;
    return out;
  }
  std::vector<double> sites;
  th.makarov_sites(w, z, lo, hi, sites);
  double sup_term = -std::numeric_limits<double>::infinity();
  double inf_term = std::numeric_limits<double>::infinity();
  for (double y : sites) {
    const Interval f1 = cdf_bounds(th, y, 1, w, c);
    const Interval f0 = cdf_bounds(th, y - z, 0, w, c);
    sup_term = std::max(sup_term, f1.lower - f0.upper);
    inf_term = std::min(inf_term, f1.upper - f0.lower);
  }
  out.sup_term = sup_term;
  out.inf_term = inf_term;
  return out;
}

Interval cdte_bounds(const Theta& th, double z, std::size_t w, double c, double t,
                     const FrontierConfig& cfg) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t must be in [0,1]");
  const CellTerms terms = cell_terms(th, z, w, c, cfg, /*need_lower=*/true);
  return {(1.0 - t) * terms.p_lower + t * terms.mak_lower,
          (1.0 - t) * terms.p_upper + t * terms.mak_upper};
}

Interval dte_bounds(const Theta& th, double z, double c, double t,
                    const FrontierConfig& cfg) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t must be in [0,1]");
  Interval total{0.0, 0.0};
  for (std::size_t w = 0; w < th.cell_count(); ++w) {
    const CellTerms terms = cell_terms(th, z, w, c, cfg, /*need_lower=*/true);
    total.lower += th.cell_mass(w) * ((1.0 - t) * terms.p_lower + t * terms.mak_lower);
    total.upper += th.cell_mass(w) * ((1.0 - t) * terms.p_upper + t * terms.mak_upper);
  }
  return total;
}

FrontierTerms frontier_terms(const Theta& th, double z, double c,
                             const FrontierConfig& cfg, bool need_lower) {
  FrontierTerms agg;
  for (std::size_t w = 0; w < th.cell_count(); ++w) {
    const CellTerms terms = cell_terms(th, z, w, c, cfg, need_lower);
    const double q = th.cell_mass(w);
    agg.p_upper += q * terms.p_upper;
    agg.p_lower += q * terms.p_lower;
    agg.mak_upper += q * terms.mak_upper;
    agg.mak_lower += q * terms.mak_lower;
  }
  return agg;
}

FrontierCurve breakdown_frontier(const Theta& th, const Claim& claim,
                                 std::vector<double> c_grid,
                                 const FrontierConfig& cfg) {
  if (c_grid.empty()) throw std::invalid_argument("empty sensitivity grid");
  if (!std::is_sorted(c_grid.begin(), c_grid.end()))
    throw std::invalid_argument("sensitivity grid must be sorted");
  if (!(c_grid.back() < th.min_propensity()))
    throw std::invalid_argument("sensitivity grid exceeds identification region");

  FrontierCurve fc;
  fc.c_grid = std::move(c_grid);
  const std::size_t J = fc.c_grid.size();
  fc.t_values.resize(J);
  fc.raw_values.resize(J);

  switch (claim.kind) {
    case Claim::Kind::dte_at_least: {
      for (std::size_t j = 0; j < J; ++j) {
        const FrontierTerms agg =
            frontier_terms(th, claim.z, fc.c_grid[j], cfg, /*need_lower=*/false);
        const double num = 1.0 - claim.p_floor - agg.p_upper;
        const double denom = agg.mak_upper - agg.p_upper;
        bool undefined = false;
        fc.raw_values[j] = raw_ratio_or_limit(num, denom, cfg.denom_tol, &undefined);
        fc.t_values[j] = clip01(fc.raw_values[j]);
        if (undefined) fc.undefined_points.push_back(j);
      }
      break;
    }
    case Claim::Kind::ate_at_least: {
      const TauGrid grid(cfg.tau_interior);
      const BreakdownPoint bp =
          ate_breakdown_point(th, claim.mu, fc.c_grid.back() > 0.0
                                                ? fc.c_grid.back()
                                                : 0.5 * th.min_propensity(),
                              cfg.bisect_tol, grid);
      fc.ate_point = bp;
      for (std::size_t j = 0; j < J; ++j) {
        const bool inside = bp.degenerate ? false : fc.c_grid[j] <= bp.c_star;
        fc.t_values[j] = inside ? 1.0 : 0.0;
        fc.raw_values[j] = fc.t_values[j];
      }
      break;
    }
    case Claim::Kind::joint_and:
    case Claim::Kind::joint_or: {
      const bool take_min = claim.kind == Claim::Kind::joint_and;
      std::fill(fc.t_values.begin(), fc.t_values.end(), take_min ? 1.0 : 0.0);
      std::fill(fc.raw_values.begin(), fc.raw_values.end(),
                take_min ? kRatioCap : -kRatioCap);
      for (const Claim& member : claim.members) {
        const FrontierCurve part = breakdown_frontier(th, member, fc.c_grid, cfg);
        for (std::size_t j = 0; j < J; ++j) {
          fc.t_values[j] = take_min ? std::min(fc.t_values[j], part.t_values[j])
                                    : std::max(fc.t_values[j], part.t_values[j]);
          fc.raw_values[j] = take_min
                                 ? std::min(fc.raw_values[j], part.raw_values[j])
                                 : std::max(fc.raw_values[j], part.raw_values[j]);
        }
        for (std::size_t idx : part.undefined_points) fc.undefined_points.push_back(idx);
      }
      std::sort(fc.undefined_points.begin(), fc.undefined_points.end());
      fc.undefined_points.erase(
          std::unique(fc.undefined_points.begin(), fc.undefined_points.end()),
          fc.undefined_points.end());
      break;
    }
  }
  return fc;
}

double frontier_raw_value(const Theta& th, const Claim& claim, double c,
                          const FrontierConfig& cfg) {
  switch (claim.kind) {
    case Claim::Kind::dte_at_least: {
      const FrontierTerms agg = frontier_terms(th, claim.z, c, cfg, false);
      const double num = 1.0 - claim.p_floor - agg.p_upper;
      const double denom = agg.mak_upper - agg.p_upper;
      return raw_ratio_or_limit(num, denom, cfg.denom_tol, nullptr);
    }
    case Claim::Kind::ate_at_least: {
      const TauGrid grid(cfg.tau_interior);
      return ate_bounds(th, c, grid).lower >= claim.mu ? kRatioCap : -kRatioCap;
    }
    case Claim::Kind::joint_and: {
      double v = kRatioCap;
      for (const Claim& member : claim.members)
        v = std::min(v, frontier_raw_value(th, member, c, cfg));
      return v;
    }
    case Claim::Kind::joint_or: {
      double v = -kRatioCap;
      for (const Claim& member : claim.members)
        v = std::max(v, frontier_raw_value(th, member, c, cfg));
      return v;
    }
  }
  return 0.0;
}

double frontier_value(const Theta& th, const Claim& claim, double c,
                      const FrontierConfig& cfg) {
  return clip01(frontier_raw_value(th, claim, c, cfg));
}

double robust_region_area(const FrontierCurve& fc) {
  if (fc.c_grid.size() < 2 || !(fc.c_grid.back() > 0.0)) return 0.0;
  double area = 0.0;
  for (std::size_t j = 1; j < fc.c_grid.size(); ++j)
    area += 0.5 * (fc.t_values[j] + fc.t_values[j - 1]) *
            (fc.c_grid[j] - fc.c_grid[j - 1]);
  return area / fc.c_grid.back();
}

double directional_breakdown_point(const Theta& th, const Claim& claim, double dc,
                                   double dt, double c_cap, double tol,
                                   const FrontierConfig& cfg) {
  if (dc < 0.0 || dt < 0.0 || (dc == 0.0 && dt == 0.0))
    throw std::invalid_argument("direction must be nonzero with nonnegative parts");
  double m_cap = std::numeric_limits<double>::infinity();
  if (dc > 0.0) m_cap = std::min(m_cap, c_cap / dc);
  if (dt > 0.0) m_cap = std::min(m_cap, 1.0 / dt);

  auto inside = [&](double m) {
    return m * dt <= frontier_raw_value(th, claim, m * dc, cfg);
  };
  if (!inside(0.0)) return 0.0;
  if (inside(m_cap)) return m_cap;
  double lo = 0.0, hi = m_cap;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> make_c_grid(const GridSpec& spec, double min_propensity) {
  if (spec.points < 1) throw std::invalid_argument("grid needs at least one point");
  const double c_bar =
      spec.upper_abs ? *spec.upper_abs : spec.upper_frac * min_propensity;
  if (!(c_bar > 0.0 && c_bar < min_propensity))
    throw std::invalid_argument("grid upper end must lie in (0, min propensity)");

  std::vector<double> grid;
  grid.reserve(spec.points + spec.extra_points.size());
  if (spec.jitter_seed) {
    Rng rng(*spec.jitter_seed);
    for (int j = 0; j < spec.points; ++j) grid.push_back(rng.uniform01() * c_bar);
  } else {
    for (int j = 0; j < spec.points; ++j)
      grid.push_back(spec.points == 1 ? c_bar
                                      : c_bar * j / (spec.points - 1));
  }
  for (double extra : spec.extra_points)
    if (extra >= 0.0 && extra <= c_bar) grid.push_back(extra);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace bfrontier

#include "bfrontier/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "bfrontier/empirical.hpp"
#include "bfrontier/parallel.hpp"
#include "bfrontier/rng.hpp"

namespace bfrontier {

namespace {

const boost::math::normal_distribution<double> kStdNormal;

double norm_cdf(double x) { return boost::math::cdf(kStdNormal, x); }
double norm_quantile(double p) { return boost::math::quantile(kStdNormal, p); }

double arm_scale(const McDgp& dgp, int x) { return dgp.scale_offset * x + 1.0; }
double arm_shift(const McDgp& dgp, int x) { return dgp.shift * x; }

}  // namespace

Dataset dgp_sample(const McDgp& dgp, std::size_t n, std::uint64_t seed) {
  if (!(dgp.scale_offset > -1.0)) throw std::invalid_argument("scale offset must exceed -1");
  if (!(dgp.trunc_lo < dgp.trunc_hi)) throw std::invalid_argument("bad truncation range");
  const double lo_cdf = norm_cdf(dgp.trunc_lo);
  const double hi_cdf = norm_cdf(dgp.trunc_hi);
  Rng rng(seed);
  std::vector<double> y(n);
  std::vector<int> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform01() < dgp.p_treat ? 1 : 0;
    const double u = rng.uniform01();
    const double zval = norm_quantile(lo_cdf + u * (hi_cdf - lo_cdf));
    y[i] = arm_shift(dgp, x[i]) + arm_scale(dgp, x[i]) * zval;
  }
  return Dataset::from_records(std::move(y), std::move(x), {});
}

PopulationDgp::PopulationDgp(const McDgp& dgp, int makarov_grid)
    : dgp_(dgp), grid_(makarov_grid) {
  if (makarov_grid < 2) throw std::invalid_argument("grid too small");
  z_lo_cdf_ = norm_cdf(dgp_.trunc_lo);
  z_hi_cdf_ = norm_cdf(dgp_.trunc_hi);
}

double PopulationDgp::propensity(int x, std::size_t) const {
  return x == 1 ? dgp_.p_treat : 1.0 - dgp_.p_treat;
}

double PopulationDgp::cdf(double y, int x, std::size_t) const {
  const double t = (y - arm_shift(dgp_, x)) / arm_scale(dgp_, x);
  if (t <= dgp_.trunc_lo) return 0.0;
  if (t >= dgp_.trunc_hi) return 1.0;
  return (norm_cdf(t) - z_lo_cdf_) / (z_hi_cdf_ - z_lo_cdf_);
}

double PopulationDgp::quantile(double tau, int x, std::size_t) const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  const double zval = norm_quantile(z_lo_cdf_ + tau * (z_hi_cdf_ - z_lo_cdf_));
  return arm_shift(dgp_, x) + arm_scale(dgp_, x) * zval;
}

std::pair<double, double> PopulationDgp::support(int x, std::size_t) const {
  return {arm_shift(dgp_, x) + arm_scale(dgp_, x) * dgp_.trunc_lo,
          arm_shift(dgp_, x) + arm_scale(dgp_, x) * dgp_.trunc_hi};
}

void PopulationDgp::makarov_sites(std::size_t, double, double lo, double hi,
                                  std::vector<double>& out) const {
  out.resize(grid_);
  for (int i = 0; i < grid_; ++i)
    out[i] = lo + (hi - lo) * i / (grid_ - 1);
}

double PopulationDgp::mean(int x) const {
  // truncated standard normal mean: (phi(lo) - phi(hi)) / (Phi(hi) - Phi(lo))
  const double phi_lo = boost::math::pdf(kStdNormal, dgp_.trunc_lo);
  const double phi_hi = boost::math::pdf(kStdNormal, dgp_.trunc_hi);
  const double zmean = (phi_lo - phi_hi) / (z_hi_cdf_ - z_lo_cdf_);
  return arm_shift(dgp_, x) + arm_scale(dgp_, x) * zmean;
}

FrontierCurve population_frontier(const McDgp& dgp, const Claim& claim,
                                  const std::vector<double>& c_grid,
                                  const FrontierConfig& cfg) {
  const PopulationDgp pop(dgp);
  return breakdown_frontier(pop, claim, c_grid, cfg);
}

double population_death_point(const McDgp& dgp, const Claim& claim, double scan_max,
                              double step, const FrontierConfig& cfg) {
  const PopulationDgp pop(dgp);
  if (!(scan_max > 0.0)) scan_max = 0.98 * pop.min_propensity();
  double last = 0.0;
  for (double c = 0.0; c <= scan_max; c += step)
    if (frontier_value(pop, claim, c, cfg) > 0.0) last = c;
  return last;
}

namespace {

double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
  double a = 0.0;
  for (std::size_t j = 1; j < xs.size(); ++j)
    a += 0.5 * (ys[j] + ys[j - 1]) * (xs[j] - xs[j - 1]);
  return a;
}

}  // namespace

std::vector<CoverageRow> coverage_study(const McDgp& dgp,
                                        const std::vector<double>& p_floors,
                                        const std::vector<double>& eps_ratios,
                                        const CoverageStudyConfig& cc,
                                        const FrontierConfig& fcfg) {
  if (p_floors.empty() || eps_ratios.empty())
    throw std::invalid_argument("empty study grid");
  const PopulationDgp pop(dgp);
  const std::size_t K = eps_ratios.size();
  const std::size_t P = p_floors.size();
  const double root_n = std::sqrt(static_cast<double>(cc.sample_size));

  // Per-claim windows: each claim is studied where its population frontier
  // lives. Bands are not informative far past the frontier's death point;
  // the window end is a fixed fraction of that point.
  std::vector<double> window(P, 0.0);
  if (cc.death_frac > 0.0)
    for (std::size_t p = 0; p < P; ++p)
      window[p] =
          cc.death_frac * population_death_point(dgp, Claim::dte(cc.z, p_floors[p]),
                                                 0.0, 0.002, fcfg);

  // covered[k][p][s], ratio[k][p][s]
  std::vector<std::vector<std::vector<char>>> covered(
      K, std::vector<std::vector<char>>(P, std::vector<char>(cc.simulations, 0)));
  std::vector<std::vector<std::vector<double>>> ratio(
      K, std::vector<std::vector<double>>(P, std::vector<double>(cc.simulations, 0.0)));

  parallel_for(cc.simulations, cc.threads, [&](std::size_t s) {
    const std::uint64_t seed_s = derive_seed(cc.seed, s);
    const Dataset ds = dgp_sample(dgp, cc.sample_size, seed_s);
    const CellEstimates base = estimate_theta(ds);
    GridSpec gs;
    gs.points = cc.grid_points;
    gs.upper_frac = cc.grid_frac;
    if (cc.grid_abs > 0.0) gs.upper_abs = cc.grid_abs;
    const std::vector<double> probe_grid = make_c_grid(gs, base.min_propensity());

    // Claim-independent ingredients of the frontier on a grid, for the
    // estimate and for each perturbed parameter.
    auto upper_terms = [&](const Theta& th, const std::vector<double>& grid) {
      std::vector<std::pair<double, double>> terms(grid.size());
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const FrontierTerms agg = frontier_terms(th, cc.z, grid[j], fcfg, false);
        terms[j] = {agg.p_upper, agg.mak_upper};
      }
      return terms;
    };
    // pre-clip ratio (capped where the denominator vanishes) and its clip
    auto raw_of = [&](const std::vector<std::pair<double, double>>& terms,
                      double p_floor) {
      std::vector<double> t(terms.size());
      for (std::size_t j = 0; j < terms.size(); ++j) {
        const double num = 1.0 - p_floor - terms[j].first;
        const double denom = terms[j].second - terms[j].first;
        if (denom <= fcfg.denom_tol)
          t[j] = num > fcfg.denom_tol ? 1e3 : (num < -fcfg.denom_tol ? -1e3 : 0.0);
        else
          t[j] = std::min(1e3, std::max(-1e3, num / denom));
      }
      return t;
    };
    auto clip_of = [](const std::vector<double>& raw) {
      std::vector<double> t(raw.size());
      for (std::size_t j = 0; j < raw.size(); ++j)
        t[j] = std::min(1.0, std::max(0.0, raw[j]));
      return t;
    };

    std::vector<std::vector<double>> grids(P), truth(P), base_front(P), base_raw(P);
    for (std::size_t p = 0; p < P; ++p) {
      const double c_end =
          window[p] > 0.0 ? std::min(window[p], probe_grid.back()) : probe_grid.back();
      auto& grid = grids[p];
      grid.resize(cc.grid_points);
      for (int j = 0; j < cc.grid_points; ++j)
        grid[j] = c_end * j / (cc.grid_points - 1);
      const auto pop_terms = upper_terms(pop, grid);
      const auto base_terms = upper_terms(base, grid);
      truth[p] = clip_of(raw_of(pop_terms, p_floors[p]));
      base_raw[p] = raw_of(base_terms, p_floors[p]);
      base_front[p] = clip_of(base_raw[p]);
    }

    // One resample set per epsilon (the perturbation depends on epsilon),
    // shared across claims.
    for (std::size_t k = 0; k < K; ++k) {
      const double eps = eps_ratios[k] / root_n;
      const double scale = eps * root_n;  // = ratio
      std::vector<std::vector<std::vector<double>>> rows(
          P, std::vector<std::vector<double>>());
      std::vector<int> flagged(P, 0);
      for (int b = 0; b < cc.replications; ++b) {
        const std::uint64_t seed_b = derive_seed(derive_seed(seed_s, 7919), b);
        CellEstimates star;
        try {
          const auto idx_ds = bootstrap_resample(ds, seed_b);
          star = estimate_theta(idx_ds);
        } catch (const std::runtime_error&) {
          for (std::size_t p = 0; p < P; ++p) ++flagged[p];
          continue;
        }
        for (std::size_t p = 0; p < P; ++p) {
          bool ok = true;
          const CellEstimates pert =
              perturb_theta(base, star, scale, grids[p].back(), ok);
          if (!ok) {
            ++flagged[p];
            continue;
          }
          const auto pert_terms = upper_terms(pert, grids[p]);
          const auto t = raw_of(pert_terms, p_floors[p]);
          std::vector<double> row(grids[p].size());
          for (std::size_t j = 0; j < grids[p].size(); ++j)
            row[j] = (t[j] - base_raw[p][j]) / eps;
          rows[p].push_back(std::move(row));
        }
      }
      for (std::size_t p = 0; p < P; ++p) {
        if (rows[p].empty()) continue;
        FrontierCurve fc;
        fc.c_grid = grids[p];
        fc.t_values = base_front[p];
        DeltaDraws draws;
        draws.rows = std::move(rows[p]);
        draws.flagged = flagged[p];
        const BandResult band =
            min_area_band(fc, draws, cc.alpha, cc.sample_size,
                          BootstrapConfig::SigmaMode::estimated_min_area);
        bool below = true;
        for (std::size_t j = 0; j < grids[p].size(); ++j)
          if (band.lower_band[j] > truth[p][j] + 1e-12) {
            below = false;
            break;
          }
        covered[k][p][s] = below;
        const double frontier_area = trapezoid(grids[p], base_front[p]);
        const double band_area = trapezoid(grids[p], band.lower_band);
        ratio[k][p][s] = frontier_area > 0.0 ? band_area / frontier_area : 1.0;
      }
    }
  });

  std::vector<CoverageRow> out;
  out.reserve(K * P);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t p = 0; p < P; ++p) {
      CoverageRow row;
      row.sample_size = cc.sample_size;
      row.epsilon_ratio = eps_ratios[k];
      row.epsilon = eps_ratios[k] / root_n;
      row.p_floor = p_floors[p];
      double cov = 0.0, ar = 0.0;
      for (int s = 0; s < cc.simulations; ++s) {
        cov += covered[k][p][s];
        ar += ratio[k][p][s];
      }
      row.coverage = cov / cc.simulations;
      row.area_ratio = ar / cc.simulations;
      out.push_back(row);
    }
  return out;
}

BiasStudy bias_study(const McDgp& dgp, const Claim& claim, std::size_t sample_size,
                     int simulations, std::uint64_t seed, const FrontierConfig& fcfg,
                     unsigned threads, int grid_points, double grid_frac) {
  const PopulationDgp pop(dgp);
  GridSpec gs;
  gs.points = grid_points;
  gs.upper_frac = grid_frac;
  return bias_study_on_grid(dgp, claim, sample_size, simulations, seed,
                            make_c_grid(gs, pop.min_propensity()), fcfg, threads);
}

BiasStudy bias_study_on_grid(const McDgp& dgp, const Claim& claim,
                             std::size_t sample_size, int simulations,
                             std::uint64_t seed, std::vector<double> c_grid_in,
                             const FrontierConfig& fcfg, unsigned threads) {
  if (simulations < 1) throw std::invalid_argument("need at least one simulation");
  const PopulationDgp pop(dgp);
  const std::vector<double> c_grid = std::move(c_grid_in);

  std::vector<std::vector<double>> curves(simulations);
  parallel_for(simulations, threads, [&](std::size_t s) {
    const Dataset ds = dgp_sample(dgp, sample_size, derive_seed(seed, s));
    bool changed = false;
    const CellEstimates base =
        clamp_propensities(estimate_theta(ds), c_grid.back(), changed);
    curves[s] = breakdown_frontier(base, claim, c_grid, fcfg).t_values;
  });

  BiasStudy out;
  out.c_grid = c_grid;
  out.simulations = simulations;
  out.population = breakdown_frontier(pop, claim, c_grid, fcfg).t_values;
  out.mean_frontier.assign(c_grid.size(), 0.0);
  out.mc_se.assign(c_grid.size(), 0.0);
  for (const auto& curve : curves)
    for (std::size_t j = 0; j < c_grid.size(); ++j) out.mean_frontier[j] += curve[j];
  for (double& v : out.mean_frontier) v /= simulations;
  if (simulations > 1) {
    for (const auto& curve : curves)
      for (std::size_t j = 0; j < c_grid.size(); ++j) {
        const double d = curve[j] - out.mean_frontier[j];
        out.mc_se[j] += d * d;
      }
    for (double& v : out.mc_se)
      v = std::sqrt(v / (simulations - 1) / simulations);
  }
  return out;
}

}  // namespace bfrontier

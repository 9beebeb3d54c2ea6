#include "bfrontier/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "bfrontier/parallel.hpp"
#include "bfrontier/rng.hpp"

namespace bfrontier {

namespace {

constexpr double kPropEps = 1e-6;

// Sample-analog estimate from resampled row indices without materializing a
// Dataset; identical to estimate_theta(bootstrap_resample(...)) for draws
// that satisfy overlap.
CellEstimates estimate_from_indices(const Dataset& ds,
                                    const std::vector<std::uint32_t>& idx,
                                    bool* overlap_ok) {
  const std::size_t cells = ds.cell_count();
  std::vector<std::array<std::vector<double>, 2>> samples(cells);
  for (std::uint32_t j : idx) samples[ds.cell[j]][ds.x[j]].push_back(ds.y[j]);

  if (overlap_ok) {
    *overlap_ok = true;
    for (const auto& cell : samples)
      if (cell[0].empty() || cell[1].empty()) {
        *overlap_ok = false;
        return CellEstimates();
      }
  }

  std::vector<std::array<ArmCell, 2>> arms(cells);
  std::vector<std::array<double, 2>> prop(cells);
  std::vector<double> mass(cells);
  for (std::size_t w = 0; w < cells; ++w) {
    const std::size_t n0 = samples[w][0].size();
    const std::size_t n1 = samples[w][1].size();
    mass[w] = static_cast<double>(n0 + n1) / idx.size();
    prop[w][1] = static_cast<double>(n1) / (n0 + n1);
    prop[w][0] = 1.0 - prop[w][1];
    for (int x = 0; x < 2; ++x) {
      auto& ys = samples[w][x];
      std::sort(ys.begin(), ys.end());
      ArmCell arm;
      for (std::size_t i = 0; i < ys.size(); ++i) {
        if (i + 1 < ys.size() && ys[i + 1] == ys[i]) continue;
        arm.values.push_back(ys[i]);
        arm.cdf.push_back(static_cast<double>(i + 1) / ys.size());
      }
      arms[w][x] = std::move(arm);
    }
  }
  return CellEstimates::assemble(ds.cell_values, std::move(arms), std::move(prop),
                                 std::move(mass), idx.size());
}

// Right-Riemann weights over the grid; the first point carries no width.
std::vector<double> riemann_weights(const std::vector<double>& c_grid) {
  std::vector<double> w(c_grid.size(), 0.0);
  for (std::size_t j = 1; j < c_grid.size(); ++j) w[j] = c_grid[j] - c_grid[j - 1];
  return w;
}

// Area (in draw units) of the nonnegative componentwise-max envelope of the
// kept draws.
double envelope_area(const std::vector<std::vector<double>>& rows,
                     const std::vector<char>& kept, const std::vector<double>& w) {
  const std::size_t J = w.size();
  double area = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (w[j] == 0.0) continue;
    double m = 0.0;
    for (std::size_t b = 0; b < rows.size(); ++b)
      if (kept[b]) m = std::max(m, rows[b][j]);
    area += w[j] * m;
  }
  return area;
}

std::vector<double> envelope_of(const std::vector<std::vector<double>>& rows,
                                const std::vector<char>& kept, std::size_t J) {
  std::vector<double> env(J, 0.0);
  for (std::size_t b = 0; b < rows.size(); ++b)
    if (kept[b])
      for (std::size_t j = 0; j < J; ++j) env[j] = std::max(env[j], rows[b][j]);
  return env;
}

struct ColumnStats {
  std::vector<double> max1, max2;  // top two kept values (floored at 0)
  std::vector<int> count_at_max;   // kept rows attaining max1
};

ColumnStats column_stats(const std::vector<std::vector<double>>& rows,
                         const std::vector<char>& kept, std::size_t J) {
  ColumnStats s;
  s.max1.assign(J, 0.0);
  s.max2.assign(J, 0.0);
  s.count_at_max.assign(J, 0);
  for (std::size_t j = 0; j < J; ++j) {
    double m1 = -std::numeric_limits<double>::infinity();
    double m2 = m1;
    int cnt = 0;
    for (std::size_t b = 0; b < rows.size(); ++b) {
      if (!kept[b]) continue;
      const double v = rows[b][j];
      if (v > m1) {
        m2 = m1;
        m1 = v;
        cnt = 1;
      } else if (v == m1) {
        ++cnt;
      } else if (v > m2) {
        m2 = v;
      }
    }
    s.max1[j] = std::max(0.0, m1);
    s.max2[j] = std::max(0.0, m2);
    s.count_at_max[j] = cnt;
  }
  return s;
}

// Greedy removal: drop `removals` draws, each time the one whose removal
// shrinks the envelope area the most.
std::vector<char> greedy_removal(const std::vector<std::vector<double>>& rows,
                                 const std::vector<double>& w, int removals) {
  const std::size_t B = rows.size();
  const std::size_t J = w.size();
  std::vector<char> kept(B, 1);
  for (int step = 0; step < removals; ++step) {
    const ColumnStats s = column_stats(rows, kept, J);
    double best_area = std::numeric_limits<double>::infinity();
    std::size_t best_b = B;
    for (std::size_t b = 0; b < B; ++b) {
      if (!kept[b]) continue;
      double area = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        if (w[j] == 0.0) continue;
        double m = s.max1[j];
        if (rows[b][j] >= s.max1[j] && s.count_at_max[j] == 1 && rows[b][j] > 0.0)
          m = s.max2[j];
        area += w[j] * m;
      }
      if (area < best_area) {
        best_area = area;
        best_b = b;
      }
    }
    kept[best_b] = 0;
  }
  return kept;
}

// Exact enumeration over uncovered-draw subsets; affordable only when
// choose(B, drop) is small.
bool exhaustive_solution(const std::vector<std::vector<double>>& rows,
                         const std::vector<double>& w, int removals,
                         std::vector<char>& kept_out) {
  const std::size_t B = rows.size();
  double combos = 1.0;
  for (int i = 0; i < removals; ++i) combos *= static_cast<double>(B - i) / (i + 1);
  if (combos > 20000.0) return false;

  std::vector<char> kept(B, 1);
  std::vector<char> best_kept;
  double best_area = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, int)> rec = [&](std::size_t start, int left) {
    if (left == 0) {
      const double area = envelope_area(rows, kept, w);
      if (area < best_area) {
        best_area = area;
        best_kept = kept;
      }
      return;
    }
    for (std::size_t b = start; b + left <= B; ++b) {
      kept[b] = 0;
      rec(b + 1, left - 1);
      kept[b] = 1;
    }
  };
  rec(0, removals);
  kept_out = std::move(best_kept);
  return true;
}

// Pairwise exchange refinement: swap one removed draw back in for one kept
// draw whenever that strictly shrinks the area; repeat until stable.
void exchange_refine(const std::vector<std::vector<double>>& rows,
                     const std::vector<double>& w, std::vector<char>& kept) {
  const std::size_t B = rows.size();
  const std::size_t J = w.size();
  const int max_passes = 1000;
  for (int pass = 0; pass < max_passes; ++pass) {
    const ColumnStats s = column_stats(rows, kept, J);
    double current = 0.0;
    for (std::size_t j = 0; j < J; ++j) current += w[j] * s.max1[j];

    double best_area = current;
    std::size_t best_out = B, best_in = B;
    for (std::size_t out = 0; out < B; ++out) {
      if (!kept[out]) continue;
      for (std::size_t in = 0; in < B; ++in) {
        if (kept[in]) continue;
        double area = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
          if (w[j] == 0.0) continue;
          double m = s.max1[j];
          if (rows[out][j] >= s.max1[j] && s.count_at_max[j] == 1 &&
              rows[out][j] > 0.0)
            m = s.max2[j];
          m = std::max(m, std::max(0.0, rows[in][j]));
          area += w[j] * m;
        }
        if (area < best_area) {
          best_area = area;
          best_out = out;
          best_in = in;
        }
      }
    }
    if (best_out == B) return;
    kept[best_out] = 0;
    kept[best_in] = 1;
  }
}

}  // namespace

CellEstimates clamp_propensities(const CellEstimates& ce, double c_cap, bool& changed) {
  const double lo = c_cap + kPropEps;
  const double hi = 1.0 - c_cap - kPropEps;
  if (!(lo < hi))
    throw std::runtime_error("no identifiable propensity range for this grid");
  changed = false;
  std::vector<std::array<double, 2>> prop(ce.cell_count());
  std::vector<std::array<ArmCell, 2>> arms(ce.cell_count());
  std::vector<double> mass(ce.cell_count());
  std::vector<std::vector<double>> keys(ce.cell_count());
  for (std::size_t w = 0; w < ce.cell_count(); ++w) {
    double p1 = ce.propensity(1, w);
    const double clamped = std::min(hi, std::max(lo, p1));
    if (clamped != p1) changed = true;
    prop[w] = {1.0 - clamped, clamped};
    arms[w] = {ce.arm(0, w), ce.arm(1, w)};
    mass[w] = ce.cell_mass(w);
    keys[w] = ce.cell_key(w);
  }
  if (!changed) return ce;
  return CellEstimates::assemble(std::move(keys), std::move(arms), std::move(prop),
                                 std::move(mass), ce.sample_size());
}

CellEstimates perturb_theta(const CellEstimates& base, const CellEstimates& star,
                            double scale, double c_cap, bool& ok) {
  if (base.cell_count() != star.cell_count())
    throw std::invalid_argument("cell structure mismatch between estimates");
  ok = true;
  const std::size_t cells = base.cell_count();
  std::vector<std::array<ArmCell, 2>> arms(cells);
  std::vector<std::array<double, 2>> prop(cells);
  std::vector<double> mass(cells);
  std::vector<std::vector<double>> keys(cells);

  const double p_lo = c_cap + kPropEps;
  const double p_hi = 1.0 - c_cap - kPropEps;
  if (!(p_lo < p_hi)) {
    ok = false;
    return base;
  }

  // at scale exactly 1 the perturbed parameter IS the resampled estimate;
  // snapping keeps the plain-bootstrap identity exact through the step
  // functions' discontinuities
  const bool exact_star = std::fabs(scale - 1.0) < 1e-12;

  double mass_total = 0.0;
  for (std::size_t w = 0; w < cells; ++w) {
    keys[w] = base.cell_key(w);
    for (int x = 0; x < 2; ++x) {
      const ArmCell& b = base.arm(x, w);
      ArmCell pert;
      pert.values = b.values;
      pert.cdf.resize(b.cdf.size());
      for (std::size_t i = 0; i < b.cdf.size(); ++i) {
        const double fstar = star.cdf(b.values[i], x, w);
        const double v = exact_star ? fstar : b.cdf[i] + scale * (fstar - b.cdf[i]);
        pert.cdf[i] = std::min(1.0, std::max(0.0, v));
      }
      // rearrange levels to restore monotonicity; the top level stays 1
      std::sort(pert.cdf.begin(), pert.cdf.end());
      arms[w][x] = std::move(pert);
    }
    const double p1 = base.propensity(1, w) +
                      scale * (star.propensity(1, w) - base.propensity(1, w));
    const double p1c = std::min(p_hi, std::max(p_lo, p1));
    prop[w] = {1.0 - p1c, p1c};
    const double q =
        base.cell_mass(w) + scale * (star.cell_mass(w) - base.cell_mass(w));
    mass[w] = std::max(0.0, q);
    mass_total += mass[w];
  }
  if (!(mass_total > 0.0)) {
    ok = false;
    return base;
  }
  for (auto& q : mass) q /= mass_total;
  return CellEstimates::assemble(std::move(keys), std::move(arms), std::move(prop),
                                 std::move(mass), base.sample_size());
}

std::vector<double> delta_draw(const CellEstimates& base, const CellEstimates& star,
                               double epsilon, const Claim& claim,
                               const std::vector<double>& c_grid,
                               const FrontierConfig& cfg, bool* admissible) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const double scale = epsilon * std::sqrt(static_cast<double>(base.sample_size()));
  bool ok = true;
  const CellEstimates pert = perturb_theta(base, star, scale, c_grid.back(), ok);
  if (admissible) *admissible = ok;
  if (!ok) return std::vector<double>(c_grid.size(), 0.0);
  const FrontierCurve base_fc = breakdown_frontier(base, claim, c_grid, cfg);
  const FrontierCurve pert_fc = breakdown_frontier(pert, claim, c_grid, cfg);
  std::vector<double> out(c_grid.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = (pert_fc.raw_values[j] - base_fc.raw_values[j]) / epsilon;
  return out;
}

DeltaDraws make_delta_draws(const Dataset& ds, const CellEstimates& base,
                            const std::vector<double>& base_raw,
                            const Claim& claim, const std::vector<double>& c_grid,
                            const BootstrapConfig& cfg, const FrontierConfig& fcfg) {
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (base_raw.size() != c_grid.size())
    throw std::invalid_argument("base frontier and grid sizes differ");
  const int B = cfg.replications;
  const double scale = cfg.epsilon * std::sqrt(static_cast<double>(ds.n()));

  std::vector<std::vector<double>> rows(B);
  std::vector<char> bad(B, 0);
  parallel_for(B, cfg.threads, [&](std::size_t b) {
    const std::uint64_t seed = derive_seed(cfg.seed, b);
    std::vector<std::uint32_t> idx;
    try {
      idx = bootstrap_indices(ds, seed, cfg.enforce_overlap);
    } catch (const std::runtime_error&) {
      bad[b] = 1;
      return;
    }
    bool overlap_ok = true;
    const CellEstimates star = estimate_from_indices(ds, idx, &overlap_ok);
    if (!overlap_ok) {
      bad[b] = 1;
      return;
    }
    bool ok = true;
    const CellEstimates pert = perturb_theta(base, star, scale, c_grid.back(), ok);
    if (!ok) {
      bad[b] = 1;
      return;
    }
    const FrontierCurve fc = breakdown_frontier(pert, claim, c_grid, fcfg);
    auto& row = rows[b];
    row.resize(c_grid.size());
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = (fc.raw_values[j] - base_raw[j]) / cfg.epsilon;
  });

  DeltaDraws out;
  out.rows.reserve(B);
  for (int b = 0; b < B; ++b) {
    if (bad[b]) {
      out.flagged++;
      continue;
    }
    out.rows.push_back(std::move(rows[b]));
  }
  return out;
}

std::size_t coverage_keep_count(std::size_t draw_count, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha in (0,1)");
  double raw = (1.0 - alpha) * static_cast<double>(draw_count);
  std::size_t keep = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  if (keep == 0) keep = 1;
  if (keep > draw_count) keep = draw_count;
  return keep;
}

double critical_value(const std::vector<std::vector<double>>& draws,
                      const std::vector<double>& sigma, double alpha) {
  if (draws.empty()) throw std::invalid_argument("no bootstrap draws");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("sigma must be positive");
  std::vector<double> sup_stats;
  sup_stats.reserve(draws.size());
  for (const auto& row : draws) {
    if (row.size() != sigma.size())
      throw std::invalid_argument("draw and sigma lengths differ");
    double s = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < row.size(); ++j) s = std::max(s, row[j] / sigma[j]);
    sup_stats.push_back(s);
  }
  std::sort(sup_stats.begin(), sup_stats.end());
  return sup_stats[coverage_keep_count(sup_stats.size(), alpha) - 1];
}

StepBand monotone_step_extension(const std::vector<double>& c_grid,
                                 const std::vector<double>& values, double c_bar) {
  if (c_grid.size() != values.size() || c_grid.empty())
    throw std::invalid_argument("grid and value sizes differ");
  if (!(c_bar >= c_grid.back()))
    throw std::invalid_argument("extension end below last grid point");
  return StepBand{c_grid, values, c_bar};
}

double StepBand::operator()(double c) const {
  if (c <= c_grid.front()) return values.front();
  auto it = std::lower_bound(c_grid.begin(), c_grid.end(), c);
  if (it == c_grid.end()) return 0.0;  // beyond the last grid point
  return values[static_cast<std::size_t>(it - c_grid.begin())];
}

double StepBand::area() const {
  double a = values.front() * c_grid.front();
  for (std::size_t j = 1; j < c_grid.size(); ++j)
    a += values[j] * (c_grid[j] - c_grid[j - 1]);
  return a;
}

BandResult min_area_band(const FrontierCurve& frontier, const DeltaDraws& draws,
                         double alpha, std::size_t sample_size,
                         BootstrapConfig::SigmaMode mode) {
  if (draws.rows.empty()) throw std::invalid_argument("no bootstrap draws");
  const std::size_t J = frontier.c_grid.size();
  const std::size_t B = draws.rows.size();
  const double root_n = std::sqrt(static_cast<double>(sample_size));

  std::vector<double> envelope(J, 0.0);
  if (mode == BootstrapConfig::SigmaMode::constant_one) {
    const double z = critical_value(draws.rows, std::vector<double>(J, 1.0), alpha);
    std::fill(envelope.begin(), envelope.end(), std::max(0.0, z));
  } else {
    const std::vector<double> w = riemann_weights(frontier.c_grid);
    const int removals = static_cast<int>(B - coverage_keep_count(B, alpha));

    // Exact where enumeration is affordable; otherwise greedy removal with
    // exchange refinement, taking the better of two starts. The baseline
    // start keeps the smallest-supremum draws, whose envelope never exceeds
    // the flat critical value, so the optimized band area is at most the
    // constant-sigma band's.
    std::vector<char> kept;
    if (!exhaustive_solution(draws.rows, w, removals, kept)) {
      std::vector<char> greedy = greedy_removal(draws.rows, w, removals);
      exchange_refine(draws.rows, w, greedy);

      std::vector<std::size_t> order(B);
      std::iota(order.begin(), order.end(), 0);
      std::vector<double> sup_stats(B);
      for (std::size_t b = 0; b < B; ++b)
        sup_stats[b] = *std::max_element(draws.rows[b].begin(), draws.rows[b].end());
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sup_stats[a] < sup_stats[b];
      });
      std::vector<char> baseline(B, 0);
      for (std::size_t i = 0; i + removals < B; ++i) baseline[order[i]] = 1;
      exchange_refine(draws.rows, w, baseline);

      kept = envelope_area(draws.rows, greedy, w) <=
                     envelope_area(draws.rows, baseline, w)
                 ? greedy
                 : baseline;
    }
    envelope = envelope_of(draws.rows, kept, J);
  }

  BandResult out;
  out.c_grid = frontier.c_grid;
  out.frontier = frontier.t_values;
  out.flagged_draws = draws.flagged;
  out.k_values.resize(J);
  out.lower_band.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    out.k_values[j] = envelope[j] / root_n;
    out.lower_band[j] = std::max(0.0, out.frontier[j] - out.k_values[j]);
  }
  long covered = 0;
  for (const auto& row : draws.rows) {
    bool ok = true;
    for (std::size_t j = 0; j < J; ++j)
      if (row[j] > envelope[j]) {
        ok = false;
        break;
      }
    covered += ok;
  }
  out.realized_coverage = static_cast<double>(covered) / B;
  out.area = monotone_step_extension(out.c_grid, out.lower_band,
                                     out.c_grid.back())
                 .area() /
             out.c_grid.back();
  return out;
}

BandResult build_band(const Dataset& ds, const CellEstimates& base,
                      const Claim& claim, const std::vector<double>& c_grid,
                      const BootstrapConfig& cfg, const FrontierConfig& fcfg) {
  const FrontierCurve fc = breakdown_frontier(base, claim, c_grid, fcfg);
  const DeltaDraws draws =
      make_delta_draws(ds, base, fc.raw_values, claim, c_grid, cfg, fcfg);
  return min_area_band(fc, draws, cfg.alpha, ds.n(), cfg.sigma_mode);
}

std::vector<std::array<double, 2>> smoothing_bandwidths(const Dataset& ds) {
  const std::size_t cells = ds.cell_count();
  std::vector<std::array<std::vector<double>, 2>> samples(cells);
  for (std::size_t i = 0; i < ds.n(); ++i)
    samples[ds.cell[i]][ds.x[i]].push_back(ds.y[i]);

  auto sd_of = [](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (v.size() - 1));
  };
  auto reference_h = [](double sd, std::size_t n) {
    return 0.5 * 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  };

  std::vector<std::array<double, 2>> h(cells);
  for (std::size_t w = 0; w < cells; ++w) {
    for (int x = 0; x < 2; ++x) {
      const auto& arm = samples[w][x];
      if (arm.size() >= 2) {
        h[w][x] = reference_h(sd_of(arm), arm.size());
      } else {
        // single-observation arm: fall back to the pooled cell
        std::vector<double> pooled = samples[w][0];
        pooled.insert(pooled.end(), samples[w][1].begin(), samples[w][1].end());
        h[w][x] = reference_h(sd_of(pooled), pooled.size());
      }
    }
  }
  return h;
}

CellEstimates smoothed_cdf_estimate(const Dataset& ds, int grid_points,
                                    double tail_widths) {
  if (grid_points < 2) throw std::invalid_argument("need at least 2 grid points");
  const auto h = smoothing_bandwidths(ds);
  const CellEstimates plain = estimate_theta(ds);
  const std::size_t cells = ds.cell_count();

  std::vector<std::array<std::vector<double>, 2>> samples(cells);
  for (std::size_t i = 0; i < ds.n(); ++i)
    samples[ds.cell[i]][ds.x[i]].push_back(ds.y[i]);

  std::vector<std::array<ArmCell, 2>> arms(cells);
  std::vector<std::array<double, 2>> prop(cells);
  std::vector<double> mass(cells);
  std::vector<std::vector<double>> keys(cells);
  for (std::size_t w = 0; w < cells; ++w) {
    keys[w] = ds.cell_values[w];
    mass[w] = plain.cell_mass(w);
    prop[w] = {plain.propensity(0, w), plain.propensity(1, w)};
    for (int x = 0; x < 2; ++x) {
      if (h[w][x] <= 0.0) {
        arms[w][x] = plain.arm(x, w);
        continue;
      }
      const auto& ys = samples[w][x];
      const auto [mn, mx] = std::minmax_element(ys.begin(), ys.end());
      const double lo = *mn - tail_widths * h[w][x];
      const double hi = *mx + tail_widths * h[w][x];
      ArmCell arm;
      arm.values.resize(grid_points);
      arm.cdf.resize(grid_points);
      for (int g = 0; g < grid_points; ++g) {
        const double v = lo + (hi - lo) * g / (grid_points - 1);
        double f = 0.0;
        for (double yi : ys) f += 1.0 / (1.0 + std::exp(-(v - yi) / h[w][x]));
        arm.values[g] = v;
        arm.cdf[g] = std::min(1.0, f / ys.size());
      }
      arm.cdf.back() = 1.0;
      arms[w][x] = std::move(arm);
    }
  }
  return CellEstimates::assemble(std::move(keys), std::move(arms), std::move(prop),
                                 std::move(mass), ds.n());
}

Dataset smoothed_resample(const Dataset& ds, std::uint64_t seed,
                          bool enforce_overlap) {
  const auto h = smoothing_bandwidths(ds);
  const auto idx = bootstrap_indices(ds, seed, enforce_overlap);
  // separate noise stream so the index draws match bootstrap_resample's
  Rng noise(derive_seed(seed, 0x6e6f6973ULL));
  std::vector<double> y(idx.size());
  std::vector<int> x(idx.size());
  std::vector<std::vector<double>> cov(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::uint32_t j = idx[i];
    x[i] = ds.x[j];
    cov[i] = ds.covariates[j];
    y[i] = ds.y[j] + h[ds.cell[j]][ds.x[j]] * noise.logistic();
  }
  return Dataset::from_records(std::move(y), std::move(x), std::move(cov));
}

std::vector<double> default_epsilon_grid(std::size_t sample_size) {
  const double naive = 1.0 / std::sqrt(static_cast<double>(sample_size));
  return {0.5 * naive, 1.0 * naive, 1.5 * naive, 2.0 * naive,
          4.0 * naive, 6.0 * naive, 8.0 * naive, 10.0 * naive};
}

EpsilonSelection select_epsilon(const Dataset& ds, const Claim& claim, double alpha,
                                std::vector<double> epsilon_grid, int outer_draws,
                                int inner_draws, std::uint64_t seed,
                                const std::vector<double>& c_grid,
                                const FrontierConfig& fcfg, unsigned threads) {
  if (epsilon_grid.empty()) throw std::invalid_argument("empty epsilon grid");
  std::sort(epsilon_grid.begin(), epsilon_grid.end());
  const std::size_t K = epsilon_grid.size();
  if (K == 1 || outer_draws == 0)
    return {epsilon_grid.front(), epsilon_grid, std::vector<double>(K, 0.0)};

  // Pseudo-truth: the frontier of the kernel-smoothed estimate the pseudo
  // samples are drawn from.
  const CellEstimates smooth = [&] {
    bool changed = false;
    return clamp_propensities(smoothed_cdf_estimate(ds), c_grid.back(), changed);
  }();
  const FrontierCurve truth = breakdown_frontier(smooth, claim, c_grid, fcfg);

  std::vector<std::vector<char>> covered(K, std::vector<char>(outer_draws, 0));
  parallel_for(outer_draws, threads, [&](std::size_t s) {
    const std::uint64_t seed_s = derive_seed(seed, s);
    const Dataset pseudo = smoothed_resample(ds, seed_s);
    bool changed = false;
    const CellEstimates base =
        clamp_propensities(estimate_theta(pseudo), c_grid.back(), changed);

    // Inner resamples are shared across the epsilon grid.
    std::vector<CellEstimates> stars;
    stars.reserve(inner_draws);
    for (int b = 0; b < inner_draws; ++b) {
      const std::uint64_t seed_b = derive_seed(seed_s, 1 + b);
      try {
        const auto idx = bootstrap_indices(pseudo, seed_b, true);
        stars.push_back(estimate_from_indices(pseudo, idx, nullptr));
      } catch (const std::runtime_error&) {
        // redraw cap hit; skip this inner draw
      }
    }

    const FrontierCurve base_fc = breakdown_frontier(base, claim, c_grid, fcfg);
    for (std::size_t k = 0; k < K; ++k) {
      const double eps = epsilon_grid[k];
      const double scale = eps * std::sqrt(static_cast<double>(pseudo.n()));
      DeltaDraws draws;
      for (const CellEstimates& star : stars) {
        bool ok = true;
        const CellEstimates pert = perturb_theta(base, star, scale, c_grid.back(), ok);
        if (!ok) {
          draws.flagged++;
          continue;
        }
        const FrontierCurve fc = breakdown_frontier(pert, claim, c_grid, fcfg);
        std::vector<double> row(c_grid.size());
        for (std::size_t j = 0; j < row.size(); ++j)
          row[j] = (fc.raw_values[j] - base_fc.raw_values[j]) / eps;
        draws.rows.push_back(std::move(row));
      }
      if (draws.rows.empty()) continue;
      const BandResult band = min_area_band(base_fc, draws, alpha, pseudo.n(),
                                            BootstrapConfig::SigmaMode::estimated_min_area);
      bool below = true;
      for (std::size_t j = 0; j < c_grid.size(); ++j)
        if (band.lower_band[j] > truth.t_values[j] + 1e-12) {
          below = false;
          break;
        }
      covered[k][s] = below;
    }
  });

  EpsilonSelection out;
  out.epsilon_grid = epsilon_grid;
  out.coverage.resize(K);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    double cp = 0.0;
    for (int s = 0; s < outer_draws; ++s) cp += covered[k][s];
    cp /= outer_draws;
    out.coverage[k] = cp;
    const double gap = std::fabs(cp - (1.0 - alpha));
    if (gap < best) {  // strict: ties stay with the smaller epsilon
      best = gap;
      out.epsilon = epsilon_grid[k];
    }
  }
  return out;
}

}  // namespace bfrontier

#include "bfrontier/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bfrontier/rng.hpp"

namespace bfrontier {

double ArmCell::cdf_at(double y) const {
  // last index with values[i] <= y
  auto it = std::upper_bound(values.begin(), values.end(), y);
  if (it == values.begin()) return 0.0;
  return cdf[static_cast<std::size_t>(it - values.begin()) - 1];
}

double ArmCell::quantile_at(double tau) const {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("quantile rank must be in (0,1)");
  auto it = std::lower_bound(cdf.begin(), cdf.end(), tau);
  if (it == cdf.end()) return values.back();
  return values[static_cast<std::size_t>(it - cdf.begin())];
}

double ArmCell::support_min() const {
  for (std::size_t i = 0; i < cdf.size(); ++i)
    if (cdf[i] > 0.0) return values[i];
  return values.back();
}

double ArmCell::support_max() const {
  for (std::size_t i = 0; i < cdf.size(); ++i)
    if (cdf[i] >= 1.0) return values[i];
  return values.back();
}

double CellEstimates::cdf(double y, int x, std::size_t w) const {
  check_cell(w);
  return arms_[w][x].cdf_at(y);
}

double CellEstimates::quantile(double tau, int x, std::size_t w) const {
  check_cell(w);
  return arms_[w][x].quantile_at(tau);
}

std::pair<double, double> CellEstimates::support(int x, std::size_t w) const {
  check_cell(w);
  const auto& a = arms_[w][x];
  return {a.support_min(), a.support_max()};
}

void CellEstimates::makarov_sites(std::size_t w, double z, double lo, double hi,
                                  std::vector<double>& out) const {
  // Both cdf bounds are monotone transforms of step cdfs, so the difference
  // y -> F1(y) - F0(y - z) is piecewise constant with stretch starts at arm-1
  // jump values and z-shifted arm-0 jump values. Scanning those starts plus
  // the interval endpoints makes the extremum over [lo, hi] exact.
  out.clear();
  out.push_back(lo);
  const auto& a1 = arms_[w][1].values;
  const auto& a0 = arms_[w][0].values;
  auto append_in_range = [&](auto first, auto last, double shift) {
    for (auto it = first; it != last; ++it) {
      double v = *it + shift;
      if (v > lo && v <= hi) out.push_back(v);
    }
  };
  append_in_range(a1.begin(), a1.end(), 0.0);
  append_in_range(a0.begin(), a0.end(), z);
  out.push_back(hi);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

CellEstimates CellEstimates::assemble(std::vector<std::vector<double>> keys,
                                      std::vector<std::array<ArmCell, 2>> arms,
                                      std::vector<std::array<double, 2>> propensities,
                                      std::vector<double> masses, std::size_t n) {
  if (keys.size() != arms.size() || arms.size() != propensities.size() ||
      propensities.size() != masses.size() || arms.empty())
    throw std::invalid_argument("inconsistent cell estimate shapes");
  CellEstimates ce;
  ce.keys_ = std::move(keys);
  ce.arms_ = std::move(arms);
  ce.prop_ = std::move(propensities);
  ce.mass_ = std::move(masses);
  ce.n_ = n;
  return ce;
}

CellEstimates estimate_theta(const Dataset& ds) {
  const std::size_t cells = ds.cell_count();
  CellEstimates ce;
  ce.keys_ = ds.cell_values;
  ce.arms_.resize(cells);
  ce.prop_.resize(cells);
  ce.mass_.resize(cells);
  ce.n_ = ds.n();

  std::vector<std::array<std::vector<double>, 2>> samples(cells);
  for (std::size_t i = 0; i < ds.n(); ++i)
    samples[ds.cell[i]][ds.x[i]].push_back(ds.y[i]);

  for (std::size_t w = 0; w < cells; ++w) {
    const std::size_t n0 = samples[w][0].size();
    const std::size_t n1 = samples[w][1].size();
    ce.mass_[w] = static_cast<double>(n0 + n1) / ds.n();
    ce.prop_[w][1] = static_cast<double>(n1) / (n0 + n1);
    ce.prop_[w][0] = 1.0 - ce.prop_[w][1];
    for (int x = 0; x < 2; ++x) {
      auto& ys = samples[w][x];
      std::sort(ys.begin(), ys.end());
      ArmCell arm;
      const std::size_t m = ys.size();
      for (std::size_t i = 0; i < m; ++i) {
        if (i + 1 < m && ys[i + 1] == ys[i]) continue;  // keep last of a tie run
        arm.values.push_back(ys[i]);
        arm.cdf.push_back(static_cast<double>(i + 1) / m);
      }
      ce.arms_[w][x] = std::move(arm);
    }
  }
  return ce;
}

std::vector<std::uint32_t> bootstrap_indices(const Dataset& ds, std::uint64_t seed,
                                             bool enforce_overlap, int max_redraws) {
  const std::size_t n = ds.n();
  Rng rng(seed);
  std::vector<std::uint32_t> idx(n);
  std::vector<std::array<int, 2>> counts(ds.cell_count());
  for (int attempt = 0; attempt <= max_redraws; ++attempt) {
    for (auto& c : counts) c = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t j = static_cast<std::uint32_t>(rng.uniform_below(n));
      idx[i] = j;
      counts[ds.cell[j]][ds.x[j]]++;
    }
    bool ok = true;
    for (const auto& c : counts)
      if (c[0] == 0 || c[1] == 0) { ok = false; break; }
    if (ok || !enforce_overlap) return idx;
  }
  throw std::runtime_error("bootstrap overlap unattainable after " +
                           std::to_string(max_redraws) + " redraws");
}

Dataset bootstrap_resample(const Dataset& ds, std::uint64_t seed,
                           bool enforce_overlap, int max_redraws) {
  const auto idx = bootstrap_indices(ds, seed, enforce_overlap, max_redraws);
  std::vector<double> y(idx.size());
  std::vector<int> x(idx.size());
  std::vector<std::vector<double>> cov(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    y[i] = ds.y[idx[i]];
    x[i] = ds.x[idx[i]];
    cov[i] = ds.covariates[idx[i]];
  }
  return Dataset::from_records(std::move(y), std::move(x), std::move(cov));
}

}  // namespace bfrontier

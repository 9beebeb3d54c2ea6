#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bfrontier/dataset.hpp"
#include "bfrontier/theta.hpp"

namespace bfrontier {

/// One arm within one covariate cell: a right-continuous step cdf stored as
/// sorted distinct outcome values with the cdf level at each value. The
/// plain estimate has levels count(<= value)/n_arm_cell; bootstrap
/// perturbations reuse the same value grid with modified levels.
struct ArmCell {
  std::vector<double> values;  // sorted, distinct
  std::vector<double> cdf;     // nondecreasing, back() == 1

  double cdf_at(double y) const;       // 0 below values.front()
  double quantile_at(double tau) const;  // type-1 generalized inverse

  // Distribution support, skipping zero-mass grid points so that two
  // representations of the same step cdf agree.
  double support_min() const;  // first value carrying positive mass
  double support_max() const;  // first value where the cdf reaches 1
};

/// Sample-analog estimate of the conditional outcome cdfs, propensities and
/// cell masses. Immutable after construction; safe to share across threads.
class CellEstimates : public Theta {
 public:
  std::size_t cell_count() const override { return arms_.size(); }
  double cell_mass(std::size_t w) const override { return mass_[w]; }
  double propensity(int x, std::size_t w) const override { return prop_[w][x]; }
  double cdf(double y, int x, std::size_t w) const override;
  double quantile(double tau, int x, std::size_t w) const override;
  std::pair<double, double> support(int x, std::size_t w) const override;
  void makarov_sites(std::size_t w, double z, double lo, double hi,
                     std::vector<double>& out) const override;

  std::size_t sample_size() const { return n_; }
  const ArmCell& arm(int x, std::size_t w) const { return arms_[w][x]; }
  const std::vector<double>& cell_key(std::size_t w) const { return keys_[w]; }

  /// Replaces distribution pieces wholesale; used by the bootstrap
  /// perturbation and the smoothed-cdf construction. Validates shapes only.
  static CellEstimates assemble(std::vector<std::vector<double>> keys,
                                std::vector<std::array<ArmCell, 2>> arms,
                                std::vector<std::array<double, 2>> propensities,
                                std::vector<double> masses, std::size_t n);

  friend CellEstimates estimate_theta(const Dataset& ds);

 private:
  std::vector<std::vector<double>> keys_;
  std::vector<std::array<ArmCell, 2>> arms_;
  std::vector<std::array<double, 2>> prop_;
  std::vector<double> mass_;
  std::size_t n_ = 0;
};

CellEstimates estimate_theta(const Dataset& ds);

/// n i.i.d. row draws with replacement, deterministic given the seed.
/// Resamples that violate overlap in some cell are redrawn (at most
/// max_redraws times) unless enforce_overlap is false.
Dataset bootstrap_resample(const Dataset& ds, std::uint64_t seed,
                           bool enforce_overlap = true, int max_redraws = 1000);

/// Row indices of a resample; the Dataset-returning overload is built on
/// this. Exposed so hot loops can tally counts without rebuilding a Dataset.
std::vector<std::uint32_t> bootstrap_indices(const Dataset& ds, std::uint64_t seed,
                                             bool enforce_overlap = true,
                                             int max_redraws = 1000);

}  // namespace bfrontier

#pragma once

#include <cstdint>
#include <vector>

#include "bfrontier/bootstrap.hpp"
#include "bfrontier/dataset.hpp"
#include "bfrontier/frontier.hpp"
#include "bfrontier/theta.hpp"

namespace bfrontier {

/// Simulation design: the control outcome is truncated standard normal and
/// the treated outcome is shifted and rescaled, Y|X=x ~ shift*x +
/// (1 + scale_offset*x) * Z with Z truncated standard normal on
/// [trunc_lo, trunc_hi]. No covariates, so there is a single cell.
struct McDgp {
  double scale_offset = 0.1;  // gamma
  double shift = 1.0;         // pi
  double p_treat = 0.5;
  double trunc_lo = -4.0;
  double trunc_hi = 4.0;
};

Dataset dgp_sample(const McDgp& dgp, std::size_t n, std::uint64_t seed);

/// Exact population distributions of the simulation design, exposing the
/// same interface the estimators implement. The extremizing sites are an
/// equally spaced grid, dense enough for the smooth cdfs involved.
class PopulationDgp : public Theta {
 public:
  explicit PopulationDgp(const McDgp& dgp, int makarov_grid = 2001);
  std::size_t cell_count() const override { return 1; }
  double cell_mass(std::size_t) const override { return 1.0; }
  double propensity(int x, std::size_t) const override;
  double cdf(double y, int x, std::size_t) const override;
  double quantile(double tau, int x, std::size_t) const override;
  std::pair<double, double> support(int x, std::size_t) const override;
  void makarov_sites(std::size_t, double z, double lo, double hi,
                     std::vector<double>& out) const override;

  double mean(int x) const;  // exact arm mean

 private:
  McDgp dgp_;
  int grid_;
  double z_lo_cdf_, z_hi_cdf_;  // standard normal cdf at the truncation ends
};

/// The frontier evaluated on exact population distributions; the truth
/// oracle for coverage and bias studies.
FrontierCurve population_frontier(const McDgp& dgp, const Claim& claim,
                                  const std::vector<double>& c_grid,
                                  const FrontierConfig& cfg = {});

/// Largest scanned c at which the population frontier is still positive.
double population_death_point(const McDgp& dgp, const Claim& claim,
                              double scan_max = 0.0, double step = 0.002,
                              const FrontierConfig& cfg = {});

struct CoverageRow {
  std::size_t sample_size;
  double epsilon;
  double epsilon_ratio;  // epsilon * sqrt(N)
  double p_floor;
  double coverage;       // fraction of simulations with band <= truth on the grid
  double area_ratio;     // mean band area / frontier area (trapezoid)
};

struct CoverageStudyConfig {
  std::size_t sample_size = 500;
  int simulations = 200;
  int replications = 200;   // bootstrap draws per band
  double alpha = 0.05;
  double z = 0.0;
  std::uint64_t seed = 1;
  int grid_points = 50;
  double grid_frac = 0.9;    // fallback upper end, fraction of min propensity
  double grid_abs = 0.0;     // absolute upper end when > 0 (overrides both)
  double death_frac = 0.9;   // per-claim upper end as a fraction of the
                             // population frontier's death point; <= 0 falls
                             // back to grid_frac / grid_abs
  unsigned threads = 1;
};

/// Coverage and proportional-area table over claims and derivative steps.
/// Bands are rebuilt per (epsilon, p_floor) from shared resamples; coverage
/// compares each band with the population frontier on that simulation's grid.
std::vector<CoverageRow> coverage_study(const McDgp& dgp,
                                        const std::vector<double>& p_floors,
                                        const std::vector<double>& eps_ratios,
                                        const CoverageStudyConfig& cc,
                                        const FrontierConfig& fcfg = {});

struct BiasStudy {
  std::vector<double> c_grid;
  std::vector<double> mean_frontier;  // across simulations
  std::vector<double> mc_se;          // standard error of the mean, per point
  std::vector<double> population;     // truth on the same grid
  int simulations = 0;
};

/// Mean estimated frontier on a fixed grid versus the population frontier.
BiasStudy bias_study(const McDgp& dgp, const Claim& claim, std::size_t sample_size,
                     int simulations, std::uint64_t seed,
                     const FrontierConfig& fcfg = {}, unsigned threads = 1,
                     int grid_points = 50, double grid_frac = 0.8);
BiasStudy bias_study_on_grid(const McDgp& dgp, const Claim& claim,
                             std::size_t sample_size, int simulations,
                             std::uint64_t seed, std::vector<double> c_grid,
                             const FrontierConfig& fcfg = {}, unsigned threads = 1);

}  // namespace bfrontier

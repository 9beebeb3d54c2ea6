#pragma once

#include <cstdint>
#include <vector>

#include "bfrontier/dataset.hpp"
#include "bfrontier/empirical.hpp"
#include "bfrontier/frontier.hpp"

namespace bfrontier {

struct BootstrapConfig {
  int replications = 1000;
  double epsilon = 0.0;  // numerical-derivative step; must be > 0
  double alpha = 0.05;
  std::uint64_t seed = 0;
  enum class SigmaMode { constant_one, estimated_min_area };
  SigmaMode sigma_mode = SigmaMode::estimated_min_area;
  bool enforce_overlap = true;  // redraw resamples that empty an arm-cell
  unsigned threads = 1;
};

/// theta + scale * (theta_star - theta), repaired into the parameter space:
/// perturbed cdf levels are clamped to [0,1] and re-sorted, propensities are
/// clamped so every grid c stays identifiable, masses are renormalized.
/// Returns false through `ok` when no repair is possible.
CellEstimates perturb_theta(const CellEstimates& base, const CellEstimates& star,
                            double scale, double c_cap, bool& ok);

/// One numerical-derivative bootstrap draw of the frontier:
/// [phi(theta + eps*sqrt(N)(theta_star - theta)) - phi(theta)] / eps
/// evaluated on c_grid, where phi is the frontier's pre-clip ratio (see
/// FrontierCurve::raw_values). With eps = N^{-1/2} this reduces exactly to
/// the plain bootstrap difference sqrt(N)(phi(theta_star) - phi(theta)).
std::vector<double> delta_draw(const CellEstimates& base, const CellEstimates& star,
                               double epsilon, const Claim& claim,
                               const std::vector<double>& c_grid,
                               const FrontierConfig& cfg = {},
                               bool* admissible = nullptr);

struct DeltaDraws {
  std::vector<std::vector<double>> rows;  // admissible draws, each length J
  int flagged = 0;                        // excluded inadmissible draws
};

/// Runs the full replication loop: resample -> re-estimate -> delta draw.
/// base_raw holds the estimate's pre-clip ratio values on the grid.
/// Replication b uses seed derive_seed(cfg.seed, b); results are identical
/// for any thread count.
DeltaDraws make_delta_draws(const Dataset& ds, const CellEstimates& base,
                            const std::vector<double>& base_raw,
                            const Claim& claim, const std::vector<double>& c_grid,
                            const BootstrapConfig& cfg,
                            const FrontierConfig& fcfg = {});

/// Smallest z whose empirical coverage of sup_j draw[j]/sigma[j] reaches
/// 1 - alpha (the order statistic at index ceil((1-alpha) B)).
double critical_value(const std::vector<std::vector<double>>& draws,
                      const std::vector<double>& sigma, double alpha);

struct BandResult {
  std::vector<double> c_grid;
  std::vector<double> frontier;    // estimate on the grid
  std::vector<double> k_values;    // nonnegative offsets
  std::vector<double> lower_band;  // max(frontier - k, 0)
  double area = 0.0;               // step-extended band area / grid upper end
  double realized_coverage = 0.0;  // fraction of draws the offsets cover
  int flagged_draws = 0;
};

/// Offsets k(c_j) >= 0 minimizing the right-Riemann band area subject to
/// covering at least ceil((1-alpha) B) of the bootstrap draws. Solved by
/// greedy removal plus pairwise exchange, seeded from both the all-draws
/// envelope and the smallest-supremum baseline; the better solution wins.
/// With sigma_mode constant_one the offsets are the flat critical value.
BandResult min_area_band(const FrontierCurve& frontier, const DeltaDraws& draws,
                         double alpha, std::size_t sample_size,
                         BootstrapConfig::SigmaMode mode);

/// Step extension of grid values to [0, c_bar]: value at c_1 on [0, c_1],
/// value at c_j on (c_{j-1}, c_j], zero beyond the last grid point.
struct StepBand {
  std::vector<double> c_grid;
  std::vector<double> values;
  double c_bar = 0.0;
  double operator()(double c) const;
  double area() const;  // exact integral over [0, c_bar]
};
StepBand monotone_step_extension(const std::vector<double>& c_grid,
                                 const std::vector<double>& values, double c_bar);

/// End-to-end band construction for a dataset and claim.
BandResult build_band(const Dataset& ds, const CellEstimates& base,
                      const Claim& claim, const std::vector<double>& c_grid,
                      const BootstrapConfig& cfg, const FrontierConfig& fcfg = {});

/// Kernel-smoothed bootstrap: rows are resampled with replacement, then each
/// outcome is jittered by h(x,w) * logistic noise, where h(x,w) is half the
/// normal-reference bandwidth 1.06 * sd * n^{-1/5} of its arm-cell (falling
/// back to the pooled cell when the arm-cell cannot support a bandwidth).
Dataset smoothed_resample(const Dataset& ds, std::uint64_t seed,
                          bool enforce_overlap = true);

/// Bandwidths used by smoothed_resample, one entry per (cell, arm).
std::vector<std::array<double, 2>> smoothing_bandwidths(const Dataset& ds);

/// The kernel-smoothed conditional cdf estimate itself, tabulated on a fine
/// outcome grid per arm-cell (arm-cells with a zero bandwidth keep their
/// step cdf). This is the distribution smoothed_resample draws from, and
/// serves as the pseudo-truth during step selection.
CellEstimates smoothed_cdf_estimate(const Dataset& ds, int grid_points = 2001,
                                    double tail_widths = 40.0);

/// Number of draws a level-(1-alpha) construction must cover out of B:
/// ceil((1-alpha) * B), guarded against floating-point boundary error.
std::size_t coverage_keep_count(std::size_t draw_count, double alpha);

struct EpsilonSelection {
  double epsilon = 0.0;
  std::vector<double> epsilon_grid;
  std::vector<double> coverage;  // simulated band coverage per grid value
};

/// Default step grid {0.5, 1, 1.5, 2, 4, 6, 8, 10} / sqrt(N).
std::vector<double> default_epsilon_grid(std::size_t sample_size);

/// Simulated-coverage selection of the numerical-derivative step: smoothed
/// pseudo-samples play the role of the data, the frontier of the smoothed
/// estimate plays the role of the truth, and the step whose band coverage
/// is closest to 1 - alpha wins (ties to the smaller step).
EpsilonSelection select_epsilon(const Dataset& ds, const Claim& claim, double alpha,
                                std::vector<double> epsilon_grid, int outer_draws,
                                int inner_draws, std::uint64_t seed,
                                const std::vector<double>& c_grid,
                                const FrontierConfig& fcfg = {},
                                unsigned threads = 1);

/// Propensity clamp shared by the perturbation repair: forces every p(x|w)
/// strictly above c_cap so all grid points stay identifiable.
CellEstimates clamp_propensities(const CellEstimates& ce, double c_cap, bool& changed);

}  // namespace bfrontier

#pragma once

#include <cstdint>
#include <vector>

#include "bfrontier/bootstrap.hpp"
#include "bfrontier/frontier.hpp"
#include "bfrontier/theta.hpp"

namespace bfrontier {

/// Fixed (not sample-size dependent) smoothing levels for the differentiable
/// lower envelope of the frontier.
struct SmoothingConfig {
  double kappa_minmax = 200.0;  // exp-weighted min/max sharpness
  double kappa_step = 200.0;    // smooth step sharpness
  double p_norm = 64.0;         // soft-infimum norm order
};

/// exp-weighted average sum x_i e^{k x_i} / sum e^{k x_j}; k > 0 approximates
/// the maximum from below, k < 0 the minimum from above. Overflow-safe.
double soft_minmax(const std::vector<double>& values, double kappa);
double soft_minmax2(double a, double b, double kappa);
double soft_minmax3(double a, double b, double c, double kappa);

/// Cubic-spline step approximations: the lower side S1(kappa x) never
/// exceeds the indicator 1(x >= 0), the upper side S1(kappa x + 1) never
/// falls below it. Both match the indicator outside a 1/kappa-wide window.
double smooth_step(double x, double kappa, Side side);

/// 1 - mean of the smooth step applied to f - z on the rank grid. With the
/// lower-side step this lies weakly above the raw pre-rearrangement measure,
/// with the upper side weakly below.
double smoothed_prerearrangement(const std::vector<double>& f_on_grid, double z,
                                 double kappa, Side side);

/// Scaled negative L_p norm: a differentiable upper envelope of the infimum
/// of a nonpositive function tabulated on `sites` (left-constant segments).
/// Throws when the norm is numerically zero.
double lp_soft_infimum(const std::vector<double>& sites,
                       const std::vector<double>& values, double p_norm);

/// Differentiable lower envelope of the breakdown frontier: every min, max,
/// indicator and infimum in the frontier formula is replaced by its smooth
/// counterpart, each oriented so the value can only decrease.
FrontierCurve smoothed_frontier(const Theta& th, const Claim& claim,
                                std::vector<double> c_grid,
                                const SmoothingConfig& scfg = {},
                                const FrontierConfig& fcfg = {});

/// Plain-bootstrap lower band for the smoothed frontier: the critical value
/// is the empirical quantile of sup_c sqrt(N)(SBF* - SBF), and the band is
/// SBF - z/sqrt(N) floored at zero. Conservative for the raw frontier by
/// the envelope property.
BandResult smoothed_band(const Dataset& ds, const Claim& claim,
                         const std::vector<double>& c_grid,
                         const SmoothingConfig& scfg, int replications,
                         double alpha, std::uint64_t seed,
                         const FrontierConfig& fcfg = {}, unsigned threads = 1);

}  // namespace bfrontier

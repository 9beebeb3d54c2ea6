#pragma once

#include <cstddef>
#include <vector>

#include "bfrontier/dataset.hpp"
#include "bfrontier/theta.hpp"

namespace bfrontier {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

/// Equally spaced interior ranks for integrating quantile-difference bounds
/// over (0,1). With m interior points the spacing is 1/(m+1); the two tail
/// strips are approximated by the nearest interior value.
struct TauGrid {
  explicit TauGrid(int interior_points = 999);
  std::vector<double> taus;
  double spacing;
};

/// Sensitivity levels must satisfy 0 <= c < p(x|w); the restricted case the
/// bound formulas cover. Violations raise std::invalid_argument.
void require_identifiable(double c, double p);

/// Sharp bounds on the conditional potential-outcome cdf at y, clipped to
/// [0,1]:
///   upper = min{ F p/(p-c), (F p + c)/(p+c) }
///   lower = max{ F p/(p+c), (F p - c)/(p-c) }
Interval cdf_bounds(const Theta& th, double y, int x, std::size_t w, double c);

/// Bounds on the conditional potential-outcome quantile at rank tau:
/// the conditional quantile evaluated at tau +/- (c/p) min{tau, 1-tau},
/// with the perturbed rank clamped into [1e-9, 1 - 1e-9].
Interval quantile_bounds(const Theta& th, double tau, int x, std::size_t w, double c);

/// Conditional quantile treatment effect bounds at rank tau.
Interval cqte_bounds(const Theta& th, double tau, std::size_t w, double c);

/// Conditional / unconditional average treatment effect bounds, integrating
/// the CQTE bounds over ranks with the given grid.
Interval cate_bounds(const Theta& th, std::size_t w, double c, const TauGrid& grid);
Interval ate_bounds(const Theta& th, double c, const TauGrid& grid);

struct BreakdownPoint {
  double c_star = 0.0;
  bool degenerate = false;  // lower ATE bound already <= mu at c = 0
  bool reached = true;      // false when the bound stays above mu on the window
};

/// Smallest c at which the lower ATE bound drops to mu, by bisection on the
/// nonincreasing map c -> lower bound. tol is the c-resolution.
BreakdownPoint ate_breakdown_point(const Theta& th, double mu, double c_search_max,
                                   double tol = 1e-4, const TauGrid& grid = TauGrid());

/// Largest gap between the propensity given all covariates and the
/// propensity that omits covariate k, maximized over observed full cells.
double leave_out_cbar(const Dataset& ds, std::size_t k);
std::vector<double> leave_out_cbar_all(const Dataset& ds);

}  // namespace bfrontier

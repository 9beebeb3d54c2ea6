#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bfrontier/bounds.hpp"
#include "bfrontier/theta.hpp"

namespace bfrontier {

/// A conclusion whose robustness is being mapped. Threshold claims state
/// P(Y1 - Y0 > z) >= p_floor; mean claims state ATE >= mu; joint claims
/// combine members (all must hold / at least one must hold).
struct Claim {
  enum class Kind { dte_at_least, ate_at_least, joint_and, joint_or };
  Kind kind = Kind::dte_at_least;
  double z = 0.0;
  double p_floor = 0.0;
  double mu = 0.0;
  std::vector<Claim> members;

  static Claim dte(double z, double p_floor);
  static Claim ate(double mu);
  static Claim joint_and(std::vector<Claim> members);
  static Claim joint_or(std::vector<Claim> members);
  std::string describe() const;
};

struct FrontierConfig {
  int u_cells = 2000;        // midpoint cells for the rank integral on (0,1)
  int tau_interior = 999;    // rank grid for ATE integration
  double denom_tol = 1e-12;  // |denominator| below this is reported undefined
  double bisect_tol = 1e-4;  // ATE breakdown point resolution
};

enum class Side { lower, upper };

/// Measure of {u in (0,1) : f(u) <= z} by the midpoint rule on u_cells
/// equal cells. Midpoints never include u = 1/2 when u_cells is even.
double pr_measure(const std::vector<double>& f_on_grid, double z);
std::vector<double> u_midpoints(int u_cells);

/// Rank-invariant term of the treatment-effect distribution bounds:
/// upper side integrates 1(Qlow1(u) - Qup0(u) <= z), lower side swaps roles.
double prerearrangement(const Theta& th, double z, std::size_t w, double c,
                        Side side, int u_cells = 2000);

/// Extremes of the cdf-bound differences over the support intersection.
/// sup_term extremizes Flow1(y) - Fup0(y-z); inf_term extremizes
/// Fup1(y) - Flow0(y-z). When the intersection is empty the conditional
/// effect distribution is the stated degenerate constant.
struct MakarovTerms {
  double sup_term = 0.0;
  double inf_term = 0.0;
  bool degenerate = false;
  double degenerate_value = 0.0;
};
MakarovTerms makarov_terms(const Theta& th, double z, std::size_t w, double c);

/// Bounds on P(Y1 - Y0 <= z | W = w) under sensitivity (c, t): the mixture
/// of the rank-invariant term (weight 1-t) and the clipped Makarov term
/// (weight t). dte_bounds averages over cells with their masses.
Interval cdte_bounds(const Theta& th, double z, std::size_t w, double c, double t,
                     const FrontierConfig& cfg = {});
Interval dte_bounds(const Theta& th, double z, double c, double t,
                    const FrontierConfig& cfg = {});

/// Per-cell ingredients of the frontier at one sensitivity level c,
/// aggregated with cell masses. Claim-independent, so one evaluation serves
/// every p_floor. Degenerate cells enter as their constant value.
struct FrontierTerms {
  double p_upper = 0.0;    // averaged rank-invariant upper term
  double p_lower = 0.0;    // averaged rank-invariant lower term (optional)
  double mak_upper = 0.0;  // averaged 1 + min{inf_term, 0}
  double mak_lower = 0.0;  // averaged max{sup_term, 0} (optional)
};
FrontierTerms frontier_terms(const Theta& th, double z, double c,
                             const FrontierConfig& cfg, bool need_lower);

/// Breakdown frontier values on a fixed sensitivity grid. t_values carry the
/// clipped frontier (always in [0,1]); raw_values keep the pre-clip ratio,
/// which the bootstrap differentiates. Clipping the ratio would bound upward
/// bootstrap variation by 1 - t and collapse offsets to zero wherever the
/// estimate saturates, so the derivative is taken before the clip.
struct FrontierCurve {
  std::vector<double> c_grid;
  std::vector<double> t_values;
  std::vector<double> raw_values;
  std::vector<std::size_t> undefined_points;  // denominator at the tolerance
  std::optional<BreakdownPoint> ate_point;    // set for mean claims
};

/// The frontier of a threshold claim is clip01(num/denom) with
///   num   = 1 - p_floor - avg upper rank-invariant term
///   denom = avg Makarov upper term - avg upper rank-invariant term;
/// mean claims give the vertical line 1(c <= c*); joint claims take the
/// pointwise min (all) or max (any) of their members.
FrontierCurve breakdown_frontier(const Theta& th, const Claim& claim,
                                 std::vector<double> c_grid,
                                 const FrontierConfig& cfg = {});

/// Frontier value at a single c (used by ray searches and joint claims).
double frontier_value(const Theta& th, const Claim& claim, double c,
                      const FrontierConfig& cfg = {});

/// Pre-clip frontier value at a single c. Encodes robust-region membership
/// uniformly: (c, t) lies in the region iff t <= this value. Threshold
/// claims return the raw ratio (negative when even full rank invariance
/// fails, above one when any rank violation is tolerated); mean claims
/// return +/- the ratio cap.
double frontier_raw_value(const Theta& th, const Claim& claim, double c,
                          const FrontierConfig& cfg = {});

/// Trapezoid area under the curve divided by the grid's upper end.
double robust_region_area(const FrontierCurve& fc);

/// Largest m with (c, t) = m * (dc, dt) inside the robust region, found by
/// bisection along the ray; the ray is capped at c <= c_cap and t <= 1.
double directional_breakdown_point(const Theta& th, const Claim& claim, double dc,
                                   double dt, double c_cap,
                                   double tol = 1e-6, const FrontierConfig& cfg = {});

/// Sensitivity-grid construction: J points on [0, c_bar] where c_bar is
/// either explicit or a fraction of the smallest propensity. Optionally the
/// points are drawn uniformly at random instead of equally spaced, and
/// reference points (e.g. leave-out diagnostics) can be appended.
struct GridSpec {
  int points = 50;
  double upper_frac = 0.9;           // c_bar = upper_frac * min propensity
  std::optional<double> upper_abs;   // overrides upper_frac when set
  std::optional<std::uint64_t> jitter_seed;
  std::vector<double> extra_points;
};
std::vector<double> make_c_grid(const GridSpec& spec, double min_propensity);

}  // namespace bfrontier

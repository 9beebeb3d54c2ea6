#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bfrontier {

/// Conditional-distribution parameter consumed by every bound and frontier
/// computation: outcome cdfs per treatment arm and covariate cell, the
/// propensities p(x|w), and the cell masses q(w). Implemented by the
/// sample-analog estimates and by exact population distributions, so the
/// same evaluation code serves both the estimator and the truth oracle.
class Theta {
 public:
  virtual ~Theta() = default;

  virtual std::size_t cell_count() const = 0;
  virtual double cell_mass(std::size_t w) const = 0;
  virtual double propensity(int x, std::size_t w) const = 0;

  /// Right-continuous cdf of the outcome given arm x and cell w.
  virtual double cdf(double y, int x, std::size_t w) const = 0;

  /// Left-continuous generalized inverse: inf{y : F(y|x,w) >= tau}.
  virtual double quantile(double tau, int x, std::size_t w) const = 0;

  /// (lowest, highest) outcome value of arm x in cell w.
  virtual std::pair<double, double> support(int x, std::size_t w) const = 0;

  /// Evaluation sites for extremizing y -> F1bound(y) - F0bound(y - z)
  /// over [lo, hi]. Implementations must return a sorted set on which the
  /// extremum over the whole interval is attained (exact for step cdfs,
  /// a dense grid otherwise). lo and hi are always included.
  virtual void makarov_sites(std::size_t w, double z, double lo, double hi,
                             std::vector<double>& out) const = 0;

  /// Largest admissible sensitivity level: min over cells and arms of p(x|w).
  double min_propensity() const {
    double m = 1.0;
    for (std::size_t w = 0; w < cell_count(); ++w)
      for (int x = 0; x < 2; ++x) m = std::min(m, propensity(x, w));
    return m;
  }

 protected:
  void check_cell(std::size_t w) const {
    if (w >= cell_count()) throw std::invalid_argument("unknown cell index");
  }
};

}  // namespace bfrontier

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bfrontier {

/// Micro-data with a binary treatment and discrete covariate cells.
///
/// Covariate rows are kept alongside the derived cell index so that
/// coarsening and leave-out-one-covariate diagnostics can re-form cells.
/// Invariants established at construction:
///   - every treatment value is 0 or 1,
///   - n >= 2,
///   - every cell contains at least one observation of each arm (overlap).
struct Dataset {
  std::vector<double> y;
  std::vector<int> x;
  std::vector<std::vector<double>> covariates;  // one row per record; may be empty rows
  std::vector<int> cell;                        // index into cell_values
  std::vector<std::vector<double>> cell_values; // distinct covariate rows, sorted

  std::size_t n() const { return y.size(); }
  std::size_t cell_count() const { return cell_values.size(); }
  std::size_t covariate_count() const {
    return covariates.empty() ? 0 : covariates.front().size();
  }

  /// Validates invariants and derives cells from the covariate rows.
  static Dataset from_records(std::vector<double> y, std::vector<int> x,
                              std::vector<std::vector<double>> covariates);
};

/// Per-covariate quantile cut points, each strictly increasing in (0,1).
struct CoarseningSpec {
  std::vector<std::vector<double>> cuts;  // cuts[k] for covariate k
};

/// Parsed columns before cell formation and overlap validation; lets a
/// coarsening run before cells are checked, since raw cross-product cells
/// frequently violate overlap that coarsened cells satisfy.
struct RawColumns {
  std::vector<double> y;
  std::vector<int> x;
  std::vector<std::vector<double>> covariates;
};
RawColumns read_csv_columns(const std::string& path, const std::string& outcome_col,
                            const std::string& treatment_col,
                            const std::vector<std::string>& covariate_cols);

/// Reads comma-separated UTF-8 text with a header row and '.' decimals.
Dataset load_csv(const std::string& path, const std::string& outcome_col,
                 const std::string& treatment_col,
                 const std::vector<std::string>& covariate_cols);

/// Replaces each covariate by its bin index relative to the covariate's
/// empirical quantiles at the spec's cut points. Quantiles use the
/// left-continuous (type-1) inverse; a value tied with a cut point goes to
/// the lower bin. Cells are re-formed and overlap re-validated.
Dataset coarsen(const Dataset& ds, const CoarseningSpec& spec);

/// The binning step of coarsen on raw covariate rows.
std::vector<std::vector<double>> bin_covariate_rows(
    const std::vector<std::vector<double>>& rows, const CoarseningSpec& spec);

/// Type-1 empirical quantile of arbitrary values (used by coarsen).
double empirical_quantile(std::vector<double> values, double tau);

}  // namespace bfrontier

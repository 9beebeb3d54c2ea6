#include "bfrontier/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bfrontier {

namespace {

std::string cell_label(const std::vector<double>& vals) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) os << ",";
    os << vals[i];
  }
  os << ")";
  return os.str();
}

}  // namespace

Dataset Dataset::from_records(std::vector<double> y, std::vector<int> x,
                              std::vector<std::vector<double>> covariates) {
  if (y.size() != x.size())
    throw std::invalid_argument("outcome and treatment lengths differ");
  if (!covariates.empty() && covariates.size() != y.size())
    throw std::invalid_argument("covariate rows and outcome lengths differ");
  if (y.size() < 2) throw std::invalid_argument("need at least 2 observations");

  Dataset ds;
  ds.y = std::move(y);
  ds.x = std::move(x);
  if (covariates.empty())
    ds.covariates.assign(ds.y.size(), {});
  else
    ds.covariates = std::move(covariates);

  const std::size_t ncov = ds.covariates.front().size();
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (!std::isfinite(ds.y[i]))
      throw std::invalid_argument("non-numeric outcome in row " + std::to_string(i));
    if (ds.x[i] != 0 && ds.x[i] != 1)
      throw std::invalid_argument("non-binary treatment in row " + std::to_string(i));
    if (ds.covariates[i].size() != ncov)
      throw std::invalid_argument("ragged covariate rows");
  }

  // Cells = cross-product of observed distinct covariate rows.
  std::map<std::vector<double>, int> index;
  for (const auto& row : ds.covariates) index.emplace(row, 0);
  ds.cell_values.reserve(index.size());
  for (auto& [row, id] : index) {
    id = static_cast<int>(ds.cell_values.size());
    ds.cell_values.push_back(row);
  }
  ds.cell.resize(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) ds.cell[i] = index[ds.covariates[i]];

  // Overlap: both arms present in every cell.
  std::vector<std::array<int, 2>> counts(ds.cell_count(), {0, 0});
  for (std::size_t i = 0; i < ds.n(); ++i) counts[ds.cell[i]][ds.x[i]]++;
  for (std::size_t w = 0; w < ds.cell_count(); ++w)
    if (counts[w][0] == 0 || counts[w][1] == 0)
      throw std::invalid_argument("overlap violated in cell " +
                                  cell_label(ds.cell_values[w]));
  return ds;
}

RawColumns read_csv_columns(const std::string& path, const std::string& outcome_col,
                            const std::string& treatment_col,
                            const std::vector<std::string>& covariate_cols) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);

  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);

  auto column_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::invalid_argument("missing column '" + name + "' in " + path);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t yi = column_of(outcome_col);
  const std::size_t xi = column_of(treatment_col);
  std::vector<std::size_t> ci;
  ci.reserve(covariate_cols.size());
  for (const auto& name : covariate_cols) ci.push_back(column_of(name));

  auto parse_real = [](const std::string& s, const char* what, std::size_t row) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (...) {
      throw std::invalid_argument(std::string("non-numeric ") + what + " in row " +
                                  std::to_string(row));
    }
  };

  std::vector<double> y;
  std::vector<int> x;
  std::vector<std::vector<double>> cov;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("row " + std::to_string(row) +
                                  " has wrong field count");
    y.push_back(parse_real(fields[yi], "outcome", row));
    double t = parse_real(fields[xi], "treatment", row);
    if (t != 0.0 && t != 1.0)
      throw std::invalid_argument("non-binary treatment in row " + std::to_string(row));
    x.push_back(static_cast<int>(t));
    std::vector<double> c;
    c.reserve(ci.size());
    for (auto idx : ci) c.push_back(parse_real(fields[idx], "covariate", row));
    cov.push_back(std::move(c));
  }
  if (y.empty()) throw std::invalid_argument("no data rows in " + path);
  return {std::move(y), std::move(x), std::move(cov)};
}

Dataset load_csv(const std::string& path, const std::string& outcome_col,
                 const std::string& treatment_col,
                 const std::vector<std::string>& covariate_cols) {
  RawColumns cols = read_csv_columns(path, outcome_col, treatment_col, covariate_cols);
  return Dataset::from_records(std::move(cols.y), std::move(cols.x),
                               std::move(cols.covariates));
}

double empirical_quantile(std::vector<double> values, double tau) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  std::sort(values.begin(), values.end());
  // type-1: inf{y : F(y) >= tau} = order statistic ceil(n*tau)
  std::size_t k = static_cast<std::size_t>(std::ceil(tau * values.size()));
  if (k == 0) k = 1;
  return values[k - 1];
}

std::vector<std::vector<double>> bin_covariate_rows(
    const std::vector<std::vector<double>>& rows, const CoarseningSpec& spec) {
  if (rows.empty()) throw std::invalid_argument("no covariate rows");
  const std::size_t ncov = rows.front().size();
  if (spec.cuts.size() != ncov)
    throw std::invalid_argument("coarsening spec covers " +
                                std::to_string(spec.cuts.size()) +
                                " covariates, data has " + std::to_string(ncov));
  for (const auto& cuts : spec.cuts) {
    for (std::size_t j = 0; j < cuts.size(); ++j) {
      if (!(cuts[j] > 0.0 && cuts[j] < 1.0))
        throw std::invalid_argument("cut points must lie in (0,1)");
      if (j > 0 && !(cuts[j] > cuts[j - 1]))
        throw std::invalid_argument("cut points must be strictly increasing");
    }
  }

  // Empirical quantile thresholds per covariate, then bin by "value > cut".
  std::vector<std::vector<double>> thresholds(ncov);
  for (std::size_t k = 0; k < ncov; ++k) {
    std::vector<double> col(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][k];
    for (double tau : spec.cuts[k]) thresholds[k].push_back(empirical_quantile(col, tau));
  }

  std::vector<std::vector<double>> binned(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    binned[i].resize(ncov);
    for (std::size_t k = 0; k < ncov; ++k) {
      int bin = 0;
      for (double thr : thresholds[k])
        if (rows[i][k] > thr) ++bin;
      binned[i][k] = bin;
    }
  }
  return binned;
}

Dataset coarsen(const Dataset& ds, const CoarseningSpec& spec) {
  return Dataset::from_records(ds.y, ds.x, bin_covariate_rows(ds.covariates, spec));
}

}  // namespace bfrontier

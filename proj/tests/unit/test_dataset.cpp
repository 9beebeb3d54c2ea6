#include <doctest.h>

#include <set>

#include "bfrontier/dataset.hpp"
#include "bfrontier/rng.hpp"
#include "helpers.hpp"

using namespace bfrontier;

TEST_CASE("load_csv parses a small file into cells") {
  testutil::TempCsv file(
      "y,x,w\n"
      "1.5,0,0\n"
      "2.5,1,0\n"
      "0.5,0,1\n"
      "3.5,1,1\n");
  const Dataset ds = load_csv(file.path.string(), "y", "x", {"w"});
  CHECK(ds.n() == 4);
  CHECK(ds.cell_count() <= 2);
  CHECK(ds.covariate_count() == 1);
}

TEST_CASE("load_csv rejects a non-binary treatment") {
  testutil::TempCsv file("y,x\n1.0,2\n2.0,0\n");
  CHECK_THROWS_WITH_AS(load_csv(file.path.string(), "y", "x", {}),
                       doctest::Contains("non-binary treatment"),
                       std::invalid_argument);
}

TEST_CASE("load_csv rejects a one-armed cell") {
  testutil::TempCsv file(
      "y,x,w\n"
      "1.0,0,0\n"
      "2.0,1,0\n"
      "3.0,1,1\n");
  CHECK_THROWS_WITH_AS(load_csv(file.path.string(), "y", "x", {"w"}),
                       doctest::Contains("overlap violated in cell"),
                       std::invalid_argument);
}

TEST_CASE("load_csv reports missing columns and bad numbers") {
  testutil::TempCsv file("y,x\n1.0,0\n2.0,1\n");
  CHECK_THROWS_WITH_AS(load_csv(file.path.string(), "wage", "x", {}),
                       doctest::Contains("missing column"), std::invalid_argument);
  testutil::TempCsv bad("y,x\nfoo,0\n2.0,1\n");
  CHECK_THROWS_WITH_AS(load_csv(bad.path.string(), "y", "x", {}),
                       doctest::Contains("non-numeric outcome"), std::invalid_argument);
  testutil::TempCsv empty("");
  CHECK_THROWS_AS(load_csv(empty.path.string(), "y", "x", {}), std::invalid_argument);
}

namespace {

Dataset dataset_with_covariate(std::vector<double> values) {
  // alternate arms so overlap holds in every cell
  std::vector<double> y;
  std::vector<int> x;
  std::vector<std::vector<double>> cov;
  int arm = 0;
  for (double v : values)
    for (int rep = 0; rep < 2; ++rep) {
      y.push_back(v + 0.1 * rep);
      x.push_back(arm = 1 - arm);
      cov.push_back({v});
    }
  return Dataset::from_records(std::move(y), std::move(x), std::move(cov));
}

std::vector<int> bins_of(const Dataset& ds, const CoarseningSpec& spec) {
  const Dataset out = coarsen(ds, spec);
  std::vector<int> bins;
  for (std::size_t i = 0; i < out.n(); i += 2)  // one per original value
    bins.push_back(static_cast<int>(out.covariates[i][0]));
  return bins;
}

}  // namespace

TEST_CASE("median split of 1..10") {
  std::vector<double> values(10);
  for (int i = 0; i < 10; ++i) values[i] = i + 1;
  const Dataset ds = dataset_with_covariate(values);
  const auto bins = bins_of(ds, CoarseningSpec{{{0.5}}});
  CHECK(bins == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
}

TEST_CASE("cuts at 0.35/0.65 on a 100-point grid give 35/30/35") {
  std::vector<double> values(100);
  for (int i = 0; i < 100; ++i) values[i] = i + 1;
  const Dataset ds = dataset_with_covariate(values);
  const auto bins = bins_of(ds, CoarseningSpec{{{0.35, 0.65}}});
  int counts[3] = {0, 0, 0};
  for (int b : bins) counts[b]++;
  CHECK(counts[0] == 35);
  CHECK(counts[1] == 30);
  CHECK(counts[2] == 35);
}

TEST_CASE("all-equal covariate collapses to one bin") {
  const Dataset ds = dataset_with_covariate(std::vector<double>(8, 3.0));
  const Dataset out = coarsen(ds, CoarseningSpec{{{0.25, 0.5, 0.75}}});
  CHECK(out.cell_count() == 1);
}

TEST_CASE("coarsen validates its spec") {
  const Dataset ds = dataset_with_covariate({1, 2, 3, 4});
  CHECK_THROWS_AS(coarsen(ds, CoarseningSpec{{{0.5, 0.5}}}), std::invalid_argument);
  CHECK_THROWS_AS(coarsen(ds, CoarseningSpec{{{0.0}}}), std::invalid_argument);
  CHECK_THROWS_AS(coarsen(ds, CoarseningSpec{{}}), std::invalid_argument);
}

TEST_CASE("binning is idempotent and preserves rows") {
  Rng rng(2024);
  const CoarseningSpec spec{{{0.3, 0.7}}};
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30 + rng.uniform_below(100);
    std::vector<std::vector<double>> rows(n);
    for (auto& row : rows) row = {rng.logistic()};
    const auto once = bin_covariate_rows(rows, spec);
    const auto twice = bin_covariate_rows(once, spec);
    REQUIRE(once.size() == rows.size());
    for (std::size_t i = 0; i < n; ++i) CHECK(twice[i] == once[i]);
  }
}

TEST_CASE("coarsen is idempotent on a dataset and weakly merges cells") {
  Rng rng(4048);
  for (int trial = 0; trial < 10; ++trial) {
    // many distinct covariate values, both arms present at each value so
    // every coarsening stays valid
    const int values = 6 + static_cast<int>(rng.uniform_below(10));
    std::vector<double> y;
    std::vector<int> x;
    std::vector<std::vector<double>> cov;
    for (int v = 0; v < values; ++v) {
      const double value = v + rng.uniform01() * 0.5;
      for (int arm = 0; arm < 2; ++arm) {
        y.push_back(rng.logistic());
        x.push_back(arm);
        cov.push_back({value});
      }
    }
    const Dataset wide = Dataset::from_records(y, x, cov);
    const CoarseningSpec spec{{{0.25, 0.5, 0.75}}};
    const Dataset once = coarsen(wide, spec);
    const Dataset twice = coarsen(once, spec);
    CHECK(once.n() == wide.n());
    CHECK(once.cell_count() <= wide.cell_count());
    REQUIRE(twice.n() == once.n());
    for (std::size_t i = 0; i < once.n(); ++i)
      CHECK(twice.covariates[i] == once.covariates[i]);
  }
}

TEST_CASE("type-1 quantile convention") {
  std::vector<double> v{1, 2, 3};
  CHECK(empirical_quantile(v, 1.0 / 3.0) == 1.0);
  CHECK(empirical_quantile(v, 0.34) == 2.0);
  CHECK(empirical_quantile(v, 0.5) == 2.0);
  CHECK_THROWS_AS(empirical_quantile(v, 0.0), std::invalid_argument);
}

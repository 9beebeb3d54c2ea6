#pragma once

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bfrontier/dataset.hpp"
#include "bfrontier/empirical.hpp"
#include "bfrontier/rng.hpp"

namespace testutil {

// Random dataset with guaranteed overlap: every cell gets one observation of
// each arm first, the rest i.i.d. Outcomes mix a cell effect, noise, and a
// point mass at 0 so ties occur.
inline bfrontier::Dataset random_dataset(bfrontier::Rng& rng, std::size_t n_min = 40,
                                         std::size_t n_max = 200, int max_cells = 3) {
  using namespace bfrontier;
  const std::size_t n =
      n_min + static_cast<std::size_t>(rng.uniform_below(n_max - n_min + 1));
  const int cells = 1 + static_cast<int>(rng.uniform_below(max_cells));
  std::vector<double> y;
  std::vector<int> x;
  std::vector<std::vector<double>> cov;
  auto add = [&](int cell, int arm) {
    double v = 0.3 * cell + (arm ? 0.4 : 0.0) + rng.logistic() * 0.5;
    if (rng.uniform01() < 0.15) v = 0.0;  // ties
    y.push_back(v);
    x.push_back(arm);
    cov.push_back({static_cast<double>(cell)});
  };
  for (int cell = 0; cell < cells; ++cell)
    for (int arm = 0; arm < 2; ++arm) add(cell, arm);
  for (std::size_t i = 2 * cells; i < n; ++i) {
    const int cell = static_cast<int>(rng.uniform_below(cells));
    const double p = 0.25 + 0.5 * (cell + 1.0) / (cells + 1.0);
    add(cell, rng.uniform01() < p ? 1 : 0);
  }
  return Dataset::from_records(std::move(y), std::move(x), std::move(cov));
}

struct TempCsv {
  std::filesystem::path path;
  explicit TempCsv(const std::string& contents) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("bfrontier_test_" + std::to_string(counter++) + "_" +
            std::to_string(::getpid()) + ".csv");
    std::ofstream(path) << contents;
  }
  ~TempCsv() { std::filesystem::remove(path); }
};

}  // namespace testutil

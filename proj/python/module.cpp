#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bfrontier/bootstrap.hpp"
#include "bfrontier/bounds.hpp"
#include "bfrontier/dataset.hpp"
#include "bfrontier/empirical.hpp"
#include "bfrontier/frontier.hpp"
#include "bfrontier/montecarlo.hpp"
#include "bfrontier/smoothing.hpp"

namespace py = pybind11;
using namespace bfrontier;

namespace {

Claim claim_from_dict(const py::dict& d) {
  const std::string kind = d["kind"].cast<std::string>();
  if (kind == "dte")
    return Claim::dte(d.contains("z") ? d["z"].cast<double>() : 0.0,
                      d["p"].cast<double>());
  if (kind == "ate") return Claim::ate(d["mu"].cast<double>());
  if (kind == "joint-and" || kind == "joint-or") {
    std::vector<Claim> members;
    for (auto item : d["members"].cast<py::list>())
      members.push_back(claim_from_dict(item.cast<py::dict>()));
    return kind == "joint-and" ? Claim::joint_and(std::move(members))
                               : Claim::joint_or(std::move(members));
  }
  throw std::invalid_argument("unknown claim kind: " + kind);
}

}  // namespace

PYBIND11_MODULE(_bfrontier, m) {
  m.doc() = "Breakdown-frontier sensitivity analysis for binary treatments";

  py::class_<Dataset>(m, "Dataset")
      .def_static(
          "from_arrays",
          [](std::vector<double> y, std::vector<int> x,
             std::vector<std::vector<double>> covariate_rows) {
            return Dataset::from_records(std::move(y), std::move(x),
                                         std::move(covariate_rows));
          },
          py::arg("y"), py::arg("x"),
          py::arg("covariate_rows") = std::vector<std::vector<double>>{})
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("cell_count", &Dataset::cell_count)
      .def_property_readonly("covariate_count", &Dataset::covariate_count)
      .def_readonly("y", &Dataset::y)
      .def_readonly("x", &Dataset::x)
      .def_readonly("cell", &Dataset::cell);

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& outcome_col,
         const std::string& treatment_col, std::vector<std::string> covariate_cols,
         std::vector<std::vector<double>> cuts) {
        RawColumns cols =
            read_csv_columns(path, outcome_col, treatment_col, covariate_cols);
        if (!cuts.empty())
          cols.covariates = bin_covariate_rows(cols.covariates,
                                               CoarseningSpec{std::move(cuts)});
        return Dataset::from_records(std::move(cols.y), std::move(cols.x),
                                     std::move(cols.covariates));
      },
      py::arg("path"), py::arg("outcome_col"), py::arg("treatment_col"),
      py::arg("covariate_cols") = std::vector<std::string>{},
      py::arg("cuts") = std::vector<std::vector<double>>{});
  m.def(
      "coarsen",
      [](const Dataset& ds, std::vector<std::vector<double>> cuts) {
        return coarsen(ds, CoarseningSpec{std::move(cuts)});
      },
      py::arg("dataset"), py::arg("cuts"));

  py::class_<CellEstimates>(m, "CellEstimates")
      .def_property_readonly("cell_count", &CellEstimates::cell_count)
      .def_property_readonly("sample_size", &CellEstimates::sample_size)
      .def("cell_mass", &CellEstimates::cell_mass)
      .def("propensity", &CellEstimates::propensity)
      .def("cdf", &CellEstimates::cdf, py::arg("y"), py::arg("x"), py::arg("w"))
      .def("quantile", &CellEstimates::quantile, py::arg("tau"), py::arg("x"),
           py::arg("w"))
      .def("min_propensity", &CellEstimates::min_propensity);

  m.def("estimate_theta", &estimate_theta);
  m.def("bootstrap_resample", &bootstrap_resample, py::arg("dataset"), py::arg("seed"),
        py::arg("enforce_overlap") = true, py::arg("max_redraws") = 1000);
  m.def("smoothed_resample", &smoothed_resample, py::arg("dataset"), py::arg("seed"),
        py::arg("enforce_overlap") = true);

  py::class_<Interval>(m, "Interval")
      .def_readonly("lower", &Interval::lower)
      .def_readonly("upper", &Interval::upper);

  m.def(
      "cdf_bounds",
      [](const CellEstimates& ce, double y, int x, std::size_t w, double c) {
        return cdf_bounds(ce, y, x, w, c);
      },
      py::arg("theta"), py::arg("y"), py::arg("x"), py::arg("w"), py::arg("c"));
  m.def(
      "quantile_bounds",
      [](const CellEstimates& ce, double tau, int x, std::size_t w, double c) {
        return quantile_bounds(ce, tau, x, w, c);
      },
      py::arg("theta"), py::arg("tau"), py::arg("x"), py::arg("w"), py::arg("c"));
  m.def(
      "cqte_bounds",
      [](const CellEstimates& ce, double tau, std::size_t w, double c) {
        return cqte_bounds(ce, tau, w, c);
      },
      py::arg("theta"), py::arg("tau"), py::arg("w"), py::arg("c"));
  m.def(
      "ate_bounds",
      [](const CellEstimates& ce, double c, int tau_points) {
        return ate_bounds(ce, c, TauGrid(tau_points));
      },
      py::arg("theta"), py::arg("c"), py::arg("tau_points") = 999);
  m.def(
      "dte_bounds",
      [](const CellEstimates& ce, double z, double c, double t) {
        return dte_bounds(ce, z, c, t);
      },
      py::arg("theta"), py::arg("z"), py::arg("c"), py::arg("t"));

  py::class_<BreakdownPoint>(m, "BreakdownPoint")
      .def_readonly("c_star", &BreakdownPoint::c_star)
      .def_readonly("degenerate", &BreakdownPoint::degenerate)
      .def_readonly("reached", &BreakdownPoint::reached);
  m.def(
      "ate_breakdown_point",
      [](const CellEstimates& ce, double mu, double c_search_max, double tol) {
        return ate_breakdown_point(ce, mu, c_search_max, tol);
      },
      py::arg("theta"), py::arg("mu"), py::arg("c_search_max"),
      py::arg("tol") = 1e-4);

  m.def("leave_out_cbar",
        py::overload_cast<const Dataset&, std::size_t>(&leave_out_cbar),
        py::arg("dataset"), py::arg("k"));
  m.def("leave_out_cbar_all", &leave_out_cbar_all, py::arg("dataset"));

  py::class_<FrontierCurve>(m, "FrontierCurve")
      .def_readonly("c_grid", &FrontierCurve::c_grid)
      .def_readonly("t_values", &FrontierCurve::t_values)
      .def_readonly("undefined_points", &FrontierCurve::undefined_points)
      .def_property_readonly("breakdown_point",
                             [](const FrontierCurve& fc) -> py::object {
                               if (!fc.ate_point) return py::none();
                               return py::cast(*fc.ate_point);
                             })
      .def("area", &robust_region_area);

  m.def(
      "default_c_grid",
      [](const CellEstimates& ce, int points, double upper_frac) {
        GridSpec gs;
        gs.points = points;
        gs.upper_frac = upper_frac;
        return make_c_grid(gs, ce.min_propensity());
      },
      py::arg("theta"), py::arg("points") = 50, py::arg("upper_frac") = 0.9);
  m.def(
      "breakdown_frontier",
      [](const CellEstimates& ce, const py::dict& claim, std::vector<double> c_grid) {
        return breakdown_frontier(ce, claim_from_dict(claim), std::move(c_grid));
      },
      py::arg("theta"), py::arg("claim"), py::arg("c_grid"));
  m.def(
      "directional_breakdown_point",
      [](const CellEstimates& ce, const py::dict& claim, double dc, double dt,
         double c_cap) {
        return directional_breakdown_point(ce, claim_from_dict(claim), dc, dt, c_cap);
      },
      py::arg("theta"), py::arg("claim"), py::arg("dc"), py::arg("dt"),
      py::arg("c_cap"));

  py::class_<BandResult>(m, "BandResult")
      .def_readonly("c_grid", &BandResult::c_grid)
      .def_readonly("frontier", &BandResult::frontier)
      .def_readonly("k_values", &BandResult::k_values)
      .def_readonly("lower_band", &BandResult::lower_band)
      .def_readonly("area", &BandResult::area)
      .def_readonly("realized_coverage", &BandResult::realized_coverage)
      .def_readonly("flagged_draws", &BandResult::flagged_draws);

  m.def(
      "band",
      [](const Dataset& ds, const py::dict& claim, std::vector<double> c_grid,
         int replications, double epsilon, double alpha, std::uint64_t seed,
         const std::string& sigma, unsigned threads) {
        BootstrapConfig cfg;
        cfg.replications = replications;
        cfg.epsilon = epsilon;
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.threads = threads;
        cfg.sigma_mode = sigma == "constant"
                             ? BootstrapConfig::SigmaMode::constant_one
                             : BootstrapConfig::SigmaMode::estimated_min_area;
        const CellEstimates ce = estimate_theta(ds);
        return build_band(ds, ce, claim_from_dict(claim), c_grid, cfg);
      },
      py::arg("dataset"), py::arg("claim"), py::arg("c_grid"),
      py::arg("replications") = 1000, py::arg("epsilon") = 0.0,
      py::arg("alpha") = 0.05, py::arg("seed") = 0, py::arg("sigma") = "min-area",
      py::arg("threads") = 1);

  m.def("default_epsilon_grid", &default_epsilon_grid, py::arg("sample_size"));
  m.def(
      "select_epsilon",
      [](const Dataset& ds, const py::dict& claim, double alpha,
         std::vector<double> grid, int outer, int inner, std::uint64_t seed,
         std::vector<double> c_grid, unsigned threads) {
        const auto sel = select_epsilon(ds, claim_from_dict(claim), alpha,
                                        std::move(grid), outer, inner, seed, c_grid,
                                        FrontierConfig{}, threads);
        return py::make_tuple(sel.epsilon, sel.epsilon_grid, sel.coverage);
      },
      py::arg("dataset"), py::arg("claim"), py::arg("alpha"), py::arg("epsilon_grid"),
      py::arg("outer"), py::arg("inner"), py::arg("seed"), py::arg("c_grid"),
      py::arg("threads") = 1);

  m.def(
      "smoothed_frontier",
      [](const CellEstimates& ce, const py::dict& claim, std::vector<double> c_grid,
         double kappa, double kappa_step, double p_norm) {
        SmoothingConfig scfg{kappa, kappa_step, p_norm};
        return smoothed_frontier(ce, claim_from_dict(claim), std::move(c_grid), scfg);
      },
      py::arg("theta"), py::arg("claim"), py::arg("c_grid"), py::arg("kappa") = 200.0,
      py::arg("kappa_step") = 200.0, py::arg("p_norm") = 64.0);
  m.def(
      "smoothed_band",
      [](const Dataset& ds, const py::dict& claim, std::vector<double> c_grid,
         double kappa, double kappa_step, double p_norm, int replications,
         double alpha, std::uint64_t seed, unsigned threads) {
        SmoothingConfig scfg{kappa, kappa_step, p_norm};
        return smoothed_band(ds, claim_from_dict(claim), c_grid, scfg, replications,
                             alpha, seed, FrontierConfig{}, threads);
      },
      py::arg("dataset"), py::arg("claim"), py::arg("c_grid"), py::arg("kappa") = 200.0,
      py::arg("kappa_step") = 200.0, py::arg("p_norm") = 64.0,
      py::arg("replications") = 200, py::arg("alpha") = 0.05, py::arg("seed") = 0,
      py::arg("threads") = 1);

  py::class_<McDgp>(m, "McDgp")
      .def(py::init<>())
      .def_readwrite("scale_offset", &McDgp::scale_offset)
      .def_readwrite("shift", &McDgp::shift)
      .def_readwrite("p_treat", &McDgp::p_treat);
  m.def("dgp_sample", &dgp_sample, py::arg("dgp"), py::arg("n"), py::arg("seed"));
  m.def(
      "population_frontier",
      [](const McDgp& dgp, const py::dict& claim, std::vector<double> c_grid) {
        return population_frontier(dgp, claim_from_dict(claim), c_grid);
      },
      py::arg("dgp"), py::arg("claim"), py::arg("c_grid"));
}

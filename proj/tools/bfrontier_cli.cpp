// Command-line front end: frontier estimation, confidence bands, coverage
// studies, step selection, and propensity diagnostics over CSV micro-data.
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bfrontier/bootstrap.hpp"
#include "bfrontier/bounds.hpp"
#include "bfrontier/dataset.hpp"
#include "bfrontier/empirical.hpp"
#include "bfrontier/frontier.hpp"
#include "bfrontier/montecarlo.hpp"
#include "bfrontier/parallel.hpp"
#include "bfrontier/smoothing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bfrontier;

namespace {

// Numbers are printed with %.17g so rerunning a configuration reproduces
// output files byte for byte.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct CommonOpts {
  std::string input;
  std::string outcome = "y";
  std::string treatment = "x";
  std::string covariates;    // comma-separated column names
  std::string coarsen_spec;  // per-covariate cut lists, ';'-separated
  std::string out_dir;
  unsigned threads = default_threads();
};

struct ClaimOpts {
  std::string kind = "dte";
  double z = 0.0;
  double p_floor = 0.5;
  double mu = 0.0;
  std::string joint_members;  // JSON array for joint claims
};

struct GridOpts {
  int points = 50;
  double upper_frac = 0.9;
  double upper_abs = -1.0;  // <0 means unset
  std::uint64_t jitter_seed = 0;
  bool jitter = false;
  bool include_cbar = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_input) {
  if (need_input) {
    cmd->add_option("--input", o.input, "CSV file")->required();
    cmd->add_option("--outcome", o.outcome, "outcome column");
    cmd->add_option("--treatment", o.treatment, "binary treatment column");
    cmd->add_option("--covariates", o.covariates, "comma-separated covariate columns");
    cmd->add_option("--coarsen", o.coarsen_spec,
                    "quantile cuts per covariate, e.g. '0.5;0.35,0.65'");
  }
  cmd->add_option("--out", o.out_dir,
                  "output directory (default $BFRONTIER_OUTPUT_DIR or .)");
  cmd->add_option("--threads", o.threads, "worker threads");
}

void add_claim(CLI::App* cmd, ClaimOpts& o) {
  cmd->add_option("--claim", o.kind, "dte | ate | joint-and | joint-or");
  cmd->add_option("--z", o.z, "effect threshold for dte claims");
  cmd->add_option("--p", o.p_floor, "probability floor for dte claims");
  cmd->add_option("--mu", o.mu, "mean floor for ate claims");
  cmd->add_option("--claims", o.joint_members,
                  R"(JSON members for joint claims, e.g. [{"kind":"dte","z":0,"p":0.5}])");
}

void add_grid(CLI::App* cmd, GridOpts& o) {
  cmd->add_option("--grid-points", o.points, "sensitivity grid size");
  cmd->add_option("--grid-max-frac", o.upper_frac,
                  "grid upper end as a fraction of the smallest propensity");
  cmd->add_option("--grid-max", o.upper_abs, "absolute grid upper end");
  auto* jit = cmd->add_option("--grid-jitter-seed", o.jitter_seed,
                              "draw grid points at random with this seed");
  jit->each([&o](const std::string&) { o.jitter = true; });
  cmd->add_flag("--grid-include-cbar", o.include_cbar,
                "append leave-out propensity gaps to the grid");
}

Claim claim_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dte") return Claim::dte(j.value("z", 0.0), j.at("p").get<double>());
  if (kind == "ate") return Claim::ate(j.at("mu").get<double>());
  throw std::invalid_argument("joint members must be dte or ate claims");
}

Claim build_claim(const ClaimOpts& o) {
  if (o.kind == "dte") return Claim::dte(o.z, o.p_floor);
  if (o.kind == "ate") return Claim::ate(o.mu);
  if (o.kind == "joint-and" || o.kind == "joint-or") {
    if (o.joint_members.empty())
      throw std::invalid_argument("joint claims need --claims");
    std::vector<Claim> members;
    for (const auto& j : json::parse(o.joint_members))
      members.push_back(claim_from_json(j));
    return o.kind == "joint-and" ? Claim::joint_and(std::move(members))
                                 : Claim::joint_or(std::move(members));
  }
  throw std::invalid_argument("unknown claim kind: " + o.kind);
}

json claim_to_json(const Claim& c) {
  json j;
  switch (c.kind) {
    case Claim::Kind::dte_at_least:
      j = {{"kind", "dte"}, {"z", c.z}, {"p", c.p_floor}};
      break;
    case Claim::Kind::ate_at_least:
      j = {{"kind", "ate"}, {"mu", c.mu}};
      break;
    case Claim::Kind::joint_and:
    case Claim::Kind::joint_or: {
      j["kind"] = c.kind == Claim::Kind::joint_and ? "joint-and" : "joint-or";
      for (const auto& m : c.members) j["members"].push_back(claim_to_json(m));
      break;
    }
  }
  return j;
}

Dataset load_input(const CommonOpts& o) {
  RawColumns cols =
      read_csv_columns(o.input, o.outcome, o.treatment, split_list(o.covariates, ','));
  // coarsening applies before cells are formed: raw cross-product cells may
  // violate overlap that the coarsened cells satisfy
  if (!o.coarsen_spec.empty()) {
    CoarseningSpec spec;
    for (const auto& group : split_list(o.coarsen_spec, ';')) {
      std::vector<double> cuts;
      for (const auto& tok : split_list(group, ',')) cuts.push_back(std::stod(tok));
      spec.cuts.push_back(std::move(cuts));
    }
    cols.covariates = bin_covariate_rows(cols.covariates, spec);
  }
  return Dataset::from_records(std::move(cols.y), std::move(cols.x),
                               std::move(cols.covariates));
}

fs::path resolve_out_dir(const CommonOpts& o) {
  std::string dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("BFRONTIER_OUTPUT_DIR");
    dir = env ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

std::vector<double> resolve_grid(const GridOpts& g, const Dataset& ds,
                                 const CellEstimates& ce) {
  GridSpec spec;
  spec.points = g.points;
  spec.upper_frac = g.upper_frac;
  if (g.upper_abs > 0.0) spec.upper_abs = g.upper_abs;
  if (g.jitter) spec.jitter_seed = g.jitter_seed;
  if (g.include_cbar && ds.covariate_count() >= 2)
    spec.extra_points = leave_out_cbar_all(ds);
  return make_c_grid(spec, ce.min_propensity());
}

json grid_to_json(const GridOpts& g, const std::vector<double>& grid) {
  json j = {{"points", grid.size()}, {"upper", grid.back()}};
  if (g.jitter) j["jitter_seed"] = g.jitter_seed;
  if (g.include_cbar) j["include_cbar"] = true;
  return j;
}

void write_frontier_csv(const fs::path& path, const FrontierCurve& fc, int claim_id,
                        bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!append) out << "c,t,claim_id\n";
  for (std::size_t j = 0; j < fc.c_grid.size(); ++j)
    out << fmt(fc.c_grid[j]) << "," << fmt(fc.t_values[j]) << "," << claim_id << "\n";
}

json frontier_meta(const FrontierCurve& fc) {
  json j;
  j["area"] = robust_region_area(fc);
  if (fc.ate_point) {
    j["breakdown_point"] = fc.ate_point->c_star;
    j["breakdown_degenerate"] = fc.ate_point->degenerate;
    j["breakdown_reached"] = fc.ate_point->reached;
  }
  if (!fc.undefined_points.empty()) j["undefined_points"] = fc.undefined_points;
  return j;
}

int cmd_frontier(const CommonOpts& common, const ClaimOpts& claim_opts,
                 const GridOpts& grid_opts) {
  const Dataset ds = load_input(common);
  const CellEstimates ce = estimate_theta(ds);
  const Claim claim = build_claim(claim_opts);
  const std::vector<double> c_grid = resolve_grid(grid_opts, ds, ce);
  const FrontierCurve fc = breakdown_frontier(ce, claim, c_grid);

  const fs::path dir = resolve_out_dir(common);
  write_frontier_csv(dir / "frontier.csv", fc, 0, false);
  json meta;
  meta["command"] = "frontier";
  meta["input"] = common.input;
  meta["claim"] = claim_to_json(claim);
  meta["grid"] = grid_to_json(grid_opts, c_grid);
  meta["result"] = frontier_meta(fc);
  if (!claim.members.empty()) {
    int id = 1;
    for (const auto& member : claim.members) {
      const FrontierCurve part = breakdown_frontier(ce, member, c_grid);
      write_frontier_csv(dir / "frontier.csv", part, id, true);
      meta["members"].push_back({{"claim_id", id},
                                 {"claim", claim_to_json(member)},
                                 {"result", frontier_meta(part)}});
      ++id;
    }
  }
  std::ofstream(dir / "frontier.json") << meta.dump(2) << "\n";
  std::cout << "wrote " << (dir / "frontier.csv").string() << "\n";
  return 0;
}

int cmd_band(const CommonOpts& common, const ClaimOpts& claim_opts,
             const GridOpts& grid_opts, BootstrapConfig bcfg, bool select_eps,
             int select_outer, const std::string& method, const SmoothingConfig& scfg,
             bool no_redraw) {
  const Dataset ds = load_input(common);
  const CellEstimates ce = estimate_theta(ds);
  const Claim claim = build_claim(claim_opts);
  const std::vector<double> c_grid = resolve_grid(grid_opts, ds, ce);
  bcfg.threads = common.threads;
  bcfg.enforce_overlap = !no_redraw;

  json meta;
  meta["command"] = "band";
  meta["input"] = common.input;
  meta["claim"] = claim_to_json(claim);
  meta["grid"] = grid_to_json(grid_opts, c_grid);
  meta["alpha"] = bcfg.alpha;
  meta["replications"] = bcfg.replications;
  meta["seed"] = bcfg.seed;
  meta["method"] = method;

  BandResult band;
  if (method == "smoothed") {
    band = smoothed_band(ds, claim, c_grid, scfg, bcfg.replications, bcfg.alpha,
                         bcfg.seed, FrontierConfig{}, common.threads);
    meta["kappa_minmax"] = scfg.kappa_minmax;
    meta["kappa_step"] = scfg.kappa_step;
    meta["p_norm"] = scfg.p_norm;
  } else if (method == "delta") {
    if (select_eps) {
      const EpsilonSelection sel =
          select_epsilon(ds, claim, bcfg.alpha, default_epsilon_grid(ds.n()),
                         select_outer, bcfg.replications, bcfg.seed, c_grid,
                         FrontierConfig{}, common.threads);
      bcfg.epsilon = sel.epsilon;
      meta["epsilon_selection"] = {{"grid", sel.epsilon_grid},
                                   {"coverage", sel.coverage}};
    }
    if (!(bcfg.epsilon > 0.0))
      throw std::invalid_argument("--epsilon must be positive (or use --select-epsilon)");
    band = build_band(ds, ce, claim, c_grid, bcfg);
    meta["epsilon"] = bcfg.epsilon;
  } else {
    throw std::invalid_argument("--method must be delta or smoothed");
  }

  const fs::path dir = resolve_out_dir(common);
  {
    std::ofstream out(dir / "band.csv");
    out << "c,frontier,lower_band\n";
    for (std::size_t j = 0; j < band.c_grid.size(); ++j)
      out << fmt(band.c_grid[j]) << "," << fmt(band.frontier[j]) << ","
          << fmt(band.lower_band[j]) << "\n";
  }
  meta["flagged_draws"] = band.flagged_draws;
  meta["band_area"] = band.area;
  meta["realized_coverage"] = band.realized_coverage;
  std::ofstream(dir / "band.json") << meta.dump(2) << "\n";
  std::cout << "wrote " << (dir / "band.csv").string() << "\n";
  return 0;
}

int cmd_mc(const CommonOpts& common, McDgp dgp, CoverageStudyConfig cc,
           const std::string& p_list, const std::string& ratio_list) {
  cc.threads = common.threads;
  std::vector<double> p_floors, ratios;
  for (const auto& tok : split_list(p_list, ',')) p_floors.push_back(std::stod(tok));
  for (const auto& tok : split_list(ratio_list, ',')) ratios.push_back(std::stod(tok));
  const auto rows = coverage_study(dgp, p_floors, ratios, cc);

  const fs::path dir = resolve_out_dir(common);
  {
    std::ofstream out(dir / "mc_coverage.csv");
    out << "N,epsilon,ratio,p_lower,coverage,area_ratio\n";
    for (const auto& r : rows)
      out << r.sample_size << "," << fmt(r.epsilon) << "," << fmt(r.epsilon_ratio)
          << "," << fmt(r.p_floor) << "," << fmt(r.coverage) << ","
          << fmt(r.area_ratio) << "\n";
  }
  json meta = {{"command", "mc"},
               {"N", cc.sample_size},
               {"simulations", cc.simulations},
               {"replications", cc.replications},
               {"alpha", cc.alpha},
               {"seed", cc.seed},
               {"grid_points", cc.grid_points},
               {"gamma", dgp.scale_offset},
               {"pi", dgp.shift},
               {"p_treat", dgp.p_treat}};
  std::ofstream(dir / "mc_coverage.json") << meta.dump(2) << "\n";
  std::cout << "wrote " << (dir / "mc_coverage.csv").string() << "\n";
  return 0;
}

int cmd_select_epsilon(const CommonOpts& common, const ClaimOpts& claim_opts,
                       const GridOpts& grid_opts, double alpha, int outer, int inner,
                       std::uint64_t seed) {
  const Dataset ds = load_input(common);
  const CellEstimates ce = estimate_theta(ds);
  const Claim claim = build_claim(claim_opts);
  const std::vector<double> c_grid = resolve_grid(grid_opts, ds, ce);
  const EpsilonSelection sel =
      select_epsilon(ds, claim, alpha, default_epsilon_grid(ds.n()), outer, inner,
                     seed, c_grid, FrontierConfig{}, common.threads);

  const fs::path dir = resolve_out_dir(common);
  {
    std::ofstream out(dir / "epsilon.csv");
    out << "epsilon,ratio,coverage\n";
    const double root_n = std::sqrt(static_cast<double>(ds.n()));
    for (std::size_t k = 0; k < sel.epsilon_grid.size(); ++k)
      out << fmt(sel.epsilon_grid[k]) << "," << fmt(sel.epsilon_grid[k] * root_n)
          << "," << fmt(sel.coverage[k]) << "\n";
  }
  json meta = {{"command", "select-epsilon"}, {"input", common.input},
               {"claim", claim_to_json(claim)}, {"alpha", alpha},
               {"outer", outer},               {"inner", inner},
               {"seed", seed},                 {"selected_epsilon", sel.epsilon}};
  std::ofstream(dir / "epsilon.json") << meta.dump(2) << "\n";
  std::cout << "selected epsilon " << fmt(sel.epsilon) << "\n";
  return 0;
}

int cmd_diagnose(const CommonOpts& common) {
  const Dataset ds = load_input(common);
  const auto cbar = leave_out_cbar_all(ds);
  const auto names = split_list(common.covariates, ',');

  const fs::path dir = resolve_out_dir(common);
  {
    std::ofstream out(dir / "diagnose.csv");
    out << "covariate,cbar\n";
    for (std::size_t k = 0; k < cbar.size(); ++k) {
      const std::string name = k < names.size() ? names[k] : "cov" + std::to_string(k);
      out << name << "," << fmt(cbar[k]) << "\n";
    }
  }
  json meta = {{"command", "diagnose"}, {"input", common.input}};
  std::ofstream(dir / "diagnose.json") << meta.dump(2) << "\n";
  std::cout << "wrote " << (dir / "diagnose.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Breakdown-frontier sensitivity analysis for binary treatments"};
  app.require_subcommand(1);

  CommonOpts common_frontier, common_band, common_mc, common_sel, common_diag;
  ClaimOpts claim_frontier, claim_band, claim_sel;
  GridOpts grid_frontier, grid_band, grid_sel;

  auto* sub_frontier = app.add_subcommand("frontier", "estimate a breakdown frontier");
  add_common(sub_frontier, common_frontier, true);
  add_claim(sub_frontier, claim_frontier);
  add_grid(sub_frontier, grid_frontier);

  auto* sub_band = app.add_subcommand("band", "frontier with a lower confidence band");
  add_common(sub_band, common_band, true);
  add_claim(sub_band, claim_band);
  add_grid(sub_band, grid_band);
  BootstrapConfig bcfg;
  bool select_eps = false, no_redraw = false;
  int select_outer = 500;
  std::string method = "delta";
  SmoothingConfig scfg;
  sub_band->add_option("--bootstrap", bcfg.replications, "bootstrap replications");
  sub_band->add_option("--alpha", bcfg.alpha, "band level is 1 - alpha");
  sub_band->add_option("--epsilon", bcfg.epsilon, "numerical-derivative step");
  sub_band->add_flag("--select-epsilon", select_eps, "pick the step by simulated coverage");
  sub_band->add_option("--select-outer", select_outer, "pseudo-samples for step selection");
  sub_band->add_option("--seed", bcfg.seed, "master seed");
  sub_band->add_flag("--no-redraw", no_redraw, "keep resamples that violate overlap");
  std::string sigma = "min-area";
  sub_band->add_option("--sigma", sigma, "min-area | constant");
  sub_band->add_option("--method", method, "delta | smoothed");
  sub_band->add_option("--kappa", scfg.kappa_minmax, "smoothed method: min/max sharpness");
  sub_band->add_option("--kappa-step", scfg.kappa_step, "smoothed method: step sharpness");
  sub_band->add_option("--pnorm", scfg.p_norm, "smoothed method: soft-infimum order");

  auto* sub_mc = app.add_subcommand("mc", "coverage study on the simulation design");
  add_common(sub_mc, common_mc, false);
  McDgp dgp;
  CoverageStudyConfig cc;
  std::string p_list = "0.1,0.25,0.5,0.75,0.9";
  std::string ratio_list = "0.5,1,1.5,2,4,6,8,10";
  sub_mc->add_option("--n", cc.sample_size, "sample size per simulation");
  sub_mc->add_option("--sims", cc.simulations, "simulated datasets");
  sub_mc->add_option("--bootstrap", cc.replications, "bootstrap draws per band");
  sub_mc->add_option("--alpha", cc.alpha, "band level is 1 - alpha");
  sub_mc->add_option("--seed", cc.seed, "master seed");
  sub_mc->add_option("--grid-points", cc.grid_points, "sensitivity grid size");
  auto* mc_gmax = sub_mc->add_option("--grid-max", cc.grid_abs,
                                     "absolute grid upper end (disables per-claim windows)");
  mc_gmax->each([&cc](const std::string&) { cc.death_frac = 0.0; });
  sub_mc->add_option("--death-frac", cc.death_frac,
                     "per-claim window end as a fraction of the frontier death point");
  sub_mc->add_option("--p-list", p_list, "comma-separated probability floors");
  sub_mc->add_option("--eps-ratios", ratio_list, "comma-separated epsilon/naive ratios");
  sub_mc->add_option("--gamma", dgp.scale_offset, "treated-arm scale offset");
  sub_mc->add_option("--pi", dgp.shift, "treated-arm location shift");
  sub_mc->add_option("--p-treat", dgp.p_treat, "treatment probability");

  auto* sub_sel = app.add_subcommand("select-epsilon", "bootstrap step selection");
  add_common(sub_sel, common_sel, true);
  add_claim(sub_sel, claim_sel);
  add_grid(sub_sel, grid_sel);
  double sel_alpha = 0.05;
  int sel_outer = 500, sel_inner = 1000;
  std::uint64_t sel_seed = 0;
  sub_sel->add_option("--alpha", sel_alpha, "band level is 1 - alpha");
  sub_sel->add_option("--outer", sel_outer, "pseudo-samples");
  sub_sel->add_option("--inner", sel_inner, "bootstrap draws per pseudo-sample");
  sub_sel->add_option("--seed", sel_seed, "master seed");

  auto* sub_diag = app.add_subcommand("diagnose", "leave-out propensity gaps");
  add_common(sub_diag, common_diag, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sub_frontier->parsed())
      return cmd_frontier(common_frontier, claim_frontier, grid_frontier);
    if (sub_band->parsed()) {
      if (select_eps && bcfg.epsilon > 0.0)
        throw std::invalid_argument("--epsilon and --select-epsilon are exclusive");
      bcfg.sigma_mode = sigma == "constant"
                            ? BootstrapConfig::SigmaMode::constant_one
                            : BootstrapConfig::SigmaMode::estimated_min_area;
      return cmd_band(common_band, claim_band, grid_band, bcfg, select_eps,
                      select_outer, method, scfg, no_redraw);
    }
    if (sub_mc->parsed()) return cmd_mc(common_mc, dgp, cc, p_list, ratio_list);
    if (sub_sel->parsed())
      return cmd_select_epsilon(common_sel, claim_sel, grid_sel, sel_alpha, sel_outer,
                                sel_inner, sel_seed);
    if (sub_diag->parsed()) return cmd_diagnose(common_diag);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

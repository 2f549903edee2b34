#pragma once

// Scenario runners: each builds its scene, runs the pipeline and records
// tables and verdicts in a Report. Module errors are captured with the
// failing stage named.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dumbbell/dumbbell.hpp"
#include "dumbbell/experiments/config.hpp"
#include "dumbbell/experiments/pool.hpp"
#include "dumbbell/experiments/report.hpp"

namespace dumbbell::experiments {

struct Scene {
  Mesh mesh;
  CollarGeometry geom;
  PlateauConstants pc;
};

struct SweepPoint {
  double epsilon = 0.0;
  double kappa = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double residual = 0.0;
  double bound = 0.0;
  double volume_error = 0.0;
  Vector u;
};

struct RunContext {
  const ScenarioConfig& cfg;
  Report& report;
  int workers = 1;
  std::string stage = "setup";
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void enter(const std::string& next) {
    const auto now = std::chrono::steady_clock::now();
    report.timing(stage, std::chrono::duration<double>(now - started).count());
    stage = next;
    started = now;
  }
};

inline std::function<double(double)> linear_warp(double slope) {
  return [slope](double r) { return 1.0 + slope * r; };
}

inline Mesh build_mesh(const ScenarioConfig& cfg, const std::vector<int>& resolution, bool warped) {
  if (cfg.scene == "file") {
    Mesh mesh = load_mesh(cfg.mesh_path);
    validate(mesh);
    return mesh;
  }
  std::optional<Warp> warp;
  if (warped) warp = Warp{linear_warp(cfg.warp_slope), cfg.sigma_offset, "linear"};
  return build_box_grid(cfg.d, resolution, warp);
}

inline Scene make_scene(const ScenarioConfig& cfg, Mesh mesh, double eta) {
  Scene s;
  s.mesh = std::move(mesh);
  s.geom = collar_geometry(s.mesh, SigmaPlane{cfg.sigma_offset}, snap_eta_to_grid(s.mesh, eta));
  s.pc = compute_plateaus(s.geom);
  return s;
}

inline Scene make_scene(const ScenarioConfig& cfg) {
  return make_scene(cfg, build_mesh(cfg, cfg.n, cfg.scene == "warped_box"), cfg.eta);
}

inline EigenOptions eigen_options(const ScenarioConfig& cfg) {
  EigenOptions o;
  o.tol = cfg.tol;
  o.seed = cfg.seed;
  return o;
}

inline SweepPoint sweep_point(const Scene& scene, double eps, const ScenarioConfig& cfg) {
  const ConformalField field = build_conformal_field(scene.mesh, scene.geom, eps);
  const OperatorPair pair = assemble(scene.mesh, field);
  const EigenResult r = normalize_and_sign(solve_smallest(pair, 3, eigen_options(cfg)), pair, scene.mesh, scene.geom);
  SweepPoint p;
  p.epsilon = eps;
  p.kappa = field.kappa;
  p.lambda1 = r.eigenvalues[1];
  p.lambda2 = r.eigenvalues[2];
  p.residual = std::max(r.residuals[1], r.residuals[2]);
  p.volume_error = verify_volume_preservation(field, scene.geom);
  p.bound = is_grid_aligned(scene.mesh, scene.geom) ? test_function_bound(scene.mesh, scene.geom, field, pair).value
                                                    : std::nan("");
  p.u = r.mode(1);
  return p;
}

inline std::vector<SweepPoint> run_sweep(RunContext& ctx, const Scene& scene, const std::vector<double>& epsilons) {
  ctx.enter("eigen");
  return parallel_map<SweepPoint>(static_cast<int>(epsilons.size()), ctx.workers, [&](int i) {
    return sweep_point(scene, epsilons[static_cast<std::size_t>(i)], ctx.cfg);
  });
}

inline double smallest(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

/// Records the two monotonicity verdicts for `values` ordered by decreasing eps:
/// at most `glitches` increases, each no larger than `slack` relative.
inline void monotone_verdicts(Report& report, const std::string& name, const std::vector<double>& values,
                              const Thresholds& t) {
  int increases = 0;
  double worst = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1]) {
      ++increases;
      worst = std::max(worst, (values[i] - values[i - 1]) / values[i - 1]);
    }
  }
  report.at_most(name + "_increases", increases, t.monotone_glitches);
  report.at_most(name + "_max_relative_increase", worst, t.monotone_slack);
}

inline std::vector<std::size_t> order_by_decreasing(const std::vector<double>& eps) {
  std::vector<std::size_t> idx(eps.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return eps[a] > eps[b]; });
  return idx;
}

// ---------------------------------------------------------------------------

inline void run_scaling(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  const Scene scene = make_scene(cfg);
  rep.scalar("eta", scene.geom.eta);
  rep.scalar("vertices", scene.mesh.num_vertices());
  const auto points = run_sweep(ctx, scene, cfg.epsilons);

  ctx.enter("oracle");
  const bool product = cfg.scene == "box";
  std::vector<OracleSpectrum> oracle;
  if (product) {
    oracle = parallel_map<OracleSpectrum>(static_cast<int>(cfg.epsilons.size()), ctx.workers, [&](int i) {
      const double eps = cfg.epsilons[static_cast<std::size_t>(i)];
      return sturm_liouville_neumann(step_profile_1d(eps, scene.geom.eta, cfg.sigma_offset, cfg.d, cfg.oracle_cells), 2);
    });
  }

  ctx.enter("report");
  auto& table = rep.table("sweep", {"epsilon", "kappa", "lambda1", "lambda2", "test_bound", "volume_error",
                                    "oracle_lambda1", "oracle_lambda1_extrapolated"});
  std::vector<double> l3, l1d;
  double sandwich = -std::numeric_limits<double>::infinity();
  double volume = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const double o = product ? oracle[i].eigenvalues[1] : std::nan("");
    const double ox = product ? oracle[i].extrapolated[1] : std::nan("");
    table.add({p.epsilon, p.kappa, p.lambda1, p.lambda2, p.bound, p.volume_error, o, ox});
    l3.push_back(p.lambda1);
    l1d.push_back(o);
    sandwich = std::max(sandwich, std::isnan(p.bound) ? std::numeric_limits<double>::infinity() : p.lambda1 - p.bound);
    volume = std::max(volume, p.volume_error);
  }
  const ScalingFit fit = scaling_fit(cfg.epsilons, l3);
  rep.scalar("slope_intercept", fit.intercept);
  rep.scalar("slope_max_residual", fit.max_residual);
  rep.within("slope_fem", fit.slope, cfg.thresholds.slope_min, cfg.thresholds.slope_max);
  if (product) {
    const ScalingFit ofit = scaling_fit(cfg.epsilons, l1d);
    rep.within("slope_oracle", ofit.slope, cfg.thresholds.oracle_slope_min, cfg.thresholds.oracle_slope_max);
  }
  rep.at_most("sandwich_max_lambda1_minus_bound", sandwich, cfg.thresholds.sandwich_slack);
  rep.at_most("volume_relative_error", volume, cfg.thresholds.volume);
}

inline void run_gap(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  const Scene scene = make_scene(cfg);
  const double eps = smallest(cfg.epsilons);
  const auto points = run_sweep(ctx, scene, {eps});
  const auto& p = points.front();

  ctx.enter("neumann");
  auto& table = rep.table("neumann", {"side", "mu1_reference", "mu1_outer_metric"});
  double mu_ref = std::numeric_limits<double>::infinity();
  double mu_outer = mu_ref;
  for (Region side : {Region::plus, Region::minus}) {
    const OperatorPair ref = subdomain_neumann(scene.mesh, scene.geom, side);
    const OperatorPair outer = subdomain_neumann(scene.mesh, scene.geom, side, p.kappa);
    const double a = solve_smallest(ref, 2, eigen_options(cfg)).eigenvalues[1];
    const double b = solve_smallest(outer, 2, eigen_options(cfg)).eigenvalues[1];
    table.add({side == Region::plus ? 1.0 : -1.0, a, b});
    mu_ref = std::min(mu_ref, a);
    mu_outer = std::min(mu_outer, b);
  }

  ctx.enter("report");
  rep.scalar("epsilon", eps);
  rep.scalar("kappa", p.kappa);
  rep.scalar("lambda1", p.lambda1);
  rep.scalar("lambda2", p.lambda2);
  rep.scalar("mu1_reference_min", mu_ref);
  rep.scalar("mu1_outer_metric_min", mu_outer);
  rep.scalar("relative_difference_reference_metric", std::abs(p.lambda2 - mu_ref) / mu_ref);
  rep.at_most("gap_lambda2_vs_outer_neumann", std::abs(p.lambda2 - mu_outer) / mu_outer, cfg.thresholds.gap_relative);
  rep.at_least("gap_ratio_lambda2_over_lambda1", p.lambda2 / p.lambda1, cfg.thresholds.gap_ratio);
}

inline double plateau_deviation(const Scene& scene, const Vector& u) {
  double worst = 0.0;
  for (int v = 0; v < scene.mesh.num_vertices(); ++v) {
    const double r = scene.geom.rho(v);
    if (std::abs(r) < 2.0 * scene.geom.eta) continue;
    worst = std::max(worst, std::abs(u(v) - (r > 0 ? scene.pc.c_plus : scene.pc.c_minus)));
  }
  return worst / scene.pc.jump();
}

inline void run_plateau(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  const Scene scene = make_scene(cfg);
  const auto points = run_sweep(ctx, scene, cfg.epsilons);
  ctx.enter("report");
  rep.scalar("c_plus", scene.pc.c_plus);
  rep.scalar("c_minus", scene.pc.c_minus);
  auto& table = rep.table("plateau", {"epsilon", "sup_deviation_relative"});
  std::vector<double> ordered;
  for (std::size_t i : order_by_decreasing(cfg.epsilons)) {
    const double dev = plateau_deviation(scene, points[i].u);
    table.add({points[i].epsilon, dev});
    ordered.push_back(dev);
  }
  rep.at_most("plateau_sup_at_smallest_epsilon", ordered.back(), cfg.thresholds.plateau);
  monotone_verdicts(rep, "plateau_monotone", ordered, cfg.thresholds);
}

inline void run_collar(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  const Scene scene = make_scene(cfg);
  const auto points = run_sweep(ctx, scene, cfg.epsilons);
  ctx.enter("harmonic");
  const HarmonicSolution hs = solve_harmonic(scene.mesh, scene.geom, scene.pc);

  ctx.enter("report");
  auto& table = rep.table("collar", {"epsilon", "sup_deviation_relative"});
  std::vector<double> ordered;
  const auto order = order_by_decreasing(cfg.epsilons);
  for (std::size_t i : order) {
    double worst = 0.0;
    for (int v = 0; v < scene.mesh.num_vertices(); ++v) {
      if (hs.collar_vertex[static_cast<std::size_t>(v)]) worst = std::max(worst, std::abs(points[i].u(v) - hs.h(v)));
    }
    table.add({points[i].epsilon, worst / scene.pc.jump()});
    ordered.push_back(worst / scene.pc.jump());
  }
  rep.at_most("collar_sup_at_smallest_epsilon", ordered.back(), cfg.thresholds.collar);
  monotone_verdicts(rep, "collar_monotone", ordered, cfg.thresholds);

  // center fiber profile at the smallest epsilon
  if (scene.mesh.grid) {
    const auto& res = scene.mesh.grid->resolution;
    auto& prof = rep.table("profile", {"rho", "u", "h", "hbar"});
    std::vector<int> idx(static_cast<std::size_t>(cfg.d));
    for (int a = 1; a < cfg.d; ++a) idx[static_cast<std::size_t>(a)] = res[static_cast<std::size_t>(a)] / 2;
    const Vector& u = points[order.back()].u;
    for (int i = 0; i <= res[0]; ++i) {
      idx[0] = i;
      const int v = scene.mesh.grid->vertex_index(idx);
      prof.add({scene.geom.rho(v), u(v), hs.h(v), hbar(std::clamp(scene.geom.rho(v), -scene.geom.eta, scene.geom.eta), scene.geom.eta, scene.pc)});
    }
  }
}

inline void run_nodal(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  const Scene scene = make_scene(cfg);
  const double eps = smallest(cfg.epsilons);
  const auto points = run_sweep(ctx, scene, {eps});
  const Vector& u = points.front().u;

  ctx.enter("nodal");
  const NodalSet ns = extract_nodal_set(scene.mesh, u);
  const LocalizationReport loc = localization_report(ns, scene.geom);
  const RegularityReport reg = regularity_min_gradient(scene.mesh, u, ns);
  const int domains = nodal_domain_count(scene.mesh, u);
  const double eta = scene.geom.eta;
  const double slope = scene.pc.jump() / (2.0 * eta);

  ctx.enter("report");
  rep.scalar("epsilon", eps);
  rep.scalar("eta", eta);
  rep.scalar("hbar_root", hbar_root(eta, scene.pc));
  rep.scalar("nodal_min_rho", loc.min_rho);
  rep.scalar("nodal_max_rho", loc.max_rho);
  rep.scalar("nodal_area", ns.total_measure);
  rep.scalar("hbar_slope", slope);
  rep.equals("nodal_components", loc.components, 1);
  rep.at_most("nodal_max_abs_rho", loc.max_abs_rho, eta);
  if (scene.mesh.grid) {
    rep.equals("single_crossing", single_crossing_check(scene.mesh, u, scene.geom) ? 1.0 : 0.0, 1.0);
  } else {
    rep.note("single_crossing", "unsupported on non-box scenes");
  }
  rep.equals("nodal_domains", domains, 2);
  rep.at_least("regularity_min_gradient", reg.min_gradient, cfg.thresholds.gradient_margin * slope);

  std::ostringstream soup;
  write_polygon_soup(soup, ns);
  rep.artifact("surface", soup.str());
}

inline void run_oracle_compare(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  if (cfg.scene != "box") throw GeometryError("oracle-compare needs a product box scene");
  const Scene scene = make_scene(cfg);
  const auto points = run_sweep(ctx, scene, cfg.epsilons);
  ctx.enter("oracle");
  const auto oracle = parallel_map<OracleSpectrum>(static_cast<int>(cfg.epsilons.size()), ctx.workers, [&](int i) {
    const double eps = cfg.epsilons[static_cast<std::size_t>(i)];
    return sturm_liouville_neumann(step_profile_1d(eps, scene.geom.eta, cfg.sigma_offset, cfg.d, cfg.oracle_cells), 2);
  });
  ctx.enter("report");
  auto& table = rep.table("oracle", {"epsilon", "lambda1_fem", "lambda1_oracle", "lambda1_oracle_extrapolated",
                                     "relative_difference"});
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double ref = oracle[i].extrapolated[1];
    const double rel = std::abs(points[i].lambda1 - ref) / ref;
    table.add({points[i].epsilon, points[i].lambda1, oracle[i].eigenvalues[1], ref, rel});
    worst = std::max(worst, rel);
  }
  rep.at_most("oracle_relative_difference", worst, cfg.thresholds.oracle_relative);
}

inline void run_harmonic_approx(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  const auto& t = cfg.thresholds;

  ctx.enter("flat");
  {
    ScenarioConfig flat = cfg;
    flat.scene = "box";
    const Scene scene = make_scene(flat);
    const HarmonicSolution hs = solve_harmonic(scene.mesh, scene.geom, scene.pc);
    rep.scalar("flat_eta", scene.geom.eta);
    rep.at_most("flat_sup_h_minus_hbar", hs.sup_deviation, t.flat_harmonic);
  }

  ctx.enter("warped");
  std::vector<double> etas = cfg.etas;
  std::sort(etas.begin(), etas.end(), std::greater<>());
  ScenarioConfig warped_cfg = cfg;
  warped_cfg.scene = "warped_box";
  const Mesh warped = build_mesh(warped_cfg, cfg.warped_n, true);
  const auto w = linear_warp(cfg.warp_slope);
  struct WarpedRow {
    double eta, sup_dev, closed_dev, fem_err;
    Scene scene;
    HarmonicSolution hs;
  };
  auto rows = parallel_map<WarpedRow>(static_cast<int>(etas.size()), ctx.workers, [&](int i) {
    Scene scene = make_scene(warped_cfg, warped, etas[static_cast<std::size_t>(i)]);
    HarmonicSolution hs = solve_harmonic(scene.mesh, scene.geom, scene.pc);
    const double eta = scene.geom.eta;
    const auto exact = warped_harmonic_1d(w, eta, scene.pc, cfg.d);
    double closed = 0.0, err = 0.0;
    for (int v = 0; v < scene.mesh.num_vertices(); ++v) {
      if (!hs.collar_vertex[static_cast<std::size_t>(v)]) continue;
      const double r = std::clamp(scene.geom.rho(v), -eta, eta);
      const double e = exact(r);
      closed = std::max(closed, std::abs(e - hbar(r, eta, scene.pc)));
      err = std::max(err, std::abs(hs.h(v) - e));
    }
    const double jump = scene.pc.jump();
    return WarpedRow{eta, hs.sup_deviation / jump, closed / jump, err / jump, std::move(scene), std::move(hs)};
  });
  auto& wt = rep.table("warped", {"eta", "sup_h_minus_hbar_relative", "closed_form_sup_relative", "fem_vs_closed_form_relative"});
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    wt.add({rows[i].eta, rows[i].sup_dev, rows[i].closed_dev, rows[i].fem_err});
    if (i > 0) worst_ratio = std::min(worst_ratio, rows[i - 1].sup_dev / rows[i].sup_dev);
  }
  if (rows.size() > 1) rep.at_least("warped_halving_factor", worst_ratio, t.halving_factor);

  ctx.enter("fourier");
  CrossSectionGrid grid;
  grid.cells = cfg.fourier_cross;
  grid.lengths.assign(grid.cells.size(), 1.0);
  FourierOptions fopts;
  fopts.modes = cfg.fourier_modes;
  fopts.tol = cfg.fourier_tol;
  struct FourierRow {
    double eta, iterations, contraction, sup_w, closed_err, fem_diff;
  };
  auto frows = parallel_map<FourierRow>(static_cast<int>(rows.size()), ctx.workers, [&](int i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    const double eta = row.eta;
    const PlateauConstants& pc = row.scene.pc;
    const auto sol = collar_fourier_solve(grid, eta, warped_collar_coefficients(w, eta, pc, cfg.d), fopts);
    const auto exact = warped_harmonic_1d(w, eta, pc, cfg.d);
    double sup_w = 0.0, err = 0.0;
    const int samples = 400;
    for (int k = 0; k <= samples; ++k) {
      const double r = -eta + 2.0 * eta * k / samples;
      const double wf = sol.at_rho(r);
      sup_w = std::max(sup_w, std::abs(wf));
      err = std::max(err, std::abs(wf - (exact(r) - hbar(r, eta, pc))));
    }
    double diff = 0.0;
    const auto& sc = row.scene;
    for (int v = 0; v < sc.mesh.num_vertices(); ++v) {
      if (!row.hs.collar_vertex[static_cast<std::size_t>(v)]) continue;
      const double r = std::clamp(sc.geom.rho(v), -eta, eta);
      diff = std::max(diff, std::abs((row.hs.h(v) - row.hs.hbar(v)) - sol.at_rho(r)));
    }
    return FourierRow{eta, static_cast<double>(sol.iterations), sol.contraction, sup_w / pc.jump(), err / pc.jump(),
                      diff / sup_w};
  });
  auto& ft = rep.table("fourier", {"eta", "iterations", "contraction", "sup_w_relative", "closed_form_error_relative",
                                   "fem_difference_relative"});
  double worst_err = 0.0, worst_fem = 0.0;
  double halving_lo = std::numeric_limits<double>::infinity(), halving_hi = 0.0;
  for (std::size_t i = 0; i < frows.size(); ++i) {
    const auto& f = frows[i];
    ft.add({f.eta, f.iterations, f.contraction, f.sup_w, f.closed_err, f.fem_diff});
    worst_err = std::max(worst_err, f.closed_err);
    worst_fem = std::max(worst_fem, f.fem_diff);
    if (i > 0) {
      const double ratio = frows[i - 1].sup_w / f.sup_w;
      halving_lo = std::min(halving_lo, ratio);
      halving_hi = std::max(halving_hi, ratio);
    }
  }
  rep.at_most("fourier_vs_closed_form_relative", worst_err, t.fourier_relative);
  rep.at_most("fourier_vs_fem_relative", worst_fem, t.fourier_fem);
  if (frows.size() > 1) {
    rep.within("fourier_halving_min_ratio", halving_lo, t.fourier_halving_min, t.fourier_halving_max);
    rep.within("fourier_halving_max_ratio", halving_hi, t.fourier_halving_min, t.fourier_halving_max);
  }
}

struct MollifyRow {
  double spacings, width, gamma, lambda1, relative, vector;
};

inline std::vector<MollifyRow> mollify_rows(const Scene& scene, double eps, const std::vector<double>& widths,
                                            const ScenarioConfig& cfg, int workers, std::vector<std::string>& warnings) {
  const ConformalField step = build_conformal_field(scene.mesh, scene.geom, eps);
  const OperatorPair sp = assemble(scene.mesh, step);
  const EigenResult ref = normalize_and_sign(solve_smallest(sp, 2, eigen_options(cfg)), sp, scene.mesh, scene.geom);
  const double h = mesh_spacing(scene.mesh);
  const double jump = scene.pc.jump();
  std::vector<std::vector<std::string>> warn(widths.size());
  auto rows = parallel_map<MollifyRow>(static_cast<int>(widths.size()), workers, [&](int i) {
    const double k = widths[static_cast<std::size_t>(i)];
    const ConformalField moll = build_conformal_field(scene.mesh, scene.geom, eps, MollifiedProfile{k * h});
    warn[static_cast<std::size_t>(i)] = moll.warnings;
    const double gamma = volume_rescaling(moll, scene.geom);
    const OperatorPair scaled = assemble(scene.mesh, moll.scaled(gamma));
    const EigenResult r = normalize_and_sign(solve_smallest(scaled, 2, eigen_options(cfg)), scaled, scene.mesh, scene.geom);
    // unit mass in g_n itself: the eigenvector is compared without rescaling
    const OperatorPair plain = assemble(scene.mesh, moll);
    Vector un = r.mode(1);
    un /= std::sqrt(un.dot(plain.M * un));
    const double lambda = r.eigenvalues[1];
    return MollifyRow{k, k * h, gamma, lambda, std::abs(lambda - ref.eigenvalues[1]) / ref.eigenvalues[1],
                      (un - ref.mode(1)).cwiseAbs().maxCoeff() / jump};
  });
  for (const auto& w : warn) warnings.insert(warnings.end(), w.begin(), w.end());
  return rows;
}

inline void run_mollify(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  const auto& t = cfg.thresholds;
  const Scene scene = make_scene(cfg);
  const double eps = smallest(cfg.epsilons);
  std::vector<double> widths = cfg.widths;
  std::sort(widths.begin(), widths.end(), std::greater<>());
  std::vector<std::string> warnings;

  ctx.enter("eigen");
  const auto rows = mollify_rows(scene, eps, widths, cfg, ctx.workers, warnings);
  ctx.enter("report");
  rep.scalar("epsilon", eps);
  rep.scalar("mesh_spacing", mesh_spacing(scene.mesh));
  auto& table = rep.table("mollify", {"width_spacings", "width", "gamma", "lambda1", "relative_difference", "vector_difference_relative"});
  int violations = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    table.add({r.spacings, r.width, r.gamma, r.lambda1, r.relative, r.vector});
    if (i > 0 && !(r.relative < rows[i - 1].relative)) ++violations;
  }
  rep.equals("mollify_monotone_violations", violations, 0);
  rep.at_most("mollify_relative_at_finest_width", rows.back().relative, t.mollify_relative);
  rep.at_most("mollify_vector_at_finest_width", rows.back().vector, t.mollify_vector);

  if (cfg.reference_n > 0 && cfg.scene == "box") {
    ctx.enter("isotropic_reference");
    ScenarioConfig iso = cfg;
    iso.n = {cfg.reference_n};
    const Scene ref_scene = make_scene(iso);
    const auto iso_rows = mollify_rows(ref_scene, eps, widths, cfg, ctx.workers, warnings);
    auto& it = rep.table("isotropic_reference", {"width_spacings", "width", "gamma", "lambda1", "relative_difference",
                                                 "vector_difference_relative"});
    for (const auto& r : iso_rows) it.add({r.spacings, r.width, r.gamma, r.lambda1, r.relative, r.vector});
  }
  Json w = Json::array();
  for (const auto& s : warnings) w.push_back(s);
  rep.note("warnings", w);
}

inline std::function<double(const Vector&)> torus_level(double major, double minor) {
  return [major, minor](const Vector& x) {
    const double a = x(0) - 0.5, b = x(1) - 0.5, c = x(2) - 0.5;
    const double q = std::sqrt(a * a + b * b) - major;
    return q * q + c * c - minor * minor;
  };
}

inline void counts_row(Table& t, double tag, const CriticalReport& r) {
  std::vector<double> row{tag};
  for (int i = 0; i < 4; ++i) row.push_back(i < static_cast<int>(r.index_counts.size()) ? r.index_counts[static_cast<std::size_t>(i)] : 0);
  t.add(row);
}

inline void run_morse(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto& rep = ctx.report;
  auto& counts = rep.table("critical_counts", {"case", "index0", "index1", "index2", "index3"});

  ctx.enter("cosine");
  {
    const double lx = cfg.morse_extent[0], ly = cfg.morse_extent[1];
    const Mesh mesh = build_periodic_grid_2d(static_cast<int>(std::lround(cfg.morse_n * lx)),
                                             static_cast<int>(std::lround(cfg.morse_n * ly)), lx, ly);
    Vector u(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      u(v) = std::cos(2 * std::numbers::pi * mesh.vertices(0, v)) * std::cos(2 * std::numbers::pi * mesh.vertices(1, v));
    }
    const CriticalReport r = classify_critical_points(mesh, u);
    counts_row(counts, 1, r);
    rep.equals("cosine_minima", r.minima(), 4);
    rep.equals("cosine_maxima", r.maxima(), 4);
    rep.equals("cosine_saddles", r.saddles(), 8);
    rep.equals("cosine_euler_identity", r.alternating_sum(), euler_characteristic(mesh));
  }

  ctx.enter("genus1");
  const Mesh mesh = build_box_grid(3, {cfg.torus_n});
  const SigmaLevelSet sigma{torus_level(cfg.torus_major, cfg.torus_minor), "torus"};
  const Vector rho = signed_distance(mesh, sigma);
  {
    std::vector<bool> inside(static_cast<std::size_t>(mesh.num_cells()));
    for (int c = 0; c < mesh.num_cells(); ++c) {
      double r = 0.0;
      for (int k = 0; k <= 3; ++k) r += rho(mesh.cells(k, c));
      inside[static_cast<std::size_t>(c)] = r < 0.0;
    }
    const CriticalReport r = classify_critical_points(mesh, rho, &inside);
    counts_row(counts, 2, r);
    rep.equals("genus1_betti_bound", betti_bound_check(r, {1, 1}) ? 1.0 : 0.0, 1.0);
  }

  ctx.enter("eigenfunction");
  {
    const CollarGeometry geom = label_regions(mesh, rho, snap_eta_to_grid(mesh, cfg.torus_eta));
    const ConformalField field = build_conformal_field(mesh, geom, cfg.torus_epsilon);
    const OperatorPair pair = assemble(mesh, field);
    const EigenResult er = normalize_and_sign(solve_smallest(pair, 2, eigen_options(cfg)), pair, mesh, geom);
    const Vector u = er.mode(1);
    // D~: cells where u is negative throughout (the side of Omega^-)
    std::vector<bool> region(static_cast<std::size_t>(mesh.num_cells()));
    for (int c = 0; c < mesh.num_cells(); ++c) {
      bool neg = true;
      for (int k = 0; k <= 3; ++k) neg = neg && u(mesh.cells(k, c)) < 0.0;
      region[static_cast<std::size_t>(c)] = neg;
    }
    const CriticalReport r = classify_critical_points(mesh, u, &region);
    counts_row(counts, 3, r);
    rep.scalar("eigenfunction_lambda1", er.eigenvalues[1]);
    rep.scalar("eigenfunction_eta", geom.eta);
    rep.note("eigenfunction_betti_bound_report_only", betti_bound_check(r, {1, 1}));
  }
  rep.note("case_legend", "1 = cosine product on the periodic grid, 2 = signed distance inside the genus-1 surface, "
                          "3 = first eigenfunction on its Omega^- nodal domain (report only)");
}

inline const std::map<std::string, std::function<void(RunContext&)>>& scenario_table() {
  static const std::map<std::string, std::function<void(RunContext&)>> table{
      {"scaling", run_scaling},       {"gap", run_gap},         {"plateau", run_plateau},
      {"collar", run_collar},         {"harmonic-approx", run_harmonic_approx},
      {"nodal", run_nodal},           {"mollify", run_mollify}, {"morse", run_morse},
      {"oracle-compare", run_oracle_compare},
  };
  return table;
}

/// Runs one scenario. Never throws for module errors: they become a failed
/// "stage:<name>" verdict plus an error block in the report.
inline Report run_scenario(const ScenarioConfig& cfg, int workers = 1) {
  validate(cfg);
  Report report(cfg);
  RunContext ctx{cfg, report, std::max(1, workers)};
  try {
    scenario_table().at(cfg.scenario)(ctx);
  } catch (const std::exception& e) {
    report.error(ctx.stage, e.what());
  }
  ctx.enter("done");
  return report;
}

}  // namespace dumbbell::experiments

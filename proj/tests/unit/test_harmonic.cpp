#include <map>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

namespace db = dumbbell;
using db::testing::flat_scene;

namespace {

double linear_w(double r) { return 1.0 + r; }

db::PlateauConstants symmetric_constants() { return db::compute_plateaus(0.375, 0.375, db::kappa_limit(0.25, 0.75, 3), 3); }

double sup_closed_form_deviation(double eta, const db::PlateauConstants& pc) {
  const auto h = db::warped_harmonic_1d(linear_w, eta, pc, 3);
  double sup = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double r = -eta + 2.0 * eta * k / 200;
    sup = std::max(sup, std::abs(h(r) - db::hbar(r, eta, pc)));
  }
  return sup / pc.jump();
}

}  // namespace

TEST(Plateaus, SymmetricVolumes) {
  const double V = 0.4, k0 = 1.3;
  const auto pc = db::compute_plateaus(V, V, k0, 3);
  EXPECT_NEAR(pc.c_plus, std::pow(k0, -0.75) / std::sqrt(2 * V), 1e-15);
  EXPECT_NEAR(pc.c_minus, -pc.c_plus, 1e-15);
}

TEST(Plateaus, TwoToOneVolumes) {
  const double V = 0.2, k0 = 1.1;
  const auto pc = db::compute_plateaus(2 * V, V, k0, 3);
  EXPECT_NEAR(pc.c_minus, -2 * pc.c_plus, 1e-14);
  EXPECT_NEAR(pc.c_plus, std::pow(k0, -0.75) / std::sqrt(6 * V), 1e-14);
  EXPECT_NEAR(pc.c_plus * pc.c_plus * 2 * V + pc.c_minus * pc.c_minus * V, std::pow(k0, -1.5), 1e-12);
}

TEST(Plateaus, DefiningIdentitiesForRandomVolumes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> vol(0.01, 2.0), kap(0.5, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double vp = vol(rng), vm = vol(rng), k0 = kap(rng);
    for (int d : {2, 3}) {
      const auto pc = db::compute_plateaus(vp, vm, k0, d);
      EXPECT_GT(pc.c_plus, 0.0);
      EXPECT_LT(pc.c_minus, 0.0);
      EXPECT_NEAR(pc.c_plus * vp + pc.c_minus * vm, 0.0, 1e-14);
      const double target = std::pow(k0, -0.5 * d);
      EXPECT_NEAR((pc.c_plus * pc.c_plus * vp + pc.c_minus * pc.c_minus * vm) / target, 1.0, 1e-12);
    }
  }
}

TEST(Plateaus, RejectsEmptySide) { EXPECT_THROW(db::compute_plateaus(0.0, 1.0, 1.0, 3), db::GeometryError); }

TEST(Hbar, EndpointsMidpointRoot) {
  const db::PlateauConstants pc{1.5, -0.5, 1.0};
  EXPECT_DOUBLE_EQ(db::hbar(0.1, 0.1, pc), 1.5);
  EXPECT_DOUBLE_EQ(db::hbar(-0.1, 0.1, pc), -0.5);
  EXPECT_DOUBLE_EQ(db::hbar(0.0, 0.1, pc), 0.5);
  EXPECT_NEAR(db::hbar(db::hbar_root(0.1, pc), 0.1, pc), 0.0, 1e-15);
  EXPECT_EQ(db::hbar_root(0.1, symmetric_constants()), 0.0);
}

TEST(SolveHarmonic, FlatCollarIsAffine) {
  const auto sc = flat_scene(3, 16, 0.125);
  const auto pc = db::compute_plateaus(sc.geom);
  const auto hs = db::solve_harmonic(sc.mesh, sc.geom, pc);
  EXPECT_LE(hs.sup_deviation, 1e-10);
  EXPECT_FALSE(hs.boundary.empty());
}

TEST(SolveHarmonic, ConstantData) {
  const auto sc = flat_scene(3, 8, 0.25);
  const auto hs = db::solve_harmonic(sc.mesh, sc.geom, {0.8, 0.8, 1.0});
  EXPECT_LT((hs.h.array() - 0.8).abs().maxCoeff(), 1e-12);
}

TEST(SolveHarmonic, MaximumPrinciple) {
  const auto sc = db::testing::warped_scene(3, {16, 4, 4}, 0.25, linear_w);
  const auto pc = db::compute_plateaus(sc.geom);
  const auto hs = db::solve_harmonic(sc.mesh, sc.geom, pc);
  EXPECT_GE(hs.h.minCoeff(), pc.c_minus - 1e-10);
  EXPECT_LE(hs.h.maxCoeff(), pc.c_plus + 1e-10);
}

TEST(SolveHarmonic, WarpedMatchesClosedFormQuadratically) {
  // pointwise error and the spread across each rho-plane come from the
  // per-simplex metric samples; the plane means carry the 1D solution
  std::vector<double> pointwise, plane_mean;
  for (int n : {10, 20, 40}) {
    const auto sc = db::testing::warped_scene(3, {n, 2, 2}, 0.2, linear_w);
    const auto pc = db::compute_plateaus(sc.geom);
    const auto hs = db::solve_harmonic(sc.mesh, sc.geom, pc);
    const auto exact = db::warped_harmonic_1d(linear_w, sc.geom.eta, pc, 3);
    double err = 0.0;
    std::map<long, std::pair<double, int>> planes;
    for (int v = 0; v < sc.mesh.num_vertices(); ++v) {
      if (!hs.collar_vertex[static_cast<std::size_t>(v)]) continue;
      const double r = sc.geom.rho(v);
      const double e = hs.h(v) - exact(r);
      err = std::max(err, std::abs(e));
      auto& p = planes[std::lround(r * n)];
      p.first += e;
      p.second += 1;
    }
    double mean_err = 0.0;
    for (const auto& [key, p] : planes) mean_err = std::max(mean_err, std::abs(p.first / p.second));
    pointwise.push_back(err / pc.jump());
    plane_mean.push_back(mean_err / pc.jump());
  }
  EXPECT_LT(pointwise[2], 2e-3);
  for (std::size_t k = 1; k < 3; ++k) {
    EXPECT_GT(plane_mean[k - 1] / plane_mean[k], 3.5) << k;
    EXPECT_GT(pointwise[k - 1] / pointwise[k], 1.8) << k;
  }
}

TEST(WarpedHarmonic1D, FlatProfileIsAffine) {
  const auto pc = symmetric_constants();
  const auto h = db::warped_harmonic_1d([](double) { return 1.0; }, 0.2, pc, 3);
  for (double r : {-0.2, -0.13, 0.0, 0.05, 0.2}) EXPECT_NEAR(h(r), db::hbar(r, 0.2, pc), 1e-12);
}

TEST(WarpedHarmonic1D, LinearWarpRaisesMidpoint) {
  const auto pc = symmetric_constants();
  const auto h = db::warped_harmonic_1d(linear_w, 0.2, pc, 3);
  // int w^{-2} on [-0.2, 0] over int on [-0.2, 0.2] is 0.6
  EXPECT_NEAR(h(0.0), pc.c_minus + pc.jump() * 0.6, 1e-10);
  EXPECT_GT(h(0.0) - 0.5 * (pc.c_plus + pc.c_minus), 0.0);
}

TEST(WarpedHarmonic1D, ReversedProfileMirrors) {
  const auto pc = db::compute_plateaus(0.3, 0.5, 1.2, 3);
  const db::PlateauConstants swapped{pc.c_minus, pc.c_plus, pc.kappa0};
  const auto h = db::warped_harmonic_1d(linear_w, 0.2, pc, 3);
  const auto g = db::warped_harmonic_1d([](double r) { return 1.0 - r; }, 0.2, swapped, 3);
  for (double r : {-0.2, -0.11, 0.0, 0.07, 0.2}) EXPECT_NEAR(g(r), h(-r), 1e-12);
}

TEST(WarpedHarmonic1D, DeviationShrinksWithEta) {
  const auto pc = symmetric_constants();
  const double a = sup_closed_form_deviation(0.2, pc);
  const double b = sup_closed_form_deviation(0.1, pc);
  const double c = sup_closed_form_deviation(0.05, pc);
  EXPECT_GE(a / b, 1.5);
  EXPECT_GE(b / c, 1.5);
}

TEST(AdaptiveSimpson, Polynomial) {
  EXPECT_NEAR(db::adaptive_simpson([](double x) { return x * x * x - x; }, -1.0, 2.0), 2.25, 1e-13);
  EXPECT_NEAR(db::adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0), std::exp(1.0) - 1.0, 1e-12);
}

TEST(CollarFourier, HomogeneousProblemIsZero) {
  db::CollarCoefficients coef;
  coef.F = [](double, const db::Vector&) { return 0.0; };
  coef.G1 = [](double, const db::Vector&) { return 0.0; };
  const db::CrossSectionGrid grid{{4, 4}, {1.0, 1.0}};
  const auto sol = db::collar_fourier_solve(grid, 0.1, coef);
  EXPECT_EQ(sol.coefficients.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CollarFourier, FlatCollarConsistentWithFem) {
  const auto sc = flat_scene(3, 8, 0.25);
  const auto pc = db::compute_plateaus(sc.geom);
  const auto coef = db::warped_collar_coefficients([](double) { return 1.0; }, sc.geom.eta, pc, 3);
  const auto sol = db::collar_fourier_solve({{1, 1}, {1.0, 1.0}}, sc.geom.eta, coef);
  EXPECT_LT(sol.coefficients.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(db::solve_harmonic(sc.mesh, sc.geom, pc).sup_deviation, 1e-10);
}

TEST(CollarFourier, WarpedReductionMatchesClosedForm) {
  const auto pc = symmetric_constants();
  std::vector<double> sup;
  for (double eta : {0.2, 0.1}) {
    const auto sol = db::collar_fourier_solve({{1, 1}, {1.0, 1.0}}, eta, db::warped_collar_coefficients(linear_w, eta, pc, 3));
    const auto exact = db::warped_harmonic_1d(linear_w, eta, pc, 3);
    double err = 0.0, s = 0.0;
    for (int k = 0; k <= 400; ++k) {
      const double r = -eta + 2.0 * eta * k / 400;
      err = std::max(err, std::abs(sol.at_rho(r) - (exact(r) - db::hbar(r, eta, pc))));
      s = std::max(s, std::abs(sol.at_rho(r)));
    }
    EXPECT_LE(err / pc.jump(), 1e-4) << eta;
    sup.push_back(s);
  }
  EXPECT_NEAR(sup[0] / sup[1], 2.0, 0.5);
}

TEST(CollarFourier, TruncationErrorDecaysQuadratically) {
  const auto pc = symmetric_constants();
  const double eta = 0.1;
  const auto exact = db::warped_harmonic_1d(linear_w, eta, pc, 3);
  auto error_at = [&](int modes) {
    db::FourierOptions opts;
    opts.modes = modes;
    const auto sol = db::collar_fourier_solve({{1, 1}, {1.0, 1.0}}, eta, db::warped_collar_coefficients(linear_w, eta, pc, 3), opts);
    double err = 0.0;
    for (int k = 0; k <= 400; ++k) {
      const double r = -eta + 2.0 * eta * k / 400;
      err = std::max(err, std::abs(sol.at_rho(r) - (exact(r) - db::hbar(r, eta, pc))));
    }
    return err;
  };
  const double ratio = error_at(16) / error_at(32);
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 5.0);
}

TEST(CollarFourier, DivergenceIsReported) {
  db::CollarCoefficients coef;
  coef.F = [](double, const db::Vector&) { return 1.0; };
  coef.G1 = [](double, const db::Vector&) { return 500.0; };
  db::FourierOptions opts;
  opts.max_iterations = 30;
  EXPECT_THROW(db::collar_fourier_solve({{1}, {1.0}}, 1.0, coef, opts), db::ConvergenceError);
}

TEST(CollarFourier, RejectsMalformedGrid) {
  db::CollarCoefficients coef;
  coef.F = [](double, const db::Vector&) { return 0.0; };
  coef.G1 = coef.F;
  EXPECT_THROW(db::collar_fourier_solve({{2, 2}, {1.0}}, 0.1, coef), db::GeometryError);
  EXPECT_THROW(db::collar_fourier_solve({{2}, {1.0}}, -0.1, coef), db::GeometryError);
}

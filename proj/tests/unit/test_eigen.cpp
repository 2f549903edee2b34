#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"

namespace db = dumbbell;
using db::testing::flat_scene;

namespace {

const double kPi2 = std::numbers::pi * std::numbers::pi;

struct Solved {
  db::testing::FlatScene scene;
  db::ConformalField field;
  db::OperatorPair pair;
  db::EigenResult result;
};

Solved solve(int n, double eta, double eps, int m = 3) {
  Solved s{flat_scene(3, n, eta), {}, {}, {}};
  s.field = db::build_conformal_field(s.scene.mesh, s.scene.geom, eps);
  s.pair = db::assemble(s.scene.mesh, s.field);
  s.result = db::normalize_and_sign(db::solve_smallest(s.pair, m), s.pair, s.scene.mesh, s.scene.geom);
  return s;
}

// Vertex index of the point reflection x -> 1 - x on a box grid.
std::vector<int> point_reflection(const db::Mesh& mesh) {
  const auto& res = mesh.grid->resolution;
  std::vector<int> map(static_cast<std::size_t>(mesh.num_vertices()));
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    std::vector<int> idx(res.size());
    for (std::size_t a = 0; a < res.size(); ++a) {
      idx[a] = res[a] - static_cast<int>(std::lround(mesh.vertices(static_cast<int>(a), v) * res[a]));
    }
    map[static_cast<std::size_t>(v)] = mesh.grid->vertex_index(idx);
  }
  return map;
}

}  // namespace

TEST(SolveSmallest, FlatBoxFirstModeTripleNearPiSquared) {
  const auto s = solve(16, 0.125, 1.0, 5);
  EXPECT_LT(std::abs(s.result.eigenvalues[0]), 1e-8);
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(s.result.eigenvalues[static_cast<std::size_t>(k)] / kPi2, 1.0, 0.02) << k;
  EXPECT_GT(s.result.eigenvalues[4], 1.5 * kPi2);
}

TEST(SolveSmallest, ContractHolds) {
  const auto s = solve(8, 0.125, 0.01, 4);
  const auto& r = s.result;
  for (std::size_t k = 1; k < r.eigenvalues.size(); ++k) EXPECT_GE(r.eigenvalues[k], r.eigenvalues[k - 1]);
  for (double res : r.residuals) EXPECT_LE(res, 1e-8);
  const Eigen::MatrixXd G = r.eigenvectors.transpose() * (s.pair.M * r.eigenvectors);
  EXPECT_LT((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-8);
  const db::Vector one = db::Vector::Ones(s.pair.size());
  for (int k = 1; k < r.size(); ++k) EXPECT_LT(std::abs(r.mode(k).dot(s.pair.M * one)), 1e-8);
  const db::Vector u0 = r.mode(0);
  EXPECT_LT((u0.array() - u0.mean()).abs().maxCoeff(), 1e-6 * u0.cwiseAbs().maxCoeff());
}

TEST(SolveSmallest, SmallEpsilonGivesSimpleIsolatedEigenvalue) {
  const auto ref = db::sturm_liouville_neumann(db::step_profile_1d(0.01, 0.125, 0.5, 3, 1024), 3);
  EXPECT_GE(ref.eigenvalues[2] / ref.eigenvalues[1], 10.0);
  // on the box the transverse Neumann mode caps lambda_2 near pi^2 / kappa
  const auto s = solve(16, 0.125, 1e-3);
  EXPECT_GE(s.result.eigenvalues[2] / s.result.eigenvalues[1], 10.0);
}

TEST(SolveSmallest, DeterministicForSeed) {
  const auto a = solve(6, 1.0 / 6, 0.05);
  const auto b = solve(6, 1.0 / 6, 0.05);
  EXPECT_EQ(a.result.eigenvalues, b.result.eigenvalues);
  EXPECT_EQ(a.result.eigenvectors, b.result.eigenvectors);
}

TEST(SolveSmallest, RejectsTooManyModes) {
  const auto sc = flat_scene(2, 4, 0.25);
  const auto pair = db::assemble(sc.mesh, db::build_conformal_field(sc.mesh, sc.geom, 1.0));
  EXPECT_THROW(db::solve_smallest(pair, pair.size() + 1), db::SolverError);
}

TEST(NormalizeAndSign, IdempotentAndSignInvariant) {
  auto s = solve(8, 0.125, 0.01);
  const auto again = db::normalize_and_sign(s.result, s.pair, s.scene.mesh, s.scene.geom);
  EXPECT_LT((again.eigenvectors - s.result.eigenvectors).cwiseAbs().maxCoeff(), 1e-14);
  auto flipped = s.result;
  flipped.eigenvectors.col(1) *= -3.0;
  const auto fixed = db::normalize_and_sign(flipped, s.pair, s.scene.mesh, s.scene.geom);
  EXPECT_LT((fixed.mode(1) - s.result.mode(1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NormalizeAndSign, PlateauSigns) {
  const auto s = solve(8, 0.125, 0.01);
  const db::Vector u = s.result.mode(1);
  EXPECT_GT(db::region_integral(s.scene.mesh, s.scene.geom, u, db::Region::plus), 0.0);
  EXPECT_LT(db::region_integral(s.scene.mesh, s.scene.geom, u, db::Region::minus), 0.0);
  EXPECT_TRUE(s.result.unit_mass);
}

TEST(RayleighQuotient, EigenvectorsConstantsAndTestFunction) {
  const auto s = solve(8, 0.125, 0.01);
  for (int k = 1; k < s.result.size(); ++k) {
    const double lam = s.result.eigenvalues[static_cast<std::size_t>(k)];
    EXPECT_NEAR(db::rayleigh_quotient(s.pair, s.result.mode(k)), lam, 1e-8 * lam);
  }
  EXPECT_NEAR(db::rayleigh_quotient(s.pair, db::Vector::Constant(s.pair.size(), 2.0)), 0.0, 1e-12);
  const auto tf = db::test_function_bound(s.scene.mesh, s.scene.geom, s.field, s.pair);
  EXPECT_GE(tf.value, s.result.eigenvalues[1]);
}

TEST(TestFunctionBound, FlatCaseBoundsPiSquared) {
  const auto s = solve(8, 0.125, 1.0);
  const auto tf = db::test_function_bound(s.scene.mesh, s.scene.geom, s.field, s.pair);
  EXPECT_TRUE(std::isfinite(tf.value));
  EXPECT_GE(tf.value, kPi2);
  EXPECT_GE(tf.value, s.result.eigenvalues[1]);
}

TEST(TestFunctionBound, DiscreteMeanVanishes) {
  const auto s = solve(8, 0.125, 1e-3);
  const auto tf = db::test_function_bound(s.scene.mesh, s.scene.geom, s.field, s.pair);
  EXPECT_LE(std::abs(tf.u.dot(s.pair.M * db::Vector::Ones(s.pair.size()))), 1e-10);
}

TEST(TestFunctionBound, SqrtEpsilonBand) {
  std::vector<double> scaled;
  for (double eps : {1e-2, 1e-3}) {
    const auto sc = flat_scene(3, 8, 0.125);
    const auto field = db::build_conformal_field(sc.mesh, sc.geom, eps);
    const auto pair = db::assemble(sc.mesh, field);
    scaled.push_back(db::test_function_bound(sc.mesh, sc.geom, field, pair).value / std::sqrt(eps));
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  EXPECT_LE(*hi / *lo, 4.0);
}

TEST(TestFunctionBound, SandwichAcrossConfigurations) {
  for (double eta : {0.125, 0.25}) {
    for (double eps : {1.0, 0.1, 1e-2, 1e-3}) {
      const auto s = solve(8, eta, eps, 2);
      const auto tf = db::test_function_bound(s.scene.mesh, s.scene.geom, s.field, s.pair);
      EXPECT_LE(s.result.eigenvalues[1], tf.value * (1 + 1e-10)) << eta << " " << eps;
    }
  }
}

TEST(TestFunctionBound, RequiresStepProfile) {
  const auto sc = flat_scene(3, 8, 0.25);
  const auto field = db::build_conformal_field(sc.mesh, sc.geom, 0.1, db::MollifiedProfile{0.125});
  const auto pair = db::assemble(sc.mesh, field);
  EXPECT_THROW(db::test_function_bound(sc.mesh, sc.geom, field, pair), db::GeometryError);
}

TEST(ConformalScaling, EigenvaluesDivideVectorsUnchanged) {
  const auto sc = flat_scene(3, 6, 1.0 / 6);
  const auto field = db::build_conformal_field(sc.mesh, sc.geom, 0.1);
  const auto pa = db::assemble(sc.mesh, field);
  const auto pb = db::assemble(sc.mesh, field.scaled(4.0));
  const auto a = db::normalize_and_sign(db::solve_smallest(pa, 2), pa, sc.mesh, sc.geom);
  const auto b = db::normalize_and_sign(db::solve_smallest(pb, 2), pb, sc.mesh, sc.geom);
  EXPECT_NEAR(b.eigenvalues[1] * 4.0, a.eigenvalues[1], 1e-8 * a.eigenvalues[1]);
  // unit mass under 4^{3/2} M: vectors differ by the factor 8
  EXPECT_LT((b.mode(1) * std::sqrt(8.0) - a.mode(1)).cwiseAbs().maxCoeff(), 1e-6 * a.mode(1).cwiseAbs().maxCoeff());
}

TEST(Symmetry, FirstModeOddUnderReflection) {
  const auto s = solve(8, 0.125, 0.01);
  const auto map = point_reflection(s.scene.mesh);
  const db::Vector u = s.result.mode(1);
  double worst = 0.0;
  for (int v = 0; v < u.size(); ++v) worst = std::max(worst, std::abs(u(v) + u(map[static_cast<std::size_t>(v)])));
  EXPECT_LT(worst, 1e-6 * u.cwiseAbs().maxCoeff());
}

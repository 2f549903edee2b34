#include <numbers>

#include <gtest/gtest.h>

#include "dumbbell/experiments/scenarios.hpp"
#include "support.hpp"

namespace db = dumbbell;

namespace {

db::Vector cosine_product(const db::Mesh& mesh) {
  const double tau = 2 * std::numbers::pi;
  db::Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    u(v) = std::cos(tau * mesh.vertices(0, v)) * std::cos(tau * mesh.vertices(1, v));
  }
  return u;
}

}  // namespace

TEST(Classify, MonotoneFieldHasNoInteriorCriticalPoints) {
  const auto mesh = db::build_box_grid(3, {6});
  const auto rep = db::classify_critical_points(mesh, db::testing::coordinate_field(mesh, 0));
  EXPECT_TRUE(rep.critical.empty());
  EXPECT_EQ(rep.examined, 5 * 5 * 5);
}

TEST(Classify, ConvexFieldHasOneMinimum) {
  const auto mesh = db::build_box_grid(3, {8});
  db::Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u(v) = (mesh.vertices.col(v).array() - 0.5).square().sum();
  const auto rep = db::classify_critical_points(mesh, u);
  EXPECT_EQ(rep.minima(), 1);
  EXPECT_EQ(rep.maxima(), 0);
  EXPECT_EQ(rep.saddles(), 0);
}

TEST(Classify, CosineProductOnRectangle) {
  const auto mesh = db::build_periodic_grid_2d(64, 32, 2.0, 1.0);
  const auto rep = db::classify_critical_points(mesh, cosine_product(mesh));
  EXPECT_EQ(rep.minima(), 4);
  EXPECT_EQ(rep.maxima(), 4);
  EXPECT_EQ(rep.saddles(), 8);
}

TEST(Classify, CosineProductCountsPerUnitCell) {
  for (int n : {16, 24, 32, 64}) {
    const auto mesh = db::build_periodic_grid_2d(n);
    const auto rep = db::classify_critical_points(mesh, cosine_product(mesh));
    EXPECT_EQ(rep.minima(), 2) << n;
    EXPECT_EQ(rep.maxima(), 2) << n;
    EXPECT_EQ(rep.saddles(), 4) << n;
  }
}

TEST(Classify, EulerIdentityOnTorus) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto mesh = db::build_periodic_grid_2d(9, 7, 1.0, 1.3);
    const auto rep = db::classify_critical_points(mesh, db::testing::random_field(mesh.num_vertices(), seed));
    EXPECT_EQ(rep.alternating_sum(), db::euler_characteristic(mesh));
    EXPECT_EQ(rep.alternating_sum(), 0);
  }
}

TEST(Classify, MonotoneReparameterizationInvariant) {
  const auto mesh = db::build_box_grid(3, {5});
  const db::Vector u = db::testing::random_field(mesh.num_vertices(), 21);
  const db::Vector w = (3.0 * u.array()).exp() - 2.0;
  const auto a = db::classify_critical_points(mesh, u);
  const auto b = db::classify_critical_points(mesh, w);
  EXPECT_EQ(a.index_counts, b.index_counts);
  ASSERT_EQ(a.critical.size(), b.critical.size());
  for (std::size_t i = 0; i < a.critical.size(); ++i) {
    EXPECT_EQ(a.critical[i].vertex, b.critical[i].vertex);
    EXPECT_EQ(a.critical[i].kind, b.critical[i].kind);
  }
}

TEST(Classify, NegationSwapsExtrema) {
  for (int d : {2, 3}) {
    const auto mesh = db::build_box_grid(d, {6});
    const db::Vector u = db::testing::random_field(mesh.num_vertices(), 30 + static_cast<std::uint64_t>(d));
    const auto a = db::classify_critical_points(mesh, u);
    const auto b = db::classify_critical_points(mesh, -u);
    EXPECT_EQ(a.minima(), b.maxima());
    EXPECT_EQ(a.maxima(), b.minima());
    EXPECT_EQ(a.saddles(), b.saddles());
  }
}

TEST(Classify, TiesResolvedById) {
  const auto mesh = db::build_box_grid(2, {4});
  const db::Vector flat = db::Vector::Zero(mesh.num_vertices());
  const auto rep = db::classify_critical_points(mesh, flat);
  // a constant field orders vertices by id, which is monotone on the grid
  EXPECT_TRUE(rep.critical.empty());
}

TEST(Classify, RegionFilter) {
  const auto mesh = db::build_box_grid(3, {8});
  db::Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u(v) = (mesh.vertices.col(v).array() - 0.5).square().sum();
  std::vector<bool> left(static_cast<std::size_t>(mesh.num_cells()));
  for (int c = 0; c < mesh.num_cells(); ++c) left[static_cast<std::size_t>(c)] = mesh.barycenter(c)(0) < 0.4;
  EXPECT_EQ(db::classify_critical_points(mesh, u, &left).minima(), 0);
}

TEST(Classify, SizeMismatchThrows) {
  const auto mesh = db::build_box_grid(2, {3});
  EXPECT_THROW(db::classify_critical_points(mesh, db::Vector::Zero(3)), db::GeometryError);
}

TEST(BettiBound, Examples) {
  db::CriticalReport r;
  r.dim = 3;
  r.index_counts = {1, 0, 0, 0};
  EXPECT_TRUE(db::betti_bound_check(r, {1, 0, 0}));
  EXPECT_FALSE(db::betti_bound_check(r, {1, 1, 0}));
}

TEST(BettiBound, SolidTorus) {
  const auto mesh = db::build_box_grid(3, {32});
  const db::SigmaLevelSet torus{db::experiments::torus_level(0.25, 0.15), "torus"};
  const db::Vector rho = db::signed_distance(mesh, torus);
  std::vector<bool> inside(static_cast<std::size_t>(mesh.num_cells()));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    double r = 0.0;
    for (int k = 0; k <= 3; ++k) r += rho(mesh.cells(k, c));
    inside[static_cast<std::size_t>(c)] = r < 0.0;
  }
  const auto rep = db::classify_critical_points(mesh, rho, &inside);
  EXPECT_TRUE(db::betti_bound_check(rep, {1, 1}));
}

TEST(EulerCharacteristic, BallAndTorus) {
  EXPECT_EQ(db::euler_characteristic(db::build_box_grid(3, {3})), 1);
  EXPECT_EQ(db::euler_characteristic(db::build_box_grid(2, {3})), 1);
  EXPECT_EQ(db::euler_characteristic(db::build_periodic_grid_2d(5)), 0);
}

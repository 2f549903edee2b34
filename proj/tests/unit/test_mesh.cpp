#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

namespace db = dumbbell;
using db::testing::coordinate_field;

TEST(BoxGrid, CountsForFourCubed) {
  const auto mesh = db::build_box_grid(3, {4});
  EXPECT_EQ(mesh.num_vertices(), 125);
  EXPECT_EQ(mesh.num_cells(), 384);
}

TEST(BoxGrid, FlatVolumeIsExactlyOne) {
  const auto mesh = db::build_box_grid(3, {4});
  EXPECT_NEAR(db::total_volume(mesh), 1.0, 1e-14);
}

TEST(BoxGrid, BoundaryFacetCount) {
  // 6 faces, each n^2 squares split in two
  const auto mesh = db::build_box_grid(3, {4});
  EXPECT_EQ(mesh.boundary_facets.cols(), 6 * 16 * 2);
}

TEST(BoxGrid, WarpedVolumeMatchesIntegral) {
  db::Warp warp{[](double r) { return 1.0 + r; }, 0.5, "linear"};
  const auto mesh = db::build_box_grid(3, {8}, warp);
  const double exact = 1.0 + 1.0 / 12.0;
  EXPECT_NEAR(db::total_volume(mesh) / exact, 1.0, 0.01);
}

TEST(BoxGrid, WarpedVolumeConvergesQuadratically) {
  db::Warp warp{[](double r) { return 1.0 + r; }, 0.5, "linear"};
  const double exact = 1.0 + 1.0 / 12.0;
  const double e4 = std::abs(db::total_volume(db::build_box_grid(3, {4}, warp)) - exact);
  const double e8 = std::abs(db::total_volume(db::build_box_grid(3, {8}, warp)) - exact);
  EXPECT_GT(e4 / e8, 3.5);
  EXPECT_LT(e4 / e8, 4.5);
}

TEST(BoxGrid, EveryCellPositive) {
  const auto mesh = db::build_box_grid(3, {3, 4, 5});
  for (double v : db::cell_volumes(mesh)) EXPECT_GT(v, 0.0);
  EXPECT_EQ(mesh.num_cells(), 6 * 3 * 4 * 5);
}

TEST(BoxGrid, RejectsBadInput) {
  EXPECT_THROW(db::build_box_grid(4, {4}), db::MeshError);
  EXPECT_THROW(db::build_box_grid(3, {1}), db::MeshError);
  EXPECT_THROW(db::build_box_grid(3, {4, 4}), db::MeshError);
}

TEST(BoxGrid, TwoDimensional) {
  const auto mesh = db::build_box_grid(2, {5});
  EXPECT_EQ(mesh.num_vertices(), 36);
  EXPECT_EQ(mesh.num_cells(), 50);
  EXPECT_NEAR(db::total_volume(mesh), 1.0, 1e-14);
}

TEST(LoadMesh, SingleTetrahedron) {
  std::istringstream in(
      "# one cell\n"
      "dim 3\n"
      "vertices 4\n"
      "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
      "cells 1\n"
      "0 1 2 3\n");
  const auto mesh = db::read_mesh(in);
  EXPECT_EQ(mesh.num_vertices(), 4);
  EXPECT_EQ(mesh.num_cells(), 1);
  EXPECT_EQ(mesh.boundary_facets.cols(), 4);
  EXPECT_NEAR(db::total_volume(mesh), 1.0 / 6.0, 1e-15);
}

TEST(LoadMesh, VertexIndexOutOfRange) {
  std::istringstream in("dim 3\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ncells 1\n0 1 2 7\n");
  try {
    db::read_mesh(in);
    FAIL() << "expected a parse error";
  } catch (const db::Error& e) {
    EXPECT_NE(std::string(e.what()).find("vertex index out of range"), std::string::npos);
  }
}

TEST(LoadMesh, MissingFileThrows) { EXPECT_THROW(db::load_mesh("/nonexistent/mesh.txt"), db::Error); }

TEST(LoadMesh, RoundTrip) {
  const auto mesh = db::build_box_grid(3, {2});
  std::stringstream buf;
  db::write_mesh(buf, mesh);
  const auto back = db::read_mesh(buf);
  EXPECT_EQ(back.vertices, mesh.vertices);
  EXPECT_EQ(back.cells, mesh.cells);
}

TEST(LoadMesh, MetricRoundTripRevalidates) {
  db::Warp warp{[](double r) { return 1.0 + 0.5 * r; }, 0.5, "w"};
  const auto mesh = db::build_box_grid(3, {2}, warp);
  std::stringstream buf;
  db::write_mesh(buf, mesh);
  auto back = db::read_mesh(buf);
  ASSERT_EQ(back.cell_metric.size(), mesh.cell_metric.size());
  for (std::size_t c = 0; c < mesh.cell_metric.size(); ++c) {
    EXPECT_TRUE(back.cell_metric[c].isApprox(mesh.cell_metric[c], 1e-15));
  }
  EXPECT_NO_THROW(db::validate(back));
  EXPECT_NEAR(db::total_volume(back), db::total_volume(mesh), 1e-14);
}

TEST(Gradient, AffineReproduction) {
  const auto mesh = db::build_box_grid(3, {3});
  const auto data = db::simplex_gradient_data(mesh);
  const Eigen::Vector3d a(0.3, -1.2, 2.5);
  db::Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u(v) = 0.7 + a.dot(mesh.vertices.col(v));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const db::Vector du = data[static_cast<std::size_t>(c)].differential(db::gather(mesh, u, c));
    EXPECT_LT((du - a).norm(), 1e-12);
  }
}

TEST(Gradient, ConstantFieldHasZeroGradient) {
  const auto mesh = db::build_box_grid(3, {2});
  const db::Vector u = db::Vector::Constant(mesh.num_vertices(), 4.2);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    EXPECT_LT(db::cell_gradient(mesh, c).differential(db::gather(mesh, u, c)).norm(), 1e-12);
  }
}

TEST(Gradient, MetricNormContractsWithInverse) {
  std::istringstream in(
      "dim 3\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ncells 1\n0 1 2 3\n"
      "metric 1\n4 0 0 1 0 1\n");
  const auto mesh = db::read_mesh(in);
  const db::Vector u = coordinate_field(mesh, 0);
  EXPECT_NEAR(db::cell_gradient(mesh, 0).norm2(db::gather(mesh, u, 0)), 0.25, 1e-15);
  EXPECT_NEAR(db::total_volume(mesh), 2.0 / 6.0, 1e-15);
}

TEST(PeriodicGrid, RectangleHasNoBoundary) {
  const auto mesh = db::build_periodic_grid_2d(8, 4, 2.0, 1.0);
  EXPECT_EQ(mesh.boundary_facets.cols(), 0);
  EXPECT_EQ(mesh.num_cells(), 64);
  EXPECT_NEAR(db::total_volume(mesh), 2.0, 1e-14);
}

TEST(Validate, RejectsInvertedCell) {
  std::istringstream in("dim 3\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ncells 1\n1 0 2 3\n");
  EXPECT_THROW(db::read_mesh(in), db::MeshError);
}

TEST(Validate, RejectsDisconnectedMesh) {
  std::istringstream in(
      "dim 2\nvertices 6\n0 0\n1 0\n0 1\n5 5\n6 5\n5 6\n"
      "cells 2\n0 1 2\n3 4 5\n");
  EXPECT_THROW(db::read_mesh(in), db::MeshError);
}

#pragma once

#include <random>

#include "dumbbell/dumbbell.hpp"

namespace dumbbell::testing {

struct FlatScene {
  Mesh mesh;
  CollarGeometry geom;
};

// Unit box with Sigma = {x_1 = s}; eta snapped to the grid.
inline FlatScene flat_scene(int d, int n, double eta, double s = 0.5) {
  FlatScene sc;
  sc.mesh = build_box_grid(d, {n});
  sc.geom = collar_geometry(sc.mesh, SigmaPlane{s}, snap_eta_to_grid(sc.mesh, eta));
  return sc;
}

inline FlatScene warped_scene(int d, std::vector<int> n, double eta, std::function<double(double)> w) {
  FlatScene sc;
  sc.mesh = build_box_grid(d, std::move(n), Warp{std::move(w), 0.5, "test"});
  sc.geom = collar_geometry(sc.mesh, SigmaPlane{0.5}, snap_eta_to_grid(sc.mesh, eta));
  return sc;
}

inline Vector coordinate_field(const Mesh& mesh, int axis, double shift = 0.0) {
  Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u(v) = mesh.vertices(axis, v) - shift;
  return u;
}

inline Vector random_field(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector u(size);
  for (int i = 0; i < size; ++i) u(i) = dist(rng);
  return u;
}

}  // namespace dumbbell::testing

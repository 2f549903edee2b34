#pragma once

// Zero-crossing geometry of a piecewise-linear field on one simplex
// (marching triangles / tetrahedra), shared by the level-set distance and the
// nodal-set extraction.

#include <vector>

#include <Eigen/Dense>

namespace dumbbell {

/// Simulation-of-simplicity tie rule: an exact zero at vertex `id` is read as
/// +1e-300 * (1 + id), so it counts as positive and interpolates onto the
/// vertex itself.
inline double tie_broken(double value, int id) { return value == 0.0 ? 1e-300 * (1.0 + id) : value; }

inline bool positive_after_tie(double value) { return value >= 0.0; }

/// Edge (a, b) of a simplex, in local vertex numbering, cut at parameter t:
/// the crossing point is (1 - t) x_a + t x_b.
struct EdgeCut {
  int a = 0;
  int b = 0;
  double t = 0.0;
};

/// Edges on which the affine interpolant of `values` vanishes, in the cyclic
/// order of the crossing polygon. Empty when the simplex is not crossed.
inline std::vector<EdgeCut> crossing_edges(const Eigen::VectorXd& values, const Eigen::VectorXi& ids) {
  const int n = static_cast<int>(values.size());
  std::vector<int> pos;
  std::vector<int> neg;
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) {
    v(k) = tie_broken(values(k), ids(k));
    (v(k) > 0.0 ? pos : neg).push_back(k);
  }
  if (pos.empty() || neg.empty()) return {};

  auto cut = [&](int a, int b) { return EdgeCut{a, b, v(a) / (v(a) - v(b))}; };
  if (n == 3) {
    const auto& lone = pos.size() == 1 ? pos : neg;
    const auto& pair = pos.size() == 1 ? neg : pos;
    return {cut(lone[0], pair[0]), cut(lone[0], pair[1])};
  }
  if (pos.size() == 1 || neg.size() == 1) {
    const auto& lone = pos.size() == 1 ? pos : neg;
    const auto& rest = pos.size() == 1 ? neg : pos;
    return {cut(lone[0], rest[0]), cut(lone[0], rest[1]), cut(lone[0], rest[2])};
  }
  // two-two split: the quad visits the four mixed edges in cyclic order
  return {cut(pos[0], neg[0]), cut(pos[0], neg[1]), cut(pos[1], neg[1]), cut(pos[1], neg[0])};
}

/// Polygon where the affine interpolant of `values` vanishes inside the
/// simplex with vertex columns `x`. Returns 0 points (no crossing), 2 (d = 2
/// segment), 3 (triangle) or 4 (quad, in cyclic order) points.
inline std::vector<Eigen::VectorXd> crossing_polygon(const Eigen::MatrixXd& x, const Eigen::VectorXd& values,
                                                     const Eigen::VectorXi& ids) {
  std::vector<Eigen::VectorXd> poly;
  for (const EdgeCut& e : crossing_edges(values, ids)) poly.push_back((1.0 - e.t) * x.col(e.a) + e.t * x.col(e.b));
  return poly;
}

/// Area (d = 3) or length (d = 2) of a crossing polygon.
inline double polygon_measure(const std::vector<Eigen::VectorXd>& poly) {
  if (poly.size() == 2) return (poly[1] - poly[0]).norm();
  double area = 0.0;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    const Eigen::Vector3d a = poly[k] - poly[0];
    const Eigen::Vector3d b = poly[k + 1] - poly[0];
    area += 0.5 * a.cross(b).norm();
  }
  return area;
}

}  // namespace dumbbell

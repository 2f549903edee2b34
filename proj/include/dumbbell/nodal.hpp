#pragma once

// Discrete nodal sets of P1 fields: marching-simplex fragments, their
// facet-adjacency components, localization in the collar, regularity and
// nodal-domain counts.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "dumbbell/detail/union_find.hpp"
#include "dumbbell/error.hpp"
#include "dumbbell/marching.hpp"
#include "dumbbell/mesh.hpp"
#include "dumbbell/metric.hpp"

namespace dumbbell {

/// Crossing point on the mesh edge (a, b): (1 - t) x_a + t x_b.
struct NodalPoint {
  int a = 0;
  int b = 0;
  double t = 0.0;

  double interpolate(const Vector& field) const { return (1.0 - t) * field(a) + t * field(b); }
};

struct NodalFragment {
  int cell = 0;
  std::vector<NodalPoint> points;        // polygon in cyclic order
  std::vector<Eigen::VectorXd> polygon;  // coordinates
  double measure = 0.0;
};

struct NodalSet {
  int dim = 0;
  std::vector<NodalFragment> fragments;
  std::vector<int> component;  // label per fragment
  int num_components = 0;
  double total_measure = 0.0;

  bool empty() const { return fragments.empty(); }
};

namespace detail {

inline bool same_sign_after_tie(double a, int ia, double b, int ib) {
  return (tie_broken(a, ia) > 0.0) == (tie_broken(b, ib) > 0.0);
}

}  // namespace detail

/// Marching simplices on the P1 interpolant of u. Fragments of cells that
/// share a crossed facet are joined into components.
inline NodalSet extract_nodal_set(const Mesh& mesh, const Vector& u) {
  if (u.size() != mesh.num_vertices()) throw GeometryError("field size does not match mesh");
  const int d = mesh.dim;
  NodalSet ns;
  ns.dim = d;
  std::vector<int> fragment_of(static_cast<std::size_t>(mesh.num_cells()), -1);
  Eigen::VectorXi ids(d + 1);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int k = 0; k <= d; ++k) ids(k) = mesh.cells(k, c);
    const auto cuts = crossing_edges(gather(mesh, u, c), ids);
    if (cuts.empty()) continue;
    const Eigen::MatrixXd x = mesh.cell_coordinates(c);
    NodalFragment frag;
    frag.cell = c;
    for (const EdgeCut& e : cuts) {
      frag.points.push_back({ids(e.a), ids(e.b), e.t});
      frag.polygon.push_back((1.0 - e.t) * x.col(e.a) + e.t * x.col(e.b));
    }
    frag.measure = polygon_measure(frag.polygon);
    fragment_of[static_cast<std::size_t>(c)] = static_cast<int>(ns.fragments.size());
    ns.fragments.push_back(std::move(frag));
  }

  std::vector<double> measures;
  for (const auto& f : ns.fragments) measures.push_back(f.measure);
  ns.total_measure = detail::pairwise_sum(measures);

  // two crossed cells are adjacent iff their shared facet is itself crossed
  detail::UnionFind uf(ns.fragments.size());
  const auto neighbors = cell_neighbors(mesh);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const int fc = fragment_of[static_cast<std::size_t>(c)];
    if (fc < 0) continue;
    for (int nb : neighbors[static_cast<std::size_t>(c)]) {
      const int fn = fragment_of[static_cast<std::size_t>(nb)];
      if (fn < 0 || nb < c) continue;
      std::vector<int> shared;
      for (int i = 0; i <= d; ++i) {
        for (int j = 0; j <= d; ++j) {
          if (mesh.cells(i, c) == mesh.cells(j, nb)) shared.push_back(mesh.cells(i, c));
        }
      }
      bool mixed = false;
      for (std::size_t k = 1; k < shared.size(); ++k) {
        mixed = mixed || !detail::same_sign_after_tie(u(shared[0]), shared[0], u(shared[k]), shared[k]);
      }
      if (mixed) uf.unite(fc, fn);
    }
  }
  ns.component = uf.labels(std::vector<bool>(ns.fragments.size(), true), &ns.num_components);
  return ns;
}

struct LocalizationReport {
  int components = 0;
  double max_abs_rho = std::numeric_limits<double>::quiet_NaN();  // NaN for an empty set
  double min_rho = std::numeric_limits<double>::quiet_NaN();
  double max_rho = std::numeric_limits<double>::quiet_NaN();
  bool contained = true;
};

/// Components and rho-extent of the nodal set; contained iff max |rho| < eta
/// (vacuously true when empty).
inline LocalizationReport localization_report(const NodalSet& ns, const CollarGeometry& geom) {
  LocalizationReport rep;
  rep.components = ns.num_components;
  if (ns.empty()) return rep;
  rep.min_rho = std::numeric_limits<double>::infinity();
  rep.max_rho = -std::numeric_limits<double>::infinity();
  for (const auto& f : ns.fragments) {
    for (const auto& p : f.points) {
      const double r = p.interpolate(geom.rho);
      rep.min_rho = std::min(rep.min_rho, r);
      rep.max_rho = std::max(rep.max_rho, r);
    }
  }
  rep.max_abs_rho = std::max(std::abs(rep.min_rho), std::abs(rep.max_rho));
  rep.contained = rep.max_abs_rho < geom.eta;
  return rep;
}

struct RegularityReport {
  double min_gradient = std::numeric_limits<double>::infinity();
  bool empty = true;
};

/// Smallest metric norm of the P1 gradient over crossed cells.
inline RegularityReport regularity_min_gradient(const Mesh& mesh, const Vector& u, const NodalSet& ns) {
  RegularityReport rep;
  for (const auto& f : ns.fragments) {
    const CellGradient g = cell_gradient(mesh, f.cell);
    rep.min_gradient = std::min(rep.min_gradient, std::sqrt(g.norm2(gather(mesh, u, f.cell))));
    rep.empty = false;
  }
  return rep;
}

/// Connected components of {u > 0} and {u <= 0} (after the tie rule) under
/// same-sign mesh edges.
inline int nodal_domain_count(const Mesh& mesh, const Vector& u) {
  if (u.size() != mesh.num_vertices()) throw GeometryError("field size does not match mesh");
  detail::UnionFind uf(static_cast<std::size_t>(mesh.num_vertices()));
  const auto adj = vertex_neighbors(mesh);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (w > v && detail::same_sign_after_tie(u(v), v, u(w), w)) uf.unite(v, w);
    }
  }
  int count = 0;
  uf.labels(std::vector<bool>(static_cast<std::size_t>(mesh.num_vertices()), true), &count);
  return count;
}

/// True iff u changes sign exactly once along every grid line in the
/// direction of the first axis. Requires a box grid with Sigma = {x_1 = s}.
inline bool single_crossing_check(const Mesh& mesh, const Vector& u, const CollarGeometry& geom) {
  if (!mesh.grid) throw GeometryError("single_crossing_check requires a box-grid scene");
  if (geom.rho.size() != mesh.num_vertices()) throw GeometryError("geometry does not match mesh");
  const auto& res = mesh.grid->resolution;
  const int d = mesh.dim;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  int columns = 1;
  for (int a = 1; a < d; ++a) columns *= res[static_cast<std::size_t>(a)] + 1;
  for (int col = 0; col < columns; ++col) {
    int rest = col;
    for (int a = 1; a < d; ++a) {
      idx[static_cast<std::size_t>(a)] = rest % (res[static_cast<std::size_t>(a)] + 1);
      rest /= res[static_cast<std::size_t>(a)] + 1;
    }
    int changes = 0;
    idx[0] = 0;
    int prev = mesh.grid->vertex_index(idx);
    for (int i = 1; i <= res[0]; ++i) {
      idx[0] = i;
      const int v = mesh.grid->vertex_index(idx);
      if (!detail::same_sign_after_tie(u(prev), prev, u(v), v)) ++changes;
      prev = v;
    }
    if (changes != 1) return false;
  }
  return true;
}

/// ASCII polygon soup: one polygon per line, vertex count then coordinates.
inline void write_polygon_soup(std::ostream& out, const NodalSet& ns) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& f : ns.fragments) {
    out << f.polygon.size();
    for (const auto& p : f.polygon) {
      for (Eigen::Index a = 0; a < p.size(); ++a) out << ' ' << p(a);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace dumbbell

#pragma once

// Lower-link classification of vertex critical points of a P1 field, with
// the vertex-id tie rule standing in for a generic perturbation.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "dumbbell/detail/union_find.hpp"
#include "dumbbell/error.hpp"
#include "dumbbell/mesh.hpp"

namespace dumbbell {

enum class CriticalKind : std::uint8_t { regular, minimum, maximum, saddle };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::regular: return "regular";
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::saddle: return "saddle";
  }
  return "?";
}

struct VertexCritical {
  int vertex = 0;
  CriticalKind kind = CriticalKind::regular;
  int lower_components = 0;
  int upper_components = 0;
};

struct CriticalReport {
  int dim = 0;
  std::vector<VertexCritical> critical;  // non-regular vertices only, by vertex id
  std::vector<int> index_counts;         // index 0..d, saddles with multiplicity
  int examined = 0;                      // vertices passing the filter

  int minima() const { return index_counts.front(); }
  int maxima() const { return index_counts.back(); }
  int saddles() const {
    int s = 0;
    for (std::size_t i = 1; i + 1 < index_counts.size(); ++i) s += index_counts[i];
    return s;
  }
  int alternating_sum() const {
    int chi = 0;
    for (std::size_t i = 0; i < index_counts.size(); ++i) chi += (i % 2 == 0 ? 1 : -1) * index_counts[i];
    return chi;
  }
};

/// Order of vertex values with ties broken by vertex id.
inline bool lower_than(const Vector& u, int a, int b) { return u(a) < u(b) || (u(a) == u(b) && a < b); }

/// Classifies every vertex by the connectivity of its lower and upper links.
/// Vertices on the mesh boundary are skipped; when `region` (a cell mask) is
/// given, only vertices whose incident cells all lie in the region are kept.
inline CriticalReport classify_critical_points(const Mesh& mesh, const Vector& u,
                                               const std::vector<bool>* region = nullptr) {
  if (u.size() != mesh.num_vertices()) throw GeometryError("field size does not match mesh");
  const int d = mesh.dim;
  const int V = mesh.num_vertices();
  std::vector<std::vector<int>> star(static_cast<std::size_t>(V));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int k = 0; k <= d; ++k) star[static_cast<std::size_t>(mesh.cells(k, c))].push_back(c);
  }
  const auto on_boundary = boundary_vertex_mask(mesh);

  CriticalReport rep;
  rep.dim = d;
  rep.index_counts.assign(static_cast<std::size_t>(d) + 1, 0);
  for (int v = 0; v < V; ++v) {
    if (on_boundary[static_cast<std::size_t>(v)] || star[static_cast<std::size_t>(v)].empty()) continue;
    if (region) {
      const auto& cells = star[static_cast<std::size_t>(v)];
      if (!std::all_of(cells.begin(), cells.end(), [&](int c) { return (*region)[static_cast<std::size_t>(c)]; })) continue;
    }
    ++rep.examined;

    // link vertices, then link edges among same-side vertices
    std::vector<int> link;
    for (int c : star[static_cast<std::size_t>(v)]) {
      for (int k = 0; k <= d; ++k) {
        if (mesh.cells(k, c) != v) link.push_back(mesh.cells(k, c));
      }
    }
    std::sort(link.begin(), link.end());
    link.erase(std::unique(link.begin(), link.end()), link.end());
    auto local = [&](int w) { return static_cast<std::size_t>(std::lower_bound(link.begin(), link.end(), w) - link.begin()); };

    std::vector<bool> lower(link.size());
    for (std::size_t i = 0; i < link.size(); ++i) lower[i] = lower_than(u, link[i], v);
    detail::UnionFind uf(link.size());
    for (int c : star[static_cast<std::size_t>(v)]) {
      for (int i = 0; i <= d; ++i) {
        const int a = mesh.cells(i, c);
        if (a == v) continue;
        for (int j = i + 1; j <= d; ++j) {
          const int b = mesh.cells(j, c);
          if (b == v) continue;
          const auto la = local(a), lb = local(b);
          if (lower[la] == lower[lb]) uf.unite(la, lb);
        }
      }
    }
    std::vector<bool> upper(lower.size());
    for (std::size_t i = 0; i < lower.size(); ++i) upper[i] = !lower[i];
    VertexCritical vc;
    vc.vertex = v;
    uf.labels(lower, &vc.lower_components);
    uf.labels(upper, &vc.upper_components);

    if (vc.lower_components == 0) {
      vc.kind = CriticalKind::minimum;
      ++rep.index_counts[0];
    } else if (vc.upper_components == 0) {
      vc.kind = CriticalKind::maximum;
      ++rep.index_counts[static_cast<std::size_t>(d)];
    } else if (vc.lower_components > 1 || vc.upper_components > 1) {
      vc.kind = CriticalKind::saddle;
      rep.index_counts[1] += vc.lower_components - 1;
      if (d == 3) rep.index_counts[2] += vc.upper_components - 1;
    }
    if (vc.kind != CriticalKind::regular) rep.critical.push_back(vc);
  }
  return rep;
}

/// Morse lower bound: count(index i) >= betti_i for every provided i.
inline bool betti_bound_check(const CriticalReport& report, const std::vector<int>& betti) {
  for (std::size_t i = 0; i < betti.size(); ++i) {
    const int have = i < report.index_counts.size() ? report.index_counts[i] : 0;
    if (have < betti[i]) return false;
  }
  return true;
}

/// Euler characteristic of the simplicial complex spanned by the cells.
inline int euler_characteristic(const Mesh& mesh) {
  const int d = mesh.dim;
  std::vector<std::set<std::vector<int>>> faces(static_cast<std::size_t>(d) + 1);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    std::vector<int> verts(static_cast<std::size_t>(d) + 1);
    for (int k = 0; k <= d; ++k) verts[static_cast<std::size_t>(k)] = mesh.cells(k, c);
    std::sort(verts.begin(), verts.end());
    const int n = d + 1;
    for (int mask = 1; mask < (1 << n); ++mask) {
      std::vector<int> face;
      for (int k = 0; k < n; ++k) {
        if (mask & (1 << k)) face.push_back(verts[static_cast<std::size_t>(k)]);
      }
      faces[face.size() - 1].insert(std::move(face));
    }
  }
  int chi = 0;
  for (std::size_t k = 0; k < faces.size(); ++k) chi += (k % 2 == 0 ? 1 : -1) * static_cast<int>(faces[k].size());
  return chi;
}

}  // namespace dumbbell

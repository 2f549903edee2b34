#pragma once

// Simplicial meshes of d-dimensional domains (d = 2, 3) with optional
// per-cell constant metric tensors, plus the structured box and periodic
// grid generators used by the experiments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dumbbell/detail/summation.hpp"
#include "dumbbell/detail/union_find.hpp"
#include "dumbbell/error.hpp"

namespace dumbbell {

using Vector = Eigen::VectorXd;

/// Warped-product profile: the cross-section metric is scaled by w(rho)^2,
/// where rho = x_1 - sigma_offset.
struct Warp {
  std::function<double(double)> profile;
  double sigma_offset = 0.5;
  std::string tag = "custom";
};

/// Hypersurface {x_1 = offset}.
struct SigmaPlane {
  double offset = 0.5;
};

/// Hypersurface phi^{-1}(0) of an analytic level function; phi < 0 is the
/// minus side.
struct SigmaLevelSet {
  std::function<double(const Vector&)> phi;
  std::string tag = "custom";
};

using SigmaDescriptor = std::variant<SigmaPlane, SigmaLevelSet>;

enum class SceneKind { box, warped_box, file };

struct SceneDescriptor {
  SceneKind kind = SceneKind::box;
  std::vector<int> resolution;
  std::optional<Warp> warp;
  SigmaDescriptor sigma = SigmaPlane{};
  std::string path;  // for SceneKind::file
};

/// Structured-grid bookkeeping for meshes produced by build_box_grid.
/// Vertex (i_0, ..., i_{d-1}) has index i_0 + (n_0+1) * (i_1 + (n_1+1) * ...).
struct BoxGrid {
  std::vector<int> resolution;

  int vertex_index(const std::vector<int>& idx) const {
    int v = 0;
    for (int a = static_cast<int>(resolution.size()) - 1; a >= 0; --a) {
      v = v * (resolution[a] + 1) + idx[a];
    }
    return v;
  }

  double spacing(int axis) const { return 1.0 / resolution[axis]; }
};

struct Mesh {
  int dim = 0;
  Eigen::MatrixXd vertices;         // dim x V
  Eigen::MatrixXi cells;            // (dim+1) x C, positively oriented
  Eigen::MatrixXi boundary_facets;  // dim x F
  std::vector<Eigen::MatrixXd> cell_metric;  // empty means identity everywhere
  std::optional<BoxGrid> grid;
  std::optional<Eigen::VectorXd> period;  // per-axis lengths of a periodic (torus) mesh

  int num_vertices() const { return static_cast<int>(vertices.cols()); }
  int num_cells() const { return static_cast<int>(cells.cols()); }

  Eigen::MatrixXd metric(int c) const {
    if (cell_metric.empty()) return Eigen::MatrixXd::Identity(dim, dim);
    return cell_metric[static_cast<std::size_t>(c)];
  }

  bool has_flat_metric() const { return cell_metric.empty(); }

  /// Vertex coordinates of cell c as columns. On periodic meshes the
  /// vertices are unwrapped to the minimum image of the first one.
  Eigen::MatrixXd cell_coordinates(int c) const {
    Eigen::MatrixXd x(dim, dim + 1);
    for (int k = 0; k <= dim; ++k) x.col(k) = vertices.col(cells(k, c));
    if (period) {
      for (int k = 1; k <= dim; ++k) {
        for (int a = 0; a < dim; ++a) {
          const double L = (*period)(a);
          const double diff = x(a, k) - x(a, 0);
          x(a, k) -= L * std::round(diff / L);
        }
      }
    }
    return x;
  }

  Vector barycenter(int c) const { return cell_coordinates(c).rowwise().mean(); }
};

namespace detail {

inline double factorial(int d) {
  double f = 1.0;
  for (int k = 2; k <= d; ++k) f *= k;
  return f;
}

inline Eigen::MatrixXd edge_matrix(const Eigen::MatrixXd& x) {
  const int d = static_cast<int>(x.rows());
  Eigen::MatrixXd J(d, d);
  for (int k = 0; k < d; ++k) J.col(k) = x.col(k + 1) - x.col(0);
  return J;
}

// Pack a sorted facet (at most 3 vertex ids < 2^21) into a single key.
inline std::uint64_t facet_key(std::array<int, 3> v, int n) {
  std::sort(v.begin(), v.begin() + n);
  std::uint64_t key = 0;
  for (int k = 0; k < n; ++k) key = (key << 21) | static_cast<std::uint64_t>(v[k]);
  return key;
}

struct FacetRecord {
  int count = 0;
  int cell = -1;
  int other = -1;
  int local = -1;  // local index of the vertex opposite the facet in `cell`
};

inline std::unordered_map<std::uint64_t, FacetRecord> facet_table(const Mesh& mesh) {
  const int d = mesh.dim;
  std::unordered_map<std::uint64_t, FacetRecord> table;
  table.reserve(static_cast<std::size_t>(mesh.num_cells()) * (d + 1));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int skip = 0; skip <= d; ++skip) {
      std::array<int, 3> f{};
      int n = 0;
      for (int k = 0; k <= d; ++k) {
        if (k != skip) f[n++] = mesh.cells(k, c);
      }
      auto& rec = table[facet_key(f, n)];
      if (rec.count == 0) {
        rec.cell = c;
        rec.local = skip;
      } else {
        rec.other = c;
      }
      ++rec.count;
    }
  }
  return table;
}

}  // namespace detail

/// Volume of cell c measured in its cell metric.
inline double cell_volume(const Mesh& mesh, int c) {
  const Eigen::MatrixXd J = detail::edge_matrix(mesh.cell_coordinates(c));
  const double det_g = mesh.has_flat_metric() ? 1.0 : mesh.metric(c).determinant();
  return std::sqrt(det_g) * J.determinant() / detail::factorial(mesh.dim);
}

inline std::vector<double> cell_volumes(const Mesh& mesh) {
  std::vector<double> vol(static_cast<std::size_t>(mesh.num_cells()));
  for (int c = 0; c < mesh.num_cells(); ++c) vol[static_cast<std::size_t>(c)] = cell_volume(mesh, c);
  return vol;
}

inline double total_volume(const Mesh& mesh) {
  const auto vol = cell_volumes(mesh);
  return detail::pairwise_sum(vol);
}

/// Cell-to-cell adjacency through shared facets.
inline std::vector<std::vector<int>> cell_neighbors(const Mesh& mesh) {
  std::vector<std::vector<int>> nb(static_cast<std::size_t>(mesh.num_cells()));
  for (const auto& [key, rec] : detail::facet_table(mesh)) {
    if (rec.count == 2) {
      nb[static_cast<std::size_t>(rec.cell)].push_back(rec.other);
      nb[static_cast<std::size_t>(rec.other)].push_back(rec.cell);
    }
  }
  for (auto& n : nb) std::sort(n.begin(), n.end());
  return nb;
}

/// Undirected vertex graph of the mesh edges, sorted adjacency lists.
inline std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh) {
  std::vector<std::vector<int>> nb(static_cast<std::size_t>(mesh.num_vertices()));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int i = 0; i <= mesh.dim; ++i) {
      for (int j = 0; j <= mesh.dim; ++j) {
        if (i != j) nb[static_cast<std::size_t>(mesh.cells(i, c))].push_back(mesh.cells(j, c));
      }
    }
  }
  for (auto& n : nb) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return nb;
}

/// True iff the cells selected by `mask` form one facet-connected piece.
inline bool cells_connected(const Mesh& mesh, const std::vector<bool>& mask) {
  detail::UnionFind uf(static_cast<std::size_t>(mesh.num_cells()));
  for (const auto& [key, rec] : detail::facet_table(mesh)) {
    if (rec.count == 2 && mask[static_cast<std::size_t>(rec.cell)] &&
        mask[static_cast<std::size_t>(rec.other)]) {
      uf.unite(static_cast<std::size_t>(rec.cell), static_cast<std::size_t>(rec.other));
    }
  }
  int count = 0;
  uf.labels(mask, &count);
  return count == 1;
}

/// Checks every Mesh invariant and fills boundary_facets. Throws MeshError
/// naming the violated invariant.
inline void validate(Mesh& mesh) {
  const int d = mesh.dim;
  if (d < 2 || d > 3) throw MeshError("unsupported dimension " + std::to_string(d));
  if (mesh.vertices.rows() != d) throw MeshError("vertex coordinate dimension mismatch");
  if (mesh.cells.rows() != d + 1) throw MeshError("cell arity mismatch");
  const int V = mesh.num_vertices();
  const int C = mesh.num_cells();
  if (C == 0) throw MeshError("mesh has no cells");
  if (V >= (1 << 21)) throw MeshError("too many vertices for facet hashing");
  if (!mesh.cell_metric.empty() && static_cast<int>(mesh.cell_metric.size()) != C) {
    throw MeshError("metric block size mismatch");
  }

  std::vector<bool> used(static_cast<std::size_t>(V), false);
  for (int c = 0; c < C; ++c) {
    for (int k = 0; k <= d; ++k) {
      const int v = mesh.cells(k, c);
      if (v < 0 || v >= V) {
        throw MeshError("vertex index out of range in cell " + std::to_string(c));
      }
      used[static_cast<std::size_t>(v)] = true;
    }
  }
  for (int v = 0; v < V; ++v) {
    if (!used[static_cast<std::size_t>(v)]) throw MeshError("dangling vertex " + std::to_string(v));
  }

  for (int c = 0; c < C; ++c) {
    if (!mesh.cell_metric.empty()) {
      const auto& g = mesh.cell_metric[static_cast<std::size_t>(c)];
      if ((g - g.transpose()).norm() > 1e-12 * g.norm()) {
        throw MeshError("metric not symmetric in cell " + std::to_string(c));
      }
      Eigen::LLT<Eigen::MatrixXd> llt(g);
      if (llt.info() != Eigen::Success) {
        throw MeshError("metric not positive definite in cell " + std::to_string(c));
      }
    }
    const Eigen::MatrixXd x = mesh.cell_coordinates(c);
    const double det = detail::edge_matrix(x).determinant();
    const double scale = std::pow((x.colwise() - x.col(0)).colwise().norm().maxCoeff(), d);
    if (std::abs(det) <= 1e-13 * scale) throw MeshError("degenerate cell " + std::to_string(c));
    if (det < 0) throw MeshError("cell orientation is negative in cell " + std::to_string(c));
  }

  const auto table = detail::facet_table(mesh);
  std::vector<std::uint64_t> boundary_keys;
  detail::UnionFind uf(static_cast<std::size_t>(C));
  for (const auto& [key, rec] : table) {
    if (rec.count > 2) throw MeshError("non-manifold facet shared by " + std::to_string(rec.count) + " cells");
    if (rec.count == 1) boundary_keys.push_back(key);
    if (rec.count == 2) uf.unite(static_cast<std::size_t>(rec.cell), static_cast<std::size_t>(rec.other));
  }
  int components = 0;
  uf.labels(std::vector<bool>(static_cast<std::size_t>(C), true), &components);
  if (components != 1) throw MeshError("mesh is not connected (" + std::to_string(components) + " components)");

  std::sort(boundary_keys.begin(), boundary_keys.end());
  mesh.boundary_facets.resize(d, static_cast<Eigen::Index>(boundary_keys.size()));
  for (std::size_t f = 0; f < boundary_keys.size(); ++f) {
    std::uint64_t key = boundary_keys[f];
    for (int k = d - 1; k >= 0; --k) {
      mesh.boundary_facets(k, static_cast<Eigen::Index>(f)) = static_cast<int>(key & ((1u << 21) - 1));
      key >>= 21;
    }
  }
}

/// Vertices lying on a boundary facet.
inline std::vector<bool> boundary_vertex_mask(const Mesh& mesh) {
  std::vector<bool> on(static_cast<std::size_t>(mesh.num_vertices()), false);
  for (Eigen::Index f = 0; f < mesh.boundary_facets.cols(); ++f) {
    for (int k = 0; k < mesh.dim; ++k) on[static_cast<std::size_t>(mesh.boundary_facets(k, f))] = true;
  }
  return on;
}

namespace detail {

// Kuhn (Freudenthal) simplices of the unit d-cube: one per axis permutation,
// following the monotone lattice path that adds the axes in that order.
inline std::vector<std::vector<std::vector<int>>> kuhn_paths(int d) {
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<std::vector<int>>> out;
  do {
    std::vector<std::vector<int>> path;
    std::vector<int> corner(static_cast<std::size_t>(d), 0);
    path.push_back(corner);
    for (int a : perm) {
      corner[static_cast<std::size_t>(a)] = 1;
      path.push_back(corner);
    }
    out.push_back(std::move(path));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace detail

/// Unit box [0,1]^d meshed with the Kuhn subdivision of a structured grid
/// (d! simplices per grid cell). A warp sets the cell metric to
/// diag(1, w^2, ..., w^2) at the cell barycenter.
inline Mesh build_box_grid(int d, std::vector<int> resolution, const std::optional<Warp>& warp = std::nullopt) {
  if (d < 2 || d > 3) throw MeshError("box grid requires d in {2, 3}");
  if (resolution.size() == 1) resolution.assign(static_cast<std::size_t>(d), resolution.front());
  if (static_cast<int>(resolution.size()) != d) throw MeshError("resolution must list one value per axis");
  for (int n : resolution) {
    if (n < 2) throw MeshError("resolution must be at least 2 per axis");
  }

  Mesh mesh;
  mesh.dim = d;
  mesh.grid = BoxGrid{resolution};
  const BoxGrid& grid = *mesh.grid;

  int V = 1;
  int cubes = 1;
  for (int n : resolution) {
    V *= n + 1;
    cubes *= n;
  }
  mesh.vertices.resize(d, V);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (int v = 0; v < V; ++v) {
    int rem = v;
    for (int a = 0; a < d; ++a) {
      idx[static_cast<std::size_t>(a)] = rem % (resolution[static_cast<std::size_t>(a)] + 1);
      rem /= resolution[static_cast<std::size_t>(a)] + 1;
      mesh.vertices(a, v) = static_cast<double>(idx[static_cast<std::size_t>(a)]) / resolution[static_cast<std::size_t>(a)];
    }
  }

  const auto paths = detail::kuhn_paths(d);
  mesh.cells.resize(d + 1, cubes * static_cast<int>(paths.size()));
  int c = 0;
  std::vector<int> base(static_cast<std::size_t>(d), 0);
  std::vector<int> corner(static_cast<std::size_t>(d));
  for (int q = 0; q < cubes; ++q) {
    int rem = q;
    for (int a = 0; a < d; ++a) {
      base[static_cast<std::size_t>(a)] = rem % resolution[static_cast<std::size_t>(a)];
      rem /= resolution[static_cast<std::size_t>(a)];
    }
    for (const auto& path : paths) {
      for (int k = 0; k <= d; ++k) {
        for (int a = 0; a < d; ++a) {
          corner[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + path[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)];
        }
        mesh.cells(k, c) = grid.vertex_index(corner);
      }
      if (detail::edge_matrix(mesh.cell_coordinates(c)).determinant() < 0) {
        std::swap(mesh.cells(d - 1, c), mesh.cells(d, c));
      }
      ++c;
    }
  }

  if (warp) {
    if (!warp->profile) throw MeshError("warp profile is empty");
    mesh.cell_metric.resize(static_cast<std::size_t>(mesh.num_cells()));
    for (int cell = 0; cell < mesh.num_cells(); ++cell) {
      const double rho = mesh.barycenter(cell)(0) - warp->sigma_offset;
      const double w = warp->profile(rho);
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw MeshError("non-positive warp sample at rho = " + std::to_string(rho));
      }
      Eigen::MatrixXd g = Eigen::MatrixXd::Identity(d, d) * (w * w);
      g(0, 0) = 1.0;
      mesh.cell_metric[static_cast<std::size_t>(cell)] = g;
    }
  }

  validate(mesh);
  return mesh;
}

/// Periodic grid [0, lx) x [0, ly) with nx by ny vertices (a flat torus),
/// two triangles per grid rectangle.
inline Mesh build_periodic_grid_2d(int nx, int ny, double lx, double ly) {
  if (nx < 3 || ny < 3) throw MeshError("periodic grid requires at least 3 vertices per axis");
  if (!(lx > 0.0) || !(ly > 0.0)) throw MeshError("periodic grid lengths must be positive");
  Mesh mesh;
  mesh.dim = 2;
  mesh.period = Eigen::Vector2d(lx, ly);
  mesh.vertices.resize(2, nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.vertices(0, i + nx * j) = lx * i / nx;
      mesh.vertices(1, i + nx * j) = ly * j / ny;
    }
  }
  auto id = [nx, ny](int i, int j) { return ((i % nx) + nx) % nx + nx * (((j % ny) + ny) % ny); };
  mesh.cells.resize(3, 2 * nx * ny);
  int c = 0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.cells.col(c++) << id(i, j), id(i + 1, j), id(i + 1, j + 1);
      mesh.cells.col(c++) << id(i, j), id(i + 1, j + 1), id(i, j + 1);
    }
  }
  validate(mesh);
  return mesh;
}

/// Periodic square grid [0, L)^2 with n vertices per axis.
inline Mesh build_periodic_grid_2d(int n, double length = 1.0) { return build_periodic_grid_2d(n, n, length, length); }

// ---------------------------------------------------------------------------
// ASCII mesh format
//
//   dim d
//   vertices V
//   <V lines of d floats>
//   cells C
//   <C lines of d+1 zero-based vertex indices>
//   metric C                        (optional)
//   <C lines of d(d+1)/2 floats, upper triangle row-major>
//
// '#' starts a comment; blank lines are ignored.
// ---------------------------------------------------------------------------

namespace detail {

class LineReader {
public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line with comments stripped; false at end of input.
  bool next(std::istringstream& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.clear();
      out.str(line);
      return true;
    }
    return false;
  }

  std::istringstream require(const char* what) {
    std::istringstream s;
    if (!next(s)) throw ParseError(number_ + 1, std::string("unexpected end of file, expected ") + what);
    return s;
  }

  std::size_t line() const { return number_; }

private:
  std::istream& in_;
  std::size_t number_ = 0;
};

inline long read_header(LineReader& reader, const std::string& keyword) {
  auto s = reader.require(keyword.c_str());
  std::string word;
  long count = -1;
  if (!(s >> word >> count) || word != keyword || count < 0) {
    throw ParseError(reader.line(), "expected '" + keyword + " <count>'");
  }
  std::string extra;
  if (s >> extra) throw ParseError(reader.line(), "trailing tokens after '" + keyword + "' header");
  return count;
}

template <typename T>
void read_row(LineReader& reader, int count, T* out, const char* what) {
  auto s = reader.require(what);
  for (int k = 0; k < count; ++k) {
    if (!(s >> out[k])) throw ParseError(reader.line(), std::string("malformed ") + what + " row");
  }
  std::string extra;
  if (s >> extra) throw ParseError(reader.line(), std::string("too many values in ") + what + " row");
}

}  // namespace detail

inline Mesh read_mesh(std::istream& in) {
  detail::LineReader reader(in);
  Mesh mesh;
  mesh.dim = static_cast<int>(detail::read_header(reader, "dim"));
  const int d = mesh.dim;
  if (d < 2 || d > 3) throw ParseError(reader.line(), "dimension must be 2 or 3");

  const long V = detail::read_header(reader, "vertices");
  mesh.vertices.resize(d, V);
  std::array<double, 3> xv{};
  for (long v = 0; v < V; ++v) {
    detail::read_row(reader, d, xv.data(), "vertex");
    for (int a = 0; a < d; ++a) mesh.vertices(a, v) = xv[static_cast<std::size_t>(a)];
  }

  const long C = detail::read_header(reader, "cells");
  mesh.cells.resize(d + 1, C);
  std::array<long, 4> cv{};
  for (long c = 0; c < C; ++c) {
    detail::read_row(reader, d + 1, cv.data(), "cell");
    for (int k = 0; k <= d; ++k) {
      if (cv[static_cast<std::size_t>(k)] < 0 || cv[static_cast<std::size_t>(k)] >= V) {
        throw ParseError(reader.line(), "vertex index out of range");
      }
      mesh.cells(k, c) = static_cast<int>(cv[static_cast<std::size_t>(k)]);
    }
  }

  std::istringstream probe;
  if (reader.next(probe)) {
    std::string word;
    long count = -1;
    if (!(probe >> word >> count) || word != "metric") throw ParseError(reader.line(), "expected 'metric <count>' or end of file");
    if (count != C) throw ParseError(reader.line(), "metric block must have one row per cell");
    const int m = d * (d + 1) / 2;
    std::array<double, 6> gv{};
    mesh.cell_metric.resize(static_cast<std::size_t>(C));
    for (long c = 0; c < C; ++c) {
      detail::read_row(reader, m, gv.data(), "metric");
      Eigen::MatrixXd g(d, d);
      int k = 0;
      for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
          g(i, j) = g(j, i) = gv[static_cast<std::size_t>(k++)];
        }
      }
      mesh.cell_metric[static_cast<std::size_t>(c)] = g;
    }
    if (reader.next(probe)) throw ParseError(reader.line(), "unexpected content after metric block");
  }

  validate(mesh);
  return mesh;
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
  const int d = mesh.dim;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "dim " << d << "\n";
  out << "vertices " << mesh.num_vertices() << "\n";
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    for (int a = 0; a < d; ++a) out << (a ? " " : "") << mesh.vertices(a, v);
    out << "\n";
  }
  out << "cells " << mesh.num_cells() << "\n";
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int k = 0; k <= d; ++k) out << (k ? " " : "") << mesh.cells(k, c);
    out << "\n";
  }
  if (!mesh.cell_metric.empty()) {
    out << "metric " << mesh.num_cells() << "\n";
    for (const auto& g : mesh.cell_metric) {
      bool first = true;
      for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
          out << (first ? "" : " ") << g(i, j);
          first = false;
        }
      }
      out << "\n";
    }
  }
}

inline void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file '" + path + "'");
  write_mesh(out, mesh);
}

// ---------------------------------------------------------------------------
// Gradient data
// ---------------------------------------------------------------------------

/// Per-cell linear map from the d+1 vertex values to the (constant)
/// differential of the affine interpolant, together with the inverse cell
/// metric needed to measure it.
struct CellGradient {
  Eigen::MatrixXd covector;        // d x (d+1): du = covector * local values
  Eigen::MatrixXd metric_inverse;  // d x d
  double volume = 0.0;             // metric volume of the cell

  Vector differential(const Vector& local) const { return covector * local; }

  /// |du|_g^2 = du^T g^{-1} du.
  double norm2(const Vector& local) const {
    const Vector du = differential(local);
    return du.dot(metric_inverse * du);
  }
};

inline CellGradient cell_gradient(const Mesh& mesh, int c) {
  const int d = mesh.dim;
  const Eigen::MatrixXd J = detail::edge_matrix(mesh.cell_coordinates(c));
  const double det = J.determinant();
  const double scale = std::pow(J.colwise().norm().maxCoeff(), d);
  if (!(std::abs(det) > 1e-13 * scale)) throw GeometryError("degenerate cell " + std::to_string(c));

  CellGradient out;
  const Eigen::MatrixXd JinvT = J.inverse().transpose();
  out.covector.resize(d, d + 1);
  out.covector.col(0) = -JinvT.rowwise().sum();
  out.covector.rightCols(d) = JinvT;
  const Eigen::MatrixXd g = mesh.metric(c);
  out.metric_inverse = mesh.has_flat_metric() ? g : Eigen::MatrixXd(g.inverse());
  out.volume = cell_volume(mesh, c);
  return out;
}

inline std::vector<CellGradient> simplex_gradient_data(const Mesh& mesh) {
  std::vector<CellGradient> out;
  out.reserve(static_cast<std::size_t>(mesh.num_cells()));
  for (int c = 0; c < mesh.num_cells(); ++c) out.push_back(cell_gradient(mesh, c));
  return out;
}

/// Vertex values of `u` restricted to cell c, in local order.
inline Vector gather(const Mesh& mesh, const Vector& u, int c) {
  Vector local(mesh.dim + 1);
  for (int k = 0; k <= mesh.dim; ++k) local(k) = u(mesh.cells(k, c));
  return local;
}

}  // namespace dumbbell

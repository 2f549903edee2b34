#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "dumbbell/error.hpp"
#include "dumbbell/mesh.hpp"
#include "dumbbell/metric.hpp"

namespace dumbbell {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Stiffness K realizes the weighted Dirichlet energy, M the weighted mass.
/// Row i of both operators belongs to mesh vertex dof_map[i].
struct OperatorPair {
  SparseMatrix K;
  SparseMatrix M;
  std::vector<int> dof_map;

  int size() const { return static_cast<int>(dof_map.size()); }
};

namespace detail {

// P1 assembly over the cells selected by `active`, with per-cell weights
// on stiffness and mass. Dofs are the vertices touched by active cells, in
// increasing vertex order.
inline OperatorPair assemble_cells(const Mesh& mesh, const std::vector<bool>& active,
                                   const std::vector<double>& stiffness_weight, const std::vector<double>& mass_weight) {
  const int d = mesh.dim;
  std::vector<int> local(static_cast<std::size_t>(mesh.num_vertices()), -1);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (!active[static_cast<std::size_t>(c)]) continue;
    for (int k = 0; k <= d; ++k) local[static_cast<std::size_t>(mesh.cells(k, c))] = 0;
  }
  OperatorPair pair;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (local[static_cast<std::size_t>(v)] == 0) {
      local[static_cast<std::size_t>(v)] = static_cast<int>(pair.dof_map.size());
      pair.dof_map.push_back(v);
    }
  }
  const int n = pair.size();
  if (n == 0) throw GeometryError("no active cells to assemble");

  // consistent P1 mass: vol * (1 + delta_ij) / ((d+1)(d+2))
  const double mass_diag = 2.0 / ((d + 1.0) * (d + 2.0));
  const double mass_off = 1.0 / ((d + 1.0) * (d + 2.0));

  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(static_cast<std::size_t>(mesh.num_cells()) * (d + 1) * (d + 1));
  mt.reserve(kt.capacity());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (!active[static_cast<std::size_t>(c)]) continue;
    const CellGradient grad = cell_gradient(mesh, c);
    const Eigen::MatrixXd local_k = grad.covector.transpose() * grad.metric_inverse * grad.covector;
    const double ks = stiffness_weight[static_cast<std::size_t>(c)] * grad.volume;
    const double ms = mass_weight[static_cast<std::size_t>(c)] * grad.volume;
    for (int i = 0; i <= d; ++i) {
      const int gi = local[static_cast<std::size_t>(mesh.cells(i, c))];
      for (int j = i; j <= d; ++j) {
        const int gj = local[static_cast<std::size_t>(mesh.cells(j, c))];
        const double kij = ks * local_k(i, j);
        const double mij = ms * (i == j ? mass_diag : mass_off);
        kt.emplace_back(gi, gj, kij);
        mt.emplace_back(gi, gj, mij);
        if (i != j) {
          kt.emplace_back(gj, gi, kij);
          mt.emplace_back(gj, gi, mij);
        }
      }
    }
  }
  pair.K.resize(n, n);
  pair.M.resize(n, n);
  pair.K.setFromTriplets(kt.begin(), kt.end());
  pair.M.setFromTriplets(mt.begin(), mt.end());
  pair.K.makeCompressed();
  pair.M.makeCompressed();
  return pair;
}

}  // namespace detail

/// Whole-mesh operators for the conformal metric f g0 with natural boundary
/// conditions: K weights each cell by f^{d/2-1}, M by f^{d/2}, so that
/// v^T K v / v^T M v is the discrete Rayleigh quotient.
inline OperatorPair assemble(const Mesh& mesh, const ConformalField& field) {
  const int C = mesh.num_cells();
  if (static_cast<int>(field.f.size()) != C) throw GeometryError("conformal field size does not match mesh");
  std::vector<double> kw(static_cast<std::size_t>(C)), mw(static_cast<std::size_t>(C));
  const double half_d = 0.5 * mesh.dim;
  for (std::size_t c = 0; c < kw.size(); ++c) {
    const double f = field.f[c];
    if (!(f > 0.0)) throw GeometryError("conformal factor must be positive");
    kw[c] = std::pow(f, half_d - 1.0);
    mw[c] = std::pow(f, half_d);
  }
  return detail::assemble_cells(mesh, std::vector<bool>(static_cast<std::size_t>(C), true), kw, mw);
}

/// Operators of the reference metric g0 (f = 1) over the cells in `active`.
inline OperatorPair assemble_reference(const Mesh& mesh, const std::vector<bool>& active) {
  const std::vector<double> ones(static_cast<std::size_t>(mesh.num_cells()), 1.0);
  return detail::assemble_cells(mesh, active, ones, ones);
}

/// Neumann operators of one outer region Omega^+ or Omega^- in the metric
/// c g0 (c = 1 by default). A constant factor scales the eigenvalues by 1/c.
inline OperatorPair subdomain_neumann(const Mesh& mesh, const CollarGeometry& geom, Region side, double conformal = 1.0) {
  if (side == Region::collar) throw GeometryError("subdomain_neumann expects the plus or minus side");
  const auto mask = geom.mask(side);
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw GeometryError(std::string("empty region: ") + to_string(side));
  }
  if (!cells_connected(mesh, mask)) throw GeometryError(std::string("region is not connected: ") + to_string(side));
  if (!(conformal > 0.0)) throw GeometryError("conformal factor must be positive");
  OperatorPair pair = assemble_reference(mesh, mask);
  if (conformal != 1.0) {
    pair.K *= std::pow(conformal, 0.5 * mesh.dim - 1.0);
    pair.M *= std::pow(conformal, 0.5 * mesh.dim);
  }
  return pair;
}

/// Reduced SPD system K_II x = -K_IB u_B of a Dirichlet problem, with the
/// affine lift back to the full dof vector.
class DirichletSystem {
public:
  DirichletSystem(const OperatorPair& pair, const std::vector<int>& boundary_vertices, const Vector& values) {
    const int n = pair.size();
    if (static_cast<Eigen::Index>(boundary_vertices.size()) != values.size()) {
      throw SolverError("boundary values do not match boundary vertex count");
    }
    std::vector<int> global_to_local;
    const int max_vertex = pair.dof_map.empty() ? 0 : *std::max_element(pair.dof_map.begin(), pair.dof_map.end());
    global_to_local.assign(static_cast<std::size_t>(max_vertex) + 1, -1);
    for (int i = 0; i < n; ++i) global_to_local[static_cast<std::size_t>(pair.dof_map[static_cast<std::size_t>(i)])] = i;

    full_values_ = Vector::Zero(n);
    is_boundary_.assign(static_cast<std::size_t>(n), false);
    for (std::size_t b = 0; b < boundary_vertices.size(); ++b) {
      const int v = boundary_vertices[b];
      if (v < 0 || v > max_vertex || global_to_local[static_cast<std::size_t>(v)] < 0) {
        throw SolverError("boundary vertex " + std::to_string(v) + " is not a dof of the operator");
      }
      const int i = global_to_local[static_cast<std::size_t>(v)];
      is_boundary_[static_cast<std::size_t>(i)] = true;
      full_values_(i) = values(static_cast<Eigen::Index>(b));
    }

    interior_.clear();
    std::vector<int> reduced(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
      if (!is_boundary_[static_cast<std::size_t>(i)]) {
        reduced[static_cast<std::size_t>(i)] = static_cast<int>(interior_.size());
        interior_.push_back(i);
      }
    }
    if (interior_.empty()) throw SolverError("Dirichlet boundary covers every vertex");
    check_interior_reaches_boundary(pair.K);

    const int m = static_cast<int>(interior_.size());
    std::vector<Eigen::Triplet<double>> trip;
    rhs_ = Vector::Zero(m);
    for (int col = 0; col < n; ++col) {
      for (SparseMatrix::InnerIterator it(pair.K, col); it; ++it) {
        const int row = static_cast<int>(it.row());
        if (is_boundary_[static_cast<std::size_t>(row)]) continue;
        const int r = reduced[static_cast<std::size_t>(row)];
        if (is_boundary_[static_cast<std::size_t>(col)]) {
          rhs_(r) -= it.value() * full_values_(col);
        } else {
          trip.emplace_back(r, reduced[static_cast<std::size_t>(col)], it.value());
        }
      }
    }
    matrix_.resize(m, m);
    matrix_.setFromTriplets(trip.begin(), trip.end());
  }

  const SparseMatrix& matrix() const { return matrix_; }
  const Vector& rhs() const { return rhs_; }
  const std::vector<int>& interior() const { return interior_; }

  Vector lift(const Vector& interior_solution) const {
    Vector full = full_values_;
    for (std::size_t k = 0; k < interior_.size(); ++k) full(interior_[k]) = interior_solution(static_cast<Eigen::Index>(k));
    return full;
  }

  /// Solves the reduced system by sparse Cholesky and lifts the result.
  Vector solve() const {
    Eigen::SimplicialLLT<SparseMatrix> llt(matrix_);
    if (llt.info() != Eigen::Success) throw SolverError("reduced Dirichlet system is singular");
    const Vector x = llt.solve(rhs_);
    if (llt.info() != Eigen::Success || !x.allFinite()) throw SolverError("reduced Dirichlet solve failed");
    return lift(x);
  }

private:
  // Every interior dof must connect to the boundary through K's graph,
  // otherwise the reduced matrix is singular.
  void check_interior_reaches_boundary(const SparseMatrix& K) const {
    const auto n = static_cast<std::size_t>(K.rows());
    std::vector<bool> seen(n, false);
    std::queue<int> queue;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_boundary_[i]) {
        seen[i] = true;
        queue.push(static_cast<int>(i));
      }
    }
    while (!queue.empty()) {
      const int col = queue.front();
      queue.pop();
      for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
        const auto row = static_cast<std::size_t>(it.row());
        if (!seen[row] && it.value() != 0.0) {
          seen[row] = true;
          queue.push(static_cast<int>(row));
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw SolverError("singular reduced system: interior component without Dirichlet boundary");
    }
  }

  SparseMatrix matrix_;
  Vector rhs_;
  Vector full_values_;
  std::vector<bool> is_boundary_;
  std::vector<int> interior_;
};

inline DirichletSystem restrict_dirichlet(const OperatorPair& pair, const std::vector<int>& boundary_vertices,
                                          const Vector& values) {
  return DirichletSystem(pair, boundary_vertices, values);
}

/// Scatter a dof vector of `pair` back to a full vertex field (zero elsewhere).
inline Vector scatter(const OperatorPair& pair, const Vector& local, int num_vertices) {
  Vector full = Vector::Zero(num_vertices);
  for (int i = 0; i < pair.size(); ++i) full(pair.dof_map[static_cast<std::size_t>(i)]) = local(i);
  return full;
}

}  // namespace dumbbell

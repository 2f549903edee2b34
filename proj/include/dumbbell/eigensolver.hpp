#pragma once

// Lowest eigenpairs of the pencil K u = lambda M u.
//
// Strategy: factor K - sigma M once (sparse LDL^T, sigma a small positive
// shift below the first nonzero eigenvalue) and run a restarted block Krylov
// iteration on S = (K - sigma M)^{-1} M with Rayleigh-Ritz on K. The
// constant vector spans the kernel of K for natural boundary conditions; it
// is removed by explicit M-orthogonalization after every application of S
// and reported as the zeroth pair.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "dumbbell/assembly.hpp"
#include "dumbbell/error.hpp"
#include "dumbbell/metric.hpp"

namespace dumbbell {

struct EigenOptions {
  double tol = 1e-8;
  std::optional<double> lambda1_estimate;  // sets sigma = max(1e-8, 0.1 * estimate)
  std::uint64_t seed = 0x5eed;
  int max_iterations = 500;
  int krylov_depth = 3;
};

struct EigenResult {
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;     // dof-indexed columns
  std::vector<double> residuals;    // ||K u - lambda M u|| / (max(lambda, sigma) ||M u||); ||K u|| / (max|K_ii| ||u||) for the constant mode
  bool unit_mass = false;           // every column has u^T M u = 1
  double shift = 0.0;
  int iterations = 0;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  Vector mode(int k) const { return eigenvectors.col(k); }
};

namespace detail {

// Deterministic uniform samples in [-0.5, 0.5), independent of the standard
// library's distribution implementations.
inline Eigen::MatrixXd seeded_block(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) X(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  }
  return X;
}

class MOrthoBasis {
public:
  MOrthoBasis(const SparseMatrix& M, Eigen::Index capacity) : M_(M) {
    Q_.resize(M.rows(), capacity);
    MQ_.resize(M.rows(), capacity);
  }

  Eigen::Index size() const { return count_; }
  auto basis() const { return Q_.leftCols(count_); }
  auto mass_basis() const { return MQ_.leftCols(count_); }

  // Two-pass classical Gram-Schmidt in the M inner product. Returns false if
  // the vector is (numerically) in the span already.
  bool append(Vector y) {
    const double original = std::sqrt(std::max(0.0, y.dot(M_ * y)));
    if (!(original > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass) {
      if (count_ > 0) y -= basis() * (mass_basis().transpose() * y);
    }
    Vector My = M_ * y;
    const double norm = std::sqrt(std::max(0.0, y.dot(My)));
    if (!(norm > 1e-10 * original)) return false;
    Q_.col(count_) = y / norm;
    MQ_.col(count_) = My / norm;
    ++count_;
    return true;
  }

private:
  const SparseMatrix& M_;
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd MQ_;
  Eigen::Index count_ = 0;
};

}  // namespace detail

inline double rayleigh_quotient(const OperatorPair& pair, const Vector& v) {
  const double mass = v.dot(pair.M * v);
  if (!(mass > 0.0)) throw SolverError("Rayleigh quotient of a vector with zero M-norm");
  return v.dot(pair.K * v) / mass;
}

/// The m smallest eigenpairs (including the zero mode when K annihilates
/// constants). Throws SolverError if no usable factorization is found and
/// ConvergenceError if the residual tolerance is not met within the cap.
inline EigenResult solve_smallest(const OperatorPair& pair, int m, const EigenOptions& opts = {}) {
  if (m < 2) throw SolverError("solve_smallest needs at least two modes");
  const SparseMatrix& K = pair.K;
  const SparseMatrix& M = pair.M;
  const Eigen::Index n = K.rows();
  if (n < m + 2) throw SolverError("problem too small for the requested mode count");

  const Vector ones = Vector::Ones(n);
  const double mass_one = ones.dot(M * ones);
  if (!(mass_one > 0.0)) throw SolverError("mass operator is not positive");
  const double k_scale = K.diagonal().cwiseAbs().maxCoeff();
  const bool deflate = (K * ones).cwiseAbs().maxCoeff() <= 1e-10 * k_scale;
  const Vector z = ones / std::sqrt(mass_one);
  const Vector Mz = M * z;
  auto project = [&](auto&& X) {
    if (deflate) X -= z * (Mz.transpose() * X);
  };

  double sigma = std::max(1e-8, opts.lambda1_estimate ? 0.1 * *opts.lambda1_estimate : 0.0);
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  bool factored = false;
  for (int attempt = 0; attempt < 6 && !factored; ++attempt) {
    const SparseMatrix A = K - sigma * M;
    ldlt.compute(A);
    factored = ldlt.info() == Eigen::Success && ldlt.vectorD().allFinite() && (ldlt.vectorD().array() != 0.0).all();
    if (!factored) sigma *= 1.37 + 0.11 * attempt;  // shift landed on an eigenvalue; move off it
  }
  if (!factored) throw SolverError("factorization of K - sigma M failed for every trial shift");

  const int wanted = deflate ? m - 1 : m;
  const int block = std::min<Eigen::Index>(wanted + 2, n - 1);
  const int depth = std::max(2, opts.krylov_depth);

  Eigen::MatrixXd X = detail::seeded_block(n, block, opts.seed);
  project(X);

  Vector theta;
  Eigen::MatrixXd ritz;
  std::vector<double> residual(static_cast<std::size_t>(wanted), 0.0);
  double best = std::numeric_limits<double>::infinity();
  int iter = 0;
  bool converged = false;
  for (iter = 1; iter <= opts.max_iterations; ++iter) {
    detail::MOrthoBasis basis(M, static_cast<Eigen::Index>(block) * depth);
    std::vector<Eigen::Index> last;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (basis.append(X.col(j))) last.push_back(basis.size() - 1);
    }
    for (int level = 1; level < depth; ++level) {
      std::vector<Eigen::Index> next;
      for (Eigen::Index col : last) {
        Vector y = ldlt.solve(M * basis.basis().col(col));
        project(y);
        if (basis.append(std::move(y))) next.push_back(basis.size() - 1);
      }
      last = std::move(next);
      if (last.empty()) break;
    }
    if (basis.size() < wanted) throw SolverError("Krylov basis collapsed below the requested mode count");

    const auto Q = basis.basis();
    Eigen::MatrixXd H = Q.transpose() * (K * Q);
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(H);
    const Eigen::Index keep = std::min<Eigen::Index>(block, basis.size());
    theta = small.eigenvalues().head(keep);
    X = Q * small.eigenvectors().leftCols(keep);
    project(X);

    double worst = 0.0;
    for (int k = 0; k < wanted; ++k) {
      const Vector x = X.col(k);
      const Vector Mx = M * x;
      const double r = (K * x - theta(k) * Mx).norm() / (std::max(theta(k), sigma) * Mx.norm());
      residual[static_cast<std::size_t>(k)] = r;
      worst = std::max(worst, r);
    }
    best = std::min(best, worst);
    if (worst <= opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("shift-invert iteration did not converge", best);

  EigenResult out;
  out.shift = sigma;
  out.iterations = iter;
  out.eigenvectors.resize(n, m);
  int col = 0;
  if (deflate) {
    out.eigenvalues.push_back(std::max(0.0, z.dot(K * z)));
    // lambda_0 = 0 exactly; K z is roundoff, measured against the operator scale
    out.residuals.push_back((K * z).norm() / (k_scale * z.norm()));
    out.eigenvectors.col(col++) = z;
  }
  for (int k = 0; k < wanted; ++k) {
    Vector x = X.col(k);
    x /= std::sqrt(x.dot(M * x));
    out.eigenvalues.push_back(theta(k));
    out.residuals.push_back(residual[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(col++) = x;
  }
  out.unit_mass = true;
  return out;
}

/// Mass-weighted integral of a vertex field over the cells of one region
/// (g0 volume; the sign is all that matters for orientation).
inline double region_integral(const Mesh& mesh, const CollarGeometry& geom, const Vector& u, Region side) {
  std::vector<double> parts;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (geom.region[static_cast<std::size_t>(c)] != side) continue;
    double mean = 0.0;
    for (int k = 0; k <= mesh.dim; ++k) mean += u(mesh.cells(k, c));
    parts.push_back(geom.cell_volume[static_cast<std::size_t>(c)] * mean / (mesh.dim + 1));
  }
  return detail::pairwise_sum(parts);
}

/// Rescales every mode to unit g_eps mass and orients the first nontrivial
/// mode so that its mean over Omega^+ is positive.
inline EigenResult normalize_and_sign(EigenResult result, const OperatorPair& pair, const Mesh& mesh,
                                      const CollarGeometry& geom) {
  if (result.size() < 2) throw SolverError("normalize_and_sign needs at least two modes");
  if (pair.size() != mesh.num_vertices()) throw SolverError("normalize_and_sign expects whole-mesh operators");
  for (int k = 0; k < result.size(); ++k) {
    const Vector u = result.eigenvectors.col(k);
    const double mass = u.dot(pair.M * u);
    if (!(mass > 0.0)) throw SolverError("zero eigenvector");
    result.eigenvectors.col(k) = u / std::sqrt(mass);
  }
  if (region_integral(mesh, geom, result.eigenvectors.col(1), Region::plus) < 0.0) {
    result.eigenvectors.col(1) *= -1.0;
  }
  result.unit_mass = true;
  return result;
}

struct TestFunctionBound {
  double value = 0.0;        // q_eps(u) >= lambda_1
  double slope = 0.0;        // the constant a
  double mean_before = 0.0;  // discrete integral of u against g_eps before re-projection
  Vector u;
};

/// Rayleigh quotient of the piecewise-affine test function
///   u = 1 on Omega^-, 1 - a (eta + rho) on the collar, 1 - 2 a eta on Omega^+
/// with a chosen so that u has zero g_eps mean. Requires the collar boundary
/// to run along mesh facets so that u lies exactly in the P1 space.
inline TestFunctionBound test_function_bound(const Mesh& mesh, const CollarGeometry& geom, const ConformalField& field,
                                             const OperatorPair& pair) {
  if (!field.is_step()) throw GeometryError("test_function_bound requires the step profile");
  if (pair.size() != mesh.num_vertices()) throw GeometryError("test_function_bound expects whole-mesh operators");
  if (!is_grid_aligned(mesh, geom)) throw GeometryError("collar boundary is not grid-aligned; refusing inexact test function");

  const double half_d = 0.5 * geom.dim;
  const double eps_w = std::pow(field.epsilon, half_d);
  const double kap_w = std::pow(field.kappa, half_d);
  const double eta = geom.eta;

  std::vector<double> parts;
  for (std::size_t c = 0; c < geom.region.size(); ++c) {
    if (geom.region[c] == Region::collar) parts.push_back(geom.cell_volume[c] * (eta + geom.cell_rho[c]));
  }
  const double collar_moment = detail::pairwise_sum(parts);
  const double a = (kap_w * geom.vol_complement() + eps_w * geom.vol_collar) /
                   (2.0 * eta * kap_w * geom.vol_plus + eps_w * collar_moment);

  TestFunctionBound out;
  out.slope = a;
  out.u.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const double r = geom.rho(v);
    if (r <= -eta) {
      out.u(v) = 1.0;
    } else if (r >= eta) {
      out.u(v) = 1.0 - 2.0 * a * eta;
    } else {
      out.u(v) = 1.0 - a * (eta + r);
    }
  }
  const Vector ones = Vector::Ones(mesh.num_vertices());
  const Vector M1 = pair.M * ones;
  out.mean_before = out.u.dot(M1);
  out.u -= ones * (out.mean_before / ones.dot(M1));
  out.value = rayleigh_quotient(pair, out.u);
  return out;
}

}  // namespace dumbbell

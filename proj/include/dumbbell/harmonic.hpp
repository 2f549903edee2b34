#pragma once

// Plateau constants, the collar harmonic extension h, its affine model hbar,
// the sine-in-sigma collar solver and the closed-form warped 1D oracle.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dumbbell/assembly.hpp"
#include "dumbbell/detail/summation.hpp"
#include "dumbbell/error.hpp"
#include "dumbbell/mesh.hpp"
#include "dumbbell/metric.hpp"

namespace dumbbell {

struct PlateauConstants {
  double c_plus = 0.0;
  double c_minus = 0.0;
  double kappa0 = 1.0;

  double jump() const { return c_plus - c_minus; }
};

/// Solves c+^2 V+ + c-^2 V- = kappa0^{-d/2} and c+ V+ + c- V- = 0 with c+ > 0.
inline PlateauConstants compute_plateaus(double vol_plus, double vol_minus, double kappa0, int d) {
  if (!(vol_plus > 0.0) || !(vol_minus > 0.0)) throw GeometryError("plateau constants need positive volumes");
  if (!(kappa0 > 0.0)) throw GeometryError("kappa0 must be positive");
  PlateauConstants pc;
  pc.kappa0 = kappa0;
  pc.c_plus = std::pow(kappa0, -0.25 * d) * std::sqrt(vol_minus / (vol_plus * (vol_plus + vol_minus)));
  pc.c_minus = -pc.c_plus * vol_plus / vol_minus;
  return pc;
}

/// Plateau constants of a labeled mesh, with kappa0 from the same discrete volumes.
inline PlateauConstants compute_plateaus(const CollarGeometry& geom) {
  const double k0 = kappa_limit(geom.vol_collar, geom.vol_complement(), geom.dim);
  return compute_plateaus(geom.vol_plus, geom.vol_minus, k0, geom.dim);
}

/// Affine model (c+ + c-)/2 + (c+ - c-) rho / (2 eta).
inline double hbar(double rho, double eta, const PlateauConstants& pc) {
  if (!(eta > 0.0)) throw GeometryError("eta must be positive");
  return 0.5 * (pc.c_plus + pc.c_minus) + (pc.c_plus - pc.c_minus) * rho / (2.0 * eta);
}

/// Zero of hbar: rho* = -eta (c+ + c-) / (c+ - c-).
inline double hbar_root(double eta, const PlateauConstants& pc) {
  return -eta * (pc.c_plus + pc.c_minus) / (pc.c_plus - pc.c_minus);
}

struct HarmonicSolution {
  Vector h;                        // all vertices; c+ / c- outside the collar
  Vector hbar;                     // affine model, rho clamped to [-eta, eta]
  std::vector<bool> collar_vertex; // vertices of collar cells
  std::vector<int> boundary;       // Dirichlet vertices (on the collar's outer faces)
  double sup_deviation = 0.0;      // max |h - hbar| over collar vertices
  double l2_deviation = 0.0;       // g0 L2 norm of h - hbar on the collar
};

/// Harmonic extension of c+- into the collar for the reference metric g0.
/// Dirichlet data sit on collar vertices shared with outer cells; faces on
/// the domain boundary carry natural conditions.
inline HarmonicSolution solve_harmonic(const Mesh& mesh, const CollarGeometry& geom, const PlateauConstants& pc) {
  const auto active = geom.mask(Region::collar);
  if (!cells_connected(mesh, active)) throw GeometryError("collar region is not connected");
  const OperatorPair pair = assemble_reference(mesh, active);

  const int V = mesh.num_vertices();
  std::vector<bool> in_collar(static_cast<std::size_t>(V), false), in_outer(static_cast<std::size_t>(V), false);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto& flag = active[static_cast<std::size_t>(c)] ? in_collar : in_outer;
    for (int k = 0; k <= mesh.dim; ++k) flag[static_cast<std::size_t>(mesh.cells(k, c))] = true;
  }

  HarmonicSolution sol;
  sol.collar_vertex = in_collar;
  std::vector<double> values;
  for (int v = 0; v < V; ++v) {
    if (in_collar[static_cast<std::size_t>(v)] && in_outer[static_cast<std::size_t>(v)]) {
      sol.boundary.push_back(v);
      values.push_back(geom.rho(v) > 0.0 ? pc.c_plus : pc.c_minus);
    }
  }
  const DirichletSystem system(pair, sol.boundary, Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  const Vector local = system.solve();

  sol.h.resize(V);
  sol.hbar.resize(V);
  for (int v = 0; v < V; ++v) {
    const double r = std::clamp(geom.rho(v), -geom.eta, geom.eta);
    sol.hbar(v) = hbar(r, geom.eta, pc);
    sol.h(v) = geom.rho(v) > 0.0 ? pc.c_plus : pc.c_minus;
  }
  for (int i = 0; i < pair.size(); ++i) sol.h(pair.dof_map[static_cast<std::size_t>(i)]) = local(i);

  Vector diff(pair.size());
  for (int i = 0; i < pair.size(); ++i) {
    const int v = pair.dof_map[static_cast<std::size_t>(i)];
    diff(i) = sol.h(v) - sol.hbar(v);
  }
  sol.sup_deviation = diff.cwiseAbs().maxCoeff();
  sol.l2_deviation = std::sqrt(std::max(0.0, diff.dot(pair.M * diff)));
  return sol;
}

// ---------------------------------------------------------------------------
// Closed-form warped 1D oracle

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] on `panels` initial panels.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                               int panels = 8) {
  if (a == b) return 0.0;
  std::vector<double> parts;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double hi = p + 1 == panels ? b : lo + width;
    const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    parts.push_back(detail::simpson_step(f, lo, hi, flo, fm, fhi, whole, tol / panels, 48));
  }
  return detail::pairwise_sum(parts);
}

/// Exact collar solution on a warped product dr^2 + w(r)^2 g_Sigma:
/// (w^{d-1} h')' = 0 gives h(r) = c- + (c+ - c-) int_{-eta}^{r} w^{1-d} / int_{-eta}^{eta} w^{1-d}.
inline std::function<double(double)> warped_harmonic_1d(std::function<double(double)> w_profile, double eta,
                                                        const PlateauConstants& pc, int d, int quad_panels = 8) {
  if (!(eta > 0.0)) throw GeometryError("eta must be positive");
  auto weight = [w_profile, d](double r) {
    const double w = w_profile(r);
    if (!(w > 0.0)) throw GeometryError("warp profile must be positive");
    return std::pow(w, 1.0 - d);
  };
  const std::function<double(double)> integrand = weight;
  const double total = adaptive_simpson(integrand, -eta, eta, 1e-12, quad_panels);
  return [=](double r) {
    if (r <= -eta) return pc.c_minus;
    if (r >= eta) return pc.c_plus;
    return pc.c_minus + pc.jump() * adaptive_simpson(integrand, -eta, r, 1e-12, quad_panels) / total;
  };
}

// ---------------------------------------------------------------------------
// Sine-in-sigma collar solver
//
// With sigma = (rho + eta) pi / (2 eta), the collar Laplacian reads
//   (pi^2 / 4 eta^2) d_sigma^2 + Delta_Sigma - L,  L = (G1/eta) d_sigma + eta G2 D_y^2 + eta G3 D_y,
// and w = h - hbar solves (pi^2/4eta^2) d_sigma^2 w + Delta_Sigma w = F/eta + L w with w = 0 at
// sigma = 0, pi. Each sine mode is inverted exactly and L w is iterated.

/// Cell-centered Neumann grid on the (d-1)-box cross-section. Flattened
/// index: axis 0 fastest.
struct CrossSectionGrid {
  std::vector<int> cells;
  std::vector<double> lengths;

  int size() const {
    int n = 1;
    for (int c : cells) n *= c;
    return n;
  }
  int axes() const { return static_cast<int>(cells.size()); }

  Vector point(int flat) const {
    Vector y(axes());
    for (int a = 0; a < axes(); ++a) {
      const int n = cells[static_cast<std::size_t>(a)];
      const int j = flat % n;
      flat /= n;
      y(a) = (j + 0.5) * lengths[static_cast<std::size_t>(a)] / n;
    }
    return y;
  }
};

using CollarField = std::function<double(double sigma, const Vector& y)>;

struct CollarCoefficients {
  CollarField F;
  CollarField G1;
  std::vector<CollarField> G2;  // per cross-section axis; empty means zero
  std::vector<CollarField> G3;
};

struct FourierOptions {
  int modes = 64;
  int samples = 0;  // sigma collocation intervals; 0 means 4 * modes
  double tol = 1e-10;
  int max_iterations = 200;
};

struct FourierCollarSolution {
  double eta = 0.0;
  CrossSectionGrid grid;
  Eigen::MatrixXd coefficients;  // grid.size() x modes: w_n at each cross-section point
  int iterations = 0;
  double contraction = 0.0;      // last ratio of successive update norms
  std::vector<double> updates;   // H^2 norm of each update

  double value(double sigma, int y) const {
    double s = 0.0;
    for (Eigen::Index n = 0; n < coefficients.cols(); ++n) s += coefficients(y, n) * std::sin((n + 1.0) * sigma);
    return s;
  }

  double at_rho(double rho, int y = 0) const { return value((rho + eta) * std::numbers::pi / (2.0 * eta), y); }
};

namespace detail {

// Orthonormal DCT-II matrix: rows are the discrete Neumann eigenvectors.
inline Eigen::MatrixXd dct_matrix(int n) {
  Eigen::MatrixXd C(n, n);
  for (int k = 0; k < n; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int j = 0; j < n; ++j) C(k, j) = scale * std::cos(std::numbers::pi * k * (j + 0.5) / n);
  }
  return C;
}

// Kronecker product of per-axis matrices, axis 0 fastest.
inline Eigen::MatrixXd kron_axes(const std::vector<Eigen::MatrixXd>& per_axis) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(1, 1);
  for (const auto& A : per_axis) {
    Eigen::MatrixXd next(A.rows() * out.rows(), A.cols() * out.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = 0; j < A.cols(); ++j) next.block(i * out.rows(), j * out.cols(), out.rows(), out.cols()) = A(i, j) * out;
    }
    out = std::move(next);
  }
  return out;
}

// Second (order = 2) or first (order = 1) difference along `axis` with
// reflecting ghost cells.
inline SparseMatrix axis_difference(const CrossSectionGrid& grid, int axis, int order) {
  const int N = grid.size();
  const int n = grid.cells[static_cast<std::size_t>(axis)];
  const double h = grid.lengths[static_cast<std::size_t>(axis)] / n;
  int stride = 1;
  for (int a = 0; a < axis; ++a) stride *= grid.cells[static_cast<std::size_t>(a)];
  std::vector<Eigen::Triplet<double>> trip;
  for (int p = 0; p < N; ++p) {
    const int j = (p / stride) % n;
    const int lo = j > 0 ? p - stride : p;
    const int hi = j + 1 < n ? p + stride : p;
    if (order == 2) {
      trip.emplace_back(p, lo, 1.0 / (h * h));
      trip.emplace_back(p, hi, 1.0 / (h * h));
      trip.emplace_back(p, p, -2.0 / (h * h));
    } else {
      trip.emplace_back(p, hi, 0.5 / h);
      trip.emplace_back(p, lo, -0.5 / h);
    }
  }
  SparseMatrix D(N, N);
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

}  // namespace detail

/// Fixed-point iteration w <- -(pi^2 n^2 / 4 eta^2 - Delta_Sigma)^{-1} (F_n / eta + (L w)_n),
/// truncated at `modes` sine modes. Converged when the H^2 norm of the update
/// falls below tol; throws ConvergenceError (with the observed contraction
/// ratio) otherwise.
inline FourierCollarSolution collar_fourier_solve(const CrossSectionGrid& grid, double eta,
                                                  const CollarCoefficients& coef, const FourierOptions& opts = {}) {
  if (!(eta > 0.0)) throw GeometryError("eta must be positive");
  if (grid.cells.size() != grid.lengths.size() || grid.cells.empty()) throw GeometryError("cross-section grid is malformed");
  if (opts.modes < 1) throw SolverError("need at least one sine mode");
  const double pi = std::numbers::pi;
  const int N = opts.modes;
  const int M = opts.samples > 0 ? opts.samples : 4 * N;
  if (M <= N) throw SolverError("sigma collocation must exceed the mode count");
  const int Ny = grid.size();
  const int axes = grid.axes();

  // sigma_j = j pi / M, j = 1..M-1; S(n, j) = sin(n sigma_j), C(n, j) = n cos(n sigma_j)
  Eigen::MatrixXd S(N, M - 1), dS(N, M - 1);
  for (int n = 1; n <= N; ++n) {
    for (int j = 1; j < M; ++j) {
      const double s = j * pi / M;
      S(n - 1, j - 1) = std::sin(n * s);
      dS(n - 1, j - 1) = n * std::cos(n * s);
    }
  }
  const Eigen::MatrixXd project = (2.0 / M) * S.transpose();  // (M-1) x N

  std::vector<Eigen::MatrixXd> dct_axes;
  Vector mu = Vector::Zero(Ny);
  for (int a = 0; a < axes; ++a) {
    const int n = grid.cells[static_cast<std::size_t>(a)];
    const double h = grid.lengths[static_cast<std::size_t>(a)] / n;
    dct_axes.push_back(detail::dct_matrix(n));
    int stride = 1;
    for (int b = 0; b < a; ++b) stride *= grid.cells[static_cast<std::size_t>(b)];
    for (int p = 0; p < Ny; ++p) {
      const int k = (p / stride) % n;
      const double s = 2.0 / h * std::sin(pi * k / (2.0 * n));
      mu(p) += s * s;
    }
  }
  const Eigen::MatrixXd Q = detail::kron_axes(dct_axes);

  auto sample = [&](const CollarField& f) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Ny, M - 1);
    if (!f) return out;
    for (int p = 0; p < Ny; ++p) {
      const Vector y = grid.point(p);
      for (int j = 1; j < M; ++j) out(p, j - 1) = f(j * pi / M, y);
    }
    return out;
  };
  const Eigen::MatrixXd F = sample(coef.F);
  const Eigen::MatrixXd G1 = sample(coef.G1);
  std::vector<Eigen::MatrixXd> G2, G3;
  std::vector<SparseMatrix> D2, D1;
  for (int a = 0; a < axes; ++a) {
    const auto idx = static_cast<std::size_t>(a);
    G2.push_back(idx < coef.G2.size() ? sample(coef.G2[idx]) : Eigen::MatrixXd::Zero(Ny, M - 1));
    G3.push_back(idx < coef.G3.size() ? sample(coef.G3[idx]) : Eigen::MatrixXd::Zero(Ny, M - 1));
    D2.push_back(detail::axis_difference(grid, a, 2));
    D1.push_back(detail::axis_difference(grid, a, 1));
  }
  const Eigen::MatrixXd F_modes = F * project;  // Ny x N

  // H^2 weights and the exact inverse symbol in (k, n) space
  Eigen::MatrixXd symbol(Ny, N), weight(Ny, N);
  for (int p = 0; p < Ny; ++p) {
    for (int n = 1; n <= N; ++n) {
      symbol(p, n - 1) = pi * pi * n * n / (4.0 * eta * eta) + mu(p);
      const double w = 1.0 + n * n + mu(p);
      weight(p, n - 1) = w * w;
    }
  }

  FourierCollarSolution sol;
  sol.eta = eta;
  sol.grid = grid;
  sol.coefficients = Eigen::MatrixXd::Zero(Ny, N);
  double best = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Eigen::MatrixXd& W = sol.coefficients;
    const Eigen::MatrixXd Wp = W * S;
    Eigen::MatrixXd R = (G1.array() * (W * dS).array()).matrix() / eta;
    for (int a = 0; a < axes; ++a) {
      R += eta * (G2[static_cast<std::size_t>(a)].array() * (D2[static_cast<std::size_t>(a)] * Wp).array()).matrix();
      R += eta * (G3[static_cast<std::size_t>(a)].array() * (D1[static_cast<std::size_t>(a)] * Wp).array()).matrix();
    }
    const Eigen::MatrixXd rhs = F_modes / eta + R * project;
    const Eigen::MatrixXd next = -Q.transpose() * ((Q * rhs).array() / symbol.array()).matrix();

    const Eigen::MatrixXd delta = Q * (next - W);
    const double update = std::sqrt((weight.array() * delta.array().square()).sum());
    sol.coefficients = next;
    sol.iterations = it;
    if (!sol.updates.empty() && sol.updates.back() > 0.0) sol.contraction = update / sol.updates.back();
    sol.updates.push_back(update);
    best = std::min(best, update);
    if (!std::isfinite(update)) break;
    if (update < opts.tol) return sol;
    if (it > 5 && update > 1e8 * sol.updates.front()) break;
  }
  throw ConvergenceError("collar Fourier iteration did not converge (contraction ratio " +
                             std::to_string(sol.contraction) + ")",
                         best);
}

/// Coefficients of a warped product dr^2 + w(r)^2 g_Sigma over a (d-1)-box:
/// G1 = -(d-1)(pi/2) w'/w, G2 = (1 - w^{-2}) / eta on every axis, G3 = 0,
/// F = G1 (c+ - c-) / pi.
inline CollarCoefficients warped_collar_coefficients(std::function<double(double)> w, double eta,
                                                     const PlateauConstants& pc, int d,
                                                     std::function<double(double)> dw = {}) {
  if (!dw) {
    // fourth-order central difference
    dw = [w](double r) {
      const double s = 1e-3;
      return (w(r - 2 * s) - 8 * w(r - s) + 8 * w(r + s) - w(r + 2 * s)) / (12 * s);
    };
  }
  const double pi = std::numbers::pi;
  auto rho_of = [eta, pi](double sigma) { return 2.0 * eta * sigma / pi - eta; };
  CollarCoefficients coef;
  coef.G1 = [=](double sigma, const Vector&) {
    const double r = rho_of(sigma);
    return -(d - 1) * 0.5 * pi * dw(r) / w(r);
  };
  const CollarField g1 = coef.G1;
  const double jump = pc.jump();
  coef.F = [g1, jump, pi](double sigma, const Vector& y) { return g1(sigma, y) * jump / pi; };
  for (int a = 0; a + 1 < d; ++a) {
    coef.G2.push_back([=](double sigma, const Vector&) {
      const double v = w(rho_of(sigma));
      return (1.0 - 1.0 / (v * v)) / eta;
    });
  }
  return coef;
}

}  // namespace dumbbell

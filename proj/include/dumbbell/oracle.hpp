#pragma once

// Independent 1D reference for product scenes: fields that depend only on the
// first coordinate t in [0, 1] separate exactly, leaving the Sturm-Liouville
// problem -(p u')' = lambda q u with Neumann ends. Discretized with P1
// elements (coefficients frozen at element midpoints) and solved exactly by
// Sturm-sequence bisection on the tridiagonal pencil.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "dumbbell/error.hpp"
#include "dumbbell/metric.hpp"

namespace dumbbell {

struct Profile1D {
  std::function<double(double)> stiffness;  // p(t) = f^{d/2-1} A(t)
  std::function<double(double)> mass;       // q(t) = f^{d/2} A(t)
  int cells = 1024;
};

/// p = f^{d/2-1} A and q = f^{d/2} A for a conformal factor f(t) and a
/// cross-section volume factor A(t) (= w(t)^{d-1} on warped products).
inline Profile1D product_profile(std::function<double(double)> f, std::function<double(double)> area, int d, int cells) {
  Profile1D p;
  p.stiffness = [f, area, d](double t) { return std::pow(f(t), 0.5 * d - 1.0) * area(t); };
  p.mass = [f, area, d](double t) { return std::pow(f(t), 0.5 * d) * area(t); };
  p.cells = cells;
  return p;
}

/// Step profile on [0, 1] for Sigma = {t = s}: eps on |t - s| < eta, kappa
/// elsewhere, kappa from the exact 1D volumes.
inline Profile1D step_profile_1d(double epsilon, double eta, double s, int d, int cells) {
  const double collar = std::min(s + eta, 1.0) - std::max(s - eta, 0.0);
  const double kap = kappa(epsilon, collar, 1.0 - collar, d);
  auto f = [=](double t) { return std::abs(t - s) < eta ? epsilon : kap; };
  return product_profile(f, [](double) { return 1.0; }, d, cells);
}

struct OracleSpectrum {
  std::vector<double> eigenvalues;    // at N cells
  std::vector<double> refined;        // at 2N cells
  std::vector<double> extrapolated;   // Richardson (4 refined - coarse) / 3
};

namespace detail {

struct Tridiagonal {
  std::vector<double> k_diag, k_off, m_diag, m_off;
};

inline Tridiagonal assemble_1d(const Profile1D& profile, int cells) {
  if (cells < 2) throw SolverError("1D oracle needs at least two cells");
  const double h = 1.0 / cells;
  Tridiagonal T;
  T.k_diag.assign(static_cast<std::size_t>(cells) + 1, 0.0);
  T.m_diag.assign(static_cast<std::size_t>(cells) + 1, 0.0);
  T.k_off.assign(static_cast<std::size_t>(cells), 0.0);
  T.m_off.assign(static_cast<std::size_t>(cells), 0.0);
  for (int e = 0; e < cells; ++e) {
    const double mid = (e + 0.5) * h;
    const double p = profile.stiffness(mid);
    const double q = profile.mass(mid);
    if (!(p > 0.0) || !(q > 0.0)) throw SolverError("1D profile must be positive");
    const auto i = static_cast<std::size_t>(e);
    T.k_diag[i] += p / h;
    T.k_diag[i + 1] += p / h;
    T.k_off[i] = -p / h;
    T.m_diag[i] += q * h / 3.0;
    T.m_diag[i + 1] += q * h / 3.0;
    T.m_off[i] = q * h / 6.0;
  }
  return T;
}

// Number of eigenvalues strictly below x (negative pivots of K - x M).
inline int count_below(const Tridiagonal& T, double x) {
  int negatives = 0;
  double pivot = 1.0;
  const std::size_t n = T.k_diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    double a = T.k_diag[i] - x * T.m_diag[i];
    if (i > 0) {
      const double b = T.k_off[i - 1] - x * T.m_off[i - 1];
      a -= b * b / pivot;
    }
    if (a == 0.0) a = -std::numeric_limits<double>::min();
    if (a < 0.0) ++negatives;
    pivot = a;
  }
  return negatives;
}

inline double bisect_eigenvalue(const Tridiagonal& T, int k) {
  double lo = -1.0;
  double hi = 1.0;
  while (count_below(T, hi) <= k) hi *= 2.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(T, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline std::vector<double> smallest_eigenvalues(const Profile1D& profile, int cells, int m) {
  const Tridiagonal T = assemble_1d(profile, cells);
  std::vector<double> out;
  for (int k = 0; k < m; ++k) out.push_back(bisect_eigenvalue(T, k));
  return out;
}

}  // namespace detail

/// Smallest m eigenvalues (the first is 0) at N and 2N cells and their
/// Richardson extrapolation.
inline OracleSpectrum sturm_liouville_neumann(const Profile1D& profile, int m) {
  if (profile.cells < 64) throw SolverError("1D oracle requires at least 64 cells");
  if (m < 1) throw SolverError("mode count must be positive");
  OracleSpectrum out;
  out.eigenvalues = detail::smallest_eigenvalues(profile, profile.cells, m);
  out.refined = detail::smallest_eigenvalues(profile, 2 * profile.cells, m);
  for (int k = 0; k < m; ++k) {
    out.extrapolated.push_back((4.0 * out.refined[static_cast<std::size_t>(k)] - out.eigenvalues[static_cast<std::size_t>(k)]) / 3.0);
  }
  return out;
}

/// Mode k at the N+1 grid nodes, unit mass, positive at t = 1.
inline Eigen::VectorXd sturm_liouville_mode(const Profile1D& profile, int k) {
  const auto T = detail::assemble_1d(profile, profile.cells);
  const double lambda = detail::bisect_eigenvalue(T, k);
  const std::size_t n = T.k_diag.size();
  const double shift = lambda + 1e-9 * std::max(1.0, lambda);

  auto mass_apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      double s = T.m_diag[i] * x(static_cast<Eigen::Index>(i));
      if (i > 0) s += T.m_off[i - 1] * x(static_cast<Eigen::Index>(i - 1));
      if (i + 1 < n) s += T.m_off[i] * x(static_cast<Eigen::Index>(i + 1));
      y(static_cast<Eigen::Index>(i)) = s;
    }
    return y;
  };

  // Thomas algorithm on K - shift M
  std::vector<double> diag(n), off(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = T.k_diag[i] - shift * T.m_diag[i];
  for (std::size_t i = 0; i + 1 < n; ++i) off[i] = T.k_off[i] - shift * T.m_off[i];
  auto solve = [&](Eigen::VectorXd b) {
    std::vector<double> c(n), d(diag);
    for (std::size_t i = 1; i < n; ++i) {
      const double w = off[i - 1] / d[i - 1];
      d[i] -= w * off[i - 1];
      b(static_cast<Eigen::Index>(i)) -= w * b(static_cast<Eigen::Index>(i - 1));
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    x(static_cast<Eigen::Index>(n - 1)) = b(static_cast<Eigen::Index>(n - 1)) / d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
      x(static_cast<Eigen::Index>(i)) = (b(static_cast<Eigen::Index>(i)) - off[i] * x(static_cast<Eigen::Index>(i + 1))) / d[i];
    }
    return x;
  };

  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), -1.0, 1.0);
  x.array() += 0.3;
  for (int it = 0; it < 6; ++it) {
    x = solve(mass_apply(x));
    x /= std::sqrt(x.dot(mass_apply(x)));
  }
  if (x(static_cast<Eigen::Index>(n - 1)) < 0.0) x = -x;
  return x;
}

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

/// Least-squares fit of log(lambda) = slope * log(eps) + intercept.
inline ScalingFit scaling_fit(const std::vector<double>& epsilons, const std::vector<double>& lambdas) {
  if (epsilons.size() != lambdas.size()) throw SolverError("scaling_fit: size mismatch");
  if (epsilons.size() < 3) throw SolverError("scaling_fit needs at least three points");
  const auto n = static_cast<Eigen::Index>(epsilons.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = epsilons[static_cast<std::size_t>(i)];
    const double l = lambdas[static_cast<std::size_t>(i)];
    if (!(e > 0.0) || !(l > 0.0)) throw SolverError("scaling_fit requires positive data");
    A(i, 0) = std::log(e);
    A(i, 1) = 1.0;
    b(i) = std::log(l);
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(b);
  ScalingFit fit;
  fit.slope = coef(0);
  fit.intercept = coef(1);
  fit.max_residual = (A * coef - b).cwiseAbs().maxCoeff();
  return fit;
}

}  // namespace dumbbell

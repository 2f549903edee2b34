#pragma once

// Signed distance to the separating hypersurface, the collar partition, the
// volume-preserving constant kappa and the conformal factor (step profile or
// its quintic-smoothstep mollification).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dumbbell/detail/summation.hpp"
#include "dumbbell/error.hpp"
#include "dumbbell/marching.hpp"
#include "dumbbell/mesh.hpp"

namespace dumbbell {

enum class Region : std::uint8_t { collar, plus, minus };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::collar: return "collar";
    case Region::plus: return "plus";
    case Region::minus: return "minus";
  }
  return "?";
}

struct CollarGeometry {
  int dim = 0;
  Vector rho;                      // signed distance at vertices
  double eta = 0.0;                // collar half-width
  std::vector<Region> region;      // per cell, by barycenter rho
  std::vector<double> cell_rho;    // barycenter rho per cell
  std::vector<double> cell_volume; // g0 volume per cell
  double vol_collar = 0.0;
  double vol_plus = 0.0;
  double vol_minus = 0.0;

  double vol_complement() const { return vol_plus + vol_minus; }
  double vol_total() const { return vol_collar + vol_plus + vol_minus; }

  std::vector<bool> mask(Region r) const {
    std::vector<bool> m(region.size());
    for (std::size_t c = 0; c < region.size(); ++c) m[c] = region[c] == r;
    return m;
  }
};

namespace detail {

// Closest point on segment [a, b] to p.
inline Eigen::VectorXd closest_on_segment(const Eigen::VectorXd& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
inline Eigen::Vector3d closest_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                           const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Simplices (segments or triangles) of a triangulated zero set, with a
// uniform bucket grid for nearest-simplex queries.
class ZeroSetIndex {
public:
  ZeroSetIndex(int dim, std::vector<std::vector<Eigen::VectorXd>> simplices, const Eigen::VectorXd& lo,
               const Eigen::VectorXd& hi, double bucket)
      : dim_(dim), simplices_(std::move(simplices)), lo_(lo), bucket_(bucket) {
    for (int a = 0; a < dim_; ++a) {
      counts_[static_cast<std::size_t>(a)] = std::max(1, static_cast<int>(std::ceil((hi(a) - lo(a)) / bucket_)) + 1);
    }
    std::size_t total = 1;
    for (int a = 0; a < dim_; ++a) total *= static_cast<std::size_t>(counts_[static_cast<std::size_t>(a)]);
    buckets_.resize(total);
    for (std::size_t s = 0; s < simplices_.size(); ++s) {
      Eigen::VectorXd smin = simplices_[s][0], smax = simplices_[s][0];
      for (const auto& p : simplices_[s]) {
        smin = smin.cwiseMin(p);
        smax = smax.cwiseMax(p);
      }
      const auto a0 = cell_of(smin), a1 = cell_of(smax);
      std::array<int, 3> k{};
      for (k[2] = (dim_ > 2 ? a0[2] : 0); k[2] <= (dim_ > 2 ? a1[2] : 0); ++k[2]) {
        for (k[1] = a0[1]; k[1] <= a1[1]; ++k[1]) {
          for (k[0] = a0[0]; k[0] <= a1[0]; ++k[0]) buckets_[flat(k)].push_back(static_cast<int>(s));
        }
      }
    }
  }

  bool empty() const { return simplices_.empty(); }

  double distance(const Eigen::VectorXd& p) const {
    const auto home = cell_of(p);
    double best = std::numeric_limits<double>::infinity();
    int max_ring = 0;
    for (int a = 0; a < dim_; ++a) max_ring = std::max(max_ring, counts_[static_cast<std::size_t>(a)]);
    for (int ring = 0; ring <= max_ring; ++ring) {
      visit_ring(home, ring, [&](std::size_t b) {
        for (int s : buckets_[b]) best = std::min(best, point_distance(p, simplices_[static_cast<std::size_t>(s)]));
      });
      // every unvisited bucket is at least `ring * bucket_` away
      if (best <= ring * bucket_) break;
    }
    return best;
  }

private:
  std::array<int, 3> cell_of(const Eigen::VectorXd& p) const {
    std::array<int, 3> k{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      const int i = static_cast<int>(std::floor((p(a) - lo_(a)) / bucket_));
      k[static_cast<std::size_t>(a)] = std::clamp(i, 0, counts_[static_cast<std::size_t>(a)] - 1);
    }
    return k;
  }

  std::size_t flat(const std::array<int, 3>& k) const {
    std::size_t f = 0;
    for (int a = dim_ - 1; a >= 0; --a) {
      f = f * static_cast<std::size_t>(counts_[static_cast<std::size_t>(a)]) + static_cast<std::size_t>(k[static_cast<std::size_t>(a)]);
    }
    return f;
  }

  template <typename F>
  void visit_ring(const std::array<int, 3>& home, int ring, F&& f) const {
    std::array<int, 3> k{};
    const int zr = dim_ > 2 ? ring : 0;
    for (int dz = -zr; dz <= zr; ++dz) {
      for (int dy = -ring; dy <= ring; ++dy) {
        for (int dx = -ring; dx <= ring; ++dx) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
          k = {home[0] + dx, home[1] + dy, home[2] + dz};
          bool inside = true;
          for (int a = 0; a < dim_; ++a) {
            inside = inside && k[static_cast<std::size_t>(a)] >= 0 && k[static_cast<std::size_t>(a)] < counts_[static_cast<std::size_t>(a)];
          }
          if (inside) f(flat(k));
        }
      }
    }
  }

  double point_distance(const Eigen::VectorXd& p, const std::vector<Eigen::VectorXd>& s) const {
    if (dim_ == 2) return (p - closest_on_segment(p, s[0], s[1])).norm();
    const Eigen::Vector3d q = p;
    return (q - closest_on_triangle(q, s[0], s[1], s[2])).norm();
  }

  int dim_;
  std::vector<std::vector<Eigen::VectorXd>> simplices_;
  Eigen::VectorXd lo_;
  double bucket_;
  std::array<int, 3> counts_{1, 1, 1};
  std::vector<std::vector<int>> buckets_;
};

inline double mean_edge_length(const Mesh& mesh) {
  double sum = 0.0;
  long count = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Eigen::MatrixXd x = mesh.cell_coordinates(c);
    for (int i = 0; i <= mesh.dim; ++i) {
      for (int j = i + 1; j <= mesh.dim; ++j) {
        sum += (x.col(i) - x.col(j)).norm();
        ++count;
      }
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace detail

/// Characteristic mesh spacing: the grid step along the first axis for box
/// grids, the mean edge length otherwise.
inline double mesh_spacing(const Mesh& mesh) {
  if (mesh.grid) return mesh.grid->spacing(0);
  return detail::mean_edge_length(mesh);
}

/// Signed distance to Sigma at every vertex.
///
/// Planes {x_1 = s} give rho = x_1 - s exactly. Level sets are triangulated
/// by marching simplices over the mesh and rho is the exact Euclidean
/// distance to that triangulation, signed by phi. Throws GeometryError when
/// Sigma does not separate the vertex set.
inline Vector signed_distance(const Mesh& mesh, const SigmaDescriptor& sigma) {
  const int V = mesh.num_vertices();
  Vector rho(V);

  if (const auto* plane = std::get_if<SigmaPlane>(&sigma)) {
    for (int v = 0; v < V; ++v) rho(v) = mesh.vertices(0, v) - plane->offset;
  } else {
    const auto& level = std::get<SigmaLevelSet>(sigma);
    if (!level.phi) throw GeometryError("level function is empty");
    Vector phi(V);
    for (int v = 0; v < V; ++v) phi(v) = level.phi(mesh.vertices.col(v));

    std::vector<std::vector<Eigen::VectorXd>> simplices;
    Eigen::VectorXi ids(mesh.dim + 1);
    for (int c = 0; c < mesh.num_cells(); ++c) {
      for (int k = 0; k <= mesh.dim; ++k) ids(k) = mesh.cells(k, c);
      auto poly = crossing_polygon(mesh.cell_coordinates(c), gather(mesh, phi, c), ids);
      if (poly.empty()) continue;
      if (poly.size() == 4) {
        simplices.push_back({poly[0], poly[1], poly[2]});
        simplices.push_back({poly[0], poly[2], poly[3]});
      } else {
        simplices.push_back(std::move(poly));
      }
    }
    if (simplices.empty()) throw GeometryError("Sigma does not separate: level function has no zero crossing");

    const Eigen::VectorXd lo = mesh.vertices.rowwise().minCoeff();
    const Eigen::VectorXd hi = mesh.vertices.rowwise().maxCoeff();
    const detail::ZeroSetIndex index(mesh.dim, std::move(simplices), lo, hi, 2.0 * mesh_spacing(mesh));
    for (int v = 0; v < V; ++v) {
      const double dist = index.distance(mesh.vertices.col(v));
      rho(v) = positive_after_tie(phi(v)) ? dist : -dist;
    }
  }

  if (rho.maxCoeff() <= 0.0 || rho.minCoeff() >= 0.0) throw GeometryError("Sigma does not separate the domain");
  return rho;
}

/// Snaps eta to the nearest positive multiple of the grid spacing along the
/// first axis so that the collar boundary lies on mesh facets.
inline double snap_eta_to_grid(const Mesh& mesh, double eta) {
  if (!mesh.grid) return eta;
  const double h = mesh.grid->spacing(0);
  return h * std::max(1.0, std::round(eta / h));
}

/// Labels cells by barycenter rho: collar iff |rho| < eta, plus iff
/// rho >= eta, minus iff rho <= -eta. Throws if either side is empty or
/// disconnected.
inline CollarGeometry label_regions(const Mesh& mesh, const Vector& rho, double eta) {
  if (!(eta > 0.0)) throw GeometryError("collar half-width must be positive");
  CollarGeometry geom;
  geom.dim = mesh.dim;
  geom.rho = rho;
  geom.eta = eta;
  const int C = mesh.num_cells();
  geom.region.resize(static_cast<std::size_t>(C));
  geom.cell_rho.resize(static_cast<std::size_t>(C));
  geom.cell_volume = cell_volumes(mesh);

  for (int c = 0; c < C; ++c) {
    double r = 0.0;
    for (int k = 0; k <= mesh.dim; ++k) r += rho(mesh.cells(k, c));
    r /= (mesh.dim + 1);
    geom.cell_rho[static_cast<std::size_t>(c)] = r;
    geom.region[static_cast<std::size_t>(c)] = std::abs(r) < eta ? Region::collar : (r > 0 ? Region::plus : Region::minus);
  }

  std::array<std::vector<double>, 3> parts;
  for (int c = 0; c < C; ++c) {
    parts[static_cast<std::size_t>(geom.region[static_cast<std::size_t>(c)])].push_back(geom.cell_volume[static_cast<std::size_t>(c)]);
  }
  geom.vol_collar = detail::pairwise_sum(parts[0]);
  geom.vol_plus = detail::pairwise_sum(parts[1]);
  geom.vol_minus = detail::pairwise_sum(parts[2]);

  if (parts[1].empty() || parts[2].empty()) throw GeometryError("Sigma does not separate: an outer region is empty");
  if (parts[0].empty()) throw GeometryError("collar region is empty");
  if (!cells_connected(mesh, geom.mask(Region::plus))) throw GeometryError("plus region is not connected");
  if (!cells_connected(mesh, geom.mask(Region::minus))) throw GeometryError("minus region is not connected");
  return geom;
}

inline CollarGeometry collar_geometry(const Mesh& mesh, const SigmaDescriptor& sigma, double eta) {
  return label_regions(mesh, signed_distance(mesh, sigma), eta);
}

/// True iff every cell lies entirely (all vertices) inside its labeled
/// region, i.e. the collar boundary runs along mesh facets.
inline bool is_grid_aligned(const Mesh& mesh, const CollarGeometry& geom, double tol = 1e-12) {
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int k = 0; k <= mesh.dim; ++k) {
      const double r = geom.rho(mesh.cells(k, c));
      switch (geom.region[static_cast<std::size_t>(c)]) {
        case Region::collar:
          if (std::abs(r) > geom.eta + tol) return false;
          break;
        case Region::plus:
          if (r < geom.eta - tol) return false;
          break;
        case Region::minus:
          if (r > -geom.eta + tol) return false;
          break;
      }
    }
  }
  return true;
}

/// Volume-preserving outer value of the step conformal factor:
/// kappa = (1 + (1 - eps^{d/2}) |collar| / |complement|)^{2/d}.
inline double kappa(double epsilon, double vol_collar, double vol_complement, int d) {
  if (!(vol_collar > 0.0) || !(vol_complement > 0.0)) throw GeometryError("kappa requires positive volumes");
  if (!(epsilon > 0.0) || epsilon > 1.0) throw GeometryError("epsilon must lie in (0, 1]");
  const double half_d = 0.5 * d;
  return std::pow(1.0 + (1.0 - std::pow(epsilon, half_d)) * vol_collar / vol_complement, 2.0 / d);
}

/// kappa in the limit eps -> 0.
inline double kappa_limit(double vol_collar, double vol_complement, int d) {
  if (!(vol_collar > 0.0) || !(vol_complement > 0.0)) throw GeometryError("kappa requires positive volumes");
  return std::pow(1.0 + vol_collar / vol_complement, 2.0 / d);
}

/// C^2 quintic smoothstep on [0, 1], clamped outside.
inline double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

struct StepProfile {};

/// Transition of width `width` (= 1/n) inside the collar: f = eps for
/// |rho| <= eta - width, f = kappa for |rho| >= eta.
struct MollifiedProfile {
  double width = 0.0;
};

using Profile = std::variant<StepProfile, MollifiedProfile>;

struct ConformalField {
  int dim = 0;
  double epsilon = 1.0;
  double kappa = 1.0;
  Profile profile = StepProfile{};
  std::vector<double> f;  // per cell
  std::vector<std::string> warnings;

  bool is_step() const { return std::holds_alternative<StepProfile>(profile); }

  ConformalField scaled(double c) const {
    ConformalField out = *this;
    for (double& v : out.f) v *= c;
    return out;
  }
};

/// Conformal factor value at signed distance rho.
inline double conformal_value(const Profile& profile, double rho, double eta, double epsilon, double kap) {
  const double a = std::abs(rho);
  if (std::holds_alternative<StepProfile>(profile)) return a < eta ? epsilon : kap;
  const double w = std::get<MollifiedProfile>(profile).width;
  if (a >= eta) return kap;
  return epsilon + (kap - epsilon) * smoothstep5((a - (eta - w)) / w);
}

inline ConformalField build_conformal_field(const Mesh& mesh, const CollarGeometry& geom, double epsilon,
                                            const Profile& profile = StepProfile{}) {
  if (!(epsilon > 0.0)) throw GeometryError("epsilon must be positive");
  if (epsilon > 1.0) throw GeometryError("epsilon must not exceed 1");
  ConformalField field;
  field.dim = geom.dim;
  field.epsilon = epsilon;
  field.kappa = kappa(epsilon, geom.vol_collar, geom.vol_complement(), geom.dim);
  field.profile = profile;

  if (const auto* m = std::get_if<MollifiedProfile>(&profile)) {
    if (!(m->width > 0.0)) throw GeometryError("mollification width must be positive");
    if (m->width < mesh_spacing(mesh) * (1.0 - 1e-12)) {
      field.warnings.push_back("mollification width below one mesh spacing");
    }
  }

  field.f.resize(geom.region.size());
  for (std::size_t c = 0; c < geom.region.size(); ++c) {
    if (field.is_step()) {
      field.f[c] = geom.region[c] == Region::collar ? epsilon : field.kappa;
    } else {
      field.f[c] = conformal_value(profile, geom.cell_rho[c], geom.eta, epsilon, field.kappa);
    }
  }
  return field;
}

/// Metric volume sum over cells of f^{d/2} vol, accumulated per region in
/// the same order as CollarGeometry::vol_total.
inline double conformal_volume(const ConformalField& field, const CollarGeometry& geom) {
  std::array<std::vector<double>, 3> parts;
  for (std::size_t c = 0; c < field.f.size(); ++c) {
    parts[static_cast<std::size_t>(geom.region[c])].push_back(std::pow(field.f[c], 0.5 * field.dim) * geom.cell_volume[c]);
  }
  return detail::pairwise_sum(parts[0]) + detail::pairwise_sum(parts[1]) + detail::pairwise_sum(parts[2]);
}

/// |Vol_{g_eps} - Vol_{g_0}| / Vol_{g_0}.
inline double verify_volume_preservation(const ConformalField& field, const CollarGeometry& geom) {
  const double v0 = geom.vol_total();
  return std::abs(conformal_volume(field, geom) - v0) / v0;
}

/// Constant gamma with gamma^{d/2} Vol_{g} = Vol_{g_0}.
inline double volume_rescaling(const ConformalField& field, const CollarGeometry& geom) {
  return std::pow(geom.vol_total() / conformal_volume(field, geom), 2.0 / field.dim);
}

}  // namespace dumbbell

#include "cmclab/ambient_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Dense>

namespace cmc {

AmbientSpace AmbientSpace::for_dimension(int ambient_dim) {
  if (ambient_dim == 3) return euclidean();
  if (ambient_dim == 4) return sphere();
  throw std::invalid_argument("ambient dimension must be 3 or 4");
}

Vec4 tangential_part(const GeometryData& geom, const AmbientSpace& space, int p, const Vec4& v) {
  Vec4 out = v - v.dot(geom.normal[p]) * geom.normal[p];
  if (space.c() == 1) {
    const Vec4& psi = geom.position[p];
    out -= out.dot(psi) * psi;
  }
  return out;
}

Vec4 rotate90_at(const GeometryData& geom, const AmbientSpace&, int p, const Vec4& v) {
  return v.dot(geom.e1[p]) * geom.e2[p] - v.dot(geom.e2[p]) * geom.e1[p];
}

Vec4 oriented_normal(const AmbientSpace& space, const Vec4& psi, const Vec4& u, const Vec4& v) {
  if (space.c() == 0) return cross3(u, v).normalized();
  const Vec4 s = psi.normalized();
  return cross4(s, u - u.dot(s) * s, v - v.dot(s) * s).normalized();
}

namespace {

void check_index(const AmbientSpace& space, int i) {
  if (i < 1 || i > space.ambient_dim())
    throw std::out_of_range("ambient basis index " + std::to_string(i) + " outside 1.." +
                            std::to_string(space.ambient_dim()));
}

void check_unit_normals(const GeometryData& geom) {
  for (int p = 0; p < geom.size(); ++p) {
    if (std::abs(geom.normal[p].norm() - 1.0) > 1e-8)
      throw GeometryError("normal at vertex " + std::to_string(p) + " is not unit length");
  }
}

// Completes e1 to a positively oriented frame: e2 is the rotation of e1 by
// 90 degrees about N.
Vec4 complete_frame(const AmbientSpace& space, const Vec4& psi, const Vec4& normal, const Vec4& e1) {
  if (space.c() == 0) return cross3(normal, e1);
  return cross4(psi, normal, e1);
}

} // namespace

std::vector<Vec4> project_ambient_basis(const GeometryData& geom, const AmbientSpace& space, int i) {
  check_index(space, i);
  check_unit_normals(geom);
  std::vector<Vec4> out(geom.size());
  const Vec4 basis = Vec4::Unit(i - 1);
  for (int p = 0; p < geom.size(); ++p) {
    const Vec4& n = geom.normal[p];
    Vec4 e = basis - basis.dot(n) * n;
    if (space.c() == 1) {
      const Vec4& nu = geom.sphere_normal[p];
      e -= basis.dot(nu) * nu;
    }
    out[p] = e;
  }
  return out;
}

SupportFunctions support_functions(const GeometryData& geom, const AmbientSpace& space, int i) {
  check_index(space, i);
  SupportFunctions out;
  out.f.assign(geom.size(), 0.0);
  out.g.resize(geom.size());
  for (int p = 0; p < geom.size(); ++p) {
    out.g[p] = geom.normal[p][i - 1];
    if (space.c() == 1) out.f[p] = geom.sphere_normal[p][i - 1];
  }
  return out;
}

std::vector<double> gauss_equation_residual(const GeometryData& geom, const AmbientSpace& space) {
  if (geom.gauss_curvature.size() != geom.position.size() ||
      geom.mean_curvature.size() != geom.position.size() ||
      geom.norm_A2.size() != geom.position.size())
    throw GeometryError("gauss_equation_residual: curvature fields are not populated");
  std::vector<double> out(geom.size());
  for (int p = 0; p < geom.size(); ++p) {
    const double H = geom.mean_curvature[p];
    out[p] = geom.gauss_curvature[p] - space.c() - 2.0 * H * H + 0.5 * geom.norm_A2[p];
  }
  return out;
}

std::vector<double> shape_identity_residual(const GeometryData& geom) {
  std::vector<double> out(geom.size());
  for (int p = 0; p < geom.size(); ++p) {
    const Eigen::Matrix2d& A = geom.shape[p];
    const double H = geom.mean_curvature[p];
    const double a2 = geom.norm_A2[p];
    const Eigen::Matrix2d r = A * A - 0.5 * (a2 - 4.0 * H * H) * Eigen::Matrix2d::Identity() - 2.0 * H * A;
    out[p] = r.norm();
  }
  return out;
}

FrameCheck check_frames(const GeometryData& geom, const AmbientSpace& space) {
  FrameCheck out;
  for (int p = 0; p < geom.size(); ++p) {
    const Vec4& n = geom.normal[p];
    const Vec4& a = geom.e1[p];
    const Vec4& b = geom.e2[p];
    out.max_normal_dot_frame = std::max({out.max_normal_dot_frame, std::abs(n.dot(a)), std::abs(n.dot(b))});
    out.max_normal_unit_error = std::max(out.max_normal_unit_error, std::abs(n.norm() - 1.0));
    out.max_frame_orthonormal_error =
        std::max({out.max_frame_orthonormal_error, std::abs(a.norm() - 1.0), std::abs(b.norm() - 1.0),
                  std::abs(a.dot(b))});
    Vec4 oriented;
    if (space.c() == 1) {
      const Vec4& psi = geom.position[p];
      out.max_sphere_error = std::max({out.max_sphere_error, std::abs(n.dot(psi)), std::abs(psi.norm() - 1.0),
                                       std::abs(a.dot(psi)), std::abs(b.dot(psi))});
      oriented = cross4(psi, a, b);
    } else {
      oriented = cross3(a, b);
    }
    out.max_orientation_error = std::max(out.max_orientation_error, (oriented - n).norm());
    const Eigen::Matrix2d& A = geom.shape[p];
    out.max_shape_asymmetry = std::max(out.max_shape_asymmetry, std::abs(A(0, 1) - A(1, 0)));
    out.max_trace_error = std::max({out.max_trace_error, std::abs(geom.mean_curvature[p] - 0.5 * A.trace()),
                                    std::abs(geom.norm_A2[p] - (A * A).trace())});
  }
  return out;
}

CmcCheck check_cmc(const GeometryData& geom) {
  CmcCheck out;
  if (geom.mean_curvature.empty()) return out;
  std::vector<double> h = geom.mean_curvature;
  const auto mid = h.begin() + static_cast<long>(h.size() / 2);
  std::nth_element(h.begin(), mid, h.end());
  out.median_H = *mid;
  for (double v : geom.mean_curvature) out.max_deviation = std::max(out.max_deviation, std::abs(v - out.median_H));
  const double tol = geom.source == GeometrySource::Analytic ? 1e-6 : 5e-2;
  out.tolerance = tol * (1.0 + std::abs(out.median_H));
  out.is_cmc = out.max_deviation <= out.tolerance;
  return out;
}

GeometryData rotate_frames(const GeometryData& geom, const AmbientSpace&, const std::vector<double>& angle) {
  GeometryData out = geom;
  for (int p = 0; p < geom.size(); ++p) {
    const double c = std::cos(angle[p]);
    const double s = std::sin(angle[p]);
    out.e1[p] = c * geom.e1[p] + s * geom.e2[p];
    out.e2[p] = -s * geom.e1[p] + c * geom.e2[p];
    Eigen::Matrix2d R;
    R << c, -s, s, c;
    out.shape[p] = R.transpose() * geom.shape[p] * R;
  }
  return out;
}

GeometryData fit_geometry(const SurfaceMesh& mesh, const AmbientSpace& space) {
  if (mesh.ambient_dim() != space.ambient_dim())
    throw GeometryError("mesh dimension does not match the ambient space");
  const int nv = mesh.num_vertices();
  GeometryData g;
  g.source = GeometrySource::Fitted;
  g.normal_convention = "N from face orientation (area-weighted), A by quartic jet fit over up to 3 rings";
  g.position = mesh.vertices();
  g.normal.resize(nv);
  g.sphere_normal.assign(nv, Vec4::Zero());
  g.e1.resize(nv);
  g.e2.resize(nv);
  g.shape.resize(nv);
  g.mean_curvature.resize(nv);
  g.gauss_curvature.resize(nv);
  g.norm_A2.resize(nv);

  if (space.c() == 1) {
    for (int p = 0; p < nv; ++p) {
      if (std::abs(g.position[p].norm() - 1.0) > 1e-6)
        throw GeometryError("vertex " + std::to_string(p) + " does not lie on the unit sphere S^3");
      g.sphere_normal[p] = -g.position[p];
    }
  }

  for (int p = 0; p < nv; ++p) {
    Vec4 n = Vec4::Zero();
    double angle_sum = 0.0;
    for (int f : mesh.vertex_faces(p)) {
      n += mesh.face_areas()[f] * mesh.face_normal(f);
      const auto& t = mesh.face(f);
      int k = 0;
      while (t[k] != p) ++k;
      const Vec4 u = mesh.vertex(t[(k + 1) % 3]) - mesh.vertex(p);
      const Vec4 v = mesh.vertex(t[(k + 2) % 3]) - mesh.vertex(p);
      angle_sum += std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0));
    }
    const Vec4& psi = g.position[p];
    if (space.c() == 1) n -= n.dot(psi) * psi;
    n.normalize();
    g.normal[p] = n;
    g.gauss_curvature[p] = (2.0 * std::numbers::pi - angle_sum) / mesh.vertex_areas()[p];

    const auto& first = mesh.face(mesh.vertex_faces(p)[0]);
    int k = 0;
    while (first[k] != p) ++k;
    Vec4 e1 = mesh.vertex(first[(k + 1) % 3]) - psi;
    e1 -= e1.dot(n) * n;
    if (space.c() == 1) e1 -= e1.dot(psi) * psi;
    e1.normalize();
    g.e1[p] = e1;
    g.e2[p] = complete_frame(space, psi, n, e1);
  }

  // Quartic jet fit of the normal height. The quadratic-only fit picks up an
  // O(h^2) bias from the quartic terms, which is enough to shift near-zero
  // Jacobi eigenvalues across the sign threshold.
  constexpr int kTerms = 14;
  for (int p = 0; p < nv; ++p) {
    std::set<int> hood{p};
    for (int ring = 0; ring < 3 && static_cast<int>(hood.size()) < 2 * kTerms + 1; ++ring) {
      std::set<int> next = hood;
      for (int q : hood)
        for (int f : mesh.vertex_faces(q))
          for (int r : mesh.face(f)) next.insert(r);
      hood.swap(next);
    }
    hood.erase(p);
    const long rows = static_cast<long>(hood.size());
    const int terms = rows >= 2 * kTerms ? kTerms : 5;
    if (rows < terms) throw GeometryError("vertex " + std::to_string(p) + " has too few neighbors for a quadric fit");

    double scale = 0.0;
    for (int q : hood) scale = std::max(scale, (mesh.vertex(q) - g.position[p]).norm());
    Eigen::MatrixXd design(rows, terms);
    Eigen::VectorXd height(rows);
    long row = 0;
    for (int q : hood) {
      const Vec4 d = mesh.vertex(q) - g.position[p];
      const double x = d.dot(g.e1[p]) / scale;
      const double y = d.dot(g.e2[p]) / scale;
      design(row, 0) = 0.5 * x * x;
      design(row, 1) = x * y;
      design(row, 2) = 0.5 * y * y;
      design(row, 3) = x;
      design(row, 4) = y;
      if (terms == kTerms) {
        const double x2 = x * x, y2 = y * y;
        design.row(row).segment(5, 9) << x2 * x, x2 * y, x * y2, y2 * y, x2 * x2, x2 * x * y, x2 * y2, x * y2 * y,
            y2 * y2;
      }
      height[row] = d.dot(g.normal[p]) / scale;
      ++row;
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(height);
    Eigen::Matrix2d A;
    A << coef[0], coef[1], coef[1], coef[2];
    A /= scale;
    g.shape[p] = A;
    g.mean_curvature[p] = 0.5 * A.trace();
    g.norm_A2[p] = (A * A).trace();
  }
  return g;
}

} // namespace cmc

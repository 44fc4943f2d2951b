#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "cmclab/mesh.hpp"

namespace cmc {

enum class SpaceKind { Euclidean3, Sphere3 };

// Space form of curvature c: R^3 (c = 0) or the unit sphere S^3 in R^4 (c = 1).
class AmbientSpace {
public:
  static AmbientSpace euclidean() { return AmbientSpace(SpaceKind::Euclidean3); }
  static AmbientSpace sphere() { return AmbientSpace(SpaceKind::Sphere3); }
  static AmbientSpace for_dimension(int ambient_dim);

  SpaceKind kind() const { return kind_; }
  int c() const { return kind_ == SpaceKind::Sphere3 ? 1 : 0; }
  int ambient_dim() const { return 3 + c(); }
  std::string name() const { return kind_ == SpaceKind::Sphere3 ? "S3" : "R3"; }

private:
  explicit AmbientSpace(SpaceKind kind) : kind_(kind) {}
  SpaceKind kind_;
};

enum class GeometrySource { Analytic, Fitted };

// Pointwise extrinsic data at the mesh vertices. The shape operator is stored
// in the orthonormal frame {e1, e2} with the convention <A X, Y> = <D_X Y, N>.
struct GeometryData {
  std::vector<Vec4> position;
  std::vector<Vec4> normal;
  std::vector<Vec4> sphere_normal; // nu = -psi in S^3; zero in R^3
  std::vector<Vec4> e1;
  std::vector<Vec4> e2;
  std::vector<Eigen::Matrix2d> shape;
  std::vector<double> mean_curvature;
  std::vector<double> gauss_curvature;
  std::vector<double> norm_A2;
  GeometrySource source = GeometrySource::Analytic;
  std::string normal_convention;

  int size() const { return static_cast<int>(position.size()); }
};

class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Projects v onto the tangent plane at vertex p (orthogonal to N and, in S^3,
// to the position).
Vec4 tangential_part(const GeometryData& geom, const AmbientSpace& space, int p, const Vec4& v);

// 90 degree rotation in the oriented tangent plane spanned by {e1, e2}:
// e1 -> e2, e2 -> -e1.
Vec4 rotate90_at(const GeometryData& geom, const AmbientSpace& space, int p, const Vec4& v);

// Oriented normal of the plane spanned by (u, v) at the point psi.
Vec4 oriented_normal(const AmbientSpace& space, const Vec4& psi, const Vec4& u, const Vec4& v);

// E_i = Ē_i - <Ē_i, N> N - c <Ē_i, nu> nu, with i in 1..3+c.
std::vector<Vec4> project_ambient_basis(const GeometryData& geom, const AmbientSpace& space, int i);

struct SupportFunctions {
  std::vector<double> f; // <Ē_i, nu>, identically zero in R^3
  std::vector<double> g; // <Ē_i, N>
};

SupportFunctions support_functions(const GeometryData& geom, const AmbientSpace& space, int i);

// K - c - 2H^2 + |A|^2 / 2 at each vertex.
std::vector<double> gauss_equation_residual(const GeometryData& geom, const AmbientSpace& space);

// Frobenius norm of A^2 - (|A|^2 - 4H^2)/2 I - 2H A at each vertex.
std::vector<double> shape_identity_residual(const GeometryData& geom);

struct FrameCheck {
  double max_normal_dot_frame = 0.0;
  double max_normal_unit_error = 0.0;
  double max_frame_orthonormal_error = 0.0;
  double max_sphere_error = 0.0; // |<N, psi>| and ||psi| - 1| in S^3
  double max_orientation_error = 0.0;
  double max_shape_asymmetry = 0.0;
  double max_trace_error = 0.0; // |H - tr(A)/2| and ||A|^2 - tr(A^2)|
};

FrameCheck check_frames(const GeometryData& geom, const AmbientSpace& space);

struct CmcCheck {
  double median_H = 0.0;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool is_cmc = false;
};

// Accepts max |H - median(H)| <= tol (1 + |median(H)|) with tol = 1e-6 for
// analytic data and 5e-2 for fitted data.
CmcCheck check_cmc(const GeometryData& geom);

// Recomputes frame-dependent data after rotating every frame by angle(p).
GeometryData rotate_frames(const GeometryData& geom, const AmbientSpace& space,
                           const std::vector<double>& angle);

// Curvature estimates for ingested meshes: area-weighted vertex normals from
// the face orientation, a quadric fit of the normal height over the 2-ring
// for A, and the angle defect over the lumped area for K.
GeometryData fit_geometry(const SurfaceMesh& mesh, const AmbientSpace& space);

} // namespace cmc

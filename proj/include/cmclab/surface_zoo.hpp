#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmclab/ambient_geometry.hpp"
#include "cmclab/mesh.hpp"

namespace cmc {

enum class ZooKind { RoundSphereR3, GeodesicSphereS3, ProductTorusS3 };

struct ZooSpec {
  ZooKind kind = ZooKind::RoundSphereR3;
  // Radius r for RoundSphereR3, geodesic radius rho for GeodesicSphereS3,
  // first circle radius a for ProductTorusS3 (b = sqrt(1 - a^2)).
  double parameter = 1.0;
  // Subdivision level for spheres; grid size in u and v for tori.
  int resolution = 4;
  int resolution_v = 0; // 0 means same as resolution

  static ZooSpec round_sphere(double radius, int level) { return {ZooKind::RoundSphereR3, radius, level, 0}; }
  static ZooSpec geodesic_sphere(double rho, int level) { return {ZooKind::GeodesicSphereS3, rho, level, 0}; }
  static ZooSpec product_torus(double a, int nu, int nv = 0) { return {ZooKind::ProductTorusS3, a, nu, nv}; }

  int grid_v() const { return resolution_v > 0 ? resolution_v : resolution; }
  AmbientSpace space() const;
  int expected_genus() const { return kind == ZooKind::ProductTorusS3 ? 1 : 0; }
};

class InvalidSpec : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// CLI names: sphere-r3, geodesic-sphere-s3, product-torus-s3.
std::string zoo_kind_name(ZooKind kind);
std::optional<ZooKind> zoo_kind_from_name(const std::string& name);

void validate(const ZooSpec& spec);

// A discretized surface with its pointwise geometry.
struct Surface {
  AmbientSpace space;
  SurfaceMesh mesh;
  GeometryData geometry;
  std::string kind;                 // zoo kind name or "mesh"
  std::vector<std::pair<std::string, double>> parameters;
  std::string resolution;
};

// Triangulates the zoo surface and fills its geometry from the closed-form
// parametrization. Face winding follows the chosen normal N.
Surface generate(const ZooSpec& spec);

// Wraps an ingested mesh with fitted curvature.
Surface from_mesh(SurfaceMesh mesh);

struct AnalyticSpectra {
  std::vector<double> jacobi;
  std::vector<double> hodge1;
};

// The first `count` exact eigenvalues of the Jacobi operator and of the Hodge
// Laplacian on 1-forms, sorted and listed with multiplicity.
AnalyticSpectra analytic_spectra(const ZooSpec& spec, int count);

// Exact mean curvature and |A|^2 of the smooth zoo surface.
double analytic_mean_curvature(const ZooSpec& spec);
double analytic_norm_A2(const ZooSpec& spec);

// Icosahedron subdivided `level` times, projected to the unit sphere in R^3,
// with outward (counterclockwise) winding.
void icosphere(int level, std::vector<Vec4>& vertices, std::vector<std::array<int, 3>>& faces);

} // namespace cmc

#include "cmclab/surface_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace cmc {

namespace {
constexpr double kPi = std::numbers::pi;


// Reverses all faces when their orientation normal disagrees with N.
void orient_to_normals(const AmbientSpace& space, const std::vector<Vec4>& vertices,
                       std::vector<std::array<int, 3>>& faces, const std::vector<Vec4>& normals) {
  int agree = 0;
  for (const auto& t : faces) {
    const Vec4 u = vertices[t[1]] - vertices[t[0]];
    const Vec4 v = vertices[t[2]] - vertices[t[0]];
    const Vec4 psi = (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
    const Vec4 n = oriented_normal(space, psi, u, v);
    const Vec4 navg = normals[t[0]] + normals[t[1]] + normals[t[2]];
    agree += n.dot(navg) > 0 ? 1 : -1;
  }
  if (agree < 0)
    for (auto& t : faces) std::swap(t[1], t[2]);
}

Vec4 first_tangent(const Vec4& omega) {
  const Vec4 ref = std::abs(omega[0]) < 0.9 ? Vec4::Unit(0) : Vec4::Unit(1);
  return (ref - ref.dot(omega) * omega).normalized();
}

GeometryData allocate(int n) {
  GeometryData g;
  g.position.resize(n);
  g.normal.resize(n);
  g.sphere_normal.assign(n, Vec4::Zero());
  g.e1.resize(n);
  g.e2.resize(n);
  g.shape.resize(n);
  g.mean_curvature.resize(n);
  g.gauss_curvature.resize(n);
  g.norm_A2.resize(n);
  return g;
}

void finish_frame(GeometryData& g, const AmbientSpace& space, int p) {
  g.e2[p] = space.c() == 0 ? cross3(g.normal[p], g.e1[p]) : cross4(g.position[p], g.normal[p], g.e1[p]);
}

// Append values with multiplicities until `count` entries exist.
struct SpectrumBuilder {
  std::vector<double> values;
  int count;
  bool full() const { return static_cast<int>(values.size()) >= count; }
  void add(double value, int multiplicity) {
    for (int i = 0; i < multiplicity && !full(); ++i) values.push_back(value);
  }
};

// Sorted eigenvalues (m/a)^2 + (n/b)^2 of the flat product torus, with
// multiplicity, enough to cover the first `count` entries.
std::vector<std::pair<double, int>> torus_function_spectrum(double a, double b, int count) {
  const double rmax = std::max(a, b);
  for (int window = 4;; window *= 2) {
    std::map<double, int> grouped;
    std::vector<double> all;
    for (int m = -window; m <= window; ++m)
      for (int n = -window; n <= window; ++n) all.push_back((m / a) * (m / a) + (n / b) * (n / b));
    std::sort(all.begin(), all.end());
    const double safe = ((window + 1) / rmax) * ((window + 1) / rmax);
    if (static_cast<int>(all.size()) > count && all[count] < safe) {
      std::vector<std::pair<double, int>> out;
      for (double v : all) {
        if (v >= safe) break;
        if (!out.empty() && std::abs(out.back().first - v) <= 1e-12 * (1.0 + v))
          ++out.back().second;
        else
          out.emplace_back(v, 1);
      }
      return out;
    }
  }
}

} // namespace

AmbientSpace ZooSpec::space() const {
  return kind == ZooKind::RoundSphereR3 ? AmbientSpace::euclidean() : AmbientSpace::sphere();
}

std::string zoo_kind_name(ZooKind kind) {
  switch (kind) {
  case ZooKind::RoundSphereR3: return "sphere-r3";
  case ZooKind::GeodesicSphereS3: return "geodesic-sphere-s3";
  case ZooKind::ProductTorusS3: return "product-torus-s3";
  }
  return "unknown";
}

std::optional<ZooKind> zoo_kind_from_name(const std::string& name) {
  if (name == "sphere-r3") return ZooKind::RoundSphereR3;
  if (name == "geodesic-sphere-s3") return ZooKind::GeodesicSphereS3;
  if (name == "product-torus-s3") return ZooKind::ProductTorusS3;
  return std::nullopt;
}

void validate(const ZooSpec& spec) {
  switch (spec.kind) {
  case ZooKind::RoundSphereR3:
    if (!(spec.parameter > 0.0)) throw InvalidSpec("sphere radius must be positive");
    break;
  case ZooKind::GeodesicSphereS3:
    if (!(spec.parameter > 0.0 && spec.parameter < kPi / 2))
      throw InvalidSpec("geodesic radius rho must lie in (0, pi/2)");
    break;
  case ZooKind::ProductTorusS3:
    if (!(spec.parameter > 0.0 && spec.parameter < 1.0)) throw InvalidSpec("torus radius a must lie in (0, 1)");
    if (spec.grid_v() < 3) throw InvalidSpec("resolution must be at least 3");
    break;
  }
  if (spec.resolution < 3) throw InvalidSpec("resolution must be at least 3");
  if (spec.kind != ZooKind::ProductTorusS3 && spec.resolution > 8)
    throw InvalidSpec("sphere subdivision level above 8 is not supported");
}

void icosphere(int level, std::vector<Vec4>& vertices, std::vector<std::array<int, 3>>& faces) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  const double raw[12][3] = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  vertices.clear();
  for (const auto& r : raw) vertices.push_back(Vec4(r[0], r[1], r[2], 0.0).normalized());
  faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
           {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
           {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      vertices.push_back((vertices[a] + vertices[b]).normalized());
      const int idx = static_cast<int>(vertices.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
}

double analytic_mean_curvature(const ZooSpec& spec) {
  switch (spec.kind) {
  case ZooKind::RoundSphereR3: return 1.0 / spec.parameter;
  case ZooKind::GeodesicSphereS3: return 1.0 / std::tan(spec.parameter);
  case ZooKind::ProductTorusS3: {
    const double a = spec.parameter;
    const double b = std::sqrt(1.0 - a * a);
    return (b * b - a * a) / (2.0 * a * b);
  }
  }
  return 0.0;
}

double analytic_norm_A2(const ZooSpec& spec) {
  switch (spec.kind) {
  case ZooKind::RoundSphereR3: return 2.0 / (spec.parameter * spec.parameter);
  case ZooKind::GeodesicSphereS3: {
    const double cot = 1.0 / std::tan(spec.parameter);
    return 2.0 * cot * cot;
  }
  case ZooKind::ProductTorusS3: {
    const double a = spec.parameter;
    const double b = std::sqrt(1.0 - a * a);
    return (b * b) / (a * a) + (a * a) / (b * b);
  }
  }
  return 0.0;
}

Surface generate(const ZooSpec& spec) {
  validate(spec);
  const AmbientSpace space = spec.space();
  std::vector<Vec4> vertices;
  std::vector<std::array<int, 3>> faces;
  GeometryData g;
  std::vector<std::pair<std::string, double>> params;
  std::string resolution;

  switch (spec.kind) {
  case ZooKind::RoundSphereR3: {
    const double r = spec.parameter;
    icosphere(spec.resolution, vertices, faces);
    const int n = static_cast<int>(vertices.size());
    g = allocate(n);
    for (int p = 0; p < n; ++p) {
      const Vec4 omega = vertices[p];
      vertices[p] = r * omega;
      g.position[p] = vertices[p];
      g.normal[p] = -omega;
      g.e1[p] = first_tangent(omega);
      finish_frame(g, space, p);
      g.shape[p] = Eigen::Matrix2d::Identity() / r;
      g.mean_curvature[p] = 1.0 / r;
      g.gauss_curvature[p] = 1.0 / (r * r);
      g.norm_A2[p] = 2.0 / (r * r);
    }
    g.normal_convention = "N = -psi/r (inward); A = I/r, H = 1/r";
    params = {{"radius", r}};
    resolution = "subdivision " + std::to_string(spec.resolution);
    break;
  }
  case ZooKind::GeodesicSphereS3: {
    const double rho = spec.parameter;
    const double s = std::sin(rho);
    const double c = std::cos(rho);
    const double cot = c / s;
    icosphere(spec.resolution, vertices, faces);
    const int n = static_cast<int>(vertices.size());
    g = allocate(n);
    for (int p = 0; p < n; ++p) {
      const Vec4 omega = vertices[p];
      vertices[p] = Vec4(s * omega[0], s * omega[1], s * omega[2], c);
      g.position[p] = vertices[p];
      g.sphere_normal[p] = -vertices[p];
      g.normal[p] = Vec4(-c * omega[0], -c * omega[1], -c * omega[2], s);
      g.e1[p] = first_tangent(omega);
      finish_frame(g, space, p);
      g.shape[p] = Eigen::Matrix2d::Identity() * cot;
      g.mean_curvature[p] = cot;
      g.gauss_curvature[p] = 1.0 / (s * s);
      g.norm_A2[p] = 2.0 * cot * cot;
    }
    g.normal_convention = "psi = (sin(rho) w, cos(rho)), N = (-cos(rho) w, sin(rho)) toward the pole; A = cot(rho) I";
    params = {{"rho", rho}};
    resolution = "subdivision " + std::to_string(spec.resolution);
    break;
  }
  case ZooKind::ProductTorusS3: {
    const double a = spec.parameter;
    const double b = std::sqrt(1.0 - a * a);
    const int nu = spec.resolution;
    const int nv = spec.grid_v();
    const int n = nu * nv;
    const double ku = b / a;
    const double kv = -a / b;
    vertices.resize(n);
    g = allocate(n);
    auto index = [nv, nu](int i, int j) { return ((i % nu + nu) % nu) * nv + ((j % nv + nv) % nv); };
    for (int i = 0; i < nu; ++i) {
      const double u = 2.0 * kPi * i / nu;
      for (int j = 0; j < nv; ++j) {
        const double v = 2.0 * kPi * j / nv;
        const int p = index(i, j);
        vertices[p] = Vec4(a * std::cos(u), a * std::sin(u), b * std::cos(v), b * std::sin(v));
        g.position[p] = vertices[p];
        g.sphere_normal[p] = -vertices[p];
        g.normal[p] = Vec4(-b * std::cos(u), -b * std::sin(u), a * std::cos(v), a * std::sin(v));
        const Vec4 eu(-std::sin(u), std::cos(u), 0.0, 0.0);
        const Vec4 ev(0.0, 0.0, -std::sin(v), std::cos(v));
        g.e1[p] = eu;
        finish_frame(g, space, p);
        const Eigen::Matrix4d amb = ku * eu * eu.transpose() + kv * ev * ev.transpose();
        Eigen::Matrix<double, 4, 2> frame;
        frame.col(0) = g.e1[p];
        frame.col(1) = g.e2[p];
        g.shape[p] = frame.transpose() * amb * frame;
        g.mean_curvature[p] = 0.5 * (ku + kv);
        g.gauss_curvature[p] = 0.0;
        g.norm_A2[p] = ku * ku + kv * kv;
      }
    }
    faces.reserve(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < nv; ++j) {
        const int p00 = index(i, j), p10 = index(i + 1, j), p01 = index(i, j + 1), p11 = index(i + 1, j + 1);
        faces.push_back({p00, p10, p11});
        faces.push_back({p00, p11, p01});
      }
    }
    g.normal_convention = "N = (-b cos u, -b sin u, a cos v, a sin v); principal curvature b/a along u";
    params = {{"a", a}, {"b", b}};
    resolution = std::to_string(nu) + "x" + std::to_string(nv);
    break;
  }
  }

  g.source = GeometrySource::Analytic;
  orient_to_normals(space, vertices, faces, g.normal);
  SurfaceMesh mesh = build_connectivity(std::move(vertices), std::move(faces), space.ambient_dim());
  return Surface{space, std::move(mesh), std::move(g), zoo_kind_name(spec.kind), std::move(params), resolution};
}

Surface from_mesh(SurfaceMesh mesh) {
  const AmbientSpace space = AmbientSpace::for_dimension(mesh.ambient_dim());
  GeometryData g = fit_geometry(mesh, space);
  const std::string res = "V=" + std::to_string(mesh.num_vertices());
  return Surface{space, std::move(mesh), std::move(g), "mesh", {}, res};
}

AnalyticSpectra analytic_spectra(const ZooSpec& spec, int count) {
  validate(spec);
  if (count < 0) throw InvalidSpec("count must be nonnegative");
  SpectrumBuilder jac{{}, count};
  SpectrumBuilder hodge{{}, count};
  switch (spec.kind) {
  case ZooKind::RoundSphereR3:
  case ZooKind::GeodesicSphereS3: {
    double r2 = 0.0;
    double shift = 0.0; // |A|^2 + 2c
    if (spec.kind == ZooKind::RoundSphereR3) {
      r2 = spec.parameter * spec.parameter;
      shift = 2.0 / r2;
    } else {
      const double s = std::sin(spec.parameter);
      const double cot = 1.0 / std::tan(spec.parameter);
      r2 = s * s;
      shift = 2.0 * cot * cot + 2.0;
    }
    for (int l = 0; !jac.full(); ++l) jac.add(l * (l + 1) / r2 - shift, 2 * l + 1);
    for (int l = 1; !hodge.full(); ++l) hodge.add(l * (l + 1) / r2, 2 * (2 * l + 1));
    break;
  }
  case ZooKind::ProductTorusS3: {
    const double a = spec.parameter;
    const double b = std::sqrt(1.0 - a * a);
    const double shift = analytic_norm_A2(spec) + 2.0;
    const auto fn = torus_function_spectrum(a, b, count + 1);
    for (const auto& [value, mult] : fn) jac.add(value - shift, mult);
    hodge.add(0.0, 2);
    for (const auto& [value, mult] : fn)
      if (value > 0.0) hodge.add(value, 2 * mult);
    break;
  }
  }
  return {std::move(jac.values), std::move(hodge.values)};
}

} // namespace cmc

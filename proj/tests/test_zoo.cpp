#include <cmath>

#include <gtest/gtest.h>

#include "cmclab/surface_zoo.hpp"
#include "support/oracle.hpp"

using namespace cmc;

namespace {

std::string invalid_reason(const ZooSpec& spec) {
  try {
    validate(spec);
  } catch (const InvalidSpec& e) {
    return e.what();
  }
  return "";
}

void expect_lists_near(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

} // namespace

TEST(Zoo, Names) {
  for (ZooKind k : {ZooKind::RoundSphereR3, ZooKind::GeodesicSphereS3, ZooKind::ProductTorusS3})
    EXPECT_EQ(zoo_kind_from_name(zoo_kind_name(k)), k);
  EXPECT_EQ(zoo_kind_name(ZooKind::ProductTorusS3), "product-torus-s3");
  EXPECT_FALSE(zoo_kind_from_name("wente").has_value());
}

TEST(Zoo, ValidateErrors) {
  EXPECT_EQ(invalid_reason(ZooSpec::round_sphere(1.0, 0)), "resolution must be at least 3");
  EXPECT_EQ(invalid_reason(ZooSpec::round_sphere(-1.0, 4)), "sphere radius must be positive");
  EXPECT_EQ(invalid_reason(ZooSpec::geodesic_sphere(M_PI / 2, 4)), "geodesic radius rho must lie in (0, pi/2)");
  EXPECT_EQ(invalid_reason(ZooSpec::geodesic_sphere(0.0, 4)), "geodesic radius rho must lie in (0, pi/2)");
  EXPECT_EQ(invalid_reason(ZooSpec::product_torus(1.0, 16)), "torus radius a must lie in (0, 1)");
  EXPECT_EQ(invalid_reason(ZooSpec::product_torus(0.5, 16, 2)), "resolution must be at least 3");
  EXPECT_EQ(invalid_reason(ZooSpec::product_torus(0.5, 3, 3)), "");
  EXPECT_THROW(generate(ZooSpec::product_torus(0.0, 8)), InvalidSpec);
}

TEST(Zoo, GenusAndCounts) {
  const Surface sphere = generate(ZooSpec::round_sphere(1.0, 3));
  EXPECT_EQ(sphere.mesh.num_vertices(), 642);
  EXPECT_EQ(sphere.mesh.genus(), 0);
  EXPECT_EQ(sphere.space.c(), 0);
  const Surface geo = generate(ZooSpec::geodesic_sphere(1.0, 3));
  EXPECT_EQ(geo.mesh.genus(), 0);
  EXPECT_EQ(geo.space.c(), 1);
  const Surface torus = generate(ZooSpec::product_torus(0.6, 12, 18));
  EXPECT_EQ(torus.mesh.num_vertices(), 12 * 18);
  EXPECT_EQ(torus.mesh.genus(), 1);
}

TEST(Zoo, CliffordTorusIsMinimal) {
  const ZooSpec spec = ZooSpec::product_torus(1.0 / std::sqrt(2.0), 16);
  const Surface s = generate(spec);
  for (int p = 0; p < s.geometry.size(); ++p) {
    EXPECT_NEAR(s.geometry.mean_curvature[p], 0.0, 1e-14);
    EXPECT_NEAR(s.geometry.norm_A2[p], 2.0, 1e-13);
    EXPECT_NEAR(s.geometry.gauss_curvature[p], 0.0, 1e-13);
  }
  EXPECT_NEAR(analytic_mean_curvature(spec), 0.0, 1e-15);
}

TEST(Zoo, UnitSphereIsUmbilic) {
  const Surface s = generate(ZooSpec::round_sphere(1.0, 3));
  for (int p = 0; p < s.geometry.size(); ++p) {
    EXPECT_EQ(s.geometry.mean_curvature[p], 1.0);
    EXPECT_EQ(s.geometry.norm_A2[p], 2.0);
    EXPECT_EQ(s.geometry.gauss_curvature[p], 1.0);
    EXPECT_NEAR(s.geometry.position[p].norm(), 1.0, 1e-15);
  }
}

TEST(Zoo, GeodesicSphereCurvature) {
  const double rho = 0.9;
  const Surface s = generate(ZooSpec::geodesic_sphere(rho, 3));
  const double cot = 1.0 / std::tan(rho);
  for (int p = 0; p < s.geometry.size(); ++p) {
    EXPECT_NEAR(s.geometry.mean_curvature[p], cot, 1e-14);
    EXPECT_NEAR(s.geometry.gauss_curvature[p], 1.0 / (std::sin(rho) * std::sin(rho)), 1e-13);
    EXPECT_NEAR(s.geometry.position[p].norm(), 1.0, 1e-15);
    // Geodesic distance to the pole (0, 0, 0, 1) is rho.
    EXPECT_NEAR(std::acos(s.geometry.position[p][3]), rho, 1e-12);
  }
}

TEST(Zoo, TorusRadiiRecovered) {
  const double a = 0.6;
  const Surface s = generate(ZooSpec::product_torus(a, 10, 14));
  for (int p = 0; p < s.geometry.size(); ++p) {
    const Vec4& x = s.geometry.position[p];
    EXPECT_NEAR(x.norm(), 1.0, 1e-15);
    EXPECT_NEAR(std::hypot(x[0], x[1]), a, 1e-15);
    EXPECT_NEAR(std::hypot(x[2], x[3]), 0.8, 1e-15);
  }
  EXPECT_NEAR(analytic_mean_curvature(ZooSpec::product_torus(a, 10)), 0.2916666666666667, 1e-15);
  EXPECT_NEAR(analytic_norm_A2(ZooSpec::product_torus(a, 10)), 2.3402777777777777, 1e-14);
}

TEST(Zoo, WindingMatchesNormal) {
  for (const ZooSpec& spec : {ZooSpec::round_sphere(1.0, 3), ZooSpec::geodesic_sphere(1.0, 3),
                              ZooSpec::product_torus(0.6, 12)}) {
    const Surface s = generate(spec);
    for (int f = 0; f < s.mesh.num_faces(); ++f) {
      Vec4 n = Vec4::Zero();
      for (int v : s.mesh.face(f)) n += s.geometry.normal[v];
      EXPECT_GT(s.mesh.face_normal(f).dot(n), 0.0);
    }
  }
}

TEST(Zoo, AnalyticSpectraMatchOracle) {
  const int k = 40;
  auto s = analytic_spectra(ZooSpec::round_sphere(1.0, 4), k);
  auto o = oracle::sphere_spectra(1.0, 2.0, k);
  expect_lists_near(s.jacobi, o.jacobi, 1e-12);
  expect_lists_near(s.hodge1, o.hodge1, 1e-12);
  EXPECT_EQ(s.jacobi[0], -2.0);
  EXPECT_EQ(s.jacobi[1], 0.0);
  EXPECT_EQ(s.jacobi[3], 0.0);
  EXPECT_EQ(s.jacobi[4], 4.0);

  s = analytic_spectra(ZooSpec::round_sphere(2.0, 4), k);
  o = oracle::sphere_spectra(2.0, 0.5, k);
  expect_lists_near(s.jacobi, o.jacobi, 1e-12);
  expect_lists_near(s.hodge1, o.hodge1, 1e-12);

  const double rho = M_PI / 3;
  s = analytic_spectra(ZooSpec::geodesic_sphere(rho, 4), k);
  const double cot2 = 1.0 / (std::tan(rho) * std::tan(rho));
  o = oracle::sphere_spectra(std::sin(rho), 2.0 * cot2 + 2.0, k);
  expect_lists_near(s.jacobi, o.jacobi, 1e-12);
  expect_lists_near(s.hodge1, o.hodge1, 1e-12);

  for (double a : {1.0 / std::sqrt(2.0), 0.6, 0.3}) {
    s = analytic_spectra(ZooSpec::product_torus(a, 16), k);
    o = oracle::product_torus_spectra(a, k);
    expect_lists_near(s.jacobi, o.jacobi, 1e-10);
    expect_lists_near(s.hodge1, o.hodge1, 1e-10);
  }
}

TEST(Zoo, CliffordSpectra) {
  const auto s = analytic_spectra(ZooSpec::product_torus(1.0 / std::sqrt(2.0), 64), 12);
  const std::vector<double> jacobi{-4, -2, -2, -2, -2, 0, 0, 0, 0, 4, 4, 4};
  const std::vector<double> hodge{0, 0, 2, 2, 2, 2, 2, 2, 2, 2, 4, 4};
  expect_lists_near(s.jacobi, jacobi, 1e-12);
  expect_lists_near(s.hodge1, hodge, 1e-12);
  int negative = 0;
  for (double l : s.jacobi) negative += l < 0;
  EXPECT_EQ(negative, 5);
}

TEST(Zoo, SpectraNondecreasing) {
  for (const ZooSpec& spec :
       {ZooSpec::round_sphere(1.3, 4), ZooSpec::geodesic_sphere(0.5, 4), ZooSpec::product_torus(0.45, 8)}) {
    const auto s = analytic_spectra(spec, 60);
    ASSERT_EQ(s.jacobi.size(), 60u);
    ASSERT_EQ(s.hodge1.size(), 60u);
    for (int i = 1; i < 60; ++i) {
      EXPECT_LE(s.jacobi[i - 1], s.jacobi[i]);
      EXPECT_LE(s.hodge1[i - 1], s.hodge1[i]);
    }
  }
  EXPECT_TRUE(analytic_spectra(ZooSpec::round_sphere(1.0, 4), 0).jacobi.empty());
  EXPECT_THROW(analytic_spectra(ZooSpec::round_sphere(1.0, 4), -1), InvalidSpec);
}

TEST(Zoo, GaussBonnetWithAnalyticK) {
  for (const ZooSpec& spec : {ZooSpec::round_sphere(1.0, 5), ZooSpec::round_sphere(3.0, 5),
                              ZooSpec::geodesic_sphere(M_PI / 3, 5), ZooSpec::geodesic_sphere(0.3, 5)}) {
    const Surface s = generate(spec);
    const double integral = integrate_scalar(s.mesh, s.geometry.gauss_curvature);
    EXPECT_NEAR(integral, 4 * M_PI, 1e-3 * 4 * M_PI) << zoo_kind_name(spec.kind);
  }
  for (double a : {std::sqrt(0.5), 0.6}) {
    const Surface s = generate(ZooSpec::product_torus(a, 64));
    EXPECT_NEAR(integrate_scalar(s.mesh, s.geometry.gauss_curvature), 0.0, 1e-12);
  }
}

#include "oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include <Eigen/Dense>

#ifndef CMCLAB_TEST_DATA_DIR
#define CMCLAB_TEST_DATA_DIR "tests/data"
#endif

namespace cmc::oracle {

namespace {

ExactSpectra from_laplace(std::vector<double> laplace, double potential, int count, int kernel) {
  std::sort(laplace.begin(), laplace.end());
  ExactSpectra out;
  out.laplace.assign(laplace.begin(), laplace.begin() + std::min<std::size_t>(count, laplace.size()));
  for (double l : out.laplace) out.jacobi.push_back(l - potential);
  for (int i = 0; i < kernel; ++i) out.hodge1.push_back(0.0);
  for (double l : laplace) {
    if (l < 1e-12) continue;
    out.hodge1.push_back(l);
    out.hodge1.push_back(l);
  }
  std::sort(out.hodge1.begin(), out.hodge1.end());
  out.hodge1.resize(std::min<std::size_t>(count, out.hodge1.size()));
  return out;
}

} // namespace

ExactSpectra sphere_spectra(double r, double potential, int count) {
  std::vector<double> l;
  for (int ell = 0; static_cast<int>(l.size()) < 2 * count + 2; ++ell)
    for (int m = -ell; m <= ell; ++m) l.push_back(ell * (ell + 1) / (r * r));
  return from_laplace(l, potential, count, 0);
}

ExactSpectra product_torus_spectra(double a, int count) {
  const double b = std::sqrt(1.0 - a * a);
  // Generous box: every eigenvalue up to count is inside |m|, |n| <= K.
  const int K = 4 * static_cast<int>(std::sqrt(static_cast<double>(count))) + 8;
  std::vector<double> l;
  for (int m = -K; m <= K; ++m)
    for (int n = -K; n <= K; ++n) l.push_back((m * m) / (a * a) + (n * n) / (b * b));
  const double potential = 1.0 / (a * a) + 1.0 / (b * b);
  return from_laplace(l, potential, count, 2);
}

std::vector<double> dense_reference(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, int k,
                                    const Eigen::MatrixXd& constraints) {
  const long n = A.rows();
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd Li = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd S = Li * A * Li.transpose();
  S = 0.5 * (S + S.transpose());
  if (constraints.cols() > 0) {
    const Eigen::MatrixXd B = L.transpose() * constraints;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullU);
    const Eigen::MatrixXd U2 = svd.matrixU().rightCols(n - constraints.cols());
    S = U2.transpose() * S * U2;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + k);
  return out;
}

void random_pencil(int n, unsigned seed, SparseMatrix& A, SparseMatrix& M, bool diagonal_mass) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<Eigen::Triplet<double>> ta, tm;
  for (int i = 0; i < n; ++i) {
    ta.emplace_back(i, i, 4.0 * u(rng));
    if (i + 1 < n) {
      const double v = u(rng);
      ta.emplace_back(i, i + 1, v);
      ta.emplace_back(i + 1, i, v);
    }
  }
  for (int e = 0; e < 3 * n; ++e) {
    const int i = pick(rng), j = pick(rng);
    if (i == j) continue;
    const double v = 0.5 * u(rng);
    ta.emplace_back(i, j, v);
    ta.emplace_back(j, i, v);
  }
  for (int i = 0; i < n; ++i) {
    tm.emplace_back(i, i, 1.5 + u(rng));
    if (!diagonal_mass && i + 1 < n) {
      const double v = 0.2 * u(rng);
      tm.emplace_back(i, i + 1, v);
      tm.emplace_back(i + 1, i, v);
    }
  }
  A.resize(n, n);
  A.setFromTriplets(ta.begin(), ta.end());
  M.resize(n, n);
  M.setFromTriplets(tm.begin(), tm.end());
}

SurfaceMesh genus2_mesh(int n) {
  const int X = 5 * n, Y = 3 * n, Z = n;
  const auto filled = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= X || j >= Y || k >= Z) return false;
    const bool in_row = j >= n && j < 2 * n;
    const bool hole = in_row && ((i >= n && i < 2 * n) || (i >= 3 * n && i < 4 * n));
    return !hole;
  };
  std::map<std::array<int, 3>, int> index;
  std::vector<Vec4> verts;
  std::vector<std::array<int, 3>> faces;
  const auto vertex = [&](std::array<int, 3> p) {
    const auto it = index.find(p);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(verts.size());
    index.emplace(p, id);
    verts.emplace_back(double(p[0]) / n, double(p[1]) / n, double(p[2]) / n, 0.0);
    return id;
  };
  for (int i = 0; i < X; ++i)
    for (int j = 0; j < Y; ++j)
      for (int k = 0; k < Z; ++k) {
        if (!filled(i, j, k)) continue;
        const std::array<int, 3> cell{i, j, k};
        for (int d = 0; d < 3; ++d)
          for (int s : {-1, 1}) {
            std::array<int, 3> nb = cell;
            nb[d] += s;
            if (filled(nb[0], nb[1], nb[2])) continue;
            const int du = (d + 1) % 3, dv = (d + 2) % 3;
            std::array<int, 3> base = cell;
            if (s > 0) base[d] += 1;
            std::array<int, 3> p1 = base, p2 = base, p3 = base;
            p1[du] += 1;
            p2[du] += 1;
            p2[dv] += 1;
            p3[dv] += 1;
            int q[4] = {vertex(base), vertex(p1), vertex(p2), vertex(p3)};
            if (s < 0) std::swap(q[1], q[3]);
            faces.push_back({q[0], q[1], q[2]});
            faces.push_back({q[0], q[2], q[3]});
          }
      }
  return build_connectivity(std::move(verts), std::move(faces), 3);
}

std::string data_path(const std::string& name) { return std::string(CMCLAB_TEST_DATA_DIR) + "/" + name; }

} // namespace cmc::oracle

#include "cmclab/dec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace cmc {

namespace {

using Triplet = Eigen::Triplet<double>;

struct FaceLocal {
  std::array<Vec4, 3> g;       // barycentric gradients
  Eigen::Matrix3d stiffness;   // A g_a . g_b
  Eigen::Matrix3d whitney;     // side-oriented Whitney mass
  double area = 0.0;
};

FaceLocal local_matrices(const SurfaceMesh& mesh, int f) {
  const auto& t = mesh.face(f);
  const Vec4 u = mesh.vertex(t[1]) - mesh.vertex(t[0]);
  const Vec4 v = mesh.vertex(t[2]) - mesh.vertex(t[0]);
  Eigen::Matrix2d G;
  G << u.dot(u), u.dot(v), u.dot(v), v.dot(v);
  const double det = G.determinant();
  if (!(det > 0.0)) throw InvalidMesh("degenerate face " + std::to_string(f));
  const Eigen::Matrix2d Gi = G.inverse();
  FaceLocal out;
  out.area = 0.5 * std::sqrt(det);
  out.g[1] = Gi(0, 0) * u + Gi(1, 0) * v;
  out.g[2] = Gi(0, 1) * u + Gi(1, 1) * v;
  out.g[0] = -out.g[1] - out.g[2];
  Eigen::Matrix3d dots;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) dots(a, b) = out.g[a].dot(out.g[b]);
  out.stiffness = out.area * dots;
  auto I = [&](int x, int y) { return out.area * (x == y ? 2.0 : 1.0) / 12.0; };
  // Side k runs a = k -> b = k + 1 with W = lambda_a grad lambda_b - lambda_b grad lambda_a.
  for (int k = 0; k < 3; ++k) {
    const int a = k, b = (k + 1) % 3;
    for (int l = 0; l < 3; ++l) {
      const int c = l, d = (l + 1) % 3;
      out.whitney(k, l) = dots(b, d) * I(a, c) - dots(b, c) * I(a, d) - dots(a, d) * I(b, c) + dots(a, c) * I(b, d);
    }
  }
  return out;
}

SparseMatrix diagonal(const Eigen::VectorXd& d) {
  SparseMatrix D(d.size(), d.size());
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (int i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

Vec4 unit_barycenter(const SurfaceMesh& mesh, int f) { return mesh.face_barycenter(f).normalized(); }

} // namespace

OperatorSet assemble_operators(const SurfaceMesh& mesh, int threads) {
  const int nv = mesh.num_vertices();
  const int ne = mesh.num_edges();
  const int nf = mesh.num_faces();
  std::vector<FaceLocal> local(nf);
  const int nt = std::max(1, std::min(threads, nf));
  if (nt == 1) {
    for (int f = 0; f < nf; ++f) local[f] = local_matrices(mesh, f);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    for (int w = 0; w < nt; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int f = w; f < nf; f += nt) local[f] = local_matrices(mesh, f);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  OperatorSet ops;
  ops.ambient_dim = mesh.ambient_dim();
  ops.grad_lambda.resize(nf);

  std::vector<Triplet> t;
  t.reserve(2 * ne);
  for (int e = 0; e < ne; ++e) {
    t.emplace_back(e, mesh.edge(e).v0, -1.0);
    t.emplace_back(e, mesh.edge(e).v1, 1.0);
  }
  ops.d0.resize(ne, nv);
  ops.d0.setFromTriplets(t.begin(), t.end());

  t.clear();
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) t.emplace_back(f, mesh.face_edge(f, k), mesh.face_edge_sign(f, k));
  ops.d1.resize(nf, ne);
  ops.d1.setFromTriplets(t.begin(), t.end());

  Eigen::VectorXd m0(nv);
  for (int v = 0; v < nv; ++v) m0[v] = mesh.vertex_areas()[v];
  ops.M0 = diagonal(m0);
  Eigen::VectorXd m2(nf);
  for (int f = 0; f < nf; ++f) m2[f] = 1.0 / local[f].area;
  ops.M2 = diagonal(m2);

  std::vector<Triplet> tl0, tm1;
  tl0.reserve(9 * nf);
  tm1.reserve(9 * nf);
  for (int f = 0; f < nf; ++f) {
    const auto& tri = mesh.face(f);
    const FaceLocal& L = local[f];
    ops.grad_lambda[f] = L.g;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        tl0.emplace_back(tri[a], tri[b], L.stiffness(a, b));
        const double s = mesh.face_edge_sign(f, a) * mesh.face_edge_sign(f, b);
        tm1.emplace_back(mesh.face_edge(f, a), mesh.face_edge(f, b), s * L.whitney(a, b));
      }
  }
  ops.L0.resize(nv, nv);
  ops.L0.setFromTriplets(tl0.begin(), tl0.end());
  ops.M1.resize(ne, ne);
  ops.M1.setFromTriplets(tm1.begin(), tm1.end());

  Eigen::VectorXd m0inv = m0.cwiseInverse();
  const SparseMatrix B = ops.M1 * ops.d0;                   // E x V
  const SparseMatrix codiff = B * m0inv.asDiagonal() * SparseMatrix(B.transpose());
  const SparseMatrix diff = SparseMatrix(ops.d1.transpose()) * ops.M2 * ops.d1;
  SparseMatrix L1 = codiff + diff;
  ops.L1 = 0.5 * (L1 + SparseMatrix(L1.transpose()));
  ops.L1.prune(0.0);
  return ops;
}

std::vector<FaceFrame> face_frames(const SurfaceMesh& mesh) {
  std::vector<FaceFrame> out(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.face(f);
    Vec4 u = mesh.vertex(t[1]) - mesh.vertex(t[0]);
    FaceFrame& fr = out[f];
    fr.normal = mesh.face_normal(f);
    if (mesh.ambient_dim() == 3) {
      fr.t1 = u.normalized();
      fr.t2 = cross3(fr.normal, fr.t1);
    } else {
      const Vec4 psi = unit_barycenter(mesh, f);
      u -= u.dot(psi) * psi;
      fr.t1 = u.normalized();
      fr.t2 = cross4(psi, fr.normal, fr.t1);
    }
  }
  return out;
}

FormEnergy form_energy(const OperatorSet& ops, const Form1& w) {
  FormEnergy out;
  const Eigen::VectorXd Mw = ops.M1 * w;
  const double norm2 = w.dot(Mw);
  if (!(norm2 > 0.0)) throw std::invalid_argument("form_energy: zero form");
  const Eigen::VectorXd y = ops.d0.transpose() * Mw;
  const Eigen::VectorXd m0 = ops.M0.diagonal();
  out.codiff = (y.array().square() / m0.array()).sum() / norm2;
  const Eigen::VectorXd z = ops.d1 * w;
  out.diff = z.dot(ops.M2 * z) / norm2;
  out.rayleigh = w.dot(ops.L1 * w) / norm2;
  return out;
}

HarmonicBasis harmonic_basis(const OperatorSet& ops, const SurfaceMesh& mesh, const SolverOptions& solver) {
  HarmonicBasis out;
  out.genus = mesh.genus();
  const int nv = mesh.num_vertices();
  const int ne = mesh.num_edges();
  const int nf = mesh.num_faces();
  out.forms.resize(ne, 0);
  if (out.genus == 0) return out;

  // Primal spanning tree by BFS over vertices.
  std::vector<std::vector<std::pair<int, int>>> adj(nv);
  for (int e = 0; e < ne; ++e) {
    adj[mesh.edge(e).v0].emplace_back(mesh.edge(e).v1, e);
    adj[mesh.edge(e).v1].emplace_back(mesh.edge(e).v0, e);
  }
  std::vector<char> in_tree(ne, 0), seen(nv, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (auto [w, e] : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        in_tree[e] = 1;
        q.push(w);
      }
  }

  // Dual spanning tree across the remaining edges.
  std::vector<char> in_cotree(ne, 0), fseen(nf, 0);
  std::vector<int> parent_edge(nf, -1), order;
  order.reserve(nf);
  q.push(0);
  fseen[0] = 1;
  while (!q.empty()) {
    const int f = q.front();
    q.pop();
    order.push_back(f);
    for (int k = 0; k < 3; ++k) {
      const int e = mesh.face_edge(f, k);
      if (in_tree[e]) continue;
      const auto& ef = mesh.edge(e).faces;
      const int g = ef[0] == f ? ef[1] : ef[0];
      if (fseen[g]) continue;
      fseen[g] = 1;
      in_cotree[e] = 1;
      parent_edge[g] = e;
      q.push(g);
    }
  }

  std::vector<int> generators;
  for (int e = 0; e < ne; ++e)
    if (!in_tree[e] && !in_cotree[e]) generators.push_back(e);
  if (static_cast<int>(generators.size()) != 2 * out.genus)
    throw InvalidMesh("tree-cotree found " + std::to_string(generators.size()) + " generators, expected " +
                      std::to_string(2 * out.genus));

  // Pinned Laplacian for the exact part: L0 with vertex 0 fixed.
  std::vector<Triplet> t;
  for (int j = 0; j < ops.L0.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(ops.L0, j); it; ++it)
      if (it.row() != 0 && it.col() != 0) t.emplace_back(it.row(), it.col(), it.value());
  t.emplace_back(0, 0, 1.0);
  SparseMatrix pinned(nv, nv);
  pinned.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(pinned);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("harmonic_basis: Laplacian factorization failed");

  Eigen::MatrixXd H(ne, static_cast<long>(generators.size()));
  for (std::size_t c = 0; c < generators.size(); ++c) {
    Form1 w = Form1::Zero(ne);
    w[generators[c]] = 1.0;
    // Close the cochain: peel the dual tree from the leaves.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int f = *it;
      const int pe = parent_edge[f];
      if (pe < 0) continue;
      double sum = 0.0;
      int sign_pe = 0;
      for (int k = 0; k < 3; ++k) {
        const int e = mesh.face_edge(f, k);
        if (e == pe)
          sign_pe = mesh.face_edge_sign(f, k);
        else
          sum += mesh.face_edge_sign(f, k) * w[e];
      }
      w[pe] = -sum / sign_pe;
    }
    Eigen::VectorXd rhs = ops.d0.transpose() * (ops.M1 * w);
    rhs[0] = 0.0;
    const Eigen::VectorXd u = ldlt.solve(rhs);
    H.col(static_cast<long>(c)) = w - ops.d0 * u;
  }

  Eigen::MatrixXd G = H.transpose() * (ops.M1 * H);
  G = 0.5 * (G + G.transpose());
  const Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw std::runtime_error("harmonic_basis: generators are dependent");
  out.forms = llt.matrixL().solve(H.transpose()).transpose();

  const SpectrumResult next = solve_lowest(ops.L1, ops.M1, 1, out.forms, solver);
  out.next_eigenvalue = next.eigenvalues[0];
  out.threshold = 1e-3 * out.next_eigenvalue;
  double worst = 0.0;
  for (int c = 0; c < out.size(); ++c) {
    const FormEnergy en = form_energy(ops, out.forms.col(c));
    out.rayleigh.push_back(en.rayleigh);
    out.codiff_energy.push_back(en.codiff);
    out.diff_energy.push_back(en.diff);
    worst = std::max({worst, en.rayleigh, en.codiff, en.diff});
  }
  if (!(worst < out.threshold)) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "harmonic space not separated: largest harmonic energy %.6g vs eigenvalue %.6g above it", worst,
                  out.next_eigenvalue);
    throw HarmonicGapError(buf, worst, out.next_eigenvalue);
  }
  return out;
}

TangentField rotate90(const TangentField& field, const SurfaceMesh& mesh, double tolerance) {
  if (field.size() != mesh.num_faces()) throw std::invalid_argument("rotate90: field size does not match faces");
  TangentField out;
  out.face.resize(field.size());
  for (int f = 0; f < field.size(); ++f) {
    const Vec4& x = field.face[f];
    const Vec4 n = mesh.face_normal(f);
    const double scale = x.norm();
    if (std::abs(x.dot(n)) > tolerance * std::max(scale, 1e-300) && scale > 0.0)
      throw GeometryError("rotate90: vector on face " + std::to_string(f) + " is not tangent");
    if (mesh.ambient_dim() == 3) {
      out.face[f] = cross3(n, x);
    } else {
      const Vec4 psi = unit_barycenter(mesh, f);
      if (std::abs(x.dot(psi)) > tolerance * std::max(scale, 1e-300) && scale > 0.0)
        throw GeometryError("rotate90: vector on face " + std::to_string(f) + " is not tangent to S^3");
      out.face[f] = cross4(psi, n, x);
    }
  }
  return out;
}

TangentField sharp(const OperatorSet& ops, const SurfaceMesh& mesh, const Form1& w) {
  if (w.size() != mesh.num_edges()) throw std::invalid_argument("sharp: form size does not match edges");
  TangentField out;
  out.face.resize(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& g = ops.grad_lambda[f];
    Vec4 x = Vec4::Zero();
    for (int k = 0; k < 3; ++k)
      x += mesh.face_edge_sign(f, k) * w[mesh.face_edge(f, k)] * (g[(k + 1) % 3] - g[k]) / 3.0;
    if (mesh.ambient_dim() == 4) {
      const Vec4 psi = unit_barycenter(mesh, f);
      x -= x.dot(psi) * psi;
    }
    out.face[f] = x;
  }
  return out;
}

Form1 flat(const SurfaceMesh& mesh, const TangentField& field) {
  if (field.size() != mesh.num_faces()) throw std::invalid_argument("flat: field size does not match faces");
  Form1 w(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& ed = mesh.edge(e);
    const Vec4 d = mesh.vertex(ed.v1) - mesh.vertex(ed.v0);
    w[e] = 0.5 * (field.face[ed.faces[0]].dot(d) + field.face[ed.faces[1]].dot(d));
  }
  return w;
}

std::vector<Vec4> vertex_values(const SurfaceMesh& mesh, const GeometryData& geom, const AmbientSpace& space,
                                const TangentField& field) {
  if (field.size() != mesh.num_faces()) throw std::invalid_argument("vertex_values: field size does not match faces");
  std::vector<Vec4> out(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    Vec4 s = Vec4::Zero();
    double a = 0.0;
    for (int f : mesh.vertex_faces(v)) {
      s += mesh.face_areas()[f] * field.face[f];
      a += mesh.face_areas()[f];
    }
    out[v] = tangential_part(geom, space, v, s / a);
  }
  return out;
}

Form0 divergence(const OperatorSet& ops, const SurfaceMesh& mesh, const TangentField& field) {
  const Form1 w = flat(mesh, field);
  const Eigen::VectorXd y = ops.d0.transpose() * (ops.M1 * w);
  return -(y.array() / ops.M0.diagonal().array()).matrix();
}

std::vector<Eigen::Matrix2d> covariant_gradient(const SurfaceMesh& mesh, const GeometryData& geom,
                                                const AmbientSpace& space, const TangentField& field) {
  const std::vector<Vec4> xv = vertex_values(mesh, geom, space, field);
  const std::vector<FaceFrame> frames = face_frames(mesh);
  std::vector<Eigen::Matrix2d> out(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.face(f);
    const FaceFrame& fr = frames[f];
    const Vec4 u = mesh.vertex(t[1]) - mesh.vertex(t[0]);
    const Vec4 v = mesh.vertex(t[2]) - mesh.vertex(t[0]);
    Eigen::Matrix2d P;
    P << u.dot(fr.t1), v.dot(fr.t1), u.dot(fr.t2), v.dot(fr.t2);
    Eigen::Matrix<double, 4, 2> delta;
    delta.col(0) = xv[t[1]] - xv[t[0]];
    delta.col(1) = xv[t[2]] - xv[t[0]];
    const Eigen::Matrix<double, 4, 2> D = delta * P.inverse();
    Eigen::Matrix<double, 4, 2> T;
    T.col(0) = fr.t1;
    T.col(1) = fr.t2;
    out[f] = T.transpose() * D;
  }
  return out;
}

std::vector<double> shape_contraction(const SurfaceMesh& mesh, const GeometryData& geom,
                                      const std::vector<Eigen::Matrix2d>& grad) {
  if (static_cast<int>(grad.size()) != mesh.num_faces())
    throw std::invalid_argument("shape_contraction: gradient size does not match faces");
  const std::vector<FaceFrame> frames = face_frames(mesh);
  std::vector<Eigen::Matrix4d> ambient(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    Eigen::Matrix<double, 4, 2> T;
    T.col(0) = frames[f].t1;
    T.col(1) = frames[f].t2;
    ambient[f] = T * grad[f] * T.transpose();
  }
  std::vector<double> out(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
    double a = 0.0;
    for (int f : mesh.vertex_faces(v)) {
      s += mesh.face_areas()[f] * ambient[f];
      a += mesh.face_areas()[f];
    }
    s /= a;
    Eigen::Matrix<double, 4, 2> F;
    F.col(0) = geom.e1[v];
    F.col(1) = geom.e2[v];
    const Eigen::Matrix2d G = F.transpose() * s * F;
    const Eigen::Matrix2d sym = 0.5 * (G + G.transpose());
    out[v] = (geom.shape[v].cwiseProduct(sym)).sum();
  }
  return out;
}

void write_matrix_market(const std::string& path, const SparseMatrix& A, bool symmetric) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  std::vector<Triplet> entries;
  for (int j = 0; j < A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(A, j); it; ++it)
      if (!symmetric || it.row() >= it.col()) entries.emplace_back(it.row(), it.col(), it.value());
  os << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
  os << A.rows() << " " << A.cols() << " " << entries.size() << "\n";
  char buf[96];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g\n", e.row() + 1, e.col() + 1, e.value());
    os << buf;
  }
  if (!os) throw std::runtime_error("failed writing " + path);
}

void export_operators(const OperatorSet& ops, const std::string& directory) {
  std::filesystem::create_directories(directory);
  const auto path = [&](const char* name) { return (std::filesystem::path(directory) / name).string(); };
  write_matrix_market(path("d0.mtx"), ops.d0, false);
  write_matrix_market(path("d1.mtx"), ops.d1, false);
  write_matrix_market(path("M0.mtx"), ops.M0, true);
  write_matrix_market(path("M1.mtx"), ops.M1, true);
  write_matrix_market(path("M2.mtx"), ops.M2, true);
  write_matrix_market(path("L0.mtx"), ops.L0, true);
  write_matrix_market(path("L1.mtx"), ops.L1, true);
}

} // namespace cmc

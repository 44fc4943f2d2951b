#include "cmclab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace cmc {

JacobiOperator assemble_jacobi(const OperatorSet& ops, const GeometryData& geom, const AmbientSpace& space) {
  const CmcCheck cmc = check_cmc(geom);
  if (!cmc.is_cmc) {
    std::ostringstream msg;
    msg << "mean curvature is not constant: max |H - median| = " << cmc.max_deviation << " exceeds "
        << cmc.tolerance;
    throw NotCmcError(msg.str());
  }
  const int n = static_cast<int>(ops.L0.rows());
  if (geom.size() != n) throw std::invalid_argument("assemble_jacobi: geometry does not match the operators");
  JacobiOperator out;
  out.c = space.c();
  out.H = cmc.median_H;
  out.M0 = ops.M0;
  out.potential.resize(n);
  for (int p = 0; p < n; ++p) out.potential[p] = geom.norm_A2[p] + 2.0 * space.c();
  SparseMatrix D(n, n);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(n);
  for (int p = 0; p < n; ++p) t.emplace_back(p, p, ops.M0.coeff(p, p) * out.potential[p]);
  D.setFromTriplets(t.begin(), t.end());
  out.J = ops.L0 - D;
  return out;
}

IndexCount count_negative_eigenvalues(const SpectrumResult& spectrum, double eps) {
  IndexCount out;
  out.eps = eps;
  out.count = spectrum.count_negative(eps);
  out.count_loose = spectrum.count_negative(0.5 * eps);
  out.count_tight = spectrum.count_negative(1.5 * eps);
  out.ambiguous = out.count_loose != out.count_tight;
  out.spectrum = spectrum;
  return out;
}

namespace {

IndexCount adaptive_count(const JacobiOperator& J, const Eigen::MatrixXd& constraints, const SolverOptions& solver,
                          int k) {
  const int free_dim = static_cast<int>(J.J.rows() - constraints.cols());
  k = std::max(1, k);
  for (;;) {
    k = std::min(k, free_dim);
    const SpectrumResult spec = solve_lowest(J.J, J.M0, k, constraints, solver);
    const double eps = negative_threshold(spec.eigenvalues.front(), spec.spectral_scale);
    if (spec.eigenvalues.back() > -0.5 * eps || k == free_dim) return count_negative_eigenvalues(spec, eps);
    k *= 2;
  }
}

Eigen::Vector2d frame_coords(const GeometryData& geom, int p, const Vec4& v) {
  return Eigen::Vector2d(v.dot(geom.e1[p]), v.dot(geom.e2[p]));
}

} // namespace

IndexCount morse_index(const JacobiOperator& J, const SolverOptions& solver, int initial_k) {
  return adaptive_count(J, Eigen::MatrixXd(), solver, initial_k);
}

IndexCount weak_index(const JacobiOperator& J, const SolverOptions& solver, int initial_k) {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(J.J.rows(), 1);
  return adaptive_count(J, ones, solver, initial_k);
}

TestFunctionSet test_functions(const SurfaceMesh& mesh, const GeometryData& geom, const AmbientSpace& space,
                               const TangentField& field) {
  TestFunctionSet ts;
  ts.field = vertex_values(mesh, geom, space, field);
  const int n = mesh.num_vertices();
  const int dim = space.ambient_dim();
  std::vector<Vec4> rotated(n);
  for (int p = 0; p < n; ++p) rotated[p] = rotate90_at(geom, space, p, ts.field[p]);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  for (int i = 1; i <= dim; ++i) {
    const std::vector<Vec4> E = project_ambient_basis(geom, space, i);
    Eigen::VectorXd w(n), wb(n);
    for (int p = 0; p < n; ++p) {
      w[p] = E[p].dot(ts.field[p]);
      wb[p] = E[p].dot(rotated[p]);
    }
    sum += w.cwiseAbs2() + wb.cwiseAbs2();
    ts.w.push_back(std::move(w));
    ts.wbar.push_back(std::move(wb));
  }
  double top = 0.0, err = 0.0;
  for (int p = 0; p < n; ++p) {
    const double x2 = ts.field[p].squaredNorm();
    top = std::max(top, x2);
    err = std::max(err, std::abs(sum[p] - 2.0 * x2));
  }
  ts.projection_identity_error = top > 0.0 ? err / top : err;
  return ts;
}

MeanZeroCheck check_mean_zero(const SurfaceMesh& mesh, const TestFunctionSet& ts) {
  MeanZeroCheck out;
  const auto integral = [&](const Eigen::VectorXd& u) { return integrate_scalar(mesh, {u.data(), (std::size_t)u.size()}); };
  for (int i = 0; i < ts.count(); ++i)
    out.max_abs_integral = std::max({out.max_abs_integral, std::abs(integral(ts.w[i])), std::abs(integral(ts.wbar[i]))});
  double xmax = 0.0;
  for (const Vec4& x : ts.field) xmax = std::max(xmax, x.norm());
  out.tolerance = 1e-6 * mesh.total_area() * xmax;
  out.pass = out.max_abs_integral <= out.tolerance;
  return out;
}

LapwiResult check_lapwi(const SurfaceMesh& mesh, const OperatorSet& ops, const GeometryData& geom,
                        const AmbientSpace& space, const Form1& w, double harmonic_threshold) {
  if (w.cwiseAbs().maxCoeff() == 0.0) {
    // Both sides vanish identically.
    LapwiResult zero;
    zero.residual.assign(space.ambient_dim(), 0.0);
    return zero;
  }
  const FormEnergy energy = form_energy(ops, w);
  if (energy.rayleigh > harmonic_threshold) {
    std::ostringstream msg;
    msg << "check_lapwi: field is not harmonic (Rayleigh quotient " << energy.rayleigh << " > " << harmonic_threshold
        << ")";
    throw std::invalid_argument(msg.str());
  }
  const int n = mesh.num_vertices();
  const int c = space.c();
  const TangentField xi = sharp(ops, mesh, w);
  const TestFunctionSet ts = test_functions(mesh, geom, space, xi);
  const std::vector<double> contraction = shape_contraction(mesh, geom, covariant_gradient(mesh, geom, space, xi));
  const Form0 div = divergence(ops, mesh, xi);

  Eigen::SimplicialLDLT<SparseMatrix> m1(ops.M1);
  if (m1.info() != Eigen::Success) throw std::runtime_error("check_lapwi: M1 factorization failed");
  const Form1 lap = m1.solve(ops.L1 * w);
  const std::vector<Vec4> lap_v = vertex_values(mesh, geom, space, sharp(ops, mesh, lap));

  const Eigen::VectorXd m0 = ops.M0.diagonal();
  const auto mnorm = [&](const Eigen::VectorXd& u) { return std::sqrt((u.array().square() * m0.array()).sum()); };

  double wmax = 0.0;
  for (int i = 0; i < ts.count(); ++i) wmax = std::max(wmax, mnorm(ts.w[i]));

  LapwiResult out;
  for (int i = 1; i <= space.ambient_dim(); ++i) {
    const std::vector<Vec4> E = project_ambient_basis(geom, space, i);
    const SupportFunctions sf = support_functions(geom, space, i);
    const Eigen::VectorXd& wi = ts.w[i - 1];
    Eigen::VectorXd shape(n), grad(n), divt(n), hodge(n);
    for (int p = 0; p < n; ++p) {
      const double H = geom.mean_curvature[p];
      const Eigen::Vector2d e = frame_coords(geom, p, E[p]);
      const Eigen::Vector2d x = frame_coords(geom, p, ts.field[p]);
      shape[p] = (geom.norm_A2[p] - 4.0 * H * H) * wi[p] + 2.0 * H * e.dot(geom.shape[p] * x);
      grad[p] = -2.0 * sf.g[p] * contraction[p];
      divt[p] = 2.0 * c * sf.f[p] * div[p];
      hodge[p] = E[p].dot(lap_v[p]);
    }
    const Eigen::VectorXd lhs = (ops.L0 * wi).array() / m0.array();
    const Eigen::VectorXd r = lhs - shape - grad - divt - hodge;
    double den = mnorm(wi);
    if (den <= 1e-12 * wmax) den = wmax;
    const double res = den > 0.0 ? mnorm(r) / den : mnorm(r);
    out.residual.push_back(res);
    out.max_residual = std::max(out.max_residual, res);
    if (den > 0.0) {
      out.term_shape = std::max(out.term_shape, mnorm(shape) / den);
      out.term_grad = std::max(out.term_grad, mnorm(grad) / den);
      out.term_div = std::max(out.term_div, mnorm(divt) / den);
      out.term_hodge = std::max(out.term_hodge, mnorm(hodge) / den);
    }
  }
  return out;
}

double check_identity_AA(const GeometryData& geom, const AmbientSpace&, const std::vector<Vec4>& field) {
  if (static_cast<int>(field.size()) != geom.size())
    throw std::invalid_argument("check_identity_AA: field size does not match the geometry");
  double out = 0.0;
  for (int p = 0; p < geom.size(); ++p) {
    const Eigen::Vector2d x = frame_coords(geom, p, field[p]);
    const Eigen::Vector2d rx(-x[1], x[0]);
    const Eigen::Matrix2d& A = geom.shape[p];
    const double x2 = x.squaredNorm();
    if (x2 == 0.0) continue;
    const double v = x.dot(A * x) + rx.dot(A * rx) - 2.0 * geom.mean_curvature[p] * x2;
    out = std::max(out, std::abs(v) / ((1.0 + A.norm()) * x2));
  }
  return out;
}

OrthogonalField find_orthogonal_field(const std::vector<TangentField>& fields, const Eigen::MatrixXd& phi,
                                      const SurfaceMesh& mesh, const GeometryData& geom,
                                      const AmbientSpace& space) {
  const int m = static_cast<int>(fields.size());
  if (m == 0) throw std::invalid_argument("find_orthogonal_field: empty field basis");
  if (phi.cols() > 0 && phi.rows() != mesh.num_vertices())
    throw std::invalid_argument("find_orthogonal_field: eigenfunctions do not match the vertex count");
  const int dim = space.ambient_dim();
  const int nk = static_cast<int>(phi.cols());
  OrthogonalField out;
  out.rows = 2 * dim * nk;
  if (out.rows == 0) {
    out.found = true;
    out.coefficients = Eigen::VectorXd::Unit(m, 0);
    out.null_dimension = m;
    return out;
  }
  Eigen::VectorXd m0(mesh.num_vertices());
  for (int p = 0; p < mesh.num_vertices(); ++p) m0[p] = mesh.vertex_areas()[p];
  const Eigen::MatrixXd Mphi = m0.asDiagonal() * phi;
  Eigen::MatrixXd C(out.rows, m);
  for (int j = 0; j < m; ++j) {
    const TestFunctionSet ts = test_functions(mesh, geom, space, fields[j]);
    int row = 0;
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < nk; ++k) {
        C(row++, j) = ts.w[i].dot(Mphi.col(k));
        C(row++, j) = ts.wbar[i].dot(Mphi.col(k));
      }
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > 1e-9 * smax) ++rank;
  out.null_dimension = m - rank;
  out.smallest_singular = m > out.rows ? 0.0 : s[s.size() - 1];
  if (out.null_dimension == 0) return out;
  out.found = true;
  out.coefficients = svd.matrixV().col(m - 1);
  out.residual = smax > 0.0 ? (C * out.coefficients).norm() / smax : 0.0;
  return out;
}

TestFunctionEnergy test_function_energy(const JacobiOperator& J, const TestFunctionSet& ts) {
  TestFunctionEnergy out;
  const Eigen::VectorXd m0 = J.M0.diagonal();
  const auto add = [&](const Eigen::VectorXd& u) {
    out.jacobi += u.dot(J.J * u);
    out.mass += (u.array().square() * m0.array()).sum();
  };
  for (int i = 0; i < ts.count(); ++i) {
    add(ts.w[i]);
    add(ts.wbar[i]);
  }
  return out;
}

int minimal_m(int alpha, int c) { return 2 * (3 + c) * (alpha - 1) + 1; }

namespace {

TangentField combine(const std::vector<TangentField>& fields, const Eigen::VectorXd& coef) {
  TangentField out;
  out.face.assign(fields.front().face.size(), Vec4::Zero());
  for (std::size_t j = 0; j < fields.size(); ++j)
    for (std::size_t f = 0; f < out.face.size(); ++f) out.face[f] += coef[static_cast<long>(j)] * fields[j].face[f];
  return out;
}

} // namespace

std::vector<EspRecord> verify_theorem_esp(const EspInput& in, int alpha_max, double tolerance) {
  if (alpha_max < 1) throw std::invalid_argument("verify_theorem_esp: alpha_max must be positive");
  const int c = in.space->c();
  const double H = in.jacobi->H;
  const SpectrumResult& js = *in.jacobi_spectrum;
  const SpectrumResult& hs = *in.hodge_spectrum;
  if (js.size() < alpha_max)
    throw std::invalid_argument("verify_theorem_esp: only " + std::to_string(js.size()) +
                                " Jacobi eigenvalues computed, need " + std::to_string(alpha_max));
  if (hs.size() < minimal_m(alpha_max, c))
    throw std::invalid_argument("verify_theorem_esp: only " + std::to_string(hs.size()) +
                                " Hodge eigenvalues computed, need " + std::to_string(minimal_m(alpha_max, c)));
  const bool constructive = in.constructive && in.mesh && in.geom && in.ops && hs.eigenvectors.cols() >= hs.size() &&
                            js.eigenvectors.cols() >= alpha_max;
  std::vector<TangentField> fields;
  if (constructive)
    for (int j = 0; j < minimal_m(alpha_max, c); ++j) fields.push_back(sharp(*in.ops, *in.mesh, hs.eigenvectors.col(j)));

  std::vector<EspRecord> out;
  for (int alpha = 1; alpha <= alpha_max; ++alpha) {
    EspRecord r;
    r.alpha = alpha;
    r.m = minimal_m(alpha, c);
    r.lambda_jacobi = js.eigenvalues[alpha - 1];
    r.lambda_hodge = hs.eigenvalues[r.m - 1];
    r.bound = -2.0 * (c + H * H) + r.lambda_hodge;
    r.slack = r.bound - r.lambda_jacobi;
    r.pass = r.slack >= -tolerance;
    if (constructive) {
      const std::vector<TangentField> basis(fields.begin(), fields.begin() + r.m);
      const Eigen::MatrixXd phi = js.eigenvectors.leftCols(alpha - 1);
      const OrthogonalField of = find_orthogonal_field(basis, phi, *in.mesh, *in.geom, *in.space);
      if (of.found) {
        const TestFunctionSet ts = test_functions(*in.mesh, *in.geom, *in.space, combine(basis, of.coefficients));
        const TestFunctionEnergy en = test_function_energy(*in.jacobi, ts);
        if (en.mass > 0.0) {
          r.constructive = true;
          r.test_quotient = en.quotient();
          r.constructive_margin = r.bound - r.test_quotient;
          r.minmax_margin = r.test_quotient - r.lambda_jacobi;
          r.orthogonality_residual = of.residual;
        }
      }
    }
    out.push_back(r);
  }
  return out;
}

IndexReport verify_theorem_ind(const IndexCount& morse, const IndexCount& weak, int genus, const AmbientSpace& space) {
  IndexReport r;
  r.morse_index = morse.count;
  r.weak_index = weak.count;
  r.ambiguous = weak.ambiguous || morse.ambiguous;
  r.weak_index_loose = weak.count_loose;
  r.weak_index_tight = weak.count_tight;
  r.eps_neg = weak.eps;
  r.genus = genus;
  r.c = space.c();
  r.bound = static_cast<double>(genus) / (3 + r.c);
  const int worst = std::min({weak.count, weak.count_loose, weak.count_tight});
  r.margin = worst - r.bound;
  r.pass = r.margin >= 0.0;
  r.integer_bound = (genus + 2 + r.c) / (3 + r.c);
  r.integer_margin = worst - r.integer_bound;
  r.integer_pass = r.integer_margin >= 0.0;
  r.proof_bound = genus / 4.0;
  r.proof_margin = worst - r.proof_bound;
  r.interlacing = weak.count <= morse.count && morse.count <= weak.count + 1;
  r.morse_eigenvalues = morse.spectrum.eigenvalues;
  r.weak_eigenvalues = weak.spectrum.eigenvalues;
  return r;
}

HarmonicMinMax harmonic_minmax(const SurfaceMesh& mesh, const OperatorSet& ops, const GeometryData& geom,
                               const AmbientSpace& space, const JacobiOperator& J, const HarmonicBasis& basis,
                               double tolerance) {
  HarmonicMinMax out;
  out.bound = -2.0 * (space.c() + J.H * J.H);
  out.pass = true;
  out.worst_margin = 0.0;
  for (int j = 0; j < basis.size(); ++j) {
    const TestFunctionSet ts = test_functions(mesh, geom, space, sharp(ops, mesh, basis.form(j)));
    const double q = test_function_energy(J, ts).quotient();
    out.quotient.push_back(q);
    const double margin = out.bound - q;
    out.worst_margin = j == 0 ? margin : std::min(out.worst_margin, margin);
    if (margin < -tolerance * (1.0 + std::abs(out.bound))) out.pass = false;
  }
  return out;
}

} // namespace cmc

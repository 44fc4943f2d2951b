#include "cmclab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace cmc {

int SpectrumResult::count_negative(double eps) const {
  return static_cast<int>(std::count_if(eigenvalues.begin(), eigenvalues.end(), [&](double l) { return l < -eps; }));
}

double SpectrumResult::max_residual() const {
  double out = 0.0;
  for (double r : residuals) out = std::max(out, r);
  return out;
}

double rayleigh_quotient(const SparseMatrix& A, const SparseMatrix& M, const Eigen::VectorXd& x) {
  const double den = x.dot(M * x);
  if (!(den > 0.0)) throw std::invalid_argument("rayleigh_quotient: x has zero M-norm");
  return x.dot(A * x) / den;
}

double gershgorin_scale(const SparseMatrix& A, const SparseMatrix& M) {
  const Eigen::VectorXd d = M.diagonal();
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
  for (int j = 0; j < A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) rows[it.row()] += std::abs(it.value());
  double out = 0.0;
  for (int i = 0; i < A.rows(); ++i) out = std::max(out, rows[i] / d[i]);
  return out;
}

double negative_threshold(double lambda_min, double spectral_scale) {
  return 1e-6 * (std::abs(lambda_min) + spectral_scale);
}

double residual_norm(const SparseMatrix& A, const SparseMatrix& M, const Eigen::VectorXd& x, double lambda) {
  const Eigen::VectorXd Mx = M * x;
  const Eigen::VectorXd r = A * x - lambda * Mx;
  const Eigen::VectorXd d = M.diagonal();
  return std::sqrt((r.array().square() / d.array()).sum()) / std::sqrt(x.dot(Mx));
}

double orthonormality_error(const SparseMatrix& M, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd G = X.transpose() * (M * X);
  return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

namespace {

bool is_diagonal(const SparseMatrix& M) {
  for (int j = 0; j < M.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(M, j); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

void check_inputs(const SparseMatrix& A, const SparseMatrix& M, int k, const Eigen::MatrixXd& C) {
  if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows())
    throw std::invalid_argument("solve_lowest: A and M must be square and of equal size");
  if (k < 1) throw std::invalid_argument("solve_lowest: k must be positive");
  if (C.size() > 0 && C.rows() != A.rows())
    throw std::invalid_argument("solve_lowest: constraint rows do not match the matrix size");
  const double asym = (SparseMatrix(A.transpose()) - A).norm();
  if (asym > 1e-10 * std::max(1.0, A.norm())) throw std::invalid_argument("solve_lowest: A is not symmetric");
  const Eigen::VectorXd d = M.diagonal();
  if (d.minCoeff() <= 0.0) throw std::invalid_argument("solve_lowest: M is not positive definite");
}

// Rank of C^T M C relative to its largest eigenvalue.
int constraint_rank(const SparseMatrix& M, const Eigen::MatrixXd& C) {
  if (C.cols() == 0) return 0;
  const Eigen::MatrixXd G = C.transpose() * (M * C);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  int rank = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] > 1e-12 * top) ++rank;
  return rank;
}

class ConstraintProjector {
public:
  ConstraintProjector(const SparseMatrix& M, const Eigen::MatrixXd& C) : C_(C) {
    if (C.cols() == 0) return;
    MC_ = M * C;
    Eigen::MatrixXd G = C.transpose() * MC_;
    ldlt_.compute(0.5 * (G + G.transpose()));
  }
  void apply(Eigen::MatrixXd& X) const {
    if (C_.cols() == 0) return;
    for (int pass = 0; pass < 2; ++pass) X -= C_ * ldlt_.solve(MC_.transpose() * X);
  }
  // Removes the span(M C) part of a residual; a constrained eigenpair only
  // satisfies A x - lambda M x in span(M C).
  void apply_dual(Eigen::MatrixXd& R) const {
    if (C_.cols() == 0) return;
    R -= MC_ * ldlt_.solve(C_.transpose() * R);
  }

private:
  const Eigen::MatrixXd& C_;
  Eigen::MatrixXd MC_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

void finish(SpectrumResult& out, const SparseMatrix& A, const SparseMatrix& M, int k,
            const ConstraintProjector& proj) {
  out.eigenvalues.resize(k);
  out.eigenvectors.conservativeResize(Eigen::NoChange, k);
  out.residuals.resize(k);
  Eigen::MatrixXd R = A * out.eigenvectors - M * out.eigenvectors * Eigen::VectorXd::Map(out.eigenvalues.data(), k).asDiagonal();
  proj.apply_dual(R);
  const Eigen::VectorXd d = M.diagonal();
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd x = out.eigenvectors.col(j);
    out.residuals[j] = std::sqrt((R.col(j).array().square() / d.array()).sum()) / std::sqrt(x.dot(M * x));
  }
  out.spectral_scale = gershgorin_scale(A, M);
}

SpectrumResult solve_dense(const SparseMatrix& A, const SparseMatrix& M, int k, const Eigen::MatrixXd& C) {
  const int n = static_cast<int>(A.rows());
  const Eigen::MatrixXd Ad(A);
  const Eigen::MatrixXd Md(M);
  Eigen::MatrixXd basis;
  if (C.cols() > 0) {
    const Eigen::MatrixXd B = Md * C;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    basis = Q.rightCols(n - C.cols());
  } else {
    basis = Eigen::MatrixXd::Identity(n, n);
  }
  Eigen::MatrixXd Ar = basis.transpose() * Ad * basis;
  Eigen::MatrixXd Mr = basis.transpose() * Md * basis;
  Ar = 0.5 * (Ar + Ar.transpose());
  Mr = 0.5 * (Mr + Mr.transpose());
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ar, Mr);
  if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed");
  SpectrumResult out;
  out.method = "dense";
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
  out.eigenvectors = basis * es.eigenvectors().leftCols(k);
  finish(out, A, M, k, ConstraintProjector(M, C));
  return out;
}

// Shift sigma >= 0 with A + sigma M positive definite, and its factorization.
struct ShiftedFactor {
  double sigma = 0.0;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

bool try_factor(Eigen::SimplicialLDLT<SparseMatrix>& ldlt, const SparseMatrix& S) {
  ldlt.compute(S);
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd D = ldlt.vectorD();
  return D.minCoeff() > 1e-14 * D.cwiseAbs().maxCoeff();
}

void build_preconditioner(ShiftedFactor& pf, const SparseMatrix& A, const SparseMatrix& M) {
  const Eigen::VectorXd a = A.diagonal();
  const Eigen::VectorXd d = M.diagonal();
  double diag_scale = 0.0;
  for (int i = 0; i < a.size(); ++i) diag_scale = std::max(diag_scale, std::abs(a[i]) / d[i]);
  const double tau = 1e-6 * std::max(diag_scale, 1e-300);
  double sigma = tau;
  if (is_diagonal(M)) {
    // Gershgorin lower bound on the lowest eigenvalue of M^-1 A.
    Eigen::VectorXd off = Eigen::VectorXd::Zero(A.rows());
    for (int j = 0; j < A.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(A, j); it; ++it)
        if (it.row() != it.col()) off[it.row()] += std::abs(it.value());
    double lower = 0.0;
    for (int i = 0; i < a.size(); ++i) lower = std::min(lower, (a[i] - off[i]) / d[i]);
    sigma = tau - lower;
  }
  for (int attempt = 0; attempt < 64; ++attempt) {
    const SparseMatrix S = A + sigma * M;
    if (try_factor(pf.ldlt, S)) {
      pf.sigma = sigma;
      return;
    }
    sigma *= 4.0;
  }
  throw SolverError("could not find a positive definite shift for the preconditioner");
}

// Column-normalized eigen-decomposition orthonormalization of Z in the M inner
// product. Returns T with (Z T)^T M (Z T) = I; drops near-dependent directions.
Eigen::MatrixXd m_orthonormalizer(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& MZ) {
  if (Z.cols() == 0) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd G = Z.transpose() * MZ;
  G = 0.5 * (G + G.transpose());
  Eigen::VectorXd s(G.rows());
  for (int i = 0; i < G.rows(); ++i) s[i] = G(i, i) > 0.0 ? 1.0 / std::sqrt(G(i, i)) : 0.0;
  const Eigen::MatrixXd Gs = s.asDiagonal() * G * s.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gs);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] > 1e-12 * top && top > 0.0) keep.push_back(i);
  Eigen::MatrixXd T(G.rows(), static_cast<long>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    T.col(static_cast<long>(c)) = s.asDiagonal() * es.eigenvectors().col(keep[c]) / std::sqrt(ev[keep[c]]);
  return T;
}

SpectrumResult solve_lobpcg(const SparseMatrix& A, const SparseMatrix& M, int k, const Eigen::MatrixXd& C,
                            const SolverOptions& opt) {
  const int n = static_cast<int>(A.rows());
  const int free_dim = n - static_cast<int>(C.cols());
  const int guard = opt.guard >= 0 ? opt.guard : std::max(8, k / 2);
  const int b = std::min(k + guard, free_dim);
  const Eigen::VectorXd Md = M.diagonal();

  ShiftedFactor pf;
  build_preconditioner(pf, A, M);
  const ConstraintProjector proj(M, C);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(n, b);
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = normal(rng);
  X = pf.ldlt.solve(M * X);
  proj.apply(X);

  Eigen::MatrixXd AX, MX, P, AP, MP;
  Eigen::VectorXd theta;

  // Rayleigh-Ritz on span(X) alone; leaves X M-orthonormal and A-diagonal.
  auto restart = [&]() {
    proj.apply(X);
    MX = M * X;
    const Eigen::MatrixXd T = m_orthonormalizer(X, MX);
    X = X * T;
    MX = MX * T;
    AX = A * X;
    Eigen::MatrixXd Ar = X.transpose() * AX;
    Ar = 0.5 * (Ar + Ar.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ar);
    X = X * es.eigenvectors();
    AX = AX * es.eigenvectors();
    MX = MX * es.eigenvectors();
    theta = es.eigenvalues();
    if (X.cols() < b) throw SolverError("LOBPCG block lost rank");
  };
  restart();

  SpectrumResult out;
  out.method = "lobpcg";
  out.shift = pf.sigma;
  out.seed = opt.seed;

  std::vector<double> res(b, 0.0);
  int it = 0;
  for (;; ++it) {
    Eigen::MatrixXd R = AX - MX * theta.asDiagonal();
    proj.apply_dual(R);
    double scale = 0.0;
    for (int j = 0; j < b; ++j) scale = std::max(scale, std::abs(theta[j]));
    scale = std::max(scale, 1e-300);
    std::vector<int> active;
    bool converged = true;
    for (int j = 0; j < b; ++j) {
      res[j] = std::sqrt((R.col(j).array().square() / Md.array()).sum());
      const bool ok = res[j] <= opt.tolerance * scale;
      if (!ok) active.push_back(j);
      if (j < k && !ok) converged = false;
    }
    if (converged) break;
    if (it >= opt.max_iterations) {
      std::ostringstream msg;
      msg << "LOBPCG did not converge in " << opt.max_iterations << " iterations (max residual "
          << *std::max_element(res.begin(), res.begin() + k) << ")";
      throw SolverError(msg.str(), std::vector<double>(res.begin(), res.begin() + k));
    }

    const int na = static_cast<int>(active.size());
    Eigen::MatrixXd Ra(n, na);
    for (int c = 0; c < na; ++c) Ra.col(c) = R.col(active[c]);
    Eigen::MatrixXd W = pf.ldlt.solve(Ra);
    proj.apply(W);
    // Orthogonalize the new directions against X (twice for stability).
    for (int pass = 0; pass < 2; ++pass) W -= X * (MX.transpose() * W);
    Eigen::MatrixXd AW = A * W;
    Eigen::MatrixXd MW = M * W;
    if (P.cols() > 0) {
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::MatrixXd c = MX.transpose() * P;
        P -= X * c;
        AP -= AX * c;
        MP -= MX * c;
      }
    }
    const int np = static_cast<int>(P.cols());
    Eigen::MatrixXd Z(n, na + np), AZ(n, na + np), MZ(n, na + np);
    Z << W, P;
    AZ << AW, AP;
    MZ << MW, MP;
    const Eigen::MatrixXd T = m_orthonormalizer(Z, MZ);
    const Eigen::MatrixXd Zq = Z * T, AZq = AZ * T, MZq = MZ * T;
    const int q = b + static_cast<int>(Zq.cols());
    Eigen::MatrixXd Q(n, q), AQ(n, q), MQ(n, q);
    Q << X, Zq;
    AQ << AX, AZq;
    MQ << MX, MZq;
    Eigen::MatrixXd Ar = Q.transpose() * AQ;
    Eigen::MatrixXd Mr = Q.transpose() * MQ;
    Ar = 0.5 * (Ar + Ar.transpose());
    Mr = 0.5 * (Mr + Mr.transpose());
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ar, Mr);
    if (es.info() != Eigen::Success) {
      restart();
      P.resize(n, 0);
      AP.resize(n, 0);
      MP.resize(n, 0);
      continue;
    }
    const Eigen::MatrixXd Y = es.eigenvectors().leftCols(b);
    theta = es.eigenvalues().head(b);
    X = Q * Y;
    AX = AQ * Y;
    MX = MQ * Y;
    Eigen::MatrixXd Yz(q - b, na);
    for (int c = 0; c < na; ++c) Yz.col(c) = Y.col(active[c]).tail(q - b);
    P = Zq * Yz;
    AP = AZq * Yz;
    MP = MZq * Yz;
    if ((it + 1) % 20 == 0) {
      restart();
      P.resize(n, 0);
      AP.resize(n, 0);
      MP.resize(n, 0);
    }
  }
  restart();
  out.iterations = it;
  out.eigenvalues.assign(theta.data(), theta.data() + b);
  out.eigenvectors = X;
  finish(out, A, M, k, proj);
  return out;
}

} // namespace

SpectrumResult solve_lowest(const SparseMatrix& A, const SparseMatrix& M, int k, const Eigen::MatrixXd& constraints,
                            const SolverOptions& options) {
  check_inputs(A, M, k, constraints);
  const int n = static_cast<int>(A.rows());
  const int p = static_cast<int>(constraints.cols());
  if (constraint_rank(M, constraints) < p) throw std::invalid_argument("solve_lowest: constraints are rank deficient");
  if (k > n - p) throw std::invalid_argument("solve_lowest: k exceeds the constrained dimension");
  const bool dense = options.method == SolverMethod::Dense ||
                     (options.method == SolverMethod::Auto && n <= options.dense_threshold);
  if (dense) {
    SpectrumResult out = solve_dense(A, M, k, constraints);
    out.seed = options.seed;
    return out;
  }
  return solve_lobpcg(A, M, k, constraints, options);
}

} // namespace cmc

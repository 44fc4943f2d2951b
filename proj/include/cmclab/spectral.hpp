#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace cmc {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class SolverMethod { Auto, Dense, Iterative };

struct SolverOptions {
  SolverMethod method = SolverMethod::Auto;
  // Auto switches to the dense path below this many unknowns.
  int dense_threshold = 500;
  // Convergence: residual <= tolerance * max |Ritz value| of the block.
  double tolerance = 1e-9;
  int max_iterations = 2000;
  std::uint64_t seed = 20171205;
  // Extra block vectors beyond k; negative selects max(8, k/2).
  int guard = -1;
};

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::vector<double> residuals = {})
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

private:
  std::vector<double> residuals_;
};

struct SpectrumResult {
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;     // M-orthonormal columns
  // ||A x - lambda M x|| measured in the diag(M)^-1 norm, with ||x||_M = 1.
  // With constraints the span(M C) component is removed first.
  std::vector<double> residuals;
  int iterations = 0;
  std::string method;
  double shift = 0.0;
  std::uint64_t seed = 0;
  // Gershgorin bound on |lambda| of the pencil (diagonal of M).
  double spectral_scale = 0.0;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  int count_negative(double eps) const;
  double max_residual() const;
};

// The k lowest eigenpairs of A x = lambda M x on the M-orthogonal complement
// of span(constraints). A symmetric, M symmetric positive definite.
SpectrumResult solve_lowest(const SparseMatrix& A, const SparseMatrix& M, int k,
                            const Eigen::MatrixXd& constraints = Eigen::MatrixXd(),
                            const SolverOptions& options = {});

double rayleigh_quotient(const SparseMatrix& A, const SparseMatrix& M, const Eigen::VectorXd& x);

// max_i sum_j |A_ij| / M_ii.
double gershgorin_scale(const SparseMatrix& A, const SparseMatrix& M);

// Guard used when counting negative eigenvalues:
// 1e-6 * (|lambda_min| + spectral scale).
double negative_threshold(double lambda_min, double spectral_scale);

// ||A x - lambda M x||_{diag(M)^-1} / ||x||_M.
double residual_norm(const SparseMatrix& A, const SparseMatrix& M, const Eigen::VectorXd& x, double lambda);

// M-orthogonality defect max |X^T M X - I|.
double orthonormality_error(const SparseMatrix& M, const Eigen::MatrixXd& X);

} // namespace cmc

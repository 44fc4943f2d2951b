#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cmclab/ambient_geometry.hpp"
#include "cmclab/dec.hpp"
#include "cmclab/mesh.hpp"
#include "cmclab/spectral.hpp"

namespace cmc {

class NotCmcError : public GeometryError {
public:
  using GeometryError::GeometryError;
};

// J_w = L0 - M0 diag(|A|^2 + 2c), a weak form against M0.
struct JacobiOperator {
  SparseMatrix J;
  SparseMatrix M0;
  Eigen::VectorXd potential; // |A|^2 + 2c per vertex
  int c = 0;
  double H = 0.0;
};

// Refuses geometry that fails the CMC check.
JacobiOperator assemble_jacobi(const OperatorSet& ops, const GeometryData& geom, const AmbientSpace& space);

// Count of eigenvalues below -eps together with the data behind it. When an
// eigenvalue sits within eps/2 of the boundary the count is ambiguous and the
// counts at -eps/2 and -3eps/2 are both kept.
struct IndexCount {
  int count = 0;
  bool ambiguous = false;
  int count_loose = 0; // eigenvalues below -eps/2
  int count_tight = 0; // eigenvalues below -3eps/2
  double eps = 0.0;
  SpectrumResult spectrum;
};

IndexCount count_negative_eigenvalues(const SpectrumResult& spectrum, double eps);

// Grows the number of requested eigenpairs until the spectrum clears -eps/2.
IndexCount morse_index(const JacobiOperator& J, const SolverOptions& solver = {}, int initial_k = 10);
// Same, restricted to functions with zero mean.
IndexCount weak_index(const JacobiOperator& J, const SolverOptions& solver = {}, int initial_k = 10);

// w_i = <E_i, xi> and wbar_i = <E_i, rotate90(xi)> at the vertices, i = 1..3+c.
struct TestFunctionSet {
  std::vector<Eigen::VectorXd> w;
  std::vector<Eigen::VectorXd> wbar;
  std::vector<Vec4> field; // vertex values of xi
  // max_p |sum_i w_i^2 + wbar_i^2 - 2 |xi|^2| relative to max |xi|^2
  double projection_identity_error = 0.0;

  int count() const { return static_cast<int>(w.size()); }
};

TestFunctionSet test_functions(const SurfaceMesh& mesh, const GeometryData& geom, const AmbientSpace& space,
                               const TangentField& field);

struct MeanZeroCheck {
  double max_abs_integral = 0.0;
  double tolerance = 0.0; // 1e-6 * area * max |xi|
  bool pass = false;
};

MeanZeroCheck check_mean_zero(const SurfaceMesh& mesh, const TestFunctionSet& ts);

struct LapwiResult {
  std::vector<double> residual; // per test function, relative M0-norm
  double max_residual = 0.0;
  // Largest M0-norm of each right-hand-side term relative to |w_i|.
  double term_shape = 0.0;  // (|A|^2 - 4H^2) w_i + 2H <A E_i, xi>
  double term_grad = 0.0;   // -2 g_i <A, grad xi>
  double term_div = 0.0;    // 2c f_i div xi
  double term_hodge = 0.0;  // <E_i, Delta xi>
};

// Weak residual of the Laplacian of the coordinate functions of the harmonic
// field sharp(w). Throws std::invalid_argument when the Rayleigh quotient of w
// exceeds harmonic_threshold.
LapwiResult check_lapwi(const SurfaceMesh& mesh, const OperatorSet& ops, const GeometryData& geom,
                        const AmbientSpace& space, const Form1& w, double harmonic_threshold);

// max over vertices of |<A xi, xi> + <A *xi, *xi> - 2H |xi|^2| divided by
// (1 + |A|) |xi|^2 (max over the field).
double check_identity_AA(const GeometryData& geom, const AmbientSpace& space, const std::vector<Vec4>& field);

struct OrthogonalField {
  bool found = false;
  Eigen::VectorXd coefficients; // unit vector in the field basis
  int rows = 0;                 // 2(3+c)(alpha-1)
  int null_dimension = 0;
  double smallest_singular = 0.0;
  double residual = 0.0; // |C x| / (|C| |x|)
};

// Solves the homogeneous system int w_i(xi) phi_k = int wbar_i(xi) phi_k = 0
// for xi in the span of the given fields; phi are vertex functions.
OrthogonalField find_orthogonal_field(const std::vector<TangentField>& fields, const Eigen::MatrixXd& phi,
                                      const SurfaceMesh& mesh, const GeometryData& geom,
                                      const AmbientSpace& space);

// Rayleigh-type sums for the test functions of one field:
// sum_i (w_i J w_i + wbar_i J wbar_i) and sum_i (w_i M0 w_i + wbar_i M0 wbar_i).
struct TestFunctionEnergy {
  double jacobi = 0.0;
  double mass = 0.0;
  double quotient() const { return jacobi / mass; }
};
TestFunctionEnergy test_function_energy(const JacobiOperator& J, const TestFunctionSet& ts);

int minimal_m(int alpha, int c);

struct EspRecord {
  int alpha = 0;
  int m = 0;
  double lambda_jacobi = 0.0;
  double lambda_hodge = 0.0;
  double bound = 0.0; // -2(c + H^2) + lambda_hodge
  double slack = 0.0;
  bool pass = false;
  // Constructive check through find_orthogonal_field, when eigenfields are given.
  bool constructive = false;
  double test_quotient = 0.0;       // sum int w J w / sum int w^2
  double constructive_margin = 0.0; // bound - test_quotient
  double minmax_margin = 0.0;       // test_quotient - lambda_jacobi
  double orthogonality_residual = 0.0;
};

struct EspInput {
  const SurfaceMesh* mesh = nullptr;
  const GeometryData* geom = nullptr;
  const AmbientSpace* space = nullptr;
  const OperatorSet* ops = nullptr;
  const JacobiOperator* jacobi = nullptr;
  const SpectrumResult* jacobi_spectrum = nullptr; // unconstrained
  const SpectrumResult* hodge_spectrum = nullptr;
  bool constructive = true;
};

// Throws std::invalid_argument when fewer than m(alpha_max) Hodge or alpha_max
// Jacobi eigenvalues are available.
std::vector<EspRecord> verify_theorem_esp(const EspInput& in, int alpha_max, double tolerance = 1e-3);

struct IndexReport {
  int morse_index = 0;
  int weak_index = 0;
  bool ambiguous = false;
  int weak_index_loose = 0;
  int weak_index_tight = 0;
  double eps_neg = 0.0;
  int genus = 0;
  int c = 0;
  double bound = 0.0;       // g / (3 + c)
  double margin = 0.0;      // weak_index - bound (worst case when ambiguous)
  int integer_bound = 0;    // ceil(g / (3 + c))
  double integer_margin = 0.0;
  double proof_bound = 0.0;  // g / 4, the form the argument yields directly
  double proof_margin = 0.0;
  bool pass = false;
  bool integer_pass = false;
  bool interlacing = false; // weak <= morse <= weak + 1
  std::vector<double> morse_eigenvalues;
  std::vector<double> weak_eigenvalues;
};

IndexReport verify_theorem_ind(const IndexCount& morse, const IndexCount& weak, int genus, const AmbientSpace& space);

// Summed min-max inequality for every field of a harmonic basis:
// sum_i int w_i J w_i <= -2(c + H^2) sum_i int w_i^2 (+ tolerance).
struct HarmonicMinMax {
  std::vector<double> quotient;
  double bound = 0.0;
  double worst_margin = 0.0;
  bool pass = false;
};

HarmonicMinMax harmonic_minmax(const SurfaceMesh& mesh, const OperatorSet& ops, const GeometryData& geom,
                               const AmbientSpace& space, const JacobiOperator& J, const HarmonicBasis& basis,
                               double tolerance = 1e-3);

} // namespace cmc

#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cmclab/ambient_geometry.hpp"
#include "cmclab/mesh.hpp"
#include "cmclab/spectral.hpp"

namespace cmc {

using Form0 = Eigen::VectorXd; // one value per vertex
using Form1 = Eigen::VectorXd; // integral along each canonically oriented edge

// Per-face constant tangent vectors.
struct TangentField {
  std::vector<Vec4> face;
  int size() const { return static_cast<int>(face.size()); }
};

struct OperatorSet {
  SparseMatrix d0; // E x V
  SparseMatrix d1; // F x E
  SparseMatrix M0; // lumped barycentric areas
  SparseMatrix M1; // Whitney Galerkin mass
  SparseMatrix M2; // 1 / face area
  SparseMatrix L0; // cotangent stiffness
  SparseMatrix L1; // M1 d0 M0^-1 d0^T M1 + d1^T M2 d1
  // Gradients of the barycentric coordinates of each face, in R^4.
  std::vector<std::array<Vec4, 3>> grad_lambda;
  int ambient_dim = 3;
};

// threads > 1 computes the local face matrices concurrently; the global sums
// are always accumulated in face order, so the result does not depend on the
// thread count.
OperatorSet assemble_operators(const SurfaceMesh& mesh, int threads = 1);

// Per-face orthonormal frame: t1 along the first side, t2 = rotate90(t1).
struct FaceFrame {
  Vec4 t1;
  Vec4 t2;
  Vec4 normal;
};

std::vector<FaceFrame> face_frames(const SurfaceMesh& mesh);

class HarmonicGapError : public std::runtime_error {
public:
  HarmonicGapError(const std::string& what, double below, double above)
      : std::runtime_error(what), below_(below), above_(above) {}
  double below() const { return below_; }
  double above() const { return above_; }

private:
  double below_;
  double above_;
};

struct HarmonicBasis {
  Eigen::MatrixXd forms;           // E x 2g, M1-orthonormal columns
  std::vector<double> rayleigh;    // <L1 w, w> / <M1 w, w>
  std::vector<double> codiff_energy; // d delta part
  std::vector<double> diff_energy;   // delta d part
  double next_eigenvalue = 0.0;    // lambda_{2g+1} of (L1, M1), 0 when g = 0
  double threshold = 0.0;          // 1e-3 * next_eigenvalue
  int genus = 0;

  int size() const { return static_cast<int>(forms.cols()); }
  Form1 form(int i) const { return forms.col(i); }
};

// Tree-cotree generators, Hodge-projected onto ker(delta) and
// M1-orthonormalized, then checked against the spectral gap of (L1, M1).
HarmonicBasis harmonic_basis(const OperatorSet& ops, const SurfaceMesh& mesh, const SolverOptions& solver = {});

// Relative energies of a 1-form: Rayleigh quotient of L1 and its two parts.
struct FormEnergy {
  double rayleigh = 0.0;
  double codiff = 0.0; // <M1 d0 M0^-1 d0^T M1 w, w> / <M1 w, w>
  double diff = 0.0;   // <d1^T M2 d1 w, w> / <M1 w, w>
};
FormEnergy form_energy(const OperatorSet& ops, const Form1& w);

// Quarter turn of each face vector about the oriented face normal.
TangentField rotate90(const TangentField& field, const SurfaceMesh& mesh, double tolerance = 1e-8);

// Whitney interpolation evaluated at the face barycenters.
TangentField sharp(const OperatorSet& ops, const SurfaceMesh& mesh, const Form1& w);

// Edge integral of xi, averaged over the two adjacent faces.
Form1 flat(const SurfaceMesh& mesh, const TangentField& field);

// Area-weighted average of the incident face vectors, re-projected onto the
// tangent plane at each vertex.
std::vector<Vec4> vertex_values(const SurfaceMesh& mesh, const GeometryData& geom, const AmbientSpace& space,
                                const TangentField& field);

// Weak divergence -M0^-1 d0^T M1 flat(xi).
Form0 divergence(const OperatorSet& ops, const SurfaceMesh& mesh, const TangentField& field);

// Per-face Jacobian of the linearly interpolated vertex field, expressed in the
// face frame: G(k, l) = <t_k, D_{t_l} xi>.
std::vector<Eigen::Matrix2d> covariant_gradient(const SurfaceMesh& mesh, const GeometryData& geom,
                                                const AmbientSpace& space, const TangentField& field);

// <A, sym grad xi> at every vertex: the face gradients are lifted to ambient
// tensors, area-averaged onto vertices and contracted with the shape operator.
std::vector<double> shape_contraction(const SurfaceMesh& mesh, const GeometryData& geom,
                                      const std::vector<Eigen::Matrix2d>& grad);

// Writes a real general (or symmetric, lower triangle) Matrix Market file.
void write_matrix_market(const std::string& path, const SparseMatrix& A, bool symmetric);

// Writes d0, d1, M0, M1, M2, L0, L1 as <dir>/<name>.mtx.
void export_operators(const OperatorSet& ops, const std::string& directory);

} // namespace cmc

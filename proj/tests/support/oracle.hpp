#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "cmclab/mesh.hpp"
#include "cmclab/spectral.hpp"

namespace cmc::oracle {

// Closed-form spectra, enumerated by brute force independently of the library.
// Both lists are sorted and carry multiplicity.
struct ExactSpectra {
  std::vector<double> laplace; // functions
  std::vector<double> jacobi;
  std::vector<double> hodge1;
};

// Round sphere of intrinsic radius r, Jacobi potential `potential`.
ExactSpectra sphere_spectra(double r, double potential, int count);
// Flat torus with circle radii a and b = sqrt(1 - a^2), sitting in S^3.
ExactSpectra product_torus_spectra(double a, int count);

// Dense reference pencil solver: Cholesky of M, symmetric eigensolver, and an
// SVD basis for the M-orthogonal complement of the constraints.
std::vector<double> dense_reference(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, int k,
                                    const Eigen::MatrixXd& constraints = Eigen::MatrixXd());

// Random symmetric A and SPD diagonal-dominant sparse M of size n.
void random_pencil(int n, unsigned seed, SparseMatrix& A, SparseMatrix& M, bool diagonal_mass);

// Closed genus-2 surface in R^3: boundary of a box of n-voxel cubes with two
// square tunnels, triangulated with one diagonal per quad.
SurfaceMesh genus2_mesh(int n);

// Reads a fixture from tests/data.
std::string data_path(const std::string& name);

} // namespace cmc::oracle

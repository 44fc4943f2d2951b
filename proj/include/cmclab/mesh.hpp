#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cmc {

// Points live in R^4. Surfaces in R^3 keep the last coordinate zero.
using Vec4 = Eigen::Vector4d;

class InvalidMesh : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  int v0; // v0 < v1; the canonical orientation runs v0 -> v1
  int v1;
  std::array<int, 2> faces;
};

class SurfaceMesh {
public:
  SurfaceMesh() = default;

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int ambient_dim() const { return ambient_dim_; }
  int genus() const { return genus_; }
  int euler_characteristic() const { return num_vertices() - num_edges() + num_faces(); }

  const std::vector<Vec4>& vertices() const { return vertices_; }
  const Vec4& vertex(int v) const { return vertices_[v]; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  const std::array<int, 3>& face(int f) const { return faces_[f]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  // Edge index of the k-th side of face f (side k runs face[k] -> face[k+1]).
  int face_edge(int f, int k) const { return face_edges_[f][k]; }
  // +1 when side k of face f traverses its edge in the canonical direction.
  int face_edge_sign(int f, int k) const { return face_edge_signs_[f][k]; }

  std::span<const int> vertex_faces(int v) const {
    return {vertex_face_list_.data() + vertex_face_offsets_[v],
            vertex_face_list_.data() + vertex_face_offsets_[v + 1]};
  }

  const std::vector<double>& face_areas() const { return face_areas_; }
  const std::vector<double>& vertex_areas() const { return vertex_areas_; }
  double total_area() const { return total_area_; }

  // Unit normal of the face plane implied by the vertex order. In R^4 the
  // normal is taken inside the tangent space of S^3 at the normalized
  // barycenter.
  Vec4 face_normal(int f) const;
  Vec4 face_barycenter(int f) const;

  friend SurfaceMesh build_connectivity(std::vector<Vec4> vertices,
                                        std::vector<std::array<int, 3>> faces, int ambient_dim);

private:
  int ambient_dim_ = 3;
  int genus_ = 0;
  std::vector<Vec4> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> face_edges_;
  std::vector<std::array<int, 3>> face_edge_signs_;
  std::vector<int> vertex_face_offsets_;
  std::vector<int> vertex_face_list_;
  std::vector<double> face_areas_;
  std::vector<double> vertex_areas_;
  double total_area_ = 0.0;
};

// Builds the edge table and adjacency, then validates that the soup is a
// closed, connected, consistently oriented 2-manifold with positive face
// areas. Throws InvalidMesh otherwise.
SurfaceMesh build_connectivity(std::vector<Vec4> vertices, std::vector<std::array<int, 3>> faces,
                               int ambient_dim);

// g = (2 - V + E - F) / 2 for the already validated mesh.
int genus(const SurfaceMesh& mesh);

// Sum of u(p) times the lumped vertex area.
double integrate_scalar(const SurfaceMesh& mesh, std::span<const double> u);

// Same soup with every face reversed.
SurfaceMesh flipped(const SurfaceMesh& mesh);

// Generalized cross product in R^4: <cross4(a, b, c), d> = det[a, b, c, d].
Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c);
// Cross product on the first three coordinates.
Vec4 cross3(const Vec4& a, const Vec4& b);

} // namespace cmc

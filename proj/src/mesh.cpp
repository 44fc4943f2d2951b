#include "cmclab/mesh.hpp"

#include <cmath>
#include <cstdint>
#include <queue>
#include <unordered_map>

#include <Eigen/Dense>

namespace cmc {

namespace {

double triangle_area(const Vec4& p0, const Vec4& p1, const Vec4& p2) {
  const Vec4 u = p1 - p0;
  const Vec4 v = p2 - p0;
  const double uu = u.squaredNorm();
  const double vv = v.squaredNorm();
  const double uv = u.dot(v);
  return 0.5 * std::sqrt(std::max(0.0, uu * vv - uv * uv));
}

std::int64_t edge_key(int a, int b, int nv) {
  return static_cast<std::int64_t>(std::min(a, b)) * nv + std::max(a, b);
}

} // namespace

Vec4 cross3(const Vec4& a, const Vec4& b) {
  return Vec4(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0], 0.0);
}

Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c) {
  // Cofactor expansion of det[a, b, c, e_l] along the last row.
  Vec4 out;
  for (int l = 0; l < 4; ++l) {
    Eigen::Matrix3d m;
    int col = 0;
    for (int j = 0; j < 4; ++j) {
      if (j == l) continue;
      m(0, col) = a[j];
      m(1, col) = b[j];
      m(2, col) = c[j];
      ++col;
    }
    out[l] = ((3 + l) % 2 == 0 ? 1.0 : -1.0) * m.determinant();
  }
  return out;
}

Vec4 SurfaceMesh::face_barycenter(int f) const {
  const auto& t = faces_[f];
  return (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
}

Vec4 SurfaceMesh::face_normal(int f) const {
  const auto& t = faces_[f];
  const Vec4 u = vertices_[t[1]] - vertices_[t[0]];
  const Vec4 v = vertices_[t[2]] - vertices_[t[0]];
  if (ambient_dim_ == 3) return cross3(u, v).normalized();
  const Vec4 psi = face_barycenter(f).normalized();
  return cross4(psi, u - u.dot(psi) * psi, v - v.dot(psi) * psi).normalized();
}

SurfaceMesh build_connectivity(std::vector<Vec4> vertices, std::vector<std::array<int, 3>> faces,
                               int ambient_dim) {
  if (ambient_dim != 3 && ambient_dim != 4)
    throw InvalidMesh("ambient dimension must be 3 or 4, got " + std::to_string(ambient_dim));
  const int nv = static_cast<int>(vertices.size());
  const int nf = static_cast<int>(faces.size());
  if (nv == 0 || nf == 0) throw InvalidMesh("empty mesh");
  if (ambient_dim == 3) {
    for (auto& p : vertices) p[3] = 0.0;
  }

  SurfaceMesh mesh;
  mesh.ambient_dim_ = ambient_dim;

  for (int f = 0; f < nf; ++f) {
    const auto& t = faces[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nv)
        throw InvalidMesh("face " + std::to_string(f) + " references vertex " +
                          std::to_string(t[k]) + " out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[2] == t[0])
      throw InvalidMesh("face " + std::to_string(f) + " repeats a vertex");
  }

  std::unordered_map<std::int64_t, int> edge_index;
  edge_index.reserve(static_cast<std::size_t>(nf) * 2);
  mesh.face_edges_.resize(nf);
  mesh.face_edge_signs_.resize(nf);
  std::vector<int> edge_face_count;
  std::vector<int> edge_sign_sum;
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = faces[f][k];
      const int b = faces[f][(k + 1) % 3];
      const auto key = edge_key(a, b, nv);
      auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(mesh.edges_.size()));
      if (inserted) {
        mesh.edges_.push_back(Edge{std::min(a, b), std::max(a, b), {f, -1}});
        edge_face_count.push_back(0);
        edge_sign_sum.push_back(0);
      }
      const int e = it->second;
      const int sign = a < b ? 1 : -1;
      if (edge_face_count[e] >= 2)
        throw InvalidMesh("non-manifold edge (" + std::to_string(mesh.edges_[e].v0) + ", " +
                          std::to_string(mesh.edges_[e].v1) + ") has more than two faces");
      mesh.edges_[e].faces[edge_face_count[e]] = f;
      ++edge_face_count[e];
      edge_sign_sum[e] += sign;
      mesh.face_edges_[f][k] = e;
      mesh.face_edge_signs_[f][k] = sign;
    }
  }
  for (std::size_t e = 0; e < mesh.edges_.size(); ++e) {
    if (edge_face_count[e] != 2)
      throw InvalidMesh("boundary edge (" + std::to_string(mesh.edges_[e].v0) + ", " +
                        std::to_string(mesh.edges_[e].v1) + "): the surface must be closed");
    if (edge_sign_sum[e] != 0)
      throw InvalidMesh("inconsistent orientation across edge (" +
                        std::to_string(mesh.edges_[e].v0) + ", " +
                        std::to_string(mesh.edges_[e].v1) + ")");
  }

  // Vertex -> face incidence (CSR).
  mesh.vertex_face_offsets_.assign(nv + 1, 0);
  for (const auto& t : faces)
    for (int v : t) ++mesh.vertex_face_offsets_[v + 1];
  for (int v = 0; v < nv; ++v) {
    if (mesh.vertex_face_offsets_[v + 1] == 0)
      throw InvalidMesh("vertex " + std::to_string(v) + " is not used by any face");
    mesh.vertex_face_offsets_[v + 1] += mesh.vertex_face_offsets_[v];
  }
  mesh.vertex_face_list_.resize(mesh.vertex_face_offsets_[nv]);
  {
    std::vector<int> cursor(mesh.vertex_face_offsets_.begin(), mesh.vertex_face_offsets_.end() - 1);
    for (int f = 0; f < nf; ++f)
      for (int v : faces[f]) mesh.vertex_face_list_[cursor[v]++] = f;
  }

  // Each vertex link must be a single fan.
  for (int v = 0; v < nv; ++v) {
    const int begin = mesh.vertex_face_offsets_[v];
    const int count = mesh.vertex_face_offsets_[v + 1] - begin;
    int f = mesh.vertex_face_list_[begin];
    int visited = 0;
    const int start = f;
    // Walk across the edge leaving v in each face.
    do {
      int k = 0;
      while (faces[f][k] != v) ++k;
      const int e = mesh.face_edges_[f][k];
      const auto& ef = mesh.edges_[e].faces;
      f = ef[0] == f ? ef[1] : ef[0];
      ++visited;
    } while (f != start && visited <= count);
    if (visited != count)
      throw InvalidMesh("non-manifold vertex " + std::to_string(v));
  }

  // Connectivity over faces.
  {
    std::vector<char> seen(nf, 0);
    std::queue<int> queue;
    queue.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!queue.empty()) {
      const int f = queue.front();
      queue.pop();
      for (int k = 0; k < 3; ++k) {
        const auto& ef = mesh.edges_[mesh.face_edges_[f][k]].faces;
        const int g = ef[0] == f ? ef[1] : ef[0];
        if (!seen[g]) {
          seen[g] = 1;
          ++reached;
          queue.push(g);
        }
      }
    }
    if (reached != nf) throw InvalidMesh("mesh is disconnected");
  }

  mesh.face_areas_.resize(nf);
  mesh.vertex_areas_.assign(nv, 0.0);
  for (int f = 0; f < nf; ++f) {
    const auto& t = faces[f];
    const double area = triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    if (!(area > 0.0)) throw InvalidMesh("face " + std::to_string(f) + " has zero area");
    mesh.face_areas_[f] = area;
    for (int v : t) mesh.vertex_areas_[v] += area / 3.0;
  }
  mesh.total_area_ = 0.0;
  for (double a : mesh.vertex_areas_) mesh.total_area_ += a;

  const int chi = nv - static_cast<int>(mesh.edges_.size()) + nf;
  if (chi > 2 || (2 - chi) % 2 != 0)
    throw InvalidMesh("Euler characteristic " + std::to_string(chi) +
                      " does not correspond to a closed orientable surface");
  mesh.genus_ = (2 - chi) / 2;

  mesh.vertices_ = std::move(vertices);
  mesh.faces_ = std::move(faces);
  return mesh;
}

int genus(const SurfaceMesh& mesh) {
  const int chi = mesh.euler_characteristic();
  if (chi > 2 || (2 - chi) % 2 != 0)
    throw InvalidMesh("Euler characteristic " + std::to_string(chi) + " is not 2 - 2g");
  return (2 - chi) / 2;
}

double integrate_scalar(const SurfaceMesh& mesh, std::span<const double> u) {
  if (static_cast<int>(u.size()) != mesh.num_vertices())
    throw std::invalid_argument("integrate_scalar: expected " +
                                std::to_string(mesh.num_vertices()) + " values, got " +
                                std::to_string(u.size()));
  double sum = 0.0;
  const auto& area = mesh.vertex_areas();
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * area[i];
  return sum;
}

SurfaceMesh flipped(const SurfaceMesh& mesh) {
  auto faces = mesh.faces();
  for (auto& t : faces) std::swap(t[1], t[2]);
  return build_connectivity(mesh.vertices(), std::move(faces), mesh.ambient_dim());
}

} // namespace cmc

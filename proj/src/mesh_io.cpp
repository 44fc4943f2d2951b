#include "cmclab/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace cmc {

namespace {

// Reads the next line that is neither blank nor a comment.
bool next_content_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& tok, int lineno) {
  try {
    std::size_t used = 0;
    const double value = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return value;
  } catch (const std::exception&) {
    throw MeshParseError("expected a number, got '" + tok + "'", lineno);
  }
}

long to_long(const std::string& tok, int lineno) {
  long value = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw MeshParseError("expected an integer, got '" + tok + "'", lineno);
  return value;
}

SurfaceMesh finish(std::vector<Vec4> vertices, std::vector<std::array<int, 3>> faces, int dim) {
  return build_connectivity(std::move(vertices), std::move(faces), dim);
}

} // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".obj" ? MeshFormat::OBJ : MeshFormat::OFF;
}

SurfaceMesh parse_off(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!next_content_line(in, line, lineno)) throw MeshParseError("empty file", 0);
  auto head = tokens(line);
  int dim = 3;
  if (head[0] == "OFF4") {
    dim = 4;
  } else if (head[0] != "OFF") {
    throw MeshParseError("missing OFF or OFF4 header", lineno);
  }
  head.erase(head.begin());
  if (head.empty()) {
    if (!next_content_line(in, line, lineno)) throw MeshParseError("missing counts line", lineno);
    head = tokens(line);
  }
  if (head.size() < 2) throw MeshParseError("counts line needs vertex and face counts", lineno);
  const long nv = to_long(head[0], lineno);
  const long nf = to_long(head[1], lineno);
  if (nv <= 0 || nf <= 0) throw MeshParseError("vertex and face counts must be positive", lineno);

  std::vector<Vec4> vertices;
  vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_content_line(in, line, lineno))
      throw MeshParseError("unexpected end of file in vertex list", lineno);
    const auto tok = tokens(line);
    if (static_cast<int>(tok.size()) != dim)
      throw MeshParseError("expected " + std::to_string(dim) + " coordinates per vertex, got " +
                               std::to_string(tok.size()),
                           lineno);
    Vec4 p = Vec4::Zero();
    for (int k = 0; k < dim; ++k) p[k] = to_double(tok[k], lineno);
    vertices.push_back(p);
  }

  std::vector<std::array<int, 3>> faces;
  faces.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    if (!next_content_line(in, line, lineno))
      throw MeshParseError("unexpected end of file in face list", lineno);
    const auto tok = tokens(line);
    const long n = to_long(tok[0], lineno);
    if (n != 3) throw MeshParseError("non-triangle face with " + std::to_string(n) + " vertices", lineno);
    if (tok.size() < 4) throw MeshParseError("face line too short", lineno);
    std::array<int, 3> t{};
    for (int k = 0; k < 3; ++k) {
      const long idx = to_long(tok[k + 1], lineno);
      if (idx < 0 || idx >= nv) throw MeshParseError("vertex index out of range", lineno);
      t[k] = static_cast<int>(idx);
    }
    faces.push_back(t);
  }
  return finish(std::move(vertices), std::move(faces), dim);
}

SurfaceMesh parse_obj(std::istream& in) {
  std::string line;
  int lineno = 0;
  std::vector<Vec4> vertices;
  std::vector<std::array<int, 3>> faces;
  while (next_content_line(in, line, lineno)) {
    const auto tok = tokens(line);
    if (tok[0] == "v") {
      if (tok.size() < 4) throw MeshParseError("vertex needs three coordinates", lineno);
      vertices.emplace_back(to_double(tok[1], lineno), to_double(tok[2], lineno),
                            to_double(tok[3], lineno), 0.0);
    } else if (tok[0] == "f") {
      if (tok.size() != 4)
        throw MeshParseError("non-triangle face with " + std::to_string(tok.size() - 1) + " vertices",
                             lineno);
      std::array<int, 3> t{};
      for (int k = 0; k < 3; ++k) {
        const auto& ref = tok[k + 1];
        long idx = to_long(ref.substr(0, ref.find('/')), lineno);
        idx = idx < 0 ? static_cast<long>(vertices.size()) + idx : idx - 1;
        if (idx < 0 || idx >= static_cast<long>(vertices.size()))
          throw MeshParseError("vertex index out of range", lineno);
        t[k] = static_cast<int>(idx);
      }
      faces.push_back(t);
    }
    // Other records (vn, vt, g, o, s, usemtl, ...) are ignored.
  }
  if (vertices.empty() || faces.empty()) throw MeshParseError("no vertices or faces", lineno);
  return finish(std::move(vertices), std::move(faces), 3);
}

SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw MeshParseError("cannot open " + path.string(), 0);
  return format == MeshFormat::OBJ ? parse_obj(in) : parse_off(in);
}

SurfaceMesh load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, format_from_path(path));
}

void write_off(const SurfaceMesh& mesh, std::ostream& out) {
  const int dim = mesh.ambient_dim();
  out << (dim == 4 ? "OFF4\n" : "OFF\n");
  out << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
  out << std::setprecision(17);
  for (const auto& p : mesh.vertices()) {
    for (int k = 0; k < dim; ++k) out << (k ? " " : "") << p[k];
    out << '\n';
  }
  for (const auto& t : mesh.faces()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_obj(const SurfaceMesh& mesh, std::ostream& out) {
  if (mesh.ambient_dim() != 3)
    throw std::invalid_argument("OBJ output supports only meshes in R^3; use OFF4");
  out << std::setprecision(17);
  for (const auto& p : mesh.vertices()) out << "v " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  for (const auto& t : mesh.faces())
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (format == MeshFormat::OBJ)
    write_obj(mesh, out);
  else
    write_off(mesh, out);
}

void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path) {
  save_mesh(mesh, path, format_from_path(path));
}

} // namespace cmc

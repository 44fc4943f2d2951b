#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "cmclab/mesh.hpp"

namespace cmc {

enum class MeshFormat { OFF, OBJ };

class MeshParseError : public std::runtime_error {
public:
  MeshParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// Picks the format from the extension: .obj -> OBJ, anything else -> OFF.
MeshFormat format_from_path(const std::filesystem::path& path);

// OFF files may start with the header token OFF4, in which case every vertex
// line carries four coordinates and the mesh is treated as immersed in S^3.
// OBJ is always three-dimensional. Faces must be triangles.
SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
SurfaceMesh load_mesh(const std::filesystem::path& path);

SurfaceMesh parse_off(std::istream& in);
SurfaceMesh parse_obj(std::istream& in);

// Writes OFF (or OFF4 when the mesh lives in R^4) or OBJ with 17 significant
// digits.
void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path, MeshFormat format);
void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path);

void write_off(const SurfaceMesh& mesh, std::ostream& out);
void write_obj(const SurfaceMesh& mesh, std::ostream& out);

} // namespace cmc

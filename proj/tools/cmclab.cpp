// Command-line front end: generate, spectrum, verify, export-operators.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cmclab/dec.hpp"
#include "cmclab/mesh_io.hpp"
#include "cmclab/report.hpp"
#include "cmclab/stability.hpp"
#include "cmclab/surface_zoo.hpp"

namespace fs = std::filesystem;
using namespace cmc;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SurfaceFlags {
  std::string surface;
  std::string mesh;
  double radius = 1.0;
  double rho = 1.0471975511965976; // pi/3
  double a = 0.70710678118654752;
  std::string res;
};

struct SolverFlags {
  std::uint64_t seed = SolverOptions{}.seed;
  int threads = 1;
  double tol = SolverOptions{}.tolerance;
  int max_iter = SolverOptions{}.max_iterations;

  SolverOptions options() const {
    SolverOptions o;
    o.seed = seed;
    o.tolerance = tol;
    o.max_iterations = max_iter;
    return o;
  }
};

void add_surface_flags(CLI::App* app, SurfaceFlags& f, bool allow_mesh) {
  app->add_option("--surface", f.surface, "sphere-r3 | geodesic-sphere-s3 | product-torus-s3");
  if (allow_mesh) app->add_option("--mesh", f.mesh, "OFF, OFF4 or OBJ mesh to ingest");
  app->add_option("--radius", f.radius, "sphere radius in R^3");
  app->add_option("--rho", f.rho, "geodesic radius in S^3");
  app->add_option("--a", f.a, "first circle radius of the product torus");
  app->add_option("--res", f.res, "subdivision level, or N / NxM torus grid");
}

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--seed", f.seed, "start-vector seed");
  app->add_option("--threads", f.threads, "threads for operator assembly")->check(CLI::PositiveNumber);
  app->add_option("--tol", f.tol, "eigensolver relative tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-iter", f.max_iter, "eigensolver iteration budget")->check(CLI::PositiveNumber);
}

ZooSpec parse_spec(const SurfaceFlags& f) {
  const auto kind = zoo_kind_from_name(f.surface);
  if (!kind) throw UsageError("unknown surface '" + f.surface + "'");
  ZooSpec spec;
  spec.kind = *kind;
  switch (*kind) {
  case ZooKind::RoundSphereR3:
    spec.parameter = f.radius;
    spec.resolution = kDefaultSphereLevel;
    break;
  case ZooKind::GeodesicSphereS3:
    spec.parameter = f.rho;
    spec.resolution = kDefaultSphereLevel;
    break;
  case ZooKind::ProductTorusS3:
    spec.parameter = f.a;
    spec.resolution = kDefaultTorusGrid;
    break;
  }
  if (!f.res.empty()) {
    const auto x = f.res.find('x');
    try {
      std::size_t used = 0;
      spec.resolution = std::stoi(f.res.substr(0, x), &used);
      if (used != (x == std::string::npos ? f.res.size() : x)) throw std::invalid_argument(f.res);
      if (x != std::string::npos) {
        if (*kind != ZooKind::ProductTorusS3) throw UsageError("NxM resolution applies only to tori");
        spec.resolution_v = std::stoi(f.res.substr(x + 1), &used);
        if (used != f.res.size() - x - 1) throw std::invalid_argument(f.res);
      }
    } catch (const std::logic_error&) {
      throw UsageError("cannot parse --res '" + f.res + "'");
    }
  }
  try {
    validate(spec);
  } catch (const InvalidSpec& e) {
    throw UsageError(e.what());
  }
  return spec;
}

struct Loaded {
  Surface surface;
  std::optional<ZooSpec> spec;
};

Loaded load_surface(const SurfaceFlags& f) {
  if (!f.mesh.empty() && !f.surface.empty()) throw UsageError("pass either --surface or --mesh, not both");
  if (!f.mesh.empty()) {
    try {
      return {from_mesh(load_mesh(f.mesh)), std::nullopt};
    } catch (const MeshParseError& e) {
      throw UsageError(f.mesh + ": " + e.what());
    } catch (const InvalidMesh& e) {
      throw UsageError(f.mesh + ": " + e.what());
    }
  }
  if (f.surface.empty()) throw UsageError("one of --surface or --mesh is required");
  const ZooSpec spec = parse_spec(f);
  return {generate(spec), spec};
}

fs::path output_dir() {
  const char* env = std::getenv("CMCLAB_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::current_path();
}

fs::path resolve_output(const std::string& out, const std::string& fallback) {
  if (!out.empty()) return fs::path(out);
  return output_dir() / fallback;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"CMC surface stability lab"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults");

  SurfaceFlags sf;
  SolverFlags solver;
  std::string out;

  CLI::App* gen = app.add_subcommand("generate", "write a zoo surface mesh");
  add_surface_flags(gen, sf, false);
  gen->add_option("--out", out, "mesh file (.off, .off4 or .obj)");

  std::string which = "jacobi";
  int k = 10;
  CLI::App* spec_cmd = app.add_subcommand("spectrum", "lowest eigenvalues as CSV");
  add_surface_flags(spec_cmd, sf, true);
  add_solver_flags(spec_cmd, solver);
  spec_cmd->add_option("--which", which, "jacobi | jacobi-mean-zero | hodge1 | laplace0")
      ->check(CLI::IsMember({"jacobi", "jacobi-mean-zero", "hodge1", "laplace0"}));
  spec_cmd->add_option("-k", k, "number of eigenvalues")->check(CLI::PositiveNumber);
  spec_cmd->add_option("--out", out, "CSV file (default stdout)");

  VerifyOptions vopt;
  CLI::App* verify = app.add_subcommand("verify", "run all checks and write a JSON report");
  add_surface_flags(verify, sf, true);
  add_solver_flags(verify, solver);
  verify->add_option("--alpha-max", vopt.alpha_max, "largest alpha for the eigenvalue estimate")
      ->check(CLI::PositiveNumber);
  verify->add_option("--levels", vopt.levels, "torus grids for the refinement study")->delimiter(',');
  verify->add_flag("--timings", vopt.timings, "include wall-clock timings (breaks byte-identical output)");
  verify->add_option("--out", out, "report path (default $CMCLAB_OUTPUT_DIR/report.json)");

  CLI::App* exp = app.add_subcommand("export-operators", "write d0, d1, M0, M1, M2, L0, L1 as Matrix Market");
  add_surface_flags(exp, sf, true);
  add_solver_flags(exp, solver);
  exp->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      if (sf.surface.empty()) throw UsageError("--surface is required");
      const ZooSpec spec = parse_spec(sf);
      const Surface s = generate(spec);
      const fs::path path = resolve_output(out, zoo_kind_name(spec.kind) + (s.mesh.ambient_dim() == 4 ? ".off4" : ".off"));
      ensure_parent(path);
      save_mesh(s.mesh, path);
      std::cout << path.string() << ": V=" << s.mesh.num_vertices() << " F=" << s.mesh.num_faces()
                << " genus=" << s.mesh.genus() << "\n";
      return 0;
    }

    const Loaded loaded = load_surface(sf);
    const Surface& s = loaded.surface;
    const SolverOptions sopt = solver.options();

    if (spec_cmd->parsed()) {
      const OperatorSet ops = assemble_operators(s.mesh, solver.threads);
      SpectrumResult result;
      if (which == "laplace0") {
        result = solve_lowest(ops.L0, ops.M0, k, Eigen::MatrixXd(), sopt);
      } else if (which == "hodge1") {
        result = solve_lowest(ops.L1, ops.M1, k, Eigen::MatrixXd(), sopt);
      } else {
        JacobiOperator J;
        try {
          J = assemble_jacobi(ops, s.geometry, s.space);
        } catch (const NotCmcError& e) {
          throw UsageError(e.what());
        }
        const Eigen::MatrixXd C =
            which == "jacobi" ? Eigen::MatrixXd() : Eigen::MatrixXd::Ones(s.mesh.num_vertices(), 1);
        result = solve_lowest(J.J, J.M0, k, C, sopt);
      }
      if (out.empty()) {
        write_spectrum_csv(std::cout, result);
      } else {
        const fs::path path(out);
        ensure_parent(path);
        std::ofstream os(path);
        if (!os) throw UsageError("cannot write " + out);
        write_spectrum_csv(os, result);
      }
      return 0;
    }

    if (verify->parsed()) {
      vopt.solver = sopt;
      vopt.threads = solver.threads;
      const VerificationReport report = run_verification(s, loaded.spec, vopt);
      const fs::path path = resolve_output(out, "report.json");
      ensure_parent(path);
      std::ofstream os(path);
      if (!os) throw UsageError("cannot write " + path.string());
      os << report.json.dump(2) << "\n";
      os.close();
      std::cout << path.string() << ": " << (report.pass ? "PASS" : "FAIL") << "\n";
      return report.pass ? 0 : 2;
    }

    if (exp->parsed()) {
      const OperatorSet ops = assemble_operators(s.mesh, solver.threads);
      const fs::path dir = resolve_output(out, "operators");
      export_operators(ops, dir.string());
      std::cout << dir.string() << ": wrote 7 matrices\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

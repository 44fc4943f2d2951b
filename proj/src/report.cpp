#include "cmclab/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>

#include "cmclab/dec.hpp"
#include "cmclab/stability.hpp"

namespace cmc {

int gap_kernel_dimension(const std::vector<double>& eigenvalues, double factor) {
  int best = 0;
  for (std::size_t j = 1; j < eigenvalues.size(); ++j) {
    const double next = eigenvalues[j];
    if (!(next > 0.0)) continue;
    bool ok = true;
    for (std::size_t i = 0; i < j && ok; ++i) ok = eigenvalues[i] < factor * next;
    if (ok) best = static_cast<int>(j);
  }
  return best;
}

std::vector<int> multiplicity_groups(const std::vector<double>& eigenvalues, double rel_tol) {
  std::vector<int> out(eigenvalues.size(), 0);
  for (std::size_t i = 1; i < eigenvalues.size(); ++i) {
    const double scale = std::max(1.0, std::abs(eigenvalues[i]));
    out[i] = out[i - 1] + (std::abs(eigenvalues[i] - eigenvalues[i - 1]) > rel_tol * scale ? 1 : 0);
  }
  return out;
}

void write_spectrum_csv(std::ostream& os, const SpectrumResult& spectrum) {
  const std::vector<int> groups = multiplicity_groups(spectrum.eigenvalues);
  os << "index,eigenvalue,residual,group\n";
  char buf[128];
  for (int i = 0; i < spectrum.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.3e,%d\n", i + 1, spectrum.eigenvalues[i], spectrum.residuals[i],
                  groups[i]);
    os << buf;
  }
}

bool within_relative(double value, double exact, double tol, double floor) {
  return std::abs(value - exact) <= tol * std::max(std::abs(exact), floor);
}

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
public:
  void lap(const std::string& name) {
    const auto now = Clock::now();
    laps_.emplace_back(name, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }
  Json json() const {
    Json j = Json::object();
    double total = 0.0;
    for (const auto& [name, t] : laps_) {
      j[name] = t;
      total += t;
    }
    j["total"] = total;
    return j;
  }

private:
  Clock::time_point last_ = Clock::now();
  std::vector<std::pair<std::string, double>> laps_;
};

constexpr double kAlgebraicTolerance = 1e-10;
constexpr double kGaussBonnetTolerance = 1e-3;
constexpr double kEspTolerance = 1e-3;

Json spectrum_json(const SpectrumResult& s) {
  Json j;
  j["method"] = s.method;
  j["iterations"] = s.iterations;
  j["shift"] = s.shift;
  j["spectral_scale"] = s.spectral_scale;
  j["eigenvalues"] = s.eigenvalues;
  j["residuals"] = s.residuals;
  return j;
}

Json index_json(const IndexCount& c) {
  Json j;
  j["count"] = c.count;
  j["eps_neg"] = c.eps;
  j["ambiguous"] = c.ambiguous;
  j["count_at_half_eps"] = c.count_loose;
  j["count_at_three_half_eps"] = c.count_tight;
  return j;
}

double max_of(const std::vector<double>& v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

TangentField random_tangent_field(const SurfaceMesh& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  TangentField f;
  f.face.resize(mesh.num_faces());
  for (int i = 0; i < mesh.num_faces(); ++i) {
    Vec4 x(normal(rng), normal(rng), normal(rng), mesh.ambient_dim() == 4 ? normal(rng) : 0.0);
    const Vec4 n = mesh.face_normal(i);
    x -= x.dot(n) * n;
    if (mesh.ambient_dim() == 4) {
      const Vec4 psi = mesh.face_barycenter(i).normalized();
      x -= x.dot(psi) * psi;
      x -= x.dot(n) * n;
    }
    f.face[i] = x;
  }
  return f;
}

// Max over harmonic fields of the relative lapwi residual at one resolution.
struct LapwiLevel {
  std::string resolution;
  double residual = 0.0;
  double term_grad = 0.0;
  double term_div = 0.0;
  double term_hodge = 0.0;
};

LapwiLevel lapwi_level(const Surface& s, const OperatorSet& ops, const HarmonicBasis& basis) {
  LapwiLevel out;
  out.resolution = s.resolution;
  for (int j = 0; j < basis.size(); ++j) {
    const LapwiResult r = check_lapwi(s.mesh, ops, s.geometry, s.space, basis.form(j), basis.threshold);
    out.residual = std::max(out.residual, r.max_residual);
    out.term_grad = std::max(out.term_grad, r.term_grad);
    out.term_div = std::max(out.term_div, r.term_div);
    out.term_hodge = std::max(out.term_hodge, r.term_hodge);
  }
  return out;
}

Json analytic_comparison(const std::vector<double>& computed, const std::vector<double>& exact, double tol,
                         double floor) {
  Json j;
  j["tolerance"] = tol;
  j["floor"] = floor;
  j["computed"] = computed;
  j["exact"] = exact;
  double worst = 0.0;
  bool pass = computed.size() >= exact.size();
  for (std::size_t i = 0; i < exact.size() && i < computed.size(); ++i) {
    worst = std::max(worst, std::abs(computed[i] - exact[i]) / std::max(std::abs(exact[i]), floor));
    pass = pass && within_relative(computed[i], exact[i], tol, floor);
  }
  j["max_relative_error"] = worst;
  j["pass"] = pass;
  return j;
}

} // namespace

VerificationReport run_verification(const Surface& surface, const std::optional<ZooSpec>& spec,
                                    const VerifyOptions& opt) {
  Stopwatch clock;
  const SurfaceMesh& mesh = surface.mesh;
  const GeometryData& geom = surface.geometry;
  const AmbientSpace& space = surface.space;
  const int c = space.c();
  const int g = mesh.genus();
  bool pass = true;

  Json j;
  j["schema_version"] = kReportSchemaVersion;
  {
    Json s;
    s["kind"] = surface.kind;
    s["ambient"] = space.name();
    Json params = Json::object();
    for (const auto& [k, v] : surface.parameters) params[k] = v;
    s["parameters"] = params;
    s["resolution"] = surface.resolution;
    s["geometry_source"] = geom.source == GeometrySource::Analytic ? "analytic" : "fitted";
    s["normal_convention"] = geom.normal_convention;
    s["solver_seed"] = opt.solver.seed;
    s["threads"] = opt.threads;
    j["surface"] = s;
  }
  j["topology"] = {{"V", mesh.num_vertices()},
                   {"E", mesh.num_edges()},
                   {"F", mesh.num_faces()},
                   {"genus", g},
                   {"euler_characteristic", mesh.euler_characteristic()}};
  j["tolerances"] = {{"algebraic", kAlgebraicTolerance},
                     {"gauss_bonnet_relative", kGaussBonnetTolerance},
                     {"harmonic_gap_factor", 1e-3},
                     {"mean_zero_factor", 1e-6},
                     {"theorem_esp_slack", kEspTolerance},
                     {"analytic_relative", opt.analytic_tolerance},
                     {"solver_tolerance", opt.solver.tolerance},
                     {"eps_neg_factor", 1e-6}};

  const OperatorSet ops = assemble_operators(mesh, opt.threads);
  clock.lap("assemble");
  Json checks;
  std::mt19937_64 rng(opt.solver.seed);

  // Algebraic identities.
  {
    const bool analytic = geom.source == GeometrySource::Analytic;
    Json a;
    const SparseMatrix dd = ops.d1 * ops.d0;
    double d1d0 = 0.0;
    for (int k = 0; k < dd.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(dd, k); it; ++it) d1d0 = std::max(d1d0, std::abs(it.value()));
    const TangentField xi = random_tangent_field(mesh, rng);
    const TangentField rr = rotate90(rotate90(xi, mesh), mesh);
    double rot = 0.0;
    for (int f = 0; f < mesh.num_faces(); ++f)
      rot = std::max(rot, (rr.face[f] + xi.face[f]).norm() / std::max(xi.face[f].norm(), 1e-300));
    const std::vector<Vec4> xv = vertex_values(mesh, geom, space, xi);
    const double aa = check_identity_AA(geom, space, xv);
    const double gauss = max_of(gauss_equation_residual(geom, space));
    const double shape = max_of(shape_identity_residual(geom));
    a["d1_d0"] = {{"value", d1d0}, {"pass", d1d0 == 0.0}};
    a["rotate90_squared"] = {{"value", rot}, {"pass", rot <= kAlgebraicTolerance}};
    a["identity_AA"] = {{"value", aa}, {"pass", aa <= kAlgebraicTolerance}};
    a["gauss_equation"] = {{"value", gauss}, {"pass", !analytic || gauss <= kAlgebraicTolerance}};
    a["shape_identity"] = {{"value", shape}, {"pass", !analytic || shape <= kAlgebraicTolerance}};
    a["geometry_analytic"] = analytic;
    const bool ok = d1d0 == 0.0 && rot <= kAlgebraicTolerance && aa <= kAlgebraicTolerance &&
                    (!analytic || (gauss <= kAlgebraicTolerance && shape <= kAlgebraicTolerance));
    double worst = std::max({d1d0, rot, aa});
    if (analytic) worst = std::max({worst, gauss, shape});
    a["max_value"] = worst;
    a["tolerance"] = kAlgebraicTolerance;
    a["pass"] = ok;
    pass = pass && ok;
    checks["algebraic"] = a;
  }

  // Gauss-Bonnet, by quadrature of K and by angle defects.
  {
    double quad = 0.0;
    for (int p = 0; p < mesh.num_vertices(); ++p) quad += geom.gauss_curvature[p] * mesh.vertex_areas()[p];
    double defect = 0.0;
    for (int p = 0; p < mesh.num_vertices(); ++p) {
      double angle = 0.0;
      for (int f : mesh.vertex_faces(p)) {
        const auto& t = mesh.face(f);
        int k = 0;
        while (t[k] != p) ++k;
        const Vec4 u = mesh.vertex(t[(k + 1) % 3]) - mesh.vertex(p);
        const Vec4 v = mesh.vertex(t[(k + 2) % 3]) - mesh.vertex(p);
        angle += std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0));
      }
      defect += 2.0 * std::numbers::pi - angle;
    }
    const double expected = 2.0 * std::numbers::pi * mesh.euler_characteristic();
    const double scale = 2.0 * std::numbers::pi * std::max(1, std::abs(mesh.euler_characteristic()));
    const double err_quad = std::abs(quad - expected) / scale;
    const double err_defect = std::abs(defect - expected) / scale;
    const bool ok = err_quad <= kGaussBonnetTolerance && err_defect <= kGaussBonnetTolerance;
    checks["gauss_bonnet"] = {{"integral_K", quad},          {"angle_defect_sum", defect},
                              {"expected", expected},        {"relative_error", err_quad},
                              {"angle_defect_error", err_defect}, {"tolerance", kGaussBonnetTolerance},
                              {"pass", ok}};
    pass = pass && ok;
  }
  clock.lap("identities");

  // Hodge spectrum and harmonic fields.
  const int k_hodge = std::max({minimal_m(opt.alpha_max, c), opt.analytic_count, 2 * g + 1});
  const SpectrumResult hodge = solve_lowest(ops.L1, ops.M1, k_hodge, Eigen::MatrixXd(), opt.solver);
  clock.lap("hodge_spectrum");
  std::optional<HarmonicBasis> basis;
  {
    Json h;
    h["expected_dimension"] = 2 * g;
    const int kdim = gap_kernel_dimension(hodge.eigenvalues);
    h["gap_kernel_dimension"] = kdim;
    bool ok = kdim == 2 * g;
    try {
      basis = harmonic_basis(ops, mesh, opt.solver);
      h["basis_size"] = basis->size();
      h["next_eigenvalue"] = basis->next_eigenvalue;
      h["threshold"] = basis->threshold;
      double worst = 0.0;
      for (int i = 0; i < basis->size(); ++i)
        worst = std::max({worst, basis->rayleigh[i], basis->codiff_energy[i], basis->diff_energy[i]});
      h["max_energy"] = worst;
      ok = ok && basis->size() == 2 * g;
    } catch (const HarmonicGapError& e) {
      h["error"] = e.what();
      h["below"] = e.below();
      h["above"] = e.above();
      ok = false;
    }
    h["first_nonzero_eigenvalue"] = kdim < hodge.size() ? hodge.eigenvalues[kdim] : 0.0;
    h["pass"] = ok;
    pass = pass && ok;
    checks["harmonic"] = h;
  }
  clock.lap("harmonic_basis");

  if (basis && basis->size() > 0) {
    Json integrals = Json::array(), tolerances = Json::array();
    bool ok = true;
    for (int i = 0; i < basis->size(); ++i) {
      const TestFunctionSet ts = test_functions(mesh, geom, space, sharp(ops, mesh, basis->form(i)));
      const MeanZeroCheck m = check_mean_zero(mesh, ts);
      integrals.push_back(m.max_abs_integral);
      tolerances.push_back(m.tolerance);
      ok = ok && m.pass;
    }
    checks["mean_zero"] = {{"applicable", true}, {"max_abs_integral", integrals}, {"tolerance", tolerances}, {"pass", ok}};
    pass = pass && ok;
  } else {
    checks["mean_zero"] = {{"applicable", false}};
  }

  const CmcCheck cmc = check_cmc(geom);
  checks["cmc"] = {{"median_H", cmc.median_H},
                   {"max_deviation", cmc.max_deviation},
                   {"tolerance", cmc.tolerance},
                   {"pass", cmc.is_cmc}};
  Json spectra;
  spectra["hodge1"] = spectrum_json(hodge);
  if (!cmc.is_cmc) {
    pass = false;
    checks["theorem_ind"] = {{"applicable", false}, {"reason", "surface is not CMC"}};
    checks["theorem_esp"] = {{"applicable", false}, {"reason", "surface is not CMC"}};
  } else {
    const JacobiOperator J = assemble_jacobi(ops, geom, space);
    const int k_jac = std::max(opt.analytic_count, opt.alpha_max);
    const IndexCount morse = morse_index(J, opt.solver, k_jac);
    const IndexCount weak = weak_index(J, opt.solver, k_jac);
    clock.lap("jacobi_spectra");
    spectra["jacobi_full"] = spectrum_json(morse.spectrum);
    spectra["jacobi_full"]["index"] = index_json(morse);
    spectra["jacobi_mean_zero"] = spectrum_json(weak.spectrum);
    spectra["jacobi_mean_zero"]["index"] = index_json(weak);

    const IndexReport ind = verify_theorem_ind(morse, weak, g, space);
    checks["theorem_ind"] = {{"applicable", true},
                             {"morse_index", ind.morse_index},
                             {"weak_index", ind.weak_index},
                             {"ambiguous", ind.ambiguous},
                             {"weak_index_at_half_eps", ind.weak_index_loose},
                             {"weak_index_at_three_half_eps", ind.weak_index_tight},
                             {"eps_neg", ind.eps_neg},
                             {"genus", ind.genus},
                             {"bound", ind.bound},
                             {"margin", ind.margin},
                             {"pass", ind.pass},
                             {"integer_bound", ind.integer_bound},
                             {"integer_margin", ind.integer_margin},
                             {"integer_pass", ind.integer_pass},
                             {"proof_bound", ind.proof_bound},
                             {"proof_margin", ind.proof_margin},
                             {"interlacing", ind.interlacing}};
    pass = pass && ind.pass && ind.interlacing;

    EspInput in;
    in.mesh = &mesh;
    in.geom = &geom;
    in.space = &space;
    in.ops = &ops;
    in.jacobi = &J;
    in.jacobi_spectrum = &morse.spectrum;
    in.hodge_spectrum = &hodge;
    const std::vector<EspRecord> esp = verify_theorem_esp(in, opt.alpha_max, kEspTolerance);
    Json records = Json::array();
    bool esp_ok = true;
    double min_slack = std::numeric_limits<double>::infinity();
    for (const EspRecord& r : esp) {
      min_slack = std::min(min_slack, r.slack);
      Json rec = {{"alpha", r.alpha},
                  {"m", r.m},
                  {"lambda_jacobi", r.lambda_jacobi},
                  {"lambda_hodge", r.lambda_hodge},
                  {"bound", r.bound},
                  {"slack", r.slack},
                  {"pass", r.pass}};
      if (r.constructive)
        rec["constructive"] = {{"test_quotient", r.test_quotient},
                               {"bound_margin", r.constructive_margin},
                               {"minmax_margin", r.minmax_margin},
                               {"orthogonality_residual", r.orthogonality_residual}};
      records.push_back(rec);
      esp_ok = esp_ok && r.pass;
    }
    checks["theorem_esp"] = {{"applicable", true}, {"records", records}, {"min_slack", min_slack}, {"pass", esp_ok}};
    pass = pass && esp_ok;
    clock.lap("theorem_esp");

    if (basis && basis->size() > 0) {
      const HarmonicMinMax mm = harmonic_minmax(mesh, ops, geom, space, J, *basis);
      checks["harmonic_minmax"] = {{"applicable", true},
                                   {"bound", mm.bound},
                                   {"quotients", mm.quotient},
                                   {"worst_margin", mm.worst_margin},
                                   {"pass", mm.pass}};
      pass = pass && mm.pass;
    } else {
      checks["harmonic_minmax"] = {{"applicable", false}};
    }

    // Refinement study of the coordinate Laplacian identity.
    if (opt.lapwi && basis && basis->size() > 0) {
      std::vector<LapwiLevel> levels;
      const bool torus = spec && spec->kind == ZooKind::ProductTorusS3;
      std::vector<int> grid = opt.levels;
      if (grid.empty() && torus) grid = {32, 64, 128};
      if (torus && !grid.empty()) {
        for (int n : grid) {
          if (n == spec->resolution && spec->grid_v() == spec->resolution) {
            levels.push_back(lapwi_level(surface, ops, *basis));
            continue;
          }
          const Surface s = generate(ZooSpec::product_torus(spec->parameter, n));
          const OperatorSet o = assemble_operators(s.mesh, opt.threads);
          const HarmonicBasis hb = harmonic_basis(o, s.mesh, opt.solver);
          levels.push_back(lapwi_level(s, o, hb));
        }
      } else {
        levels.push_back(lapwi_level(surface, ops, *basis));
      }
      Json lv = Json::array();
      for (const auto& l : levels)
        lv.push_back({{"resolution", l.resolution},
                      {"residual", l.residual},
                      {"grad_term", l.term_grad},
                      {"div_term", l.term_div},
                      {"hodge_term", l.term_hodge}});
      Json ratios = Json::array();
      bool ok = levels.size() >= 2;
      const double floor = 1e-10;
      for (std::size_t i = 1; i < levels.size(); ++i) {
        const double ratio =
            levels[i].residual > 0.0 ? levels[i - 1].residual / levels[i].residual : std::numeric_limits<double>::max();
        ratios.push_back(std::min(ratio, 1e300));
        ok = ok && (ratio >= 2.0 || levels[i].residual <= floor);
      }
      Json lj = {{"applicable", levels.size() >= 2}, {"levels", lv}, {"ratios", ratios}, {"rounding_floor", floor}};
      if (levels.size() >= 2) {
        lj["pass"] = ok;
        pass = pass && ok;
      }
      checks["lapwi"] = lj;
      clock.lap("lapwi");
    } else {
      checks["lapwi"] = {{"applicable", false}};
    }

    if (spec) {
      const AnalyticSpectra exact = analytic_spectra(*spec, opt.analytic_count);
      const double jac_floor = J.potential.mean();
      double hodge_floor = 0.0;
      for (double v : exact.hodge1)
        if (v > 1e-12) {
          hodge_floor = v;
          break;
        }
      std::vector<double> jc(morse.spectrum.eigenvalues.begin(),
                             morse.spectrum.eigenvalues.begin() +
                                 std::min<long>(opt.analytic_count, (long)morse.spectrum.eigenvalues.size()));
      std::vector<double> hc(hodge.eigenvalues.begin(), hodge.eigenvalues.begin() + opt.analytic_count);
      Json cmp;
      cmp["applicable"] = true;
      cmp["jacobi"] = analytic_comparison(jc, exact.jacobi, opt.analytic_tolerance, jac_floor);
      cmp["hodge1"] = analytic_comparison(hc, exact.hodge1, opt.analytic_tolerance, hodge_floor);
      const bool ok = cmp["jacobi"]["pass"].get<bool>() && cmp["hodge1"]["pass"].get<bool>();
      cmp["max_relative_error"] = std::max(cmp["jacobi"]["max_relative_error"].get<double>(),
                                           cmp["hodge1"]["max_relative_error"].get<double>());
      cmp["pass"] = ok;
      pass = pass && ok;
      checks["analytic_comparison"] = cmp;
    } else {
      checks["analytic_comparison"] = Json{{"applicable", false}, {"reason", "no analytic reference for mesh input"}};
    }
  }

  j["spectra"] = spectra;
  int failed = 0;
  for (const auto& [name, c] : checks.items())
    if (c.contains("pass") && !c["pass"].get<bool>()) ++failed;
  j["checks"] = checks;
  j["failed_checks"] = failed;
  j["pass"] = pass;
  if (opt.timings) j["timings"] = clock.json();
  return VerificationReport{std::move(j), pass};
}

} // namespace cmc

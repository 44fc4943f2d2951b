#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmclab/spectral.hpp"
#include "cmclab/surface_zoo.hpp"

namespace cmc {

inline constexpr const char* kReportSchemaVersion = "cmclab.verification_report/1";

using Json = nlohmann::ordered_json;

// Default sphere subdivision and torus grid for verification runs.
inline constexpr int kDefaultSphereLevel = 5;
inline constexpr int kDefaultTorusGrid = 64;

struct VerifyOptions {
  int alpha_max = 5;
  // Refinement levels for the lapwi study; empty selects 32, 64, 128 for tori.
  std::vector<int> levels;
  bool lapwi = true;
  SolverOptions solver;
  int threads = 1;
  bool timings = false;
  // Relative tolerance for comparing against the closed-form spectra.
  double analytic_tolerance = 0.02;
  int analytic_count = 10;
};

struct VerificationReport {
  Json json;
  bool pass = false;
};

// Runs every check that applies to the surface. The zoo spec, when given,
// enables refinement studies and comparison with closed-form spectra.
VerificationReport run_verification(const Surface& surface, const std::optional<ZooSpec>& spec,
                                    const VerifyOptions& options = {});

// Kernel dimension by the gap rule: the largest j such that every eigenvalue
// before index j lies below 1e-3 times eigenvalue j (0-based).
int gap_kernel_dimension(const std::vector<double>& eigenvalues, double factor = 1e-3);

// Consecutive eigenvalues closer than rel_tol (relative to max(1, |lambda|))
// share a group id.
std::vector<int> multiplicity_groups(const std::vector<double>& eigenvalues, double rel_tol = 1e-3);

// CSV with header index,eigenvalue,residual,group.
void write_spectrum_csv(std::ostream& os, const SpectrumResult& spectrum);

// lambda within tol * max(|exact|, floor) of exact.
bool within_relative(double value, double exact, double tol, double floor);

} // namespace cmc

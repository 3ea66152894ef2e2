#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reglab/evolution.hpp"
#include "reglab/regularization.hpp"

namespace reglab {

// Noise budget in the data norm ||phi|| + ||f||_1: `split` of it goes to the
// final value, the rest to the source term. Deterministic given the seed.
struct NoiseSpec {
  double delta = 0.0;
  double split = 0.5;
  std::uint64_t seed = 0;
};

struct PerturbedData {
  SpectralVector phi_tau;
  SourceTerm source;
};

// Draws a perturbation meeting the budget exactly: the final-value part is a
// scaled uniform direction on the unit sphere of the spectral space, the
// source part a constant-in-time per-mode shift whose time-integrated norm
// uses the remaining budget.
PerturbedData perturb_data(const FinalValueProblem& problem, const NoiseSpec& spec);

// integral_0^tau || f(s) - g(s) || ds via Gauss-Legendre panels with adaptive
// doubling; the difference is formed term-by-term so constant perturbations
// re-measure exactly.
double l1_time_norm(const SourceTerm& f, const SourceTerm& g, double tau);

// ||phi_tau - phi~_tau|| + ||f - f~||_1: the distance in the data norm.
double data_misfit(const FinalValueProblem& problem, const PerturbedData& perturbed);

struct StudyRow {
  double delta = 0.0;
  std::uint64_t seed = 0;
  RegChoice::Method method = RegChoice::Method::truncation;
  double parameter = 0.0;
  double error = 0.0;
  double bound = 0.0;
};

struct RateEstimate {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
};

// Least-squares slope of log(error) against log(delta); residual is the RMS
// of the fit. Rejects fewer than 3 pairs, non-positive entries, and designs
// with no spread in delta.
RateEstimate estimate_rate(const std::vector<std::pair<double, double>>& delta_error_pairs);

struct StudyConfig {
  std::vector<double> deltas;          // positive noise levels, typically geometric
  std::vector<std::uint64_t> seeds;    // one study cell per (delta, seed)
  double t = 0.0;
  double split = 0.5;
  unsigned jobs = 0;                   // 0: one worker per logical processor
};

struct RateReport {
  RegChoice::Method method = RegChoice::Method::truncation;
  std::vector<StudyRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  bool slope_defined = false;
  bool gamma_clamped = false;  // Lavrentiev rule clamped gamma to 1

  bool all_within_bounds() const;
};

// For each (delta, seed): perturb with the exact budget, pick the parameter
// by the method's a-priori rule, reconstruct from the noisy data and record
// the measured error against the exact solution next to the predicted bound.
// Cells run in parallel; the report is bit-identical regardless of the
// worker count.
RateReport run_convergence_study(const FinalValueProblem& problem, const SourceCondition& sc,
                                 RegChoice::Method method, const StudyConfig& config);

struct ComparisonReport {
  RateReport truncation;
  RateReport lavrentiev;
  double slope_gap = std::numeric_limits<double>::quiet_NaN();
  bool ordering_ok = true;  // truncation slope >= lavrentiev slope - 0.05 when gamma > 1
  std::string verdict;
};

// Runs both methods on identical perturbation draws and reports side-by-side
// slopes with a saturation verdict.
ComparisonReport compare_methods(const FinalValueProblem& problem, const SourceCondition& sc,
                                 const StudyConfig& config);

std::vector<double> geometric_grid(double first, double last, std::size_t count);

std::string_view method_name(RegChoice::Method method);
RegChoice::Method method_from_name(std::string_view name);

// CSV schema: delta,seed,method,parameter,error,bound (17 significant digits).
void write_csv(std::ostream& out, const std::vector<StudyRow>& rows);

// JSON summaries, serialized; schema documented in the README.
std::string study_summary_json(const RateReport& report, const StudyConfig& config);
std::string comparison_summary_json(const ComparisonReport& report, const StudyConfig& config);

}  // namespace reglab

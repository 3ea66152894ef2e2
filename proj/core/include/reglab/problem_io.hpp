#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reglab/evolution.hpp"
#include "reglab/experiments.hpp"
#include "reglab/regularization.hpp"

namespace reglab {

// Problem-file parse failure with a file:line diagnostic in what().
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& filename, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// A parsed problem file: the problem itself (with the exact-solution map
// attached when the file is manufactured) plus the optional sections.
struct LoadedProblem {
  FinalValueProblem problem;
  std::optional<SourceCondition> source_condition;
  std::optional<NoiseSpec> noise;
  std::optional<SpectralVector> u0;  // present iff manufactured
};

LoadedProblem parse_problem(std::istream& in, const std::string& filename);
LoadedProblem load_problem_file(const std::string& path);

// Everything needed to write a problem file. Exactly one of u0 (manufactured)
// or phi_tau (explicit final data) must be set.
struct ProblemSpec {
  EigenSystem eigensystem;
  double tau = 0.0;
  std::optional<SpectralVector> u0;
  std::optional<SpectralVector> phi_tau;
  SourceTerm source;
  std::optional<SourceCondition> source_condition;
  std::optional<NoiseSpec> noise;
};

void write_problem(std::ostream& out, const ProblemSpec& spec);
void write_problem_file(const std::string& path, const ProblemSpec& spec);

// Command-line grammar helpers.
//   "1e-1:1e-6:6"      geometric grid with 6 points
//   "1e-2,1e-3,1e-4"   explicit list
std::vector<double> parse_delta_grid(const std::string& text);
//   "10"               seeds 1..10
//   "3,5,8"            explicit list
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Parses the source-condition grammar used in problem files and flags:
//   "exp gamma=<real> rho=<real>"   (rho optional when allow_missing_rho)
//   "power p=<real> rho=<real>"
// With allow_missing_rho and no rho given, the returned condition has rho = 0
// as a placeholder the caller must resolve.
struct SourceConditionSpec {
  SourceCondition::Family family = SourceCondition::Family::exponential;
  double gamma_or_p = 0.0;
  double rho = 0.0;  // 0 means "not given"
  SourceCondition build() const;
};
SourceConditionSpec parse_source_condition(const std::string& text);

}  // namespace reglab

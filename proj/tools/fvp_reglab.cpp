// fvp-reglab: define backward evolution problems, reconstruct with truncated
// spectral or Lavrentiev regularization, and run convergence studies.
//
// Exit codes: 0 success, 2 usage or parse failure, 3 numerical domain failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "reglab/experiments.hpp"
#include "reglab/problem_io.hpp"

namespace {

using namespace reglab;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct MakeProblemArgs {
  std::size_t laplacian = 0;
  std::string eigenvalues;
  double tau = 0.0;
  std::string u0;
  std::string source = "zero";
  std::string source_condition;
  std::string noise;
  std::string out = "problem.fvp";
};

SpectralVector parse_u0(const std::string& text, const EigenSystem& es) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "decay") {
    const double r = std::stod(arg);
    std::vector<double> c(es.size());
    for (std::size_t n = 0; n < es.size(); ++n) c[n] = std::exp(-r * es.eigenvalue(n));
    return SpectralVector(std::move(c));
  }
  if (kind == "mode") {
    const std::size_t k = std::stoul(arg);
    if (k < 1 || k > es.size()) throw std::invalid_argument("--u0 mode index out of range");
    return SpectralVector::unit(es.size(), k - 1);
  }
  if (kind == "values") {
    std::string body = arg;
    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream in(body);
    std::vector<double> c;
    double v = 0.0;
    while (in >> v) c.push_back(v);
    if (c.size() != es.size())
      throw std::invalid_argument("--u0 values need one entry per mode");
    return SpectralVector(std::move(c));
  }
  throw std::invalid_argument("--u0 must be decay:<r>, mode:<k> or values:<v1,...>");
}

SourceTerm parse_source_flag(const std::string& text, std::size_t n_modes) {
  if (text == "zero") return SourceTerm::zero(n_modes);
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  std::replace(arg.begin(), arg.end(), ',', ' ');
  std::istringstream in(arg);
  if (kind == "const") {
    double c = 0.0;
    if (!(in >> c)) throw std::invalid_argument("--source const:<c> needs a value");
    std::vector<ModeFunction> modes(n_modes);
    if (c != 0.0)
      for (auto& m : modes) m = ModeFunction::constant(c);
    return SourceTerm(std::move(modes));
  }
  if (kind == "exp") {
    double c = 0.0, mu = 0.0;
    if (!(in >> c >> mu)) throw std::invalid_argument("--source exp:<c>,<mu> needs two values");
    std::vector<ModeFunction> modes(n_modes);
    for (auto& m : modes) m = ModeFunction::exponential(c, mu);
    return SourceTerm(std::move(modes));
  }
  throw std::invalid_argument("--source must be zero, const:<c> or exp:<c>,<mu>");
}

NoiseSpec parse_noise_flag(const std::string& text) {
  NoiseSpec spec;
  bool have_delta = false;
  std::string body = text;
  std::replace(body.begin(), body.end(), ',', ' ');
  std::istringstream in(body);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--noise needs key=value pairs");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "delta") {
      spec.delta = std::stod(val);
      have_delta = true;
    } else if (key == "split") {
      spec.split = std::stod(val);
    } else if (key == "seed") {
      spec.seed = std::stoull(val);
    } else {
      throw std::invalid_argument("unknown --noise field '" + key + "'");
    }
  }
  if (!have_delta) throw std::invalid_argument("--noise needs delta=<real>");
  return spec;
}

int cmd_make_problem(const MakeProblemArgs& args) {
  if ((args.laplacian == 0) == args.eigenvalues.empty())
    throw std::invalid_argument("give exactly one of --laplacian and --eigenvalues");

  EigenSystem es = [&] {
    if (args.laplacian != 0) return make_dirichlet_laplacian(args.laplacian);
    std::string body = args.eigenvalues;
    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream in(body);
    std::vector<double> lam;
    double v = 0.0;
    while (in >> v) lam.push_back(v);
    return EigenSystem(std::move(lam));
  }();

  const SpectralVector u0 = parse_u0(args.u0, es);
  const SourceTerm source = parse_source_flag(args.source, es.size());
  const FinalValueProblem problem = manufacture_problem(es, args.tau, u0, source);

  std::optional<SourceCondition> sc;
  if (!args.source_condition.empty()) {
    auto spec = parse_source_condition(args.source_condition);
    if (spec.rho == 0.0) {
      // certify rho from the exact initial state; valid for every later time
      // on source-free problems and for the probe time t = 0 in general
      if (spec.family == SourceCondition::Family::exponential)
        spec.rho = source_condition_norm(problem.truth(0.0), es,
                                         SourceCondition::exponential(spec.gamma_or_p, 1.0), 0.0,
                                         args.tau);
      else
        spec.rho = source_condition_norm(problem.truth(0.0), es,
                                         SourceCondition::power(spec.gamma_or_p, 1.0), 0.0,
                                         args.tau);
    }
    sc = spec.build();
  }

  std::optional<NoiseSpec> noise;
  if (!args.noise.empty()) noise = parse_noise_flag(args.noise);

  ProblemSpec spec{std::move(es), args.tau, u0, std::nullopt, source, std::move(sc), noise};
  write_problem_file(args.out, spec);
  std::cout << "wrote " << args.out << " (" << spec.eigensystem.size() << " modes, tau "
            << g17(args.tau) << ")\n";
  return 0;
}

struct SolveArgs {
  std::string file;
  double t = 0.0;
  std::string method = "truncation";
  std::optional<double> beta;
  std::optional<double> alpha;
  bool auto_param = false;
  std::optional<double> delta;
  std::optional<double> split;
  std::optional<std::uint64_t> seed;
};

int cmd_solve(const SolveArgs& args) {
  const LoadedProblem lp = load_problem_file(args.file);
  const FinalValueProblem& problem = lp.problem;
  const double tau = problem.tau();
  const RegChoice::Method method = method_from_name(args.method);

  NoiseSpec noise = lp.noise.value_or(NoiseSpec{0.0, 0.5, 0});
  if (args.delta) noise.delta = *args.delta;
  else if (!lp.noise) noise.delta = 0.0;
  if (args.split) noise.split = *args.split;
  if (args.seed) noise.seed = *args.seed;

  FinalValueProblem work = problem;
  if (noise.delta > 0.0) {
    const auto pd = perturb_data(problem, noise);
    work = problem.with_data(pd.phi_tau, pd.source);
  }

  // resolve the parameter
  double parameter = 0.0;
  std::string how = "given";
  if (args.auto_param) {
    if (!(noise.delta > 0.0))
      throw std::invalid_argument("--auto needs a positive --delta (or a noise section)");
    if (!lp.source_condition)
      throw std::invalid_argument("--auto needs a source_condition in the problem file");
    const auto& sc = *lp.source_condition;
    if (method == RegChoice::Method::truncation) {
      parameter = sc.family() == SourceCondition::Family::exponential
                      ? choose_beta_exponential(sc.gamma(), args.t, tau, noise.delta)
                      : choose_beta_general(sc, args.t, tau, noise.delta);
      how = sc.family() == SourceCondition::Family::exponential ? "closed form" : "bisection";
    } else {
      parameter = choose_alpha_lavrentiev(sc.gamma(), sc.rho(), noise.delta);
      how = "balance";
      if (sc.gamma() > 1.0) how += ", gamma clamped to 1 (saturation)";
    }
  } else if (method == RegChoice::Method::truncation) {
    if (!args.beta) throw std::invalid_argument("truncation needs --beta or --auto");
    parameter = *args.beta;
  } else {
    if (!args.alpha) throw std::invalid_argument("lavrentiev needs --alpha or --auto");
    parameter = *args.alpha;
  }

  std::cout << "problem: " << args.file << "\n";
  std::cout << "method: " << method_name(method) << "\n";
  std::cout << "t: " << g17(args.t) << "\n";
  if (noise.delta > 0.0)
    std::cout << "noise: delta=" << g17(noise.delta) << " split=" << g17(noise.split)
              << " seed=" << noise.seed << "\n";
  std::cout << (method == RegChoice::Method::truncation ? "beta: " : "alpha: ") << g17(parameter)
            << " (" << how << ")\n";

  // t = tau sits outside the reconstruction window; the final data is the
  // solution there by definition.
  SpectralVector solution = [&] {
    if (args.t == tau) return work.phi_tau();
    return method == RegChoice::Method::truncation
               ? truncated_solution(work, args.t, parameter)
               : lavrentiev_solution(work, args.t, parameter);
  }();

  std::cout << "mode  lambda                 coefficient\n";
  for (std::size_t n = 0; n < solution.size(); ++n) {
    std::printf("%-5zu %-22.17g %.17g\n", n + 1, problem.eigensystem().eigenvalue(n),
                solution[n]);
  }

  if (problem.has_truth() && args.t < tau) {
    const double err = norm(problem.truth(args.t) - solution);
    std::cout << "error: " << g17(err) << "\n";
  }
  if (args.t < tau) {
    if (method == RegChoice::Method::truncation) {
      std::cout << "stability_bound: " << g17(stability_bound(parameter, args.t, tau, noise.delta))
                << "\n";
      if (lp.source_condition) {
        std::cout << "total_bound: "
                  << g17(total_bound(*lp.source_condition, parameter, args.t, tau, noise.delta))
                  << "\n";
        // the sharp tail form needs the unperturbed data
        try {
          const double sharp = tail_rho(problem, args.t, parameter, *lp.source_condition) /
                               lp.source_condition->h(parameter, args.t, tau);
          std::cout << "sharp_error_bound: " << g17(sharp) << "\n";
        } catch (const DomainViolation&) {
          std::cout << "sharp_error_bound: unavailable (data fails the source condition at "
                       "working precision)\n";
        }
      }
    } else if (lp.source_condition &&
               lp.source_condition->family() == SourceCondition::Family::exponential) {
      std::cout << "total_bound: "
                << g17(lavrentiev_total_bound(*lp.source_condition, parameter, noise.delta))
                << "\n";
    }
  }
  return 0;
}

struct StudyArgs {
  std::string file;
  std::string method = "truncation";
  std::string deltas = "1e-1:1e-6:6";
  std::string seeds = "10";
  double t = 0.0;
  std::optional<double> split;
  std::string out = "study";
  unsigned jobs = 0;
};

StudyConfig make_config(const StudyArgs& args, const LoadedProblem& lp) {
  StudyConfig cfg;
  cfg.deltas = parse_delta_grid(args.deltas);
  cfg.seeds = parse_seed_list(args.seeds);
  cfg.t = args.t;
  cfg.split = args.split ? *args.split : (lp.noise ? lp.noise->split : 0.5);
  cfg.jobs = args.jobs;
  return cfg;
}

void write_outputs(const std::string& prefix, const std::vector<StudyRow>& rows,
                   const std::string& summary) {
  const std::string csv_path = prefix + ".csv";
  const std::string json_path = prefix + ".json";
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  write_csv(csv, rows);
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write " + json_path);
  js << summary << "\n";
  std::cout << "wrote " << csv_path << " " << json_path << "\n";
}

const SourceCondition& require_sc(const LoadedProblem& lp, const char* who) {
  if (!lp.source_condition)
    throw std::invalid_argument(std::string(who) + " needs a source_condition in the problem file");
  return *lp.source_condition;
}

int cmd_study(const StudyArgs& args) {
  const LoadedProblem lp = load_problem_file(args.file);
  const auto& sc = require_sc(lp, "study");
  const StudyConfig cfg = make_config(args, lp);
  const auto report = run_convergence_study(lp.problem, sc, method_from_name(args.method), cfg);

  std::cout << "method: " << method_name(report.method) << "\n";
  std::cout << "rows: " << report.rows.size() << "\n";
  if (report.gamma_clamped)
    std::cout << "note: gamma " << g17(sc.gamma()) << " clamped to 1 (saturation)\n";
  if (report.slope_defined) {
    std::cout << "slope: " << g17(report.slope) << "\n";
    std::cout << "residual: " << g17(report.residual) << "\n";
  } else {
    std::cout << "slope: undefined (need >= 3 cells and >= 2 distinct deltas)\n";
  }
  std::cout << "all_within_bounds: " << (report.all_within_bounds() ? "yes" : "NO") << "\n";
  write_outputs(args.out, report.rows, study_summary_json(report, cfg));
  return 0;
}

int cmd_compare(const StudyArgs& args) {
  const LoadedProblem lp = load_problem_file(args.file);
  const auto& sc = require_sc(lp, "compare");
  const StudyConfig cfg = make_config(args, lp);
  const auto cmp = compare_methods(lp.problem, sc, cfg);

  const auto show = [](const RateReport& r) {
    std::cout << method_name(r.method) << ": ";
    if (r.slope_defined)
      std::cout << "slope " << g17(r.slope) << " (residual " << g17(r.residual) << ")";
    else
      std::cout << "slope undefined";
    if (r.gamma_clamped) std::cout << " [gamma clamped to 1]";
    std::cout << (r.all_within_bounds() ? "" : " BOUND VIOLATION") << "\n";
  };
  show(cmp.truncation);
  show(cmp.lavrentiev);
  if (cmp.truncation.slope_defined && cmp.lavrentiev.slope_defined)
    std::cout << "slope_gap: " << g17(cmp.slope_gap) << "\n";
  std::cout << "verdict: " << cmp.verdict << "\n";

  std::vector<StudyRow> rows = cmp.truncation.rows;
  rows.insert(rows.end(), cmp.lavrentiev.rows.begin(), cmp.lavrentiev.rows.end());
  write_outputs(args.out, rows, comparison_summary_json(cmp, cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for ill-posed backward evolution problems"};
  app.require_subcommand(1);

  MakeProblemArgs mk;
  auto* mk_cmd = app.add_subcommand("make-problem", "manufacture a problem file");
  mk_cmd->add_option("--laplacian", mk.laplacian, "dirichlet laplacian mode count");
  mk_cmd->add_option("--eigenvalues", mk.eigenvalues, "explicit eigenvalue list (comma separated)");
  mk_cmd->add_option("--tau", mk.tau, "final time")->required();
  mk_cmd->add_option("--u0", mk.u0, "initial state: decay:<r>, mode:<k> or values:<v1,...>")
      ->required();
  mk_cmd->add_option("--source", mk.source, "source: zero, const:<c> or exp:<c>,<mu>");
  mk_cmd->add_option("--source-condition", mk.source_condition,
                     "e.g. 'exp gamma=2' (rho certified from u0 when omitted)");
  mk_cmd->add_option("--noise", mk.noise, "default noise: delta=<d>[,split=<s>][,seed=<k>]");
  mk_cmd->add_option("--out", mk.out, "output path (default problem.fvp)");

  SolveArgs sv;
  auto* sv_cmd = app.add_subcommand("solve", "reconstruct u(t) from a problem file");
  sv_cmd->add_option("file", sv.file, "problem file")->required();
  sv_cmd->add_option("--t", sv.t, "reconstruction time (default 0)");
  sv_cmd->add_option("--method", sv.method, "truncation | lavrentiev");
  sv_cmd->add_option("--beta", sv.beta, "truncation level");
  sv_cmd->add_option("--alpha", sv.alpha, "lavrentiev shift");
  sv_cmd->add_flag("--auto", sv.auto_param, "pick the parameter by the a-priori rule");
  sv_cmd->add_option("--delta", sv.delta, "noise budget (default: file noise, else 0)");
  sv_cmd->add_option("--split", sv.split, "budget fraction on the final value");
  sv_cmd->add_option("--seed", sv.seed, "noise seed");

  StudyArgs st;
  auto* st_cmd = app.add_subcommand("study", "convergence study for one method");
  st_cmd->add_option("file", st.file, "problem file")->required();
  st_cmd->add_option("--method", st.method, "truncation | lavrentiev");
  st_cmd->add_option("--deltas", st.deltas, "grid: first:last:count or comma list");
  st_cmd->add_option("--seeds", st.seeds, "count (seeds 1..n) or comma list");
  st_cmd->add_option("--t", st.t, "reconstruction time (default 0)");
  st_cmd->add_option("--split", st.split, "budget fraction on the final value");
  st_cmd->add_option("--out", st.out, "output prefix (default study)");
  st_cmd->add_option("--jobs", st.jobs, "worker threads (default: logical processors)")
      ->envname("FVP_REGLAB_JOBS");

  StudyArgs cp;
  cp.out = "compare";
  auto* cp_cmd = app.add_subcommand("compare", "side-by-side study of both methods");
  cp_cmd->add_option("file", cp.file, "problem file")->required();
  cp_cmd->add_option("--deltas", cp.deltas, "grid: first:last:count or comma list");
  cp_cmd->add_option("--seeds", cp.seeds, "count (seeds 1..n) or comma list");
  cp_cmd->add_option("--t", cp.t, "reconstruction time (default 0)");
  cp_cmd->add_option("--split", cp.split, "budget fraction on the final value");
  cp_cmd->add_option("--out", cp.out, "output prefix (default compare)");
  cp_cmd->add_option("--jobs", cp.jobs, "worker threads (default: logical processors)")
      ->envname("FVP_REGLAB_JOBS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (mk_cmd->parsed()) return cmd_make_problem(mk);
    if (sv_cmd->parsed()) return cmd_solve(sv);
    if (st_cmd->parsed()) return cmd_study(st);
    if (cp_cmd->parsed()) return cmd_compare(cp);
  } catch (const DomainViolation& e) {
    std::cerr << "numerical domain failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ParameterOverflow& e) {
    std::cerr << "numerical domain failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const QuadratureTolerance& e) {
    std::cerr << "numerical domain failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NoBracket& e) {
    std::cerr << "numerical domain failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

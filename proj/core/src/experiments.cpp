#include "reglab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace reglab {

namespace {

using json = nlohmann::json;

std::vector<double> unit_sphere_direction(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> d(n);
  double nrm = 0.0;
  do {
    for (auto& x : d) x = gauss(rng);
    nrm = norm(SpectralVector(d));
  } while (nrm == 0.0);
  for (auto& x : d) x /= nrm;
  return d;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

PerturbedData perturb_data(const FinalValueProblem& problem, const NoiseSpec& spec) {
  if (!(spec.delta > 0.0)) throw std::invalid_argument("perturb_data: delta must be > 0");
  if (!(spec.split >= 0.0) || !(spec.split <= 1.0))
    throw std::invalid_argument("perturb_data: split must lie in [0, 1]");

  const std::size_t n = problem.eigensystem().size();
  std::mt19937_64 rng(spec.seed);
  // Both directions are always drawn so the stream layout does not depend on
  // the split.
  const std::vector<double> dir_phi = unit_sphere_direction(rng, n);
  const std::vector<double> dir_src = unit_sphere_direction(rng, n);

  SpectralVector phi = problem.phi_tau();
  const double phi_budget = spec.split * spec.delta;
  if (phi_budget > 0.0) phi = phi + phi_budget * SpectralVector(dir_phi);

  SourceTerm source = problem.source();
  const double src_budget = (1.0 - spec.split) * spec.delta;
  if (src_budget > 0.0) {
    // Constant-in-time shift c with ||c|| * tau equal to the source budget.
    const double scale = src_budget / problem.tau();
    source = source.with_constant_shift(scale * SpectralVector(dir_src));
  }
  return PerturbedData{std::move(phi), std::move(source)};
}

double l1_time_norm(const SourceTerm& f, const SourceTerm& g, double tau) {
  if (f.mode_count() != g.mode_count())
    throw std::invalid_argument("l1_time_norm: mode count mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("l1_time_norm: tau must be > 0");

  std::vector<ModeFunction> diff(f.mode_count());
  bool all_zero = true;
  for (std::size_t n = 0; n < f.mode_count(); ++n) {
    diff[n] = mode_difference(f.mode(n), g.mode(n));
    all_zero = all_zero && diff[n].is_zero();
  }
  if (all_zero) return 0.0;

  const auto pointwise = [&](double s) {
    double m = 0.0;
    for (const auto& d : diff) m = std::max(m, std::abs(d(s)));
    if (m == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& d : diff) {
      const double r = d(s) / m;
      acc += r * r;
    }
    return m * std::sqrt(acc);
  };

  // Base panels at the union of sample nodes so the integrand is smooth
  // inside each panel; refine by splitting panels until two successive
  // levels agree.
  std::vector<double> base{0.0, tau};
  for (const auto& d : diff)
    for (const auto& term : d.terms())
      if (const auto* smp = std::get_if<SampledMode>(&term))
        for (std::size_t i = 1; i + 1 <= smp->values.size(); ++i) {
          const double s = static_cast<double>(i) * smp->step;
          if (s > 0.0 && s < tau) base.push_back(s);
        }
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end()), base.end());

  constexpr double kGlx[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                              -0.9061798459386640, 0.9061798459386640};
  constexpr double kGlw[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                              0.2369268850561891, 0.2369268850561891};
  const auto integrate = [&](std::size_t splits) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < base.size(); ++i) {
      const double h = (base[i + 1] - base[i]) / static_cast<double>(splits);
      for (std::size_t j = 0; j < splits; ++j) {
        const double p = base[i] + h * static_cast<double>(j);
        const double mid = p + 0.5 * h;
        double panel = 0.0;
        for (int k = 0; k < 5; ++k) panel += kGlw[k] * pointwise(mid + 0.5 * h * kGlx[k]);
        acc += panel * 0.5 * h;
      }
    }
    return acc;
  };

  double prev = integrate(1);
  for (std::size_t splits = 2; splits <= 4096; splits *= 2) {
    const double cur = integrate(splits);
    if (std::abs(cur - prev) <= 1e-12 * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  throw QuadratureTolerance("l1_time_norm: panel doubling did not converge to 1e-12");
}

double data_misfit(const FinalValueProblem& problem, const PerturbedData& perturbed) {
  return norm(problem.phi_tau() - perturbed.phi_tau) +
         l1_time_norm(problem.source(), perturbed.source, problem.tau());
}

RateEstimate estimate_rate(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3)
    throw std::invalid_argument("estimate_rate: needs at least 3 (delta, error) pairs");
  const double n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [d, e] : pairs) {
    if (!(d > 0.0) || !(e > 0.0))
      throw std::invalid_argument("estimate_rate: deltas and errors must be positive");
    mx += std::log(d);
    my += std::log(e);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [d, e] : pairs) {
    const double dx = std::log(d) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(e) - my);
  }
  if (sxx == 0.0)
    throw std::invalid_argument("estimate_rate: degenerate design, all deltas identical");
  RateEstimate est;
  est.slope = sxy / sxx;
  const double intercept = my - est.slope * mx;
  double ss = 0.0;
  for (const auto& [d, e] : pairs) {
    const double r = std::log(e) - (est.slope * std::log(d) + intercept);
    ss += r * r;
  }
  est.residual = std::sqrt(ss / n);
  return est;
}

bool RateReport::all_within_bounds() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const StudyRow& r) { return r.error <= r.bound; });
}

namespace {

StudyRow run_cell(const FinalValueProblem& problem, const SourceCondition& sc,
                  RegChoice::Method method, double t, double split, double delta,
                  std::uint64_t seed, const SpectralVector& truth_t) {
  const PerturbedData pd = perturb_data(problem, NoiseSpec{delta, split, seed});
  const FinalValueProblem noisy = problem.with_data(pd.phi_tau, pd.source);

  StudyRow row;
  row.delta = delta;
  row.seed = seed;
  row.method = method;
  if (method == RegChoice::Method::truncation) {
    row.parameter = choose_beta_general(sc, t, problem.tau(), delta);
    row.error = norm(truth_t - truncated_solution(noisy, t, row.parameter));
    row.bound = total_bound(sc, row.parameter, t, problem.tau(), delta);
  } else {
    row.parameter = choose_alpha_lavrentiev(sc.gamma(), sc.rho(), delta);
    row.error = norm(truth_t - lavrentiev_solution(noisy, t, row.parameter));
    row.bound = lavrentiev_total_bound(sc, row.parameter, delta);
  }
  return row;
}

void fit_report(RateReport& report) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(report.rows.size());
  for (const auto& r : report.rows)
    if (r.error > 0.0) pairs.emplace_back(r.delta, r.error);
  try {
    const RateEstimate est = estimate_rate(pairs);
    report.slope = est.slope;
    report.residual = est.residual;
    report.slope_defined = true;
  } catch (const std::invalid_argument&) {
    report.slope_defined = false;
  }
}

}  // namespace

RateReport run_convergence_study(const FinalValueProblem& problem, const SourceCondition& sc,
                                 RegChoice::Method method, const StudyConfig& config) {
  if (!problem.has_truth())
    throw std::invalid_argument("run_convergence_study: problem has no exact solution attached");
  if (config.deltas.empty() || config.seeds.empty())
    throw std::invalid_argument("run_convergence_study: empty delta grid or seed list");
  for (double d : config.deltas)
    if (!(d > 0.0)) throw std::invalid_argument("run_convergence_study: deltas must be positive");
  if (method == RegChoice::Method::lavrentiev &&
      sc.family() != SourceCondition::Family::exponential)
    throw std::invalid_argument(
        "run_convergence_study: the Lavrentiev rule needs an exponential-family source condition");

  const SpectralVector truth_t = problem.truth(config.t);

  RateReport report;
  report.method = method;
  report.gamma_clamped =
      method == RegChoice::Method::lavrentiev && sc.gamma() > 1.0;
  report.rows.resize(config.deltas.size() * config.seeds.size());

  const std::size_t cells = report.rows.size();
  unsigned jobs = config.jobs != 0 ? config.jobs : std::thread::hardware_concurrency();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells) return;
      const double delta = config.deltas[i / config.seeds.size()];
      const std::uint64_t seed = config.seeds[i % config.seeds.size()];
      try {
        report.rows[i] =
            run_cell(problem, sc, method, config.t, config.split, delta, seed, truth_t);
      } catch (...) {
        std::scoped_lock lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  fit_report(report);
  return report;
}

ComparisonReport compare_methods(const FinalValueProblem& problem, const SourceCondition& sc,
                                 const StudyConfig& config) {
  ComparisonReport cmp;
  cmp.truncation = run_convergence_study(problem, sc, RegChoice::Method::truncation, config);
  cmp.lavrentiev = run_convergence_study(problem, sc, RegChoice::Method::lavrentiev, config);

  std::ostringstream verdict;
  if (cmp.truncation.slope_defined && cmp.lavrentiev.slope_defined) {
    cmp.slope_gap = cmp.truncation.slope - cmp.lavrentiev.slope;
    const double gamma = sc.gamma();
    if (gamma > 1.0) {
      cmp.ordering_ok = cmp.truncation.slope >= cmp.lavrentiev.slope - 0.05;
      verdict << "gamma=" << gamma << " exceeds the Lavrentiev saturation index: truncation slope "
              << cmp.truncation.slope << " vs Lavrentiev slope " << cmp.lavrentiev.slope
              << (cmp.slope_gap > 0.0 ? " (truncation keeps improving)" : " (no separation seen)");
    } else {
      verdict << "gamma=" << gamma << " is below saturation: slopes " << cmp.truncation.slope
              << " and " << cmp.lavrentiev.slope << " should agree";
    }
  } else {
    verdict << "slopes undefined for this study layout (need >= 3 cells and >= 2 distinct deltas)";
  }
  cmp.verdict = verdict.str();
  return cmp;
}

std::vector<double> geometric_grid(double first, double last, std::size_t count) {
  if (count == 0) throw std::invalid_argument("geometric_grid: count must be >= 1");
  if (!(first > 0.0) || !(last > 0.0))
    throw std::invalid_argument("geometric_grid: endpoints must be positive");
  std::vector<double> grid(count);
  grid.front() = first;
  if (count == 1) return grid;
  const double ratio = std::pow(last / first, 1.0 / static_cast<double>(count - 1));
  for (std::size_t i = 1; i + 1 < count; ++i) grid[i] = grid[i - 1] * ratio;
  grid.back() = last;
  return grid;
}

std::string_view method_name(RegChoice::Method method) {
  return method == RegChoice::Method::truncation ? "truncation" : "lavrentiev";
}

RegChoice::Method method_from_name(std::string_view name) {
  if (name == "truncation") return RegChoice::Method::truncation;
  if (name == "lavrentiev") return RegChoice::Method::lavrentiev;
  throw std::invalid_argument("unknown method: " + std::string(name) +
                              " (expected truncation or lavrentiev)");
}

void write_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << "delta,seed,method,parameter,error,bound\n";
  for (const auto& r : rows) {
    out << format_g17(r.delta) << ',' << r.seed << ',' << method_name(r.method) << ','
        << format_g17(r.parameter) << ',' << format_g17(r.error) << ',' << format_g17(r.bound)
        << '\n';
  }
}

namespace {

json report_json(const RateReport& report) {
  json j;
  j["method"] = method_name(report.method);
  j["rows"] = report.rows.size();
  j["slope_defined"] = report.slope_defined;
  if (report.slope_defined) {
    j["slope"] = report.slope;
    j["residual"] = report.residual;
  }
  j["all_within_bounds"] = report.all_within_bounds();
  if (report.gamma_clamped) j["gamma_clamped_to"] = 1.0;
  return j;
}

json config_json(const StudyConfig& config) {
  return json{{"deltas", config.deltas},
              {"seeds", config.seeds},
              {"t", config.t},
              {"split", config.split}};
}

}  // namespace

std::string study_summary_json(const RateReport& report, const StudyConfig& config) {
  json j = report_json(report);
  j["config"] = config_json(config);
  return j.dump(2);
}

std::string comparison_summary_json(const ComparisonReport& report, const StudyConfig& config) {
  json j;
  j["truncation"] = report_json(report.truncation);
  j["lavrentiev"] = report_json(report.lavrentiev);
  if (report.truncation.slope_defined && report.lavrentiev.slope_defined)
    j["slope_gap"] = report.slope_gap;
  j["ordering_ok"] = report.ordering_ok;
  j["verdict"] = report.verdict;
  j["config"] = config_json(config);
  return j.dump(2);
}

}  // namespace reglab

#include "reglab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"

using namespace reglab;

namespace {

EigenSystem harmonic(std::size_t n) {
  std::vector<double> lam(n);
  for (std::size_t k = 0; k < n; ++k) lam[k] = static_cast<double>(k + 1);
  return EigenSystem(std::move(lam));
}

FinalValueProblem decay_problem(const EigenSystem& es, double tau, double decay,
                                SourceTerm source) {
  std::vector<double> c(es.size());
  for (std::size_t n = 0; n < es.size(); ++n) c[n] = std::exp(-decay * es.eigenvalue(n));
  return manufacture_problem(es, tau, SpectralVector(std::move(c)), source);
}

SourceCondition certified_exponential(const FinalValueProblem& p, double gamma, double t) {
  const double rho = source_condition_norm(p.truth(t), p.eigensystem(),
                                           SourceCondition::exponential(gamma, 1.0), t, p.tau());
  return SourceCondition::exponential(gamma, rho);
}

}  // namespace

TEST_CASE("perturb_data meets the budget exactly") {
  const auto es = harmonic(12);
  const auto p = decay_problem(es, 1.0, 1.0, SourceTerm({std::vector<ModeFunction>{
      ModeFunction::constant(0.5), ModeFunction::exponential(1.0, -0.5), ModeFunction::zero(),
      ModeFunction::zero(), ModeFunction::zero(), ModeFunction::zero(), ModeFunction::zero(),
      ModeFunction::zero(), ModeFunction::zero(), ModeFunction::zero(), ModeFunction::zero(),
      ModeFunction::zero()}}));

  SUBCASE("full budget on the final value") {
    const auto pd = perturb_data(p, NoiseSpec{1e-3, 1.0, 7});
    CHECK(norm(p.phi_tau() - pd.phi_tau) == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(l1_time_norm(p.source(), pd.source, p.tau()) == 0.0);
  }
  SUBCASE("full budget on the source") {
    const auto pd = perturb_data(p, NoiseSpec{1e-3, 0.0, 7});
    for (std::size_t n = 0; n < es.size(); ++n) CHECK(pd.phi_tau[n] == p.phi_tau()[n]);
    CHECK(l1_time_norm(p.source(), pd.source, p.tau()) ==
          doctest::Approx(1e-3).epsilon(1e-12));
  }
  SUBCASE("any split recovers delta when re-measured") {
    for (const double split : {0.0, 0.25, 0.5, 0.9, 1.0}) {
      for (const double delta : {1e-1, 1e-6, 1e-9}) {
        const auto pd = perturb_data(p, NoiseSpec{delta, split, 42});
        CHECK(data_misfit(p, pd) == doctest::Approx(delta).epsilon(1e-12));
      }
    }
  }
  SUBCASE("deterministic given the seed") {
    const auto a = perturb_data(p, NoiseSpec{1e-3, 0.5, 11});
    const auto b = perturb_data(p, NoiseSpec{1e-3, 0.5, 11});
    for (std::size_t n = 0; n < es.size(); ++n) CHECK(a.phi_tau[n] == b.phi_tau[n]);
    CHECK(l1_time_norm(a.source, b.source, p.tau()) == 0.0);
    const auto c = perturb_data(p, NoiseSpec{1e-3, 0.5, 12});
    CHECK(norm(a.phi_tau - c.phi_tau) > 0.0);
  }
  SUBCASE("spec validation") {
    CHECK_THROWS_AS(perturb_data(p, NoiseSpec{0.0, 0.5, 1}), std::invalid_argument);
    CHECK_THROWS_AS(perturb_data(p, NoiseSpec{1e-3, 1.5, 1}), std::invalid_argument);
  }
}

TEST_CASE("l1_time_norm") {
  SUBCASE("identical sources") {
    const auto f = SourceTerm(std::vector<ModeFunction>{ModeFunction::exponential(2.0, -1.0)});
    CHECK(l1_time_norm(f, f, 1.0) == 0.0);
  }
  SUBCASE("constant difference integrates to c tau") {
    const auto f = SourceTerm(std::vector<ModeFunction>{ModeFunction::constant(1.25)});
    const auto g = SourceTerm(std::vector<ModeFunction>{ModeFunction::constant(1.25 - 0.5)});
    CHECK(l1_time_norm(f, g, 2.0) == doctest::Approx(1.0).epsilon(1e-13));
  }
  SUBCASE("exponential difference against the antiderivative") {
    const auto f = SourceTerm(std::vector<ModeFunction>{ModeFunction::exponential(1.0, -1.0)});
    const auto g = SourceTerm(std::vector<ModeFunction>{ModeFunction::zero()});
    CHECK(l1_time_norm(f, g, 1.0) == doctest::Approx(0.63212055882855768).epsilon(1e-10));
  }
  SUBCASE("mode count mismatch") {
    CHECK_THROWS_AS(l1_time_norm(SourceTerm::zero(2), SourceTerm::zero(3), 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("estimate_rate") {
  SUBCASE("exact power law") {
    std::vector<std::pair<double, double>> pairs;
    for (double d = 1e-1; d >= 1e-6; d /= 10.0) pairs.emplace_back(d, std::pow(d, 2.0 / 3.0));
    const auto est = estimate_rate(pairs);
    CHECK(est.slope == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(est.residual <= 1e-12);
  }
  SUBCASE("prefactor does not move the slope") {
    std::vector<std::pair<double, double>> pairs;
    for (double d = 1e-1; d >= 1e-5; d /= 10.0) pairs.emplace_back(d, 5.0 * d);
    CHECK(estimate_rate(pairs).slope == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("rejects degenerate input") {
    CHECK_THROWS_AS(estimate_rate({{1e-2, 1.0}, {1e-2, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(estimate_rate({{1e-2, 1.0}, {1e-2, 2.0}, {1e-2, 3.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_rate({{1e-2, 1.0}, {1e-3, -2.0}, {1e-4, 3.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_rate({{-1e-2, 1.0}, {1e-3, 2.0}, {1e-4, 3.0}}),
                    std::invalid_argument);
  }
}

TEST_CASE("geometric_grid") {
  const auto g = geometric_grid(1e-1, 1e-6, 6);
  REQUIRE(g.size() == 6);
  CHECK(g.front() == 1e-1);
  CHECK(g.back() == 1e-6);
  for (std::size_t i = 0; i + 1 < g.size(); ++i)
    CHECK(g[i + 1] / g[i] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(geometric_grid(2.0, 2.0, 1) == std::vector<double>{2.0});
  CHECK_THROWS_AS(geometric_grid(0.0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("run_convergence_study") {
  const auto p = decay_problem(harmonic(16), 1.0, 1.0, SourceTerm::zero(16));
  const auto sc = certified_exponential(p, 1.0, 0.0);
  StudyConfig cfg;
  cfg.deltas = geometric_grid(1e-2, 1e-5, 4);
  cfg.seeds = {1, 2, 3};
  cfg.t = 0.0;
  cfg.jobs = 2;

  const auto report = run_convergence_study(p, sc, RegChoice::Method::truncation, cfg);
  SUBCASE("row layout and bound satisfaction") {
    REQUIRE(report.rows.size() == 12);
    CHECK(report.all_within_bounds());
    CHECK(report.slope_defined);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      CHECK(report.rows[i].delta == cfg.deltas[i / 3]);
      CHECK(report.rows[i].seed == cfg.seeds[i % 3]);
      CHECK(report.rows[i].error > 0.0);
      CHECK(report.rows[i].parameter > 0.0);
    }
  }
  SUBCASE("bit-identical across runs and worker counts") {
    StudyConfig serial = cfg;
    serial.jobs = 1;
    StudyConfig oversub = cfg;
    oversub.jobs = 64;  // more workers than cells: clamped
    const auto again = run_convergence_study(p, sc, RegChoice::Method::truncation, serial);
    const auto wide = run_convergence_study(p, sc, RegChoice::Method::truncation, oversub);
    std::ostringstream a, b, c;
    write_csv(a, report.rows);
    write_csv(b, again.rows);
    write_csv(c, wide.rows);
    CHECK(a.str() == b.str());
    CHECK(a.str() == c.str());
    CHECK(report.slope == again.slope);
    CHECK(report.slope == wide.slope);
  }
  SUBCASE("a vanishing noise floor reproduces the pure truncation error") {
    StudyConfig tiny = cfg;
    tiny.deltas = {1e-14};
    tiny.seeds = {5};
    const auto r = run_convergence_study(p, sc, RegChoice::Method::truncation, tiny);
    REQUIRE(r.rows.size() == 1);
    const double beta = r.rows[0].parameter;
    const double pure = norm(p.truth(0.0) - truncated_solution(p, 0.0, beta));
    // the spread between noisy and clean reconstructions is within the
    // stability bound, so the measured error pins down the pure one
    CHECK(std::abs(r.rows[0].error - pure) <= stability_bound(beta, 0.0, 1.0, 1e-14));
  }
  SUBCASE("median error trend is monotone in delta (one inversion allowed)") {
    std::vector<double> medians;
    for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
      std::vector<double> errs;
      for (std::size_t j = 0; j < cfg.seeds.size(); ++j)
        errs.push_back(report.rows[i * cfg.seeds.size() + j].error);
      std::sort(errs.begin(), errs.end());
      medians.push_back(errs[errs.size() / 2]);
    }
    int inversions = 0;
    for (std::size_t i = 0; i + 1 < medians.size(); ++i)
      if (medians[i + 1] > medians[i]) ++inversions;
    CHECK(inversions <= 1);
  }
  SUBCASE("lavrentiev rule needs the exponential family") {
    const auto pow_sc = SourceCondition::power(1.0, 1.0);
    CHECK_THROWS_AS(run_convergence_study(p, pow_sc, RegChoice::Method::lavrentiev, cfg),
                    std::invalid_argument);
  }
  SUBCASE("truth is required") {
    const FinalValueProblem bare(p.eigensystem(), p.tau(), p.phi_tau(), p.source());
    CHECK_THROWS_AS(run_convergence_study(bare, sc, RegChoice::Method::truncation, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("compare_methods") {
  const auto p = decay_problem(harmonic(16), 1.0, 0.5, SourceTerm::zero(16));
  const auto sc = certified_exponential(p, 0.5, 0.0);
  StudyConfig cfg;
  cfg.deltas = geometric_grid(1e-2, 1e-5, 4);
  cfg.seeds = {1, 2, 3};

  SUBCASE("below saturation the methods track each other") {
    const auto cmp = compare_methods(p, sc, cfg);
    REQUIRE(cmp.truncation.slope_defined);
    REQUIRE(cmp.lavrentiev.slope_defined);
    CHECK_FALSE(cmp.lavrentiev.gamma_clamped);
    CHECK(cmp.truncation.all_within_bounds());
    CHECK(cmp.lavrentiev.all_within_bounds());
    CHECK(std::abs(cmp.slope_gap) <= 0.15);
    CHECK(cmp.ordering_ok);
    // identical draws: the perturbations per (delta, seed) match across methods
    for (std::size_t i = 0; i < cmp.truncation.rows.size(); ++i) {
      CHECK(cmp.truncation.rows[i].delta == cmp.lavrentiev.rows[i].delta);
      CHECK(cmp.truncation.rows[i].seed == cmp.lavrentiev.rows[i].seed);
    }
  }
  SUBCASE("a single delta leaves the slopes undefined but keeps the rows") {
    StudyConfig one = cfg;
    one.deltas = {1e-3};
    const auto cmp = compare_methods(p, sc, one);
    CHECK_FALSE(cmp.truncation.slope_defined);
    CHECK_FALSE(cmp.lavrentiev.slope_defined);
    CHECK(cmp.truncation.rows.size() == 3);
    CHECK(cmp.verdict.find("undefined") != std::string::npos);
  }
}

TEST_CASE("csv output carries the fixed schema") {
  std::vector<StudyRow> rows{{1e-2, 3, RegChoice::Method::truncation, 2.5, 1e-3, 2e-3},
                             {1e-3, 4, RegChoice::Method::lavrentiev, 0.1, 5e-4, 1e-3}};
  std::ostringstream out;
  write_csv(out, rows);
  const std::string text = out.str();
  CHECK(text.rfind("delta,seed,method,parameter,error,bound\n", 0) == 0);
  CHECK(text.find("truncation") != std::string::npos);
  CHECK(text.find("lavrentiev") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("summary json carries slopes and flags") {
  const auto p = decay_problem(harmonic(8), 1.0, 2.0, SourceTerm::zero(8));
  const auto sc = certified_exponential(p, 2.0, 0.0);
  StudyConfig cfg;
  cfg.deltas = geometric_grid(1e-2, 1e-4, 3);
  cfg.seeds = {1, 2};
  const auto report = run_convergence_study(p, sc, RegChoice::Method::lavrentiev, cfg);
  CHECK(report.gamma_clamped);
  const std::string json = study_summary_json(report, cfg);
  CHECK(json.find("\"method\": \"lavrentiev\"") != std::string::npos);
  CHECK(json.find("\"gamma_clamped_to\": 1.0") != std::string::npos);
  CHECK(json.find("\"slope\"") != std::string::npos);
  const auto cmp = compare_methods(p, sc, cfg);
  const std::string cjson = comparison_summary_json(cmp, cfg);
  CHECK(cjson.find("\"truncation\"") != std::string::npos);
  CHECK(cjson.find("\"verdict\"") != std::string::npos);
}

#include "reglab/problem_io.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"

using namespace reglab;

namespace {

LoadedProblem parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_problem(in, "test.fvp");
}

int error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_problem(in, "test.fvp");
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("parse a manufactured problem") {
  const auto lp = parse_text(
      "fvp-reglab problem v1\n"
      "# a demo\n"
      "eigensystem: dirichlet_laplacian 4\n"
      "tau: 1\n"
      "u0: decay 0.5\n"
      "phi_tau: manufactured\n"
      "source: zero\n"
      "source_condition: exp gamma=0.5 rho=2\n"
      "noise: delta=1e-3 split=0.25 seed=9\n");
  CHECK(lp.problem.eigensystem().eigenvalues() == std::vector<double>{1.0, 4.0, 9.0, 16.0});
  CHECK(lp.problem.tau() == 1.0);
  REQUIRE(lp.problem.has_truth());
  REQUIRE(lp.u0.has_value());
  CHECK((*lp.u0)[1] == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(lp.problem.truth(0.0)[1] == (*lp.u0)[1]);
  // phi_tau really is the forward solve of u0
  const auto forward = ivp_mild_solution(lp.problem.eigensystem(), *lp.u0,
                                         lp.problem.source(), 1.0);
  for (std::size_t n = 0; n < 4; ++n) CHECK(lp.problem.phi_tau()[n] == forward[n]);
  REQUIRE(lp.source_condition.has_value());
  CHECK(lp.source_condition->gamma() == 0.5);
  CHECK(lp.source_condition->rho() == 2.0);
  REQUIRE(lp.noise.has_value());
  CHECK(lp.noise->delta == 1e-3);
  CHECK(lp.noise->split == 0.25);
  CHECK(lp.noise->seed == 9);
}

TEST_CASE("parse explicit data and per-mode sources") {
  const auto lp = parse_text(
      "fvp-reglab problem v1\n"
      "eigensystem: values 1 3.5 9\n"
      "tau: 2\n"
      "phi_tau: values 0.5 0 -0.25\n"
      "source: modes\n"
      "mode 1: const 0.5\n"
      "mode 2: exp 1.5 -0.75\n"
      "mode 3: samples [0, 0.5, 1, 0.5, 0] step 0.5\n");
  CHECK_FALSE(lp.problem.has_truth());
  CHECK(lp.problem.phi_tau()[2] == -0.25);
  CHECK(lp.problem.source().mode(0)(0.7) == 0.5);
  CHECK(lp.problem.source().mode(1)(0.0) == 1.5);
  CHECK(lp.problem.source().mode(2)(0.75) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_FALSE(lp.source_condition.has_value());
  CHECK_FALSE(lp.noise.has_value());
}

TEST_CASE("grammar variants") {
  SUBCASE("colon form of the built-in spectrum") {
    const auto lp = parse_text(
        "fvp-reglab problem v1\n"
        "eigensystem: dirichlet_laplacian: 3\n"
        "tau: 1\n"
        "phi_tau: values 1 0 0\n");
    CHECK(lp.problem.eigensystem().max_eigenvalue() == 9.0);
  }
  SUBCASE("uniform constant source") {
    const auto lp = parse_text(
        "fvp-reglab problem v1\n"
        "eigensystem: values 1 2\n"
        "tau: 1\n"
        "phi_tau: values 0 0\n"
        "source: const 0.75\n");
    CHECK(lp.problem.source().mode(0)(0.3) == 0.75);
    CHECK(lp.problem.source().mode(1)(0.9) == 0.75);
  }
  SUBCASE("single mode initial state") {
    const auto lp = parse_text(
        "fvp-reglab problem v1\n"
        "eigensystem: values 1 2 4\n"
        "tau: 1\n"
        "u0: mode 2\n"
        "phi_tau: manufactured\n");
    CHECK(lp.problem.truth(0.0)[1] == 1.0);
    CHECK(lp.problem.truth(0.0)[0] == 0.0);
  }
  SUBCASE("power source condition") {
    const auto lp = parse_text(
        "fvp-reglab problem v1\n"
        "eigensystem: values 1\n"
        "tau: 1\n"
        "phi_tau: values 1\n"
        "source_condition: power p=2 rho=4\n");
    CHECK(lp.source_condition->exponent() == 2.0);
  }
}

TEST_CASE("diagnostics carry the offending line") {
  SUBCASE("missing header") {
    CHECK(error_line("eigensystem: values 1\n") == 1);
  }
  SUBCASE("bad number in tau") {
    CHECK(error_line("fvp-reglab problem v1\n"
                     "eigensystem: values 1\n"
                     "tau: banana\n") == 3);
  }
  SUBCASE("unknown key") {
    CHECK(error_line("fvp-reglab problem v1\n"
                     "eigensystem: values 1\n"
                     "tau: 1\n"
                     "phi_tau: values 1\n"
                     "flux_capacitor: 88\n") == 5);
  }
  SUBCASE("wrong phi_tau arity") {
    CHECK(error_line("fvp-reglab problem v1\n"
                     "eigensystem: values 1 2\n"
                     "tau: 1\n"
                     "phi_tau: values 1\n") == 4);
  }
  SUBCASE("mode line without a source section") {
    CHECK(error_line("fvp-reglab problem v1\n"
                     "eigensystem: values 1\n"
                     "tau: 1\n"
                     "phi_tau: values 1\n"
                     "mode 1: const 2\n") == 5);
  }
  SUBCASE("mode index out of range") {
    CHECK(error_line("fvp-reglab problem v1\n"
                     "eigensystem: values 1\n"
                     "tau: 1\n"
                     "phi_tau: values 1\n"
                     "source: modes\n"
                     "mode 2: const 1\n") == 6);
  }
  SUBCASE("malformed samples entry") {
    CHECK(error_line("fvp-reglab problem v1\n"
                     "eigensystem: values 1\n"
                     "tau: 1\n"
                     "phi_tau: values 1\n"
                     "source: modes\n"
                     "mode 1: samples [0, 1 step 0.5\n") == 6);
  }
  SUBCASE("missing required sections are reported past the last line") {
    CHECK(error_line("fvp-reglab problem v1\n"
                     "eigensystem: values 1\n"
                     "tau: 1\n") == 4);
  }
  SUBCASE("u0 with explicit phi_tau") {
    CHECK(error_line("fvp-reglab problem v1\n"
                     "eigensystem: values 1\n"
                     "tau: 1\n"
                     "u0: values 1\n"
                     "phi_tau: values 1\n") == 6);
  }
  SUBCASE("what() is file:line prefixed") {
    std::istringstream in("fvp-reglab problem v1\nnope\n");
    try {
      parse_problem(in, "demo.fvp");
      FAIL("expected a ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).rfind("demo.fvp:2:", 0) == 0);
    }
  }
}

TEST_CASE("write then parse round trip") {
  const auto es = make_dirichlet_laplacian(5);
  std::vector<double> u0(5);
  for (std::size_t n = 0; n < 5; ++n) u0[n] = std::exp(-0.3 * es.eigenvalue(n));
  SourceTerm source = SourceTerm::zero(5);
  ProblemSpec spec{es, 1.25, SpectralVector(u0), std::nullopt, source,
                   SourceCondition::exponential(0.5, 3.25), NoiseSpec{1e-4, 0.75, 13}};

  std::ostringstream out;
  write_problem(out, spec);
  const std::string text = out.str();
  CHECK(text.find("eigensystem: dirichlet_laplacian 5") != std::string::npos);

  const auto lp = parse_text(text);
  CHECK(lp.problem.tau() == 1.25);
  REQUIRE(lp.u0.has_value());
  for (std::size_t n = 0; n < 5; ++n) CHECK((*lp.u0)[n] == u0[n]);
  CHECK(lp.source_condition->rho() == 3.25);
  CHECK(lp.noise->seed == 13);
  CHECK(lp.noise->split == 0.75);

  SUBCASE("per-mode sources survive the round trip bit-exactly") {
    SourceTerm rich(std::vector<ModeFunction>{
        ModeFunction::constant(0.12345678901234567), ModeFunction::exponential(1.5, -2.25),
        ModeFunction::sampled({0.0, 0.125, 0.5, 1.125, 2.0, 3.125}, 0.25), ModeFunction::zero(),
        ModeFunction::zero()});
    // explicit final data: no forward solve, the check is purely about io
    ProblemSpec spec2{es, 1.25, std::nullopt, SpectralVector(u0), rich, std::nullopt,
                      std::nullopt};
    std::ostringstream out2;
    write_problem(out2, spec2);
    const auto lp2 = parse_text(out2.str());
    for (const double s : {0.0, 0.3, 0.7, 1.2}) {
      for (std::size_t n = 0; n < 5; ++n)
        CHECK(lp2.problem.source().mode(n)(s) == rich.mode(n)(s));
    }
  }
  SUBCASE("explicit final data round trips") {
    ProblemSpec spec3{es, 2.0, std::nullopt, SpectralVector(u0), source, std::nullopt,
                      std::nullopt};
    std::ostringstream out3;
    write_problem(out3, spec3);
    const auto lp3 = parse_text(out3.str());
    CHECK_FALSE(lp3.problem.has_truth());
    for (std::size_t n = 0; n < 5; ++n) CHECK(lp3.problem.phi_tau()[n] == u0[n]);
  }
}

TEST_CASE("cli grammar helpers") {
  SUBCASE("geometric delta grid") {
    const auto g = parse_delta_grid("1e-1:1e-6:6");
    REQUIRE(g.size() == 6);
    CHECK(g.front() == 1e-1);
    CHECK(g.back() == 1e-6);
  }
  SUBCASE("explicit delta list") {
    CHECK(parse_delta_grid("1e-2,1e-3") == std::vector<double>{1e-2, 1e-3});
    CHECK_THROWS_AS(parse_delta_grid("1e-2,-1e-3"), std::invalid_argument);
  }
  SUBCASE("seed count and list") {
    CHECK(parse_seed_list("3") == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(parse_seed_list("4,8,15") == std::vector<std::uint64_t>{4, 8, 15});
    CHECK_THROWS_AS(parse_seed_list("0"), std::invalid_argument);
  }
  SUBCASE("source condition spec") {
    const auto sc = parse_source_condition("exp gamma=2");
    CHECK(sc.family == SourceCondition::Family::exponential);
    CHECK(sc.gamma_or_p == 2.0);
    CHECK(sc.rho == 0.0);
    CHECK_THROWS_AS(sc.build(), std::invalid_argument);  // rho unresolved
    const auto sc2 = parse_source_condition("power p=1.5 rho=2.5");
    CHECK(sc2.build().exponent() == 1.5);
    CHECK_THROWS_AS(parse_source_condition("sobolev s=1"), std::invalid_argument);
  }
}

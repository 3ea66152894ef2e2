#include "reglab/problem_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>

namespace reglab {

namespace {

constexpr const char* kHeader = "fvp-reglab problem v1";

std::string trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Cursor {
  std::string filename;
  int line = 0;

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(filename, line, message);
  }
};

double parse_num(const std::string& tok, const Cursor& at) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) at.fail("expected a number, got '" + tok + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& tok, const Cursor& at) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    at.fail("expected a non-negative integer, got '" + tok + "'");
  return v;
}

std::vector<double> parse_nums(const std::vector<std::string>& toks, std::size_t from,
                               const Cursor& at) {
  std::vector<double> out;
  for (std::size_t i = from; i < toks.size(); ++i) out.push_back(parse_num(toks[i], at));
  return out;
}

// key=value pairs separated by whitespace.
std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& rest,
                                                          const Cursor& at) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& tok : split_ws(rest)) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == tok.size())
      at.fail("expected key=value, got '" + tok + "'");
    out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return out;
}

ModeTerm parse_mode_entry(const std::string& rest, const Cursor& at) {
  const auto toks = split_ws(rest);
  if (toks.empty()) at.fail("empty source entry");
  if (toks[0] == "const") {
    if (toks.size() != 2) at.fail("const entry needs exactly one value");
    return ConstantMode{parse_num(toks[1], at)};
  }
  if (toks[0] == "exp") {
    if (toks.size() != 3) at.fail("exp entry needs amplitude and rate");
    return ExponentialMode{parse_num(toks[1], at), parse_num(toks[2], at)};
  }
  if (toks[0] == "samples") {
    const auto open = rest.find('[');
    const auto close = rest.find(']');
    if (open == std::string::npos || close == std::string::npos || close < open)
      at.fail("samples entry needs a [v0, v1, ...] list");
    std::string inside = rest.substr(open + 1, close - open - 1);
    std::replace(inside.begin(), inside.end(), ',', ' ');
    const auto vals = parse_nums(split_ws(inside), 0, at);
    if (vals.size() < 2) at.fail("samples entry needs at least 2 values");
    const auto tail = split_ws(rest.substr(close + 1));
    if (tail.size() != 2 || tail[0] != "step") at.fail("samples entry needs 'step <h>'");
    const double step = parse_num(tail[1], at);
    if (!(step > 0.0)) at.fail("sample step must be positive");
    return SampledMode{vals, step};
  }
  at.fail("unknown source entry '" + toks[0] + "' (expected const, exp or samples)");
}

void write_mode_term(std::ostream& out, std::size_t mode_1based, const ModeTerm& term) {
  out << "mode " << mode_1based << ": ";
  if (const auto* c = std::get_if<ConstantMode>(&term)) {
    out << "const " << format_g17(c->value);
  } else if (const auto* e = std::get_if<ExponentialMode>(&term)) {
    out << "exp " << format_g17(e->amplitude) << ' ' << format_g17(e->rate);
  } else {
    const auto& g = std::get<SampledMode>(term);
    out << "samples [";
    for (std::size_t i = 0; i < g.values.size(); ++i)
      out << (i ? ", " : "") << format_g17(g.values[i]);
    out << "] step " << format_g17(g.step);
  }
  out << '\n';
}

bool is_dirichlet_spectrum(const EigenSystem& es) {
  for (std::size_t k = 0; k < es.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    if (es.eigenvalue(k) != kk * kk) return false;
  }
  return true;
}

}  // namespace

ParseError::ParseError(const std::string& filename, int line, const std::string& message)
    : std::runtime_error(filename + ":" + std::to_string(line) + ": " + message), line_(line) {}

LoadedProblem parse_problem(std::istream& in, const std::string& filename) {
  Cursor at{filename, 0};

  std::optional<EigenSystem> es;
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::optional<SpectralVector> u0;
  std::optional<SpectralVector> phi_explicit;
  bool phi_manufactured = false;
  std::optional<std::vector<ModeFunction>> modes;
  std::optional<SourceCondition> sc;
  std::optional<NoiseSpec> noise;
  bool header_seen = false;
  bool mode_lines_allowed = false;

  const auto require_es = [&]() -> const EigenSystem& {
    if (!es) at.fail("eigensystem must be declared before this line");
    return *es;
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++at.line;
    const auto hash = raw.find('#');
    std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;

    if (!header_seen) {
      if (text != kHeader) at.fail(std::string("expected header '") + kHeader + "'");
      header_seen = true;
      continue;
    }

    const auto colon = text.find(':');
    if (colon == std::string::npos) at.fail("expected 'key: value'");
    const std::string key = trim(text.substr(0, colon));
    const std::string rest = trim(text.substr(colon + 1));

    if (key != "mode" && key.rfind("mode ", 0) != 0) mode_lines_allowed = false;

    if (key == "eigensystem") {
      if (es) at.fail("duplicate eigensystem");
      auto toks = split_ws(rest);
      // tolerate the colon form "dirichlet_laplacian: N"
      if (!toks.empty() && toks[0] == "dirichlet_laplacian:") toks[0] = "dirichlet_laplacian";
      if (toks.empty()) at.fail("eigensystem needs 'dirichlet_laplacian <N>' or 'values ...'");
      try {
        if (toks[0] == "dirichlet_laplacian") {
          if (toks.size() != 2) at.fail("dirichlet_laplacian needs a mode count");
          es = make_dirichlet_laplacian(static_cast<std::size_t>(parse_uint(toks[1], at)));
        } else if (toks[0] == "values") {
          es = EigenSystem(parse_nums(toks, 1, at));
        } else {
          at.fail("unknown eigensystem form '" + toks[0] + "'");
        }
      } catch (const std::invalid_argument& e) {
        at.fail(e.what());
      }
    } else if (key == "tau") {
      if (!std::isnan(tau)) at.fail("duplicate tau");
      tau = parse_num(rest, at);
      if (!(tau > 0.0)) at.fail("tau must be positive");
    } else if (key == "u0") {
      if (u0) at.fail("duplicate u0");
      const auto& sys = require_es();
      const auto toks = split_ws(rest);
      if (toks.empty()) at.fail("u0 needs 'decay <r>', 'mode <k>' or 'values ...'");
      if (toks[0] == "decay") {
        if (toks.size() != 2) at.fail("u0 decay needs a rate");
        const double r = parse_num(toks[1], at);
        std::vector<double> c(sys.size());
        for (std::size_t n = 0; n < sys.size(); ++n) c[n] = std::exp(-r * sys.eigenvalue(n));
        u0 = SpectralVector(std::move(c));
      } else if (toks[0] == "mode") {
        if (toks.size() != 2) at.fail("u0 mode needs an index");
        const auto k = parse_uint(toks[1], at);
        if (k < 1 || k > sys.size()) at.fail("u0 mode index out of range");
        u0 = SpectralVector::unit(sys.size(), static_cast<std::size_t>(k - 1));
      } else if (toks[0] == "values") {
        const auto vals = parse_nums(toks, 1, at);
        if (vals.size() != sys.size()) at.fail("u0 needs one value per mode");
        u0 = SpectralVector(vals);
      } else {
        at.fail("unknown u0 form '" + toks[0] + "'");
      }
    } else if (key == "phi_tau") {
      if (phi_explicit || phi_manufactured) at.fail("duplicate phi_tau");
      if (rest == "manufactured") {
        phi_manufactured = true;
      } else {
        const auto toks = split_ws(rest);
        if (toks.empty() || toks[0] != "values")
          at.fail("phi_tau needs 'manufactured' or 'values ...'");
        const auto vals = parse_nums(toks, 1, at);
        if (vals.size() != require_es().size()) at.fail("phi_tau needs one value per mode");
        phi_explicit = SpectralVector(vals);
      }
    } else if (key == "source") {
      if (modes) at.fail("duplicate source");
      const auto& sys = require_es();
      modes.emplace(sys.size());
      if (rest == "zero") {
        // all modes zero
      } else if (rest == "modes") {
        mode_lines_allowed = true;
      } else {
        const auto toks = split_ws(rest);
        if (toks.size() == 2 && toks[0] == "const") {
          const double c = parse_num(toks[1], at);
          if (c != 0.0)
            for (auto& m : *modes) m.add_term(ConstantMode{c});
        } else {
          at.fail("source needs 'zero', 'const <c>' or 'modes'");
        }
      }
    } else if (key.rfind("mode ", 0) == 0 || key == "mode") {
      if (!mode_lines_allowed || !modes)
        at.fail("mode lines are only valid directly after 'source: modes'");
      const auto toks = split_ws(key);
      if (toks.size() != 2) at.fail("expected 'mode <k>: <entry>'");
      const auto k = parse_uint(toks[1], at);
      if (k < 1 || k > modes->size()) at.fail("mode index out of range");
      try {
        (*modes)[k - 1].add_term(parse_mode_entry(rest, at));
      } catch (const std::invalid_argument& e) {
        at.fail(e.what());
      }
      mode_lines_allowed = true;
    } else if (key == "source_condition") {
      if (sc) at.fail("duplicate source_condition");
      try {
        const auto spec = parse_source_condition(rest);
        if (spec.rho == 0.0) at.fail("source_condition in a problem file needs rho=<real>");
        sc = spec.build();
      } catch (const std::invalid_argument& e) {
        at.fail(e.what());
      }
    } else if (key == "noise") {
      if (noise) at.fail("duplicate noise");
      NoiseSpec spec;
      bool have_delta = false;
      for (const auto& [k, v] : parse_kv(rest, at)) {
        if (k == "delta") {
          spec.delta = parse_num(v, at);
          have_delta = true;
        } else if (k == "split") {
          spec.split = parse_num(v, at);
        } else if (k == "seed") {
          spec.seed = parse_uint(v, at);
        } else {
          at.fail("unknown noise field '" + k + "'");
        }
      }
      if (!have_delta) at.fail("noise needs delta=<real>");
      if (!(spec.delta > 0.0)) at.fail("noise delta must be positive");
      if (!(spec.split >= 0.0) || !(spec.split <= 1.0)) at.fail("noise split must lie in [0, 1]");
      noise = spec;
    } else {
      at.fail("unknown key '" + key + "'");
    }
  }

  at.line += 1;  // end-of-file diagnostics point just past the last line
  if (!header_seen) at.fail(std::string("empty file; expected header '") + kHeader + "'");
  if (!es) at.fail("missing eigensystem");
  if (std::isnan(tau)) at.fail("missing tau");
  if (!phi_manufactured && !phi_explicit) at.fail("missing phi_tau");
  if (phi_manufactured && !u0) at.fail("phi_tau: manufactured needs a u0 line");
  if (phi_explicit && u0) at.fail("u0 is only valid with 'phi_tau: manufactured'");
  if (!modes) modes.emplace(es->size());  // default zero source

  SourceTerm source(std::move(*modes));
  try {
    if (phi_manufactured) {
      FinalValueProblem problem = manufacture_problem(*es, tau, *u0, source);
      return LoadedProblem{std::move(problem), std::move(sc), noise, std::move(u0)};
    }
    FinalValueProblem problem(*es, tau, std::move(*phi_explicit), std::move(source));
    return LoadedProblem{std::move(problem), std::move(sc), noise, std::nullopt};
  } catch (const std::invalid_argument& e) {
    at.fail(e.what());
  }
}

LoadedProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file: " + path);
  return parse_problem(in, path);
}

void write_problem(std::ostream& out, const ProblemSpec& spec) {
  if (static_cast<bool>(spec.u0) == static_cast<bool>(spec.phi_tau))
    throw std::invalid_argument("write_problem: set exactly one of u0 and phi_tau");
  if (spec.source_condition &&
      spec.source_condition->family() == SourceCondition::Family::general)
    throw std::invalid_argument("write_problem: general source conditions are not serializable");

  out << kHeader << '\n';
  if (!spec.eigensystem.label().empty()) out << "# " << spec.eigensystem.label() << '\n';

  if (is_dirichlet_spectrum(spec.eigensystem)) {
    out << "eigensystem: dirichlet_laplacian " << spec.eigensystem.size() << '\n';
  } else {
    out << "eigensystem: values";
    for (double lam : spec.eigensystem.eigenvalues()) out << ' ' << format_g17(lam);
    out << '\n';
  }
  out << "tau: " << format_g17(spec.tau) << '\n';

  if (spec.u0) {
    out << "u0: values";
    for (double c : spec.u0->coefficients()) out << ' ' << format_g17(c);
    out << '\n';
    out << "phi_tau: manufactured\n";
  } else {
    out << "phi_tau: values";
    for (double c : spec.phi_tau->coefficients()) out << ' ' << format_g17(c);
    out << '\n';
  }

  bool any_source = false;
  for (std::size_t n = 0; n < spec.source.mode_count(); ++n)
    any_source = any_source || !spec.source.mode(n).is_zero();
  if (!any_source) {
    out << "source: zero\n";
  } else {
    out << "source: modes\n";
    for (std::size_t n = 0; n < spec.source.mode_count(); ++n)
      for (const auto& term : spec.source.mode(n).terms()) write_mode_term(out, n + 1, term);
  }

  if (spec.source_condition) {
    const auto& sc = *spec.source_condition;
    if (sc.family() == SourceCondition::Family::exponential)
      out << "source_condition: exp gamma=" << format_g17(sc.gamma())
          << " rho=" << format_g17(sc.rho()) << '\n';
    else
      out << "source_condition: power p=" << format_g17(sc.exponent())
          << " rho=" << format_g17(sc.rho()) << '\n';
  }
  if (spec.noise) {
    out << "noise: delta=" << format_g17(spec.noise->delta)
        << " split=" << format_g17(spec.noise->split) << " seed=" << spec.noise->seed << '\n';
  }
}

void write_problem_file(const std::string& path, const ProblemSpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write problem file: " + path);
  write_problem(out, spec);
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

std::vector<double> parse_delta_grid(const std::string& text) {
  Cursor at{"--deltas", 0};
  if (text.find(':') != std::string::npos) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ':', ' ');
    const auto toks = split_ws(s);
    if (toks.size() != 3) throw std::invalid_argument("--deltas geometric form is first:last:count");
    const double first = parse_num(toks[0], at);
    const double last = parse_num(toks[1], at);
    const auto count = parse_uint(toks[2], at);
    return geometric_grid(first, last, static_cast<std::size_t>(count));
  }
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  const auto toks = split_ws(s);
  if (toks.empty()) throw std::invalid_argument("--deltas must not be empty");
  std::vector<double> out;
  for (const auto& tok : toks) {
    const double d = parse_num(tok, at);
    if (!(d > 0.0)) throw std::invalid_argument("--deltas entries must be positive");
    out.push_back(d);
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  Cursor at{"--seeds", 0};
  if (text.find(',') == std::string::npos) {
    const auto count = parse_uint(text, at);
    if (count == 0) throw std::invalid_argument("--seeds count must be >= 1");
    std::vector<std::uint64_t> seeds(count);
    for (std::uint64_t i = 0; i < count; ++i) seeds[i] = i + 1;
    return seeds;
  }
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  const auto toks = split_ws(s);
  if (toks.empty()) throw std::invalid_argument("--seeds must not be empty");
  std::vector<std::uint64_t> seeds;
  for (const auto& tok : toks) seeds.push_back(parse_uint(tok, at));
  return seeds;
}

SourceConditionSpec parse_source_condition(const std::string& text) {
  Cursor at{"source_condition", 0};
  const auto toks = split_ws(text);
  if (toks.empty())
    throw std::invalid_argument("source condition needs 'exp gamma=...' or 'power p=...'");

  SourceConditionSpec spec;
  std::string params;
  for (std::size_t i = 1; i < toks.size(); ++i) params += toks[i] + ' ';

  bool have_main = false;
  if (toks[0] == "exp") {
    spec.family = SourceCondition::Family::exponential;
    for (const auto& [k, v] : parse_kv(params, at)) {
      if (k == "gamma") {
        spec.gamma_or_p = parse_num(v, at);
        have_main = true;
      } else if (k == "rho") {
        spec.rho = parse_num(v, at);
      } else {
        throw std::invalid_argument("unknown source-condition field '" + k + "'");
      }
    }
    if (!have_main) throw std::invalid_argument("exp source condition needs gamma=<real>");
  } else if (toks[0] == "power") {
    spec.family = SourceCondition::Family::power;
    for (const auto& [k, v] : parse_kv(params, at)) {
      if (k == "p") {
        spec.gamma_or_p = parse_num(v, at);
        have_main = true;
      } else if (k == "rho") {
        spec.rho = parse_num(v, at);
      } else {
        throw std::invalid_argument("unknown source-condition field '" + k + "'");
      }
    }
    if (!have_main) throw std::invalid_argument("power source condition needs p=<real>");
  } else {
    throw std::invalid_argument("unknown source-condition family '" + toks[0] +
                                "' (expected exp or power)");
  }
  return spec;
}

SourceCondition SourceConditionSpec::build() const {
  if (!(rho > 0.0))
    throw std::invalid_argument("source condition: rho must be positive (or resolved first)");
  return family == SourceCondition::Family::exponential
             ? SourceCondition::exponential(gamma_or_p, rho)
             : SourceCondition::power(gamma_or_p, rho);
}

}  // namespace reglab

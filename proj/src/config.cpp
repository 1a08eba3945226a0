#include "cvtail/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <toml++/toml.hpp>

#include "cvtail/errors.hpp"

namespace cvtail {

namespace {

[[noreturn]] void fail(std::string const& where, std::string const& what)
{
  throw ConfigError(where + ": " + what);
}

void reject_unknown(toml::table const& t, std::set<std::string> const& allowed, std::string const& where)
{
  for (auto const& [key, node] : t)
    if (!allowed.count(std::string(key.str())))
      fail(where, "unknown key '" + std::string(key.str()) + "'");
}

double get_double(toml::node const& n, std::string const& where)
{
  if (auto v = n.value_exact<double>())
    return *v;
  if (auto v = n.value_exact<std::int64_t>())
    return static_cast<double>(*v);
  fail(where, "expected a number");
}

std::int64_t get_int(toml::node const& n, std::string const& where)
{
  if (auto v = n.value_exact<std::int64_t>())
    return *v;
  fail(where, "expected an integer");
}

std::size_t get_count(toml::node const& n, std::string const& where)
{
  auto const v = get_int(n, where);
  if (v < 0)
    fail(where, "must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::string get_string(toml::node const& n, std::string const& where)
{
  if (auto v = n.value_exact<std::string>())
    return *v;
  fail(where, "expected a string");
}

bool get_bool(toml::node const& n, std::string const& where)
{
  if (auto v = n.value_exact<bool>())
    return *v;
  fail(where, "expected true or false");
}

std::vector<double> get_doubles(toml::node const& n, std::string const& where)
{
  auto const* arr = n.as_array();
  if (!arr)
    fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < arr->size(); ++i)
    out.push_back(get_double(*arr->get(i), where + "[" + std::to_string(i) + "]"));
  return out;
}

toml::node const& required(toml::table const& t, char const* key, std::string const& where)
{
  auto const* n = t.get(key);
  if (!n)
    fail(where, std::string("missing '") + key + "'");
  return *n;
}

double param(toml::table const& t, char const* key, std::string const& where, std::optional<double> fallback = {})
{
  auto const* n = t.get(key);
  if (!n) {
    if (fallback)
      return *fallback;
    fail(where, std::string("missing '") + key + "'");
  }
  return get_double(*n, where + "." + key);
}

MarginalLaw parse_law(toml::table const& t, std::string const& where)
{
  std::string const law = get_string(required(t, "law", where), where + ".law");
  try {
    if (law == "pareto") {
      reject_unknown(t, {"select", "law", "alpha", "scale"}, where);
      return MarginalLaw::pareto(param(t, "alpha", where), param(t, "scale", where, 1.0));
    }
    if (law == "exponential") {
      reject_unknown(t, {"select", "law", "rate"}, where);
      return MarginalLaw::exponential(param(t, "rate", where, 1.0));
    }
    if (law == "lifted_geometric") {
      reject_unknown(t, {"select", "law", "q"}, where);
      return MarginalLaw::lifted_geometric(param(t, "q", where));
    }
    if (law == "degenerate") {
      reject_unknown(t, {"select", "law", "point"}, where);
      return MarginalLaw::degenerate(param(t, "point", where));
    }
    if (law == "lattice") {
      reject_unknown(t, {"select", "law", "points", "tails"}, where);
      return MarginalLaw(LatticeLaw{get_doubles(required(t, "points", where), where + ".points"),
                                    get_doubles(required(t, "tails", where), where + ".tails")});
    }
  }
  catch (std::invalid_argument const& e) {
    fail(where, e.what());
  }
  fail(where, "unknown law '" + law + "'");
}

Selector parse_selector(toml::node const& n, std::string const& where)
{
  if (auto k = n.value_exact<std::int64_t>()) {
    if (*k < 1)
      fail(where, "summand indices start at 1");
    return Selector::at(static_cast<std::size_t>(*k));
  }
  std::string const s = get_string(n, where);
  if (s == "odd")
    return Selector::odd();
  if (s == "even")
    return Selector::even();
  if (s == "default")
    return Selector::fallback();
  fail(where, "selector must be odd, even, default or an index");
}

CountingLaw parse_counting(toml::table const& t)
{
  std::string const where = "counting";
  std::string const law = get_string(required(t, "law", where), where + ".law");
  try {
    if (law == "poisson") {
      reject_unknown(t, {"law", "lambda"}, where);
      return CountingLaw::poisson(param(t, "lambda", where));
    }
    if (law == "zeta4") {
      reject_unknown(t, {"law"}, where);
      return CountingLaw::zeta4();
    }
    if (law == "geometric") {
      reject_unknown(t, {"law", "q"}, where);
      return CountingLaw::geometric(param(t, "q", where));
    }
    if (law == "finite") {
      reject_unknown(t, {"law", "pmf"}, where);
      return CountingLaw::finite(get_doubles(required(t, "pmf", where), where + ".pmf"));
    }
    if (law == "point_mass") {
      reject_unknown(t, {"law", "n"}, where);
      return CountingLaw::point_mass(get_count(required(t, "n", where), where + ".n"));
    }
  }
  catch (std::invalid_argument const& e) {
    fail(where, e.what());
  }
  fail(where, "unknown law '" + law + "'");
}

RunParams parse_run(toml::table const& t)
{
  std::string const w = "run";
  reject_unknown(t,
                 {"theorem", "d_claim", "conclusion", "x_max", "step", "growth", "eps_trunc", "method", "n", "k", "y",
                  "x_lo", "x_hi", "x_growth", "x", "samples", "seed", "threads", "stratified", "tau_c", "tau_o",
                  "out_dir"},
                 w);
  RunParams p;
  auto num = [&](char const* key, std::optional<double>& dst) {
    if (auto const* n = t.get(key))
      dst = get_double(*n, w + "." + key);
  };
  auto count = [&](char const* key, std::optional<std::size_t>& dst) {
    if (auto const* n = t.get(key))
      dst = get_count(*n, w + "." + key);
  };
  auto flag = [&](char const* key, std::optional<bool>& dst) {
    if (auto const* n = t.get(key))
      dst = get_bool(*n, w + "." + key);
  };
  auto str = [&](char const* key, std::optional<std::string>& dst) {
    if (auto const* n = t.get(key))
      dst = get_string(*n, w + "." + key);
  };
  auto list = [&](char const* key, std::optional<std::vector<double>>& dst) {
    if (auto const* n = t.get(key))
      dst = get_doubles(*n, w + "." + key);
  };
  if (auto const* n = t.get("theorem")) {
    if (auto v = n->value_exact<std::int64_t>())
      p.theorem = std::to_string(*v);
    else
      p.theorem = get_string(*n, w + ".theorem");
  }
  count("d_claim", p.d_claim);
  flag("conclusion", p.conclusion);
  num("x_max", p.x_max);
  num("step", p.step);
  num("growth", p.growth);
  num("eps_trunc", p.eps_trunc);
  str("method", p.method);
  count("n", p.n);
  count("k", p.k);
  list("y", p.y);
  num("x_lo", p.x_lo);
  num("x_hi", p.x_hi);
  num("x_growth", p.x_growth);
  list("x", p.x);
  count("samples", p.samples);
  if (auto const* n = t.get("seed"))
    p.seed = get_count(*n, w + ".seed");
  count("threads", p.threads);
  flag("stratified", p.stratified);
  num("tau_c", p.tau_c);
  num("tau_o", p.tau_o);
  str("out_dir", p.out_dir);
  return p;
}

} // namespace

void RunParams::merge(RunParams const& o)
{
  auto take = [](auto& dst, auto const& src) {
    if (src)
      dst = src;
  };
  take(theorem, o.theorem);
  take(d_claim, o.d_claim);
  take(conclusion, o.conclusion);
  take(x_max, o.x_max);
  take(step, o.step);
  take(growth, o.growth);
  take(eps_trunc, o.eps_trunc);
  take(method, o.method);
  take(n, o.n);
  take(k, o.k);
  take(y, o.y);
  take(x_lo, o.x_lo);
  take(x_hi, o.x_hi);
  take(x_growth, o.x_growth);
  take(x, o.x);
  take(samples, o.samples);
  take(seed, o.seed);
  take(threads, o.threads);
  take(stratified, o.stratified);
  take(tau_c, o.tau_c);
  take(tau_o, o.tau_o);
  take(out_dir, o.out_dir);
}

void validate(RunParams const& p)
{
  auto positive = [](std::optional<double> const& v, char const* name) {
    if (v && !(std::isfinite(*v) && *v > 0))
      throw ConfigError(std::string(name) + " must be a positive number");
  };
  if (p.theorem) {
    static std::set<std::string> const ok = {"1", "2", "3", "C1", "C2"};
    if (!ok.count(*p.theorem))
      throw ConfigError("theorem must be one of 1, 2, 3, C1, C2");
  }
  positive(p.x_max, "x_max");
  positive(p.step, "step");
  positive(p.x_lo, "x_lo");
  positive(p.x_hi, "x_hi");
  positive(p.tau_c, "tau_c");
  positive(p.tau_o, "tau_o");
  if (p.growth && !(*p.growth > 0 && *p.growth < 0.5))
    throw ConfigError("growth must lie in (0, 0.5)");
  if (p.eps_trunc && !(*p.eps_trunc > 0 && *p.eps_trunc < 1))
    throw ConfigError("eps_trunc must lie in (0, 1)");
  if (p.x_growth && !(*p.x_growth > 1 && std::isfinite(*p.x_growth)))
    throw ConfigError("x_growth must exceed 1");
  if (p.x_lo && p.x_hi && !(*p.x_lo < *p.x_hi))
    throw ConfigError("x_lo must be below x_hi");
  if (p.method && *p.method != "auto" && *p.method != "direct" && *p.method != "fft")
    throw ConfigError("method must be auto, direct or fft");
  if (p.n && *p.n < 1)
    throw ConfigError("n must be at least 1");
  if (p.k && *p.k < 1)
    throw ConfigError("k must be at least 1");
  if (p.y) {
    if (p.y->empty())
      throw ConfigError("y must not be empty");
    for (double y : *p.y)
      if (!(y > 0 && y <= 1))
        throw ConfigError("y values must lie in (0, 1]");
  }
  if (p.x) {
    if (p.x->empty())
      throw ConfigError("x must not be empty");
    for (double x : *p.x)
      if (!std::isfinite(x))
        throw ConfigError("x values must be finite");
  }
  if (p.samples && *p.samples < 10000)
    throw ConfigError("samples must be at least 10000");
  if (p.out_dir && p.out_dir->empty())
    throw ConfigError("out_dir must not be empty");
}

RunConfig parse_config(std::string_view text, std::string const& origin)
{
  toml::table doc;
  try {
    doc = toml::parse(text, origin);
  }
  catch (toml::parse_error const& e) {
    std::ostringstream os;
    os << e.description() << " at line " << e.source().begin.line;
    fail(origin, os.str());
  }
  reject_unknown(doc, {"description", "counting", "marginal", "run"}, origin);
  if (auto const* d = doc.get("description"))
    get_string(*d, "description");

  auto const* counting = doc.get_as<toml::table>("counting");
  if (!counting)
    fail(origin, "missing [counting] table");
  auto const* marginals = doc.get_as<toml::array>("marginal");
  if (!marginals || marginals->empty())
    fail(origin, "missing [[marginal]] entries");

  std::vector<RuleEntry> rule;
  for (std::size_t i = 0; i < marginals->size(); ++i) {
    std::string const where = "marginal[" + std::to_string(i) + "]";
    auto const* t = marginals->get(i)->as_table();
    if (!t)
      fail(where, "expected a table");
    auto const* sel = t->get("select");
    Selector const s = sel ? parse_selector(*sel, where + ".select") : Selector::fallback();
    rule.push_back({s, parse_law(*t, where)});
  }
  RunParams run;
  if (auto const* r = doc.get("run")) {
    auto const* t = r->as_table();
    if (!t)
      fail("run", "expected a table");
    run = parse_run(*t);
  }
  validate(run);
  return {ModelSpec(std::move(rule), parse_counting(*counting)), std::move(run)};
}

RunConfig load_config(std::string const& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

} // namespace cvtail

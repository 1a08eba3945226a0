#include "cvtail/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "cvtail/compound.hpp"
#include "cvtail/config.hpp"
#include "cvtail/errors.hpp"
#include "cvtail/montecarlo.hpp"
#include "cvtail/report.hpp"
#include "cvtail/theorem_checker.hpp"

namespace cvtail {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context
{
  std::ostream& out;
  std::ostream& err;
  std::optional<std::string> model_path;
  RunParams flags; // from the command line
  bool compound_ratio = false;
  int example = 0;
};

struct Loaded
{
  ModelSpec model;
  RunParams p;
};

Loaded load(Context const& ctx)
{
  if (!ctx.model_path)
    throw ConfigError("--model is required");
  auto cfg = load_config(*ctx.model_path);
  cfg.run.merge(ctx.flags);
  validate(cfg.run);
  return {std::move(cfg.model), std::move(cfg.run)};
}

std::string out_dir(RunParams const& p, std::string const& fallback_leaf = {})
{
  if (p.out_dir)
    return *p.out_dir;
  std::string base = "cvtail_out";
  if (char const* env = std::getenv(kOutDirEnv); env && *env)
    base = env;
  return fallback_leaf.empty() ? base : (fs::path(base) / fallback_leaf).string();
}

std::uint64_t config_hash(ModelSpec const& model, json const& params)
{
  return fnv1a(model.canonical() + "\n" + params.dump());
}

ConvolutionMethod method_of(RunParams const& p)
{
  std::string const m = p.method.value_or("auto");
  if (m == "direct")
    return ConvolutionMethod::direct;
  if (m == "fft")
    return ConvolutionMethod::fft;
  return ConvolutionMethod::automatic;
}

DiagnosticOptions diagnostics_of(RunParams const& p)
{
  DiagnosticOptions d;
  if (p.tau_c)
    d.tau_c = *p.tau_c;
  if (p.tau_o)
    d.tau_o = *p.tau_o;
  return d;
}

std::string path_in(std::string const& dir, std::string const& file)
{
  return (fs::path(dir) / file).string();
}

void emit(Context& ctx, std::string const& path, std::string const& content)
{
  write_atomic(path, content);
  ctx.out << "wrote " << path << "\n";
}

std::string sci(double v)
{
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// check

TheoremId theorem_of(std::string const& s)
{
  if (s == "1")
    return TheoremId::T1;
  if (s == "2")
    return TheoremId::T2;
  if (s == "3")
    return TheoremId::T3;
  if (s == "C1")
    return TheoremId::C1;
  return TheoremId::C2;
}

CheckOptions check_options(RunParams const& p)
{
  CheckOptions o;
  o.diagnostics = diagnostics_of(p);
  o.conclusion = p.conclusion.value_or(false);
  auto& c = o.conclusion_options;
  if (p.step)
    c.step = *p.step;
  if (p.growth)
    c.growth = *p.growth;
  if (p.x_max)
    c.span = *p.x_max;
  if (p.eps_trunc)
    c.eps_trunc = *p.eps_trunc;
  if (p.x_lo)
    c.x_lo = *p.x_lo;
  c.x_hi = p.x_hi.value_or(c.span);
  c.compound.method = method_of(p);
  return o;
}

json check_params(RunParams const& p, CheckOptions const& o)
{
  json j = {{"conclusion", o.conclusion},
            {"tau_c", o.diagnostics.tau_c},
            {"tau_o", o.diagnostics.tau_o},
            {"moment_band", o.moment_band}};
  if (p.d_claim)
    j["d_claim"] = *p.d_claim;
  if (o.conclusion) {
    auto const& c = o.conclusion_options;
    j["step"] = c.step;
    j["growth"] = c.growth;
    j["span"] = c.span;
    j["eps_trunc"] = c.eps_trunc;
    j["x_lo"] = c.x_lo;
    j["x_hi"] = c.x_hi;
    j["y"] = c.y_grid;
  }
  return j;
}

void write_verdict(Context& ctx, std::string const& dir, std::string const& stem, ModelSpec const& model,
                   TheoremVerdict const& v, json const& params)
{
  auto const hash = config_hash(model, params);
  json doc = report_envelope("verdict", model, hash);
  doc["params"] = params;
  doc["verdict"] = to_json(v);
  emit(ctx, path_in(dir, stem + ".json"), doc.dump(2) + "\n");
  std::ostringstream text;
  write_summary(text, v);
  emit(ctx, path_in(dir, stem + ".txt"), text.str());
}

int cmd_check(Context& ctx)
{
  auto const [model, p] = load(ctx);
  auto const opts = check_options(p);
  auto const params = check_params(p, opts);
  std::string const dir = out_dir(p);

  std::vector<std::string> which;
  if (p.theorem)
    which.push_back(*p.theorem);
  else
    which = {"1", "2", "3"};

  bool any_yes = false, any_open = false;
  int code = exit_codes::not_met;
  for (auto const& w : which) {
    TheoremId const id = theorem_of(w);
    TheoremVerdict v = id == TheoremId::T1 ? check_theorem1(model, p.d_claim, opts) : check(id, model, opts);
    write_summary(ctx.out, v);
    write_verdict(ctx, dir, "check_" + to_string(id), model, v, params);
    any_yes = any_yes || v.hypothesis_met == Hypothesis::yes;
    any_open = any_open || v.hypothesis_met == Hypothesis::inconclusive;
    code = exit_code(v.hypothesis_met);
  }
  if (which.size() > 1)
    code = any_yes ? exit_codes::ok : any_open ? exit_codes::inconclusive : exit_codes::not_met;
  return code;
}

// ---------------------------------------------------------------------------
// tail

LatticeGrid tail_grid(RunParams const& p)
{
  double const x_max = p.x_max.value_or(100.0);
  if (p.step && p.growth)
    return LatticeGrid::hybrid(*p.step, *p.growth, x_max);
  if (p.step)
    return LatticeGrid::uniform(*p.step, x_max);
  if (p.growth)
    return LatticeGrid::hybrid(1.0 / 128.0, *p.growth, x_max);
  return LatticeGrid::default_for(x_max);
}

int cmd_tail(Context& ctx)
{
  auto const [model, p] = load(ctx);
  auto const grid = tail_grid(p);
  double const eps = p.eps_trunc.value_or(1e-12);
  json params = {{"grid", grid.describe()}, {"method", p.method.value_or("auto")}};
  std::vector<std::string> extra;
  std::optional<LatticeTail> tail;
  std::string file;
  if (p.n) {
    params["n"] = *p.n;
    tail = n_fold_tail(model, *p.n, grid, method_of(p));
    file = "nfold_" + std::to_string(*p.n) + ".csv";
    extra.push_back("tail of S_" + std::to_string(*p.n));
  }
  else {
    params["eps_trunc"] = eps;
    auto ct = compound_tail(model, grid, eps, CompoundOptions{method_of(p)});
    auto const& c = ct.certificate;
    extra.push_back("tail of S_eta, truncation N=" + std::to_string(c.n_exact) + " tail_mass=" + sci(c.tail_mass) +
                    " blocks=" + std::to_string(c.blocks) + " remainder=" + sci(c.remainder));
    tail = std::move(ct.tail);
    file = "tail.csv";
  }
  auto const hash = config_hash(model, params);
  auto comments = provenance("tail", model, hash, "x [summand units], lower <= P(S > x) <= upper");
  comments.push_back("grid: " + grid.describe());
  comments.insert(comments.end(), extra.begin(), extra.end());
  std::ostringstream csv;
  write_csv(csv, *tail, comments);
  ctx.out << extra.back() << "\nlattice points " << grid.size() << ", max bracket width " << sci(tail->max_width())
          << "\n";
  emit(ctx, path_in(out_dir(p), file), csv.str());
  return exit_codes::ok;
}

// ---------------------------------------------------------------------------
// ratio

int cmd_ratio(Context& ctx)
{
  auto const [model, p] = load(ctx);
  auto const diag = diagnostics_of(p);
  std::vector<double> const ys = p.y.value_or(std::vector<double>{0.5, 0.8, 0.9, 0.95, 0.99});
  json params = {{"y", ys}, {"tau_c", diag.tau_c}};

  std::optional<TailHandle> h;
  std::string source;
  if (ctx.compound_ratio) {
    double const x_hi = p.x_hi.value_or(1e3);
    double const eps = p.eps_trunc.value_or(1e-8);
    auto const grid = LatticeGrid::default_for(x_hi);
    auto ct = compound_tail(model, grid, eps, CompoundOptions{method_of(p)});
    h = TailHandle::from_lattice(std::move(ct.tail));
    source = "compound tail on " + grid.describe();
    params["source"] = "compound";
    params["eps_trunc"] = eps;
    params["grid"] = grid.describe();
  }
  else {
    std::size_t const k = p.k.value_or(1);
    h = TailHandle::from_law(model.marginal(k));
    source = "xi_" + std::to_string(k) + " = " + model.marginal(k).describe();
    params["source"] = "marginal";
    params["k"] = k;
  }
  GeometricGrid xg;
  if (p.x_lo || p.x_hi || ctx.compound_ratio)
    xg = GeometricGrid::between(p.x_lo.value_or(1.0), p.x_hi.value_or(ctx.compound_ratio ? 1e3 : 1e6),
                                p.x_growth.value_or(1.05));
  else
    xg = default_ratio_grid(*h);
  params["x_grid"] = {xg.x0, xg.growth, xg.count};

  std::vector<RatioDiagnostic> curves;
  std::vector<std::string> notes;
  for (double y : ys) {
    try {
      auto d = ratio_curve(*h, y, xg, diag);
      notes.push_back("y=" + sci(y) + " top-window sup " + sci(d.window_sup) + " trend " + to_string(d.trend) +
                      (d.truncated ? " (truncated)" : ""));
      curves.push_back(std::move(d));
    }
    catch (DomainError const& e) {
      notes.push_back("y=" + sci(y) + " skipped: " + e.what());
    }
  }
  auto const hash = config_hash(model, params);
  auto comments = provenance("ratio", model, hash,
                             "x [summand units], y, ratio = F(xy)/F(x) midpoint, ratio_lo, ratio_hi");
  comments.push_back("source: " + source);
  comments.insert(comments.end(), notes.begin(), notes.end());
  std::ostringstream csv;
  write_ratio_csv(csv, curves, comments);
  for (auto const& n : notes)
    ctx.out << n << "\n";
  emit(ctx, path_in(out_dir(p), "ratio.csv"), csv.str());
  return exit_codes::ok;
}

// ---------------------------------------------------------------------------
// simulate

SimulationOptions simulation_options(RunParams const& p)
{
  SimulationOptions o;
  o.stratified = p.stratified.value_or(true);
  o.threads = static_cast<unsigned>(p.threads.value_or(0));
  return o;
}

json simulate_document(ModelSpec const& model, std::vector<double> const& xs, std::size_t samples, std::uint64_t seed,
                       SimulationOptions const& o, std::ostream& out)
{
  // Thread count never changes results, so it stays out of the hash.
  json params = {{"x", xs}, {"samples", samples}, {"seed", seed}, {"stratified", o.stratified}};
  json doc = report_envelope("estimates", model, config_hash(model, params));
  doc["params"] = params;
  json est = json::array();
  out << std::setw(14) << "x" << std::setw(16) << "p_hat" << std::setw(16) << "ci_low" << std::setw(16) << "ci_high"
      << "\n";
  for (double x : xs) {
    auto const e = simulate_tail(model, x, samples, seed, o);
    out << std::setw(14) << sci(x) << std::setw(16) << sci(e.p_hat) << std::setw(16) << sci(e.ci_low)
        << std::setw(16) << sci(e.ci_high) << (e.degenerate ? "  degenerate" : "") << "\n";
    est.push_back(to_json(e));
  }
  doc["estimates"] = est;
  return doc;
}

int cmd_simulate(Context& ctx)
{
  auto const [model, p] = load(ctx);
  if (!p.x)
    throw ConfigError("simulate needs x values (--x or run.x)");
  auto const doc =
    simulate_document(model, *p.x, p.samples.value_or(1000000), p.seed.value_or(1), simulation_options(p), ctx.out);
  emit(ctx, path_in(out_dir(p), "simulate.json"), doc.dump(2) + "\n");
  return exit_codes::ok;
}

// ---------------------------------------------------------------------------
// reproduce

// Lattice points where the upper bracket first drops below each target.
std::vector<double> x_at_levels(LatticeTail const& t, std::vector<double> const& levels)
{
  std::vector<double> xs;
  for (double level : levels)
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
      if (t.upper()[static_cast<Eigen::Index>(i)] <= level) {
        xs.push_back(t.grid().point(i));
        break;
      }
  return xs;
}

int cmd_reproduce(Context& ctx)
{
  RunParams p = ctx.flags;
  validate(p);
  int const ex = ctx.example;
  ModelSpec const model = ex == 1 ? example1_model() : example2_model();
  TheoremId const expected = ex == 1 ? TheoremId::T2 : TheoremId::T3;
  std::string const dir = out_dir(p, "example" + std::to_string(ex));

  CheckOptions opts = check_options(p);
  opts.conclusion = false; // the compound tail is computed once below
  auto const& co = opts.conclusion_options;
  auto const grid = LatticeGrid::hybrid(co.step, co.growth, co.span);
  auto const ct = compound_tail(model, grid, co.eps_trunc, co.compound);
  auto const concl = conclusion_from_tail(ct, co, opts.diagnostics);

  json params = check_params(p, opts);
  params["example"] = ex;
  params["step"] = co.step;
  params["growth"] = co.growth;
  params["span"] = co.span;
  params["eps_trunc"] = co.eps_trunc;
  params["x_lo"] = co.x_lo;
  params["x_hi"] = co.x_hi;

  json bundle = report_envelope("bundle", model, config_hash(model, params));
  bundle["params"] = params;
  bundle["example"] = ex;
  bundle["expected_theorem"] = to_string(expected);
  std::ostringstream summary;
  int code = exit_codes::not_met;
  for (TheoremId id : {TheoremId::T2, TheoremId::T3}) {
    TheoremVerdict v = check(id, model, opts);
    v.conclusion_check = concl.c;
    v.certificate = concl.certificate;
    v.conclusion_note = "max relative bracket width " + sci(concl.max_relative_width);
    write_summary(summary, v);
    write_verdict(ctx, dir, "check_" + to_string(id), model, v, params);
    bundle["verdicts"][to_string(id)] = to_string(v.hypothesis_met);
    if (id == expected)
      code = exit_code(v.hypothesis_met);
  }
  bundle["conclusion"] = to_json(concl.c);
  bundle["certificate"] = to_json(concl.certificate);
  bundle["max_relative_width"] = concl.max_relative_width;

  {
    auto comments = provenance("reproduce", model, config_hash(model, params),
                               "x [summand units], lower <= P(S_eta > x) <= upper");
    comments.push_back("grid: " + grid.describe());
    std::ostringstream csv;
    write_csv(csv, ct.tail, comments);
    emit(ctx, path_in(dir, "compound_tail.csv"), csv.str());
  }
  {
    auto const h = TailHandle::from_law(model.marginal(1));
    std::vector<RatioDiagnostic> curves;
    for (double y : {0.5, 0.8, 0.9, 0.95, 0.99})
      curves.push_back(ratio_curve(h, y, default_ratio_grid(h), opts.diagnostics));
    auto comments = provenance("reproduce", model, config_hash(model, params),
                               "x [summand units], y, ratio = F(xy)/F(x) midpoint, ratio_lo, ratio_hi");
    comments.push_back("source: xi_1 = " + model.marginal(1).describe());
    std::ostringstream csv;
    write_ratio_csv(csv, curves, comments);
    emit(ctx, path_in(dir, "ratio_xi1.csv"), csv.str());
  }
  {
    auto const xs = x_at_levels(ct.tail, {1e-2, 1e-3, 1e-4});
    std::ostringstream table;
    auto doc = simulate_document(model, xs, p.samples.value_or(1000000), p.seed.value_or(1), simulation_options(p),
                                 table);
    json cmp = json::array();
    for (auto const& e : doc["estimates"]) {
      auto const b = ct.tail.at(e["x"].get<double>());
      bool const overlap = e["ci_low"].get<double>() <= b.upper && e["ci_high"].get<double>() >= b.lower;
      cmp.push_back({{"x", e["x"]}, {"lower", b.lower}, {"upper", b.upper}, {"interval_intersects", overlap}});
    }
    doc["bracket"] = cmp;
    bundle["simulation"] = cmp;
    summary << "simulation vs bracket:\n" << table.str();
    emit(ctx, path_in(dir, "simulate.json"), doc.dump(2) + "\n");
  }
  bundle["files"] = {"check_T2.json", "check_T2.txt", "check_T3.json", "check_T3.txt", "compound_tail.csv",
                     "ratio_xi1.csv", "simulate.json", "summary.txt"};
  emit(ctx, path_in(dir, "summary.txt"), summary.str());
  emit(ctx, path_in(dir, "bundle.json"), bundle.dump(2) + "\n");
  ctx.out << summary.str();
  return code;
}

// ---------------------------------------------------------------------------

template <class T>
CLI::Option* flag_value(CLI::App* app, std::string const& name, std::optional<T>& dst, std::string const& help)
{
  return app->add_option_function<T>(name, [&dst](T const& v) { dst = v; }, help);
}

void model_option(CLI::App* app, Context& ctx)
{
  flag_value(app, "--model", ctx.model_path, "model document (TOML)");
}

void out_option(CLI::App* app, Context& ctx)
{
  flag_value(app, "--out", ctx.flags.out_dir, std::string("output directory (default $") + kOutDirEnv + " or cvtail_out)");
}

void lattice_options(CLI::App* app, Context& ctx)
{
  flag_value(app, "--x-max", ctx.flags.x_max, "largest x of the lattice");
  flag_value(app, "--step", ctx.flags.step, "lattice step");
  flag_value(app, "--growth", ctx.flags.growth, "relative spacing of the geometric part of a hybrid lattice");
  flag_value(app, "--eps-trunc", ctx.flags.eps_trunc, "truncation bound on P(eta > N)");
  flag_value(app, "--method", ctx.flags.method, "convolution: auto, direct or fft");
}

void threshold_options(CLI::App* app, Context& ctx)
{
  flag_value(app, "--tau-c", ctx.flags.tau_c, "C-class tolerance on the c-index");
  flag_value(app, "--tau-o", ctx.flags.tau_o, "little-o threshold");
}

int dispatch(std::exception_ptr ep, std::ostream& err)
{
  try {
    std::rethrow_exception(ep);
  }
  catch (ConfigError const& e) {
    err << "config error: " << e.what() << "\n";
    return exit_codes::config;
  }
  catch (PremiseViolated const& e) {
    err << "premise violated: " << e.what() << "\n";
    return exit_codes::premise;
  }
  catch (DomainError const& e) {
    err << "domain error: " << e.what() << "\n";
    return exit_codes::domain;
  }
  catch (TruncationUnreachable const& e) {
    err << "truncation unreachable: " << e.what() << "\n";
    return exit_codes::truncation;
  }
  catch (InfiniteMean const& e) {
    err << "infinite mean: " << e.what() << "\n";
    return exit_codes::infinite_mean;
  }
  catch (NonNegativityViolated const& e) {
    err << "negative support: " << e.what() << "\n";
    return exit_codes::negative_support;
  }
  catch (UnsupportedLaw const& e) {
    err << "unsupported law: " << e.what() << "\n";
    return exit_codes::unsupported_law;
  }
  catch (std::invalid_argument const& e) {
    err << "invalid argument: " << e.what() << "\n";
    return exit_codes::config;
  }
  catch (std::exception const& e) {
    err << "error: " << e.what() << "\n";
    return exit_codes::internal;
  }
}

} // namespace

int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
  Context ctx{out, err, std::nullopt, {}, false, 0};
  CLI::App app{"cvtail: consistently varying tails of randomly stopped sums", "cvtail"};
  app.require_subcommand(1);
  std::function<int(Context&)> command;

  auto* check = app.add_subcommand("check", "evaluate the hypotheses of Theorems 1-3 or Corollaries 1-2");
  model_option(check, ctx);
  out_option(check, ctx);
  flag_value(check, "--theorem", ctx.flags.theorem, "1, 2, 3, C1 or C2 (default: 1, 2 and 3)");
  flag_value(check, "--d-claim", ctx.flags.d_claim, "D in P(eta <= D) = 1 for Theorem 1");
  check->add_flag_function("--conclusion", [&](std::int64_t) { ctx.flags.conclusion = true; },
                           "also compute the compound tail and its c-index");
  lattice_options(check, ctx);
  flag_value(check, "--x-lo", ctx.flags.x_lo, "lower end of the conclusion window");
  flag_value(check, "--x-hi", ctx.flags.x_hi, "upper end of the conclusion window");
  threshold_options(check, ctx);
  check->callback([&] { command = cmd_check; });

  auto* tail = app.add_subcommand("tail", "bracketed tail of S_eta (or S_n with --n) as CSV");
  model_option(tail, ctx);
  out_option(tail, ctx);
  lattice_options(tail, ctx);
  flag_value(tail, "--n", ctx.flags.n, "fixed number of summands instead of eta");
  tail->callback([&] { command = cmd_tail; });

  auto* ratio = app.add_subcommand("ratio", "ratio curves F(xy)/F(x) as CSV");
  model_option(ratio, ctx);
  out_option(ratio, ctx);
  flag_value(ratio, "--k", ctx.flags.k, "summand index (default 1)");
  ratio->add_flag("--compound", ctx.compound_ratio, "use the bracketed compound tail instead of a summand");
  flag_value(ratio, "--y", ctx.flags.y, "y values, comma separated")->delimiter(',');
  flag_value(ratio, "--x-lo", ctx.flags.x_lo, "first x");
  flag_value(ratio, "--x-hi", ctx.flags.x_hi, "last x");
  flag_value(ratio, "--x-growth", ctx.flags.x_growth, "ratio between consecutive x");
  flag_value(ratio, "--eps-trunc", ctx.flags.eps_trunc, "truncation bound for --compound");
  flag_value(ratio, "--method", ctx.flags.method, "convolution: auto, direct or fft");
  threshold_options(ratio, ctx);
  ratio->callback([&] { command = cmd_ratio; });

  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimates of P(S_eta > x) as JSON");
  model_option(sim, ctx);
  out_option(sim, ctx);
  flag_value(sim, "--x", ctx.flags.x, "x values, comma separated")->delimiter(',');
  flag_value(sim, "--samples", ctx.flags.samples, "samples per estimate (>= 10000)");
  flag_value(sim, "--seed", ctx.flags.seed, "seed");
  flag_value(sim, "--threads", ctx.flags.threads, "worker threads (0 = hardware); results do not depend on it");
  sim->add_flag_function("--plain", [&](std::int64_t) { ctx.flags.stratified = false; },
                         "draw eta per sample instead of stratifying on it");
  sim->callback([&] { command = cmd_simulate; });

  auto* rep = app.add_subcommand("reproduce", "full pipeline bundle for example 1 or 2");
  rep->add_option("example", ctx.example, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  out_option(rep, ctx);
  flag_value(rep, "--samples", ctx.flags.samples, "samples per estimate");
  flag_value(rep, "--seed", ctx.flags.seed, "seed");
  flag_value(rep, "--threads", ctx.flags.threads, "worker threads");
  rep->callback([&] { command = cmd_reproduce; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  }
  catch (CLI::ParseError const& e) {
    int const code = app.exit(e, out, err);
    return code == 0 ? exit_codes::ok : exit_codes::config;
  }
  try {
    return command(ctx);
  }
  catch (...) {
    return dispatch(std::current_exception(), err);
  }
}

} // namespace cvtail

#include "cvtail/tail_classes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "cvtail/errors.hpp"

namespace cvtail {

namespace {

constexpr double kTailFloor = 1e-13;
constexpr double kXCeiling = 1e10;
constexpr double kLiminfFloor = 1e-12;

double log10_span(std::vector<double> const& xs)
{
  return xs.size() < 2 ? 0.0 : std::log10(xs.back() / xs.front());
}

// Window boundaries, top window last: window j covers (edge[j], edge[j+1]].
std::vector<double> window_edges(std::vector<double> const& xs, std::size_t windows)
{
  double const span = log10_span(xs);
  double const w = std::min(1.0, span / static_cast<double>(std::max<std::size_t>(windows, 1)));
  std::vector<double> edges;
  if (!(w > 0)) {
    edges = {0.0, xs.empty() ? 0.0 : xs.back()};
    return edges;
  }
  std::size_t const k = std::min(windows, static_cast<std::size_t>(std::floor(span / w + 1e-9)));
  for (std::size_t j = k + 1; j-- > 0;)
    edges.push_back(xs.back() * std::pow(10.0, -w * static_cast<double>(j)));
  // The oldest window keeps its left endpoint.
  edges.front() = std::nextafter(edges.front(), 0.0);
  return edges;
}

double window_width_decades(std::vector<double> const& edges)
{
  if (edges.size() < 2 || !(edges[edges.size() - 2] > 0))
    return 0.0;
  return std::log10(edges.back() / edges[edges.size() - 2]);
}

ClassVerdict make_verdict(ClassId id, Outcome o, std::string note = {})
{
  ClassVerdict v;
  v.class_id = id;
  v.outcome = o;
  v.note = std::move(note);
  return v;
}

// Tail values along the grid, used as evidence where no ratio applies.
RatioDiagnostic tail_evidence(TailHandle const& tail, GeometricGrid const& grid)
{
  RatioDiagnostic d;
  d.label = "tail";
  for (double x : grid.points()) {
    d.xs.push_back(x);
    d.ratio_hi.push_back(tail.upper(x));
    d.ratio_lo.push_back(tail.lower(x));
  }
  d.window_sup = d.ratio_hi.empty() ? 0.0 : d.ratio_hi.back();
  d.window_inf = d.ratio_lo.empty() ? 0.0 : d.ratio_lo.back();
  d.trend = Trend::inconclusive;
  return d;
}

bool vanishes(TailHandle const& tail, GeometricGrid const& grid)
{
  return grid.count > 0 && tail.upper(grid.back()) == 0.0;
}

GeometricGrid clip_grid(GeometricGrid g, double x_max)
{
  while (g.count > 0 && g.back() > x_max)
    --g.count;
  return g;
}

} // namespace

// ---------------------------------------------------------------------------
// TailHandle

TailHandle TailHandle::from_law(MarginalLaw law)
{
  TailHandle h;
  h.label_ = law.describe();
  h.upper_ = [law](double x) { return law.tail(x); };
  h.lower_ = h.upper_;
  h.law_ = std::move(law);
  return h;
}

TailHandle TailHandle::from_lattice(LatticeTail tail)
{
  TailHandle h;
  h.label_ = "lattice " + tail.grid().describe();
  h.domain_max_ = tail.grid().span();
  h.lattice_ = tail;
  auto const shared = std::make_shared<LatticeTail const>(std::move(tail));
  h.upper_ = [shared](double x) { return shared->upper_at(x); };
  h.lower_ = [shared](double x) { return shared->lower_at(x); };
  return h;
}

TailHandle TailHandle::from_function(std::function<double(double)> tail, std::string label)
{
  TailHandle h;
  h.label_ = std::move(label);
  h.upper_ = tail;
  h.lower_ = std::move(tail);
  return h;
}

double TailHandle::upper(double x) const
{
  return upper_(x);
}

double TailHandle::lower(double x) const
{
  return lower_(x);
}

// ---------------------------------------------------------------------------
// Grids

std::vector<double> GeometricGrid::points() const
{
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = x0 * std::pow(growth, static_cast<double>(i));
  return out;
}

double GeometricGrid::back() const
{
  return count == 0 ? x0 : x0 * std::pow(growth, static_cast<double>(count - 1));
}

GeometricGrid GeometricGrid::between(double lo, double hi, double growth)
{
  if (!(lo > 0) || !(hi > lo) || !(growth > 1))
    throw std::invalid_argument("geometric grid needs 0 < lo < hi and growth > 1");
  auto const steps = static_cast<std::size_t>(std::ceil(std::log(hi / lo) / std::log(growth) - 1e-9));
  // Shrink the growth slightly so the last point lands on hi.
  double const g = std::pow(hi / lo, 1.0 / static_cast<double>(steps));
  return {lo, g, steps + 1};
}

GeometricGrid default_ratio_grid(TailHandle const& tail)
{
  GeometricGrid g{1.0, 1.05, 0};
  for (;;) {
    double const x = g.x0 * std::pow(g.growth, static_cast<double>(g.count));
    if (x > tail.domain_max())
      break;
    ++g.count;
    if (tail.upper(x) < kTailFloor || x > kXCeiling)
      break;
  }
  g.count = std::max<std::size_t>(g.count, 2);
  return g;
}

std::vector<double> default_c_grid()
{
  return {0.90, 0.95, 0.98, 0.99};
}

std::vector<double> default_j_grid()
{
  return {2.0, 4.0, 8.0, 16.0};
}

std::vector<double> default_delta_grid()
{
  return {0.5, 1.0, 2.0};
}

std::string to_string(Trend t)
{
  switch (t) {
  case Trend::converging: return "converging";
  case Trend::diverging: return "diverging";
  case Trend::flat: return "flat";
  case Trend::inconclusive: break;
  }
  return "inconclusive";
}

std::string to_string(Outcome o)
{
  switch (o) {
  case Outcome::pass: return "pass";
  case Outcome::fail: return "fail";
  case Outcome::inconclusive: break;
  }
  return "inconclusive";
}

std::string to_string(ClassId c)
{
  switch (c) {
  case ClassId::H: return "H";
  case ClassId::L: return "L";
  case ClassId::D: return "D";
  case ClassId::C: return "C";
  case ClassId::R: return "R";
  case ClassId::S2fold: break;
  }
  return "S2fold";
}

// ---------------------------------------------------------------------------
// Ratio curves

void summarize(RatioDiagnostic& d, DiagnosticOptions const& options)
{
  d.window_sups.clear();
  d.window_infs.clear();
  d.trend = Trend::inconclusive;
  if (d.xs.empty())
    return;
  auto const edges = window_edges(d.xs, options.windows);
  for (std::size_t w = 0; w + 1 < edges.size(); ++w) {
    double sup = -std::numeric_limits<double>::infinity();
    double inf = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < d.xs.size(); ++i) {
      if (d.xs[i] > edges[w] && d.xs[i] <= edges[w + 1]) {
        sup = std::max(sup, d.ratio_hi[i]);
        inf = std::min(inf, d.ratio_lo[i]);
        any = true;
      }
    }
    if (any) {
      d.window_sups.push_back(sup);
      d.window_infs.push_back(inf);
    }
  }
  if (d.window_sups.empty())
    return;
  d.window_sup = d.window_sups.back();
  d.window_inf = d.window_infs.back();
  std::size_t const k = d.window_sups.size();
  if (k < 2)
    return;

  double const w = window_width_decades(edges);
  double const allowed = std::pow(options.divergence_per_decade, w);
  auto const& s = d.window_sups;
  bool diverging = s[k - 1] > s[k - 2] * allowed;
  if (!diverging && k >= 3)
    diverging = s[k - 1] > s[0] * std::pow(allowed, static_cast<double>(k - 1)) && s[k - 1] > s[k - 2];
  if (diverging) {
    d.trend = Trend::diverging;
    return;
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < k; ++i)
    decreasing = decreasing && s[i] < s[i - 1] * (1 - 1e-9);
  d.trend = decreasing ? Trend::converging : Trend::flat;
}

RatioDiagnostic ratio_curve(TailHandle const& tail, double y, GeometricGrid const& grid,
                            DiagnosticOptions const& options)
{
  if (!(y > 0))
    throw std::invalid_argument("ratio_curve: y must be positive");
  RatioDiagnostic d;
  d.label = "F(xy)/F(x)";
  d.y = y;
  for (double x : grid.points()) {
    if (x * y > tail.domain_max() || x > tail.domain_max())
      break;
    if (y == 1.0) {
      d.xs.push_back(x);
      d.ratio_hi.push_back(1.0);
      d.ratio_lo.push_back(1.0);
      continue;
    }
    double const den_lo = tail.lower(x);
    double const den_hi = tail.upper(x);
    if (!(den_lo > 0)) {
      d.truncated = true;
      break;
    }
    d.xs.push_back(x);
    d.ratio_hi.push_back(tail.upper(x * y) / den_lo);
    d.ratio_lo.push_back(tail.lower(x * y) / den_hi);
  }
  if (d.xs.size() < 2)
    throw DomainError("ratio_curve: fewer than two points with a positive tail for " + tail.describe());
  summarize(d, options);
  return d;
}

// ---------------------------------------------------------------------------
// Class diagnostics

CIndexResult c_index(TailHandle const& tail, std::vector<double> const& y_grid, GeometricGrid const& grid,
                     DiagnosticOptions const& options)
{
  if (y_grid.size() < 4)
    throw std::invalid_argument("c_index: need at least four y values");
  for (double y : y_grid)
    if (!(y >= 0.8 && y < 1.0))
      throw std::invalid_argument("c_index: y values must lie in [0.8, 1)");

  CIndexResult r;
  r.verdict.class_id = ClassId::C;
  r.verdict.thresholds["tau_c"] = options.tau_c;
  bool diverging = false, inconclusive = false, truncated = false;
  double su = 0, ss = 0, suu = 0, sus = 0;
  for (double y : y_grid) {
    auto curve = ratio_curve(tail, y, grid, options);
    diverging = diverging || curve.trend == Trend::diverging;
    inconclusive = inconclusive || curve.trend == Trend::inconclusive;
    truncated = truncated || curve.truncated;
    double const u = 1.0 - y;
    su += u;
    ss += curve.window_sup;
    suu += u * u;
    sus += u * curve.window_sup;
    r.verdict.evidence.push_back(std::move(curve));
  }
  double const n = static_cast<double>(y_grid.size());
  double const slope = (n * sus - su * ss) / (n * suu - su * su);
  r.raw_intercept = (ss - slope * su) / n;
  r.estimate = std::max(1.0, r.raw_intercept);
  r.verdict.estimate = r.estimate;

  auto& v = r.verdict;
  if (truncated) {
    v.outcome = Outcome::fail;
    v.note = "tail vanishes inside the grid";
  }
  else if (diverging) {
    v.outcome = Outcome::fail;
    v.note = "a ratio curve diverges";
  }
  else if (inconclusive) {
    v.outcome = Outcome::inconclusive;
    v.note = "a ratio curve has too few windows";
  }
  else {
    v.outcome = r.estimate <= 1.0 + options.tau_c ? Outcome::pass : Outcome::fail;
  }
  return r;
}

MatuszewskaResult matuszewska_upper(TailHandle const& tail, std::vector<double> const& y_grid,
                                    GeometricGrid const& grid, DiagnosticOptions const& options)
{
  MatuszewskaResult r;
  double num = 0, den = 0;
  bool not_in_d = false;
  for (double y : y_grid) {
    if (!(y >= 2.0 && y <= 64.0))
      throw std::invalid_argument("matuszewska_upper: y values must lie in [2, 64]");
    auto const g = clip_grid(grid, tail.domain_max() / y);
    auto curve = ratio_curve(tail, y, g, options);
    double const li = curve.truncated ? 0.0 : curve.window_inf;
    r.liminf.push_back(li);
    not_in_d = not_in_d || !(li >= kLiminfFloor);
    if (li > 0) {
      num += -std::log(li) * std::log(y);
      den += std::log(y) * std::log(y);
    }
    r.curves.push_back(std::move(curve));
  }
  r.in_d = !not_in_d;
  r.estimate = r.in_d ? num / den : std::numeric_limits<double>::infinity();
  return r;
}

ClassVerdict is_heavy(TailHandle const& tail, std::vector<double> const& delta_grid, GeometricGrid const& grid,
                      DiagnosticOptions const& options)
{
  ClassVerdict v = make_verdict(ClassId::H, Outcome::pass);
  auto const xs = grid.points();
  double const x_end = xs.back();
  double const x_start = std::max(xs.front(), x_end / 100.0);
  for (double delta : delta_grid) {
    RatioDiagnostic d;
    d.label = "log F(x) + delta x";
    d.y = delta;
    bool vanished = false;
    for (double x : xs) {
      if (x < x_start)
        continue;
      double const lo = tail.lower(x);
      if (!(lo > 0)) {
        vanished = true;
        break;
      }
      d.xs.push_back(x);
      d.ratio_lo.push_back(std::log(lo) + delta * x);
      d.ratio_hi.push_back(std::log(tail.upper(x)) + delta * x);
    }
    bool nondecreasing = !vanished && d.xs.size() >= 2;
    for (std::size_t i = 1; i < d.xs.size() && nondecreasing; ++i)
      nondecreasing = d.ratio_lo[i] >= d.ratio_lo[i - 1] - 1e-9 * std::abs(d.ratio_lo[i - 1]);
    bool const grows = nondecreasing && d.ratio_lo.back() > d.ratio_lo.front();
    if (!d.xs.empty()) {
      d.window_sup = d.ratio_hi.back();
      d.window_inf = d.ratio_lo.back();
    }
    d.trend = grows ? Trend::diverging : (vanished ? Trend::inconclusive : Trend::converging);
    if (!grows) {
      v.outcome = Outcome::fail;
      v.note += (v.note.empty() ? "" : "; ") + std::string("not increasing for delta = ") + std::to_string(delta);
    }
    v.evidence.push_back(std::move(d));
  }
  (void)options;
  return v;
}

ClassVerdict is_long(TailHandle const& tail, GeometricGrid const& grid, DiagnosticOptions const& options)
{
  ClassVerdict v = make_verdict(ClassId::L, Outcome::inconclusive);
  v.thresholds["tau_l"] = options.tau_l;
  RatioDiagnostic d;
  d.label = "1 - F(x+1)/F(x)";
  d.y = 1.0;
  for (double x : grid.points()) {
    if (x + 1 > tail.domain_max())
      break;
    double const up = tail.upper(x), lo = tail.lower(x);
    d.xs.push_back(x);
    if (!(up > 0)) {
      d.ratio_hi.push_back(1.0);
      d.ratio_lo.push_back(1.0);
      continue;
    }
    d.ratio_hi.push_back(lo > 0 ? std::clamp(1.0 - tail.lower(x + 1) / up, 0.0, 1.0) : 1.0);
    d.ratio_lo.push_back(lo > 0 ? std::clamp(1.0 - tail.upper(x + 1) / lo, 0.0, 1.0) : 0.0);
  }
  summarize(d, options);
  if (vanishes(tail, grid)) {
    v.outcome = Outcome::fail;
    v.note = "tail vanishes at finite x";
  }
  else if (!d.window_sups.empty()) {
    if (d.window_sup < options.tau_l)
      v.outcome = Outcome::pass;
    else if (d.window_inf >= options.tau_l)
      v.outcome = Outcome::fail;
  }
  v.evidence.push_back(std::move(d));
  return v;
}

ClassVerdict is_dominated(TailHandle const& tail, GeometricGrid const& grid, DiagnosticOptions const& options)
{
  ClassVerdict v = make_verdict(ClassId::D, Outcome::inconclusive);
  auto const m = matuszewska_upper(tail, default_j_grid(), grid, options);
  auto curve = ratio_curve(tail, 0.5, grid, options);
  v.estimate = m.estimate;
  v.thresholds["liminf_floor"] = kLiminfFloor;
  v.thresholds["divergence_per_decade"] = options.divergence_per_decade;
  if (!m.in_d || curve.truncated) {
    v.outcome = Outcome::fail;
    v.note = "liminf of F(xy)/F(x) vanishes for some y > 1";
  }
  else if (curve.trend == Trend::diverging) {
    v.outcome = Outcome::fail;
    v.note = "F(x/2)/F(x) diverges";
  }
  else if (curve.trend != Trend::inconclusive) {
    v.outcome = Outcome::pass;
  }
  v.evidence.push_back(std::move(curve));
  for (auto const& c : m.curves)
    v.evidence.push_back(c);
  return v;
}

ClassVerdict is_consistent(TailHandle const& tail, GeometricGrid const& grid, DiagnosticOptions const& options)
{
  return c_index(tail, default_c_grid(), grid, options).verdict;
}

ClassVerdict is_regular(TailHandle const& tail, GeometricGrid const& grid, DiagnosticOptions const& options)
{
  ClassVerdict v = make_verdict(ClassId::R, Outcome::pass);
  v.thresholds["tau_r"] = options.tau_r;
  std::vector<double> alphas;
  for (double y : {0.5, 0.8}) {
    auto curve = ratio_curve(tail, y, grid, options);
    if (curve.truncated || curve.trend == Trend::diverging) {
      v.outcome = Outcome::fail;
      v.note = "ratio curve diverges or the tail vanishes";
    }
    else if (curve.trend == Trend::inconclusive && v.outcome == Outcome::pass) {
      v.outcome = Outcome::inconclusive;
    }
    else if (curve.window_sup > curve.window_inf * (1 + options.tau_r)) {
      v.outcome = Outcome::fail;
      v.note = "F(xy)/F(x) oscillates over the top window";
    }
    alphas.push_back(std::log(std::sqrt(curve.window_sup * curve.window_inf)) / -std::log(y));
    v.evidence.push_back(std::move(curve));
  }
  double const alpha = 0.5 * (alphas[0] + alphas[1]);
  v.estimate = alpha;
  if (v.outcome == Outcome::pass && std::abs(alphas[0] - alphas[1]) > options.tau_r * std::max(1.0, alpha)) {
    v.outcome = Outcome::fail;
    v.note = "index estimates disagree across y";
  }
  return v;
}

ClassVerdict s2fold(TailHandle const& tail, double lo, double hi, DiagnosticOptions const& options)
{
  ClassVerdict v = make_verdict(ClassId::S2fold, Outcome::inconclusive);
  v.thresholds["tau_s"] = options.tau_s;
  v.thresholds["x_lo"] = lo;
  v.thresholds["x_hi"] = hi;

  std::optional<LatticeTail> conv;
  if (auto const* law = tail.law()) {
    if (law->support_min() < 0) {
      v.note = "two-fold convolution needs nonnegative support";
      v.evidence.push_back(tail_evidence(tail, GeometricGrid::between(lo, hi)));
      return v;
    }
    auto const grid = LatticeGrid::hybrid(0.0078125, 1e-3, hi);
    auto const d = discretize(*law, grid);
    conv = convolve(d, d, ConvolutionMethod::direct);
  }
  else if (auto const* lat = tail.lattice()) {
    conv = convolve(*lat, *lat);
  }
  else {
    v.note = "no lattice or closed form to convolve";
    v.evidence.push_back(tail_evidence(tail, GeometricGrid::between(lo, hi)));
    return v;
  }

  RatioDiagnostic d;
  d.label = "F*F(x)/F(x)";
  d.y = 2.0;
  for (double x : GeometricGrid::between(lo, hi).points()) {
    if (x > conv->grid().span())
      break;
    double const den_lo = tail.lower(x);
    if (!(den_lo > 0)) {
      d.truncated = true;
      break;
    }
    d.xs.push_back(x);
    d.ratio_hi.push_back(conv->upper_at(x) / den_lo);
    d.ratio_lo.push_back(conv->lower_at(x) / tail.upper(x));
  }
  if (d.xs.empty()) {
    v.outcome = Outcome::fail;
    v.note = "tail vanishes on the whole window";
    v.evidence.push_back(tail_evidence(tail, GeometricGrid::between(lo, hi)));
    return v;
  }
  summarize(d, options);
  if (d.window_sup <= 2 + options.tau_s && d.window_inf >= 2 - options.tau_s)
    v.outcome = Outcome::pass;
  else if (d.window_inf > 2 + options.tau_s || d.window_sup < 2 - options.tau_s || d.trend == Trend::diverging)
    v.outcome = Outcome::fail;
  v.estimate = 0.5 * (d.window_sup + d.window_inf);
  if (d.truncated)
    v.note = "window truncated where the tail underflows";
  v.evidence.push_back(std::move(d));
  return v;
}

LittleOResult little_o(TailHandle const& a, TailHandle const& b, GeometricGrid const& grid,
                       DiagnosticOptions const& options)
{
  LittleOResult r;
  r.tau = options.tau_o;
  auto& d = r.ratio;
  d.label = "Fa(x)/Fb(x)";
  for (double x : grid.points()) {
    if (x > std::min(a.domain_max(), b.domain_max()))
      break;
    double const den_lo = b.lower(x);
    if (!(den_lo > 0)) {
      d.truncated = true;
      break;
    }
    d.xs.push_back(x);
    d.ratio_hi.push_back(a.upper(x) / den_lo);
    d.ratio_lo.push_back(a.lower(x) / b.upper(x));
  }
  summarize(d, options);
  auto const& s = d.window_sups;
  if (s.size() < 2)
    return r;
  bool nonincreasing = true;
  for (std::size_t i = 1; i < s.size(); ++i)
    nonincreasing = nonincreasing && s[i] <= s[i - 1] * (1 + 1e-9);
  if (!nonincreasing)
    r.outcome = d.trend == Trend::diverging ? Outcome::fail : Outcome::inconclusive;
  else if (d.window_sup >= options.tau_o)
    r.outcome = Outcome::fail;
  else if (d.trend == Trend::converging || d.window_sup == 0.0)
    r.outcome = Outcome::pass;
  else
    r.outcome = Outcome::fail; // a constant ratio is not o(1)
  return r;
}

ClassReport classify(TailHandle const& tail, DiagnosticOptions const& options)
{
  ClassReport rep;
  rep.law = tail.describe();
  auto const grid = default_ratio_grid(tail);
  rep.bounded = vanishes(tail, grid);
  if (rep.bounded) {
    for (auto id : {ClassId::H, ClassId::L, ClassId::D, ClassId::C, ClassId::R, ClassId::S2fold}) {
      auto v = make_verdict(id, Outcome::fail, "tail vanishes at finite x");
      v.evidence.push_back(tail_evidence(tail, grid));
      rep.verdicts.emplace(id, std::move(v));
    }
    rep.matuszewska.in_d = false;
    rep.c.verdict = rep.verdicts.at(ClassId::C);
    return rep;
  }
  rep.verdicts.emplace(ClassId::H, is_heavy(tail, default_delta_grid(), grid, options));
  rep.verdicts.emplace(ClassId::L, is_long(tail, grid, options));
  rep.matuszewska = matuszewska_upper(tail, default_j_grid(), grid, options);
  rep.verdicts.emplace(ClassId::D, is_dominated(tail, grid, options));
  rep.c = c_index(tail, default_c_grid(), grid, options);
  rep.verdicts.emplace(ClassId::C, rep.c.verdict);
  rep.verdicts.emplace(ClassId::R, is_regular(tail, grid, options));
  rep.verdicts.emplace(ClassId::S2fold, s2fold(tail, 1e2, 1e4, options));
  return rep;
}

std::vector<AuditViolation> inclusion_audit(std::map<ClassId, ClassVerdict> const& verdicts)
{
  auto outcome = [&](ClassId id) {
    auto const it = verdicts.find(id);
    return it == verdicts.end() ? Outcome::inconclusive : it->second.outcome;
  };
  // Transitive closure of R < C < L and D < S < L < H.
  static constexpr std::pair<ClassId, ClassId> kChain[] = {
    {ClassId::R, ClassId::C},      {ClassId::R, ClassId::L},      {ClassId::R, ClassId::D},
    {ClassId::R, ClassId::S2fold}, {ClassId::R, ClassId::H},      {ClassId::C, ClassId::L},
    {ClassId::C, ClassId::D},      {ClassId::C, ClassId::S2fold}, {ClassId::C, ClassId::H},
    {ClassId::S2fold, ClassId::L}, {ClassId::S2fold, ClassId::H}, {ClassId::L, ClassId::H},
  };
  std::vector<AuditViolation> out;
  for (auto const& [sub, super] : kChain) {
    if (outcome(sub) == Outcome::pass && outcome(super) == Outcome::fail)
      out.push_back({sub, super, to_string(sub) + " passes but " + to_string(super) + " fails"});
  }
  if (outcome(ClassId::L) == Outcome::pass && outcome(ClassId::D) == Outcome::pass &&
      outcome(ClassId::S2fold) == Outcome::fail)
    out.push_back({ClassId::L, ClassId::S2fold, "L and D pass but S2fold fails"});
  return out;
}

std::vector<MarginalLaw> builtin_corpus()
{
  return {MarginalLaw::pareto(0.5, 1.0),
          MarginalLaw::pareto(2.0, 1.0),
          MarginalLaw::pareto(4.0, 2.0),
          MarginalLaw::exponential(0.5),
          MarginalLaw::exponential(1.0),
          MarginalLaw::exponential(3.0),
          MarginalLaw::lifted_geometric(0.25),
          MarginalLaw::lifted_geometric(0.5),
          MarginalLaw::lifted_geometric(0.6),
          MarginalLaw::degenerate(0.0),
          MarginalLaw::degenerate(1.0),
          MarginalLaw::degenerate(5.0),
          MarginalLaw::lattice({1.0, 2.0, 4.0, 8.0}, {0.5, 0.25, 0.125, 0.0}),
          MarginalLaw::lattice({0.5, 1.5}, {0.3, 0.0}),
          MarginalLaw::lattice({1.0, 2.0, 3.0, 4.0, 5.0}, {0.8, 0.6, 0.4, 0.2, 0.0})};
}

void write_ratio_csv(std::ostream& os, std::vector<RatioDiagnostic> const& curves,
                     std::vector<std::string> const& comments)
{
  for (auto const& c : comments)
    os << "# " << c << "\n";
  os << "x,y,ratio,ratio_lo,ratio_hi\n";
  char buf[160];
  for (auto const& d : curves) {
    for (std::size_t i = 0; i < d.xs.size(); ++i) {
      double const mid = 0.5 * (d.ratio_lo[i] + d.ratio_hi[i]);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", d.xs[i], d.y, mid, d.ratio_lo[i],
                    d.ratio_hi[i]);
      os << buf;
    }
  }
}

} // namespace cvtail

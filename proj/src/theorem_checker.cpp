#include "cvtail/theorem_checker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "cvtail/errors.hpp"

namespace cvtail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Gaps between J and the moment boundary below this count as zero.
constexpr double kBoundaryTol = 1e-6;

std::string fmt(double v)
{
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Outcome combine(std::vector<Outcome> const& parts)
{
  bool inconclusive = false;
  for (auto o : parts) {
    if (o == Outcome::fail)
      return Outcome::fail;
    inconclusive = inconclusive || o == Outcome::inconclusive;
  }
  return inconclusive ? Outcome::inconclusive : Outcome::pass;
}

Hypothesis hypothesis_of(std::vector<ConditionReport> const& reports)
{
  std::vector<Outcome> parts;
  for (auto const& r : reports)
    parts.push_back(r.outcome);
  switch (combine(parts)) {
  case Outcome::pass:
    return Hypothesis::yes;
  case Outcome::fail:
    return Hypothesis::no;
  default:
    return Hypothesis::inconclusive;
  }
}

ConditionReport report(TheoremId t, char id, Outcome o, std::vector<Evidence> ev, std::string narrative)
{
  return {t, id, o, std::move(ev), std::move(narrative)};
}

// Cached per law: the same marginal is tested by several conditions.
class Diagnostics
{
 public:
  explicit Diagnostics(CheckOptions const& options) : options_(options) {}

  Evidence c_index_of(MarginalLaw const& law)
  {
    std::string const key = law.describe();
    if (auto it = c_cache_.find(key); it != c_cache_.end())
      return it->second;
    Evidence ev;
    ev.label = "c_index " + key;
    try {
      auto const h = TailHandle::from_law(law);
      auto const r = c_index(h, default_c_grid(), default_ratio_grid(h), options_.diagnostics);
      ev.outcome = r.verdict.outcome;
      ev.value = r.estimate;
      ev.detail = r.verdict.note.empty() ? "c-index " + fmt(r.estimate) : r.verdict.note;
    }
    catch (DomainError const& e) {
      ev.outcome = Outcome::fail;
      ev.detail = std::string("tail vanishes: ") + e.what();
    }
    return c_cache_[key] = ev;
  }

  Evidence little_o_of(TailHandle const& a, TailHandle const& b)
  {
    Evidence ev;
    ev.label = "little_o " + a.describe() + " vs " + b.describe();
    try {
      auto const r = little_o(a, b, default_ratio_grid(b), options_.diagnostics);
      ev.outcome = r.outcome;
      ev.value = r.ratio.window_sup;
      ev.detail = "top-window ratio " + fmt(r.ratio.window_sup) + ", trend " + to_string(r.ratio.trend);
    }
    catch (DomainError const& e) {
      ev.outcome = Outcome::inconclusive;
      ev.detail = e.what();
    }
    return ev;
  }

 private:
  CheckOptions const& options_;
  std::map<std::string, Evidence> c_cache_;
};

ConditionReport condition_first_in_c(TheoremId t, char id, ModelSpec const& model, Diagnostics& diag)
{
  auto ev = diag.c_index_of(model.marginal(1));
  Outcome const o = ev.outcome;
  std::string narrative = "F_xi1 (" + model.marginal(1).describe() + ")";
  narrative += o == Outcome::pass ? " is in C" : o == Outcome::fail ? " is not in C" : " is undecided for C";
  if (ev.value)
    narrative += ", c-index " + fmt(*ev.value);
  return report(t, id, o, {std::move(ev)}, narrative);
}

// Entries of the rule that occur among xi_k, k in [2, k_max].
std::vector<std::size_t> entries_between(ModelSpec const& model, std::size_t k_max)
{
  std::vector<std::size_t> out;
  if (k_max == std::numeric_limits<std::size_t>::max()) {
    out = model.reachable_entries(2);
  }
  else {
    for (std::size_t k = 2; k <= k_max; ++k) {
      std::size_t const e = model.entry_index(k);
      if (std::find(out.begin(), out.end(), e) == out.end())
        out.push_back(e);
      // Past head + two periods nothing new appears.
      if (k > model.head_length() + 2 * model.period() + 1)
        break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ConditionReport condition_others(TheoremId t, char id, ModelSpec const& model, std::size_t k_max,
                                 Diagnostics& diag)
{
  auto const entries = entries_between(model, k_max);
  if (entries.empty())
    return report(t, id, Outcome::pass, {}, "no summands with k >= 2");
  auto const ref = TailHandle::from_law(model.marginal(1));
  std::vector<Evidence> ev;
  std::vector<Outcome> parts;
  std::vector<std::string> in_c, small, open, bad;
  for (std::size_t e : entries) {
    MarginalLaw const& law = model.rule()[e].law;
    std::string const who = model.rule()[e].selector.to_string() + " " + law.describe();
    auto c = diag.c_index_of(law);
    Outcome const co = c.outcome;
    ev.push_back(c);
    if (co == Outcome::pass) {
      parts.push_back(Outcome::pass);
      in_c.push_back(who);
      continue;
    }
    auto lo = diag.little_o_of(TailHandle::from_law(law), ref);
    Outcome const oo = lo.outcome;
    ev.push_back(std::move(lo));
    if (oo == Outcome::pass) {
      parts.push_back(Outcome::pass);
      small.push_back(who);
    }
    else if (co == Outcome::fail && oo == Outcome::fail) {
      parts.push_back(Outcome::fail);
      bad.push_back(who);
    }
    else {
      parts.push_back(Outcome::inconclusive);
      open.push_back(who);
    }
  }
  auto join = [](std::vector<std::string> const& v) {
    std::string s;
    for (auto const& w : v)
      s += (s.empty() ? "" : "; ") + w;
    return s;
  };
  std::string narrative;
  auto add = [&](std::vector<std::string> const& v, std::string const& what) {
    if (!v.empty())
      narrative += (narrative.empty() ? "" : ", ") + what + " for " + join(v);
  };
  add(in_c, "F_xik in C");
  add(small, "F_xik = o(F_xi1)");
  add(bad, "neither in C nor o(F_xi1)");
  add(open, "undecided");
  return report(t, id, combine(parts), std::move(ev), narrative);
}

ConditionReport condition_sup_ratio(TheoremId t, char id, ModelSpec const& model, CheckOptions const& options)
{
  Evidence ev;
  ev.label = "sup_ratio";
  SupRatioResult r;
  try {
    auto const h = TailHandle::from_law(model.marginal(1));
    r = check_sup_ratio(model, default_ratio_grid(h), options.n_cap, options.diagnostics);
    ev.outcome = r.outcome;
    ev.value = r.curve.window_sup;
    ev.detail = "top-window sup " + fmt(r.curve.window_sup) + ", trend " + to_string(r.curve.trend);
  }
  catch (DomainError const& e) {
    ev.outcome = Outcome::inconclusive;
    ev.detail = e.what();
  }
  std::string narrative = "limsup_x sup_n (1/(n F_xi1(x))) sum_{i<=n} F_xii(x)";
  if (ev.outcome == Outcome::pass)
    narrative += " <= " + fmt(r.curve.window_sup) + " on the top window";
  else if (ev.outcome == Outcome::fail)
    narrative += " diverges";
  else
    narrative += " is undecided";
  Outcome const o = ev.outcome;
  return report(t, id, o, {std::move(ev)}, narrative);
}

double estimate_j(MarginalLaw const& law, DiagnosticOptions const& options)
{
  auto const h = TailHandle::from_law(law);
  try {
    return matuszewska_upper(h, default_j_grid(), default_ratio_grid(h), options).estimate;
  }
  catch (DomainError const&) {
    return kInf;
  }
}

// E eta^{p+1} < inf for some p > J.
ConditionReport condition_moment(TheoremId t, char id, ModelSpec const& model, CheckOptions const& options)
{
  CountingLaw const& eta = model.counting();
  double const j = estimate_j(model.marginal(1), options.diagnostics);
  std::vector<Evidence> ev;
  ev.push_back({"matuszewska_upper xi1", std::isfinite(j) ? Outcome::pass : Outcome::fail, j,
                "J+ estimate " + fmt(j)});
  if (!std::isfinite(j))
    return report(t, id, Outcome::fail, std::move(ev), "J+ of F_xi1 is infinite, so no p > J+ exists");

  ExtendedReal const boundary = eta.moment_boundary();
  if (boundary.is_infinite()) {
    double const p = j + std::min(1.0, options.p_window);
    auto const m = eta.moment(p + 1);
    ev.push_back({"moment eta^" + fmt(p + 1), m.is_finite() ? Outcome::pass : Outcome::fail, m.value,
                  "E eta^" + fmt(p + 1) + " = " + fmt(m.value)});
    return report(t, id, m.is_finite() ? Outcome::pass : Outcome::fail, std::move(ev),
                  "all moments of eta are finite; p = " + fmt(p) + " > J+ = " + fmt(j));
  }
  double const b = boundary.value();
  double const gap = (b - 1.0) - j; // room for p in (J, b - 1)
  ev.push_back({"moment_boundary eta", gap > 0 ? Outcome::pass : Outcome::fail, b,
                "E eta^r < inf exactly for r < " + fmt(b)});
  if (gap <= kBoundaryTol) {
    auto const at = eta.moment(b);
    std::string narrative = "J+ = " + fmt(j) + " needs E eta^r < inf for some r > " + fmt(j + 1) + ", but E eta^" +
                            fmt(b) + (at.is_finite() ? " is the last finite moment" : " = inf");
    return report(t, id, Outcome::fail, std::move(ev), narrative);
  }
  double const p = j + std::min(gap / 2, options.p_window);
  auto const m = eta.moment(p + 1);
  ev.push_back({"moment eta^" + fmt(p + 1), m.is_finite() ? Outcome::pass : Outcome::fail, m.value,
                "E eta^" + fmt(p + 1) + " = " + fmt(m.value)});
  if (!m.is_finite())
    return report(t, id, Outcome::fail, std::move(ev), "no finite moment of order above J+ + 1");
  if (gap <= options.moment_band)
    return report(t, id, Outcome::inconclusive, std::move(ev),
                  "p = " + fmt(p) + " works only if J+ is accurate to " + fmt(gap));
  return report(t, id, Outcome::pass, std::move(ev),
                "E eta^" + fmt(p + 1) + " < inf with p = " + fmt(p) + " > J+ = " + fmt(j));
}

ConditionReport condition_mean(TheoremId t, char id, MarginalLaw const& law)
{
  auto const m = law.mean();
  Evidence ev{"mean " + law.describe(), m.is_finite() ? Outcome::pass : Outcome::fail,
              m.is_finite() ? m.value() : kInf, "E xi = " + m.to_string()};
  return report(t, id, ev.outcome, {ev}, "E xi1 = " + m.to_string());
}

ConditionReport condition_counting_small(TheoremId t, char id, ModelSpec const& model, Diagnostics& diag)
{
  CountingLaw const eta = model.counting();
  auto const h_eta = TailHandle::from_function([eta](double x) { return eta.tail_real(x); }, "eta " + eta.describe());
  auto ev = diag.little_o_of(h_eta, TailHandle::from_law(model.marginal(1)));
  Outcome const o = ev.outcome;
  std::string narrative = "F_eta(x) ";
  narrative += o == Outcome::pass ? "= o(F_xi1(x))" : o == Outcome::fail ? "is not o(F_xi1(x))" : "vs F_xi1: undecided";
  return report(t, id, o, {std::move(ev)}, narrative);
}

ConditionReport condition_cesaro(TheoremId t, char id, ModelSpec const& model)
{
  auto const r = check_cesaro(model);
  Evidence ev{"cesaro", r.outcome, r.max_mean.is_finite() ? r.max_mean.value() : kInf,
              "max_k E xi_k = " + r.max_mean.to_string()};
  std::string narrative = "max_k E xi_k = " + r.max_mean.to_string();
  narrative += r.outcome == Outcome::pass ? ", so the average vanishes for u above it" : ", so the average need not vanish";
  return report(t, id, r.outcome, {std::move(ev)}, narrative);
}

void finish(TheoremVerdict& v, ModelSpec const& model, CheckOptions const& options)
{
  v.model = model.canonical();
  v.hypothesis_met = hypothesis_of(v.reports);
  if (!options.conclusion)
    return;
  try {
    auto r = conclusion_diagnostic(model, options.conclusion_options, options.diagnostics);
    v.conclusion_check = std::move(r.c);
    v.certificate = r.certificate;
    v.conclusion_note = "max relative bracket width " + fmt(r.max_relative_width);
  }
  catch (Error const& e) {
    v.conclusion_note = std::string("compound tail unavailable: ") + e.what();
  }
}

void require_iid(ModelSpec const& model, char const* which)
{
  if (!model.is_iid())
    throw PremiseViolated(std::string(which) + " applies to i.i.d. summands only");
}

// sup_n (1/n) sum_{k<=n} v_k for a sequence given on 1..head+period that
// repeats its last period forever. Returns the sup and the argmax (0 = limit).
std::pair<double, std::size_t> sup_periodic_average(std::vector<double> const& v, std::size_t head, std::size_t period)
{
  double best = -kInf;
  std::size_t at = 0;
  double s = 0.0;
  for (std::size_t n = 1; n <= v.size(); ++n) {
    s += v[n - 1];
    double const a = s / static_cast<double>(n);
    if (a > best) {
      best = a;
      at = n;
    }
  }
  double pi = 0.0;
  for (std::size_t k = head; k < head + period; ++k)
    pi += v[k];
  double const limit = pi / static_cast<double>(period);
  if (limit > best) {
    best = limit;
    at = 0;
  }
  return {best, at};
}

LemmaDiagnostic finish_lemma(std::vector<double> const& xs, std::vector<double> lo, std::vector<double> hi,
                             DiagnosticOptions const& options)
{
  LemmaDiagnostic d;
  d.xs = xs;
  d.ratio_lo = std::move(lo);
  d.ratio_hi = std::move(hi);
  d.deviation.label = "|ratio - 1|";
  d.deviation.xs = xs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double const dev = std::max(std::abs(d.ratio_hi[i] - 1.0), std::abs(d.ratio_lo[i] - 1.0));
    d.deviation.ratio_hi.push_back(dev);
    d.deviation.ratio_lo.push_back(dev);
  }
  summarize(d.deviation, options);
  d.trend = d.deviation.trend;
  return d;
}

} // namespace

std::string to_string(TheoremId t)
{
  switch (t) {
  case TheoremId::T1:
    return "T1";
  case TheoremId::T2:
    return "T2";
  case TheoremId::T3:
    return "T3";
  case TheoremId::C1:
    return "C1";
  case TheoremId::C2:
    return "C2";
  }
  return "?";
}

std::string to_string(Hypothesis h)
{
  switch (h) {
  case Hypothesis::yes:
    return "yes";
  case Hypothesis::no:
    return "no";
  case Hypothesis::inconclusive:
    return "inconclusive";
  }
  return "?";
}

ConditionReport const& TheoremVerdict::condition(char id) const
{
  for (auto const& r : reports)
    if (r.condition_id == id)
      return r;
  throw std::out_of_range(std::string("no condition (") + id + ") in " + to_string(theorem));
}

int exit_code(Hypothesis h)
{
  switch (h) {
  case Hypothesis::yes:
    return 0;
  case Hypothesis::no:
    return 2;
  default:
    return 3;
  }
}

TheoremVerdict check_theorem1(ModelSpec const& model, std::optional<std::size_t> d_claim, CheckOptions const& options)
{
  Diagnostics diag(options);
  TheoremVerdict v;
  v.theorem = TheoremId::T1;
  auto const top = model.counting().support_max();
  std::size_t const d = d_claim.value_or(top.value_or(0));
  {
    Evidence ev{"support_max eta", Outcome::fail, std::nullopt, "eta has unbounded support"};
    std::string narrative = "P(eta <= D) < 1 for every D";
    if (top) {
      ev.value = static_cast<double>(*top);
      ev.outcome = *top <= d ? Outcome::pass : Outcome::fail;
      ev.detail = "largest support point " + std::to_string(*top);
      narrative = "P(eta <= " + std::to_string(d) + ") " + (*top <= d ? "= 1" : "< 1");
    }
    Outcome const o = ev.outcome;
    v.reports.push_back(report(TheoremId::T1, 'a', o, {std::move(ev)}, narrative));
  }
  v.reports.push_back(condition_first_in_c(TheoremId::T1, 'b', model, diag));
  // With unbounded eta the claim in (a) already fails; check k up to D regardless.
  std::size_t const k_max = top ? d : std::numeric_limits<std::size_t>::max();
  v.reports.push_back(condition_others(TheoremId::T1, 'c', model, k_max, diag));
  finish(v, model, options);
  return v;
}

TheoremVerdict check_theorem2(ModelSpec const& model, CheckOptions const& options)
{
  Diagnostics diag(options);
  TheoremVerdict v;
  v.theorem = TheoremId::T2;
  v.reports.push_back(condition_first_in_c(TheoremId::T2, 'a', model, diag));
  v.reports.push_back(condition_others(TheoremId::T2, 'b', model, std::numeric_limits<std::size_t>::max(), diag));
  v.reports.push_back(condition_sup_ratio(TheoremId::T2, 'c', model, options));
  v.reports.push_back(condition_moment(TheoremId::T2, 'd', model, options));
  finish(v, model, options);
  return v;
}

TheoremVerdict check_theorem3(ModelSpec const& model, CheckOptions const& options)
{
  if (model.support_min() < 0)
    throw NonNegativityViolated("theorem 3 needs nonnegative summands; support reaches " +
                                fmt(model.support_min()));
  Diagnostics diag(options);
  TheoremVerdict v;
  v.theorem = TheoremId::T3;
  v.reports.push_back(condition_first_in_c(TheoremId::T3, 'a', model, diag));
  v.reports.push_back(condition_others(TheoremId::T3, 'b', model, std::numeric_limits<std::size_t>::max(), diag));
  v.reports.push_back(condition_mean(TheoremId::T3, 'c', model.marginal(1)));
  v.reports.push_back(condition_counting_small(TheoremId::T3, 'd', model, diag));
  v.reports.push_back(condition_sup_ratio(TheoremId::T3, 'e', model, options));
  v.reports.push_back(condition_cesaro(TheoremId::T3, 'f', model));
  finish(v, model, options);
  return v;
}

TheoremVerdict check_corollary1(ModelSpec const& model, CheckOptions const& options)
{
  require_iid(model, "corollary 1");
  Diagnostics diag(options);
  TheoremVerdict v;
  v.theorem = TheoremId::C1;
  v.reports.push_back(condition_first_in_c(TheoremId::C1, 'a', model, diag));
  v.reports.push_back(condition_moment(TheoremId::C1, 'b', model, options));
  finish(v, model, options);
  return v;
}

TheoremVerdict check_corollary2(ModelSpec const& model, CheckOptions const& options)
{
  require_iid(model, "corollary 2");
  if (model.support_min() < 0)
    throw NonNegativityViolated("corollary 2 needs nonnegative summands");
  Diagnostics diag(options);
  TheoremVerdict v;
  v.theorem = TheoremId::C2;
  v.reports.push_back(condition_first_in_c(TheoremId::C2, 'a', model, diag));
  v.reports.push_back(condition_mean(TheoremId::C2, 'b', model.marginal(1)));
  v.reports.push_back(condition_counting_small(TheoremId::C2, 'c', model, diag));
  finish(v, model, options);
  return v;
}

TheoremVerdict check(TheoremId id, ModelSpec const& model, CheckOptions const& options)
{
  switch (id) {
  case TheoremId::T1:
    return check_theorem1(model, std::nullopt, options);
  case TheoremId::T2:
    return check_theorem2(model, options);
  case TheoremId::T3:
    return check_theorem3(model, options);
  case TheoremId::C1:
    return check_corollary1(model, options);
  case TheoremId::C2:
    return check_corollary2(model, options);
  }
  throw std::invalid_argument("check: unknown theorem");
}

SupRatioResult check_sup_ratio(ModelSpec const& model, GeometricGrid const& x_grid, std::size_t n_cap,
                               DiagnosticOptions const& options)
{
  if (n_cap < 1000)
    throw std::invalid_argument("check_sup_ratio: n_cap must be at least 1000");
  std::size_t const head = model.head_length();
  std::size_t const period = model.period();
  std::size_t const len = std::max<std::size_t>(1, head + period);

  SupRatioResult r;
  auto& d = r.curve;
  d.label = "sup_n (1/(n F_1(x))) sum_{i<=n} F_i(x)";
  std::vector<double> tails(len);
  for (double x : x_grid.points()) {
    double const f1 = model.marginal(1).tail(x);
    bool any = false;
    for (std::size_t k = 1; k <= len; ++k) {
      tails[k - 1] = model.marginal(k).tail(x);
      any = any || tails[k - 1] > 0;
    }
    if (!(f1 > 0)) {
      if (any) {
        // Some later tail outlives F_1: the ratio is infinite.
        d.xs.push_back(x);
        d.ratio_hi.push_back(kInf);
        d.ratio_lo.push_back(kInf);
        r.outcome = Outcome::fail;
      }
      else {
        d.truncated = true;
      }
      break;
    }
    for (auto& t : tails)
      t /= f1;
    auto const [value, at] = sup_periodic_average(tails, head, period);
    d.xs.push_back(x);
    d.ratio_hi.push_back(value);
    d.ratio_lo.push_back(value);
    r.n_at_sup = at;
  }
  if (r.outcome == Outcome::fail) {
    d.window_sup = kInf;
    d.trend = Trend::diverging;
    return r;
  }
  if (d.xs.size() < 2)
    throw DomainError("check_sup_ratio: F_1 vanishes on the grid");
  summarize(d, options);
  if (!std::isfinite(d.window_sup) || d.trend == Trend::diverging)
    r.outcome = Outcome::fail;
  else if (d.trend == Trend::inconclusive)
    r.outcome = Outcome::inconclusive;
  else
    r.outcome = Outcome::pass;
  return r;
}

double sup_ratio_enumerated(ModelSpec const& model, double x, std::size_t n_cap)
{
  double const f1 = model.marginal(1).tail(x);
  double s = 0.0, best = 0.0;
  for (std::size_t n = 1; n <= n_cap; ++n) {
    s += model.marginal(n).tail(x);
    best = std::max(best, s / (static_cast<double>(n) * f1));
  }
  return best;
}

double cesaro_value(ModelSpec const& model, double u)
{
  std::size_t const head = model.head_length();
  std::size_t const period = model.period();
  std::vector<double> v(std::max<std::size_t>(1, head + period));
  for (std::size_t k = 1; k <= v.size(); ++k) {
    auto const m = model.marginal(k).mean();
    double const mk = m.is_finite() ? m.value() : kInf;
    v[k - 1] = mk >= u ? mk : 0.0;
  }
  return sup_periodic_average(v, head, period).first;
}

CesaroResult check_cesaro(ModelSpec const& model)
{
  CesaroResult r;
  double top = -kInf;
  for (std::size_t e : model.reachable_entries(1)) {
    auto const m = model.rule()[e].law.mean();
    if (m.is_infinite()) {
      r.max_mean = ExtendedReal::infinity();
      r.outcome = Outcome::fail;
      return r;
    }
    top = std::max(top, m.value());
  }
  r.max_mean = ExtendedReal(top);
  r.witness_u = top;
  // Strictly above the largest mean nothing is summed.
  double const u = std::nextafter(std::max(top, 0.0), kInf);
  r.outcome = cesaro_value(model, u) == 0.0 ? Outcome::pass : Outcome::fail;
  return r;
}

ConclusionResult conclusion_diagnostic(ModelSpec const& model, ConclusionOptions const& options,
                                       DiagnosticOptions const& diagnostics)
{
  if (!(options.span >= options.x_hi))
    throw std::invalid_argument("conclusion_diagnostic: the lattice must reach x_hi");
  auto const grid = LatticeGrid::hybrid(options.step, options.growth, options.span);
  return conclusion_from_tail(compound_tail(model, grid, options.eps_trunc, options.compound), options, diagnostics);
}

ConclusionResult conclusion_from_tail(CompoundTail const& ct, ConclusionOptions const& options,
                                      DiagnosticOptions const& diagnostics)
{
  if (!(options.x_lo > 0 && options.x_hi > options.x_lo && options.x_hi <= ct.tail.grid().span()))
    throw std::invalid_argument("conclusion_diagnostic: need 0 < x_lo < x_hi <= lattice span");
  ConclusionResult r;
  r.certificate = ct.certificate;
  auto const& grid = ct.tail.grid();
  double const y_min = *std::min_element(options.y_grid.begin(), options.y_grid.end());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double const x = grid.point(i);
    if (x < options.x_lo * y_min || x > options.x_hi)
      continue;
    double const lo = ct.tail.lower()[static_cast<Eigen::Index>(i)];
    double const hi = ct.tail.upper()[static_cast<Eigen::Index>(i)];
    r.max_relative_width = std::max(r.max_relative_width, lo > 0 ? (hi - lo) / lo : kInf);
  }
  auto const h = TailHandle::from_lattice(ct.tail);
  r.c = c_index(h, options.y_grid, GeometricGrid::between(options.x_lo, options.x_hi), diagnostics);
  return r;
}

LemmaDiagnostic lemma1_diagnostic(ModelSpec const& model, std::size_t n, GeometricGrid const& x_grid,
                                  DiagnosticOptions const& options)
{
  if (n < 1)
    throw std::invalid_argument("lemma1_diagnostic: n must be positive");
  CheckOptions copts;
  copts.diagnostics = options;
  Diagnostics diag(copts);
  for (std::size_t k = 1; k <= n; ++k) {
    auto const ev = diag.c_index_of(model.marginal(k));
    if (ev.outcome != Outcome::pass)
      throw PremiseViolated("lemma 1 needs every summand in C; xi_" + std::to_string(k) + ": " + ev.detail);
  }
  auto const xs = x_grid.points();
  std::vector<double> lo, hi;
  if (n == 1) {
    lo.assign(xs.size(), 1.0);
    hi.assign(xs.size(), 1.0);
    return finish_lemma(xs, lo, hi, options);
  }
  auto const s = n_fold_tail(model, n, LatticeGrid::default_for(x_grid.back()));
  for (double x : xs) {
    double ref = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
      ref += model.marginal(k).tail(x);
    auto const b = s.at(x);
    lo.push_back(b.lower / ref);
    hi.push_back(b.upper / ref);
  }
  return finish_lemma(xs, lo, hi, options);
}

LemmaDiagnostic lemma2_diagnostic(ModelSpec const& model, std::size_t n, MarginalLaw const& reference,
                                  GeometricGrid const& x_grid, DiagnosticOptions const& options)
{
  if (n < 1)
    throw std::invalid_argument("lemma2_diagnostic: n must be positive");
  auto const ref = TailHandle::from_law(reference);
  std::vector<double> b(n, 0.0);
  std::map<std::size_t, double> by_entry;
  for (std::size_t k = 1; k <= n; ++k) {
    std::size_t const e = model.entry_index(k);
    if (auto it = by_entry.find(e); it != by_entry.end()) {
      b[k - 1] = it->second;
      continue;
    }
    auto const lo = little_o(TailHandle::from_law(model.marginal(k)), ref, x_grid, options);
    double bk = 0.0;
    if (lo.outcome != Outcome::pass) {
      auto const& d = lo.ratio;
      bool const settled = (d.trend == Trend::flat || d.trend == Trend::converging) &&
                           d.window_sup - d.window_inf <= options.tau_c * d.window_sup;
      if (!settled)
        throw PremiseViolated("lemma 2: P(xi_" + std::to_string(k) + " > x) / P(ref > x) does not settle");
      bk = 0.5 * (d.window_sup + d.window_inf);
    }
    b[k - 1] = by_entry[e] = bk;
  }
  double sum_b = 0.0;
  for (double v : b)
    sum_b += v;
  if (!(sum_b > 0))
    throw PremiseViolated("lemma 2: every b_i is zero");

  auto const xs = x_grid.points();
  std::vector<double> lo, hi;
  if (n == 1 && b[0] == 1.0 && model.marginal(1) == reference) {
    lo.assign(xs.size(), 1.0);
    hi.assign(xs.size(), 1.0);
  }
  else {
    auto const s = n_fold_tail(model, n, LatticeGrid::default_for(x_grid.back()));
    for (double x : xs) {
      double const pred = sum_b * reference.tail(x);
      auto const br = s.at(x);
      lo.push_back(br.lower / pred);
      hi.push_back(br.upper / pred);
    }
  }
  auto d = finish_lemma(xs, lo, hi, options);
  d.b = std::move(b);
  return d;
}

void write_summary(std::ostream& os, TheoremVerdict const& v)
{
  os << to_string(v.theorem) << " for " << v.model << "\n";
  for (auto const& r : v.reports) {
    os << "  (" << r.condition_id << ") " << to_string(r.outcome) << ": " << r.narrative << "\n";
  }
  os << "hypothesis met: " << to_string(v.hypothesis_met) << "\n";
  if (v.conclusion_check) {
    os << "conclusion: c-index of the compound tail " << fmt(v.conclusion_check->estimate) << " ("
       << to_string(v.conclusion_check->verdict.outcome) << ")";
    if (!v.conclusion_note.empty())
      os << ", " << v.conclusion_note;
    os << "\n";
  }
  else if (!v.conclusion_note.empty()) {
    os << "conclusion: " << v.conclusion_note << "\n";
  }
}

} // namespace cvtail

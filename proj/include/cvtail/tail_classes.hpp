#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cvtail/dist_core.hpp"
#include "cvtail/lattice.hpp"

namespace cvtail {

/// A tail x -> P(X > x) given as an enclosure lower(x) <= P(X > x) <= upper(x).
/// Exact laws have lower == upper. Ratios built from a handle put the upper
/// bound in the numerator and the lower bound in the denominator (or the
/// reverse for an infimum), so diagnostics stay valid under bracketing.
class TailHandle
{
 public:
  static TailHandle from_law(MarginalLaw law);
  static TailHandle from_lattice(LatticeTail tail);
  static TailHandle from_function(std::function<double(double)> tail, std::string label);

  double upper(double x) const;
  double lower(double x) const;

  /// Largest x at which the enclosure is meaningful (lattice span, else +inf).
  double domain_max() const { return domain_max_; }
  std::string const& describe() const { return label_; }

  MarginalLaw const* law() const { return law_ ? &*law_ : nullptr; }
  LatticeTail const* lattice() const { return lattice_ ? &*lattice_ : nullptr; }

 private:
  TailHandle() = default;

  std::function<double(double)> upper_;
  std::function<double(double)> lower_;
  double domain_max_ = std::numeric_limits<double>::infinity();
  std::string label_;
  std::optional<MarginalLaw> law_;
  std::optional<LatticeTail> lattice_;
};

/// x_0, x_0 r, ..., x_0 r^{count-1}.
struct GeometricGrid
{
  double x0 = 1.0;
  double growth = 1.05;
  std::size_t count = 0;

  std::vector<double> points() const;
  double back() const;

  /// Geometric grid covering [lo, hi], both ends included.
  static GeometricGrid between(double lo, double hi, double growth = 1.05);
};

/// x_0 = 1, growth 1.05, extended until the tail drops below 1e-13, x
/// exceeds 1e10 or the handle's domain ends. The first point past a zero
/// tail is kept so bounded support stays visible.
GeometricGrid default_ratio_grid(TailHandle const& tail);

enum class Trend
{
  converging,
  diverging,
  flat,
  inconclusive
};

enum class Outcome
{
  pass,
  fail,
  inconclusive
};

std::string to_string(Trend t);
std::string to_string(Outcome o);

struct DiagnosticOptions
{
  double tau_c = 0.05;
  double tau_o = 1e-3;
  double tau_l = 0.05;
  double tau_r = 0.02;
  double tau_s = 0.05;
  /// Window sups may grow by this factor per decade before counting as divergence.
  double divergence_per_decade = 1.5;
  /// Up to this many trailing windows feed the trend classifier.
  std::size_t windows = 3;
};

/// Pointwise ratios of two tail evaluations along x, summarized over
/// trailing decade windows of the grid.
struct RatioDiagnostic
{
  std::string label;
  double y = 1.0;
  std::vector<double> xs;
  std::vector<double> ratio_hi; // enclosure of the ratio at each x
  std::vector<double> ratio_lo;
  std::vector<double> window_sups; // oldest first; the last is the top window
  std::vector<double> window_infs;
  double window_sup = 0.0;
  double window_inf = 0.0;
  Trend trend = Trend::inconclusive;
  bool truncated = false; // grid cut where the tail underflowed
};

/// F(xy)/F(x) along the grid. y == 1 gives ratios identically 1.
/// Points where the tail enclosure vanishes are dropped and flagged.
/// Throws DomainError when fewer than two usable points remain.
RatioDiagnostic ratio_curve(TailHandle const& tail, double y, GeometricGrid const& grid,
                            DiagnosticOptions const& options = {});

/// Windowed summary and trend of an arbitrary positive sequence along x.
void summarize(RatioDiagnostic& d, DiagnosticOptions const& options);

enum class ClassId
{
  H,
  L,
  D,
  C,
  R,
  S2fold
};

std::string to_string(ClassId c);

struct ClassVerdict
{
  ClassId class_id = ClassId::H;
  Outcome outcome = Outcome::inconclusive;
  std::vector<RatioDiagnostic> evidence;
  std::map<std::string, double> thresholds;
  std::optional<double> estimate; // alpha for R, J+ for D, c-index for C
  std::string note;
};

struct CIndexResult
{
  double estimate = 1.0;
  double raw_intercept = 1.0;
  ClassVerdict verdict;
};

/// Two-stage surrogate for lim_{y->1} limsup_x F(xy)/F(x): window sup per
/// y, then a least-squares line in (1 - y) evaluated at y = 1, clamped below
/// at 1 because every ratio with y <= 1 is at least 1.
CIndexResult c_index(TailHandle const& tail, std::vector<double> const& y_grid, GeometricGrid const& grid,
                     DiagnosticOptions const& options = {});

struct MatuszewskaResult
{
  double estimate = std::numeric_limits<double>::infinity();
  bool in_d = false;
  std::vector<double> liminf; // per y
  std::vector<RatioDiagnostic> curves;
};

/// Slope of -log(liminf_x F(xy)/F(x)) against log y through the origin.
/// The surrogate liminf is the inf over the top window. Any liminf below
/// 1e-12 means the law is not in D and the estimate is +inf.
MatuszewskaResult matuszewska_upper(TailHandle const& tail, std::vector<double> const& y_grid,
                                    GeometricGrid const& grid, DiagnosticOptions const& options = {});

ClassVerdict is_heavy(TailHandle const& tail, std::vector<double> const& delta_grid, GeometricGrid const& grid,
                      DiagnosticOptions const& options = {});
ClassVerdict is_long(TailHandle const& tail, GeometricGrid const& grid, DiagnosticOptions const& options = {});
ClassVerdict is_dominated(TailHandle const& tail, GeometricGrid const& grid, DiagnosticOptions const& options = {});
ClassVerdict is_consistent(TailHandle const& tail, GeometricGrid const& grid, DiagnosticOptions const& options = {});
ClassVerdict is_regular(TailHandle const& tail, GeometricGrid const& grid, DiagnosticOptions const& options = {});

/// Two-fold convolution ratio F*F(x) / F(x) over the top decade of
/// [lo, hi]; pass when its enclosure stays within 2 +- tau_s.
ClassVerdict s2fold(TailHandle const& tail, double lo = 1e2, double hi = 1e4, DiagnosticOptions const& options = {});

struct LittleOResult
{
  Outcome outcome = Outcome::inconclusive;
  RatioDiagnostic ratio;
  double tau = 1e-3;
};

/// F_a(x) = o(F_b(x)): the windowed ratio must decrease and end below tau_o.
LittleOResult little_o(TailHandle const& a, TailHandle const& b, GeometricGrid const& grid,
                       DiagnosticOptions const& options = {});

struct ClassReport
{
  std::string law;
  bool bounded = false;
  std::map<ClassId, ClassVerdict> verdicts;
  MatuszewskaResult matuszewska;
  CIndexResult c;
};

/// Every class diagnostic on default grids.
ClassReport classify(TailHandle const& tail, DiagnosticOptions const& options = {});

struct AuditViolation
{
  ClassId sub;
  ClassId super;
  std::string message;
};

/// Checks pass/fail pairs against R < C < L and D < S < L < H. Inconclusive
/// verdicts never count as violations.
std::vector<AuditViolation> inclusion_audit(std::map<ClassId, ClassVerdict> const& verdicts);

/// Default y grids.
std::vector<double> default_c_grid();
std::vector<double> default_j_grid();
std::vector<double> default_delta_grid();

/// Every dist_core family with three parameterizations.
std::vector<MarginalLaw> builtin_corpus();

void write_ratio_csv(std::ostream& os, std::vector<RatioDiagnostic> const& curves,
                     std::vector<std::string> const& comments = {});

} // namespace cvtail

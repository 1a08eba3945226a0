#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cvtail/compound.hpp"
#include "cvtail/model.hpp"
#include "cvtail/tail_classes.hpp"

namespace cvtail {

enum class TheoremId
{
  T1,
  T2,
  T3,
  C1,
  C2
};

enum class Hypothesis
{
  yes,
  no,
  inconclusive
};

std::string to_string(TheoremId t);
std::string to_string(Hypothesis h);

/// One diagnostic a condition rests on.
struct Evidence
{
  std::string label;
  Outcome outcome = Outcome::inconclusive;
  std::optional<double> value;
  std::string detail;
};

struct ConditionReport
{
  TheoremId theorem = TheoremId::T1;
  char condition_id = 'a';
  Outcome outcome = Outcome::inconclusive;
  std::vector<Evidence> evidence;
  std::string narrative;
};

struct TheoremVerdict
{
  TheoremId theorem = TheoremId::T1;
  std::string model;
  std::vector<ConditionReport> reports;
  Hypothesis hypothesis_met = Hypothesis::inconclusive;
  /// c-index of the computed compound tail, when it was requested and succeeded.
  std::optional<CIndexResult> conclusion_check;
  std::optional<TruncationCertificate> certificate;
  std::string conclusion_note;

  ConditionReport const& condition(char id) const;
};

/// 0 = hypothesis met, 2 = not met, 3 = inconclusive.
int exit_code(Hypothesis h);

struct ConclusionOptions
{
  /// Hybrid lattice: uniform step up to step / growth, relative spacing growth beyond.
  double step = 1.0 / 128.0;
  double growth = 2e-3;
  double span = 1e5;
  double eps_trunc = 1e-6;
  std::vector<double> y_grid = {0.9, 0.95, 0.98, 0.99};
  double x_lo = 1e2;
  double x_hi = 1e5;
  CompoundOptions compound;
};

struct CheckOptions
{
  DiagnosticOptions diagnostics;
  /// Condition (d) of T2 is inconclusive when the best p clears J by at most this.
  double moment_band = 0.2;
  /// Largest p - J searched in condition (d) of T2.
  double p_window = 3.0;
  std::size_t n_cap = 1000;
  /// Also compute the compound tail and its c-index.
  bool conclusion = false;
  ConclusionOptions conclusion_options;
};

/// d_claim is D in P(eta <= D) = 1; it defaults to the largest support point of eta.
TheoremVerdict check_theorem1(ModelSpec const& model, std::optional<std::size_t> d_claim = std::nullopt,
                              CheckOptions const& options = {});
TheoremVerdict check_theorem2(ModelSpec const& model, CheckOptions const& options = {});
/// Throws NonNegativityViolated if some marginal charges (-inf, 0).
TheoremVerdict check_theorem3(ModelSpec const& model, CheckOptions const& options = {});
/// Corollaries need an i.i.d. model; otherwise PremiseViolated.
TheoremVerdict check_corollary1(ModelSpec const& model, CheckOptions const& options = {});
TheoremVerdict check_corollary2(ModelSpec const& model, CheckOptions const& options = {});

TheoremVerdict check(TheoremId id, ModelSpec const& model, CheckOptions const& options = {});

/// limsup_x sup_n (1 / (n F_1(x))) sum_{i<=n} F_i(x) along the grid. The sup
/// over n is exact: past the head the partial averages are monotone in the
/// number of whole periods, so one period plus the period mean suffice.
struct SupRatioResult
{
  Outcome outcome = Outcome::inconclusive;
  RatioDiagnostic curve; // ratio_hi holds the sup over n at each x
  std::size_t n_at_sup = 0; // argmax n at the top grid point, 0 for the period limit
};

SupRatioResult check_sup_ratio(ModelSpec const& model, GeometricGrid const& x_grid, std::size_t n_cap = 1000,
                               DiagnosticOptions const& options = {});

/// Brute-force sup over n <= n_cap of the same average at one x.
double sup_ratio_enumerated(ModelSpec const& model, double x, std::size_t n_cap);

/// limsup_u sup_n (1/n) sum_{k<=n, E xi_k >= u} E xi_k. With finitely many
/// distinct laws the sum is empty once u passes the largest mean.
struct CesaroResult
{
  Outcome outcome = Outcome::inconclusive;
  ExtendedReal max_mean;
  std::optional<double> witness_u; // every u above it gives 0
};

CesaroResult check_cesaro(ModelSpec const& model);

/// Cesaro value for one u, evaluated exactly over the rule.
double cesaro_value(ModelSpec const& model, double u);

/// c-index of the bracketed compound tail; the upper bracket enters every
/// numerator and the lower bracket every denominator.
struct ConclusionResult
{
  CIndexResult c;
  TruncationCertificate certificate;
  double max_relative_width = 0.0; // over the x window
};

ConclusionResult conclusion_diagnostic(ModelSpec const& model, ConclusionOptions const& options = {},
                                       DiagnosticOptions const& diagnostics = {});

/// Same evaluation on an already computed compound tail; only the x window
/// and y grid of options are used.
ConclusionResult conclusion_from_tail(CompoundTail const& tail, ConclusionOptions const& options = {},
                                      DiagnosticOptions const& diagnostics = {});

/// Convolved tail over its predicted asymptote, with the distance to 1.
struct LemmaDiagnostic
{
  std::vector<double> xs;
  std::vector<double> ratio_lo;
  std::vector<double> ratio_hi;
  RatioDiagnostic deviation; // max |ratio - 1| over the enclosure
  Trend trend = Trend::inconclusive;
  std::vector<double> b; // Lemma 2 weights, empty for Lemma 1
};

/// P(S_n > x) / sum_{i<=n} P(xi_i > x). Throws PremiseViolated when a
/// marginal among the first n fails the C diagnostic.
LemmaDiagnostic lemma1_diagnostic(ModelSpec const& model, std::size_t n, GeometricGrid const& x_grid,
                                  DiagnosticOptions const& options = {});

/// P(S_n > x) / (sum_{i<=n} b_i P(ref > x)) with b_i the stabilized ratio
/// P(xi_i > x) / P(ref > x). Throws PremiseViolated when a ratio does not settle.
LemmaDiagnostic lemma2_diagnostic(ModelSpec const& model, std::size_t n, MarginalLaw const& reference,
                                  GeometricGrid const& x_grid, DiagnosticOptions const& options = {});

/// Human-readable multi-line summary.
void write_summary(std::ostream& os, TheoremVerdict const& v);

} // namespace cvtail

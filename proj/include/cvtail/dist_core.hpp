#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cvtail/rng.hpp"

namespace cvtail {

/// A real number or +infinity. Infinite moments are carried as a state,
/// never as a large float.
class ExtendedReal
{
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}

  static constexpr ExtendedReal infinity() { return ExtendedReal(Infinite{}); }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  /// Finite value; +inf (IEEE) when infinite, for arithmetic convenience.
  constexpr double value() const
  {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  std::string to_string() const;

  friend constexpr bool operator==(ExtendedReal const&, ExtendedReal const&) = default;

 private:
  struct Infinite
  {};
  constexpr explicit ExtendedReal(Infinite) : infinite_(true) {}

  double value_ = 0.0;
  bool infinite_ = false;
};

// ---------------------------------------------------------------------------
// Marginal laws

/// tail(x) = (scale / x)^alpha for x >= scale, 1 below.
struct Pareto
{
  double alpha = 1.0;
  double scale = 1.0;

  bool operator==(Pareto const&) const = default;
};

struct Exponential
{
  double rate = 1.0;

  bool operator==(Exponential const&) const = default;
};

/// Law of (1 + U) 2^G with U ~ Uniform[0,1], P(G = l) = (1 - q) q^l.
struct LiftedGeometric
{
  double q = 0.5;

  bool operator==(LiftedGeometric const&) const = default;
};

/// Right-continuous step law: P(X > x) = tails[i] on [points[i], points[i+1]),
/// 1 below points[0]. Stored as tails so extreme quantiles keep precision.
struct LatticeLaw
{
  std::vector<double> points;
  std::vector<double> tails;

  bool operator==(LatticeLaw const&) const = default;
};

struct Degenerate
{
  double point = 0.0;

  bool operator==(Degenerate const&) const = default;
};

class MarginalLaw
{
 public:
  using Family = std::variant<Pareto, Exponential, LiftedGeometric, LatticeLaw, Degenerate>;

  /// Throws std::invalid_argument when parameters are out of range.
  explicit MarginalLaw(Family family);

  static MarginalLaw pareto(double alpha, double scale = 1.0) { return MarginalLaw(Pareto{alpha, scale}); }
  static MarginalLaw exponential(double rate) { return MarginalLaw(Exponential{rate}); }
  static MarginalLaw lifted_geometric(double q) { return MarginalLaw(LiftedGeometric{q}); }
  static MarginalLaw degenerate(double point) { return MarginalLaw(Degenerate{point}); }
  static MarginalLaw lattice(std::vector<double> points, std::vector<double> tails)
  {
    return MarginalLaw(LatticeLaw{std::move(points), std::move(tails)});
  }

  Family const& family() const { return family_; }

  /// P(X > x).
  double tail(double x) const;
  /// P(X >= x); differs from tail() only at atoms.
  double tail_closed(double x) const;
  /// P(a < X <= b), evaluated without cancellation where a closed form allows.
  double mass_between(double a, double b) const;

  /// inf{x : tail(x) <= p} for p in (0, 1).
  double quantile(double p) const;

  ExtendedReal mean() const;

  /// Left end of the support.
  double support_min() const;
  /// Right end of the support, if bounded.
  std::optional<double> support_max() const;

  double sample(RngStream& stream) const;
  std::vector<double> sample(RngStream& stream, std::size_t n) const;

  std::string describe() const;

  friend bool operator==(MarginalLaw const& a, MarginalLaw const& b);

 private:
  Family family_;
};

// ---------------------------------------------------------------------------
// Counting laws

struct Poisson
{
  double lambda = 1.0;

  bool operator==(Poisson const&) const = default;
};

/// P(eta = m) = (m + 1)^-4 / zeta(4), m >= 0.
struct Zeta4
{
  bool operator==(Zeta4 const&) const = default;
};

/// pmf table on 0..D.
struct FiniteSupport
{
  std::vector<double> pmf;

  bool operator==(FiniteSupport const&) const = default;
};

/// P(eta = n) = (1 - q) q^n, n >= 0.
struct GeometricCount
{
  double q = 0.5;

  bool operator==(GeometricCount const&) const = default;
};

struct MomentResult
{
  enum class Kind
  {
    finite,
    infinite,
    unknown
  };
  Kind kind = Kind::unknown;
  double value = 0.0;

  bool is_finite() const { return kind == Kind::finite; }
};

class CountingLaw
{
 public:
  using Family = std::variant<Poisson, Zeta4, FiniteSupport, GeometricCount>;

  /// Validates parameters and rejects laws degenerate at zero.
  explicit CountingLaw(Family family);

  static CountingLaw poisson(double lambda) { return CountingLaw(Poisson{lambda}); }
  static CountingLaw zeta4() { return CountingLaw(Zeta4{}); }
  static CountingLaw finite(std::vector<double> pmf) { return CountingLaw(FiniteSupport{std::move(pmf)}); }
  static CountingLaw geometric(double q) { return CountingLaw(GeometricCount{q}); }
  /// eta = n almost surely (n >= 1).
  static CountingLaw point_mass(std::size_t n);

  Family const& family() const { return family_; }

  double pmf(std::size_t n) const;
  /// P(eta > n).
  double tail(std::size_t n) const;
  /// P(eta > x) on the reals, by right-continuous step extension.
  double tail_real(double x) const;

  /// Largest support point when bounded.
  std::optional<std::size_t> support_max() const;

  /// Supremum of r with E eta^r finite; moments are finite strictly below it.
  ExtendedReal moment_boundary() const;

  /// E eta^r, symbolic finiteness plus the value (relative accuracy 1e-10).
  MomentResult moment(double r) const;

  /// Smallest n with P(eta > n) <= eps, searched up to n_cap.
  std::optional<std::size_t> truncation_point(double eps, std::size_t n_cap) const;

  std::size_t sample(RngStream& stream) const;
  /// Draw from the law of eta conditioned on eta >= n_min.
  std::size_t sample_at_least(RngStream& stream, std::size_t n_min) const;
  std::vector<std::size_t> sample(RngStream& stream, std::size_t n) const;

  std::string describe() const;

 private:
  std::size_t invert_tail(double v, std::size_t n_min) const;

  Family family_;
  std::vector<double> table_tail_; // cached P(eta > n) for small n
};

// ---------------------------------------------------------------------------
// Special functions used by the counting laws.

/// zeta(4) by direct summation with the integral remainder bracket.
double zeta4_constant();

/// Hurwitz zeta sum_{k>=0} (k + a)^-s for s > 1, a > 0.
double hurwitz_zeta(double s, double a);

/// counting_moment_finite as a free function.
inline MomentResult counting_moment_finite(CountingLaw const& law, double r) { return law.moment(r); }

} // namespace cvtail

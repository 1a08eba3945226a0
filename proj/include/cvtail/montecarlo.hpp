#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cvtail/lattice.hpp"
#include "cvtail/model.hpp"

namespace cvtail {

/// Two-sided 99% normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

struct TailEstimate
{
  double x = 0.0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::size_t n_samples = 0; // requested
  std::size_t n_drawn = 0;   // actually simulated (strata are rounded)
  std::uint64_t seed = 0;
  std::size_t hits = 0;
  double variance = 0.0; // estimated variance of p_hat
  bool stratified = true;
  /// Fewer than 20 hits: the interval is not trustworthy.
  bool degenerate = false;
};

struct SimulationOptions
{
  bool stratified = true;
  /// 0 picks std::thread::hardware_concurrency(). Results never depend on it.
  unsigned threads = 0;
  double z = kZ99;
  /// Strata expecting fewer samples than this are merged into one tail stratum.
  std::size_t min_stratum = 100;
};

/// Wilson score interval for a proportion p observed with effective size n.
struct Interval
{
  double low = 0.0;
  double high = 1.0;
};
Interval wilson(double p, double n, double z = kZ99);

/// Estimate P(S_eta > x). Stratified mode enumerates eta = n with pmf
/// weights and simulates S_n per stratum; plain mode draws eta per sample.
/// Bit-reproducible from (model, x, n_samples, seed, stratified).
/// Throws std::invalid_argument when n_samples < 10^4.
TailEstimate simulate_tail(ModelSpec const& model, double x, std::size_t n_samples, std::uint64_t seed,
                           SimulationOptions const& options = {});

/// Growth of a fitted ratio toward the edge of the scanned range.
struct BoundaryGrowth
{
  bool in_n = false;
  bool in_x = false;
  bool any() const { return in_n || in_x; }
};

struct BoundFit
{
  double c_hat = 0.0;
  std::size_t n_at = 0;
  double x_at = 0.0;
  BoundaryGrowth growth;
  std::size_t cells = 0; // (n, x) cells that entered the sup
  /// sup over x per n, in scan order.
  std::vector<std::pair<std::size_t, double>> per_n;
};

struct Lemma5Options
{
  double x_lo = 10.0;
  double x_hi = 1e4;
  double x_growth = 1.05;
  ConvolutionMethod method = ConvolutionMethod::automatic;
  /// Throw PremiseViolated on boundary growth instead of only flagging it.
  bool throw_on_growth = true;
};

/// c1 = sup_{n <= n_max, x} P(S_n > x) / (n^{p+1} P(xi_nu > x)), using the
/// upper lattice bracket of S_n. Throws PremiseViolated if p does not
/// exceed the estimated upper Matuszewska index of xi_nu.
BoundFit lemma5_bound_fit(ModelSpec const& model, std::size_t nu, double p, std::size_t n_max,
                          Lemma5Options const& options = {});

struct Lemma6Options
{
  std::vector<std::size_t> n_values = {1, 2, 3, 5, 8, 12, 20, 30, 50};
  std::size_t samples = 1000000;
  /// Per n, x runs over gamma * n * x_growth^k up to x_hi.
  double x_hi = 1e4;
  double x_growth = 1.25;
  std::size_t min_hits = 20;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool throw_on_growth = true;
};

/// c2 = sup over n >= nu and x >= gamma n of P(sum_k (xi_k - E xi_k) > x) / (n P(xi_nu > x)),
/// estimated by simulation with common random numbers across x. Only cells
/// with at least min_hits hits count. Throws InfiniteMean if a mean diverges.
BoundFit lemma6_bound_fit(ModelSpec const& model, std::size_t nu, double gamma, Lemma6Options const& options = {});

} // namespace cvtail

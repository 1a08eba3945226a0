#pragma once

#include <cstddef>
#include <vector>

#include "cvtail/lattice.hpp"
#include "cvtail/model.hpp"

namespace cvtail {

/// Bracket of P(S_n > x), S_n = xi_1 + ... + xi_n, following the rule order.
/// Repeated periods are combined by binary powering.
LatticeTail n_fold_tail(ModelSpec const& model, std::size_t n, LatticeGrid const& grid,
                        ConvolutionMethod method = ConvolutionMethod::automatic);

/// Brackets of S_1, ..., S_{n_max} by sequential convolution.
std::vector<LatticeTail> partial_sum_tails(ModelSpec const& model, std::size_t n_max, LatticeGrid const& grid,
                                           ConvolutionMethod method = ConvolutionMethod::automatic);

struct CompoundOptions
{
  ConvolutionMethod method = ConvolutionMethod::automatic;
  /// Largest exact prefix N the truncation search may return.
  std::size_t n_cap = 100000;
  /// Force the exact prefix N instead of searching for it.
  std::size_t forced_n = 0;
  /// Bound the terms beyond N by monotone blocks instead of P(eta > N) alone.
  bool blocked = true;
  /// Block end points grow roughly by this factor.
  double block_ratio = 1.4;
  /// Stop extending blocks once P(eta > n) falls below this.
  double remainder_floor = 1e-20;
};

struct TruncationCertificate
{
  std::size_t n_exact = 0;   // N: terms 0..N computed exactly
  double eps_trunc = 0.0;    // requested bound
  double tail_mass = 0.0;    // P(eta > N) <= eps_trunc
  bool blocked = false;
  std::size_t blocks = 0;
  std::size_t n_end = 0;     // last block end
  double remainder = 0.0;    // P(eta > n_end), added to upper in full
};

struct CompoundTail
{
  LatticeTail tail;
  TruncationCertificate certificate;
};

/// Bracket of P(S_eta > x) = sum_n P(eta = n) P(S_n > x).
///
/// Terms n <= N are exact lattice brackets. The terms n > N add at most
/// P(eta > N) uniformly in x; with blocking, S_n <= S_{n'} for n <= n'
/// tightens this to sum_j P(eta in block j) P(S_{block end} > x).
/// Throws TruncationUnreachable when P(eta > n_cap) > eps_trunc.
CompoundTail compound_tail(ModelSpec const& model, LatticeGrid const& grid, double eps_trunc,
                           CompoundOptions const& options = {});

} // namespace cvtail

#include "cvtail/compound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "cvtail/errors.hpp"

namespace cvtail {

namespace {

// Discretized marginals, one per rule entry, built on first use.
class MarginalCache
{
 public:
  MarginalCache(ModelSpec const& model, LatticeGrid const& grid)
    : model_(model), grid_(grid), tails_(model.rule().size())
  {}

  LatticeTail const& at(std::size_t k)
  {
    auto const e = model_.entry_index(k);
    if (!tails_[e])
      tails_[e] = discretize(model_.rule()[e].law, grid_);
    return *tails_[e];
  }

 private:
  ModelSpec const& model_;
  LatticeGrid const& grid_;
  std::vector<std::optional<LatticeTail>> tails_;
};

std::optional<LatticeTail> add(std::optional<LatticeTail> const& acc, LatticeTail const& x, ConvolutionMethod m)
{
  if (!acc)
    return x;
  return convolve(*acc, x, m);
}

// xi_{from} + ... + xi_{to}, empty when to < from.
std::optional<LatticeTail> sequential(MarginalCache& cache, std::size_t from, std::size_t to, ConvolutionMethod m)
{
  std::optional<LatticeTail> acc;
  for (std::size_t k = from; k <= to; ++k)
    acc = add(acc, cache.at(k), m);
  return acc;
}

void check_support(ModelSpec const& model)
{
  if (model.support_min() < 0)
    throw UnsupportedLaw("lattice brackets need nonnegative marginals");
}

} // namespace

LatticeTail n_fold_tail(ModelSpec const& model, std::size_t n, LatticeGrid const& grid, ConvolutionMethod method)
{
  check_support(model);
  if (n == 0)
    return zero_tail(grid);
  MarginalCache cache(model, grid);
  std::size_t const period = model.period();
  std::size_t const k0 = (model.head_length() + period - 1) / period * period;
  if (n <= k0 + 2 * period)
    return *sequential(cache, 1, n, method);

  auto acc = sequential(cache, 1, k0, method);
  // One period starting after k0 has the same law wherever it starts.
  auto base = sequential(cache, k0 + 1, k0 + period, method);
  std::size_t reps = (n - k0) / period;
  std::size_t const done = k0 + reps * period;
  while (reps > 0) {
    if (reps & 1u)
      acc = add(acc, *base, method);
    reps >>= 1;
    if (reps > 0)
      base = convolve(*base, *base, method);
  }
  for (std::size_t k = done + 1; k <= n; ++k)
    acc = add(acc, cache.at(k), method);
  return *acc;
}

std::vector<LatticeTail> partial_sum_tails(ModelSpec const& model, std::size_t n_max, LatticeGrid const& grid,
                                           ConvolutionMethod method)
{
  check_support(model);
  MarginalCache cache(model, grid);
  std::vector<LatticeTail> out;
  out.reserve(n_max);
  for (std::size_t k = 1; k <= n_max; ++k)
    out.push_back(k == 1 ? cache.at(1) : convolve(out.back(), cache.at(k), method));
  return out;
}

CompoundTail compound_tail(ModelSpec const& model, LatticeGrid const& grid, double eps_trunc,
                           CompoundOptions const& options)
{
  check_support(model);
  if (!(eps_trunc > 0))
    throw std::invalid_argument("compound_tail: eps_trunc must be positive");
  CountingLaw const& eta = model.counting();

  std::size_t n_exact = options.forced_n;
  if (n_exact == 0) {
    auto const found = eta.truncation_point(eps_trunc, options.n_cap);
    if (!found)
      throw TruncationUnreachable("P(eta > n) stays above " + std::to_string(eps_trunc) + " up to n = " +
                                  std::to_string(options.n_cap));
    n_exact = *found;
  }
  std::size_t const period = model.period();
  bool const blocked = options.blocked && eta.tail(n_exact) > 0;
  if (blocked) {
    // Blocks must start past the irregular head, on a period boundary.
    n_exact = std::max(n_exact, model.head_length());
    n_exact = (n_exact + period - 1) / period * period;
  }

  auto const m = static_cast<Eigen::Index>(grid.size());
  Eigen::ArrayXd upper = Eigen::ArrayXd::Zero(m);
  Eigen::ArrayXd lower = Eigen::ArrayXd::Zero(m);
  MarginalCache cache(model, grid);
  ConvolutionMethod const method = options.method;

  // Exact terms in ascending n; n = 0 contributes P(0 > x) = 0 for x >= 0.
  std::optional<LatticeTail> s;
  for (std::size_t n = 1; n <= n_exact; ++n) {
    s = add(s, cache.at(n), method);
    double const p = eta.pmf(n);
    if (p > 0) {
      upper += p * s->upper();
      lower += p * s->lower();
    }
  }

  TruncationCertificate cert;
  cert.n_exact = n_exact;
  cert.eps_trunc = eps_trunc;
  cert.tail_mass = eta.tail(n_exact);
  cert.blocked = blocked;
  cert.n_end = n_exact;

  if (!blocked) {
    cert.remainder = cert.tail_mass;
    upper += cert.remainder;
  }
  else {
    LatticeTail const s_n = s ? *s : zero_tail(grid);
    // chain[j] = (b_j, law of xi_{N+1} + ... + xi_{N+b_j}), b_j multiples of the period.
    std::vector<std::pair<std::size_t, LatticeTail>> chain;
    chain.emplace_back(period, *sequential(cache, n_exact + 1, n_exact + period, method));
    LatticeTail prev = s_n; // S_{N + b_prev}
    std::size_t b_prev = 0;
    double tail_prev = cert.tail_mass;
    double const ratio = std::max(options.block_ratio, 1.01);
    std::size_t const b_cap = std::size_t{1} << 40;

    for (;;) {
      std::size_t b_next;
      if (b_prev == 0) {
        b_next = period;
      }
      else {
        // Largest chain element not above (ratio - 1) * b_prev, at least one period.
        std::size_t pick = 0;
        for (std::size_t j = 0; j < chain.size(); ++j)
          if (chain[j].first <= static_cast<double>(b_prev) * (ratio - 1.0))
            pick = j;
        b_next = b_prev + chain[pick].first;
        chain.emplace_back(b_next, convolve(chain.back().second, chain[pick].second, method));
      }
      LatticeTail const& r = chain.back().second;
      LatticeTail next = convolve(s_n, r, method);
      double const tail_next = eta.tail(n_exact + b_next);
      double const w = std::max(0.0, tail_prev - tail_next);
      // For N + b_prev < n <= N + b_next: S_{N+b_prev} <= S_n <= S_{N+b_next}.
      upper += w * next.upper();
      lower += w * prev.lower();
      prev = std::move(next);
      b_prev = b_next;
      tail_prev = tail_next;
      ++cert.blocks;
      bool const saturated = prev.lower()[m - 1] >= 1.0 - 1e-15;
      if (tail_prev <= options.remainder_floor || saturated || b_prev >= b_cap)
        break;
    }
    cert.n_end = n_exact + b_prev;
    cert.remainder = tail_prev;
    upper += tail_prev;
    lower += tail_prev * prev.lower();
  }

  // Outward pad for the rounding of the weighted sums above.
  double const pad = static_cast<double>(n_exact + cert.blocks + 8) * std::numeric_limits<double>::epsilon();
  upper = (upper * (1.0 + pad)).min(1.0);
  lower = (lower * (1.0 - pad)).min(upper);
  return {LatticeTail(grid, std::move(lower), std::move(upper)), cert};
}

} // namespace cvtail

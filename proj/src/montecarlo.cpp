#include "cvtail/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "cvtail/compound.hpp"
#include "cvtail/errors.hpp"
#include "cvtail/rng.hpp"
#include "cvtail/tail_classes.hpp"

namespace cvtail {

namespace {

constexpr std::size_t kChunk = std::size_t{1} << 16;
constexpr std::size_t kDegenerateHits = 20;

unsigned thread_count(unsigned requested)
{
  if (requested > 0)
    return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs job(i) for i in [0, n) on a small pool. Each job writes only its own slot.
void parallel_for(std::size_t n, unsigned threads, std::function<void(std::size_t)> const& job)
{
  unsigned const t = static_cast<unsigned>(std::min<std::size_t>(thread_count(threads), n));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < t; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++)
        job(i);
    });
  for (auto& th : pool)
    th.join();
}

double draw_sum(ModelSpec const& model, std::size_t n, RngStream& rng)
{
  double s = 0.0;
  for (std::size_t k = 1; k <= n; ++k)
    s += model.marginal(k).sample(rng);
  return s;
}

struct Stratum
{
  std::size_t n_min = 0;  // eta = n_min, or eta >= n_min when lumped
  bool lumped = false;
  double weight = 0.0;
  std::size_t draws = 0;
  std::size_t hits = 0;
};

// Rising edge of a scan: the last three values increase, the last is the
// maximum and it clears the first half's maximum by a visible margin.
bool grows_at_boundary(std::vector<double> const& v)
{
  std::size_t const k = v.size();
  if (k < 4)
    return false;
  if (!(v[k - 1] > v[k - 2] && v[k - 2] > v[k - 3]))
    return false;
  if (*std::max_element(v.begin(), v.end()) != v[k - 1])
    return false;
  double const first_half = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k / 2));
  return v[k - 1] > 1.01 * first_half;
}

} // namespace

Interval wilson(double p, double n, double z)
{
  if (!(n > 0))
    return {0.0, 1.0};
  double const z2 = z * z;
  double const denom = 1.0 + z2 / n;
  double const center = (p + z2 / (2 * n)) / denom;
  double const half = z / denom * std::sqrt(std::max(0.0, p * (1 - p) / n + z2 / (4 * n * n)));
  return {std::max(0.0, std::min(p, center - half)), std::min(1.0, std::max(p, center + half))};
}

TailEstimate simulate_tail(ModelSpec const& model, double x, std::size_t n_samples, std::uint64_t seed,
                           SimulationOptions const& options)
{
  if (n_samples < 10000)
    throw std::invalid_argument("simulate_tail: need at least 10^4 samples");
  CountingLaw const& eta = model.counting();
  TailEstimate est;
  est.x = x;
  est.n_samples = n_samples;
  est.seed = seed;
  est.stratified = options.stratified;

  if (!options.stratified) {
    std::size_t const chunks = (n_samples + kChunk - 1) / kChunk;
    std::vector<std::size_t> hits(chunks, 0);
    parallel_for(chunks, options.threads, [&](std::size_t c) {
      RngStream rng(seed, c);
      std::size_t const m = std::min(kChunk, n_samples - c * kChunk);
      std::size_t h = 0;
      for (std::size_t i = 0; i < m; ++i)
        h += draw_sum(model, eta.sample(rng), rng) > x;
      hits[c] = h;
    });
    for (auto h : hits)
      est.hits += h;
    est.n_drawn = n_samples;
    est.p_hat = static_cast<double>(est.hits) / static_cast<double>(n_samples);
    est.variance = est.p_hat * (1 - est.p_hat) / static_cast<double>(n_samples);
    auto const ci = wilson(est.p_hat, static_cast<double>(n_samples), options.z);
    est.ci_low = ci.low;
    est.ci_high = ci.high;
    est.degenerate = est.hits < kDegenerateHits;
    return est;
  }

  // eta = 0 contributes P(0 > x) exactly.
  double const p0 = eta.pmf(0);
  double const rest = 1.0 - p0;
  double const budget = static_cast<double>(n_samples);
  std::vector<Stratum> strata;
  for (std::size_t n = 1;; ++n) {
    double const w = eta.pmf(n);
    if (budget * w / rest < static_cast<double>(options.min_stratum)) {
      // Everything from n on shares one stratum.
      double const wl = eta.tail(n - 1);
      if (wl > 0)
        strata.push_back({n, true, wl, 0, 0});
      break;
    }
    strata.push_back({n, false, w, 0, 0});
    if (eta.tail(n) <= 0)
      break;
  }
  std::size_t drawn = 0;
  for (auto& s : strata) {
    s.draws = std::max<std::size_t>(options.min_stratum,
                                    static_cast<std::size_t>(std::llround(budget * s.weight / rest)));
    drawn += s.draws;
  }

  parallel_for(strata.size(), options.threads, [&](std::size_t i) {
    auto& s = strata[i];
    RngStream rng(seed, i);
    std::size_t h = 0;
    for (std::size_t j = 0; j < s.draws; ++j) {
      std::size_t const n = s.lumped ? eta.sample_at_least(rng, s.n_min) : s.n_min;
      h += draw_sum(model, n, rng) > x;
    }
    s.hits = h;
  });

  double p = x < 0 ? p0 : 0.0;
  double var = 0.0;
  for (auto const& s : strata) {
    double const ph = static_cast<double>(s.hits) / static_cast<double>(s.draws);
    p += s.weight * ph;
    var += s.weight * s.weight * ph * (1 - ph) / static_cast<double>(s.draws);
    est.hits += s.hits;
  }
  est.n_drawn = drawn;
  est.p_hat = std::clamp(p, 0.0, 1.0);
  est.variance = var;
  double const n_eff =
    var > 0 ? est.p_hat * (1 - est.p_hat) / var : static_cast<double>(drawn);
  auto const ci = wilson(est.p_hat, n_eff, options.z);
  est.ci_low = ci.low;
  est.ci_high = ci.high;
  est.degenerate = est.hits < kDegenerateHits;
  return est;
}

BoundFit lemma5_bound_fit(ModelSpec const& model, std::size_t nu, double p, std::size_t n_max,
                          Lemma5Options const& options)
{
  if (nu < 1 || n_max < 1)
    throw std::invalid_argument("lemma5_bound_fit: need nu >= 1 and n_max >= 1");
  auto const ref = TailHandle::from_law(model.marginal(nu));
  auto const j = matuszewska_upper(ref, default_j_grid(), GeometricGrid::between(options.x_lo, options.x_hi));
  if (!(p > j.estimate))
    throw PremiseViolated("lemma 5 needs p above the upper Matuszewska index " + std::to_string(j.estimate));

  auto const grid = LatticeGrid::default_for(options.x_hi);
  auto const sums = partial_sum_tails(model, n_max, grid, options.method);
  auto const xs = GeometricGrid::between(options.x_lo, options.x_hi, options.x_growth).points();

  BoundFit fit;
  std::vector<double> per_x(xs.size(), 0.0);
  for (std::size_t n = 1; n <= n_max; ++n) {
    double const scale = std::pow(static_cast<double>(n), p + 1);
    double row = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double const den = ref.lower(xs[i]);
      if (!(den > 0))
        continue;
      double const r = sums[n - 1].upper_at(xs[i]) / (scale * den);
      ++fit.cells;
      row = std::max(row, r);
      per_x[i] = std::max(per_x[i], r);
      if (r > fit.c_hat) {
        fit.c_hat = r;
        fit.n_at = n;
        fit.x_at = xs[i];
      }
    }
    fit.per_n.emplace_back(n, row);
  }
  std::vector<double> rows;
  for (auto const& [n, r] : fit.per_n)
    rows.push_back(r);
  fit.growth.in_n = grows_at_boundary(rows);
  fit.growth.in_x = grows_at_boundary(per_x);
  if (options.throw_on_growth && fit.growth.any())
    throw PremiseViolated("lemma 5 ratio grows at the edge of the scanned range");
  return fit;
}

BoundFit lemma6_bound_fit(ModelSpec const& model, std::size_t nu, double gamma, Lemma6Options const& options)
{
  if (!(gamma > 0))
    throw std::invalid_argument("lemma6_bound_fit: gamma must be positive");
  std::vector<std::size_t> ns;
  for (auto n : options.n_values)
    if (n >= nu)
      ns.push_back(n);
  std::sort(ns.begin(), ns.end());
  if (ns.empty())
    throw std::invalid_argument("lemma6_bound_fit: no n >= nu in the scan");
  std::size_t const n_top = ns.back();
  std::vector<double> means(n_top + 1, 0.0);
  for (std::size_t k = 1; k <= n_top; ++k) {
    auto const m = model.marginal(k).mean();
    if (m.is_infinite())
      throw InfiniteMean("lemma 6 needs finite means; xi_" + std::to_string(k) + " has none");
    means[k] = m.value();
  }
  MarginalLaw const& ref = model.marginal(nu);

  struct Row
  {
    double sup = 0.0;
    double x_at = 0.0;
    std::size_t cells = 0;
  };
  std::vector<Row> rows(ns.size());
  parallel_for(ns.size(), options.threads, [&](std::size_t idx) {
    std::size_t const n = ns[idx];
    std::vector<double> xs;
    for (double x = gamma * static_cast<double>(n); x <= options.x_hi; x *= options.x_growth)
      xs.push_back(x);
    std::vector<std::size_t> hits(xs.size(), 0);
    RngStream rng(options.seed, n);
    for (std::size_t s = 0; s < options.samples; ++s) {
      double c = 0.0;
      for (std::size_t k = 1; k <= n; ++k)
        c += model.marginal(k).sample(rng) - means[k];
      // xs ascends, so the hits form a prefix.
      for (std::size_t i = 0; i < xs.size() && c > xs[i]; ++i)
        ++hits[i];
    }
    Row row;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (hits[i] < options.min_hits)
        continue;
      double const den = static_cast<double>(n) * ref.tail(xs[i]);
      if (!(den > 0))
        continue;
      double const r = static_cast<double>(hits[i]) / static_cast<double>(options.samples) / den;
      ++row.cells;
      if (r > row.sup) {
        row.sup = r;
        row.x_at = xs[i];
      }
    }
    rows[idx] = row;
  });

  BoundFit fit;
  std::vector<double> seq;
  for (std::size_t idx = 0; idx < ns.size(); ++idx) {
    fit.per_n.emplace_back(ns[idx], rows[idx].sup);
    seq.push_back(rows[idx].sup);
    fit.cells += rows[idx].cells;
    if (rows[idx].sup > fit.c_hat) {
      fit.c_hat = rows[idx].sup;
      fit.n_at = ns[idx];
      fit.x_at = rows[idx].x_at;
    }
  }
  fit.growth.in_n = grows_at_boundary(seq);
  if (options.throw_on_growth && fit.growth.any())
    throw PremiseViolated("lemma 6 ratio grows at the edge of the scanned range");
  return fit;
}

} // namespace cvtail

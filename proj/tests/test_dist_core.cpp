#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "cvtail/dist_core.hpp"
#include "cvtail/rng.hpp"

using namespace cvtail;

namespace {

// P((1 + U) 2^G > x) by summing over G directly.
double lifted_geometric_oracle(double q, double x)
{
  double sum = 0.0;
  for (int l = 0; l < 1100; ++l) {
    double const p_above = std::clamp(2.0 - x / std::ldexp(1.0, l), 0.0, 1.0);
    sum += (1 - q) * std::pow(q, l) * p_above;
  }
  return sum;
}

double dkw_band(std::size_t n, double alpha)
{
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

// sup |F_n - F| over the sample, checking both one-sided limits at each atom.
double ks_distance(std::vector<double> xs, MarginalLaw const& law)
{
  std::sort(xs.begin(), xs.end());
  double const n = static_cast<double>(xs.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i])
      ++j;
    double const below = static_cast<double>(i) / n; // F_n(x-)
    double const at = static_cast<double>(j) / n;    // F_n(x)
    d = std::max(d, std::abs(below - (1.0 - law.tail_closed(xs[i]))));
    d = std::max(d, std::abs(at - (1.0 - law.tail(xs[i]))));
    i = j;
  }
  return d;
}

std::vector<MarginalLaw> marginal_corpus()
{
  return {MarginalLaw::pareto(2.0, 1.0),
          MarginalLaw::pareto(0.5, 3.0),
          MarginalLaw::exponential(1.0),
          MarginalLaw::exponential(2.5),
          MarginalLaw::lifted_geometric(0.5),
          MarginalLaw::lifted_geometric(0.25),
          MarginalLaw::lattice({1.0, 2.0, 4.0, 8.0}, {0.5, 0.25, 0.125, 0.0}),
          MarginalLaw::degenerate(5.0)};
}

} // namespace

TEST(Rng, PhiloxKnownAnswers)
{
  auto const zero = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(zero, (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  auto const ones = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(ones, (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  auto const pi = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(pi, (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Rng, SameSeedSameStream)
{
  RngStream a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i)
    ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DistinctStreamsDiffer)
{
  RngStream a(42, 0), b(42, 1);
  int equal = 0;
  for (int i = 0; i < 1000; ++i)
    equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, SeekReplays)
{
  RngStream a(9, 1);
  for (int i = 0; i < 10; ++i)
    a.next_u64();
  auto const v = a.next_u64();
  RngStream b(9, 1);
  b.seek(5);
  EXPECT_EQ(b.next_u64(), v);
}

TEST(Rng, UniformOpenInterval)
{
  RngStream s(1, 0);
  double lo = 1, hi = 0, sum = 0;
  int const n = 200000;
  for (int i = 0; i < n; ++i) {
    double const u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
}

TEST(Rng, StreamCorrelationSmall)
{
  RngStream a(5, 10), b(5, 11);
  int const n = 200000;
  double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    double const x = a.uniform(), y = b.uniform();
    sab += x * y;
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
  }
  double const cov = sab / n - (sa / n) * (sb / n);
  double const r = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  EXPECT_LT(std::abs(r), 4.0 / std::sqrt(n));
}

TEST(Zeta, Zeta4MatchesClosedForm)
{
  double const expected = std::pow(std::numbers::pi, 4) / 90.0;
  EXPECT_NEAR(zeta4_constant(), expected, 1e-14);
}

TEST(Zeta, HurwitzMatchesDirectSum)
{
  for (double s : {2.0, 3.0, 4.0, 5.5}) {
    for (double a : {0.5, 1.0, 2.0, 7.25, 100.0}) {
      // Direct sum plus integral midpoint remainder.
      double direct = 0.0;
      int const k_max = 200000;
      for (int k = k_max - 1; k >= 0; --k)
        direct += std::pow(k + a, -s);
      direct += std::pow(k_max + a - 0.5, 1.0 - s) / (s - 1.0);
      EXPECT_NEAR(hurwitz_zeta(s, a), direct, 1e-12 * direct) << "s=" << s << " a=" << a;
    }
  }
  EXPECT_NEAR(hurwitz_zeta(4.0, 1.0), zeta4_constant(), 1e-15);
}

TEST(MarginalTail, WorkedExamples)
{
  EXPECT_DOUBLE_EQ(MarginalLaw::pareto(2.0, 1.0).tail(10.0), 0.01);
  EXPECT_EQ(MarginalLaw::exponential(1.0).tail(0.0), 1.0);
  EXPECT_EQ(MarginalLaw::pareto(2.0, 1.0).tail(0.5), 1.0);
  EXPECT_NEAR(MarginalLaw::lifted_geometric(0.5).tail(3.0), lifted_geometric_oracle(0.5, 3.0), 1e-15);
  EXPECT_NEAR(MarginalLaw::lifted_geometric(0.5).tail(3.0), 0.375, 1e-15);
}

TEST(MarginalTail, LiftedGeometricMatchesSummationOracle)
{
  RngStream s(2024, 0);
  for (double q : {0.25, 0.5, 0.6}) {
    auto const law = MarginalLaw::lifted_geometric(q);
    for (int i = 0; i < 1000; ++i) {
      double const x = std::exp2(20.0 * s.uniform());
      double const oracle = lifted_geometric_oracle(q, x);
      ASSERT_NEAR(law.tail(x), oracle, 1e-12 * oracle) << "q=" << q << " x=" << x;
    }
  }
}

TEST(MarginalTail, MonotoneRightContinuousBounded)
{
  for (auto const& law : marginal_corpus()) {
    double prev = 1.0;
    for (double x = -5; x < 200; x += 0.0625) {
      double const t = law.tail(x);
      ASSERT_GE(t, 0.0);
      ASSERT_LE(t, prev) << law.describe() << " x=" << x;
      ASSERT_GE(law.tail_closed(x), t);
      prev = t;
    }
    EXPECT_EQ(law.tail(-1e300), 1.0);
  }
}

TEST(MarginalTail, MassBetweenConsistent)
{
  for (auto const& law : marginal_corpus())
    for (double a : {0.0, 1.0, 2.5, 10.0})
      for (double b : {1.5, 3.0, 20.0}) {
        if (b > a) {
          EXPECT_NEAR(law.mass_between(a, b), law.tail(a) - law.tail(b), 1e-15) << law.describe();
        }
      }
}

TEST(MarginalMean, Values)
{
  EXPECT_EQ(MarginalLaw::pareto(2.0, 1.0).mean(), ExtendedReal(2.0));
  EXPECT_EQ(MarginalLaw::degenerate(0.0).mean(), ExtendedReal(0.0));
  EXPECT_NEAR(MarginalLaw::lifted_geometric(0.25).mean().value(), 2.25, 1e-15);
  EXPECT_TRUE(MarginalLaw::pareto(1.0, 1.0).mean().is_infinite());
  EXPECT_TRUE(MarginalLaw::pareto(0.5, 1.0).mean().is_infinite());
  EXPECT_TRUE(MarginalLaw::lifted_geometric(0.5).mean().is_infinite());
  EXPECT_TRUE(MarginalLaw::lifted_geometric(0.6).mean().is_infinite());
  EXPECT_DOUBLE_EQ(MarginalLaw::exponential(4.0).mean().value(), 0.25);
  EXPECT_DOUBLE_EQ(MarginalLaw::lattice({1, 2, 4}, {0.5, 0.25, 0.0}).mean().value(), 0.5 + 0.5 + 1.0);
}

TEST(MarginalMean, LiftedGeometricSeriesOracle)
{
  // E(1+U) * sum_l (1-q) q^l 2^l
  for (double q : {0.1, 0.25, 0.4}) {
    double s = 0.0;
    for (int l = 0; l < 2000; ++l)
      s += (1 - q) * std::pow(2 * q, l);
    EXPECT_NEAR(MarginalLaw::lifted_geometric(q).mean().value(), 1.5 * s, 1e-12 * s);
  }
}

TEST(MarginalQuantile, InvertsTailAtContinuityPoints)
{
  std::vector<MarginalLaw> continuous = {MarginalLaw::pareto(2.0, 1.0), MarginalLaw::pareto(0.5, 3.0),
                                         MarginalLaw::exponential(1.0), MarginalLaw::exponential(2.5),
                                         MarginalLaw::lifted_geometric(0.5), MarginalLaw::lifted_geometric(0.25),
                                         MarginalLaw::lifted_geometric(0.6)};
  for (auto const& law : continuous) {
    for (int e = 1; e <= 10; ++e) {
      for (double mant : {1.0, 3.0, 7.0}) {
        double const p = mant * std::pow(10.0, -e);
        if (p >= 1)
          continue;
        double const t = law.tail(law.quantile(p));
        EXPECT_LE(t, p) << law.describe() << " p=" << p;
        EXPECT_GE(t, p - 1e-12) << law.describe() << " p=" << p;
      }
    }
  }
}

TEST(MarginalQuantile, GeneralizedInverseForAtoms)
{
  auto const lat = MarginalLaw::lattice({1.0, 2.0, 4.0}, {0.5, 0.25, 0.0});
  EXPECT_EQ(lat.quantile(0.5), 1.0);
  EXPECT_EQ(lat.quantile(0.3), 2.0);
  EXPECT_EQ(lat.quantile(0.1), 4.0);
  EXPECT_EQ(MarginalLaw::degenerate(5.0).quantile(0.3), 5.0);
}

TEST(MarginalSample, DegenerateIsConstant)
{
  RngStream s(1, 0);
  EXPECT_EQ(MarginalLaw::degenerate(5.0).sample(s, 3), (std::vector<double>{5.0, 5.0, 5.0}));
}

TEST(MarginalSample, ExponentialMean)
{
  RngStream s(42, 0);
  auto const xs = MarginalLaw::exponential(1.0).sample(s, 1000000);
  double mean = 0.0;
  for (double x : xs)
    mean += x;
  mean /= static_cast<double>(xs.size());
  // 3 sigma / sqrt(n) with sigma = 1 is 0.003.
  EXPECT_NEAR(mean, 1.0, 0.004);
}

TEST(MarginalSample, DkwBandEveryFamily)
{
  std::size_t const n = 1000000;
  double const band = dkw_band(n, 0.001);
  std::uint64_t stream = 0;
  for (auto const& law : marginal_corpus()) {
    RngStream s(77, stream++);
    EXPECT_LE(ks_distance(law.sample(s, n), law), band) << law.describe();
  }
}

TEST(MarginalLaw, RejectsBadParameters)
{
  EXPECT_THROW(MarginalLaw::pareto(0.0), std::invalid_argument);
  EXPECT_THROW(MarginalLaw::pareto(1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(MarginalLaw::exponential(-1.0), std::invalid_argument);
  EXPECT_THROW(MarginalLaw::lifted_geometric(1.0), std::invalid_argument);
  EXPECT_THROW(MarginalLaw::lattice({1.0, 0.5}, {0.5, 0.0}), std::invalid_argument);
  EXPECT_THROW(MarginalLaw::lattice({1.0, 2.0}, {0.5, 0.1}), std::invalid_argument);
}

TEST(CountingLaw, Zeta4Pmf)
{
  auto const z = CountingLaw::zeta4();
  EXPECT_NEAR(z.pmf(0), 1.0 / zeta4_constant(), 1e-16);
  EXPECT_NEAR(z.pmf(3), 1.0 / (256.0 * zeta4_constant()), 1e-18);
  EXPECT_NEAR(z.tail(0), 1.0 - z.pmf(0), 1e-15);
}

TEST(CountingLaw, PmfSumsToOneAfterTruncation)
{
  std::vector<CountingLaw> laws = {CountingLaw::poisson(1.0), CountingLaw::poisson(30.0), CountingLaw::zeta4(),
                                   CountingLaw::geometric(0.5), CountingLaw::finite({0.2, 0.3, 0.5})};
  for (auto const& law : laws) {
    auto const n = law.truncation_point(1e-13, 10000000);
    ASSERT_TRUE(n.has_value()) << law.describe();
    double s = 0.0;
    for (std::size_t k = *n + 1; k-- > 0;)
      s += law.pmf(k);
    EXPECT_NEAR(s, 1.0, 1e-12) << law.describe();
    for (std::size_t k = 0; k <= *n; ++k)
      ASSERT_GE(law.pmf(k), 0.0);
  }
}

TEST(CountingLaw, TailMatchesPmfSums)
{
  std::vector<CountingLaw> laws = {CountingLaw::poisson(3.0), CountingLaw::zeta4(), CountingLaw::geometric(0.3)};
  for (auto const& law : laws) {
    double cdf = 0.0;
    for (std::size_t n = 0; n < 30; ++n) {
      cdf += law.pmf(n);
      EXPECT_NEAR(law.tail(n), 1.0 - cdf, 1e-13) << law.describe() << " n=" << n;
    }
  }
}

TEST(CountingLaw, TailRealIsStepExtension)
{
  auto const z = CountingLaw::zeta4();
  EXPECT_EQ(z.tail_real(-0.5), 1.0);
  EXPECT_EQ(z.tail_real(2.7), z.tail(2));
  EXPECT_EQ(z.tail_real(3.0), z.tail(3));
  // Far tail ~ (1/(3 zeta(4))) n^-3.
  double const n = 1e6;
  EXPECT_NEAR(z.tail_real(n) * 3.0 * zeta4_constant() * n * n * n, 1.0, 1e-5);
}

TEST(CountingLaw, RejectsDegenerateAtZero)
{
  EXPECT_THROW(CountingLaw::finite({1.0}), std::invalid_argument);
  EXPECT_THROW(CountingLaw::finite({0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(CountingLaw::point_mass(0), std::invalid_argument);
  EXPECT_THROW(CountingLaw::poisson(0.0), std::invalid_argument);
}

TEST(CountingMoment, Finiteness)
{
  EXPECT_EQ(counting_moment_finite(CountingLaw::zeta4(), 3.0).kind, MomentResult::Kind::infinite);
  EXPECT_EQ(counting_moment_finite(CountingLaw::zeta4(), 3.5).kind, MomentResult::Kind::infinite);
  EXPECT_EQ(counting_moment_finite(CountingLaw::finite({0.5, 0.5}), 17.0).kind, MomentResult::Kind::finite);
  EXPECT_DOUBLE_EQ(counting_moment_finite(CountingLaw::finite({0.5, 0.5}), 17.0).value, 0.5);
  EXPECT_TRUE(counting_moment_finite(CountingLaw::poisson(1.0), 40.0).is_finite());
  EXPECT_EQ(CountingLaw::zeta4().moment_boundary(), ExtendedReal(3.0));
  EXPECT_TRUE(CountingLaw::poisson(2.0).moment_boundary().is_infinite());
}

TEST(CountingMoment, Zeta4SeriesOracle)
{
  for (double r : {1.0, 1.5, 2.0, 2.5}) {
    // Direct sum plus the integral remainder of m^r (m+1)^-4 ~ m^{r-4}.
    double s = 0.0;
    int const m_max = 2000000;
    for (int m = m_max; m >= 1; --m) {
      double const mp = m + 1.0;
      s += std::pow(static_cast<double>(m), r) / (mp * mp * mp * mp);
    }
    double const tail = std::pow(m_max + 0.5, r - 3.0) / (3.0 - r);
    double const oracle = (s + tail) / zeta4_constant();
    auto const got = counting_moment_finite(CountingLaw::zeta4(), r);
    ASSERT_TRUE(got.is_finite());
    double const tol = r > 2.2 ? 1e-7 : 1e-10;
    EXPECT_NEAR(got.value, oracle, tol * oracle) << "r=" << r;
  }
}

TEST(CountingMoment, PoissonClosedForms)
{
  auto const p = CountingLaw::poisson(2.5);
  EXPECT_NEAR(p.moment(1.0).value, 2.5, 1e-12);
  EXPECT_NEAR(p.moment(2.0).value, 2.5 + 2.5 * 2.5, 1e-11);
  auto const g = CountingLaw::geometric(0.5);
  EXPECT_NEAR(g.moment(1.0).value, 1.0, 1e-12);
}

TEST(CountingSample, Zeta4AtomAtZero)
{
  RngStream s(7, 0);
  auto const z = CountingLaw::zeta4();
  std::size_t const n = 1000000;
  auto const xs = z.sample(s, n);
  double const p0 = 1.0 / zeta4_constant();
  double const hits = static_cast<double>(std::count(xs.begin(), xs.end(), std::size_t{0}));
  double const sigma = std::sqrt(p0 * (1 - p0) / static_cast<double>(n));
  EXPECT_NEAR(hits / static_cast<double>(n), p0, 3 * sigma);
}

TEST(CountingSample, DkwBandEveryFamily)
{
  std::vector<CountingLaw> laws = {CountingLaw::poisson(1.0), CountingLaw::zeta4(), CountingLaw::geometric(0.5),
                                   CountingLaw::finite({0.1, 0.6, 0.3})};
  std::size_t const n = 1000000;
  double const band = dkw_band(n, 0.001);
  std::uint64_t stream = 0;
  for (auto const& law : laws) {
    RngStream s(99, stream++);
    auto xs = law.sample(s, n);
    std::vector<std::size_t> counts(64, 0);
    for (auto v : xs)
      if (v < counts.size())
        ++counts[v];
    double cdf_emp = 0.0, d = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      cdf_emp += static_cast<double>(counts[k]) / static_cast<double>(n);
      d = std::max(d, std::abs(cdf_emp - (1.0 - law.tail(k))));
    }
    EXPECT_LE(d, band) << law.describe();
  }
}

TEST(CountingSample, ConditionalDraws)
{
  auto const z = CountingLaw::zeta4();
  RngStream s(3, 0);
  std::size_t const n = 200000;
  std::size_t at_three = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto const v = z.sample_at_least(s, 3);
    ASSERT_GE(v, 3u);
    at_three += v == 3;
  }
  double const p = z.pmf(3) / z.tail(2);
  double const sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(at_three) / static_cast<double>(n), p, 4 * sigma);
}

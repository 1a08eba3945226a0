#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include "cvtail/compound.hpp"
#include "cvtail/errors.hpp"
#include "cvtail/lattice.hpp"
#include "cvtail/model.hpp"
#include "cvtail/rng.hpp"

using namespace cvtail;

namespace {

double adaptive_simpson(std::function<double(double)> const& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth)
{
  double const m = 0.5 * (a + b);
  double const lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double const flm = f(lm), frm = f(rm);
  double const left = (m - a) / 6 * (fa + 4 * flm + fm);
  double const right = (b - m) / 6 * (fm + 4 * frm + fb);
  double const delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol)
    return left + right + delta / 15;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(std::function<double(double)> const& f, double a, double b, double tol)
{
  double const fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double const whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

// P(X + Y > x), X, Y i.i.d. Pareto(2, 1), x >= 2.
double pareto_pareto_oracle(double x)
{
  auto const f = [x](double y) { return 2.0 / (y * y * y) / ((x - y) * (x - y)); };
  // Split at the midpoint; each half has one steep end.
  double const mid = 0.5 * x;
  double const tol = 1e-18;
  return 1.0 / ((x - 1) * (x - 1)) + integrate(f, 1.0, mid, tol) + integrate(f, mid, x - 1.0, tol);
}

// P(X + E > x), X ~ Pareto(2, 1), E ~ Exponential(1), x >= 1.
double pareto_exp_oracle(double x)
{
  auto const f = [x](double t) { return std::exp(-t) / ((x - t) * (x - t)); };
  return std::exp(-(x - 1.0)) + integrate(f, 0.0, x - 1.0, 1e-16);
}

double erlang_tail(int k, double x)
{
  double term = 1.0, sum = 1.0;
  for (int j = 1; j < k; ++j) {
    term *= x / j;
    sum += term;
  }
  return std::exp(-x) * sum;
}

void expect_contains(LatticeTail const& t, double x, double value, double rel_slack = 0.0)
{
  auto const b = t.at(x);
  EXPECT_LE(b.lower, value * (1 + rel_slack)) << "x=" << x;
  EXPECT_GE(b.upper, value * (1 - rel_slack)) << "x=" << x;
}

} // namespace

TEST(Grid, UniformAndHybridShape)
{
  auto const u = LatticeGrid::uniform(0.25, 10.0);
  EXPECT_TRUE(u.is_uniform());
  EXPECT_EQ(u.size(), 41u);
  EXPECT_DOUBLE_EQ(u.span(), 10.0);
  auto const h = LatticeGrid::hybrid(0.01, 0.01, 1000.0);
  EXPECT_FALSE(h.is_uniform());
  EXPECT_GE(h.span(), 1000.0);
  for (std::size_t i = 101; i < h.size(); ++i) {
    double const rel = (h.point(i) - h.point(i - 1)) / h.point(i - 1);
    ASSERT_LE(rel, 0.01 + 1.0 / static_cast<double>(h.units(i - 1)));
  }
  EXPECT_EQ(h.index_at_or_below(-1.0), -1);
  EXPECT_EQ(h.index_at_or_below(0.015), 1);
}

TEST(Grid, DefaultPolicy)
{
  auto const g = LatticeGrid::default_for(20.0);
  EXPECT_TRUE(g.is_uniform());
  EXPECT_EQ(g.unit(), std::exp2(-13));
  EXPECT_EQ(g.size(), 163841u);
  auto const big = LatticeGrid::default_for(1e5);
  EXPECT_FALSE(big.is_uniform());
  EXPECT_LT(big.size(), 8000u);
}

TEST(Grid, RefinementContainsCoarsePoints)
{
  auto const g = LatticeGrid::hybrid(0.5, 0.1, 50.0);
  auto const r = g.refined();
  EXPECT_EQ(r.size(), 2 * g.size() - 1);
  for (std::size_t i = 0; i < g.size(); ++i)
    EXPECT_EQ(r.point(2 * i), g.point(i));
}

TEST(Discretize, DegenerateStep)
{
  auto const g = LatticeGrid::uniform(1.0, 10.0);
  auto const t = discretize(MarginalLaw::degenerate(5.0), g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double const expected = i < 5 ? 1.0 : 0.0;
    EXPECT_EQ(t.upper()[static_cast<Eigen::Index>(i)], expected) << i;
    EXPECT_EQ(t.lower()[static_cast<Eigen::Index>(i)], expected) << i;
  }
}

TEST(Discretize, ExponentialContainsClosedForm)
{
  auto const g = LatticeGrid::uniform(0.01, 10.0);
  auto const t = discretize(MarginalLaw::exponential(1.0), g);
  expect_contains(t, 1.0, std::exp(-1.0));
  for (std::size_t i = 0; i < g.size(); ++i)
    expect_contains(t, g.point(i), std::exp(-g.point(i)));
}

TEST(Discretize, ParetoWidthBound)
{
  double const step = 0.01;
  auto const g = LatticeGrid::uniform(step, 20.0);
  auto const t = discretize(MarginalLaw::pareto(2.0, 1.0), g);
  auto const b = t.at(10.0);
  EXPECT_TRUE(b.contains(0.01));
  // Density 2 x^-3 is decreasing, so it bounds the slope over [10, 10 + step].
  EXPECT_LE(b.width(), 2 * step * 2.0 / 1000.0);
}

TEST(Discretize, RejectsNegativeSupport)
{
  auto const g = LatticeGrid::uniform(1.0, 10.0);
  EXPECT_THROW(discretize(MarginalLaw::degenerate(-1.0), g), UnsupportedLaw);
}

TEST(Convolve, DegenerateSum)
{
  auto const g = LatticeGrid::uniform(1.0, 10.0);
  auto const s = convolve(discretize(MarginalLaw::degenerate(2.0), g), discretize(MarginalLaw::degenerate(3.0), g));
  auto const five = discretize(MarginalLaw::degenerate(5.0), g);
  // Equal up to the relative rounding pad.
  EXPECT_TRUE(((s.upper() - five.upper()).abs() <= 1e-12).all());
  EXPECT_TRUE(((s.lower() - five.lower()).abs() <= 1e-12).all());
}

TEST(Convolve, DegenerateSumOnHybridGrid)
{
  auto const g = LatticeGrid::hybrid(0.25, 0.05, 100.0);
  auto const s = convolve(discretize(MarginalLaw::degenerate(2.0), g), discretize(MarginalLaw::degenerate(3.0), g),
                          ConvolutionMethod::direct);
  for (std::size_t i = 0; i < g.size(); ++i)
    expect_contains(s, g.point(i), g.point(i) < 5.0 ? 1.0 : 0.0);
}

TEST(Convolve, Erlang2)
{
  auto const g = LatticeGrid::uniform(0.01, 30.0);
  auto const e = discretize(MarginalLaw::exponential(1.0), g);
  for (auto method : {ConvolutionMethod::direct, ConvolutionMethod::fft}) {
    auto const s = convolve(e, e, method);
    expect_contains(s, 2.0, 3.0 * std::exp(-2.0));
    for (std::size_t i = 0; i < g.size(); i += 7)
      expect_contains(s, g.point(i), erlang_tail(2, g.point(i)));
  }
}

TEST(Convolve, ParetoParetoQuadrature)
{
  auto const g = LatticeGrid::default_for(2000.0);
  auto const p = discretize(MarginalLaw::pareto(2.0, 1.0), g);
  auto const s = convolve(p, p);
  for (double x : {10.0, 100.0, 1000.0}) {
    double const oracle = pareto_pareto_oracle(x);
    expect_contains(s, x, oracle);
  }
  double const at_1000 = pareto_pareto_oracle(1000.0);
  EXPECT_GT(at_1000, 1.9e-6);
  EXPECT_LT(at_1000, 2.1e-6);
}

TEST(Convolve, ParetoExponentialQuadrature)
{
  auto const g = LatticeGrid::default_for(2000.0);
  auto const s = convolve(discretize(MarginalLaw::pareto(2.0, 1.0), g), discretize(MarginalLaw::exponential(1.0), g));
  for (double x : {2.0, 10.0, 100.0, 1000.0})
    expect_contains(s, x, pareto_exp_oracle(x));
}

TEST(Convolve, MassConservation)
{
  for (auto const& g : {LatticeGrid::uniform(0.05, 10.0), LatticeGrid::hybrid(0.05, 0.01, 100.0)}) {
    auto const a = discretize(MarginalLaw::pareto(0.5, 1.0), g);
    auto const b = discretize(MarginalLaw::lifted_geometric(0.5), g);
    ConvolutionStats st;
    auto const s = convolve(a, b, ConvolutionMethod::direct, &st);
    EXPECT_NEAR(st.interior_upper + st.overflow_upper, 1.0, 1e-12);
    EXPECT_NEAR(st.interior_lower + st.overflow_lower, 1.0, 1e-12);
    EXPECT_LE(s.upper()[0], 1.0);
    EXPECT_NEAR(s.upper()[s.upper().size() - 1], st.overflow_upper, 1e-12 * st.overflow_upper);
  }
}

TEST(Convolve, FftWithinErrorBoundOfDirect)
{
  auto const g = LatticeGrid::uniform(0.005, 25.0);
  auto const a = discretize(MarginalLaw::lifted_geometric(0.5), g);
  auto const b = discretize(MarginalLaw::exponential(1.0), g);
  ConvolutionStats st;
  auto const d = convolve(a, b, ConvolutionMethod::direct);
  auto const f = convolve(a, b, ConvolutionMethod::fft, &st);
  EXPECT_EQ(st.used, ConvolutionMethod::fft);
  EXPECT_GT(st.fft_error_bound, 0.0);
  double const eps = std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = 0; i < d.upper().size(); ++i) {
    // The fft bracket encloses the direct one up to the direct path's rounding pad.
    double const round = static_cast<double>(d.upper().size() + 68) * eps;
    ASSERT_GE(f.upper()[i], d.upper()[i] - round) << i;
    ASSERT_LE(f.lower()[i], d.lower()[i] + round) << i;
    double const pad = 2.0 * static_cast<double>(i + 1) * st.fft_error_bound + static_cast<double>(i + 3) * eps;
    ASSERT_LE(f.upper()[i] - d.upper()[i], pad + round) << i;
    ASSERT_LE(d.lower()[i] - f.lower()[i], pad + round) << i;
  }
}

TEST(Convolve, RejectsGridMismatch)
{
  auto const a = discretize(MarginalLaw::exponential(1.0), LatticeGrid::uniform(0.1, 10.0));
  auto const b = discretize(MarginalLaw::exponential(1.0), LatticeGrid::uniform(0.2, 10.0));
  EXPECT_THROW(convolve(a, b), std::invalid_argument);
  auto const h = discretize(MarginalLaw::exponential(1.0), LatticeGrid::hybrid(0.1, 0.1, 10.0));
  EXPECT_THROW(convolve(h, h, ConvolutionMethod::fft), std::invalid_argument);
}

TEST(Convolve, RefinementNeverWidens)
{
  auto const coarse = LatticeGrid::hybrid(0.125, 0.02, 200.0);
  auto const fine = coarse.refined();
  auto const law_a = MarginalLaw::pareto(2.0, 1.0);
  auto const law_b = MarginalLaw::exponential(1.0);
  auto const sc = convolve(discretize(law_a, coarse), discretize(law_b, coarse), ConvolutionMethod::direct);
  auto const sf = convolve(discretize(law_a, fine), discretize(law_b, fine), ConvolutionMethod::direct);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    auto const c = static_cast<Eigen::Index>(i);
    auto const f = static_cast<Eigen::Index>(2 * i);
    // Slack covers the outward rounding pads, which scale with m.
    ASSERT_LE(sf.upper()[f], sc.upper()[c] * (1 + 1e-12) + 1e-300) << i;
    ASSERT_GE(sf.lower()[f], sc.lower()[c] * (1 - 1e-12)) << i;
  }
}

TEST(NFold, OneIsDiscretize)
{
  auto const g = LatticeGrid::hybrid(0.05, 0.01, 100.0);
  auto const model = example2_model();
  auto const t = n_fold_tail(model, 1, g);
  auto const d = discretize(MarginalLaw::pareto(2.0, 1.0), g);
  EXPECT_TRUE((t.upper() == d.upper()).all());
  EXPECT_TRUE((t.lower() == d.lower()).all());
}

TEST(NFold, Example2TwoSummands)
{
  auto const g = LatticeGrid::default_for(200.0);
  auto const t = n_fold_tail(example2_model(), 2, g);
  expect_contains(t, 10.0, pareto_exp_oracle(10.0));
}

TEST(NFold, Erlang5)
{
  auto const g = LatticeGrid::uniform(0.01, 40.0);
  auto const model = ModelSpec::iid(MarginalLaw::exponential(1.0), CountingLaw::poisson(1.0));
  auto const t = n_fold_tail(model, 5, g);
  expect_contains(t, 5.0, erlang_tail(5, 5.0));
  for (std::size_t i = 0; i < g.size(); i += 13)
    expect_contains(t, g.point(i), erlang_tail(5, g.point(i)));
}

TEST(NFold, PoweringMatchesSequential)
{
  auto const g = LatticeGrid::hybrid(0.05, 0.02, 300.0);
  auto const model = example1_model();
  auto const seq = partial_sum_tails(model, 11, g, ConvolutionMethod::direct);
  auto const pw = n_fold_tail(model, 11, g, ConvolutionMethod::direct);
  for (std::size_t i = 0; i < g.size(); i += 5) {
    double const x = g.point(i);
    // Both are valid brackets of the same tail, so they must overlap.
    EXPECT_LE(std::max(seq.back().lower_at(x), pw.lower_at(x)),
              std::min(seq.back().upper_at(x), pw.upper_at(x)) * (1 + 1e-12) + 1e-300)
      << x;
  }
}

TEST(Lemma1, TwoParetoSummandsAsymptotics)
{
  auto const g = LatticeGrid::default_for(1e4);
  auto const p = discretize(MarginalLaw::pareto(2.0, 1.0), g);
  auto const s = convolve(p, p, ConvolutionMethod::direct);
  auto const ratio = [&](double x) {
    double const ref = 2.0 / (x * x);
    return Bracket{s.lower_at(x) / ref, s.upper_at(x) / ref};
  };
  auto const at = ratio(1000.0);
  EXPECT_GE(at.lower, 0.95);
  EXPECT_LE(at.upper, 1.10);
  // Decreasing toward 1 over the last decade, beyond the bracket width.
  EXPECT_GT(ratio(100.0).lower, ratio(1000.0).upper);
  for (double x : {100.0, 1000.0}) {
    double const oracle = pareto_pareto_oracle(x) / (2.0 / (x * x));
    EXPECT_TRUE(ratio(x).contains(oracle)) << x;
  }
}

TEST(Lemma2, ParetoPlusExponentialOverPareto)
{
  auto const g = LatticeGrid::default_for(1e4);
  auto const s = convolve(discretize(MarginalLaw::pareto(2.0, 1.0), g), discretize(MarginalLaw::exponential(1.0), g),
                          ConvolutionMethod::direct);
  double const x = 1000.0;
  double const ref = 1.0 / (x * x);
  EXPECT_GE(s.lower_at(x) / ref, 0.95);
  EXPECT_LE(s.upper_at(x) / ref, 1.05);
}

TEST(Inequality2, RatioOfSumsBoundedByMaxRatio)
{
  RngStream s(2, 0);
  for (int trial = 0; trial < 20000; ++trial) {
    int const m = 1 + static_cast<int>(s.next_u64() % 20);
    double sa = 0, sb = 0, mx = 0;
    for (int i = 0; i < m; ++i) {
      // Magnitudes spread over many decades.
      double const a = std::exp(60.0 * (s.uniform() - 0.5));
      double const b = std::exp(60.0 * (s.uniform() - 0.5));
      sa += a;
      sb += b;
      mx = std::max(mx, a / b);
    }
    ASSERT_LE(sa / sb, mx * (1 + 1e-14));
  }
}

TEST(Compound, PointMassCountingIsMarginal)
{
  auto const g = LatticeGrid::hybrid(0.05, 0.02, 100.0);
  ModelSpec const model = ModelSpec::iid(MarginalLaw::pareto(2.0, 1.0), CountingLaw::point_mass(1));
  auto const c = compound_tail(model, g, 1e-12);
  auto const d = discretize(MarginalLaw::pareto(2.0, 1.0), g);
  EXPECT_TRUE(((c.tail.upper() - d.upper()).abs() <= 1e-13 * d.upper()).all());
  EXPECT_TRUE(((c.tail.lower() - d.lower()).abs() <= 1e-13 * d.lower()).all());
  EXPECT_EQ(c.certificate.remainder, 0.0);
}

TEST(Compound, GeometricExponentialClosedForm)
{
  double const q = 0.5;
  auto const model = geometric_exponential_model(q);
  for (auto const& g : {LatticeGrid::uniform(1.0 / 64, 20.0), LatticeGrid::uniform(1.0 / 512, 20.0)}) {
    auto const c = compound_tail(model, g, 1e-12);
    expect_contains(c.tail, 2.0, 0.5 * std::exp(-1.0));
    for (std::size_t i = 0; i < g.size(); ++i) {
      double const x = g.point(i);
      double const exact = x == 0 ? q : q * std::exp(-(1 - q) * x);
      ASSERT_TRUE(c.tail.at(x).contains(exact)) << g.describe() << " x=" << x << " [" << c.tail.at(x).lower << ", "
                                                 << c.tail.at(x).upper << "] exact " << exact;
    }
  }
}

TEST(Compound, GeometricExponentialHybridGrid)
{
  auto const model = geometric_exponential_model(0.5);
  auto const g = LatticeGrid::hybrid(1.0 / 64, 0.01, 60.0);
  auto const c = compound_tail(model, g, 1e-12);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double const x = g.point(i);
    ASSERT_TRUE(c.tail.at(x).contains(0.5 * std::exp(-0.5 * x))) << x;
  }
}

TEST(Compound, TruncationCertificate)
{
  auto const model = geometric_exponential_model(0.5);
  auto const g = LatticeGrid::uniform(1.0 / 32, 20.0);
  double const eps = 1e-6;
  for (bool blocked : {false, true}) {
    CompoundOptions opt;
    opt.blocked = blocked;
    auto const c = compound_tail(model, g, eps, opt);
    EXPECT_LE(c.certificate.tail_mass, eps);
    EXPECT_GT(c.certificate.n_exact, 0u);
    opt.forced_n = 2 * c.certificate.n_exact;
    auto const d = compound_tail(model, g, eps, opt);
    double const moved = (c.tail.upper() - d.tail.upper()).abs().maxCoeff();
    EXPECT_LT(moved, c.certificate.tail_mass) << "blocked=" << blocked;
    EXPECT_LT(moved, eps);
  }
}

TEST(Compound, TruncationUnreachable)
{
  auto const g = LatticeGrid::uniform(0.5, 10.0);
  auto const model = ModelSpec::iid(MarginalLaw::exponential(1.0), CountingLaw::zeta4());
  CompoundOptions opt;
  opt.n_cap = 100;
  EXPECT_THROW(compound_tail(model, g, 1e-12, opt), TruncationUnreachable);
}

TEST(Compound, RejectsNonPositiveEps)
{
  auto const g = LatticeGrid::uniform(0.5, 10.0);
  EXPECT_THROW(compound_tail(geometric_exponential_model(), g, 0.0), std::invalid_argument);
}

TEST(Serialization, CsvHeaderAndRows)
{
  auto const g = LatticeGrid::uniform(0.5, 2.0);
  auto const t = discretize(MarginalLaw::exponential(1.0), g);
  std::ostringstream os;
  write_csv(os, t, {"model hash 1"});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "# model hash 1");
  std::getline(is, line);
  EXPECT_EQ(line, "x,lower,upper");
  int rows = 0;
  while (std::getline(is, line)) {
    double x, lo, up;
    char c1, c2;
    std::istringstream row(line);
    row >> x >> c1 >> lo >> c2 >> up;
    EXPECT_EQ(x, g.point(static_cast<std::size_t>(rows)));
    EXPECT_EQ(up, t.upper()[rows]);
    EXPECT_EQ(lo, t.lower()[rows]);
    ++rows;
  }
  EXPECT_EQ(rows, static_cast<int>(g.size()));
}

TEST(Serialization, BinaryRoundTrip)
{
  auto const g = LatticeGrid::hybrid(0.05, 0.02, 100.0);
  auto const t = discretize(MarginalLaw::pareto(2.0, 1.0), g);
  LatticeCacheKey key{example2_model().hash(), 0.05, 100.0, g.fingerprint(), 1e-12};
  auto const dir = std::filesystem::temp_directory_path() / "cvtail-test-cache";
  std::filesystem::create_directories(dir);
  auto const path = (dir / cache_file_name(key)).string();
  save_binary(path, t, key);
  auto const back = load_binary(path, key);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->grid(), g);
  EXPECT_TRUE((back->upper() == t.upper()).all());
  EXPECT_TRUE((back->lower() == t.lower()).all());

  LatticeCacheKey other = key;
  other.eps_trunc = 1e-10;
  EXPECT_FALSE(load_binary(path, other).has_value());
  EXPECT_NE(cache_file_name(other), cache_file_name(key));
  EXPECT_FALSE(load_binary((dir / "missing.bin").string(), key).has_value());
  std::filesystem::remove_all(dir);
}

TEST(Model, ExampleRules)
{
  auto const m2 = example2_model();
  EXPECT_EQ(m2.period(), 2u);
  EXPECT_EQ(m2.marginal(1), MarginalLaw::pareto(2.0, 1.0));
  EXPECT_EQ(m2.marginal(2), MarginalLaw::exponential(1.0));
  EXPECT_EQ(m2.marginal(7), MarginalLaw::pareto(2.0, 1.0));
  EXPECT_FALSE(m2.is_iid());
  EXPECT_TRUE(geometric_exponential_model().is_iid());
  EXPECT_NE(m2.hash(), example1_model().hash());
  auto const counts = m2.law_counts(5);
  EXPECT_EQ(counts[m2.entry_index(1)], 3u);
  EXPECT_EQ(counts[m2.entry_index(2)], 2u);
}

TEST(Model, IndexSelectorsAndTotality)
{
  std::vector<RuleEntry> rule = {{Selector::at(1), MarginalLaw::exponential(2.0)},
                                 {Selector::odd(), MarginalLaw::pareto(2.0)},
                                 {Selector::even(), MarginalLaw::exponential(1.0)}};
  ModelSpec const m(rule, CountingLaw::poisson(1.0));
  EXPECT_EQ(m.head_length(), 1u);
  EXPECT_EQ(m.marginal(1), MarginalLaw::exponential(2.0));
  EXPECT_EQ(m.marginal(3), MarginalLaw::pareto(2.0));
  EXPECT_EQ(m.reachable_entries(2).size(), 2u);

  std::vector<RuleEntry> partial = {{Selector::odd(), MarginalLaw::pareto(2.0)}};
  EXPECT_THROW(ModelSpec(partial, CountingLaw::poisson(1.0)), ConfigError);
}

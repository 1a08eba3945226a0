#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cvtail/compound.hpp"
#include "cvtail/errors.hpp"
#include "cvtail/tail_classes.hpp"

using namespace cvtail;

namespace {

TailHandle pareto(double alpha, double scale = 1.0)
{
  return TailHandle::from_law(MarginalLaw::pareto(alpha, scale));
}

TailHandle expo(double rate = 1.0)
{
  return TailHandle::from_law(MarginalLaw::exponential(rate));
}

} // namespace

TEST(RatioCurve, ParetoConstant)
{
  auto const d = ratio_curve(pareto(2.0), 0.5, GeometricGrid::between(2.0, 1e6));
  for (std::size_t i = 0; i < d.xs.size(); ++i)
    EXPECT_NEAR(d.ratio_hi[i], 4.0, 1e-12);
  EXPECT_EQ(d.trend, Trend::flat);
  EXPECT_NEAR(d.window_sup, 4.0, 1e-12);
}

TEST(RatioCurve, IdentityAtYOne)
{
  for (auto const& law : builtin_corpus()) {
    auto const h = TailHandle::from_law(law);
    auto const d = ratio_curve(h, 1.0, GeometricGrid::between(1.0, 1e4));
    for (std::size_t i = 0; i < d.xs.size(); ++i) {
      ASSERT_EQ(d.ratio_hi[i], 1.0);
      ASSERT_EQ(d.ratio_lo[i], 1.0);
    }
  }
}

TEST(RatioCurve, ExponentialDiverges)
{
  auto const d = ratio_curve(expo(), 0.5, GeometricGrid::between(1.0, 20.0));
  EXPECT_NEAR(d.ratio_hi.back(), std::exp(10.0), 1e-9 * std::exp(10.0));
  EXPECT_EQ(d.trend, Trend::diverging);
}

TEST(RatioCurve, MonotoneInY)
{
  auto const grid = GeometricGrid::between(1.0, 1e5);
  for (auto const& law : builtin_corpus()) {
    auto const h = TailHandle::from_law(law);
    std::vector<double> ys = {0.5, 0.8, 0.9, 0.99, 1.0};
    for (std::size_t k = 1; k < ys.size(); ++k) {
      RatioDiagnostic a, b;
      try {
        a = ratio_curve(h, ys[k - 1], grid);
        b = ratio_curve(h, ys[k], grid);
      }
      catch (DomainError const&) {
        continue; // bounded laws leave too few points
      }
      std::size_t const n = std::min(a.xs.size(), b.xs.size());
      for (std::size_t i = 0; i < n; ++i)
        ASSERT_GE(a.ratio_lo[i], b.ratio_hi[i] * (1 - 1e-12)) << law.describe();
    }
  }
}

TEST(RatioCurve, RatiosAtLeastOneAndWindowSupBound)
{
  auto const grid = GeometricGrid::between(1.0, 1e6);
  for (auto const& law : builtin_corpus()) {
    RatioDiagnostic d;
    try {
      d = ratio_curve(TailHandle::from_law(law), 0.9, grid);
    }
    catch (DomainError const&) {
      continue;
    }
    for (double r : d.ratio_lo)
      ASSERT_GE(r, 1.0 - 1e-9) << law.describe();
    double const last_max = *std::max_element(d.ratio_hi.end() - 5, d.ratio_hi.end());
    EXPECT_GE(d.window_sup, last_max);
  }
}

TEST(RatioCurve, UnderflowTruncatesAndFlags)
{
  auto const d = ratio_curve(expo(), 0.9, GeometricGrid::between(1.0, 2000.0));
  EXPECT_TRUE(d.truncated);
  EXPECT_LT(d.xs.back(), 800.0);
  EXPECT_THROW(ratio_curve(TailHandle::from_law(MarginalLaw::degenerate(0.0)), 0.5, GeometricGrid::between(1, 10)),
               DomainError);
}

TEST(CIndex, ParetoFamily)
{
  auto const grid = GeometricGrid::between(1e2, 1e8);
  for (double alpha : {0.5, 1.0, 2.0, 4.0}) {
    auto const c = c_index(pareto(alpha), default_c_grid(), grid);
    EXPECT_GE(c.estimate, 1.0);
    EXPECT_LE(c.estimate, 1.02) << alpha;
    EXPECT_EQ(c.verdict.outcome, Outcome::pass);
    auto const j = matuszewska_upper(pareto(alpha), default_j_grid(), grid);
    EXPECT_NEAR(j.estimate, alpha, 0.1);
    EXPECT_TRUE(j.in_d);
  }
}

TEST(CIndex, ExponentialFails)
{
  auto const h = expo();
  auto const c = c_index(h, default_c_grid(), default_ratio_grid(h));
  EXPECT_EQ(c.verdict.outcome, Outcome::fail);
}

TEST(CIndex, RejectsBadYGrid)
{
  EXPECT_THROW(c_index(pareto(2), {0.9, 0.95, 0.99}, GeometricGrid::between(1, 100)), std::invalid_argument);
  EXPECT_THROW(c_index(pareto(2), {0.5, 0.9, 0.95, 0.99}, GeometricGrid::between(1, 100)), std::invalid_argument);
}

TEST(Matuszewska, ParetoHalf)
{
  auto const j = matuszewska_upper(pareto(0.5), default_j_grid(), GeometricGrid::between(1e2, 1e8));
  EXPECT_NEAR(j.estimate, 0.5, 0.05);
}

TEST(Matuszewska, ExponentialNotInD)
{
  auto const h = expo();
  auto const j = matuszewska_upper(h, default_j_grid(), default_ratio_grid(h));
  EXPECT_FALSE(j.in_d);
  EXPECT_TRUE(std::isinf(j.estimate));
  EXPECT_LT(j.liminf[2], 1e-12); // y = 8
}

TEST(Heavy, Verdicts)
{
  for (auto const& [law, expected] :
       std::vector<std::pair<MarginalLaw, Outcome>>{{MarginalLaw::pareto(2, 1), Outcome::pass},
                                                    {MarginalLaw::exponential(1), Outcome::fail},
                                                    {MarginalLaw::lifted_geometric(0.5), Outcome::pass}}) {
    auto const h = TailHandle::from_law(law);
    auto const v = is_heavy(h, default_delta_grid(), default_ratio_grid(h));
    EXPECT_EQ(v.outcome, expected) << law.describe();
    EXPECT_FALSE(v.evidence.empty());
  }
}

TEST(Long, Verdicts)
{
  for (auto const& [law, expected] :
       std::vector<std::pair<MarginalLaw, Outcome>>{{MarginalLaw::pareto(2, 1), Outcome::pass},
                                                    {MarginalLaw::exponential(1), Outcome::fail},
                                                    {MarginalLaw::degenerate(5), Outcome::fail}}) {
    auto const h = TailHandle::from_law(law);
    auto const v = is_long(h, default_ratio_grid(h));
    EXPECT_EQ(v.outcome, expected) << law.describe();
  }
  auto const h = expo();
  auto const v = is_long(h, default_ratio_grid(h));
  EXPECT_NEAR(v.evidence[0].window_inf, 1.0 - std::exp(-1.0), 1e-9);
}

TEST(Regular, ParetoIndexAndLiftedGeometricOscillation)
{
  auto const p = pareto(2.0);
  auto const v = is_regular(p, default_ratio_grid(p));
  EXPECT_EQ(v.outcome, Outcome::pass);
  EXPECT_NEAR(*v.estimate, 2.0, 1e-9);
  auto const lg = TailHandle::from_law(MarginalLaw::lifted_geometric(0.5));
  EXPECT_EQ(is_regular(lg, default_ratio_grid(lg)).outcome, Outcome::fail);
}

TEST(LittleO, Verdicts)
{
  auto const grid = default_ratio_grid(pareto(2.0));
  EXPECT_EQ(little_o(expo(), pareto(2.0), grid).outcome, Outcome::pass);
  EXPECT_EQ(little_o(pareto(2.0), pareto(2.0), grid).outcome, Outcome::fail);
  EXPECT_EQ(little_o(pareto(3.0), pareto(2.0), grid).outcome, Outcome::pass);
  EXPECT_EQ(little_o(pareto(2.0), pareto(3.0), grid).outcome, Outcome::fail);
}

TEST(S2Fold, ParetoPassesExponentialFails)
{
  auto const p = s2fold(pareto(2.0), 1e2, 1e4);
  EXPECT_EQ(p.outcome, Outcome::pass);
  EXPECT_NEAR(*p.estimate, 2.0, 0.05);
  auto const e = s2fold(expo(), 1e2, 1e4);
  EXPECT_EQ(e.outcome, Outcome::fail);
}

TEST(Audit, ChainExamples)
{
  std::map<ClassId, ClassVerdict> ok;
  for (auto id : {ClassId::R, ClassId::C, ClassId::L, ClassId::D, ClassId::H}) {
    ClassVerdict v;
    v.class_id = id;
    v.outcome = Outcome::pass;
    ok[id] = v;
  }
  EXPECT_TRUE(inclusion_audit(ok).empty());

  std::map<ClassId, ClassVerdict> bad;
  bad[ClassId::C].outcome = Outcome::pass;
  bad[ClassId::D].outcome = Outcome::fail;
  auto const viol = inclusion_audit(bad);
  ASSERT_EQ(viol.size(), 1u);
  EXPECT_EQ(viol[0].sub, ClassId::C);
  EXPECT_EQ(viol[0].super, ClassId::D);

  std::map<ClassId, ClassVerdict> inc;
  inc[ClassId::C].outcome = Outcome::pass;
  inc[ClassId::D].outcome = Outcome::inconclusive;
  EXPECT_TRUE(inclusion_audit(inc).empty());
}

TEST(Audit, CorpusHasNoViolations)
{
  for (auto const& law : builtin_corpus()) {
    auto const rep = classify(TailHandle::from_law(law));
    EXPECT_TRUE(inclusion_audit(rep.verdicts).empty()) << law.describe();
    for (auto const& [id, v] : rep.verdicts)
      EXPECT_FALSE(v.evidence.empty()) << law.describe() << " " << to_string(id);
  }
}

TEST(Classify, ExponentialFailsEveryHeavyClass)
{
  auto const rep = classify(expo());
  for (auto id : {ClassId::H, ClassId::L, ClassId::D, ClassId::C, ClassId::S2fold})
    EXPECT_EQ(rep.verdicts.at(id).outcome, Outcome::fail) << to_string(id);
}

TEST(Classify, LatticeHandleMatchesLaw)
{
  auto const grid = LatticeGrid::default_for(1e5);
  auto const h = TailHandle::from_lattice(discretize(MarginalLaw::pareto(2.0, 1.0), grid));
  auto const g = GeometricGrid::between(1e2, 1e5);
  auto const c = c_index(h, default_c_grid(), g);
  EXPECT_EQ(c.verdict.outcome, Outcome::pass);
  EXPECT_LE(c.estimate, 1.05);
  auto const j = matuszewska_upper(h, default_j_grid(), g);
  EXPECT_NEAR(j.estimate, 2.0, 0.1);
}

TEST(Csv, RatioColumns)
{
  auto const d = ratio_curve(pareto(2.0), 0.5, GeometricGrid::between(2.0, 4.0, 1.5));
  std::ostringstream os;
  write_ratio_csv(os, {d}, {"pareto"});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "# pareto");
  std::getline(is, line);
  EXPECT_EQ(line, "x,y,ratio,ratio_lo,ratio_hi");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 6), "2,0.5,");
}

#include <datashare/scoring.hpp>

#include <gtest/gtest.h>

using namespace datashare;

namespace {

WeightedVirtual uniform_revenue()
{
  return {TypeDistribution::uniform(), WelfareWeight(0.0, 0.0, 1.0)};
}

double critical_type_oracle(ScoringRule const &r, int panels = 200000)
{
  // Midpoint rule on E[score - w - v*theta] / r, independent of the library quadrature.
  auto const &eta = r.weights();
  double s = 0.0;
  for (int k = 0; k < panels; ++k)
  {
    double const t = (k + 0.5) / panels;
    s += (r.score_times_density(t) - (eta.clicks + eta.value * t) * r.dist().pdf(t)) / panels;
  }
  return s / eta.revenue;
}

}  // namespace

TEST(ScoringRule, UniformHalfLevel)
{
  ScoringRule const r(uniform_revenue(), 0.5);
  EXPECT_NEAR(r.score(0.1), 0.2, 1e-12);
  EXPECT_NEAR(r.score(0.5), 0.5, 1e-12);
  EXPECT_NEAR(r.score(0.9), 0.8, 1e-12);
  auto const [lo, hi] = r.tie_interval();
  EXPECT_NEAR(lo, 0.25, 1e-9);
  EXPECT_NEAR(hi, 0.75, 1e-9);
  EXPECT_NEAR(r.critical_type(), 0.5, 1e-9);
  auto const p = band_probabilities(r.virtuals(), 0.5);
  EXPECT_NEAR(p.below, 0.25, 1e-9);
  EXPECT_NEAR(p.at_most, 0.75, 1e-9);
}

TEST(ScoringRule, UniformOtherLevels)
{
  EXPECT_NEAR(ScoringRule(uniform_revenue(), 0.0).critical_type(), 0.25, 1e-9);
  auto const [lo, hi] = ScoringRule(uniform_revenue(), 0.25).tie_interval();
  EXPECT_NEAR(lo, 0.125, 1e-9);
  EXPECT_NEAR(hi, 0.625, 1e-9);
  auto const top = ScoringRule(uniform_revenue(), 2.0).tie_interval();
  EXPECT_EQ(top.first, 1.0);
  EXPECT_EQ(top.second, 1.0);
  EXPECT_NEAR(ScoringRule(uniform_revenue(), 2.0).critical_type(), 1.0, 1e-9);
}

TEST(ScoringRule, RejectsLevelOutsideBracket)
{
  EXPECT_THROW(ScoringRule(uniform_revenue(), -0.1), std::invalid_argument);
  EXPECT_THROW(ScoringRule(uniform_revenue(), 2.1), std::invalid_argument);
  // With a large click weight the bracket starts above zero.
  WeightedVirtual const wv(TypeDistribution::uniform(), WelfareWeight(0.0, 0.6, 0.4));
  EXPECT_NEAR(ironing_bracket(wv).first, 0.2, 1e-12);
  EXPECT_THROW(ScoringRule(wv, 0.1), std::invalid_argument);
}

TEST(ScoringRule, BandProbabilitiesAndCriticalTypeMonotone)
{
  for (auto const &F : {TypeDistribution::uniform(), TypeDistribution(Law::beta(2.0, 3.0))})
  {
    WeightedVirtual const wv(F, WelfareWeight(0.2, 0.1, 0.7));
    auto const [zlo, zhi] = ironing_bracket(wv);
    double const top = std::isfinite(zhi) ? zhi : 3.0;
    double prev = -1.0;
    for (int k = 0; k <= 40; ++k)
    {
      double const z = zlo + (top - zlo) * k / 40.0;
      ScoringRule const r(wv, z);
      auto const p = band_probabilities(wv, z);
      if (k > 0 && k < 40 && z < wv.upper(Side::buying))
      {
        EXPECT_GT(p.tie(), 0.0) << "z=" << z;
      }
      double const c = r.critical_type();
      EXPECT_GE(c, prev - 1e-9);
      prev = c;
    }
  }
}

TEST(ScoringRule, CriticalTypeMatchesMidpointOracle)
{
  TypeDistribution const F(Law::beta(2.0, 3.0));
  WeightedVirtual const wv(F, WelfareWeight(0.3, 0.0, 0.7));
  for (double z : {0.0, 0.2, 0.5, 0.9})
  {
    ScoringRule const r(wv, z);
    EXPECT_NEAR(r.critical_type(), critical_type_oracle(r), 1e-7) << "z=" << z;
  }
}

TEST(ScoringRule, ScoreIsNondecreasingAndNonnegative)
{
  WeightedVirtual const wv(TypeDistribution(Law::beta(2.0, 2.0)), WelfareWeight(0.0, 0.0, 1.0));
  ScoringRule const r(wv, 0.4);
  double prev = -1.0;
  for (int k = 0; k <= 1000; ++k)
  {
    double const s = r.score(k / 1000.0);
    EXPECT_GE(s, 0.0);
    EXPECT_GE(s, prev);
    prev = s;
  }
}

TEST(ScoringRule, ProbBelowMatchesEmpiricalFrequency)
{
  ScoringRule const r(uniform_revenue(), 0.5);
  for (double y : {0.1, 0.5, 0.6, 0.9})
  {
    int below = 0;
    int const n = 100000;
    for (int k = 0; k < n; ++k)
    {
      below += r.score((k + 0.5) / n) < y ? 1 : 0;
    }
    EXPECT_NEAR(r.prob_below(y), static_cast<double>(below) / n, 1e-4) << "y=" << y;
  }
}

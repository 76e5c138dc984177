#include <datashare/largemarket.hpp>

#include <gtest/gtest.h>

using namespace datashare;

namespace {

LargeMarketConfig uniform_config(double eta_r, double mu)
{
  LargeMarketConfig cfg;
  cfg.eta      = WelfareWeight(1.0 - eta_r, 0.0, eta_r);
  cfg.mean_ctr = mu;
  return cfg;
}

// Uniform types with no engagement weight: posted price 1/(1+r) and the explicit ratio.
double uniform_ratio(double mu, double r)
{
  double const p = 1.0 / (1.0 + r);
  double const v = mu * p * p / 2.0;
  double const rev = (1.0 - p * mu) * p + (1.0 - mu) * (1.0 - p);
  return ((1.0 - r) * v + r * rev) / (1.0 - mu / 2.0);
}

}  // namespace

TEST(LargeMarket, SellPriceUniform)
{
  for (double r : {1e-3, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0})
  {
    EXPECT_NEAR(design(uniform_config(r, 0.5)).sell_price, 1.0 / (1.0 + r), 1e-10) << r;
  }
}

TEST(LargeMarket, BidAskPriceUniform)
{
  auto const d = design(uniform_config(1.0, 1.0));
  EXPECT_NEAR(d.bid_ask_price, 0.5, 1e-10);
  EXPECT_NEAR(d.sell_price, 0.5, 1e-10);
  // Weighted marginal cost (1+r) theta equals 1/mu.
  for (double r : {0.3, 1.0})
  {
    for (double mu : {0.2, 0.6, 0.9})
    {
      auto const dd = design(uniform_config(r, mu));
      double const expect = 1.0 / (mu * (1.0 + r));
      if (expect > 1.0)
      {
        EXPECT_TRUE(dd.bid_ask_saturated);
        EXPECT_EQ(dd.bid_ask_price, 1.0);
      }
      else
      {
        EXPECT_NEAR(dd.bid_ask_price, expect, 1e-10);
      }
    }
  }
  EXPECT_FALSE(design(uniform_config(1.0, 0.0)).bid_ask_defined);
}

TEST(LargeMarket, SellPriceNeverAboveBidAsk)
{
  for (auto law : {Law::uniform(0.0, 1.0), Law::beta(2.0, 2.0), Law::beta(1.0, 3.0)})
  {
    for (double r : {0.1, 0.5, 1.0})
    {
      for (int k = 1; k <= 20; ++k)
      {
        LargeMarketConfig cfg;
        cfg.dist     = TypeDistribution(law);
        cfg.eta      = WelfareWeight(1.0 - r, 0.0, r);
        cfg.mean_ctr = k / 20.0;
        auto const d = design(cfg);
        EXPECT_LE(d.sell_price, d.bid_ask_price + 1e-12);
        if (k == 20)
        {
          EXPECT_NEAR(d.sell_price, d.bid_ask_price, 1e-10);
        }
        else if (!d.bid_ask_saturated)
        {
          EXPECT_LT(d.sell_price, d.bid_ask_price);
        }
      }
    }
  }
}

TEST(LargeMarket, ProfitFormulas)
{
  auto const cfg = uniform_config(1.0, 0.0);
  double const p = design(cfg).sell_price;
  EXPECT_NEAR(selling_profit(cfg, p), 0.5, 1e-12);
  EXPECT_NEAR(exchange_profit(cfg, p), 0.5, 1e-12);
  EXPECT_NEAR(combined_profit(cfg, p), 1.0, 1e-12);
  EXPECT_EQ(exchange_profit(uniform_config(1.0, 1.0), 0.3), 0.0);
}

TEST(LargeMarket, ExchangeMarketWeaklyRaisesProfit)
{
  for (double r : {0.5, 1.0})
  {
    for (int k = 1; k <= 50; ++k)
    {
      auto const cfg = uniform_config(r, k / 50.0);
      auto const d   = design(cfg);
      double const gain = combined_profit(cfg, d.sell_price) - selling_profit(cfg, d.bid_ask_price);
      if (k < 50)
      {
        EXPECT_GT(gain, 0.0) << r << " " << k;
      }
      else
      {
        EXPECT_NEAR(gain, 0.0, 1e-10);
      }
    }
  }
}

TEST(LargeMarket, RatioMatchesUniformClosedForm)
{
  for (double r : {0.01, 0.5, 0.99})
  {
    for (double mu : {0.0, 0.1, 0.5, 0.9, 1.0})
    {
      EXPECT_NEAR(efficiency(uniform_config(r, mu)).ratio, uniform_ratio(mu, r), 1e-10) << r << " " << mu;
    }
  }
}

TEST(LargeMarket, RatioLimitsAndBounds)
{
  EXPECT_GT(efficiency(uniform_config(0.99, 1e-6)).ratio, 0.98);
  EXPECT_NEAR(efficiency(uniform_config(1e-3, 1.0)).ratio, 1.0, 5e-3);
  for (double r : {0.01, 0.25, 0.5, 0.75, 0.99})
  {
    for (int k = 1; k < 20; ++k)
    {
      double const a = efficiency(uniform_config(r, k / 20.0)).ratio;
      EXPECT_LT(a, 1.0);
      EXPECT_GT(a, 0.0);
    }
  }
}

TEST(LargeMarket, RatioComponentsForBetaTypes)
{
  LargeMarketConfig cfg;
  cfg.dist     = TypeDistribution(Law::beta(2.0, 3.0));
  cfg.eta      = WelfareWeight(0.4, 0.1, 0.5);
  cfg.surplus_clicks = 0.2;
  cfg.surplus_value  = 0.8;
  cfg.mean_ctr = 0.6;
  auto const e = efficiency(cfg);
  double const p = design(cfg).sell_price;
  // Midpoint oracle for E[(p - theta)_+].
  double below = 0.0;
  int const n  = 200000;
  for (int k = 0; k < n; ++k)
  {
    double const t = (k + 0.5) / n;
    below += std::max(0.0, p - t) * cfg.dist.pdf(t) / n;
  }
  EXPECT_NEAR(e.value, 0.6 * below, 1e-8);
  EXPECT_NEAR(e.value_max, 1.0 - 0.6 * 0.4, 1e-12);
  EXPECT_NEAR(e.clicks, 0.4, 1e-12);
  double const num = 0.1 * e.clicks + 0.4 * e.value + 0.5 * e.revenue;
  EXPECT_NEAR(e.ratio, num / (0.2 * 0.4 + 0.8 * e.value_max), 1e-12);
}

TEST(LargeMarket, RejectsBadConfig)
{
  EXPECT_THROW(design(uniform_config(1.0, 1.5)), std::invalid_argument);
  EXPECT_THROW(design(uniform_config(1e-4, 0.5)), std::invalid_argument);
  auto cfg = uniform_config(1.0, 0.5);
  cfg.surplus_value = -1.0;
  EXPECT_THROW(efficiency(cfg), std::invalid_argument);
}

TEST(LargeMarket, FiniteMarketsApproachLimit)
{
  WeightedVirtual const wv(TypeDistribution::uniform(), WelfareWeight(0.0, 0.0, 1.0));
  auto const pts = finite_limit(wv, Law::uniform(0.0, 1.0), {10, 100, 1000}, 41);
  double prev_gap  = 1e9;
  double prev_cost = 1e9;
  for (auto const &p : pts)
  {
    // Band types get exactly the outside option.
    double const mid = 0.5 * (p.band_lo + p.band_hi);
    SymmetricModel const m(wv, Law::uniform(0.0, 1.0), p.merchants);
    EXPECT_NEAR(m.scaled_clicks(mid, p.level), 0.5, 1e-6);
    EXPECT_NEAR(p.selling_target, -0.125, 1e-10);
    double const cost = std::abs(p.selling_transfer - p.selling_target);
    EXPECT_LT(cost, prev_cost);
    EXPECT_LT(p.menu_gap, prev_gap);
    EXPECT_LT(p.selling_transfer, 0.0);
    prev_cost = cost;
    prev_gap  = p.menu_gap;
  }
  // Below the band almost no clicks once the market is large.
  EXPECT_LT(pts.back().scaled_clicks[10], 1e-6);
}

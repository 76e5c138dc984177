//------------------------------------------------------------------------------
//
//   Copyright 2026 The datashare Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------
#pragma once

#include "continuum.hpp"

#include <limits>

namespace datashare {

/// Symmetric platform in the many-merchant limit: one type law, one mean click-through rate.
struct LargeMarketConfig
{
  TypeDistribution dist = TypeDistribution::uniform();
  WelfareWeight    eta{0.0, 0.0, 1.0};
  double           surplus_clicks = 0.0;  // weight on engagement in the efficiency benchmark
  double           surplus_value  = 1.0;  // weight on merchant surplus in the efficiency benchmark
  double           mean_ctr       = 0.5;

  void validate() const
  {
    if (!(surplus_clicks >= 0.0) || !(surplus_value >= 0.0) || surplus_clicks + surplus_value <= 0.0)
    {
      throw std::invalid_argument("surplus weights must be nonnegative and not both zero");
    }
    if (!(mean_ctr >= 0.0 && mean_ctr <= 1.0))
    {
      throw std::invalid_argument("mean click-through rate must lie in [0, 1]");
    }
    if (eta.revenue < 1e-3)
    {
      throw std::invalid_argument("revenue weight must be at least 1e-3");
    }
  }
};

/// Posted prices of the selling, exchange and buying markets.
struct ThreeMarketDesign
{
  double sell_price = 0.0;  // per unit of click-through rate
  double buy_price  = 1.0;
  double bid_ask_price = std::numeric_limits<double>::quiet_NaN();  // selling price without an exchange market
  bool   bid_ask_saturated = false;  // the marginal-cost condition has no root; price capped at 1
  bool   bid_ask_defined   = true;   // false when the mean click-through rate is zero
};

inline ThreeMarketDesign design(LargeMarketConfig const &cfg)
{
  cfg.validate();
  WeightedVirtual const wv(cfg.dist, cfg.eta);
  ThreeMarketDesign d;
  d.sell_price = wv.inverse_clamped(1.0, Side::selling);
  if (cfg.mean_ctr <= 0.0)
  {
    d.bid_ask_defined = false;
    return d;
  }
  double const target = 1.0 / cfg.mean_ctr;
  if (target > wv.upper(Side::selling))
  {
    d.bid_ask_price     = 1.0;
    d.bid_ask_saturated = true;
  }
  else
  {
    d.bid_ask_price = wv.inverse_clamped(target, Side::selling);
  }
  return d;
}

/// Profit from buying data at price p and selling ads at price 1.
inline double selling_profit(LargeMarketConfig const &cfg, double p)
{
  return (1.0 - p * cfg.mean_ctr) * cfg.dist.cdf(p);
}

/// Profit from reselling the surplus clicks of merchants who exchange rather than sell.
inline double exchange_profit(LargeMarketConfig const &cfg, double p)
{
  return (1.0 - cfg.mean_ctr) * (1.0 - cfg.dist.cdf(p));
}

inline double combined_profit(LargeMarketConfig const &cfg, double p)
{
  return selling_profit(cfg, p) + exchange_profit(cfg, p);
}

struct EfficiencyReport
{
  double clicks   = 0.0;  // achieved engagement
  double value    = 0.0;  // achieved merchant surplus
  double revenue  = 0.0;
  double clicks_max = 0.0;
  double value_max  = 0.0;
  double design_value   = 0.0;
  double total_surplus  = 0.0;
  double ratio          = 0.0;
};

/// Ratio of the limiting design value to the full-information total surplus.
inline EfficiencyReport efficiency(LargeMarketConfig const &cfg)
{
  cfg.validate();
  double const p  = design(cfg).sell_price;
  double const mu = cfg.mean_ctr;
  Law const &law  = cfg.dist.law();
  EfficiencyReport r;
  r.clicks     = 1.0 - mu;
  r.clicks_max = 1.0 - mu;
  r.value      = mu * (p * law.cdf(p) - law.partial_mean(p));
  r.value_max  = 1.0 - mu * law.mean();
  r.revenue    = combined_profit(cfg, p);
  r.design_value  = cfg.eta.clicks * r.clicks + cfg.eta.value * r.value + cfg.eta.revenue * r.revenue;
  r.total_surplus = cfg.surplus_clicks * r.clicks_max + cfg.surplus_value * r.value_max;
  r.ratio = r.total_surplus > 0.0 ? r.design_value / r.total_surplus : std::numeric_limits<double>::quiet_NaN();
  return r;
}

/// Finite-N diagnostics of the symmetric i.i.d. mechanism against its many-merchant limit.
struct FiniteLimitPoint
{
  std::size_t merchants = 0;
  double level     = 0.0;
  double band_lo   = 0.0;
  double band_hi   = 0.0;
  double step_error = 0.0;          // max over the grid on [0, 1) of |N S(theta) - limit step|
  double step_error_outside = 0.0;  // same, excluding [band_lo, sell_price) and (band_hi, 1)
  double selling_transfer = 0.0;    // expected transfer of types below the sell price
  double selling_target   = 0.0;
  double menu_gap = 0.0;            // max over grid types of |finite payoff - limit menu payoff|
  std::vector<double> theta;
  std::vector<double> scaled_clicks;
};

inline std::vector<FiniteLimitPoint> finite_limit(WeightedVirtual const &wv, Law const &ctr,
                                                  std::vector<std::size_t> const &sizes, std::size_t grid = 101,
                                                  double menu_cap = 0.95)
{
  double const mu = ctr.mean();
  double const ps = wv.inverse_clamped(1.0, Side::selling);
  auto const &dist = wv.dist();
  std::vector<FiniteLimitPoint> out;
  for (std::size_t N : sizes)
  {
    SymmetricModel const model(wv, ctr, N);
    FiniteLimitPoint pt;
    pt.merchants = N;
    pt.level     = model.solve();
    ScoringRule const rule(wv, pt.level);
    std::tie(pt.band_lo, pt.band_hi) = rule.tie_interval();
    double const crit = rule.critical_type();
    auto h = [&](double t) { return model.scaled_clicks(t, pt.level) - mu; };

    // Payoff scaled by N: outside option plus the envelope integral from the worst-off type,
    // accumulated cell by cell with a low-order rule (h is smooth between the band ends).
    std::vector<double> const cuts{pt.band_lo, pt.band_hi, crit};
    auto integrate = [&](double a, double b) {
      double total = 0.0;
      auto const pts = numerics::segment_points(a, b, cuts);
      for (std::size_t k = 0; k + 1 < pts.size(); ++k)
      {
        total += boost::math::quadrature::gauss<double, 5>::integrate(h, pts[k], pts[k + 1]);
      }
      return total;
    };
    std::vector<double> cumulative(grid, 0.0);

    for (std::size_t k = 0; k < grid; ++k)
    {
      double const t = static_cast<double>(k) / static_cast<double>(grid);
      double const s = model.scaled_clicks(t, pt.level);
      double const e = std::abs(s - (t < ps ? 0.0 : mu));
      pt.theta.push_back(t);
      pt.scaled_clicks.push_back(s);
      pt.step_error = std::max(pt.step_error, e);
      if (!(t >= pt.band_lo && t < ps) && t <= pt.band_hi)
      {
        pt.step_error_outside = std::max(pt.step_error_outside, e);
      }
      if (k > 0)
      {
        cumulative[k] = cumulative[k - 1] + integrate(pt.theta[k - 1], t);
      }
    }
    std::size_t const below = static_cast<std::size_t>(crit * static_cast<double>(grid));
    double const at_crit = cumulative[std::min(below, grid - 1)] + integrate(pt.theta[std::min(below, grid - 1)], crit);
    for (std::size_t k = 0; k < grid && pt.theta[k] <= menu_cap; ++k)
    {
      double const payoff = pt.theta[k] * mu + cumulative[k] - at_crit;
      pt.menu_gap = std::max(pt.menu_gap, std::abs(payoff - mu * std::max(ps, pt.theta[k])));
    }

    // Types below the band have transfer t h(t) + integral of h from t to the band; by Fubini
    // the expectation over those types is the integral of h(s) (s f(s) + F(s)) below the band.
    pt.selling_transfer = numerics::piecewise_gauss(
      [&](double s) { return h(s) * (s * dist.pdf(s) + dist.cdf(s)); }, 0.0, pt.band_lo, dist.kinks());
    pt.selling_target = -ps * mu * dist.cdf(ps);
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace datashare

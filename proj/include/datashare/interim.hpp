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

#include "dist.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace datashare {

/// Inputs needed to turn a merchant's interim click curve into payoffs and transfers.
struct InterimSpec
{
  WeightedVirtual              virtuals{TypeDistribution::uniform(), WelfareWeight{}};
  double                       outside_option = 0.0;
  std::function<double(double)> clicks;
  std::vector<double>          jumps;          // where the click curve may be discontinuous
  double                       critical_type = 0.0;
  double                       attain_tol    = 1e-7;
};

/// One merchant's interim quantities: clicks S, transfers T and payoff U relative to the outside option.
struct MerchantInterim
{
  static constexpr double kQuadTol = 1e-10;

  WeightedVirtual              virtuals{TypeDistribution::uniform(), WelfareWeight{}};
  double                       outside_option = 0.0;
  double                       worst_off      = 0.0;  // representative worst-off type
  double                       worst_off_lo   = 0.0;
  double                       worst_off_hi   = 0.0;
  bool                         attained       = false;  // some type has clicks equal to its outside option
  std::vector<double>          theta;
  std::vector<double>          clicks;
  std::vector<double>          click_se;  // Monte Carlo standard errors, empty otherwise
  std::vector<double>          transfers;
  std::vector<double>          utility;
  std::function<double(double)> click_fn;
  std::vector<double>          jumps;

  double clicks_at(double t) const
  {
    return click_fn(t);
  }

  /// Integral of S - a over [lo, hi] (signed).
  double net_clicks_integral(double lo, double hi) const
  {
    double const sign = hi >= lo ? 1.0 : -1.0;
    if (hi < lo)
    {
      std::swap(lo, hi);
    }
    double const a = outside_option;
    auto f = [this, a](double t) { return click_fn(t) - a; };
    return sign * numerics::piecewise_simpson(f, lo, hi, jumps, kQuadTol);
  }

  double utility_at(double t) const
  {
    return net_clicks_integral(worst_off, t);
  }

  double transfer_at(double t) const
  {
    return t * (clicks_at(t) - outside_option) - utility_at(t);
  }

  /// Expectation of g(t) * (S(t) - a) under the type distribution.
  template <typename G>
  double expect_net(G &&g, double extra_cut = -1.0) const
  {
    auto const &F = virtuals.dist();
    double const a = outside_option;
    auto cuts = jumps;
    auto k    = F.kinks();
    cuts.insert(cuts.end(), k.begin(), k.end());
    cuts.push_back(worst_off);
    cuts.push_back(extra_cut);
    auto f = [&](double t) { return g(t) * (click_fn(t) - a); };
    return numerics::piecewise_simpson(f, 0.0, 1.0, cuts, kQuadTol);
  }
};

inline MerchantInterim build_interim(InterimSpec const &spec, std::vector<double> const &grid)
{
  MerchantInterim m;
  m.virtuals       = spec.virtuals;
  m.outside_option = spec.outside_option;
  m.click_fn       = spec.clicks;
  m.jumps          = spec.jumps;
  m.theta          = grid;
  double const a   = spec.outside_option;
  double const tol = spec.attain_tol;
  auto const &S    = spec.clicks;

  m.clicks.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    m.clicks[k] = S(grid[k]);
  }

  if (S(0.0) > a + tol)
  {
    m.worst_off = m.worst_off_lo = m.worst_off_hi = 0.0;
  }
  else if (S(1.0) < a - tol)
  {
    m.worst_off = m.worst_off_lo = m.worst_off_hi = 1.0;
  }
  else
  {
    double const lo = numerics::bisect_threshold([&](double t) { return S(t) >= a - tol; }, 0.0, 1.0);
    double const hi = S(1.0) <= a + tol
                        ? 1.0
                        : numerics::bisect_threshold([&](double t) { return S(t) > a + tol; }, 0.0, 1.0);
    m.worst_off_lo = lo;
    m.worst_off_hi = std::max(lo, hi);
    for (double t : {lo, 0.5 * (lo + m.worst_off_hi), m.worst_off_hi})
    {
      if (std::abs(S(t) - a) <= tol)
      {
        m.attained = true;
      }
    }
    m.worst_off = m.attained ? std::clamp(spec.critical_type, m.worst_off_lo, m.worst_off_hi) : lo;
  }

  m.utility.resize(grid.size());
  m.transfers.resize(grid.size());
  // Cumulative integral from the worst-off type, accumulated cell by cell.
  std::vector<double> cum(grid.size(), 0.0);
  for (std::size_t k = 1; k < grid.size(); ++k)
  {
    cum[k] = cum[k - 1] + m.net_clicks_integral(grid[k - 1], grid[k]);
  }
  std::size_t const cell =
    std::min<std::size_t>(grid.size() - 2,
                          static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), m.worst_off) -
                                                   grid.begin()) - 1);
  double const base = cum[cell] + m.net_clicks_integral(grid[cell], m.worst_off);
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    m.utility[k]   = cum[k] - base;
    m.transfers[k] = grid[k] * (m.clicks[k] - a) - m.utility[k];
  }
  return m;
}

/// Interim quantities of every merchant under one mechanism.
struct InterimOutcome
{
  std::vector<MerchantInterim> merchants;
};

/// Expected value V, net clicks W and revenue R, plus the designer's weighted objective.
struct ObjectiveValues
{
  double value    = 0.0;
  double clicks   = 0.0;
  double revenue  = 0.0;
  double weighted = 0.0;
};

inline ObjectiveValues objective(InterimOutcome const &o)
{
  ObjectiveValues out;
  for (auto const &m : o.merchants)
  {
    auto const &F   = m.virtuals.dist();
    auto const &eta = m.virtuals.weights();
    double const th = m.worst_off;
    double const w  = m.expect_net([&](double t) { return F.pdf(t); });
    double const v  = m.expect_net([&](double t) { return t * F.pdf(t); });
    // Expected transfer, with the integral in the envelope formula rearranged by Fubini.
    double const tail = m.expect_net([&](double t) {
      return t >= th ? 1.0 - F.cdf(t) : -F.cdf(t);
    });
    double const r = v - tail;
    out.value += v;
    out.clicks += w;
    out.revenue += r;
    out.weighted += eta.value * v + eta.clicks * w + eta.revenue * r;
  }
  return out;
}

/// Virtual objective evaluated at a profile of reference types.
inline double virtual_objective(InterimOutcome const &o, std::vector<double> const &ref)
{
  double psi = 0.0;
  for (std::size_t i = 0; i < o.merchants.size(); ++i)
  {
    auto const &m = o.merchants[i];
    double const r = ref.at(i);
    psi += m.expect_net([&](double t) {
      return m.virtuals.times_density(t, t < r ? Side::selling : Side::buying);
    }, r);
  }
  return psi;
}

}  // namespace datashare

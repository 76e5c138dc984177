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

#include "finite.hpp"

#include <optional>
#include <string>

namespace datashare {

/// Two merchants, three customer profiles: exclusive to merchant 1, exclusive to merchant 2, shared.
/// Customers exclusive to one merchant are held by the other (holding your own exclusive
/// customers is the same as holding nothing of interest to the other side).
struct TwoMerchantData
{
  double excl2_held_by1 = 0.0;  // customers interested only in merchant 2, held by merchant 1
  double excl1_held_by2 = 0.0;  // customers interested only in merchant 1, held by merchant 2
  double shared_held_by1 = 0.5;
  double shared_held_by2 = 0.5;

  /// Data with the given excess shares and share r of shared customers held by merchant 1.
  static TwoMerchantData from_excess(double b1, double b2, double r)
  {
    double const s = 1.0 / (2.0 - b1 - b2);
    TwoMerchantData d{s * (1.0 - r - b2), s * (r - b1), s * r, s * (1.0 - r)};
    d.validate();
    return d;
  }

  void validate() const
  {
    for (double v : {excl2_held_by1, excl1_held_by2, shared_held_by1, shared_held_by2})
    {
      if (!(v >= 0.0))
      {
        throw std::invalid_argument("customer masses must be nonnegative");
      }
    }
    if (std::abs(excl2_held_by1 + excl1_held_by2 + shared_held_by1 + shared_held_by2 - 1.0) > 1e-9)
    {
      throw std::invalid_argument("customer masses must sum to 1");
    }
  }

  double shared() const
  {
    return shared_held_by1 + shared_held_by2;
  }

  /// Shared mass merchant i holds beyond what it could be asked to give up for the other's exclusives.
  double excess_share(std::size_t i) const
  {
    double const s = shared();
    if (s <= 0.0)
    {
      return 0.0;
    }
    double const own = i == 0 ? shared_held_by1 : shared_held_by2;
    double const gap = i == 0 ? excl1_held_by2 : excl2_held_by1;
    return std::max(0.0, (own - gap) / s);
  }

  /// Customers exclusive to merchant i (held by the other merchant).
  double exclusive_to(std::size_t i) const
  {
    return i == 0 ? excl1_held_by2 : excl2_held_by1;
  }
  double shared_held(std::size_t i) const
  {
    return i == 0 ? shared_held_by1 : shared_held_by2;
  }

  /// Profiles in order: exclusive to 1, exclusive to 2, shared.
  FiniteDataset to_dataset() const
  {
    return {2,
            {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}},
            {{0.0, excl1_held_by2}, {excl2_held_by1, 0.0}, {shared_held_by1, shared_held_by2}}};
  }
};

enum class TwoMerchantCase
{
  both_excess,  // both merchants hold excess shared customers
  one_excess,   // only one merchant does
  no_excess,    // neither does
  no_shared,    // no shared customers: two separate monopoly problems
};

inline char const *to_string(TwoMerchantCase c)
{
  switch (c)
  {
  case TwoMerchantCase::both_excess:
    return "i";
  case TwoMerchantCase::one_excess:
    return "ii";
  case TwoMerchantCase::no_excess:
    return "iii";
  case TwoMerchantCase::no_shared:
    return "monopoly";
  }
  return "?";
}

/// Optimal ironing levels and tie-breaking for the two-merchant model.
struct TwoMerchantSolution
{
  double          excess[2]  = {0.0, 0.0};
  TwoMerchantCase which      = TwoMerchantCase::no_excess;
  std::string     branch;                // finer label inside the case
  double          level[2]   = {0.0, 0.0};
  double          shared_tie[2] = {0.0, 0.0};     // split of shared customers at a tie
  double          exclusive_tie[2] = {0.0, 0.0};  // share of own exclusives at a zero-score tie
  double          level2_lo  = 0.0;  // range of optimal levels for the merchant without excess
  double          level2_hi  = 0.0;
  std::size_t     without_excess = 1;
  bool            attains[2] = {true, true};  // clicks at the worst-off type equal the outside option
};

namespace detail {

inline bool same_virtuals(WeightedVirtual const &a, WeightedVirtual const &b)
{
  auto const &la = a.dist().law();
  auto const &lb = b.dist().law();
  bool same_law  = la.kind() == lb.kind() && la.lo() == lb.lo() && la.hi() == lb.hi() &&
                  la.shape_a() == lb.shape_a() && la.shape_b() == lb.shape_b() &&
                  la.knots() == lb.knots() && la.knot_cdf() == lb.knot_cdf();
  auto const &ea = a.weights();
  auto const &eb = b.weights();
  return same_law && ea.value == eb.value && ea.clicks == eb.clicks && ea.revenue == eb.revenue;
}

/// Smallest level in [lo, hi] at which prob(level) reaches target.
template <typename P>
double level_for(P &&prob, double target, double lo, double hi)
{
  return numerics::bisect_threshold([&](double z) { return prob(z) >= target - 1e-15; }, lo, hi, 1e-13);
}

}  // namespace detail

/// Solve the two-merchant model with identically distributed types.
inline TwoMerchantSolution solve_two_merchant(TwoMerchantData const &d, WeightedVirtual const &wv1,
                                              WeightedVirtual const &wv2)
{
  d.validate();
  if (!detail::same_virtuals(wv1, wv2))
  {
    throw UnsupportedError("the two-merchant solver requires identically distributed types");
  }
  WeightedVirtual const &wv = wv1;
  TwoMerchantSolution   sol;
  double const floor_level = std::max(0.0, wv.lower(Side::buying));
  double const top_level   = std::isfinite(wv.upper(Side::selling)) ? wv.upper(Side::selling) : 1e6;
  auto PB = [&](double z) { return band_probabilities(wv, z).at_most; };
  auto PS = [&](double z) { return band_probabilities(wv, z).below; };

  for (std::size_t i = 0; i < 2; ++i)
  {
    sol.excess[i] = d.excess_share(i);
    double const gap = d.exclusive_to(i);
    sol.exclusive_tie[i] = gap > 0.0 ? std::min(gap, d.shared_held(i)) / gap : 0.0;
  }

  if (d.shared() <= 0.0)
  {
    sol.which    = TwoMerchantCase::no_shared;
    sol.branch   = "monopoly";
    sol.level[0] = sol.level[1] = floor_level;
    sol.level2_lo = sol.level2_hi = floor_level;
    for (std::size_t i = 0; i < 2; ++i)
    {
      sol.attains[i] = !(wv.lower(Side::buying) > 0.0 && d.exclusive_to(i) > 0.0);
    }
    return sol;
  }

  // Work with labels such that the first merchant has the larger excess.
  std::size_t const hi_i = sol.excess[0] >= sol.excess[1] ? 0 : 1;
  std::size_t const lo_i = 1 - hi_i;
  double const b1 = sol.excess[hi_i];
  double const b2 = sol.excess[lo_i];
  double z1 = floor_level;
  double z2 = floor_level;
  double p1 = 0.0;
  double p2 = 0.0;

  if (b1 > 0.0 && b2 > 0.0)
  {
    sol.which = TwoMerchantCase::both_excess;
    double const pb0 = PB(floor_level);
    if (b1 + b2 <= pb0)
    {
      sol.branch = "floor";
      p1 = b1 / pb0;
      p2 = b2 / pb0;
    }
    else
    {
      double const zt = detail::level_for([&](double z) { return PB(z) + PS(z); }, b1 + b2, floor_level,
                                          top_level);
      double const band = PB(zt) - PS(zt);
      if (band >= b1 - b2 && band > 0.0)
      {
        sol.branch = "common";
        z1 = z2 = zt;
        p1 = 0.5 * (1.0 + (b1 - b2) / band);
        p2 = 1.0 - p1;
      }
      else
      {
        sol.branch = "split";
        z1 = detail::level_for(PB, b1, floor_level, top_level);
        z2 = detail::level_for(PS, b2, floor_level, top_level);
        p1 = 1.0;
      }
    }
  }
  else if (b1 > 0.0)
  {
    sol.which = TwoMerchantCase::one_excess;
    double const pb0 = PB(floor_level);
    if (b1 > pb0)
    {
      sol.branch = "raised";
      z1 = detail::level_for(PB, b1, floor_level, top_level);
      p1 = 1.0;
    }
    else
    {
      sol.branch = "floor";
      p1 = b1 / pb0;
    }
  }
  else
  {
    sol.which  = TwoMerchantCase::no_excess;
    sol.branch = "floor";
  }

  sol.without_excess = lo_i;
  sol.level[hi_i] = z1;
  sol.level[lo_i] = z2;
  sol.shared_tie[hi_i] = p1;
  sol.shared_tie[lo_i] = p2;
  sol.level2_lo = floor_level;
  sol.level2_hi = sol.which == TwoMerchantCase::one_excess
                    ? std::max(floor_level, std::min(z1, wv.weights().clicks))
                    : floor_level;

  // With a positive floor, a merchant without excess keeps all of its exclusives and
  // ends above its outside option whenever those exceed its shared holdings.
  for (std::size_t i = 0; i < 2; ++i)
  {
    sol.attains[i] = !(wv.lower(Side::buying) > 0.0 && sol.excess[i] <= 0.0 &&
                       d.shared_held(i) < d.exclusive_to(i));
  }
  return sol;
}

/// Tie-breaking rule implementing a two-merchant solution on TwoMerchantData::to_dataset profiles.
inline TieBreakRule two_merchant_ties(TwoMerchantSolution const &s)
{
  TieBreakRule r = TieBreakRule::even(3, 2);
  r.zero[0]      = {s.exclusive_tie[0], 0.0};
  r.zero[1]      = {0.0, s.exclusive_tie[1]};
  r.zero[2]      = {s.shared_tie[0], s.shared_tie[1]};
  if (s.shared_tie[0] + s.shared_tie[1] > 0.0)
  {
    r.positive[2] = {s.shared_tie[0], s.shared_tie[1]};
  }
  return r;
}

inline FiniteMechanism two_merchant_mechanism(TwoMerchantData const &d, TwoMerchantSolution const &s,
                                              WeightedVirtual const &wv, FiniteOptions opts = {})
{
  return {d.to_dataset(), {ScoringRule(wv, s.level[0]), ScoringRule(wv, s.level[1])},
          two_merchant_ties(s), opts};
}

/// Closed-form bundling example: uniform types, revenue objective, equal shared holdings and
/// the customers exclusive to merchant 2 held by merchant 1.
struct BundlingExample
{
  double shared = 0.8;
  double ratio  = 0.25;  // exclusive mass over shared mass
  double level  = 0.25;
  double band_lo = 0.125;
  double band_hi = 0.625;
  double tie_share1 = 0.75;

  explicit BundlingExample(double shared_mass)
    : shared(shared_mass)
  {
    if (!(shared_mass > 0.0 && shared_mass < 1.0))
    {
      throw std::domain_error("shared mass must lie in (0, 1)");
    }
    ratio      = (1.0 - shared) / shared;
    level      = std::max(0.0, 0.5 - ratio);
    band_lo    = std::max(0.0, 0.25 - 0.5 * ratio);
    band_hi    = std::max(0.5, 0.75 - 0.5 * ratio);
    tie_share1 = std::min(1.0, 0.5 + ratio);
  }

  TwoMerchantData data() const
  {
    return {1.0 - shared, 0.0, 0.5 * shared, 0.5 * shared};
  }

  /// Separate design, exclusive market: merchant 2 buys at the monopoly price one half.
  double separate_exclusive_transfer(std::size_t i, double t) const
  {
    return i == 1 && t >= 0.5 ? 0.5 * (1.0 - shared) : 0.0;
  }

  /// Separate design, shared market run as a partnership dissolution.
  double separate_shared_transfer(double t) const
  {
    if (t <= 0.25 || t >= 0.75)
    {
      return 0.5 * shared * (t * t - 0.75 * 0.25);
    }
    return 0.0;
  }

  /// Bundled design, exclusive part of merchant 2's transfer.
  double bundled_exclusive_transfer(std::size_t i, double t) const
  {
    if (i == 0)
    {
      return 0.0;
    }
    if (t < band_lo)
    {
      return (1.0 - shared) * band_lo;
    }
    if (t > band_hi)
    {
      return (1.0 - shared) * band_hi;
    }
    return 0.0;
  }

  /// Bundled design, shared part of either merchant's transfer.
  double bundled_shared_transfer(double t) const
  {
    if (t < band_lo)
    {
      return 0.5 * shared * (t * t - band_lo * (1.0 - band_lo));
    }
    if (t > band_hi)
    {
      return 0.5 * shared * (t * t - band_hi * (1.0 - band_hi));
    }
    return 0.0;
  }

  double separate_transfer(std::size_t i, double t) const
  {
    return separate_exclusive_transfer(i, t) + separate_shared_transfer(t);
  }
  double bundled_transfer(std::size_t i, double t) const
  {
    return bundled_exclusive_transfer(i, t) + bundled_shared_transfer(t);
  }

  /// Expected revenue of each design (exact for uniform types).
  double separate_revenue() const
  {
    return 0.25 * (1.0 - shared) + 2.0 * shared * 5.0 / 96.0;
  }
  double bundled_revenue() const
  {
    double const s = band_lo;
    double const h = band_hi;
    double const excl = (1.0 - shared) * (s * s + h * (1.0 - h));
    double const inc  = 0.5 * shared *
                       (s * s * s / 3.0 - s * s * (1.0 - s) + (1.0 - h * h * h) / 3.0 - h * (1.0 - h) * (1.0 - h));
    return excl + 2.0 * inc;
  }

  /// Monte Carlo estimate (mean, standard error) of bundled minus separate revenue.
  std::pair<double, double> simulated_gain(std::size_t draws, std::uint64_t seed) const
  {
    std::mt19937_64 eng(rng::stream_seed(seed, 0));
    double sum = 0.0;
    double sq  = 0.0;
    for (std::size_t d = 0; d < draws; ++d)
    {
      double g = 0.0;
      for (std::size_t i = 0; i < 2; ++i)
      {
        double const t = rng::uniform01(eng);
        g += bundled_transfer(i, t) - separate_transfer(i, t);
      }
      sum += g;
      sq += g * g;
    }
    double const n    = static_cast<double>(draws);
    double const mean = sum / n;
    return {mean, std::sqrt(std::max(0.0, sq / n - mean * mean) / n)};
  }
};

/// Benchmarks recovered as special cases of the two-merchant model.
struct ClassicBenchmarks
{
  double monopoly_price = 0.0;       // lowest type served by a seller facing no competition
  double bilateral_level[2] = {0.0, 0.0};
  double partnership_level  = 0.0;
  double partnership_band[2] = {0.0, 0.0};
  double partnership_tie     = 0.0;
};

inline ClassicBenchmarks classic_benchmarks(WeightedVirtual const &wv)
{
  ClassicBenchmarks b;
  auto const mono = solve_two_merchant({0.0, 1.0, 0.0, 0.0}, wv, wv);
  b.monopoly_price = ScoringRule(wv, mono.level[0]).tie_interval().second;
  auto const bil = solve_two_merchant({0.0, 0.0, 0.0, 1.0}, wv, wv);
  b.bilateral_level[0] = bil.level[0];
  b.bilateral_level[1] = bil.level[1];
  auto const pd = solve_two_merchant({0.0, 0.0, 0.5, 0.5}, wv, wv);
  b.partnership_level = pd.level[0];
  auto const band     = ScoringRule(wv, pd.level[0]).tie_interval();
  b.partnership_band[0] = band.first;
  b.partnership_band[1] = band.second;
  b.partnership_tie     = pd.shared_tie[0];
  return b;
}

}  // namespace datashare

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

#include <stdexcept>
#include <string>
#include <utility>

namespace datashare {

/// Probabilities that a merchant's ironed score is below (strictly) or at most a level.
struct BandProbabilities
{
  double below    = 0.0;  // F(theta^S(z)): score strictly below z
  double at_most  = 0.0;  // F(theta^B(z)): score at most z

  double tie() const
  {
    return at_most - below;
  }
};

/// Admissible range of the ironing level for one merchant.
inline std::pair<double, double> ironing_bracket(WeightedVirtual const &wv)
{
  return {std::max(0.0, wv.lower(Side::buying)), wv.upper(Side::selling)};
}

/// Ironed quality score: weighted virtual cost below a band, a flat level z on it,
/// weighted virtual value above.
class ScoringRule
{
public:
  static constexpr double kCriticalTol = 1e-9;

  ScoringRule(WeightedVirtual wv, double z)
    : wv_(std::move(wv))
    , z_(z)
  {
    auto const [lo, hi] = ironing_bracket(wv_);
    if (!(z >= lo - 1e-12 && z <= hi + 1e-12))
    {
      throw std::invalid_argument("ironing level " + std::to_string(z) + " outside [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    band_lo_ = wv_.inverse_clamped(z_, Side::selling);
    band_hi_ = wv_.inverse_clamped(z_, Side::buying);
  }

  WeightedVirtual const &virtuals() const
  {
    return wv_;
  }
  TypeDistribution const &dist() const
  {
    return wv_.dist();
  }
  WelfareWeight const &weights() const
  {
    return wv_.weights();
  }
  double level() const
  {
    return z_;
  }

  /// Types on which the score is flat at the ironing level.
  std::pair<double, double> tie_interval() const
  {
    return {band_lo_, band_hi_};
  }

  double score(double t) const
  {
    if (t < band_lo_)
    {
      return wv_(t, Side::selling);
    }
    if (t <= band_hi_)
    {
      return z_;
    }
    return wv_(t, Side::buying);
  }

  /// Score times density, finite on [0, 1]; used in expectations.
  double score_times_density(double t) const
  {
    if (t < band_lo_)
    {
      return wv_.times_density(t, Side::selling);
    }
    if (t <= band_hi_)
    {
      return z_ * dist().pdf(t);
    }
    return wv_.times_density(t, Side::buying);
  }

  /// Smallest type whose score is at least y (0 or 1 at the ends of the range).
  double type_for_score(double y) const
  {
    if (y < z_)
    {
      return std::min(band_lo_, wv_.inverse_clamped(y, Side::selling));
    }
    if (y == z_)
    {
      return band_lo_;
    }
    return std::max(band_hi_, wv_.inverse_clamped(y, Side::buying));
  }

  /// Probability that the score is strictly below y.
  double prob_below(double y) const
  {
    if (y <= z_)
    {
      return dist().cdf(std::min(band_lo_, wv_.inverse_clamped(y, Side::selling)));
    }
    return dist().cdf(std::max(band_hi_, wv_.inverse_clamped(y, Side::buying)));
  }

  /// Probability of the flat band.
  double band_mass() const
  {
    return dist().cdf(band_hi_) - dist().cdf(band_lo_);
  }

  /// Type whose outside-option constraint binds: E[score - w - v*theta] / r.
  double critical_type() const
  {
    auto const &eta = weights();
    auto integrand  = [this, &eta](double t) {
      return score_times_density(t) - (eta.clicks + eta.value * t) * dist().pdf(t);
    };
    auto cuts = dist().kinks();
    cuts.push_back(band_lo_);
    cuts.push_back(band_hi_);
    double const e = numerics::piecewise_simpson(integrand, 0.0, 1.0, cuts, kCriticalTol);
    return e / eta.revenue;
  }

private:
  WeightedVirtual wv_;
  double          z_;
  double          band_lo_ = 0.0;
  double          band_hi_ = 1.0;
};

/// Band probabilities of a merchant with the given virtuals at level z (clamped at the range ends).
inline BandProbabilities band_probabilities(WeightedVirtual const &wv, double z)
{
  BandProbabilities p;
  auto const &F = wv.dist();
  p.below   = F.cdf(wv.inverse_clamped(z, Side::selling));
  p.at_most = F.cdf(wv.inverse_clamped(z, Side::buying));
  if (z < wv.lower(Side::selling))
  {
    p.below = 0.0;
  }
  if (z >= wv.upper(Side::buying))
  {
    p.at_most = 1.0;
  }
  return p;
}

}  // namespace datashare

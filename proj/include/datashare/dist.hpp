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

#include "numerics.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace datashare {

/// A probability law on a subinterval of [0, 1] with a continuous cdf.
class Law
{
public:
  enum class Kind
  {
    uniform,
    beta,
    piecewise
  };

  static Law uniform(double lo = 0.0, double hi = 1.0)
  {
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
    {
      throw std::invalid_argument("uniform law needs 0 <= lo < hi <= 1");
    }
    Law l;
    l.kind_ = Kind::uniform;
    l.lo_   = lo;
    l.hi_   = hi;
    return l;
  }

  static Law beta(double a, double b)
  {
    if (!(a >= 1.0 && b >= 1.0) || !std::isfinite(a) || !std::isfinite(b))
    {
      throw std::invalid_argument("beta law needs finite shapes a, b >= 1");
    }
    Law l;
    l.kind_ = Kind::beta;
    l.a_    = a;
    l.b_    = b;
    return l;
  }

  /// Piecewise-linear cdf through (xs[k], cdf[k]); the cdf must run from 0 to 1 strictly.
  static Law piecewise(std::vector<double> xs, std::vector<double> cdf)
  {
    if (xs.size() < 2 || xs.size() != cdf.size())
    {
      throw std::invalid_argument("piecewise law needs at least two matching knots");
    }
    if (xs.front() < 0.0 || xs.back() > 1.0)
    {
      throw std::invalid_argument("piecewise knots must lie in [0, 1]");
    }
    if (std::abs(cdf.front()) > 1e-12 || std::abs(cdf.back() - 1.0) > 1e-12)
    {
      throw std::invalid_argument("piecewise cdf must start at 0 and end at 1");
    }
    for (std::size_t k = 1; k < xs.size(); ++k)
    {
      if (!(xs[k] > xs[k - 1]) || !(cdf[k] > cdf[k - 1]))
      {
        throw std::invalid_argument("piecewise knots and cdf values must be strictly increasing");
      }
    }
    cdf.front() = 0.0;
    cdf.back()  = 1.0;
    Law l;
    l.kind_ = Kind::piecewise;
    l.lo_   = xs.front();
    l.hi_   = xs.back();
    l.xs_   = std::move(xs);
    l.cdf_  = std::move(cdf);
    return l;
  }

  Kind kind() const
  {
    return kind_;
  }
  double lo() const
  {
    return lo_;
  }
  double hi() const
  {
    return hi_;
  }
  double shape_a() const
  {
    return a_;
  }
  double shape_b() const
  {
    return b_;
  }
  std::vector<double> const &knots() const
  {
    return xs_;
  }
  std::vector<double> const &knot_cdf() const
  {
    return cdf_;
  }

  double cdf(double x) const
  {
    if (x <= lo_)
    {
      return 0.0;
    }
    if (x >= hi_)
    {
      return 1.0;
    }
    switch (kind_)
    {
    case Kind::uniform:
      return (x - lo_) / (hi_ - lo_);
    case Kind::beta:
      return boost::math::ibeta(a_, b_, x);
    case Kind::piecewise:
      return numerics::interpolate(xs_, cdf_, x);
    }
    return 0.0;
  }

  /// Density; on a knot of a piecewise law the right-hand slope is used.
  double pdf(double x) const
  {
    if (x < lo_ || x > hi_)
    {
      return 0.0;
    }
    switch (kind_)
    {
    case Kind::uniform:
      return 1.0 / (hi_ - lo_);
    case Kind::beta:
      return boost::math::ibeta_derivative(a_, b_, x);
    case Kind::piecewise:
    {
      std::size_t k = 0;
      while (k + 2 < xs_.size() && x >= xs_[k + 1])
      {
        ++k;
      }
      return (cdf_[k + 1] - cdf_[k]) / (xs_[k + 1] - xs_[k]);
    }
    }
    return 0.0;
  }

  double quantile(double u) const
  {
    u = std::clamp(u, 0.0, 1.0);
    switch (kind_)
    {
    case Kind::uniform:
      return lo_ + u * (hi_ - lo_);
    case Kind::beta:
      if (u <= 0.0)
      {
        return 0.0;
      }
      if (u >= 1.0)
      {
        return 1.0;
      }
      return boost::math::ibeta_inv(a_, b_, u);
    case Kind::piecewise:
      return numerics::interpolate(cdf_, xs_, u);
    }
    return 0.0;
  }

  double mean() const
  {
    switch (kind_)
    {
    case Kind::uniform:
      return 0.5 * (lo_ + hi_);
    case Kind::beta:
      return a_ / (a_ + b_);
    case Kind::piecewise:
    {
      // Density is constant on each segment, so each contributes mass times midpoint.
      double m = 0.0;
      for (std::size_t k = 0; k + 1 < xs_.size(); ++k)
      {
        m += (cdf_[k + 1] - cdf_[k]) * 0.5 * (xs_[k] + xs_[k + 1]);
      }
      return m;
    }
    }
    return 0.0;
  }

  /// Points where the density is not smooth (interior knots).
  std::vector<double> kinks() const
  {
    if (kind_ != Kind::piecewise)
    {
      return {};
    }
    return {xs_.begin() + 1, xs_.end() - 1};
  }

  /// Integral of x * pdf(x) over [lo, x], via quadrature on the smooth pieces.
  double partial_mean(double x) const
  {
    x = std::clamp(x, lo_, hi_);
    return numerics::piecewise_gauss([this](double t) { return t * pdf(t); }, lo_, x, kinks());
  }

private:
  Law() = default;

  Kind                kind_ = Kind::uniform;
  double              lo_   = 0.0;
  double              hi_   = 1.0;
  double              a_    = 1.0;
  double              b_    = 1.0;
  std::vector<double> xs_;
  std::vector<double> cdf_;
};

enum class Side
{
  buying,   // virtual value, used on the buyer side of the data market
  selling,  // virtual cost
};

inline char const *to_string(Side s)
{
  return s == Side::buying ? "B" : "S";
}

/// Nonnegative designer weights on value, clicks and revenue.
struct WelfareWeight
{
  double value   = 0.0;
  double clicks  = 0.0;
  double revenue = 1.0;

  WelfareWeight() = default;
  WelfareWeight(double v, double w, double r)
    : value(v)
    , clicks(w)
    , revenue(r)
  {
    if (v < 0.0 || w < 0.0 || r < 0.0)
    {
      throw std::invalid_argument("welfare weights must be nonnegative");
    }
    if (std::abs(v + w + r - 1.0) > 1e-12)
    {
      throw std::invalid_argument("welfare weights must sum to 1");
    }
    if (!(r > 0.0))
    {
      throw std::invalid_argument("revenue weight must be positive");
    }
  }
};

/// Regular distribution of a merchant's private value per click, supported on [0, 1].
class TypeDistribution
{
public:
  static constexpr int kRegularityGrid = 1001;

  explicit TypeDistribution(Law law)
    : law_(std::move(law))
  {
    if (law_.lo() != 0.0 || law_.hi() != 1.0)
    {
      throw std::invalid_argument("type distribution must be supported on [0, 1]");
    }
    auto const grid = numerics::linspace(0.0, 1.0, kRegularityGrid);
    for (std::size_t k = 1; k + 1 < grid.size(); ++k)
    {
      if (!(law_.pdf(grid[k]) > 0.0))
      {
        throw std::invalid_argument("type density must be positive on (0, 1)");
      }
    }
    for (Side side : {Side::buying, Side::selling})
    {
      double prev = virtual_value(0.0, side);
      for (std::size_t k = 1; k < grid.size(); ++k)
      {
        double const cur = virtual_value(grid[k], side);
        if (!(cur > prev))
        {
          throw std::invalid_argument(std::string("type distribution is not regular: ") +
                                      (side == Side::buying ? "virtual value" : "virtual cost") +
                                      " fails to increase near theta=" + std::to_string(grid[k]));
        }
        prev = cur;
      }
    }
  }

  static TypeDistribution uniform()
  {
    return TypeDistribution(Law::uniform());
  }

  Law const &law() const
  {
    return law_;
  }
  double cdf(double t) const
  {
    return law_.cdf(t);
  }
  double pdf(double t) const
  {
    return law_.pdf(t);
  }
  double quantile(double u) const
  {
    return law_.quantile(u);
  }
  double mean() const
  {
    return law_.mean();
  }
  std::vector<double> kinks() const
  {
    return law_.kinks();
  }

  /// theta - (1-F)/f on the buying side, theta + F/f on the selling side.
  /// Where the density vanishes at an endpoint the one-sided limit is returned.
  double virtual_value(double t, Side side) const
  {
    t = std::clamp(t, 0.0, 1.0);
    double const f = law_.pdf(t);
    double const F = law_.cdf(t);
    if (side == Side::buying)
    {
      if (f > 0.0)
      {
        return t - (1.0 - F) / f;
      }
      return t >= 1.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    }
    if (f > 0.0)
    {
      return t + F / f;
    }
    return t <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }

  /// Virtual value times density; finite everywhere, used inside integrals.
  double virtual_density(double t, Side side) const
  {
    double const f = law_.pdf(t);
    double const F = law_.cdf(t);
    return side == Side::buying ? t * f - (1.0 - F) : t * f + F;
  }

private:
  Law law_;
};

/// Designer-weighted virtual value of one merchant's type.
class WeightedVirtual
{
public:
  static constexpr double kInverseTol  = 1e-12;
  static constexpr int    kInverseIter = 200;

  WeightedVirtual(TypeDistribution dist, WelfareWeight eta)
    : dist_(std::move(dist))
    , eta_(eta)
  {
  }

  TypeDistribution const &dist() const
  {
    return dist_;
  }
  WelfareWeight const &weights() const
  {
    return eta_;
  }

  double operator()(double t, Side side) const
  {
    return eta_.clicks + eta_.value * t + eta_.revenue * dist_.virtual_value(t, side);
  }

  /// Weighted virtual value times density, finite on [0, 1].
  double times_density(double t, Side side) const
  {
    double const f = dist_.pdf(t);
    return (eta_.clicks + eta_.value * t) * f + eta_.revenue * dist_.virtual_density(t, side);
  }

  double lower(Side side) const
  {
    return (*this)(0.0, side);
  }
  double upper(Side side) const
  {
    return (*this)(1.0, side);
  }

  /// Type at which the weighted virtual value equals y; throws std::out_of_range outside its range.
  double inverse(double y, Side side) const
  {
    double const lo = lower(side);
    double const hi = upper(side);
    if (y < lo - 1e-12 || y > hi + 1e-12 || std::isnan(y))
    {
      throw std::out_of_range("weighted virtual value " + std::to_string(y) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return solve(y, side);
  }

  /// Like inverse, but returns 0 below the range and 1 above it.
  double inverse_clamped(double y, Side side) const
  {
    if (y <= lower(side))
    {
      return 0.0;
    }
    if (y >= upper(side))
    {
      return 1.0;
    }
    return solve(y, side);
  }

  double solve(double y, Side side) const
  {
    auto g = [this, y, side](double t) { return (*this)(t, side) - y; };
    double const g0 = g(0.0);
    double const g1 = g(1.0);
    if (g0 >= 0.0)
    {
      return 0.0;
    }
    if (g1 <= 0.0)
    {
      return 1.0;
    }
    // Bisect until both bracket values are finite (densities may vanish at the ends).
    double lo = 0.0, hi = 1.0, glo = g0, ghi = g1;
    for (int it = 0; it < kInverseIter && (!std::isfinite(glo) || !std::isfinite(ghi)); ++it)
    {
      double const mid = 0.5 * (lo + hi);
      double const gm  = g(mid);
      if (gm < 0.0)
      {
        lo  = mid;
        glo = gm;
      }
      else
      {
        hi  = mid;
        ghi = gm;
      }
    }
    if (ghi == 0.0)
    {
      return hi;
    }
    boost::uintmax_t iters = kInverseIter;
    auto const tol = [](double a, double b) { return std::abs(a - b) <= kInverseTol; };
    auto const r   = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
    return 0.5 * (r.first + r.second);
  }

private:
  TypeDistribution dist_;
  WelfareWeight    eta_;
};

}  // namespace datashare

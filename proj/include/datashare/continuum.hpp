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

#include "scoring.hpp"

#include <boost/math/tools/roots.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

namespace datashare {

/// Continuum of customers: a mixture over merchants of product laws on click-through-rate profiles.
struct ContinuumDataset
{
  std::vector<double>           weight;  // mixture weight of each merchant's customer base
  std::vector<std::vector<Law>> laws;    // [merchant base][coordinate] click-through-rate law

  std::size_t merchants() const
  {
    return weight.size();
  }

  void validate() const
  {
    std::size_t const N = weight.size();
    if (N < 2)
    {
      throw std::invalid_argument("continuum dataset needs at least two merchants");
    }
    if (laws.size() != N)
    {
      throw std::invalid_argument("need one profile law per merchant base");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < N; ++k)
    {
      if (!(weight[k] > 0.0))
      {
        throw std::invalid_argument("mixture weights must be strictly positive");
      }
      if (laws[k].size() != N)
      {
        throw std::invalid_argument("each profile law needs one coordinate per merchant");
      }
      total += weight[k];
    }
    if (std::abs(total - 1.0) > 1e-9)
    {
      throw std::invalid_argument("mixture weights must sum to 1");
    }
  }

  /// Same coordinate law for every merchant base and coordinate, equal weights.
  static ContinuumDataset iid(std::size_t N, Law const &law)
  {
    return {std::vector<double>(N, 1.0 / static_cast<double>(N)),
            std::vector<std::vector<Law>>(N, std::vector<Law>(N, law))};
  }

  double outside_option(std::size_t i) const
  {
    return weight[i] * laws[i][i].mean();
  }

  /// Density of merchant base k's product law at profile w.
  double base_density(std::size_t k, std::vector<double> const &w) const
  {
    double d = 1.0;
    for (std::size_t c = 0; c < w.size(); ++c)
    {
      d *= laws[k][c].pdf(w[c]);
    }
    return d;
  }
};

namespace detail {

/// Probability that a click-through-rate-weighted opponent score falls strictly below c.
inline double weighted_below(ScoringRule const &rule, Law const &law, double c)
{
  if (c <= 0.0)
  {
    return 0.0;
  }
  auto const &wv = rule.virtuals();
  std::vector<double> cuts = law.kinks();
  double const z = rule.level();
  if (z > 0.0)
  {
    cuts.push_back(c / z);
  }
  double const top = wv.upper(Side::buying);
  if (top > 0.0 && std::isfinite(top))
  {
    cuts.push_back(c / top);
  }
  double const bottom = wv.lower(Side::selling);
  if (bottom > 0.0 && std::isfinite(bottom))
  {
    cuts.push_back(c / bottom);
  }
  auto f = [&](double w) { return (w <= 0.0 ? 1.0 : rule.prob_below(c / w)) * law.pdf(w); };
  return numerics::piecewise_gauss(f, law.lo(), law.hi(), cuts);
}

}  // namespace detail

/// Interim clicks in the continuum model as a function of each merchant's own score.
class ContinuumModel
{
public:
  ContinuumModel(ContinuumDataset data, std::vector<WeightedVirtual> virtuals)
    : data_(std::move(data))
    , virtuals_(std::move(virtuals))
  {
    data_.validate();
    if (virtuals_.size() != data_.merchants())
    {
      throw std::invalid_argument("need one type distribution per merchant");
    }
  }

  ContinuumDataset const &dataset() const
  {
    return data_;
  }
  std::vector<WeightedVirtual> const &virtuals() const
  {
    return virtuals_;
  }

  std::pair<double, double> bracket(std::size_t i) const
  {
    auto b = ironing_bracket(virtuals_[i]);
    if (!std::isfinite(b.second))
    {
      b.second = 1e6;
    }
    return b;
  }

  std::vector<ScoringRule> rules(std::vector<double> const &z) const
  {
    std::vector<ScoringRule> out;
    for (std::size_t i = 0; i < z.size(); ++i)
    {
      out.emplace_back(virtuals_[i], z[i]);
    }
    return out;
  }

  /// Expected clicks of merchant i when its own score is s, opponents using `rules`.
  double clicks(std::size_t i, double s, std::vector<ScoringRule> const &rules) const
  {
    std::size_t const N = data_.merchants();
    double total = 0.0;
    for (std::size_t k = 0; k < N; ++k)
    {
      Law const &own = data_.laws[k][i];
      auto f = [&](double w) {
        double p = w * own.pdf(w);
        for (std::size_t j = 0; j < N && p > 0.0; ++j)
        {
          if (j != i)
          {
            p *= detail::weighted_below(rules[j], data_.laws[k][j], w * s);
          }
        }
        return p;
      };
      total += data_.weight[k] * numerics::piecewise_gauss(f, own.lo(), own.hi(), own.kinks());
    }
    return total;
  }

  /// Clicks at the flat level minus the outside option, for every merchant.
  std::vector<double> residual(std::vector<double> const &z) const
  {
    auto const r = rules(z);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
    {
      out[i] = clicks(i, z[i], r) - data_.outside_option(i);
    }
    return out;
  }

  /// Monte Carlo estimate (mean, standard error) of merchant i's clicks at own type t.
  std::pair<double, double> simulate_clicks(std::size_t i, double t, std::vector<double> const &z,
                                            std::size_t draws, std::uint64_t seed) const
  {
    auto const r = rules(z);
    std::size_t const N = data_.merchants();
    std::mt19937_64 eng(rng::stream_seed(seed, 0));
    std::vector<double> w(N);
    double const own = r[i].score(t);
    double sum = 0.0;
    double sq  = 0.0;
    for (std::size_t d = 0; d < draws; ++d)
    {
      std::size_t const k = draw_base(eng);
      for (std::size_t c = 0; c < N; ++c)
      {
        w[c] = data_.laws[k][c].quantile(rng::uniform01(eng));
      }
      bool win = true;
      for (std::size_t j = 0; j < N; ++j)
      {
        if (j == i)
        {
          continue;
        }
        double const sj = r[j].score(virtuals_[j].dist().quantile(rng::uniform01(eng)));
        if (!(w[i] * own > w[j] * sj))
        {
          win = false;
        }
      }
      double const v = win ? w[i] : 0.0;
      sum += v;
      sq += v * v;
    }
    double const n    = static_cast<double>(draws);
    double const mean = sum / n;
    return {mean, std::sqrt(std::max(0.0, sq / n - mean * mean) / n)};
  }

  /// Draw a merchant base with probability equal to its mixture weight.
  std::size_t draw_base(std::mt19937_64 &eng) const
  {
    double u = rng::uniform01(eng);
    for (std::size_t k = 0; k + 1 < data_.weight.size(); ++k)
    {
      if (u < data_.weight[k])
      {
        return k;
      }
      u -= data_.weight[k];
    }
    return data_.weight.size() - 1;
  }

private:
  ContinuumDataset             data_;
  std::vector<WeightedVirtual> virtuals_;
};

struct OptZOptions
{
  double tol      = 1e-6;
  double damping  = 0.5;
  int    max_iter = 200;
};

struct OptZResult
{
  std::vector<double> level;
  std::vector<double> residual;
  std::vector<bool>   corner;  // no level equates clicks with the outside option
  int                 iterations = 0;
  std::string         method;
};

namespace detail {

/// Merchant i's level that zeroes its residual given the others' levels (or a bracket end).
inline double best_response(ContinuumModel const &m, std::vector<double> z, std::size_t i, bool &corner)
{
  auto const [lo, hi] = m.bracket(i);
  double const a = m.dataset().outside_option(i);
  auto g = [&](double zi) {
    z[i] = zi;
    auto const r = m.rules(z);
    return m.clicks(i, zi, r) - a;
  };
  corner = false;
  double const glo = g(lo);
  if (glo >= 0.0)
  {
    return lo;
  }
  double const ghi = g(hi);
  if (ghi <= 0.0)
  {
    corner = true;
    return hi;
  }
  boost::uintmax_t iters = 200;
  auto const tol = [](double x, double y) { return std::abs(x - y) <= 1e-11; };
  auto const r   = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace detail

/// Levels at which every merchant's worst-off type gets exactly its outside option.
inline OptZResult solve_optz(ContinuumModel const &m, OptZOptions const &opts = {})
{
  std::size_t const N = m.dataset().merchants();
  OptZResult out;
  out.level.assign(N, 0.0);
  out.corner.assign(N, false);
  // Warm start: common level where the summed residual along the diagonal changes sign.
  double dlo = 0.0, dhi = 0.0;
  for (std::size_t i = 0; i < N; ++i)
  {
    dlo = std::max(dlo, m.bracket(i).first);
    dhi = std::max(dhi, m.bracket(i).second);
  }
  auto diag = [&](double z) {
    std::vector<double> zz(N);
    for (std::size_t i = 0; i < N; ++i)
    {
      zz[i] = std::clamp(z, m.bracket(i).first, m.bracket(i).second);
    }
    auto const r = m.residual(zz);
    double sum = 0.0;
    for (double v : r)
    {
      sum += v;
    }
    return sum;
  };
  double z0 = dlo;
  if (diag(dlo) < 0.0)
  {
    z0 = diag(dhi) <= 0.0 ? dhi : numerics::bisect_threshold([&](double z) { return diag(z) >= 0.0; }, dlo, dhi, 1e-9);
  }
  for (std::size_t i = 0; i < N; ++i)
  {
    out.level[i] = std::clamp(z0, m.bracket(i).first, m.bracket(i).second);
  }
  std::ostringstream trace;
  auto converged = [&](std::vector<double> const &z) {
    out.residual = m.residual(z);
    double worst = 0.0;
    for (std::size_t i = 0; i < N; ++i)
    {
      bool const at_top = z[i] >= m.bracket(i).second - 1e-12 && out.residual[i] <= 0.0;
      bool const at_bottom = z[i] <= m.bracket(i).first + 1e-12 && out.residual[i] >= 0.0;
      out.corner[i] = at_top;
      if (!at_top && !at_bottom)
      {
        worst = std::max(worst, std::abs(out.residual[i]));
      }
    }
    trace << " " << worst;
    return worst <= opts.tol;
  };

  // Damped simultaneous best responses, then undamped cyclic best responses as a fallback.
  for (int pass = 0; pass < 2; ++pass)
  {
    bool const cyclic = pass == 1;
    for (int it = 0; it < opts.max_iter; ++it)
    {
      ++out.iterations;
      if (converged(out.level))
      {
        out.method = cyclic ? "cyclic" : "damped";
        return out;
      }
      std::vector<double> next = out.level;
      for (std::size_t i = 0; i < N; ++i)
      {
        bool corner = false;
        double const br = detail::best_response(m, cyclic ? next : out.level, i, corner);
        next[i] = cyclic ? br : out.level[i] + opts.damping * (br - out.level[i]);
      }
      double step = 0.0;
      for (std::size_t i = 0; i < N; ++i)
      {
        step = std::max(step, std::abs(next[i] - out.level[i]));
      }
      out.level = next;
      if (step < 1e-13 && !converged(out.level))
      {
        break;
      }
    }
  }
  throw ConvergenceError("level solver did not converge; residual trace:" + trace.str());
}

/// Symmetric model: N merchants with equal weights and i.i.d. click-through rates and types.
class SymmetricModel
{
public:
  SymmetricModel(WeightedVirtual wv, Law law, std::size_t merchants)
    : wv_(std::move(wv))
    , law_(std::move(law))
    , n_(merchants)
  {
    if (n_ < 2)
    {
      throw std::invalid_argument("symmetric model needs at least two merchants");
    }
  }

  std::size_t merchants() const
  {
    return n_;
  }
  WeightedVirtual const &virtuals() const
  {
    return wv_;
  }
  Law const &law() const
  {
    return law_;
  }
  double outside_option() const
  {
    return law_.mean() / static_cast<double>(n_);
  }

  /// Expected clicks of a merchant with own score s when everyone irons at z.
  double clicks(double s, double z) const
  {
    ScoringRule const rule(wv_, z);
    auto f = [&](double w) {
      double const x = detail::weighted_below(rule, law_, w * s);
      return w * std::pow(x, static_cast<double>(n_ - 1)) * law_.pdf(w);
    };
    // The power concentrates mass within about 1/N of the top rate; refine geometrically there.
    std::vector<double> cuts = law_.kinks();
    double const width = law_.hi() - law_.lo();
    int const levels   = n_ < 16 ? 0 : std::min(60, static_cast<int>(std::log2(static_cast<double>(n_))) + 6);
    for (int k = 1; k <= levels; ++k)
    {
      cuts.push_back(law_.hi() - width * std::ldexp(1.0, -k));
    }
    return numerics::piecewise_gauss(f, law_.lo(), law_.hi(), cuts);
  }

  double residual(double z) const
  {
    return clicks(z, z) - outside_option();
  }

  /// Common level solving the symmetric outside-option condition, by bisection.
  double solve(double tol = 1e-6) const
  {
    auto [lo, hi] = ironing_bracket(wv_);
    if (!std::isfinite(hi))
    {
      hi = 1e6;
    }
    if (residual(hi) < 0.0)
    {
      return hi;
    }
    if (residual(lo) > 0.0)
    {
      return lo;
    }
    double const z = numerics::bisect_increasing([this](double v) { return residual(v); }, lo, hi, 1e-12);
    if (std::abs(residual(z)) > tol)
    {
      throw ConvergenceError("symmetric level bisection left residual " + std::to_string(residual(z)));
    }
    return z;
  }

  /// Number of merchants times one merchant's clicks at type t.
  double scaled_clicks(double t, double z) const
  {
    ScoringRule const rule(wv_, z);
    return static_cast<double>(n_) * clicks(rule.score(t), z);
  }

private:
  WeightedVirtual wv_;
  Law             law_;
  std::size_t     n_;
};

/// Proportional baseline: each merchant receives its own base's share of every profile.
/// Returns Monte Carlo (mean, standard error) of each merchant's expected clicks.
inline std::vector<std::pair<double, double>> baseline_clicks_mc(ContinuumDataset const &d, std::size_t draws,
                                                                 std::uint64_t seed)
{
  d.validate();
  ContinuumModel const m(d, std::vector<WeightedVirtual>(
                              d.merchants(), WeightedVirtual(TypeDistribution::uniform(), WelfareWeight{})));
  std::size_t const N = d.merchants();
  std::mt19937_64 eng(rng::stream_seed(seed, 1));
  std::vector<double> sum(N, 0.0);
  std::vector<double> sq(N, 0.0);
  std::vector<double> w(N);
  for (std::size_t n = 0; n < draws; ++n)
  {
    std::size_t const k = m.draw_base(eng);
    for (std::size_t c = 0; c < N; ++c)
    {
      w[c] = d.laws[k][c].quantile(rng::uniform01(eng));
    }
    double mix = 0.0;
    for (std::size_t b = 0; b < N; ++b)
    {
      mix += d.weight[b] * d.base_density(b, w);
    }
    for (std::size_t i = 0; i < N; ++i)
    {
      double const v = w[i] * d.weight[i] * d.base_density(i, w) / mix;
      sum[i] += v;
      sq[i] += v * v;
    }
  }
  std::vector<std::pair<double, double>> out;
  double const n = static_cast<double>(draws);
  for (std::size_t i = 0; i < N; ++i)
  {
    double const mean = sum[i] / n;
    out.emplace_back(mean, std::sqrt(std::max(0.0, sq[i] / n - mean * mean) / n));
  }
  return out;
}

}  // namespace datashare

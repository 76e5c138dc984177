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

#include <random>
#include <sstream>
#include <string>

namespace datashare {

struct CheckResult
{
  std::string name;
  bool        pass      = true;
  double      worst     = 0.0;  // largest violation, in payoff (or click) units
  double      tolerance = 0.0;
  std::string witness;          // where the worst violation occurred
};

struct VerificationReport
{
  std::vector<CheckResult> checks;

  bool passed() const
  {
    return std::all_of(checks.begin(), checks.end(), [](CheckResult const &c) { return c.pass; });
  }
  int exit_code() const
  {
    return passed() ? 0 : 1;
  }

  /// One `key=value` line per field, prefixed by the check name.
  std::string to_text() const
  {
    std::ostringstream os;
    os.precision(12);
    for (auto const &c : checks)
    {
      os << c.name << ".pass=" << (c.pass ? "true" : "false") << "\n";
      os << c.name << ".worst=" << c.worst << "\n";
      os << c.name << ".tolerance=" << c.tolerance << "\n";
      os << c.name << ".witness=" << c.witness << "\n";
    }
    os << "overall.pass=" << (passed() ? "true" : "false") << "\n";
    return os.str();
  }
};

namespace detail {

inline void record(CheckResult &r, double violation, std::string const &where)
{
  if (violation > r.worst)
  {
    r.worst   = violation;
    r.witness = where;
  }
}

inline std::string point(std::size_t i, double t)
{
  std::ostringstream os;
  os.precision(6);
  os << "merchant=" << i << " theta=" << t;
  return os.str();
}

}  // namespace detail

/// Allocations are nonnegative and exhaust every profile (merchants plus the untargeted sink).
inline CheckResult check_feasibility(FiniteMechanism const &m, std::size_t samples = 2000,
                                     std::uint64_t seed = 1, double tol = 1e-9)
{
  CheckResult r{"feasibility", true, 0.0, tol, ""};
  std::mt19937_64 eng(rng::stream_seed(seed, 11));
  std::size_t const N = m.dataset().merchants;
  std::vector<double> theta(N);
  for (std::size_t s = 0; s < samples; ++s)
  {
    for (auto &t : theta)
    {
      t = rng::uniform01(eng);
    }
    auto const x = m.allocate(theta);
    for (std::size_t w = 0; w < x.size(); ++w)
    {
      double total = 0.0;
      for (double v : x[w])
      {
        detail::record(r, -v, "profile=" + std::to_string(w));
        total += v;
      }
      detail::record(r, std::abs(total - m.dataset().profile_mass(w)), "profile=" + std::to_string(w));
    }
  }
  r.pass = r.worst <= tol;
  return r;
}

/// Interim clicks nondecreasing on the grid, allowing `sigmas` standard errors of noise.
inline CheckResult check_monotonicity(InterimOutcome const &o, double sigmas = 3.0, double tol = 1e-10)
{
  CheckResult r{"monotonicity", true, 0.0, tol, ""};
  for (std::size_t i = 0; i < o.merchants.size(); ++i)
  {
    auto const &m = o.merchants[i];
    for (std::size_t k = 0; k + 1 < m.theta.size(); ++k)
    {
      double noise = 0.0;
      if (!m.click_se.empty())
      {
        noise = sigmas * std::hypot(m.click_se[k], m.click_se[k + 1]);
      }
      detail::record(r, m.clicks[k] - m.clicks[k + 1] - noise, detail::point(i, m.theta[k]));
    }
  }
  r.pass = r.worst <= tol;
  return r;
}

/// Truthful reporting beats every grid misreport up to `eps`.
inline CheckResult check_ic(InterimOutcome const &o, double eps = 1e-4)
{
  CheckResult r{"ic", true, 0.0, eps, ""};
  for (std::size_t i = 0; i < o.merchants.size(); ++i)
  {
    auto const &m  = o.merchants[i];
    double const a = m.outside_option;
    for (std::size_t k = 0; k < m.theta.size(); ++k)
    {
      double const t     = m.theta[k];
      double const truth = t * (m.clicks[k] - a) - m.transfers[k];
      for (std::size_t j = 0; j < m.theta.size(); ++j)
      {
        double const lie = t * (m.clicks[j] - a) - m.transfers[j];
        if (lie - truth > r.worst)
        {
          std::ostringstream os;
          os.precision(6);
          os << detail::point(i, t) << " report=" << m.theta[j];
          detail::record(r, lie - truth, os.str());
        }
      }
    }
  }
  r.pass = r.worst <= eps;
  return r;
}

/// Payoffs above the outside option everywhere; binding at the worst-off type when attained.
inline CheckResult check_ir(InterimOutcome const &o, double eps = 1e-4)
{
  CheckResult r{"ir", true, 0.0, eps, ""};
  for (std::size_t i = 0; i < o.merchants.size(); ++i)
  {
    auto const &m = o.merchants[i];
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m.theta.size(); ++k)
    {
      detail::record(r, -m.utility[k], detail::point(i, m.theta[k]));
      lowest = std::min(lowest, m.utility[k]);
    }
    double const at_worst = m.utility_at(m.worst_off);
    lowest = std::min(lowest, at_worst);
    if (m.attained)
    {
      detail::record(r, lowest, detail::point(i, m.worst_off) + " (not binding)");
    }
  }
  r.pass = r.worst <= eps;
  return r;
}

/// Payoff differences equal the integral of net clicks, integrated independently of the
/// cell-by-cell accumulation used to build the payoffs.
inline CheckResult check_envelope(InterimOutcome const &o, double tol = 1e-4)
{
  CheckResult r{"envelope", true, 0.0, tol, ""};
  for (std::size_t i = 0; i < o.merchants.size(); ++i)
  {
    auto const &m  = o.merchants[i];
    double const a = m.outside_option;
    auto f = [&](double t) { return m.click_fn(t) - a; };
    double const t0 = m.theta.front();
    for (std::size_t k = 1; k < m.theta.size(); ++k)
    {
      double const integral = numerics::piecewise_gauss(f, t0, m.theta[k], m.jumps);
      detail::record(r, std::abs(m.utility[k] - m.utility[0] - integral), detail::point(i, m.theta[k]));
    }
  }
  r.pass = r.worst <= tol;
  return r;
}

/// Per-merchant virtual objective with reference type r.
inline double virtual_part(MerchantInterim const &m, double r)
{
  return m.expect_net([&](double t) { return m.virtuals.times_density(t, t < r ? Side::selling : Side::buying); },
                      r);
}

struct SaddleOptions
{
  std::size_t   samples   = 2000;
  std::uint64_t seed      = 1;
  std::size_t   scan      = 201;
  double        tol       = 1e-6;
  std::size_t   identity_points = 5;
};

/// Saddle-point checks: the allocation maximizes the ironed virtual surplus customer by customer,
/// the reference types minimize the virtual objective, and the objective shift identity holds.
inline std::vector<CheckResult> check_saddle(FiniteMechanism const &mech, InterimOutcome const &o,
                                             std::vector<double> const &reference, SaddleOptions const &opts = {})
{
  std::size_t const N = mech.dataset().merchants;
  auto const &data    = mech.dataset();
  std::mt19937_64 eng(rng::stream_seed(opts.seed, 12));

  CheckResult pw{"saddle_pointwise", true, 0.0, 1e-9, ""};
  std::vector<double> theta(N);
  for (std::size_t s = 0; s < opts.samples; ++s)
  {
    for (auto &t : theta)
    {
      t = rng::uniform01(eng);
    }
    auto const x = mech.allocate(theta);
    for (std::size_t w = 0; w < data.profile_count(); ++w)
    {
      double best     = 0.0;
      double achieved = 0.0;
      for (std::size_t i = 0; i < N; ++i)
      {
        double const v = data.profiles[w][i] * mech.rules()[i].score(theta[i]);
        best = std::max(best, v);
        achieved += x[w][i] * v;
      }
      std::ostringstream os;
      os << "profile=" << w << " sample=" << s;
      detail::record(pw, best * data.profile_mass(w) - achieved, os.str());
    }
  }
  pw.pass = pw.worst <= pw.tolerance;

  CheckResult mn{"saddle_min", true, 0.0, opts.tol, ""};
  auto const grid = numerics::linspace(0.0, 1.0, opts.scan);
  for (std::size_t i = 0; i < N; ++i)
  {
    auto const &m = o.merchants[i];
    double const at_ref = virtual_part(m, reference[i]);
    double lowest = at_ref;
    double where  = reference[i];
    for (double t : grid)
    {
      double const v = virtual_part(m, t);
      if (v < lowest)
      {
        lowest = v;
        where  = t;
      }
    }
    std::ostringstream os;
    os.precision(6);
    os << detail::point(i, reference[i]) << " minimizer=" << where;
    detail::record(mn, at_ref - lowest, os.str());
  }
  mn.pass = mn.worst <= mn.tolerance;

  CheckResult id{"saddle_identity", true, 0.0, opts.tol, ""};
  double const weighted = objective(o).weighted;
  std::vector<double> probe(N);
  for (std::size_t s = 0; s < opts.identity_points; ++s)
  {
    double shifted = 0.0;
    for (std::size_t i = 0; i < N; ++i)
    {
      probe[i] = rng::uniform01(eng);
      shifted += o.merchants[i].virtuals.weights().revenue * o.merchants[i].utility_at(probe[i]);
    }
    detail::record(id, std::abs(weighted - (virtual_objective(o, probe) - shifted)), "probe=" + std::to_string(s));
  }
  id.pass = id.worst <= id.tolerance;
  return {pw, mn, id};
}

/// Full report on one mechanism; the reference profile defaults to the worst-off types.
inline VerificationReport verify_mechanism(FiniteMechanism const &mech, double eps = 1e-4,
                                           SaddleOptions const &saddle = {})
{
  auto const o = mech.outcome();
  std::vector<double> ref;
  for (auto const &m : o.merchants)
  {
    ref.push_back(m.worst_off);
  }
  VerificationReport rep;
  rep.checks.push_back(check_feasibility(mech, saddle.samples, saddle.seed));
  rep.checks.push_back(check_monotonicity(o));
  rep.checks.push_back(check_ic(o, eps));
  rep.checks.push_back(check_ir(o, eps));
  rep.checks.push_back(check_envelope(o, eps));
  for (auto &c : check_saddle(mech, o, ref, saddle))
  {
    rep.checks.push_back(std::move(c));
  }
  return rep;
}

struct BruteForceResult
{
  double value      = 0.0;  // best max-min value over the searched family
  double target     = 0.0;  // value of the supplied scoring mechanism
  double grid_error = 0.0;  // largest objective change between adjacent grid types
  std::vector<double> best_levels;
  std::size_t         best_ties = 0;
  std::size_t         candidates = 0;
};

/// Max over a family of threshold (scoring) allocations of the minimum over reference types of
/// the virtual objective. The family is every pair of levels on a grid spanning each bracket,
/// crossed with tie variants: the target's own ties, even splits, and priority to either merchant.
/// The target's levels are added to the level grid, so the result never falls below the target.
inline BruteForceResult brute_force_value(FiniteMechanism const &target, std::size_t grid = 21)
{
  auto const &data = target.dataset();
  if (data.merchants != 2 || data.profile_count() > 3 || grid > 21 || grid < 2)
  {
    throw UnsupportedError("brute force needs two merchants, at most three profiles and at most 21 grid points");
  }
  std::size_t const P = data.profile_count();
  auto const types    = numerics::linspace(0.0, 1.0, grid);
  FiniteOptions opts  = target.options();
  opts.method         = OpponentIntegration::exact;
  opts.grid           = grid;

  auto maxmin = [&](FiniteMechanism const &m, double *step) {
    auto const o = m.outcome();
    double total = 0.0;
    for (auto const &mi : o.merchants)
    {
      double lowest = std::numeric_limits<double>::infinity();
      double prev   = 0.0;
      for (std::size_t k = 0; k < types.size(); ++k)
      {
        double const v = virtual_part(mi, types[k]);
        lowest = std::min(lowest, v);
        if (step != nullptr && k > 0)
        {
          *step = std::max(*step, std::abs(v - prev));
        }
        prev = v;
      }
      total += lowest;
    }
    return total;
  };

  std::vector<TieBreakRule> variants{target.ties(), TieBreakRule::even(P, 2)};
  for (std::size_t first = 0; first < 2; ++first)
  {
    TieBreakRule t = target.ties();
    for (std::size_t w = 0; w < P; ++w)
    {
      t.positive[w] = {first == 0 ? 1.0 : 0.0, first == 1 ? 1.0 : 0.0};
    }
    variants.push_back(t);
  }

  std::vector<std::vector<double>> levels(2);
  for (std::size_t i = 0; i < 2; ++i)
  {
    auto const &wv = target.rules()[i].virtuals();
    auto [lo, hi]  = ironing_bracket(wv);
    if (!std::isfinite(hi))
    {
      hi = std::max(lo + 1.0, 2.0 * target.rules()[i].level());
    }
    levels[i] = numerics::linspace(lo, hi, grid);
    levels[i].push_back(target.rules()[i].level());
  }

  BruteForceResult out;
  {
    FiniteMechanism const t(data, target.rules(), target.ties(), opts);
    auto const o = t.outcome();
    out.target   = objective(o).weighted;
    maxmin(t, &out.grid_error);
  }
  out.value = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < variants.size(); ++v)
  {
    for (double z1 : levels[0])
    {
      for (double z2 : levels[1])
      {
        std::vector<ScoringRule> rules{ScoringRule(target.rules()[0].virtuals(), z1),
                                       ScoringRule(target.rules()[1].virtuals(), z2)};
        FiniteMechanism const m(data, std::move(rules), variants[v], opts);
        double const val = maxmin(m, nullptr);
        ++out.candidates;
        if (val > out.value)
        {
          out.value       = val;
          out.best_levels = {z1, z2};
          out.best_ties   = v;
        }
      }
    }
  }
  return out;
}

}  // namespace datashare

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

#include "interim.hpp"
#include "scoring.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace datashare {

/// Customers grouped by click-through-rate profile, with each merchant's initial holdings.
struct FiniteDataset
{
  std::size_t                      merchants = 0;
  std::vector<std::vector<double>> profiles;  // [profile][merchant] click-through rates
  std::vector<std::vector<double>> mass;      // [profile][merchant] customer mass held

  void validate() const
  {
    if (merchants < 2)
    {
      throw std::invalid_argument("dataset needs at least two merchants");
    }
    if (profiles.empty() || profiles.size() != mass.size())
    {
      throw std::invalid_argument("dataset needs matching profile and mass tables");
    }
    double total = 0.0;
    for (std::size_t w = 0; w < profiles.size(); ++w)
    {
      if (profiles[w].size() != merchants || mass[w].size() != merchants)
      {
        throw std::invalid_argument("profile " + std::to_string(w) + " has wrong length");
      }
      for (std::size_t i = 0; i < merchants; ++i)
      {
        if (!(profiles[w][i] >= 0.0 && profiles[w][i] <= 1.0))
        {
          throw std::invalid_argument("click-through rates must lie in [0, 1]");
        }
        if (!(mass[w][i] >= 0.0))
        {
          throw std::invalid_argument("customer masses must be nonnegative");
        }
        total += mass[w][i];
      }
    }
    if (std::abs(total - 1.0) > 1e-9)
    {
      throw std::invalid_argument("customer masses must sum to 1");
    }
  }

  std::size_t profile_count() const
  {
    return profiles.size();
  }

  /// Total customer mass with profile w.
  double profile_mass(std::size_t w) const
  {
    double m = 0.0;
    for (double x : mass[w])
    {
      m += x;
    }
    return m;
  }

  /// Expected clicks merchant i generates from its own customers.
  double outside_option(std::size_t i) const
  {
    double a = 0.0;
    for (std::size_t w = 0; w < profiles.size(); ++w)
    {
      a += profiles[w][i] * mass[w][i];
    }
    return a;
  }
};

/// How a profile's customers are split when several candidates share the top score.
///
/// When the top score is positive, tied merchants split by `positive` weights,
/// renormalized over the tied set (evenly if those weights are all zero).
/// When every score is zero the designer is tied too; merchant i then receives
/// `zero[w][i]` and the rest stays untargeted.
struct TieBreakRule
{
  std::vector<std::vector<double>> positive;
  std::vector<std::vector<double>> zero;

  static TieBreakRule even(std::size_t profiles, std::size_t merchants)
  {
    TieBreakRule r;
    r.positive.assign(profiles, std::vector<double>(merchants, 1.0));
    r.zero.assign(profiles, std::vector<double>(merchants, 0.0));
    return r;
  }

  void validate(std::size_t profiles, std::size_t merchants) const
  {
    if (positive.size() != profiles || zero.size() != profiles)
    {
      throw std::invalid_argument("tie-break rule must cover every profile");
    }
    for (std::size_t w = 0; w < profiles; ++w)
    {
      if (positive[w].size() != merchants || zero[w].size() != merchants)
      {
        throw std::invalid_argument("tie-break weights must cover every merchant");
      }
      double z = 0.0;
      for (std::size_t i = 0; i < merchants; ++i)
      {
        if (positive[w][i] < 0.0 || zero[w][i] < 0.0)
        {
          throw std::invalid_argument("tie-break weights must be nonnegative");
        }
        z += zero[w][i];
      }
      if (z > 1.0 + 1e-12)
      {
        throw std::invalid_argument("zero-score tie weights must sum to at most 1");
      }
    }
  }

  /// Share of merchant i when the tied merchants are `tied` (bitmask over merchants).
  double share(std::size_t w, std::size_t i, std::uint64_t tied, bool designer_tied) const
  {
    if (designer_tied)
    {
      return zero[w][i];
    }
    double      sum   = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < positive[w].size(); ++k)
    {
      if ((tied >> k) & 1U)
      {
        sum += positive[w][k];
        ++count;
      }
    }
    if (sum > 0.0)
    {
      return positive[w][i] / sum;
    }
    return 1.0 / static_cast<double>(count);
  }
};

enum class OpponentIntegration
{
  exact,           // closed-form band probabilities, enumerating tie patterns
  gauss_legendre,  // 64-node tensor rule per opponent (N <= 3)
  monte_carlo,     // seeded draws with common random numbers across own types
};

struct FiniteOptions
{
  std::size_t         grid      = 201;
  OpponentIntegration method    = OpponentIntegration::exact;
  std::size_t         mc_draws  = 200000;
  std::uint64_t       seed      = 1;
  unsigned            threads   = 1;
  double              attain_tol = 1e-7;
};

/// Scoring-rule mechanism for a finite set of customer profiles.
class FiniteMechanism
{
public:
  static constexpr double kTieTol = 1e-9;

  FiniteMechanism(FiniteDataset data, std::vector<ScoringRule> rules, TieBreakRule ties,
                  FiniteOptions opts = {})
    : data_(std::move(data))
    , rules_(std::move(rules))
    , ties_(std::move(ties))
    , opts_(opts)
  {
    data_.validate();
    if (rules_.size() != data_.merchants)
    {
      throw std::invalid_argument("need one scoring rule per merchant");
    }
    ties_.validate(data_.profile_count(), data_.merchants);
    if (data_.merchants > 60)
    {
      throw UnsupportedError("at most 60 merchants are supported");
    }
    if (opts_.method == OpponentIntegration::exact && data_.merchants > 12)
    {
      opts_.method = OpponentIntegration::monte_carlo;
    }
    if (opts_.method == OpponentIntegration::gauss_legendre && data_.merchants > 3)
    {
      opts_.method = OpponentIntegration::monte_carlo;
    }
    if (opts_.grid < 2)
    {
      throw std::invalid_argument("type grid needs at least two points");
    }
  }

  FiniteDataset const &dataset() const
  {
    return data_;
  }
  std::vector<ScoringRule> const &rules() const
  {
    return rules_;
  }
  TieBreakRule const &ties() const
  {
    return ties_;
  }
  FiniteOptions const &options() const
  {
    return opts_;
  }

  /// Ex-post allocation: [profile][k] mass given to merchant k, k = N is the untargeted sink.
  std::vector<std::vector<double>> allocate(std::vector<double> const &theta) const
  {
    std::size_t const N = data_.merchants;
    std::vector<double> g(N);
    for (std::size_t k = 0; k < N; ++k)
    {
      g[k] = rules_[k].score(theta[k]);
    }
    std::vector<std::vector<double>> x(data_.profile_count(), std::vector<double>(N + 1, 0.0));
    for (std::size_t w = 0; w < data_.profile_count(); ++w)
    {
      double const m = data_.profile_mass(w);
      double top = 0.0;
      for (std::size_t k = 0; k < N; ++k)
      {
        top = std::max(top, data_.profiles[w][k] * g[k]);
      }
      bool const designer_tied = top <= kTieTol;
      std::uint64_t tied = 0;
      for (std::size_t k = 0; k < N; ++k)
      {
        if (data_.profiles[w][k] * g[k] >= top - kTieTol)
        {
          tied |= std::uint64_t{1} << k;
        }
      }
      double given = 0.0;
      for (std::size_t k = 0; k < N; ++k)
      {
        if ((tied >> k) & 1U)
        {
          x[w][k] = m * ties_.share(w, k, tied, designer_tied);
          given += x[w][k];
        }
      }
      x[w][N] = std::max(0.0, m - given);
    }
    return x;
  }

  /// Expected clicks of merchant i with type t, over opponents' types.
  double interim_clicks(std::size_t i, double t) const
  {
    switch (opts_.method)
    {
    case OpponentIntegration::exact:
      return exact_clicks(i, rules_[i].score(t));
    case OpponentIntegration::gauss_legendre:
      return gauss_clicks(i, rules_[i].score(t));
    case OpponentIntegration::monte_carlo:
      return mc_clicks(i, rules_[i].score(t)).first;
    }
    return 0.0;
  }

  /// Own types at which the interim clicks of merchant i may jump.
  std::vector<double> jump_points(std::size_t i) const
  {
    auto const [lo, hi] = rules_[i].tie_interval();
    std::vector<double> out{lo, hi};
    for (std::size_t w = 0; w < data_.profile_count(); ++w)
    {
      double const oi = data_.profiles[w][i];
      if (oi <= 0.0)
      {
        continue;
      }
      for (std::size_t j = 0; j < data_.merchants; ++j)
      {
        if (j == i)
        {
          continue;
        }
        double const level = data_.profiles[w][j] * rules_[j].level() / oi;
        out.push_back(rules_[i].type_for_score(level));
      }
    }
    return out;
  }

  /// Interim curves, worst-off type and transfers of merchant i.
  MerchantInterim interim(std::size_t i) const
  {
    auto const grid = numerics::linspace(0.0, 1.0, opts_.grid);
    InterimSpec spec;
    spec.virtuals       = rules_[i].virtuals();
    spec.outside_option = data_.outside_option(i);
    spec.critical_type  = rules_[i].critical_type();
    spec.attain_tol     = opts_.attain_tol;
    if (opts_.method == OpponentIntegration::exact)
    {
      spec.clicks = [this, i](double t) { return exact_clicks(i, rules_[i].score(t)); };
      spec.jumps  = jump_points(i);
      return build_interim(spec, grid);
    }
    std::vector<double> s(grid.size());
    std::vector<double> se(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k)
    {
      double const g = rules_[i].score(grid[k]);
      if (opts_.method == OpponentIntegration::gauss_legendre)
      {
        s[k] = gauss_clicks(i, g);
      }
      else
      {
        std::tie(s[k], se[k]) = mc_clicks(i, g);
      }
    }
    spec.clicks = [grid, s](double t) { return numerics::interpolate(grid, s, t); };
    spec.jumps  = grid;
    auto out    = build_interim(spec, grid);
    out.click_se = se;
    return out;
  }

  InterimOutcome outcome() const
  {
    InterimOutcome out;
    for (std::size_t i = 0; i < data_.merchants; ++i)
    {
      out.merchants.push_back(interim(i));
    }
    return out;
  }

private:
  /// (strictly below, equal) probabilities of opponent j's weighted score against s.
  std::pair<double, double> opponent_state(std::size_t w, std::size_t j, double s) const
  {
    double const oj = data_.profiles[w][j];
    if (oj <= 0.0)
    {
      return s > kTieTol ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
    }
    auto const &r = rules_[j];
    if (std::abs(oj * r.level() - s) <= kTieTol)
    {
      return {r.prob_below(r.level()), r.band_mass()};
    }
    return {r.prob_below(s / oj), 0.0};
  }

  double exact_clicks(std::size_t i, double g) const
  {
    std::size_t const N = data_.merchants;
    double total = 0.0;
    for (std::size_t w = 0; w < data_.profile_count(); ++w)
    {
      double const oi = data_.profiles[w][i];
      double const m  = data_.profile_mass(w);
      if (oi <= 0.0 || m <= 0.0)
      {
        continue;
      }
      double const s = oi * g;
      bool const designer_tied = s <= kTieTol;
      // Distribution over which opponents tie, given nobody scores higher.
      std::vector<std::pair<std::uint64_t, double>> states{{std::uint64_t{1} << i, 1.0}};
      for (std::size_t j = 0; j < N && !states.empty(); ++j)
      {
        if (j == i)
        {
          continue;
        }
        auto const [below, equal] = opponent_state(w, j, s);
        std::vector<std::pair<std::uint64_t, double>> next;
        next.reserve(states.size() * 2);
        for (auto const &[mask, p] : states)
        {
          if (below > 0.0)
          {
            next.emplace_back(mask, p * below);
          }
          if (equal > 0.0)
          {
            next.emplace_back(mask | (std::uint64_t{1} << j), p * equal);
          }
        }
        states = std::move(next);
      }
      double share = 0.0;
      for (auto const &[mask, p] : states)
      {
        share += p * ties_.share(w, i, mask, designer_tied);
      }
      total += oi * m * share;
    }
    return total;
  }

  /// Clicks of merchant i with score g against fixed opponent scores.
  double realized_clicks(std::size_t i, double g, std::vector<double> const &opp) const
  {
    std::size_t const N = data_.merchants;
    double total = 0.0;
    for (std::size_t w = 0; w < data_.profile_count(); ++w)
    {
      double const oi = data_.profiles[w][i];
      if (oi <= 0.0)
      {
        continue;
      }
      double const s = oi * g;
      double top = s;
      for (std::size_t k = 0; k < N; ++k)
      {
        if (k != i)
        {
          top = std::max(top, data_.profiles[w][k] * opp[k]);
        }
      }
      if (s < top - kTieTol)
      {
        continue;
      }
      std::uint64_t tied = 0;
      for (std::size_t k = 0; k < N; ++k)
      {
        double const sk = k == i ? s : data_.profiles[w][k] * opp[k];
        if (sk >= top - kTieTol)
        {
          tied |= std::uint64_t{1} << k;
        }
      }
      total += oi * data_.profile_mass(w) * ties_.share(w, i, tied, top <= kTieTol);
    }
    return total;
  }

  double gauss_clicks(std::size_t i, double g) const
  {
    auto const rule = numerics::gauss_legendre_rule(0.0, 1.0);
    std::size_t const N = data_.merchants;
    std::vector<std::size_t> opps;
    for (std::size_t j = 0; j < N; ++j)
    {
      if (j != i)
      {
        opps.push_back(j);
      }
    }
    std::vector<double> opp(N, 0.0);
    std::size_t const n = rule.nodes.size();
    std::size_t total_nodes = 1;
    for (std::size_t k = 0; k < opps.size(); ++k)
    {
      total_nodes *= n;
    }
    double acc = 0.0;
    for (std::size_t idx = 0; idx < total_nodes; ++idx)
    {
      std::size_t rem = idx;
      double weight = 1.0;
      for (std::size_t j : opps)
      {
        std::size_t const q = rem % n;
        rem /= n;
        double const t = rule.nodes[q];
        opp[j] = rules_[j].score(t);
        weight *= rule.weights[q] * rules_[j].dist().pdf(t);
      }
      acc += weight * realized_clicks(i, g, opp);
    }
    return acc;
  }

  static constexpr std::size_t kChunk = 8192;

  /// Opponent scores for every draw, shared across own types (common random numbers).
  std::vector<std::vector<double>> const &mc_sample() const
  {
    if (!sample_.empty())
    {
      return sample_;
    }
    std::size_t const N      = data_.merchants;
    std::size_t const draws  = opts_.mc_draws;
    std::size_t const chunks = (draws + kChunk - 1) / kChunk;
    sample_.assign(draws, std::vector<double>(N, 0.0));
    for (std::size_t c = 0; c < chunks; ++c)
    {
      std::mt19937_64 eng(rng::stream_seed(opts_.seed, c));
      for (std::size_t d = c * kChunk; d < std::min(draws, (c + 1) * kChunk); ++d)
      {
        for (std::size_t k = 0; k < N; ++k)
        {
          sample_[d][k] = rules_[k].score(rules_[k].dist().quantile(rng::uniform01(eng)));
        }
      }
    }
    return sample_;
  }

  std::pair<double, double> mc_clicks(std::size_t i, double g) const
  {
    auto const &sample = mc_sample();
    std::size_t const draws  = sample.size();
    std::size_t const chunks = (draws + kChunk - 1) / kChunk;
    std::vector<double> sum(chunks, 0.0);
    std::vector<double> sq(chunks, 0.0);
    auto work = [&](std::size_t c0, std::size_t c1) {
      for (std::size_t c = c0; c < c1; ++c)
      {
        for (std::size_t d = c * kChunk; d < std::min(draws, (c + 1) * kChunk); ++d)
        {
          double const v = realized_clicks(i, g, sample[d]);
          sum[c] += v;
          sq[c] += v * v;
        }
      }
    };
    unsigned const T = std::max(1U, std::min<unsigned>(opts_.threads, static_cast<unsigned>(chunks)));
    if (T == 1)
    {
      work(0, chunks);
    }
    else
    {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < T; ++t)
      {
        pool.emplace_back(work, chunks * t / T, chunks * (t + 1) / T);
      }
      for (auto &th : pool)
      {
        th.join();
      }
    }
    double s = 0.0;
    double q = 0.0;
    for (std::size_t c = 0; c < chunks; ++c)
    {
      s += sum[c];
      q += sq[c];
    }
    double const n    = static_cast<double>(draws);
    double const mean = s / n;
    double const var  = std::max(0.0, q / n - mean * mean);
    return {mean, std::sqrt(var / n)};
  }

  FiniteDataset                            data_;
  std::vector<ScoringRule>                 rules_;
  TieBreakRule                             ties_;
  FiniteOptions                            opts_;
  mutable std::vector<std::vector<double>> sample_;
};

/// Same mechanism with zero-mass profiles removed (they never affect clicks or payoffs).
inline FiniteMechanism without_empty_profiles(FiniteMechanism const &m)
{
  FiniteDataset d{m.dataset().merchants, {}, {}};
  TieBreakRule  t;
  for (std::size_t w = 0; w < m.dataset().profile_count(); ++w)
  {
    if (m.dataset().profile_mass(w) > 0.0)
    {
      d.profiles.push_back(m.dataset().profiles[w]);
      d.mass.push_back(m.dataset().mass[w]);
      t.positive.push_back(m.ties().positive[w]);
      t.zero.push_back(m.ties().zero[w]);
    }
  }
  return {std::move(d), m.rules(), std::move(t), m.options()};
}

/// Type-independent allocation that hands every merchant its own customers, with no transfers.
inline InterimOutcome baseline_outcome(FiniteDataset const &data,
                                       std::vector<WeightedVirtual> const &virtuals,
                                       std::size_t grid = 201)
{
  data.validate();
  auto const pts = numerics::linspace(0.0, 1.0, grid);
  InterimOutcome out;
  for (std::size_t i = 0; i < data.merchants; ++i)
  {
    InterimSpec spec;
    spec.virtuals       = virtuals.at(i);
    spec.outside_option = data.outside_option(i);
    double const a      = spec.outside_option;
    spec.clicks         = [a](double) { return a; };
    spec.critical_type  = 0.0;
    out.merchants.push_back(build_interim(spec, pts));
  }
  return out;
}

/// Baseline allocation per profile: each merchant keeps the mass it holds.
inline std::vector<std::vector<double>> baseline_allocation(FiniteDataset const &data)
{
  std::vector<std::vector<double>> x(data.profile_count(),
                                     std::vector<double>(data.merchants + 1, 0.0));
  for (std::size_t w = 0; w < data.profile_count(); ++w)
  {
    for (std::size_t i = 0; i < data.merchants; ++i)
    {
      x[w][i] = data.mass[w][i];
    }
  }
  return x;
}

}  // namespace datashare

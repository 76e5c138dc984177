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

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace datashare {

/// Raised when an iterative solver fails to meet its tolerance.
class ConvergenceError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Raised for inputs that are well formed but outside the supported model class.
class UnsupportedError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

namespace numerics {

/// Smallest x in [lo, hi] with pred(x) true, assuming pred is monotone (false then true).
template <typename Pred>
double bisect_threshold(Pred &&pred, double lo, double hi, double tol = 1e-12,
                        int max_iter = 200)
{
  if (pred(lo))
  {
    return lo;
  }
  for (int it = 0; it < max_iter && hi - lo > tol; ++it)
  {
    double const mid = 0.5 * (lo + hi);
    if (pred(mid))
    {
      hi = mid;
    }
    else
    {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Root of an increasing function on [lo, hi]; g(lo) <= 0 <= g(hi) is assumed.
template <typename F>
double bisect_increasing(F &&g, double lo, double hi, double tol, int max_iter = 200)
{
  for (int it = 0; it < max_iter && hi - lo > tol; ++it)
  {
    double const mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
    {
      lo = mid;
    }
    else
    {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace detail {

template <typename F>
double simpson_step(F &f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth, int forced)
{
  double const m   = 0.5 * (a + b);
  double const lm  = 0.5 * (a + m);
  double const rm  = 0.5 * (m + b);
  double const flm = f(lm);
  double const frm = f(rm);
  double const left  = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double const right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double const diff  = left + right - whole;
  if (depth <= 0 || (forced <= 0 && std::abs(diff) <= 15.0 * tol))
  {
    return left + right + diff / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, forced - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, forced - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b]. The first `min_depth` levels are always
/// subdivided so that an unresolved kink cannot pass the error test by coincidence.
template <typename F>
double adaptive_simpson(F &&f, double a, double b, double tol = 1e-9, int max_depth = 40, int min_depth = 4)
{
  if (b <= a)
  {
    return 0.0;
  }
  double const fa = f(a);
  double const fb = f(b);
  double const fm = f(0.5 * (a + b));
  double const whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth, min_depth);
}

/// Sorted, deduplicated breakpoints of [a, b] including both ends.
inline std::vector<double> segment_points(double a, double b, std::vector<double> cuts)
{
  std::vector<double> pts{a, b};
  for (double c : cuts)
  {
    if (c > a && c < b)
    {
      pts.push_back(c);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double x, double y) { return std::abs(x - y) < 1e-14; }),
            pts.end());
  return pts;
}

/// Adaptive Simpson over [a, b], restarted at each interior breakpoint.
template <typename F>
double piecewise_simpson(F &&f, double a, double b, std::vector<double> const &cuts,
                         double tol = 1e-9)
{
  auto const pts = segment_points(a, b, cuts);
  double total = 0.0;
  double const share = tol / static_cast<double>(pts.size());
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
  {
    total += adaptive_simpson(f, pts[k], pts[k + 1], share);
  }
  return total;
}

/// 64-point Gauss-Legendre rule applied on every segment between breakpoints.
template <typename F>
double piecewise_gauss(F &&f, double a, double b, std::vector<double> const &cuts)
{
  auto const pts = segment_points(a, b, cuts);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
  {
    total += boost::math::quadrature::gauss<double, 64>::integrate(f, pts[k], pts[k + 1]);
  }
  return total;
}

/// Nodes and weights of the 64-point Gauss-Legendre rule mapped to [a, b].
struct QuadratureRule
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline QuadratureRule gauss_legendre_rule(double a, double b)
{
  using rule = boost::math::quadrature::gauss<double, 64>;
  auto const &x = rule::abscissa();
  auto const &w = rule::weights();
  double const half = 0.5 * (b - a);
  double const mid  = 0.5 * (a + b);
  QuadratureRule out;
  for (std::size_t k = 0; k < x.size(); ++k)
  {
    out.nodes.push_back(mid - half * x[k]);
    out.weights.push_back(half * w[k]);
    if (x[k] != 0.0)
    {
      out.nodes.push_back(mid + half * x[k]);
      out.weights.push_back(half * w[k]);
    }
  }
  return out;
}

/// Gauss-Legendre rule on every segment between breakpoints, concatenated.
inline QuadratureRule piecewise_rule(double a, double b, std::vector<double> const &cuts)
{
  auto const pts = segment_points(a, b, cuts);
  QuadratureRule out;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
  {
    auto piece = gauss_legendre_rule(pts[k], pts[k + 1]);
    out.nodes.insert(out.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    out.weights.insert(out.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  return out;
}

/// Evenly spaced grid of n points on [a, b].
inline std::vector<double> linspace(double a, double b, std::size_t n)
{
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
  {
    out[k] = n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return out;
}

/// Linear interpolation of tabulated (xs, ys) at x, clamped to the table ends.
inline double interpolate(std::vector<double> const &xs, std::vector<double> const &ys, double x)
{
  if (x <= xs.front())
  {
    return ys.front();
  }
  if (x >= xs.back())
  {
    return ys.back();
  }
  auto const it = std::upper_bound(xs.begin(), xs.end(), x);
  auto const k  = static_cast<std::size_t>(it - xs.begin());
  double const t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
  return ys[k - 1] + t * (ys[k] - ys[k - 1]);
}

}  // namespace numerics

namespace rng {

/// SplitMix64 step, used to derive independent stream seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream)
{
  return splitmix64(master ^ splitmix64(stream + 0x5851f42d4c957f2dULL));
}

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
template <typename Engine>
double uniform01(Engine &eng)
{
  return static_cast<double>(eng() >> 11U) * 0x1.0p-53;
}

}  // namespace rng

}  // namespace datashare

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

// Strict reader for JSON experiment configs: every key must be consumed, and every error
// names the offending field path.

#include <datashare/dist.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace datashare::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct SchemaError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// View of one JSON object that records which keys were read.
class Node
{
public:
  Node(json const &j, std::string path)
    : j_(&j)
    , path_(std::move(path))
  {
    if (!j.is_object())
    {
      throw SchemaError(path_ + ": expected an object");
    }
  }

  std::string const &path() const
  {
    return path_;
  }

  bool has(std::string const &key) const
  {
    return j_->contains(key);
  }

  Node object(std::string const &key)
  {
    return Node(at(key), child(key));
  }

  std::optional<Node> optional_object(std::string const &key)
  {
    if (!has(key))
    {
      return std::nullopt;
    }
    return object(key);
  }

  json const &raw(std::string const &key)
  {
    return at(key);
  }

  double number(std::string const &key)
  {
    return as_number(at(key), child(key));
  }

  double number(std::string const &key, double fallback)
  {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t count(std::string const &key)
  {
    return as_count(at(key), child(key));
  }

  std::uint64_t count(std::string const &key, std::uint64_t fallback)
  {
    return has(key) ? count(key) : fallback;
  }

  bool flag(std::string const &key, bool fallback)
  {
    if (!has(key))
    {
      return fallback;
    }
    auto const &v = at(key);
    if (!v.is_boolean())
    {
      throw SchemaError(child(key) + ": expected true or false");
    }
    return v.get<bool>();
  }

  std::string text(std::string const &key)
  {
    auto const &v = at(key);
    if (!v.is_string())
    {
      throw SchemaError(child(key) + ": expected a string");
    }
    return v.get<std::string>();
  }

  std::string text(std::string const &key, std::string const &fallback)
  {
    return has(key) ? text(key) : fallback;
  }

  std::string choice(std::string const &key, std::vector<std::string> const &allowed, std::string const &fallback)
  {
    std::string const v = text(key, fallback);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
    {
      std::string list;
      for (auto const &a : allowed)
      {
        list += (list.empty() ? "" : ", ") + a;
      }
      throw SchemaError(child(key) + ": must be one of " + list);
    }
    return v;
  }

  std::vector<double> numbers(std::string const &key)
  {
    auto const &v = at(key);
    if (!v.is_array())
    {
      throw SchemaError(child(key) + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k)
    {
      out.push_back(as_number(v[k], child(key) + "[" + std::to_string(k) + "]"));
    }
    return out;
  }

  std::vector<std::uint64_t> counts(std::string const &key)
  {
    auto const &v = at(key);
    if (!v.is_array())
    {
      throw SchemaError(child(key) + ": expected an array of integers");
    }
    std::vector<std::uint64_t> out;
    for (std::size_t k = 0; k < v.size(); ++k)
    {
      out.push_back(as_count(v[k], child(key) + "[" + std::to_string(k) + "]"));
    }
    return out;
  }

  std::vector<std::vector<double>> matrix(std::string const &key)
  {
    auto const &v = at(key);
    if (!v.is_array())
    {
      throw SchemaError(child(key) + ": expected an array of arrays");
    }
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < v.size(); ++r)
    {
      std::string const row = child(key) + "[" + std::to_string(r) + "]";
      if (!v[r].is_array())
      {
        throw SchemaError(row + ": expected an array of numbers");
      }
      out.emplace_back();
      for (std::size_t c = 0; c < v[r].size(); ++c)
      {
        out.back().push_back(as_number(v[r][c], row + "[" + std::to_string(c) + "]"));
      }
    }
    return out;
  }

  /// Reject keys that were never read.
  void finish() const
  {
    for (auto it = j_->begin(); it != j_->end(); ++it)
    {
      if (!used_.count(it.key()))
      {
        throw SchemaError(child(it.key()) + ": unknown key");
      }
    }
  }

  std::string child(std::string const &key) const
  {
    return path_ + "." + key;
  }

private:
  json const &at(std::string const &key)
  {
    if (!j_->contains(key))
    {
      throw SchemaError(child(key) + ": missing required key");
    }
    used_.insert(key);
    return (*j_)[key];
  }

  static double as_number(json const &v, std::string const &where)
  {
    if (!v.is_number())
    {
      throw SchemaError(where + ": expected a number");
    }
    double const x = v.get<double>();
    if (!std::isfinite(x))
    {
      throw SchemaError(where + ": expected a finite number");
    }
    return x;
  }

  static std::uint64_t as_count(json const &v, std::string const &where)
  {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    {
      throw SchemaError(where + ": expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  json const           *j_;
  std::string           path_;
  std::set<std::string> used_;
};

/// Run f and report library validation errors against the given field path.
template <typename F>
auto at_path(std::string const &path, F &&f) -> decltype(f())
{
  try
  {
    return f();
  }
  catch (std::invalid_argument const &e)
  {
    throw SchemaError(path + ": " + e.what());
  }
  catch (std::domain_error const &e)
  {
    throw SchemaError(path + ": " + e.what());
  }
}

/// {"law": "uniform", "lo": 0, "hi": 1} | {"law": "beta", "a": 2, "b": 3} |
/// {"law": "piecewise", "x": [...], "cdf": [...]}
inline Law read_law(Node n)
{
  std::string const kind = n.choice("law", {"uniform", "beta", "piecewise"}, "uniform");
  Law out = Law::uniform(0.0, 1.0);
  if (kind == "uniform")
  {
    double const lo = n.number("lo", 0.0);
    double const hi = n.number("hi", 1.0);
    out = at_path(n.path(), [&] { return Law::uniform(lo, hi); });
  }
  else if (kind == "beta")
  {
    double const a = n.number("a");
    double const b = n.number("b");
    out = at_path(n.path(), [&] { return Law::beta(a, b); });
  }
  else
  {
    auto const x   = n.numbers("x");
    auto const cdf = n.numbers("cdf");
    out = at_path(n.path(), [&] { return Law::piecewise(x, cdf); });
  }
  n.finish();
  return out;
}

inline TypeDistribution read_types(Node n)
{
  std::string const path = n.path();
  Law const law = read_law(std::move(n));
  return at_path(path, [&] { return TypeDistribution(law); });
}

inline WelfareWeight read_weights(Node n)
{
  double const v = n.number("value", 0.0);
  double const c = n.number("clicks", 0.0);
  double const r = n.number("revenue", 1.0);
  n.finish();
  return at_path(n.path(), [&] { return WelfareWeight(v, c, r); });
}

/// {"from": a, "to": b, "steps": n} or {"values": [...]}
inline std::vector<double> read_axis(Node n)
{
  std::vector<double> out;
  if (n.has("values"))
  {
    out = n.numbers("values");
  }
  else
  {
    double const a = n.number("from");
    double const b = n.number("to");
    auto const k   = n.count("steps");
    if (k < 1)
    {
      throw SchemaError(n.child("steps") + ": need at least one step");
    }
    out = k == 1 ? std::vector<double>{a} : numerics::linspace(a, b, k);
  }
  n.finish();
  if (out.empty())
  {
    throw SchemaError(n.path() + ": axis has no values");
  }
  return out;
}

}  // namespace datashare::cli

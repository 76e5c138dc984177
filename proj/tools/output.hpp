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

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace datashare::cli {

struct OutputError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string const &bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// One table cell: integers and booleans print as integers, floating values with %.12g.
struct Cell
{
  std::variant<double, std::int64_t, std::string> v;

  template <typename T>
    requires std::is_integral_v<T>
  Cell(T x)
    : v(static_cast<std::int64_t>(x))
  {}
  Cell(double x)
    : v(x)
  {}
  Cell(std::string s)
    : v(std::move(s))
  {}
  Cell(char const *s)
    : v(std::string(s))
  {}
};

/// Comma-separated table with a header row; numbers printed with %.12g.
class Table
{
public:
  explicit Table(std::vector<std::string> header)
    : header_(std::move(header))
  {}

  void add(std::vector<Cell> row)
  {
    if (row.size() != header_.size())
    {
      throw std::logic_error("row width does not match the header");
    }
    rows_.push_back(std::move(row));
  }

  std::string str() const
  {
    std::string out;
    append_row(out, header_);
    for (auto const &row : rows_)
    {
      std::vector<std::string> cells;
      for (auto const &c : row)
      {
        cells.push_back(format(c));
      }
      append_row(out, cells);
    }
    return out;
  }

  std::size_t size() const
  {
    return rows_.size();
  }

private:
  static std::string format(Cell const &c)
  {
    if (auto const *d = std::get_if<double>(&c.v))
    {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", *d);
      return buf;
    }
    if (auto const *i = std::get_if<std::int64_t>(&c.v))
    {
      return std::to_string(*i);
    }
    return std::get<std::string>(c.v);
  }

  static void append_row(std::string &out, std::vector<std::string> const &cells)
  {
    for (std::size_t k = 0; k < cells.size(); ++k)
    {
      if (k > 0)
      {
        out += ',';
      }
      bool const quote = cells[k].find_first_of(",\"\n") != std::string::npos;
      if (quote)
      {
        out += '"';
        for (char ch : cells[k])
        {
          out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        }
        out += '"';
      }
      else
      {
        out += cells[k];
      }
    }
    out += '\n';
  }

  std::vector<std::string>       header_;
  std::vector<std::vector<Cell>> rows_;
};

/// Writes artifacts into one directory and remembers them for the manifest.
class OutputDir
{
public:
  explicit OutputDir(std::filesystem::path dir)
    : dir_(std::move(dir))
  {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
    {
      throw OutputError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }
  }

  void write(std::string const &name, std::string const &contents)
  {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f)
    {
      throw OutputError("cannot write " + (dir_ / name).string());
    }
    f << contents;
    files_.push_back(name);
  }

  void write(std::string const &name, Table const &t)
  {
    write(name, t.str());
  }

  std::vector<std::string> const &files() const
  {
    return files_;
  }

  std::filesystem::path const &path() const
  {
    return dir_;
  }

private:
  std::filesystem::path    dir_;
  std::vector<std::string> files_;
};

}  // namespace datashare::cli

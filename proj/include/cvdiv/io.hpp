// SPDX-License-Identifier: Apache-2.0
//
// cvdiv: diversity-assisted Earth-to-satellite CV quantum link simulation
// Copyright (C) 2026 The cvdiv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Text I/O: atomic file replacement, number formatting and the
// transmissivity sample formats.

#include "cvdiv/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace cvdiv {

/// Writes to a sibling temporary file and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move result into " + path.string() + ": " + ec.message());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Locale-independent shortest-ish decimal form.
inline std::string format_number(double x, int digits = 12) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

/// Transmissivities read from a sample file. Single-column files give one
/// column; CSV files with header T1,...,TM give M columns.
struct TransmissivityTable {
  std::vector<std::vector<double>> columns;
  bool multi_column = false;
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(s);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

inline double parse_transmissivity(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw IoError(where + ": not a number: '" + s + "'");
  }
  if (used != s.size()) throw IoError(where + ": trailing characters in '" + s + "'");
  if (!(v > 0.0 && v <= 1.0)) throw IoError(where + ": transmissivity " + s + " outside (0, 1]");
  return v;
}
}  // namespace detail

inline TransmissivityTable parse_transmissivity_text(const std::string& text, const std::string& name = "input") {
  TransmissivityTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = name + ":" + std::to_string(lineno);
    if (!header_seen) {
      header_seen = true;
      if (t[0] == 'T' || t[0] == 't') {
        const auto cells = detail::split_commas(t);
        for (std::size_t j = 0; j < cells.size(); ++j)
          if (cells[j] != "T" + std::to_string(j + 1))
            throw IoError(where + ": expected header T1,...,TM, got '" + t + "'");
        table.multi_column = true;
        table.columns.resize(cells.size());
        continue;
      }
      table.columns.resize(1);
    }
    if (table.multi_column) {
      const auto cells = detail::split_commas(t);
      if (cells.size() != table.columns.size())
        throw IoError(where + ": expected " + std::to_string(table.columns.size()) + " columns");
      for (std::size_t j = 0; j < cells.size(); ++j)
        table.columns[j].push_back(detail::parse_transmissivity(cells[j], where));
    } else {
      table.columns[0].push_back(detail::parse_transmissivity(t, where));
    }
  }
  if (table.columns.empty() || table.columns[0].empty()) throw IoError(name + ": no transmissivity samples");
  return table;
}

inline TransmissivityTable read_transmissivity_file(const std::filesystem::path& path) {
  return parse_transmissivity_text(read_text_file(path), path.string());
}

/// One sample per line, full precision, each comment line prefixed by '#'.
inline std::string format_transmissivity_samples(const std::vector<double>& samples,
                                                 const std::vector<std::string>& comments = {}) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  for (double t : samples) out += format_number(t, 17) + "\n";
  return out;
}

}  // namespace cvdiv

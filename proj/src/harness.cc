// Copyright 2026 The caplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "caplab/harness.h"

#include <algorithm>
#include <future>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace caplab {
namespace {

using Json = nlohmann::ordered_json;

std::vector<std::string> AttackColumns() {
  std::vector<std::string> out;
  for (AttackId id : kAllAttacks) out.emplace_back(AttackIdName(id));
  return out;
}

Outcome RunCell(const RegistryEntry& entry, AttackId attack,
                const MatrixOptions& options) {
  Sandbox sandbox(entry, SandboxOptions{.heap_size = options.heap_size,
                                        .bounds_mode = options.bounds_mode});
  return RunAttack(attack, sandbox.allocator()).outcome;
}

std::vector<std::string> SplitLines(std::string_view text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> SplitCommas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

const ConformanceMatrix& ExpectedMatrix() {
  static const ConformanceMatrix expected = [] {
    constexpr Outcome S = Outcome::kSucceeds;
    constexpr Outcome T = Outcome::kThwarted;
    constexpr Outcome NA = Outcome::kNotApplicable;
    ConformanceMatrix m;
    m.rows.assign(kCanonicalAllocators.begin(), kCanonicalAllocators.end());
    m.columns = AttackColumns();
    m.cells = {
        {S, T, S, S, S},   // bump-alloc-cheri
        {S, NA, S, T, S},  // bump-alloc-nocheri
        {S, T, T, S, S},   // dlmalloc-cheribuild
        {S, T, T, S, T},   // jemalloc
        {S, S, T, S, T},   // libmalloc-simple
        {S, S, S, NA, S},  // snmalloc-cheribuild
        {S, S, S, S, S},   // snmalloc-repo
    };
    return m;
  }();
  return expected;
}

ConformanceMatrix RunMatrix(const Registry& registry,
                            const MatrixOptions& options) {
  if (!registry.IsCanonical()) {
    throw std::invalid_argument(
        "registry must hold exactly the seven canonical allocators");
  }
  for (const auto& name : options.only) {
    if (registry.Find(name) == nullptr) {
      throw std::invalid_argument("unknown allocator: " + name);
    }
  }

  ConformanceMatrix m;
  m.columns = AttackColumns();
  std::vector<const RegistryEntry*> selected;
  for (const auto& entry : registry.entries()) {
    const auto& name = entry.traits.name;
    if (options.only.empty() ||
        std::find(options.only.begin(), options.only.end(), name) !=
            options.only.end()) {
      selected.push_back(&entry);
      m.rows.push_back(name);
    }
  }
  m.cells.assign(selected.size(),
                 std::vector<Outcome>(kAllAttacks.size(), Outcome::kThwarted));

  if (!options.parallel) {
    for (size_t r = 0; r < selected.size(); ++r) {
      for (size_t c = 0; c < kAllAttacks.size(); ++c) {
        m.cells[r][c] = RunCell(*selected[r], kAllAttacks[c], options);
      }
    }
    return m;
  }

  std::vector<std::vector<std::future<Outcome>>> pending(selected.size());
  for (size_t r = 0; r < selected.size(); ++r) {
    for (AttackId attack : kAllAttacks) {
      pending[r].push_back(std::async(std::launch::async, RunCell,
                                      std::cref(*selected[r]), attack,
                                      std::cref(options)));
    }
  }
  for (size_t r = 0; r < selected.size(); ++r) {
    for (size_t c = 0; c < kAllAttacks.size(); ++c) {
      m.cells[r][c] = pending[r][c].get();
    }
  }
  return m;
}

std::vector<CellDiff> DiffMatrix(const ConformanceMatrix& actual,
                                 const ConformanceMatrix& expected) {
  if (actual.rows != expected.rows || actual.columns != expected.columns) {
    throw std::invalid_argument("matrix dimensions or labels differ");
  }
  std::vector<CellDiff> out;
  for (size_t r = 0; r < actual.rows.size(); ++r) {
    for (size_t c = 0; c < actual.columns.size(); ++c) {
      if (actual.at(r, c) != expected.at(r, c)) {
        out.push_back(CellDiff{actual.rows[r], actual.columns[c],
                               actual.at(r, c), expected.at(r, c)});
      }
    }
  }
  return out;
}

std::string RenderMatrix(const ConformanceMatrix& m, MatrixFormat format) {
  std::string out;
  switch (format) {
    case MatrixFormat::kText: {
      size_t width = 0;
      for (const auto& name : m.rows) width = std::max(width, name.size());
      for (size_t r = 0; r < m.rows.size(); ++r) {
        out += m.rows[r];
        out.append(width - m.rows[r].size() + 2, ' ');
        for (size_t c = 0; c < m.columns.size(); ++c) {
          if (c > 0) out += ' ';
          out += OutcomeGlyph(m.at(r, c));
        }
        out += '\n';
      }
      break;
    }
    case MatrixFormat::kCsv: {
      out += "allocator";
      for (const auto& col : m.columns) out += "," + col;
      out += '\n';
      for (size_t r = 0; r < m.rows.size(); ++r) {
        out += m.rows[r];
        for (size_t c = 0; c < m.columns.size(); ++c) {
          out += ",";
          out += OutcomeToken(m.at(r, c));
        }
        out += '\n';
      }
      break;
    }
    case MatrixFormat::kJson: {
      Json doc = Json::object();
      for (size_t r = 0; r < m.rows.size(); ++r) {
        Json row = Json::array();
        for (size_t c = 0; c < m.columns.size(); ++c) {
          row.push_back(std::string(OutcomeJsonName(m.at(r, c))));
        }
        doc[m.rows[r]] = std::move(row);
      }
      out = doc.dump(2) + "\n";
      break;
    }
  }
  return out;
}

ConformanceMatrix ParseMatrixCsv(std::string_view text) {
  auto lines = SplitLines(text);
  if (lines.empty()) throw std::invalid_argument("empty csv");
  auto header = SplitCommas(lines[0]);
  if (header.empty() || header[0] != "allocator") {
    throw std::invalid_argument("csv header must start with 'allocator'");
  }
  ConformanceMatrix m;
  m.columns.assign(header.begin() + 1, header.end());
  for (size_t i = 1; i < lines.size(); ++i) {
    auto fields = SplitCommas(lines[i]);
    if (fields.size() != header.size()) {
      throw std::invalid_argument("csv row has wrong field count: " + lines[i]);
    }
    m.rows.push_back(fields[0]);
    std::vector<Outcome> row;
    for (size_t c = 1; c < fields.size(); ++c) {
      auto o = ParseOutcomeToken(fields[c]);
      if (!o) throw std::invalid_argument("bad outcome token: " + fields[c]);
      row.push_back(*o);
    }
    m.cells.push_back(std::move(row));
  }
  return m;
}

ConformanceMatrix ParseMatrixJson(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("bad json: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("json matrix must be an object");
  ConformanceMatrix m;
  m.columns = AttackColumns();
  for (const auto& [name, row] : doc.items()) {
    if (!row.is_array() || row.size() != m.columns.size()) {
      throw std::invalid_argument("json row must have five outcomes: " + name);
    }
    std::vector<Outcome> cells;
    for (const auto& cell : row) {
      auto o = cell.is_string() ? ParseOutcomeJsonName(cell.get<std::string>())
                                : std::nullopt;
      if (!o) throw std::invalid_argument("bad outcome in row " + name);
      cells.push_back(*o);
    }
    m.rows.push_back(name);
    m.cells.push_back(std::move(cells));
  }
  return m;
}

}  // namespace caplab

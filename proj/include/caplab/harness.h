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

// Runs every attack against every allocator and compares the grid with the
// expected outcomes.

#ifndef CAPLAB_HARNESS_H_
#define CAPLAB_HARNESS_H_

#include <string>
#include <string_view>
#include <vector>

#include "caplab/allocator.h"
#include "caplab/attacks.h"

namespace caplab {

struct ConformanceMatrix {
  std::vector<std::string> rows;     // allocator names
  std::vector<std::string> columns;  // attack ids
  std::vector<std::vector<Outcome>> cells;

  const Outcome& at(size_t row, size_t col) const { return cells.at(row).at(col); }
  Outcome& at(size_t row, size_t col) { return cells.at(row).at(col); }

  friend bool operator==(const ConformanceMatrix&,
                         const ConformanceMatrix&) = default;
};

// The 7x5 table every run is checked against.
const ConformanceMatrix& ExpectedMatrix();

struct MatrixOptions {
  bool parallel = true;
  BoundsMode bounds_mode = BoundsMode::kExact;
  uint32_t heap_size = kDefaultHeapSize;
  // Restrict to these allocators (kept in registry order). Empty means all.
  std::vector<std::string> only;
};

// Each cell runs on its own fresh sandbox. Throws std::invalid_argument if
// the registry is not exactly the canonical seven or `only` names an
// unknown allocator.
ConformanceMatrix RunMatrix(const Registry& registry,
                            const MatrixOptions& options = {});

struct CellDiff {
  std::string row;
  std::string column;
  Outcome actual;
  Outcome expected;

  friend bool operator==(const CellDiff&, const CellDiff&) = default;
};

// Row-major. Throws std::invalid_argument unless both matrices have the
// same row and column labels.
std::vector<CellDiff> DiffMatrix(const ConformanceMatrix& actual,
                                 const ConformanceMatrix& expected);

enum class MatrixFormat { kText, kCsv, kJson };

std::string RenderMatrix(const ConformanceMatrix& m, MatrixFormat format);

// Inverses of the csv and json renderings. Throw std::invalid_argument on
// malformed input.
ConformanceMatrix ParseMatrixCsv(std::string_view text);
ConformanceMatrix ParseMatrixJson(std::string_view text);

}  // namespace caplab

#endif  // CAPLAB_HARNESS_H_

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

#ifndef CAPLAB_BENCH_H_
#define CAPLAB_BENCH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "caplab/allocator.h"

namespace caplab {

enum class WorkloadKind { kChurn, kRandSize, kReallocRamp };

std::string_view WorkloadKindName(WorkloadKind kind);
std::optional<WorkloadKind> ParseWorkloadKind(std::string_view s);

struct Workload {
  WorkloadKind kind = WorkloadKind::kChurn;
  uint32_t op_count = 1000;
  // churn block size.
  uint32_t size = 32;
  // randsize parameters.
  uint64_t seed = 1;
  uint32_t min_size = 1;
  uint32_t max_size = 256;

  // e.g. "churn;ops=1000;size=32". Throws std::invalid_argument when the
  // workload violates op_count >= 1, size >= 1 or 1 <= min <= max.
  std::string Descriptor() const;
  void Validate() const;
};

// The xorshift64 generator used by randsize. A zero seed is replaced by a
// fixed nonzero constant.
class XorShift64 {
 public:
  explicit XorShift64(uint64_t seed);
  uint64_t Next();

 private:
  uint64_t state_;
};

struct BenchResult {
  std::string allocator;
  std::string workload;
  uint64_t ops_completed = 0;
  uint64_t elapsed_ns = 0;
  uint64_t peak_live_bytes = 0;
  uint64_t peak_touched_bytes = 0;
  uint64_t oom_count = 0;

  // Equality on everything except elapsed_ns.
  bool SameCounters(const BenchResult& other) const;
};

// `alloc` must be fresh. Out-of-memory is counted, never fatal.
// Throws std::logic_error if the allocator rejects a well-formed request
// for any other reason.
//
//   churn:       op_count mallocs of `size`; once 64 blocks are live the
//                oldest is freed after each new malloc.
//   randsize:    op_count steps, each a malloc of a uniform size in
//                [min_size, max_size] or a FIFO free with equal odds (always
//                malloc when nothing is live).
//   reallocramp: malloc(16), then realloc to 32, 48, ... for the remaining
//                op_count - 1 steps.
BenchResult RunWorkload(Allocator& alloc, const Workload& workload);

std::string EmitBenchCsv(std::span<const BenchResult> results);
// Throws std::invalid_argument on malformed input.
std::vector<BenchResult> ParseBenchCsv(std::string_view text);

}  // namespace caplab

#endif  // CAPLAB_BENCH_H_

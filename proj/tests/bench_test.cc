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

#include "caplab/bench.h"

#include <algorithm>
#include <stdexcept>

#include "gtest/gtest.h"

namespace caplab {
namespace {

BenchResult RunOn(std::string_view allocator, const Workload& w,
                  uint32_t heap_size = kDefaultHeapSize) {
  Sandbox s = MakeSandbox(allocator, {.heap_size = heap_size});
  return RunWorkload(s.allocator(), w);
}

Workload Churn(uint32_t ops, uint32_t size) {
  return Workload{.kind = WorkloadKind::kChurn, .op_count = ops, .size = size};
}

TEST(XorShiftTest, KnownSequence) {
  XorShift64 rng(1);
  // x ^= x << 13; x ^= x >> 7; x ^= x << 17 starting from 1.
  uint64_t x = 1;
  for (int i = 0; i < 5; ++i) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    EXPECT_EQ(rng.Next(), x);
  }
  EXPECT_EQ(XorShift64(1).Next(), 1082269761u);
  EXPECT_NE(XorShift64(0).Next(), 0u);
}

TEST(WorkloadTest, DescriptorsAndValidation) {
  EXPECT_EQ(Churn(1000, 32).Descriptor(), "churn;ops=1000;size=32");
  Workload rs{.kind = WorkloadKind::kRandSize, .op_count = 10, .seed = 9,
              .min_size = 4, .max_size = 64};
  EXPECT_EQ(rs.Descriptor(), "randsize;ops=10;seed=9;min=4;max=64");
  EXPECT_EQ((Workload{.kind = WorkloadKind::kReallocRamp, .op_count = 5}).Descriptor(),
            "reallocramp;ops=5");
  EXPECT_THROW(Churn(0, 32).Validate(), std::invalid_argument);
  EXPECT_THROW(Churn(10, 0).Validate(), std::invalid_argument);
  rs.min_size = 100;
  EXPECT_THROW(rs.Validate(), std::invalid_argument);
  EXPECT_EQ(ParseWorkloadKind("reallocramp"), WorkloadKind::kReallocRamp);
  EXPECT_EQ(ParseWorkloadKind("ramp"), std::nullopt);
}

TEST(ChurnTest, BumpTouchesEveryByte) {
  auto r = RunOn("bump-alloc-cheri", Churn(1000, 32));
  EXPECT_EQ(r.ops_completed, 1000u);
  EXPECT_EQ(r.peak_touched_bytes, 32000u);
  EXPECT_EQ(r.peak_live_bytes, 65u * 32);
  EXPECT_EQ(r.oom_count, 0u);
}

TEST(ChurnTest, FreelistReusesWindow) {
  // At most 65 chunks of header + 32 bytes are ever carved.
  auto r = RunOn("dlmalloc-cheribuild", Churn(1000, 32));
  EXPECT_EQ(r.peak_touched_bytes, 65u * 48);
  EXPECT_EQ(r.ops_completed, 1000u);
}

TEST(ChurnTest, SlabStaysInOneSlab) {
  auto r = RunOn("snmalloc-repo", Churn(1000, 32));
  EXPECT_EQ(r.peak_touched_bytes, 4096u);
}

TEST(ChurnTest, OutOfMemoryIsCounted) {
  auto r = RunOn("bump-alloc-cheri", Churn(100, 64), 4096);
  EXPECT_EQ(r.ops_completed, 64u);
  EXPECT_EQ(r.oom_count, 36u);
}

TEST(RandSizeTest, DeterministicPerSeed) {
  Workload w{.kind = WorkloadKind::kRandSize, .op_count = 2000, .seed = 42,
             .min_size = 1, .max_size = 256};
  for (std::string_view name : {"bump-alloc-nocheri", "jemalloc", "snmalloc-cheribuild"}) {
    auto a = RunOn(name, w);
    auto b = RunOn(name, w);
    EXPECT_TRUE(a.SameCounters(b)) << name;
    EXPECT_EQ(a.ops_completed, 2000u) << name;
  }
  Workload other = w;
  other.seed = 43;
  EXPECT_FALSE(RunOn("jemalloc", w).SameCounters(RunOn("jemalloc", other)));
}

TEST(ReallocRampTest, MovingVersusInPlace) {
  Workload w{.kind = WorkloadKind::kReallocRamp, .op_count = 20};
  // Bump copies every step: 16 + 32 + ... + 320.
  EXPECT_EQ(RunOn("bump-alloc-cheri", w).peak_touched_bytes, 16u * 20 * 21 / 2);
  // In-place growth only ever extends the first chunk.
  EXPECT_EQ(RunOn("libmalloc-simple", w).peak_touched_bytes, 16u + 320);
  EXPECT_EQ(RunOn("libmalloc-simple", w).ops_completed, 20u);
}

TEST(BenchCsvTest, FormatAndRoundTrip) {
  auto r = RunOn("snmalloc-repo", Churn(100, 16));
  std::vector<BenchResult> results{r};
  std::string csv = EmitBenchCsv(results);
  auto nl = csv.find('\n');
  EXPECT_EQ(csv.substr(0, nl),
            "allocator,workload,ops,elapsed_ns,peak_live_bytes,peak_touched_bytes,"
            "oom_count");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  std::string row = csv.substr(nl + 1);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 6);
  auto parsed = ParseBenchCsv(csv);
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_TRUE(parsed[0].SameCounters(r));
  EXPECT_EQ(parsed[0].elapsed_ns, r.elapsed_ns);
  EXPECT_THROW(ParseBenchCsv("allocator\nx\n"), std::invalid_argument);
}

}  // namespace
}  // namespace caplab

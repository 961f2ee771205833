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

#include "caplab/bump_allocator.h"

#include "gtest/gtest.h"

namespace caplab {
namespace {

BumpAllocator& AsBump(Sandbox& s) { return dynamic_cast<BumpAllocator&>(s.allocator()); }

TEST(BumpCheriTest, ConsecutiveBlocksAreAdjacent) {
  Sandbox s = MakeSandbox("bump-alloc-cheri");
  const uint32_t base = s.allocator().region().base;
  auto p = s.allocator().Malloc(16).value();
  auto q = s.allocator().Malloc(16).value();
  EXPECT_EQ(p.address - base, 0u);
  EXPECT_EQ(q.address - base, 16u);
  EXPECT_EQ(p.base, p.address);
  EXPECT_EQ(p.length(), 16u);
}

TEST(BumpCheriTest, LengthRoundsToGranule) {
  Sandbox s = MakeSandbox("bump-alloc-cheri");
  auto c = s.allocator().Malloc(24).value();
  EXPECT_EQ(c.length(), 32u);
  EXPECT_EQ(AsBump(s).cursor(), c.base + 32);
  EXPECT_EQ(s.allocator().HighWaterBytes(), 32u);
}

TEST(BumpCheriTest, CursorMatchesRunningSum) {
  Sandbox s = MakeSandbox("bump-alloc-cheri");
  uint32_t expected = 0;
  for (uint32_t size = 1; size < 300; size += 7) {
    auto c = s.allocator().Malloc(size).value();
    EXPECT_EQ(c.address - s.allocator().region().base, expected);
    expected += (size + 15) / 16 * 16;
  }
  EXPECT_EQ(s.allocator().HighWaterBytes(), expected);
}

TEST(BumpCheriTest, FreeIsANoOpEvenTwice) {
  Sandbox s = MakeSandbox("bump-alloc-cheri");
  auto p = s.allocator().Malloc(32).value();
  EXPECT_TRUE(s.allocator().Free(p).ok());
  EXPECT_TRUE(s.allocator().Free(p).ok());
  auto q = s.allocator().Malloc(32).value();
  EXPECT_EQ(q.address, p.address + 32);
}

TEST(BumpCheriTest, ReallocMovesAndZeroesTail) {
  Sandbox s = MakeSandbox("bump-alloc-cheri");
  auto p = s.allocator().Malloc(16).value();
  ASSERT_TRUE(s.heap().Fill(p, p.address, 16, 0x77).ok());
  auto q = s.allocator().Realloc(p, 64).value();
  EXPECT_NE(q.address, p.address);
  auto bytes = s.heap().Load(q, q.address, 64).value();
  for (size_t i = 0; i < 64; ++i) EXPECT_EQ(bytes[i], i < 16 ? 0x77 : 0) << i;
}

TEST(BumpCheriTest, ExhaustionReportsOutOfMemory) {
  Sandbox s = MakeSandbox("bump-alloc-cheri", {.heap_size = 4096});
  ASSERT_TRUE(s.allocator().Malloc(4096).ok());
  auto c = s.allocator().Malloc(16);
  ASSERT_FALSE(c.ok());
  EXPECT_EQ(FaultName(c.error()), "OutOfMemory");
}

TEST(BumpCheriTest, RoundingModeAlignsLargeBlocks) {
  Sandbox s = MakeSandbox("bump-alloc-cheri", {.bounds_mode = BoundsMode::kRounding});
  auto c = s.allocator().Malloc(5000).value();
  // 5000 needs 13 bits, so bounds align to 2^5.
  EXPECT_EQ(c.length() % 32, 0u);
  EXPECT_EQ(c.base % 32, 0u);
  EXPECT_GE(c.length(), 5000u);
  EXPECT_LE(c.base, c.address);
}

TEST(BumpNoCheriTest, BoundsSpanTheRegion) {
  Sandbox s = MakeSandbox("bump-alloc-nocheri");
  auto c = s.allocator().Malloc(24).value();
  EXPECT_EQ(c.base, s.allocator().region().base);
  EXPECT_EQ(c.top, s.allocator().region().top);
  EXPECT_EQ(c.address, s.allocator().region().base);
}

TEST(BumpNoCheriTest, LogCatchesDoubleAndWildFrees) {
  Sandbox s = MakeSandbox("bump-alloc-nocheri");
  auto p = s.allocator().Malloc(32).value();
  ASSERT_TRUE(s.allocator().Free(p).ok());
  auto again = s.allocator().Free(p);
  ASSERT_FALSE(again.ok());
  EXPECT_EQ(FaultName(again.error()), "DoubleFree");

  auto q = s.allocator().Malloc(32).value();
  auto interior = s.allocator().Free(SetAddress(q, q.address + 16));
  ASSERT_FALSE(interior.ok());
  EXPECT_EQ(FaultName(interior.error()), "InvalidFree");
  auto beyond = s.allocator().Free(SetAddress(q, q.address + 4096));
  ASSERT_FALSE(beyond.ok());
  EXPECT_EQ(FaultName(beyond.error()), "InvalidFree");

  ASSERT_EQ(AsBump(s).log().size(), 2u);
  EXPECT_TRUE(AsBump(s).log().at(p.address).freed);
  EXPECT_FALSE(AsBump(s).log().at(q.address).freed);
}

TEST(BumpNoCheriTest, ReallocRetiresOldRecord) {
  Sandbox s = MakeSandbox("bump-alloc-nocheri");
  auto p = s.allocator().Malloc(16).value();
  auto q = s.allocator().Realloc(p, 48).value();
  EXPECT_TRUE(AsBump(s).log().at(p.address).freed);
  EXPECT_FALSE(AsBump(s).log().at(q.address).freed);
  EXPECT_FALSE(s.allocator().Free(p).ok());
  EXPECT_TRUE(s.allocator().Free(q).ok());
}

TEST(BumpNoCheriTest, ResetClearsLog) {
  Sandbox s = MakeSandbox("bump-alloc-nocheri");
  (void)s.allocator().Malloc(16);
  s.allocator().Reset();
  EXPECT_TRUE(AsBump(s).log().empty());
  EXPECT_EQ(AsBump(s).cursor(), s.allocator().region().base);
}

}  // namespace
}  // namespace caplab

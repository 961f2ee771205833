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

#ifndef CAPLAB_BUMP_ALLOCATOR_H_
#define CAPLAB_BUMP_ALLOCATOR_H_

#include <cstdint>
#include <map>

#include "caplab/allocator.h"

namespace caplab {

struct BumpConfig {
  bool narrow_bounds = true;
  // Keep a record of every block so free can catch double and wild frees.
  bool alloc_log = false;
};

// Advances a cursor through the region and never reuses memory.
class BumpAllocator : public Allocator {
 public:
  struct LogRecord {
    uint32_t base = 0;
    uint32_t length = 0;
    bool freed = false;
  };

  BumpAllocator(AllocatorTraits traits, TaggedHeap& heap, Capability region,
                BumpConfig config, BoundsMode mode = BoundsMode::kExact);

  uint32_t cursor() const { return cursor_; }
  // Keyed by block base; cursor monotonicity makes this allocation order.
  const std::map<uint32_t, LogRecord>& log() const { return log_; }

  uint32_t HighWaterBytes() const override { return cursor_ - region().base; }

 protected:
  Result<Capability, Fault> DoMalloc(uint32_t size) override;
  Status<Fault> DoFree(const Capability& c) override;
  Result<Capability, Fault> DoRealloc(const Capability& c,
                                      uint32_t new_size) override;
  void DoReset() override;

 private:
  // Finds the live record for a client pointer, or the matching error.
  Result<LogRecord*, Fault> LookupLive(const Capability& c);

  BumpConfig config_;
  uint32_t cursor_;
  std::map<uint32_t, LogRecord> log_;
};

}  // namespace caplab

#endif  // CAPLAB_BUMP_ALLOCATOR_H_

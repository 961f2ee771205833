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

#ifndef CAPLAB_SLAB_ALLOCATOR_H_
#define CAPLAB_SLAB_ALLOCATOR_H_

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "caplab/allocator.h"

namespace caplab {

inline constexpr std::array<uint32_t, 9> kSizeClasses = {
    16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
inline constexpr uint32_t kSlabSize = 4096;

struct SlabConfig {
  // Frees are queued and applied at the start of the next malloc/realloc.
  bool deferred_free = false;
  bool double_free_check = false;
  bool realloc_in_place = true;
};

// Size-class allocator with out-of-band metadata. Free maps the address to
// its slab and slot without dereferencing the capability, so narrowed
// capabilities are accepted. Requests above the largest class get a
// dedicated run of whole slabs with a single slot.
class SlabAllocator : public Allocator {
 public:
  struct Slab {
    uint32_t base = 0;
    uint32_t pages = 1;
    uint32_t slot_size = 0;
    std::vector<bool> occupied;
    // Slots covered by the allocation starting at each slot; 0 if none does.
    std::vector<uint32_t> run;

    uint32_t slot_count() const { return static_cast<uint32_t>(occupied.size()); }
    bool is_large() const { return slot_count() == 1 && pages * kSlabSize == slot_size; }
  };

  SlabAllocator(AllocatorTraits traits, TaggedHeap& heap, Capability region,
                SlabConfig config, BoundsMode mode = BoundsMode::kExact);

  // Smallest class holding `size`, or 0 when above the largest class.
  static uint32_t SizeClassFor(uint32_t size);

  bool SlotOccupied(uint32_t address) const;
  size_t pending_frees() const { return pending_.size(); }
  const std::map<uint32_t, Slab>& slabs() const { return slabs_; }

  uint32_t HighWaterBytes() const override { return high_water_; }

 protected:
  Result<Capability, Fault> DoMalloc(uint32_t size) override;
  Status<Fault> DoFree(const Capability& c) override;
  Result<Capability, Fault> DoRealloc(const Capability& c,
                                      uint32_t new_size) override;
  void DoReset() override;

 private:
  Slab* FindSlab(uint32_t address);
  const Slab* FindSlab(uint32_t address) const;
  Result<Slab*, Fault> NewSlab(uint32_t pages, uint32_t slot_size);
  void ReleaseSlab(const Slab& slab);
  Status<Fault> ApplyFree(uint32_t address);
  void ApplyPending();
  uint32_t SlotAddress(const Slab& slab, uint32_t slot) const {
    return slab.base + slot * slab.slot_size;
  }

  static constexpr uint32_t kNoSlab = UINT32_MAX;

  SlabConfig config_;
  std::map<uint32_t, Slab> slabs_;
  std::vector<uint32_t> page_owner_;
  std::deque<uint32_t> pending_;
  uint32_t high_water_ = 0;
};

}  // namespace caplab

#endif  // CAPLAB_SLAB_ALLOCATOR_H_

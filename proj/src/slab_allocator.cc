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

#include "caplab/slab_allocator.h"

#include <algorithm>

namespace caplab {
namespace {

Fault Oom(const char* detail) {
  return Fault{AllocError{AllocErrorKind::kOutOfMemory, detail}};
}

uint32_t CeilDiv(uint32_t a, uint32_t b) { return a / b + (a % b != 0); }

}  // namespace

SlabAllocator::SlabAllocator(AllocatorTraits traits, TaggedHeap& heap,
                             Capability region, SlabConfig config,
                             BoundsMode mode)
    : Allocator(std::move(traits), heap, region, mode), config_(config) {
  DoReset();
}

uint32_t SlabAllocator::SizeClassFor(uint32_t size) {
  for (uint32_t c : kSizeClasses) {
    if (size <= c) return c;
  }
  return 0;
}

void SlabAllocator::DoReset() {
  slabs_.clear();
  pending_.clear();
  page_owner_.assign(region().length() / kSlabSize, kNoSlab);
  high_water_ = 0;
}

const SlabAllocator::Slab* SlabAllocator::FindSlab(uint32_t address) const {
  if (address < region().base) return nullptr;
  uint32_t page = (address - region().base) / kSlabSize;
  if (page >= page_owner_.size() || page_owner_[page] == kNoSlab) return nullptr;
  return &slabs_.at(page_owner_[page]);
}

SlabAllocator::Slab* SlabAllocator::FindSlab(uint32_t address) {
  return const_cast<Slab*>(std::as_const(*this).FindSlab(address));
}

bool SlabAllocator::SlotOccupied(uint32_t address) const {
  const Slab* slab = FindSlab(address);
  if (slab == nullptr) return false;
  return slab->occupied[(address - slab->base) / slab->slot_size];
}

Result<SlabAllocator::Slab*, Fault> SlabAllocator::NewSlab(uint32_t pages,
                                                           uint32_t slot_size) {
  // First fit over whole pages.
  uint32_t run = 0;
  for (uint32_t page = 0; page < page_owner_.size(); ++page) {
    run = page_owner_[page] == kNoSlab ? run + 1 : 0;
    if (run == pages) {
      uint32_t first = page + 1 - pages;
      Slab slab;
      slab.base = region().base + first * kSlabSize;
      slab.pages = pages;
      slab.slot_size = slot_size;
      uint32_t slots = pages * kSlabSize / slot_size;
      slab.occupied.assign(slots, false);
      slab.run.assign(slots, 0);
      for (uint32_t p = first; p <= page; ++p) page_owner_[p] = slab.base;
      high_water_ = std::max(high_water_, (page + 1) * kSlabSize);
      auto [it, inserted] = slabs_.emplace(slab.base, std::move(slab));
      return &it->second;
    }
  }
  return Oom("no free slab pages");
}

void SlabAllocator::ReleaseSlab(const Slab& slab) {
  uint32_t first = (slab.base - region().base) / kSlabSize;
  for (uint32_t p = first; p < first + slab.pages; ++p) page_owner_[p] = kNoSlab;
  slabs_.erase(slab.base);
}

Result<Capability, Fault> SlabAllocator::DoMalloc(uint32_t size) {
  ApplyPending();
  if (size > region().length()) return Oom("request exceeds region");
  uint32_t cls = SizeClassFor(size);
  Slab* target = nullptr;
  uint32_t slot = 0;
  if (cls != 0) {
    for (auto& [base, slab] : slabs_) {
      if (slab.slot_size != cls || slab.pages != 1) continue;
      auto free_slot = std::find(slab.occupied.begin(), slab.occupied.end(), false);
      if (free_slot != slab.occupied.end()) {
        target = &slab;
        slot = static_cast<uint32_t>(free_slot - slab.occupied.begin());
        break;
      }
    }
    if (target == nullptr) {
      auto fresh = NewSlab(1, cls);
      if (!fresh) return fresh.error();
      target = fresh.value();
    }
  } else {
    uint32_t pages = CeilDiv(size, kSlabSize);
    auto fresh = NewSlab(pages, pages * kSlabSize);
    if (!fresh) return fresh.error();
    target = fresh.value();
  }
  target->occupied[slot] = true;
  target->run[slot] = 1;
  return Derive(SlotAddress(*target, slot), target->slot_size);
}

Status<Fault> SlabAllocator::ApplyFree(uint32_t address) {
  Slab* slab = FindSlab(address);
  if (slab == nullptr) {
    return Fault{AllocError{AllocErrorKind::kInvalidFree,
                            "address maps outside any slab"}};
  }
  uint32_t slot = (address - slab->base) / slab->slot_size;
  if (slab->run[slot] > 0) {
    std::fill_n(slab->occupied.begin() + slot, slab->run[slot], false);
    slab->run[slot] = 0;
  } else if (config_.double_free_check) {
    return Fault{AllocError{AllocErrorKind::kDoubleFree, "slot is not live"}};
  } else {
    slab->occupied[slot] = false;
  }
  if (slab->is_large() && !slab->occupied[0]) ReleaseSlab(*slab);
  return Ok();
}

void SlabAllocator::ApplyPending() {
  while (!pending_.empty()) {
    uint32_t address = pending_.front();
    pending_.pop_front();
    // Validated when queued; a slab released since then is not an error the
    // client can observe.
    (void)ApplyFree(address);
  }
}

Status<Fault> SlabAllocator::DoFree(const Capability& c) {
  if (FindSlab(c.address) == nullptr) {
    return Fault{AllocError{AllocErrorKind::kInvalidFree,
                            "address maps outside any slab"}};
  }
  if (config_.deferred_free) {
    pending_.push_back(c.address);
    return Ok();
  }
  return ApplyFree(c.address);
}

Result<Capability, Fault> SlabAllocator::DoRealloc(const Capability& c,
                                                   uint32_t new_size) {
  ApplyPending();
  const uint32_t address = c.address;
  Slab* slab = FindSlab(address);
  if (slab == nullptr) {
    return Fault{AllocError{AllocErrorKind::kInvalidFree,
                            "address maps outside any slab"}};
  }
  uint32_t slot = (address - slab->base) / slab->slot_size;
  uint32_t run = slab->run[slot];
  if (run == 0 || SlotAddress(*slab, slot) != address) {
    return Fault{AllocError{AllocErrorKind::kInvalidFree,
                            "realloc of a block that is not live"}};
  }
  if (new_size > region().length()) return Oom("request exceeds region");
  const uint32_t old_bytes = run * slab->slot_size;
  const uint32_t need = CeilDiv(new_size, slab->slot_size);

  if (config_.realloc_in_place) {
    if (need <= run) {
      std::fill(slab->occupied.begin() + slot + need,
                slab->occupied.begin() + slot + run, false);
      slab->run[slot] = need;
      return Derive(address, need * slab->slot_size);
    }
    if (slot + need <= slab->slot_count() &&
        std::none_of(slab->occupied.begin() + slot + run,
                     slab->occupied.begin() + slot + need,
                     [](bool b) { return b; })) {
      std::fill(slab->occupied.begin() + slot + run,
                slab->occupied.begin() + slot + need, true);
      slab->run[slot] = need;
      return Derive(address, need * slab->slot_size);
    }
  }

  auto fresh = DoMalloc(new_size);
  if (!fresh) return fresh;
  uint32_t copy_len = std::min(old_bytes, new_size);
  if (auto s = MoveContents(address, fresh->address, copy_len,
                            RoundUp16(new_size));
      !s) {
    return s.error();
  }
  if (auto s = ApplyFree(address); !s) return s.error();
  return fresh;
}

}  // namespace caplab

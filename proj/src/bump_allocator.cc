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

#include <algorithm>

namespace caplab {

BumpAllocator::BumpAllocator(AllocatorTraits traits, TaggedHeap& heap,
                             Capability region, BumpConfig config,
                             BoundsMode mode)
    : Allocator(std::move(traits), heap, region, mode),
      config_(config),
      cursor_(region.base) {}

Result<Capability, Fault> BumpAllocator::DoMalloc(uint32_t size) {
  uint64_t length = RoundUp16(size);
  if (size > UINT32_MAX - 15 || cursor_ + length > region().top) {
    return Fault{AllocError{AllocErrorKind::kOutOfMemory, "bump region exhausted"}};
  }
  uint32_t block = cursor_;
  Capability out;
  if (config_.narrow_bounds) {
    auto derived = Derive(block, static_cast<uint32_t>(length));
    if (!derived) return derived;
    out = derived.value();
  } else {
    out = Unnarrowed(block);
  }
  cursor_ += static_cast<uint32_t>(length);
  if (config_.alloc_log) {
    log_[block] = LogRecord{block, static_cast<uint32_t>(length), false};
  }
  return out;
}

Result<BumpAllocator::LogRecord*, Fault> BumpAllocator::LookupLive(
    const Capability& c) {
  auto it = log_.find(c.address);
  if (it == log_.end()) {
    return Fault{AllocError{AllocErrorKind::kInvalidFree,
                            "no logged block starts at this address"}};
  }
  if (it->second.freed) {
    return Fault{AllocError{AllocErrorKind::kDoubleFree,
                            "block already freed"}};
  }
  return &it->second;
}

Status<Fault> BumpAllocator::DoFree(const Capability& c) {
  if (!config_.alloc_log) return Ok();
  auto record = LookupLive(c);
  if (!record) return record.error();
  record.value()->freed = true;
  return Ok();
}

Result<Capability, Fault> BumpAllocator::DoRealloc(const Capability& c,
                                                   uint32_t new_size) {
  uint32_t old_length = 0;
  LogRecord* record = nullptr;
  if (config_.alloc_log) {
    auto found = LookupLive(c);
    if (!found) return found.error();
    record = found.value();
    old_length = record->length;
  } else if (c.address >= region().base && c.address < cursor_) {
    // No log: trust the capability's extent, clipped to what was handed out.
    uint32_t end = std::min(c.top, cursor_);
    old_length = end > c.address ? end - c.address : 0;
  }
  uint32_t old_address = c.address;
  auto fresh = DoMalloc(new_size);
  if (!fresh) return fresh;
  uint32_t copy_len = std::min(old_length, new_size);
  if (auto s = MoveContents(old_address, fresh->address, copy_len,
                            RoundUp16(new_size));
      !s) {
    return s.error();
  }
  if (record != nullptr) record->freed = true;
  return fresh;
}

void BumpAllocator::DoReset() {
  cursor_ = region().base;
  log_.clear();
}

}  // namespace caplab

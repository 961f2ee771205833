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

#include "caplab/freelist_allocator.h"

#include <algorithm>
#include <stdexcept>

namespace caplab {
namespace {

constexpr uint32_t kSplitSlack = 32;

uint32_t Le32(std::span<const uint8_t> b) {
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

}  // namespace

std::array<uint8_t, 8> ChunkHeader::Encode() const {
  return {static_cast<uint8_t>(size),        static_cast<uint8_t>(size >> 8),
          static_cast<uint8_t>(size >> 16),  static_cast<uint8_t>(size >> 24),
          static_cast<uint8_t>(magic),       static_cast<uint8_t>(magic >> 8),
          status,                            reserved};
}

ChunkHeader ChunkHeader::Decode(std::span<const uint8_t> bytes) {
  ChunkHeader h;
  h.size = Le32(bytes.subspan(0, 4));
  h.magic = static_cast<uint16_t>(bytes[4] | bytes[5] << 8);
  h.status = bytes[6];
  h.reserved = bytes[7];
  return h;
}

FreelistAllocator::FreelistAllocator(AllocatorTraits traits, TaggedHeap& heap,
                                     Capability region, FreelistConfig config,
                                     BoundsMode mode)
    : Allocator(std::move(traits), heap, region, mode), config_(config) {
  if (region.base % kGranuleSize != 0 || region.length() < 2 * kChunkOverhead) {
    throw std::invalid_argument("freelist region too small or misaligned");
  }
  DoReset();
}

void FreelistAllocator::DoReset() {
  uint32_t first = region().base + kChunkOverhead;
  head_ = 0;
  high_water_ = kChunkOverhead;
  PushFree(first, ChunkHeader{.size = region().length() - kChunkOverhead});
}

std::optional<ChunkHeader> FreelistAllocator::ReadHeader(
    uint32_t payload) const {
  auto bytes = heap().Load(region(), payload - 8, 8);
  if (!bytes) return std::nullopt;
  ChunkHeader h = ChunkHeader::Decode(bytes.value());
  if (h.magic != ChunkHeader::kMagic) return std::nullopt;
  return h;
}

void FreelistAllocator::WriteHeader(uint32_t payload, const ChunkHeader& h) {
  auto bytes = h.Encode();
  (void)heap().Store(region(), payload - 8, bytes);
}

uint32_t FreelistAllocator::ReadLink(uint32_t payload) const {
  auto bytes = heap().Load(region(), payload - kChunkOverhead, 4);
  return bytes ? Le32(bytes.value()) : 0;
}

void FreelistAllocator::WriteLink(uint32_t payload, uint32_t next) {
  std::array<uint8_t, 8> bytes{static_cast<uint8_t>(next),
                               static_cast<uint8_t>(next >> 8),
                               static_cast<uint8_t>(next >> 16),
                               static_cast<uint8_t>(next >> 24)};
  (void)heap().Store(region(), payload - kChunkOverhead, bytes);
}

uint32_t FreelistAllocator::MaxWalk() const {
  return region().length() / (2 * kChunkOverhead) + 1;
}

void FreelistAllocator::NoteExtent(uint32_t payload, uint32_t size) {
  high_water_ = std::max(high_water_, payload + size - region().base);
}

void FreelistAllocator::PushFree(uint32_t payload, ChunkHeader h) {
  h.status = ChunkHeader::kFree;
  WriteHeader(payload, h);
  WriteLink(payload, head_);
  head_ = payload;
}

void FreelistAllocator::Unlink(uint32_t payload) {
  uint32_t prev = 0;
  uint32_t cur = head_;
  for (uint32_t steps = 0; cur != 0 && steps < MaxWalk(); ++steps) {
    uint32_t next = ReadLink(cur);
    if (cur == payload) {
      if (prev == 0) {
        head_ = next;
      } else {
        WriteLink(prev, next);
      }
      return;
    }
    prev = cur;
    cur = next;
  }
}

Result<Capability, Fault> FreelistAllocator::ClientCap(uint32_t payload,
                                                       uint32_t length) const {
  // The header granule is inside the client's bounds: free reads the header
  // through the client's own capability.
  auto derived = Derive(payload - kChunkOverhead, kChunkOverhead + length);
  if (!derived) return derived;
  return SetAddress(derived.value(), payload);
}

Result<Capability, Fault> FreelistAllocator::DoMalloc(uint32_t size) {
  if (size > region().length()) {
    return Fault{AllocError{AllocErrorKind::kOutOfMemory, "request exceeds region"}};
  }
  uint32_t need = RoundUp16(size);
  uint32_t prev = 0;
  uint32_t cur = head_;
  for (uint32_t steps = 0; cur != 0 && steps < MaxWalk(); ++steps) {
    auto h = ReadHeader(cur);
    if (!h) break;
    uint32_t next = ReadLink(cur);
    if (h->size >= need) {
      uint32_t replacement = next;
      if (h->size >= need + kSplitSlack) {
        uint32_t rest = cur + need + kChunkOverhead;
        WriteHeader(rest, ChunkHeader{.size = h->size - need - kChunkOverhead});
        WriteLink(rest, next);
        replacement = rest;
        h->size = need;
      }
      if (prev == 0) {
        head_ = replacement;
      } else {
        WriteLink(prev, replacement);
      }
      h->status = ChunkHeader::kLive;
      WriteHeader(cur, *h);
      NoteExtent(cur, h->size);
      return ClientCap(cur, need);
    }
    prev = cur;
    cur = next;
  }
  return Fault{AllocError{AllocErrorKind::kOutOfMemory, "no free chunk fits"}};
}

Result<ChunkHeader, Fault> FreelistAllocator::ReadClientHeader(
    const Capability& c) const {
  Capability h = SetAddress(c, c.address - 8);
  auto bytes = heap().Load(h, h.address, 8);
  if (!bytes) return Fault{bytes.error()};
  ChunkHeader header = ChunkHeader::Decode(bytes.value());
  if (header.magic != ChunkHeader::kMagic) {
    return Fault{AllocError{AllocErrorKind::kInvalidFree, "bad chunk magic"}};
  }
  return header;
}

Status<Fault> FreelistAllocator::DoFree(const Capability& c) {
  auto header = ReadClientHeader(c);
  if (!header) return header.error();
  // No status check: freeing a free chunk relinks it.
  PushFree(c.address, header.value());
  return Ok();
}

Result<Capability, Fault> FreelistAllocator::DoRealloc(const Capability& c,
                                                       uint32_t new_size) {
  auto header = ReadClientHeader(c);
  if (!header) return header.error();
  ChunkHeader h = header.value();
  if (h.status != ChunkHeader::kLive) {
    return Fault{AllocError{AllocErrorKind::kInvalidFree, "realloc of a free chunk"}};
  }
  if (new_size > region().length()) {
    return Fault{AllocError{AllocErrorKind::kOutOfMemory, "request exceeds region"}};
  }
  const uint32_t payload = c.address;
  const uint32_t need = RoundUp16(new_size);

  if (config_.realloc_in_place) {
    if (need <= h.size) return ClientCap(payload, need);
    // Absorb physically following free chunks until the request fits.
    std::vector<uint32_t> absorbed;
    uint64_t total = h.size;
    uint64_t next = static_cast<uint64_t>(payload) + h.size + kChunkOverhead;
    while (total < need && next < region().top) {
      auto nh = ReadHeader(static_cast<uint32_t>(next));
      if (!nh || nh->status != ChunkHeader::kFree) break;
      absorbed.push_back(static_cast<uint32_t>(next));
      total += kChunkOverhead + nh->size;
      next += nh->size + kChunkOverhead;
    }
    if (total >= need) {
      for (uint32_t p : absorbed) Unlink(p);
      h.size = static_cast<uint32_t>(total);
      if (total >= need + kSplitSlack) {
        uint32_t rest = payload + need + kChunkOverhead;
        PushFree(rest, ChunkHeader{.size = h.size - need - kChunkOverhead});
        h.size = need;
      }
      WriteHeader(payload, h);
      NoteExtent(payload, h.size);
      return ClientCap(payload, need);
    }
  }

  auto fresh = DoMalloc(new_size);
  if (!fresh) return fresh;
  uint32_t copy_len = std::min(h.size, new_size);
  if (auto s = MoveContents(payload, fresh->address, copy_len, need); !s) {
    return s.error();
  }
  PushFree(payload, h);
  return fresh;
}

std::vector<FreelistAllocator::ChunkInfo> FreelistAllocator::Chunks() const {
  std::vector<ChunkInfo> out;
  uint64_t payload = region().base + kChunkOverhead;
  while (payload < region().top) {
    auto h = ReadHeader(static_cast<uint32_t>(payload));
    if (!h) break;
    out.push_back(ChunkInfo{static_cast<uint32_t>(payload), *h});
    payload += h->size + kChunkOverhead;
  }
  return out;
}

std::vector<uint32_t> FreelistAllocator::FreeList() const {
  std::vector<uint32_t> out;
  uint32_t cur = head_;
  for (uint32_t steps = 0; cur != 0 && steps < MaxWalk(); ++steps) {
    out.push_back(cur);
    cur = ReadLink(cur);
  }
  return out;
}

}  // namespace caplab

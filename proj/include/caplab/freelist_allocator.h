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

#ifndef CAPLAB_FREELIST_ALLOCATOR_H_
#define CAPLAB_FREELIST_ALLOCATOR_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "caplab/allocator.h"

namespace caplab {

// Inline chunk header, 8 bytes at payload - 8: payload size (LE32), magic
// 0xCA1B (LE16), status (0 free, 1 live), one reserved zero byte. It is the
// second half of a 16-byte header granule whose first 4 bytes hold the
// free-list link (payload address of the next free chunk, 0 terminates).
struct ChunkHeader {
  static constexpr uint16_t kMagic = 0xCA1B;
  static constexpr uint8_t kFree = 0;
  static constexpr uint8_t kLive = 1;

  uint32_t size = 0;
  uint16_t magic = kMagic;
  uint8_t status = kFree;
  uint8_t reserved = 0;

  std::array<uint8_t, 8> Encode() const;
  static ChunkHeader Decode(std::span<const uint8_t> bytes);

  friend bool operator==(const ChunkHeader&, const ChunkHeader&) = default;
};

inline constexpr uint32_t kChunkOverhead = 16;

struct FreelistConfig {
  bool realloc_in_place = false;
};

// First-fit allocator over a singly linked free list with inline headers.
// Free validates the header by reading it through the caller's own
// capability, so a capability narrowed past the header faults.
class FreelistAllocator : public Allocator {
 public:
  struct ChunkInfo {
    uint32_t payload = 0;
    ChunkHeader header;
  };

  FreelistAllocator(AllocatorTraits traits, TaggedHeap& heap,
                    Capability region, FreelistConfig config,
                    BoundsMode mode = BoundsMode::kExact);

  // Physical walk from the region base. Stops early at a corrupt header.
  std::vector<ChunkInfo> Chunks() const;
  // Free-list order from the head, at most one pass over the chunk count.
  std::vector<uint32_t> FreeList() const;

  uint32_t HighWaterBytes() const override { return high_water_; }

 protected:
  Result<Capability, Fault> DoMalloc(uint32_t size) override;
  Status<Fault> DoFree(const Capability& c) override;
  Result<Capability, Fault> DoRealloc(const Capability& c,
                                      uint32_t new_size) override;
  void DoReset() override;

 private:
  std::optional<ChunkHeader> ReadHeader(uint32_t payload) const;
  void WriteHeader(uint32_t payload, const ChunkHeader& h);
  uint32_t ReadLink(uint32_t payload) const;
  void WriteLink(uint32_t payload, uint32_t next);

  // Header read through the client's capability.
  Result<ChunkHeader, Fault> ReadClientHeader(const Capability& c) const;
  Result<Capability, Fault> ClientCap(uint32_t payload, uint32_t length) const;
  void PushFree(uint32_t payload, ChunkHeader h);
  void Unlink(uint32_t payload);
  uint32_t MaxWalk() const;
  void NoteExtent(uint32_t payload, uint32_t size);

  FreelistConfig config_;
  uint32_t head_ = 0;
  uint32_t high_water_ = 0;
};

}  // namespace caplab

#endif  // CAPLAB_FREELIST_ALLOCATOR_H_

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

// A flat simulated heap with one validity tag per 16-byte granule. Every
// access is mediated by a capability check.

#ifndef CAPLAB_TAGGED_MEMORY_H_
#define CAPLAB_TAGGED_MEMORY_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "caplab/capability.h"
#include "caplab/result.h"

namespace caplab {

inline constexpr uint32_t kGranuleSize = 16;

// Serialized capability, 16 bytes: base, top, address as little-endian
// 32-bit words, then the permission byte, then three zero bytes. The tag
// lives out of band in the heap's tag map.
using CapBytes = std::array<uint8_t, kGranuleSize>;

CapBytes EncodeCap(const Capability& c);
// The returned capability is untagged; callers attach the granule tag.
Capability DecodeCap(std::span<const uint8_t, kGranuleSize> bytes);

class TaggedHeap {
 public:
  // Throws std::invalid_argument unless size is a positive multiple of 16.
  explicit TaggedHeap(uint32_t size);

  TaggedHeap(const TaggedHeap&) = delete;
  TaggedHeap& operator=(const TaggedHeap&) = delete;

  uint32_t size() const { return static_cast<uint32_t>(data_.size()); }
  uint32_t granule_count() const { return static_cast<uint32_t>(tags_.size()); }

  Result<std::vector<uint8_t>, CapFault> Load(const Capability& c,
                                              uint32_t address,
                                              uint32_t length) const;
  // Clears the tag of every granule the write overlaps.
  Status<CapFault> Store(const Capability& c, uint32_t address,
                         std::span<const uint8_t> bytes);
  // Writes `length` copies of `value`; same checks and tag effect as Store.
  Status<CapFault> Fill(const Capability& c, uint32_t address, uint32_t length,
                        uint8_t value = 0);
  Status<CapFault> StoreCap(const Capability& c, uint32_t address,
                            const Capability& payload);
  Result<Capability, CapFault> LoadCap(const Capability& c,
                                       uint32_t address) const;

  bool granule_tag(uint32_t granule) const { return tags_.at(granule) != 0; }

  // Zeroes all bytes and clears all tags.
  void Clear();

  // Raw snapshot: heap bytes, then the tag bitmap packed LSB-first (granule
  // i is bit i % 8 of byte i / 8), padded to a whole byte.
  std::vector<uint8_t> Snapshot() const;

  std::span<const uint8_t> bytes() const { return data_; }

 private:
  Status<CapFault> CheckInHeap(uint32_t address, uint32_t length) const;
  void ClearTags(uint32_t address, uint32_t length);

  std::vector<uint8_t> data_;
  std::vector<uint8_t> tags_;
};

}  // namespace caplab

#endif  // CAPLAB_TAGGED_MEMORY_H_

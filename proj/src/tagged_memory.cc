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

#include "caplab/tagged_memory.h"

#include <algorithm>
#include <stdexcept>

namespace caplab {
namespace {

void PutLe32(uint8_t* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<uint8_t>(v >> (8 * i));
}

uint32_t GetLe32(const uint8_t* in) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[i]) << (8 * i);
  return v;
}

constexpr PermissionSet kLoadNeed{Perm::kLoad};
constexpr PermissionSet kStoreNeed{Perm::kStore};
constexpr PermissionSet kLoadCapNeed{Perm::kLoad, Perm::kLoadCap};
constexpr PermissionSet kStoreCapNeed{Perm::kStore, Perm::kStoreCap};

}  // namespace

CapBytes EncodeCap(const Capability& c) {
  CapBytes out{};
  PutLe32(&out[0], c.base);
  PutLe32(&out[4], c.top);
  PutLe32(&out[8], c.address);
  out[12] = c.perms.bits();
  return out;
}

Capability DecodeCap(std::span<const uint8_t, kGranuleSize> bytes) {
  Capability c;
  c.tag = false;
  c.base = GetLe32(&bytes[0]);
  c.top = GetLe32(&bytes[4]);
  c.address = GetLe32(&bytes[8]);
  c.perms = PermissionSet::FromBits(bytes[12]);
  return c;
}

TaggedHeap::TaggedHeap(uint32_t size) {
  if (size == 0 || size % kGranuleSize != 0) {
    throw std::invalid_argument("heap size must be a positive multiple of 16");
  }
  data_.assign(size, 0);
  tags_.assign(size / kGranuleSize, 0);
}

Status<CapFault> TaggedHeap::CheckInHeap(uint32_t address,
                                         uint32_t length) const {
  // Capabilities derived from a root never exceed the heap, but the struct
  // is a plain value and can be forged by hand.
  if (static_cast<uint64_t>(address) + length > data_.size()) {
    return CapFault{CapFaultKind::kBoundsViolation, "access beyond heap end"};
  }
  return Ok();
}

void TaggedHeap::ClearTags(uint32_t address, uint32_t length) {
  uint32_t first = address / kGranuleSize;
  uint32_t last = (address + length - 1) / kGranuleSize;
  std::fill(tags_.begin() + first, tags_.begin() + last + 1, 0);
}

Result<std::vector<uint8_t>, CapFault> TaggedHeap::Load(
    const Capability& c, uint32_t address, uint32_t length) const {
  if (auto s = CheckAccess(c, address, length, kLoadNeed); !s) return s.error();
  if (auto s = CheckInHeap(address, length); !s) return s.error();
  return std::vector<uint8_t>(data_.begin() + address,
                              data_.begin() + address + length);
}

Status<CapFault> TaggedHeap::Store(const Capability& c, uint32_t address,
                                   std::span<const uint8_t> bytes) {
  auto length = static_cast<uint32_t>(bytes.size());
  if (auto s = CheckAccess(c, address, length, kStoreNeed); !s) return s;
  if (auto s = CheckInHeap(address, length); !s) return s;
  std::copy(bytes.begin(), bytes.end(), data_.begin() + address);
  ClearTags(address, length);
  return Ok();
}

Status<CapFault> TaggedHeap::Fill(const Capability& c, uint32_t address,
                                  uint32_t length, uint8_t value) {
  if (auto s = CheckAccess(c, address, length, kStoreNeed); !s) return s;
  if (auto s = CheckInHeap(address, length); !s) return s;
  std::fill_n(data_.begin() + address, length, value);
  ClearTags(address, length);
  return Ok();
}

Status<CapFault> TaggedHeap::StoreCap(const Capability& c, uint32_t address,
                                      const Capability& payload) {
  if (auto s = CheckAccess(c, address, kGranuleSize, kStoreCapNeed); !s) {
    return s;
  }
  if (address % kGranuleSize != 0) {
    return CapFault{CapFaultKind::kAlignmentViolation,
                    "capability store must be 16-byte aligned"};
  }
  if (auto s = CheckInHeap(address, kGranuleSize); !s) return s;
  CapBytes encoded = EncodeCap(payload);
  std::copy(encoded.begin(), encoded.end(), data_.begin() + address);
  tags_[address / kGranuleSize] = payload.tag ? 1 : 0;
  return Ok();
}

Result<Capability, CapFault> TaggedHeap::LoadCap(const Capability& c,
                                                 uint32_t address) const {
  if (auto s = CheckAccess(c, address, kGranuleSize, kLoadCapNeed); !s) {
    return s.error();
  }
  if (address % kGranuleSize != 0) {
    return CapFault{CapFaultKind::kAlignmentViolation,
                    "capability load must be 16-byte aligned"};
  }
  if (auto s = CheckInHeap(address, kGranuleSize); !s) return s.error();
  Capability out = DecodeCap(
      std::span<const uint8_t, kGranuleSize>(data_.data() + address,
                                             kGranuleSize));
  out.tag = tags_[address / kGranuleSize] != 0;
  return out;
}

void TaggedHeap::Clear() {
  std::fill(data_.begin(), data_.end(), 0);
  std::fill(tags_.begin(), tags_.end(), 0);
}

std::vector<uint8_t> TaggedHeap::Snapshot() const {
  std::vector<uint8_t> out(data_);
  std::vector<uint8_t> bitmap((tags_.size() + 7) / 8, 0);
  for (size_t i = 0; i < tags_.size(); ++i) {
    if (tags_[i]) bitmap[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
  }
  out.insert(out.end(), bitmap.begin(), bitmap.end());
  return out;
}

}  // namespace caplab

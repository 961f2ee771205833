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

#include "caplab/capability.h"

#include <bit>
#include <cstdio>
#include <stdexcept>

namespace caplab {
namespace {

constexpr uint32_t kGranule = 16;
constexpr uint64_t kRoundingThreshold = 4096;

CapFault MakeFault(CapFaultKind kind, std::string detail) {
  return CapFault{kind, std::move(detail)};
}

}  // namespace

std::string PermissionSet::ToString() const {
  static constexpr char kLetters[] = {'r', 'w', 'R', 'W', 'x', 'g'};
  std::string out;
  for (int i = 0; i < 6; ++i) {
    out.push_back((bits_ >> i) & 1 ? kLetters[i] : '-');
  }
  return out;
}

std::string Capability::ToString() const {
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "{tag=%d base=0x%05x top=0x%05x addr=0x%05x perms=%s}",
                tag ? 1 : 0, base, top, address, perms.ToString().c_str());
  return buf;
}

std::string_view CapFaultKindName(CapFaultKind kind) {
  switch (kind) {
    case CapFaultKind::kTagViolation:
      return "TagViolation";
    case CapFaultKind::kBoundsViolation:
      return "BoundsViolation";
    case CapFaultKind::kPermissionViolation:
      return "PermissionViolation";
    case CapFaultKind::kAlignmentViolation:
      return "AlignmentViolation";
    case CapFaultKind::kMonotonicityViolation:
      return "MonotonicityViolation";
  }
  return "UnknownFault";
}

Capability MakeRoot(uint32_t heap_size) {
  if (heap_size == 0 || heap_size % kGranule != 0) {
    throw std::invalid_argument("heap size must be a positive multiple of 16");
  }
  return Capability{.tag = true,
                    .base = 0,
                    .top = heap_size,
                    .address = 0,
                    .perms = PermissionSet::All()};
}

Result<Capability, CapFault> SetBounds(const Capability& parent,
                                       uint32_t new_base, uint32_t length,
                                       BoundsMode mode) {
  if (!parent.tag) {
    return MakeFault(CapFaultKind::kTagViolation,
                     "set_bounds on untagged capability");
  }
  uint64_t lo = new_base;
  uint64_t hi = lo + length;
  if (lo < parent.base || hi > parent.top) {
    return MakeFault(CapFaultKind::kMonotonicityViolation,
                     "requested bounds escape parent");
  }
  if (mode == BoundsMode::kRounding && length > kRoundingThreshold) {
    // Alignment 2^(ceil(log2(length)) - 8).
    int shift = std::bit_width(static_cast<uint64_t>(length) - 1) - 8;
    uint64_t align = uint64_t{1} << shift;
    lo = lo & ~(align - 1);
    hi = (hi + align - 1) & ~(align - 1);
    if (lo < parent.base || hi > parent.top) {
      return MakeFault(CapFaultKind::kMonotonicityViolation,
                       "rounded bounds escape parent");
    }
  }
  Capability child = parent;
  child.base = static_cast<uint32_t>(lo);
  child.top = static_cast<uint32_t>(hi);
  child.address = new_base;
  return child;
}

Capability SetAddress(const Capability& c, uint32_t address) {
  Capability out = c;
  out.address = address;
  return out;
}

Capability AndPerms(const Capability& c, PermissionSet mask) {
  Capability out = c;
  out.perms = c.perms.Intersect(mask);
  return out;
}

Capability ClearTag(const Capability& c) {
  Capability out = c;
  out.tag = false;
  return out;
}

Status<CapFault> CheckAccess(const Capability& c, uint32_t address,
                             uint32_t length, PermissionSet need) {
  if (!c.tag) {
    return MakeFault(CapFaultKind::kTagViolation, "capability is untagged");
  }
  if (!c.perms.Contains(need)) {
    return MakeFault(CapFaultKind::kPermissionViolation,
                     "missing permission: have " + c.perms.ToString() +
                         " need " + need.ToString());
  }
  uint64_t end = static_cast<uint64_t>(address) + length;
  if (length == 0 || address < c.base || end > c.top) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "access [0x%x, 0x%llx) outside [0x%x, 0x%x)",
                  address, static_cast<unsigned long long>(end), c.base, c.top);
    return MakeFault(CapFaultKind::kBoundsViolation, buf);
  }
  return Ok();
}

}  // namespace caplab

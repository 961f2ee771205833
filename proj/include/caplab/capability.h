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

// Software model of CHERI-style capabilities: a tagged (base, top, address,
// permissions) tuple and the monotonic operations that derive new
// capabilities from existing ones.

#ifndef CAPLAB_CAPABILITY_H_
#define CAPLAB_CAPABILITY_H_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "caplab/result.h"

namespace caplab {

// Permission bits. Positions are part of the serialized layout.
enum class Perm : uint8_t {
  kLoad = 1u << 0,
  kStore = 1u << 1,
  kLoadCap = 1u << 2,
  kStoreCap = 1u << 3,
  kExec = 1u << 4,
  kGlobal = 1u << 5,
};

class PermissionSet {
 public:
  static constexpr uint8_t kValidMask = 0x3f;

  constexpr PermissionSet() = default;
  constexpr PermissionSet(std::initializer_list<Perm> perms) {
    for (Perm p : perms) bits_ |= static_cast<uint8_t>(p);
  }

  static constexpr PermissionSet All() { return FromBits(kValidMask); }
  static constexpr PermissionSet None() { return {}; }
  // Bits outside the six defined positions are dropped.
  static constexpr PermissionSet FromBits(uint8_t bits) {
    PermissionSet s;
    s.bits_ = bits & kValidMask;
    return s;
  }

  constexpr uint8_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool Has(Perm p) const {
    return (bits_ & static_cast<uint8_t>(p)) != 0;
  }
  constexpr bool Contains(PermissionSet other) const {
    return (bits_ & other.bits_) == other.bits_;
  }
  constexpr PermissionSet Intersect(PermissionSet other) const {
    return FromBits(bits_ & other.bits_);
  }
  constexpr PermissionSet Without(Perm p) const {
    return FromBits(bits_ & ~static_cast<uint8_t>(p));
  }

  // Compact form, one letter per held permission: "rwRWxg".
  std::string ToString() const;

  friend constexpr bool operator==(PermissionSet, PermissionSet) = default;

 private:
  uint8_t bits_ = 0;
};

struct Capability {
  bool tag = false;
  uint32_t base = 0;
  uint32_t top = 0;  // exclusive
  uint32_t address = 0;
  PermissionSet perms;

  uint32_t length() const { return top - base; }
  std::string ToString() const;

  friend bool operator==(const Capability&, const Capability&) = default;
};

enum class CapFaultKind {
  kTagViolation,
  kBoundsViolation,
  kPermissionViolation,
  kAlignmentViolation,
  kMonotonicityViolation,
};

std::string_view CapFaultKindName(CapFaultKind kind);

struct CapFault {
  CapFaultKind kind;
  std::string detail;
};

enum class BoundsMode {
  kExact,
  // Lengths above 4096 bytes are padded to a coarser alignment, the way a
  // compressed bounds encoding would.
  kRounding,
};

// Root capability over [0, heap_size) with every permission. Throws
// std::invalid_argument unless heap_size is a positive multiple of 16.
Capability MakeRoot(uint32_t heap_size);

Result<Capability, CapFault> SetBounds(const Capability& parent,
                                       uint32_t new_base, uint32_t length,
                                       BoundsMode mode = BoundsMode::kExact);

Capability SetAddress(const Capability& c, uint32_t address);
Capability AndPerms(const Capability& c, PermissionSet mask);
Capability ClearTag(const Capability& c);

// Fault priority when several apply: tag, then permission, then bounds.
// A zero-length access is reported as a bounds violation.
Status<CapFault> CheckAccess(const Capability& c, uint32_t address,
                             uint32_t length, PermissionSet need);

}  // namespace caplab

#endif  // CAPLAB_CAPABILITY_H_

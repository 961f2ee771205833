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

// The pluggable allocator contract shared by every engine, plus the static
// traits record that the attack probes and their oracle consult.

#ifndef CAPLAB_ALLOCATOR_H_
#define CAPLAB_ALLOCATOR_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "caplab/capability.h"
#include "caplab/result.h"
#include "caplab/tagged_memory.h"

namespace caplab {

inline constexpr uint32_t kDefaultHeapSize = 1u << 20;

// Table row order.
inline constexpr std::array<std::string_view, 7> kCanonicalAllocators = {
    "bump-alloc-cheri",    "bump-alloc-nocheri", "dlmalloc-cheribuild",
    "jemalloc",            "libmalloc-simple",   "snmalloc-cheribuild",
    "snmalloc-repo",
};

enum class FreeValidation { kNone, kInlineHeader, kMetadataLookup, kAllocLog };

std::string_view FreeValidationName(FreeValidation v);

struct AllocatorTraits {
  std::string name;
  bool narrow_bounds = false;
  bool deferred_free = false;
  bool strips_exec = false;
  FreeValidation free_validation = FreeValidation::kNone;
  bool double_free_detect = false;
  bool realloc_grows_in_place = false;

  friend bool operator==(const AllocatorTraits&,
                         const AllocatorTraits&) = default;
};

// Traits of the seven reference configurations. Throws std::out_of_range
// for any other name.
const AllocatorTraits& CanonicalTraits(std::string_view name);

enum class AllocErrorKind { kOutOfMemory, kInvalidFree, kDoubleFree, kBadRequest };

std::string_view AllocErrorKindName(AllocErrorKind kind);

struct AllocError {
  AllocErrorKind kind;
  std::string detail;
};

// Anything an allocator operation can fail with. A CapFault means a
// capability check tripped inside the allocator (for example a header read
// through a tampered capability).
using Fault = std::variant<CapFault, AllocError>;

std::string_view FaultName(const Fault& f);
std::string DescribeFault(const Fault& f);

class Allocator {
 public:
  virtual ~Allocator() = default;

  Allocator(const Allocator&) = delete;
  Allocator& operator=(const Allocator&) = delete;

  const AllocatorTraits& traits() const { return traits_; }
  TaggedHeap& heap() { return heap_; }
  const TaggedHeap& heap() const { return heap_; }
  const Capability& region() const { return region_; }
  BoundsMode bounds_mode() const { return bounds_mode_; }

  // Size 0 is rejected with BadRequest before the engine sees it.
  Result<Capability, Fault> Malloc(uint32_t size);
  Status<Fault> Free(const Capability& c);
  Result<Capability, Fault> Realloc(const Capability& c, uint32_t new_size);

  // Back to the initial state over a zeroed heap.
  void Reset();

  // Bytes from the region base up to the furthest byte the engine has ever
  // handed out or used for metadata.
  virtual uint32_t HighWaterBytes() const = 0;

  // What a revocation sweep would leave of a capability the client still
  // holds. None of the modeled allocators revoke, so the default is the
  // identity.
  virtual Capability Revoke(const Capability& held) const { return held; }

 protected:
  Allocator(AllocatorTraits traits, TaggedHeap& heap, Capability region,
            BoundsMode mode);

  virtual Result<Capability, Fault> DoMalloc(uint32_t size) = 0;
  virtual Status<Fault> DoFree(const Capability& c) = 0;
  virtual Result<Capability, Fault> DoRealloc(const Capability& c,
                                              uint32_t new_size) = 0;
  virtual void DoReset() = 0;

  // Narrows the region capability to [base, base + length) and applies the
  // engine's permission policy.
  Result<Capability, Fault> Derive(uint32_t base, uint32_t length) const;
  // The region capability positioned at `address`, unnarrowed.
  Capability Unnarrowed(uint32_t address) const;

  // Copies `copy_len` bytes from src to dst and zeroes [copy_len, dst_len)
  // of the destination, all under the region's authority.
  Status<Fault> MoveContents(uint32_t src, uint32_t dst, uint32_t copy_len,
                             uint32_t dst_len);

 private:
  AllocatorTraits traits_;
  TaggedHeap& heap_;
  Capability region_;
  BoundsMode bounds_mode_;
};

inline uint32_t RoundUp16(uint32_t n) { return (n + 15u) & ~15u; }

using AllocatorFactory = std::function<std::unique_ptr<Allocator>(
    TaggedHeap& heap, const Capability& region, BoundsMode mode)>;

struct RegistryEntry {
  AllocatorTraits traits;
  AllocatorFactory factory;
};

class Registry {
 public:
  // Throws std::invalid_argument on a duplicate name.
  void Add(RegistryEntry entry);
  const RegistryEntry* Find(std::string_view name) const;
  const std::vector<RegistryEntry>& entries() const { return entries_; }
  std::vector<std::string> names() const;
  // True iff the registry holds exactly the seven canonical names.
  bool IsCanonical() const;

 private:
  std::vector<RegistryEntry> entries_;
};

// The seven reference configurations, in table order.
const Registry& CanonicalRegistry();

struct SandboxOptions {
  uint32_t heap_size = kDefaultHeapSize;
  BoundsMode bounds_mode = BoundsMode::kExact;
};

// A heap and one allocator bound to it, with the region spanning the whole
// heap.
class Sandbox {
 public:
  Sandbox(const RegistryEntry& entry, SandboxOptions options = {});

  Allocator& allocator() { return *allocator_; }
  TaggedHeap& heap() { return *heap_; }

 private:
  std::unique_ptr<TaggedHeap> heap_;
  std::unique_ptr<Allocator> allocator_;
};

// Shorthand for Sandbox(*CanonicalRegistry().Find(name), options). Throws
// std::out_of_range for an unknown name.
Sandbox MakeSandbox(std::string_view name, SandboxOptions options = {});

}  // namespace caplab

#endif  // CAPLAB_ALLOCATOR_H_

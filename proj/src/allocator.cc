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

#include "caplab/allocator.h"

#include <algorithm>
#include <stdexcept>

namespace caplab {
namespace {

AllocatorTraits T(std::string name, bool narrow, bool deferred, bool strips,
                  FreeValidation validation, bool df_detect, bool in_place) {
  return AllocatorTraits{.name = std::move(name),
                         .narrow_bounds = narrow,
                         .deferred_free = deferred,
                         .strips_exec = strips,
                         .free_validation = validation,
                         .double_free_detect = df_detect,
                         .realloc_grows_in_place = in_place};
}

const std::vector<AllocatorTraits>& TraitsTable() {
  using V = FreeValidation;
  static const std::vector<AllocatorTraits> table = {
      T("bump-alloc-cheri", true, false, false, V::kNone, false, false),
      T("bump-alloc-nocheri", false, false, false, V::kAllocLog, true, false),
      T("dlmalloc-cheribuild", true, false, false, V::kInlineHeader, false,
        false),
      T("jemalloc", true, false, true, V::kInlineHeader, false, false),
      T("libmalloc-simple", true, false, true, V::kInlineHeader, false, true),
      T("snmalloc-cheribuild", true, true, false, V::kMetadataLookup, false,
        true),
      T("snmalloc-repo", true, false, false, V::kMetadataLookup, false, true),
  };
  return table;
}

}  // namespace

std::string_view FreeValidationName(FreeValidation v) {
  switch (v) {
    case FreeValidation::kNone:
      return "none";
    case FreeValidation::kInlineHeader:
      return "inline-header";
    case FreeValidation::kMetadataLookup:
      return "metadata-lookup";
    case FreeValidation::kAllocLog:
      return "alloc-log";
  }
  return "unknown";
}

const AllocatorTraits& CanonicalTraits(std::string_view name) {
  for (const auto& t : TraitsTable()) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("unknown allocator: " + std::string(name));
}

std::string_view AllocErrorKindName(AllocErrorKind kind) {
  switch (kind) {
    case AllocErrorKind::kOutOfMemory:
      return "OutOfMemory";
    case AllocErrorKind::kInvalidFree:
      return "InvalidFree";
    case AllocErrorKind::kDoubleFree:
      return "DoubleFree";
    case AllocErrorKind::kBadRequest:
      return "BadRequest";
  }
  return "UnknownAllocError";
}

std::string_view FaultName(const Fault& f) {
  if (const auto* cap = std::get_if<CapFault>(&f)) {
    return CapFaultKindName(cap->kind);
  }
  return AllocErrorKindName(std::get<AllocError>(f).kind);
}

std::string DescribeFault(const Fault& f) {
  std::string detail = std::visit([](const auto& e) { return e.detail; }, f);
  std::string out(FaultName(f));
  if (!detail.empty()) out += ": " + detail;
  return out;
}

Allocator::Allocator(AllocatorTraits traits, TaggedHeap& heap,
                     Capability region, BoundsMode mode)
    : traits_(std::move(traits)),
      heap_(heap),
      region_(region),
      bounds_mode_(mode) {}

Result<Capability, Fault> Allocator::Malloc(uint32_t size) {
  if (size == 0) {
    return Fault{AllocError{AllocErrorKind::kBadRequest, "malloc(0)"}};
  }
  return DoMalloc(size);
}

Status<Fault> Allocator::Free(const Capability& c) { return DoFree(c); }

Result<Capability, Fault> Allocator::Realloc(const Capability& c,
                                             uint32_t new_size) {
  if (new_size == 0) {
    return Fault{AllocError{AllocErrorKind::kBadRequest, "realloc to size 0"}};
  }
  return DoRealloc(c, new_size);
}

void Allocator::Reset() {
  heap_.Clear();
  DoReset();
}

Result<Capability, Fault> Allocator::Derive(uint32_t base,
                                            uint32_t length) const {
  auto narrowed = SetBounds(region_, base, length, bounds_mode_);
  if (!narrowed) return Fault{narrowed.error()};
  Capability out = narrowed.value();
  if (traits_.strips_exec) out = AndPerms(out, out.perms.Without(Perm::kExec));
  return out;
}

Capability Allocator::Unnarrowed(uint32_t address) const {
  Capability out = SetAddress(region_, address);
  if (traits_.strips_exec) out = AndPerms(out, out.perms.Without(Perm::kExec));
  return out;
}

Status<Fault> Allocator::MoveContents(uint32_t src, uint32_t dst,
                                      uint32_t copy_len, uint32_t dst_len) {
  if (copy_len > 0) {
    auto bytes = heap_.Load(region_, src, copy_len);
    if (!bytes) return Fault{bytes.error()};
    if (auto s = heap_.Store(region_, dst, bytes.value()); !s) {
      return Fault{s.error()};
    }
  }
  if (dst_len > copy_len) {
    if (auto s = heap_.Fill(region_, dst + copy_len, dst_len - copy_len); !s) {
      return Fault{s.error()};
    }
  }
  return Ok();
}

void Registry::Add(RegistryEntry entry) {
  if (Find(entry.traits.name) != nullptr) {
    throw std::invalid_argument("duplicate allocator name: " +
                                entry.traits.name);
  }
  entries_.push_back(std::move(entry));
}

const RegistryEntry* Registry::Find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.traits.name == name) return &e;
  }
  return nullptr;
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.traits.name);
  return out;
}

bool Registry::IsCanonical() const {
  if (entries_.size() != kCanonicalAllocators.size()) return false;
  return std::all_of(kCanonicalAllocators.begin(), kCanonicalAllocators.end(),
                     [this](std::string_view n) { return Find(n) != nullptr; });
}

Sandbox::Sandbox(const RegistryEntry& entry, SandboxOptions options)
    : heap_(std::make_unique<TaggedHeap>(options.heap_size)) {
  allocator_ = entry.factory(*heap_, MakeRoot(options.heap_size),
                             options.bounds_mode);
}

Sandbox MakeSandbox(std::string_view name, SandboxOptions options) {
  const RegistryEntry* entry = CanonicalRegistry().Find(name);
  if (entry == nullptr) {
    throw std::out_of_range("unknown allocator: " + std::string(name));
  }
  return Sandbox(*entry, options);
}

}  // namespace caplab

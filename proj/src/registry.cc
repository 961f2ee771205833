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
#include "caplab/bump_allocator.h"
#include "caplab/freelist_allocator.h"
#include "caplab/slab_allocator.h"

namespace caplab {
namespace {

// Each canonical row is one of three engines, configured from its traits.
AllocatorFactory FactoryFor(const AllocatorTraits& traits) {
  switch (traits.free_validation) {
    case FreeValidation::kNone:
    case FreeValidation::kAllocLog:
      return [traits](TaggedHeap& heap, const Capability& region,
                      BoundsMode mode) -> std::unique_ptr<Allocator> {
        BumpConfig config{
            .narrow_bounds = traits.narrow_bounds,
            .alloc_log = traits.free_validation == FreeValidation::kAllocLog};
        return std::make_unique<BumpAllocator>(traits, heap, region, config,
                                               mode);
      };
    case FreeValidation::kInlineHeader:
      return [traits](TaggedHeap& heap, const Capability& region,
                      BoundsMode mode) -> std::unique_ptr<Allocator> {
        FreelistConfig config{.realloc_in_place =
                                  traits.realloc_grows_in_place};
        return std::make_unique<FreelistAllocator>(traits, heap, region,
                                                   config, mode);
      };
    case FreeValidation::kMetadataLookup:
      return [traits](TaggedHeap& heap, const Capability& region,
                      BoundsMode mode) -> std::unique_ptr<Allocator> {
        SlabConfig config{.deferred_free = traits.deferred_free,
                          .double_free_check = traits.double_free_detect,
                          .realloc_in_place = traits.realloc_grows_in_place};
        return std::make_unique<SlabAllocator>(traits, heap, region, config,
                                               mode);
      };
  }
  return nullptr;
}

}  // namespace

const Registry& CanonicalRegistry() {
  static const Registry registry = [] {
    Registry r;
    for (std::string_view name : kCanonicalAllocators) {
      const AllocatorTraits& traits = CanonicalTraits(name);
      r.Add(RegistryEntry{traits, FactoryFor(traits)});
    }
    return r;
  }();
  return registry;
}

}  // namespace caplab

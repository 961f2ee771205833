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

// Test-only oracles. Nothing here calls into the code paths it checks
// beyond the public operation being exercised.

#ifndef CAPLAB_TESTS_ORACLES_H_
#define CAPLAB_TESTS_ORACLES_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "caplab/allocator.h"
#include "caplab/attacks.h"

namespace caplab::testing {

// Predicts a matrix row from the traits record alone, using the probes'
// decision rules rather than running any engine.
std::array<Outcome, 5> PredictRow(const AllocatorTraits& traits);

// Half-open byte intervals, rejecting overlaps.
class IntervalSet {
 public:
  // False (and no change) if [lo, hi) overlaps a stored interval.
  bool Insert(uint64_t lo, uint64_t hi);
  void Erase(uint64_t lo) { map_.erase(lo); }
  size_t size() const { return map_.size(); }

 private:
  std::map<uint64_t, uint64_t> map_;
};

struct PropertyStats {
  uint64_t cases = 0;
  uint64_t steps = 0;
  uint64_t violations = 0;
  std::string first_violation;

  void Fail(std::string what) {
    if (violations++ == 0) first_violation = std::move(what);
  }
};

// Random derivation chains from a root over `heap_size` bytes, each of
// random depth in [1, max_depth], mixing set_bounds (exact and rounding),
// and_perms, set_address and clear_tag.
PropertyStats RunDerivationChains(uint64_t seed, int chains, int max_depth,
                                  uint32_t heap_size);

// Random valid malloc/free/realloc sequences against one allocator. Checks
// live ranges are pairwise disjoint, capabilities stay inside the region,
// and every block keeps its contents until freed.
PropertyStats RunAllocatorSequences(const RegistryEntry& entry, uint64_t seed,
                                    int sequences, int length,
                                    uint32_t heap_size);

}  // namespace caplab::testing

#endif  // CAPLAB_TESTS_ORACLES_H_

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

#include "oracles.h"

#include <random>
#include <vector>

#include "caplab/capability.h"

namespace caplab::testing {

std::array<Outcome, 5> PredictRow(const AllocatorTraits& t) {
  constexpr Outcome S = Outcome::kSucceeds;
  constexpr Outcome T = Outcome::kThwarted;
  constexpr Outcome NA = Outcome::kNotApplicable;
  return {
      // Nothing revokes, so a dangling capability keeps working.
      S,
      // Widening needs narrowed bounds; in-place growth exposes the victim,
      // a moving realloc lands on zeroed memory.
      !t.narrow_bounds ? NA : (t.realloc_grows_in_place ? S : T),
      // Only an inline header read through the client's capability notices
      // the narrowing.
      t.free_validation == FreeValidation::kInlineHeader ? T : S,
      t.deferred_free ? NA : (t.double_free_detect ? T : S),
      t.strips_exec ? T : S,
  };
}

bool IntervalSet::Insert(uint64_t lo, uint64_t hi) {
  auto next = map_.lower_bound(lo);
  if (next != map_.end() && next->first < hi) return false;
  if (next != map_.begin()) {
    auto prev = std::prev(next);
    if (prev->second > lo) return false;
  }
  map_.emplace(lo, hi);
  return true;
}

namespace {

// Alignment a rounding-mode set_bounds must produce, computed by search.
uint64_t RoundingAlignment(uint64_t length) {
  int e = 0;
  while ((uint64_t{1} << e) < length) ++e;
  return uint64_t{1} << (e - 8);
}

bool Within(uint64_t lo, uint64_t hi, const Capability& outer) {
  return lo >= outer.base && hi <= outer.top && lo <= hi;
}

std::string Describe(const char* what, const Capability& c) {
  return std::string(what) + " " + c.ToString();
}

}  // namespace

PropertyStats RunDerivationChains(uint64_t seed, int chains, int max_depth,
                                  uint32_t heap_size) {
  PropertyStats stats;
  std::mt19937_64 rng(seed);
  auto uniform = [&](uint64_t lo, uint64_t hi) {
    return std::uniform_int_distribution<uint64_t>(lo, hi)(rng);
  };
  const Capability root = MakeRoot(heap_size);

  for (int chain = 0; chain < chains; ++chain) {
    ++stats.cases;
    Capability cur = root;
    int depth = static_cast<int>(uniform(1, max_depth));
    for (int d = 0; d < depth; ++d) {
      ++stats.steps;
      Capability next = cur;
      int op = static_cast<int>(uniform(0, 19));
      if (op < 10) {
        bool inside = uniform(0, 4) != 0 && cur.top > cur.base;
        uint32_t base, length;
        if (inside) {
          base = static_cast<uint32_t>(uniform(cur.base, cur.top - 1));
          length = static_cast<uint32_t>(uniform(0, cur.top - base));
        } else {
          base = static_cast<uint32_t>(uniform(0, heap_size));
          length = static_cast<uint32_t>(uniform(0, heap_size));
        }
        BoundsMode mode = uniform(0, 1) ? BoundsMode::kRounding : BoundsMode::kExact;
        auto r = SetBounds(cur, base, length, mode);
        uint64_t lo = base, hi = uint64_t{base} + length;
        bool fits = cur.tag && Within(lo, hi, cur);
        if (!cur.tag) {
          if (r || r.error().kind != CapFaultKind::kTagViolation) {
            stats.Fail(Describe("set_bounds on untagged did not TagViolation", cur));
          }
        } else if (!fits) {
          if (r || r.error().kind != CapFaultKind::kMonotonicityViolation) {
            stats.Fail(Describe("escaping set_bounds not rejected", cur));
          }
        } else if (mode == BoundsMode::kExact || length <= 4096) {
          if (!r) {
            stats.Fail(Describe("contained set_bounds rejected", cur));
          } else if (r->base != lo || r->top != hi || r->address != base ||
                     r->perms != cur.perms || !r->tag) {
            stats.Fail(Describe("exact set_bounds wrong child", r.value()));
          } else {
            next = r.value();
          }
        } else {
          uint64_t align = RoundingAlignment(length);
          uint64_t want_lo = lo / align * align;
          uint64_t want_hi = (hi + align - 1) / align * align;
          bool representable = Within(want_lo, want_hi, cur);
          if (representable != r.ok()) {
            stats.Fail(Describe("rounding set_bounds acceptance wrong", cur));
          } else if (r) {
            if (r->base != want_lo || r->top != want_hi || !Within(lo, hi, *r)) {
              stats.Fail(Describe("rounding set_bounds wrong child", r.value()));
            }
            next = r.value();
          }
        }
      } else if (op < 14) {
        auto mask = PermissionSet::FromBits(static_cast<uint8_t>(uniform(0, 63)));
        next = AndPerms(cur, mask);
        if (next.perms.bits() != (cur.perms.bits() & mask.bits())) {
          stats.Fail(Describe("and_perms not an intersection", next));
        }
      } else if (op < 19) {
        next = SetAddress(cur, static_cast<uint32_t>(uniform(0, UINT32_MAX)));
      } else {
        next = ClearTag(cur);
        if (next.tag) stats.Fail(Describe("clear_tag left tag set", next));
      }

      if (!cur.tag && next.tag) stats.Fail(Describe("tag resurrected", next));
      if (next.tag) {
        if (!Within(next.base, next.top, root) || !Within(next.base, next.top, cur)) {
          stats.Fail(Describe("bounds grew", next));
        }
        if (!root.perms.Contains(next.perms) || !cur.perms.Contains(next.perms)) {
          stats.Fail(Describe("perms grew", next));
        }
      }

      // check_access is pure and agrees with the containment rule.
      uint32_t addr = static_cast<uint32_t>(uniform(0, heap_size));
      uint32_t len = static_cast<uint32_t>(uniform(1, 64));
      PermissionSet need{Perm::kLoad};
      const Capability before = next;
      auto a1 = CheckAccess(next, addr, len, need);
      auto a2 = CheckAccess(next, addr, len, need);
      bool want_ok = next.tag && next.perms.Contains(need) &&
                     Within(addr, uint64_t{addr} + len, next);
      if (a1.ok() != want_ok || a2.ok() != a1.ok() || !(before == next) ||
          (!a1.ok() && a1.error().kind != a2.error().kind)) {
        stats.Fail(Describe("check_access disagrees with containment", next));
      }
      cur = next;
    }
  }
  return stats;
}

namespace {

struct Live {
  Capability cap;
  uint32_t size;
  uint8_t fill;
};

bool ContentIntact(TaggedHeap& heap, const Live& b, uint32_t length) {
  if (length == 0) return true;
  auto bytes = heap.Load(b.cap, b.cap.address, length);
  if (!bytes) return false;
  for (uint8_t v : bytes.value()) {
    if (v != b.fill) return false;
  }
  return true;
}

}  // namespace

PropertyStats RunAllocatorSequences(const RegistryEntry& entry, uint64_t seed,
                                    int sequences, int length,
                                    uint32_t heap_size) {
  PropertyStats stats;
  std::mt19937_64 rng(seed);
  auto uniform = [&](uint64_t lo, uint64_t hi) {
    return std::uniform_int_distribution<uint64_t>(lo, hi)(rng);
  };
  Sandbox sandbox(entry, SandboxOptions{.heap_size = heap_size});
  Allocator& alloc = sandbox.allocator();
  const Capability region = alloc.region();
  const bool narrow = entry.traits.narrow_bounds;
  const std::string& name = entry.traits.name;
  uint8_t fill = 1;

  for (int seq = 0; seq < sequences; ++seq) {
    ++stats.cases;
    alloc.Reset();
    std::vector<Live> live;
    IntervalSet ranges;
    IntervalSet bounds;

    auto admit = [&](const Capability& c, uint32_t size) -> bool {
      if (!c.tag || !Within(c.base, c.top, region)) {
        stats.Fail(name + ": capability outside region " + c.ToString());
        return false;
      }
      if (!c.perms.Contains(PermissionSet{Perm::kLoad, Perm::kStore}) ||
          (entry.traits.strips_exec && c.perms.Has(Perm::kExec))) {
        stats.Fail(name + ": wrong permissions " + c.ToString());
        return false;
      }
      if (!Within(c.address, uint64_t{c.address} + size, c)) {
        stats.Fail(name + ": capability does not cover the request " + c.ToString());
        return false;
      }
      if (!ranges.Insert(c.address, uint64_t{c.address} + size)) {
        stats.Fail(name + ": live allocations overlap at " + c.ToString());
        return false;
      }
      if (narrow && !bounds.Insert(c.base, c.top)) {
        stats.Fail(name + ": narrowed bounds overlap at " + c.ToString());
        ranges.Erase(c.address);
        return false;
      }
      return true;
    };
    auto retire = [&](const Live& b) {
      ranges.Erase(b.cap.address);
      if (narrow) bounds.Erase(b.cap.base);
    };
    auto paint = [&](Live& b) {
      b.fill = fill = static_cast<uint8_t>(fill % 250 + 1);
      auto s = alloc.heap().Fill(b.cap, b.cap.address, b.size, b.fill);
      if (!s) stats.Fail(name + ": cannot write own block " + b.cap.ToString());
    };

    for (int i = 0; i < length; ++i) {
      ++stats.steps;
      int op = live.empty() ? 0 : static_cast<int>(uniform(0, 3));
      if (op <= 1) {
        auto size = static_cast<uint32_t>(uniform(1, 512));
        auto c = alloc.Malloc(size);
        if (!c) {
          const auto* e = std::get_if<AllocError>(&c.error());
          if (!e || e->kind != AllocErrorKind::kOutOfMemory) {
            stats.Fail(name + ": malloc failed: " + DescribeFault(c.error()));
          }
          continue;
        }
        if (!admit(c.value(), size)) continue;
        Live b{c.value(), size, 0};
        paint(b);
        live.push_back(b);
      } else if (op == 2) {
        size_t k = uniform(0, live.size() - 1);
        Live b = live[k];
        if (!ContentIntact(alloc.heap(), b, b.size)) {
          stats.Fail(name + ": block clobbered before free " + b.cap.ToString());
        }
        auto s = alloc.Free(b.cap);
        if (!s) stats.Fail(name + ": valid free rejected: " + DescribeFault(s.error()));
        retire(b);
        live.erase(live.begin() + static_cast<long>(k));
      } else {
        size_t k = uniform(0, live.size() - 1);
        Live b = live[k];
        auto new_size = static_cast<uint32_t>(uniform(1, 1024));
        auto c = alloc.Realloc(b.cap, new_size);
        if (!c) {
          const auto* e = std::get_if<AllocError>(&c.error());
          if (!e || e->kind != AllocErrorKind::kOutOfMemory) {
            stats.Fail(name + ": realloc failed: " + DescribeFault(c.error()));
          }
          continue;
        }
        retire(b);
        live.erase(live.begin() + static_cast<long>(k));
        if (!admit(c.value(), new_size)) continue;
        Live moved{c.value(), new_size, b.fill};
        if (!ContentIntact(alloc.heap(), moved, std::min(b.size, new_size))) {
          stats.Fail(name + ": realloc lost contents " + moved.cap.ToString());
        }
        paint(moved);
        live.push_back(moved);
      }
    }
  }
  return stats;
}

}  // namespace caplab::testing

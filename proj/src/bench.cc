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

#include "caplab/bench.h"

#include <algorithm>
#include <chrono>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace caplab {
namespace {

constexpr size_t kChurnWindow = 64;
constexpr uint64_t kZeroSeedReplacement = 0x9e3779b97f4a7c15ull;

struct LiveBlock {
  Capability cap;
  uint32_t size;
};

class Meter {
 public:
  explicit Meter(Allocator& alloc) : alloc_(alloc) {}

  // Returns false on out-of-memory.
  bool Malloc(uint32_t size, std::deque<LiveBlock>& live) {
    auto c = alloc_.Malloc(size);
    if (!Check(c.ok() ? nullptr : &c.error())) return false;
    live.push_back(LiveBlock{c.value(), size});
    Account(static_cast<int64_t>(size));
    return true;
  }

  // Churn frees are part of the malloc that displaced them and are not
  // counted as operations of their own.
  void Free(std::deque<LiveBlock>& live, bool counts_as_op) {
    LiveBlock b = live.front();
    live.pop_front();
    auto s = alloc_.Free(b.cap);
    if (!s) throw std::logic_error("bench free rejected: " + DescribeFault(s.error()));
    if (counts_as_op) ++result.ops_completed;
    Account(-static_cast<int64_t>(b.size));
  }

  bool Realloc(LiveBlock& block, uint32_t size) {
    auto c = alloc_.Realloc(block.cap, size);
    if (!Check(c.ok() ? nullptr : &c.error())) return false;
    Account(static_cast<int64_t>(size) - block.size);
    block = LiveBlock{c.value(), size};
    return true;
  }

  BenchResult result;

 private:
  bool Check(const Fault* fault) {
    if (fault == nullptr) {
      ++result.ops_completed;
      return true;
    }
    const auto* e = std::get_if<AllocError>(fault);
    if (e != nullptr && e->kind == AllocErrorKind::kOutOfMemory) {
      ++result.oom_count;
      return false;
    }
    throw std::logic_error("bench request rejected: " + DescribeFault(*fault));
  }

  void Account(int64_t delta) {
    live_bytes_ += delta;
    result.peak_live_bytes =
        std::max(result.peak_live_bytes, static_cast<uint64_t>(live_bytes_));
  }

  Allocator& alloc_;
  int64_t live_bytes_ = 0;
};

uint64_t ParseU64(const std::string& s) {
  size_t pos = 0;
  uint64_t v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a number: " + s);
  return v;
}

}  // namespace

std::string_view WorkloadKindName(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::kChurn:
      return "churn";
    case WorkloadKind::kRandSize:
      return "randsize";
    case WorkloadKind::kReallocRamp:
      return "reallocramp";
  }
  return "unknown";
}

std::optional<WorkloadKind> ParseWorkloadKind(std::string_view s) {
  for (auto k : {WorkloadKind::kChurn, WorkloadKind::kRandSize,
                 WorkloadKind::kReallocRamp}) {
    if (WorkloadKindName(k) == s) return k;
  }
  return std::nullopt;
}

void Workload::Validate() const {
  if (op_count == 0) throw std::invalid_argument("op_count must be >= 1");
  if (kind == WorkloadKind::kChurn && size == 0) {
    throw std::invalid_argument("churn size must be >= 1");
  }
  if (kind == WorkloadKind::kRandSize && (min_size == 0 || min_size > max_size)) {
    throw std::invalid_argument("randsize needs 1 <= min_size <= max_size");
  }
}

std::string Workload::Descriptor() const {
  Validate();
  std::string out(WorkloadKindName(kind));
  out += ";ops=" + std::to_string(op_count);
  switch (kind) {
    case WorkloadKind::kChurn:
      out += ";size=" + std::to_string(size);
      break;
    case WorkloadKind::kRandSize:
      out += ";seed=" + std::to_string(seed) + ";min=" + std::to_string(min_size) +
             ";max=" + std::to_string(max_size);
      break;
    case WorkloadKind::kReallocRamp:
      break;
  }
  return out;
}

XorShift64::XorShift64(uint64_t seed)
    : state_(seed == 0 ? kZeroSeedReplacement : seed) {}

uint64_t XorShift64::Next() {
  state_ ^= state_ << 13;
  state_ ^= state_ >> 7;
  state_ ^= state_ << 17;
  return state_;
}

bool BenchResult::SameCounters(const BenchResult& o) const {
  return allocator == o.allocator && workload == o.workload &&
         ops_completed == o.ops_completed &&
         peak_live_bytes == o.peak_live_bytes &&
         peak_touched_bytes == o.peak_touched_bytes && oom_count == o.oom_count;
}

BenchResult RunWorkload(Allocator& alloc, const Workload& w) {
  Meter meter(alloc);
  meter.result.allocator = alloc.traits().name;
  meter.result.workload = w.Descriptor();
  std::deque<LiveBlock> live;

  auto start = std::chrono::steady_clock::now();
  switch (w.kind) {
    case WorkloadKind::kChurn:
      for (uint32_t i = 0; i < w.op_count; ++i) {
        meter.Malloc(w.size, live);
        if (live.size() > kChurnWindow) meter.Free(live, false);
      }
      break;
    case WorkloadKind::kRandSize: {
      XorShift64 rng(w.seed);
      const uint64_t span = uint64_t{w.max_size} - w.min_size + 1;
      for (uint32_t i = 0; i < w.op_count; ++i) {
        bool do_malloc = live.empty() || (rng.Next() & 1) == 0;
        if (do_malloc) {
          auto size = static_cast<uint32_t>(w.min_size + rng.Next() % span);
          meter.Malloc(size, live);
        } else {
          meter.Free(live, true);
        }
      }
      break;
    }
    case WorkloadKind::kReallocRamp: {
      if (!meter.Malloc(16, live)) break;
      for (uint32_t i = 1; i < w.op_count; ++i) {
        meter.Realloc(live.front(), 16 * (i + 1));
      }
      break;
    }
  }
  auto end = std::chrono::steady_clock::now();
  meter.result.elapsed_ns = static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(end - start).count());
  meter.result.peak_touched_bytes = alloc.HighWaterBytes();
  return meter.result;
}

std::string EmitBenchCsv(std::span<const BenchResult> results) {
  std::ostringstream out;
  out << "allocator,workload,ops,elapsed_ns,peak_live_bytes,peak_touched_bytes,"
         "oom_count\n";
  for (const auto& r : results) {
    out << r.allocator << ',' << r.workload << ',' << r.ops_completed << ','
        << r.elapsed_ns << ',' << r.peak_live_bytes << ','
        << r.peak_touched_bytes << ',' << r.oom_count << '\n';
  }
  return out.str();
}

std::vector<BenchResult> ParseBenchCsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("allocator,workload,ops,", 0) != 0) {
    throw std::invalid_argument("missing bench csv header");
  }
  std::vector<BenchResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) f.push_back(field);
    if (f.size() != 7) throw std::invalid_argument("bench row needs 7 fields");
    BenchResult r;
    r.allocator = f[0];
    r.workload = f[1];
    try {
      r.ops_completed = ParseU64(f[2]);
      r.elapsed_ns = ParseU64(f[3]);
      r.peak_live_bytes = ParseU64(f[4]);
      r.peak_touched_bytes = ParseU64(f[5]);
      r.oom_count = ParseU64(f[6]);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad number in bench row: " + line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace caplab

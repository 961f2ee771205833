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

// Five deterministic heap-safety probes. Each probe drives a fresh
// allocator through a short recorded script and classifies the result as
// Succeeds, Thwarted or NotApplicable. The recorded trace is replayable
// against another fresh instance.

#ifndef CAPLAB_ATTACKS_H_
#define CAPLAB_ATTACKS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caplab/allocator.h"
#include "caplab/capability.h"

namespace caplab {

enum class Outcome { kSucceeds, kThwarted, kNotApplicable };

// "✓", "×", "⊘".
std::string_view OutcomeGlyph(Outcome o);
// "S", "T", "NA".
std::string_view OutcomeToken(Outcome o);
// "succeeds", "thwarted", "not_applicable".
std::string_view OutcomeJsonName(Outcome o);
// "succeeds", "thwarted", "not applicable".
std::string_view OutcomeWords(Outcome o);
std::optional<Outcome> ParseOutcomeToken(std::string_view s);
std::optional<Outcome> ParseOutcomeJsonName(std::string_view s);

enum class AttackId { kA1, kA2, kA3, kA4, kA5 };

inline constexpr std::array<AttackId, 5> kAllAttacks = {
    AttackId::kA1, AttackId::kA2, AttackId::kA3, AttackId::kA4, AttackId::kA5};

std::string_view AttackIdName(AttackId id);     // "A1".."A5"
std::string_view AttackTitle(AttackId id);      // short description
std::optional<AttackId> ParseAttackId(std::string_view s);

enum class StepOp { kMalloc, kFree, kRealloc, kStore, kLoad, kSetBounds, kNote };

std::string_view StepOpName(StepOp op);

struct StepResult {
  bool ok = true;
  std::optional<Capability> cap;
  std::vector<uint8_t> data;
  std::string fault;  // fault kind name when !ok

  friend bool operator==(const StepResult&, const StepResult&) = default;
};

// One recorded operation. `target` names an earlier step whose capability
// result is the operand; `offset` is relative to that capability's address.
struct Step {
  StepOp op = StepOp::kNote;
  std::string label;
  int target = -1;
  uint32_t offset = 0;
  uint32_t size = 0;
  std::vector<uint8_t> payload;
  std::string note;
  StepResult result;

  std::string ToString(int index) const;
};

using Trace = std::vector<Step>;

// Runs one step against `alloc`, resolving operands from `prior`. Held
// capabilities pass through Allocator::Revoke before use.
StepResult ExecuteStep(Allocator& alloc, const Trace& prior, const Step& step);

// Executes steps as the probe issues them and records the results.
class ProbeSession {
 public:
  explicit ProbeSession(Allocator& alloc) : alloc_(alloc) {}

  int Malloc(uint32_t size, std::string label);
  int Free(int target, std::string label);
  int Realloc(int target, uint32_t size, std::string label);
  int Store(int target, uint32_t offset, std::vector<uint8_t> bytes,
            std::string label);
  int Load(int target, uint32_t offset, uint32_t length, std::string label);
  int SetBounds(int target, uint32_t offset, uint32_t length,
                std::string label);
  int Note(std::string label, std::string text);

  Allocator& allocator() { return alloc_; }
  const Step& step(int index) const { return trace_.at(index); }
  const Trace& trace() const { return trace_; }
  Trace Take() { return std::move(trace_); }

 private:
  int Record(Step step);

  Allocator& alloc_;
  Trace trace_;
};

struct Verdict {
  Outcome outcome;
  std::string reason;
};

// The outcome is a function of the trace alone.
Verdict Classify(AttackId id, const Trace& trace);

struct AttackReport {
  AttackId attack;
  std::string allocator;
  Outcome outcome;
  std::string reason;
  Trace trace;
};

// `alloc` must be fresh (new or just Reset).
AttackReport RunAttack(AttackId id, Allocator& alloc);

struct ReplayResult {
  bool steps_match = true;
  int first_mismatch = -1;
  Outcome outcome = Outcome::kNotApplicable;
};

ReplayResult ReplayTrace(const AttackReport& report, Allocator& fresh);

}  // namespace caplab

#endif  // CAPLAB_ATTACKS_H_

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

#include "caplab/attacks.h"

#include <algorithm>
#include <cstdio>

namespace caplab {
namespace {

constexpr uint8_t kUafSentinel = 0x5a;
constexpr uint8_t kVictimSentinel = 0xab;
constexpr uint32_t kVictimSize = 32;
constexpr uint32_t kWidenedSize = 128;
constexpr int kAdjacencyAttempts = 8;

// Label of the kNote step that marks a probe as not applicable.
constexpr std::string_view kNotApplicable = "not-applicable";

const Step* FindStep(const Trace& trace, std::string_view label) {
  for (const Step& s : trace) {
    if (s.label == label) return &s;
  }
  return nullptr;
}

bool AllEqual(const std::vector<uint8_t>& bytes, size_t n, uint8_t value) {
  return bytes.size() == n &&
         std::all_of(bytes.begin(), bytes.end(),
                     [value](uint8_t b) { return b == value; });
}

std::string FaultOr(const Step* s, std::string fallback) {
  if (s == nullptr) return "step missing";
  return s->result.ok ? fallback : s->result.fault;
}

StepResult FromFault(const Fault& f) {
  StepResult r;
  r.ok = false;
  r.fault = std::string(FaultName(f));
  return r;
}

StepResult FromCapFault(const CapFault& f) {
  StepResult r;
  r.ok = false;
  r.fault = std::string(CapFaultKindName(f.kind));
  return r;
}

StepResult FromCap(const Result<Capability, Fault>& c) {
  if (!c) return FromFault(c.error());
  StepResult r;
  r.cap = c.value();
  return r;
}

void ProbeUseAfterFree(ProbeSession& s) {
  int p = s.Malloc(64, "alloc");
  s.Store(p, 0, std::vector<uint8_t>(64, kUafSentinel), "plant");
  s.Free(p, "free");
  s.Load(p, 0, 8, "probe");
}

void ProbeReallocWidening(ProbeSession& s) {
  if (!s.allocator().traits().narrow_bounds) {
    s.Note(std::string(kNotApplicable), "bounds not narrowed");
    return;
  }
  int owner = s.Malloc(kVictimSize, "owner");
  const std::optional<Capability> owner_cap = s.step(owner).result.cap;
  int victim = -1;
  uint32_t offset = 0;
  for (int i = 0; i < kAdjacencyAttempts && owner_cap; ++i) {
    int candidate = s.Malloc(kVictimSize, "candidate");
    const std::optional<Capability> cap = s.step(candidate).result.cap;
    if (!cap) break;
    // The victim must sit where a grown owner would cover it.
    uint32_t p = owner_cap->address;
    if (cap->address > p && cap->address - p + kVictimSize <= kWidenedSize) {
      victim = candidate;
      offset = cap->address - p;
      break;
    }
  }
  if (victim < 0) {
    s.Note(std::string(kNotApplicable), "no adjacent victim");
    return;
  }
  s.Store(victim, 0, std::vector<uint8_t>(kVictimSize, kVictimSentinel), "plant");
  s.Free(victim, "free-victim");
  int grown = s.Realloc(owner, kWidenedSize, "widen");
  s.Load(grown, offset, kVictimSize, "probe");
}

void ProbeFreeNarrowed(ProbeSession& s) {
  int p = s.Malloc(64, "alloc");
  int n = s.SetBounds(p, 0, 16, "narrow");
  s.Free(n, "free-narrowed");
}

void ProbeDoubleFree(ProbeSession& s) {
  if (s.allocator().traits().deferred_free) {
    s.Note(std::string(kNotApplicable), "deferred free");
    return;
  }
  int p = s.Malloc(48, "alloc");
  s.Free(p, "first-free");
  s.Free(p, "second-free");
}

void ProbeExcessPermissions(ProbeSession& s) { s.Malloc(32, "alloc"); }

}  // namespace

std::string_view OutcomeGlyph(Outcome o) {
  switch (o) {
    case Outcome::kSucceeds:
      return "✓";
    case Outcome::kThwarted:
      return "×";
    case Outcome::kNotApplicable:
      return "⊘";
  }
  return "?";
}

std::string_view OutcomeToken(Outcome o) {
  switch (o) {
    case Outcome::kSucceeds:
      return "S";
    case Outcome::kThwarted:
      return "T";
    case Outcome::kNotApplicable:
      return "NA";
  }
  return "?";
}

std::string_view OutcomeJsonName(Outcome o) {
  switch (o) {
    case Outcome::kSucceeds:
      return "succeeds";
    case Outcome::kThwarted:
      return "thwarted";
    case Outcome::kNotApplicable:
      return "not_applicable";
  }
  return "?";
}

std::string_view OutcomeWords(Outcome o) {
  return o == Outcome::kNotApplicable ? "not applicable" : OutcomeJsonName(o);
}

std::optional<Outcome> ParseOutcomeToken(std::string_view s) {
  for (Outcome o : {Outcome::kSucceeds, Outcome::kThwarted,
                    Outcome::kNotApplicable}) {
    if (OutcomeToken(o) == s) return o;
  }
  return std::nullopt;
}

std::optional<Outcome> ParseOutcomeJsonName(std::string_view s) {
  for (Outcome o : {Outcome::kSucceeds, Outcome::kThwarted,
                    Outcome::kNotApplicable}) {
    if (OutcomeJsonName(o) == s) return o;
  }
  return std::nullopt;
}

std::string_view AttackIdName(AttackId id) {
  static constexpr std::array<std::string_view, 5> kNames = {"A1", "A2", "A3",
                                                             "A4", "A5"};
  return kNames[static_cast<size_t>(id)];
}

std::string_view AttackTitle(AttackId id) {
  switch (id) {
    case AttackId::kA1:
      return "use after free";
    case AttackId::kA2:
      return "realloc widening over stale data";
    case AttackId::kA3:
      return "free through a narrowed capability";
    case AttackId::kA4:
      return "double free";
    case AttackId::kA5:
      return "excess permissions on allocation";
  }
  return "unknown";
}

std::optional<AttackId> ParseAttackId(std::string_view s) {
  for (AttackId id : kAllAttacks) {
    if (AttackIdName(id) == s) return id;
  }
  return std::nullopt;
}

std::string_view StepOpName(StepOp op) {
  switch (op) {
    case StepOp::kMalloc:
      return "malloc";
    case StepOp::kFree:
      return "free";
    case StepOp::kRealloc:
      return "realloc";
    case StepOp::kStore:
      return "store";
    case StepOp::kLoad:
      return "load";
    case StepOp::kSetBounds:
      return "set_bounds";
    case StepOp::kNote:
      return "note";
  }
  return "?";
}

std::string Step::ToString(int index) const {
  char buf[128];
  std::string out = "#" + std::to_string(index) + " ";
  switch (op) {
    case StepOp::kMalloc:
      std::snprintf(buf, sizeof(buf), "malloc(%u)", size);
      break;
    case StepOp::kFree:
      std::snprintf(buf, sizeof(buf), "free(#%d)", target);
      break;
    case StepOp::kRealloc:
      std::snprintf(buf, sizeof(buf), "realloc(#%d, %u)", target, size);
      break;
    case StepOp::kStore:
      std::snprintf(buf, sizeof(buf), "store(#%d +%u, %zu bytes of 0x%02x)",
                    target, offset, payload.size(),
                    payload.empty() ? 0 : payload[0]);
      break;
    case StepOp::kLoad:
      std::snprintf(buf, sizeof(buf), "load(#%d +%u, %u)", target, offset, size);
      break;
    case StepOp::kSetBounds:
      std::snprintf(buf, sizeof(buf), "set_bounds(#%d +%u, %u)", target, offset,
                    size);
      break;
    case StepOp::kNote:
      return out + "note: " + note;
  }
  out += buf;
  out += " [" + label + "] -> ";
  if (!result.ok) return out + "fault " + result.fault;
  out += "ok";
  if (result.cap) out += " " + result.cap->ToString();
  if (!result.data.empty()) {
    out += " [";
    size_t shown = std::min<size_t>(result.data.size(), 8);
    for (size_t i = 0; i < shown; ++i) {
      std::snprintf(buf, sizeof(buf), "%s%02x", i ? " " : "", result.data[i]);
      out += buf;
    }
    if (shown < result.data.size()) out += " ...";
    out += "]";
  }
  return out;
}

StepResult ExecuteStep(Allocator& alloc, const Trace& prior, const Step& step) {
  if (step.op == StepOp::kNote) return StepResult{};
  if (step.op == StepOp::kMalloc) return FromCap(alloc.Malloc(step.size));

  std::optional<Capability> operand;
  if (step.target >= 0 && step.target < static_cast<int>(prior.size())) {
    operand = prior[step.target].result.cap;
  }
  if (!operand) {
    StepResult r;
    r.ok = false;
    r.fault = "MissingOperand";
    return r;
  }
  const Capability held = alloc.Revoke(*operand);
  const uint32_t address = held.address + step.offset;

  switch (step.op) {
    case StepOp::kFree: {
      auto s = alloc.Free(held);
      return s ? StepResult{} : FromFault(s.error());
    }
    case StepOp::kRealloc:
      return FromCap(alloc.Realloc(held, step.size));
    case StepOp::kStore: {
      auto s = alloc.heap().Store(held, address, step.payload);
      return s ? StepResult{} : FromCapFault(s.error());
    }
    case StepOp::kLoad: {
      auto bytes = alloc.heap().Load(held, address, step.size);
      if (!bytes) return FromCapFault(bytes.error());
      StepResult r;
      r.data = std::move(bytes).value();
      return r;
    }
    case StepOp::kSetBounds: {
      auto c = caplab::SetBounds(held, address, step.size);
      if (!c) return FromCapFault(c.error());
      StepResult r;
      r.cap = c.value();
      return r;
    }
    default:
      break;
  }
  return StepResult{};
}

int ProbeSession::Record(Step step) {
  step.result = ExecuteStep(alloc_, trace_, step);
  trace_.push_back(std::move(step));
  return static_cast<int>(trace_.size()) - 1;
}

int ProbeSession::Malloc(uint32_t size, std::string label) {
  return Record(Step{.op = StepOp::kMalloc, .label = std::move(label), .size = size});
}

int ProbeSession::Free(int target, std::string label) {
  return Record(
      Step{.op = StepOp::kFree, .label = std::move(label), .target = target});
}

int ProbeSession::Realloc(int target, uint32_t size, std::string label) {
  return Record(Step{.op = StepOp::kRealloc,
                     .label = std::move(label),
                     .target = target,
                     .size = size});
}

int ProbeSession::Store(int target, uint32_t offset, std::vector<uint8_t> bytes,
                        std::string label) {
  return Record(Step{.op = StepOp::kStore,
                     .label = std::move(label),
                     .target = target,
                     .offset = offset,
                     .payload = std::move(bytes)});
}

int ProbeSession::Load(int target, uint32_t offset, uint32_t length,
                       std::string label) {
  return Record(Step{.op = StepOp::kLoad,
                     .label = std::move(label),
                     .target = target,
                     .offset = offset,
                     .size = length});
}

int ProbeSession::SetBounds(int target, uint32_t offset, uint32_t length,
                            std::string label) {
  return Record(Step{.op = StepOp::kSetBounds,
                     .label = std::move(label),
                     .target = target,
                     .offset = offset,
                     .size = length});
}

int ProbeSession::Note(std::string label, std::string text) {
  return Record(
      Step{.op = StepOp::kNote, .label = std::move(label), .note = std::move(text)});
}

Verdict Classify(AttackId id, const Trace& trace) {
  if (const Step* na = FindStep(trace, kNotApplicable)) {
    return {Outcome::kNotApplicable, na->note};
  }
  switch (id) {
    case AttackId::kA1: {
      const Step* probe = FindStep(trace, "probe");
      if (probe && probe->result.ok &&
          AllEqual(probe->result.data, 8, kUafSentinel)) {
        return {Outcome::kSucceeds, "stale data readable through freed capability"};
      }
      return {Outcome::kThwarted, FaultOr(probe, "sentinel not readable")};
    }
    case AttackId::kA2: {
      const Step* probe = FindStep(trace, "probe");
      if (probe && probe->result.ok &&
          AllEqual(probe->result.data, kVictimSize, kVictimSentinel)) {
        return {Outcome::kSucceeds, "victim data exposed through widened bounds"};
      }
      return {Outcome::kThwarted, FaultOr(probe, "widened region holds no stale data")};
    }
    case AttackId::kA3: {
      const Step* free = FindStep(trace, "free-narrowed");
      if (free && free->result.ok) {
        return {Outcome::kSucceeds, "narrowed capability accepted by free"};
      }
      return {Outcome::kThwarted, FaultOr(free, "")};
    }
    case AttackId::kA4: {
      const Step* second = FindStep(trace, "second-free");
      if (second && second->result.ok) {
        return {Outcome::kSucceeds, "second free accepted"};
      }
      return {Outcome::kThwarted, FaultOr(second, "")};
    }
    case AttackId::kA5: {
      const Step* alloc = FindStep(trace, "alloc");
      if (alloc && alloc->result.cap && alloc->result.cap->perms.Has(Perm::kExec)) {
        return {Outcome::kSucceeds, "allocation carries EXEC"};
      }
      return {Outcome::kThwarted, alloc && alloc->result.ok ? "EXEC stripped"
                                                            : FaultOr(alloc, "")};
    }
  }
  return {Outcome::kThwarted, "unknown attack"};
}

AttackReport RunAttack(AttackId id, Allocator& alloc) {
  ProbeSession session(alloc);
  switch (id) {
    case AttackId::kA1:
      ProbeUseAfterFree(session);
      break;
    case AttackId::kA2:
      ProbeReallocWidening(session);
      break;
    case AttackId::kA3:
      ProbeFreeNarrowed(session);
      break;
    case AttackId::kA4:
      ProbeDoubleFree(session);
      break;
    case AttackId::kA5:
      ProbeExcessPermissions(session);
      break;
  }
  Trace trace = session.Take();
  Verdict v = Classify(id, trace);
  return AttackReport{.attack = id,
                      .allocator = alloc.traits().name,
                      .outcome = v.outcome,
                      .reason = std::move(v.reason),
                      .trace = std::move(trace)};
}

ReplayResult ReplayTrace(const AttackReport& report, Allocator& fresh) {
  ReplayResult out;
  Trace replayed;
  replayed.reserve(report.trace.size());
  for (size_t i = 0; i < report.trace.size(); ++i) {
    Step step = report.trace[i];
    step.result = ExecuteStep(fresh, replayed, step);
    if (out.steps_match && !(step.result == report.trace[i].result)) {
      out.steps_match = false;
      out.first_mismatch = static_cast<int>(i);
    }
    replayed.push_back(std::move(step));
  }
  out.outcome = Classify(report.attack, replayed).outcome;
  return out;
}

}  // namespace caplab

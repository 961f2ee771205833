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

#include "cli.h"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "caplab/allocator.h"
#include "caplab/attacks.h"
#include "caplab/bench.h"
#include "caplab/harness.h"

namespace caplab::cli {
namespace {

// Malformed user input detected after argument parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> AllocatorNames() {
  return std::vector<std::string>(kCanonicalAllocators.begin(),
                                  kCanonicalAllocators.end());
}

struct MatrixArgs {
  std::string format = "text";
  bool expect = false;
  bool serial = false;
  bool rounding = false;
};

struct AttackArgs {
  std::string attack;
  std::string allocator;
  bool trace = false;
};

struct BenchArgs {
  std::string workload;
  std::string allocator;
  uint32_t ops = 1000;
  uint32_t size = 32;
  uint64_t seed = 1;
  uint32_t min_size = 1;
};

struct DumpArgs {
  std::string allocator;
  std::string script;
  std::string out_path;
  uint32_t heap_size = kDefaultHeapSize;
};

int RunMatrixCommand(const MatrixArgs& a, std::ostream& out, std::ostream& err) {
  MatrixFormat format = a.format == "csv"    ? MatrixFormat::kCsv
                        : a.format == "json" ? MatrixFormat::kJson
                                             : MatrixFormat::kText;
  MatrixOptions options;
  options.parallel = !a.serial;
  options.bounds_mode = a.rounding ? BoundsMode::kRounding : BoundsMode::kExact;
  ConformanceMatrix m = RunMatrix(CanonicalRegistry(), options);
  out << RenderMatrix(m, format);
  if (!a.expect) return kExitOk;

  auto diffs = DiffMatrix(m, ExpectedMatrix());
  for (const auto& d : diffs) {
    err << "mismatch " << d.row << " " << d.column << ": got "
        << OutcomeGlyph(d.actual) << " expected " << OutcomeGlyph(d.expected)
        << "\n";
  }
  size_t cells = m.rows.size() * m.columns.size();
  if (!diffs.empty()) {
    err << diffs.size() << " of " << cells << " cells differ from expected\n";
    return kExitMismatch;
  }
  err << "all " << cells << " cells match expected\n";
  return kExitOk;
}

int RunAttackCommand(const AttackArgs& a, std::ostream& out) {
  AttackId id = *ParseAttackId(a.attack);
  Sandbox sandbox = MakeSandbox(a.allocator);
  AttackReport report = RunAttack(id, sandbox.allocator());
  if (a.trace) {
    out << AttackIdName(id) << " (" << AttackTitle(id) << ") on "
        << report.allocator << "\n";
    for (size_t i = 0; i < report.trace.size(); ++i) {
      out << "  " << report.trace[i].ToString(static_cast<int>(i)) << "\n";
    }
  }
  out << OutcomeGlyph(report.outcome) << " " << OutcomeWords(report.outcome);
  if (!report.reason.empty()) out << " (" << report.reason << ")";
  out << "\n";
  return kExitOk;
}

int RunBenchCommand(const BenchArgs& a, std::ostream& out) {
  Workload w;
  w.kind = *ParseWorkloadKind(a.workload);
  w.op_count = a.ops;
  w.size = a.size;
  w.seed = a.seed;
  w.min_size = a.min_size;
  w.max_size = a.size;
  try {
    w.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::vector<std::string> names =
      a.allocator == "all" ? AllocatorNames()
                           : std::vector<std::string>{a.allocator};
  std::vector<BenchResult> results;
  for (const auto& name : names) {
    Sandbox sandbox = MakeSandbox(name);
    results.push_back(RunWorkload(sandbox.allocator(), w));
  }
  out << EmitBenchCsv(results);
  return kExitOk;
}

int RunListCommand(bool traits, std::ostream& out) {
  if (!traits) {
    for (auto name : kCanonicalAllocators) out << name << "\n";
    return kExitOk;
  }
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  out << std::left << std::setw(21) << "allocator" << std::setw(8) << "narrow"
      << std::setw(10) << "deferred" << std::setw(12) << "strips-exec"
      << std::setw(17) << "free-validation" << std::setw(11) << "df-detect"
      << "grows-in-place\n";
  for (auto name : kCanonicalAllocators) {
    const AllocatorTraits& t = CanonicalTraits(name);
    out << std::left << std::setw(21) << t.name << std::setw(8)
        << yn(t.narrow_bounds) << std::setw(10) << yn(t.deferred_free)
        << std::setw(12) << yn(t.strips_exec) << std::setw(17)
        << FreeValidationName(t.free_validation) << std::setw(11)
        << yn(t.double_free_detect) << yn(t.realloc_grows_in_place) << "\n";
  }
  return kExitOk;
}

uint32_t ParseScriptNumber(const std::string& token, int line) {
  try {
    size_t pos = 0;
    unsigned long v = std::stoul(token, &pos, 0);
    if (pos == token.size() && v <= UINT32_MAX) return static_cast<uint32_t>(v);
  } catch (const std::logic_error&) {
  }
  throw UsageError("script line " + std::to_string(line) + ": bad number '" +
                   token + "'");
}

int RunDumpCommand(const DumpArgs& a, std::ostream& out, std::ostream& err) {
  std::ifstream script(a.script);
  if (!script) throw UsageError("cannot read script " + a.script);
  Sandbox sandbox = MakeSandbox(a.allocator, SandboxOptions{.heap_size = a.heap_size});
  Allocator& alloc = sandbox.allocator();

  // One slot per malloc/realloc line, filled or not.
  std::vector<std::optional<Capability>> results;
  auto operand = [&](const std::string& token, int line) -> std::optional<Capability> {
    uint32_t k = ParseScriptNumber(token, line);
    if (k >= results.size()) {
      throw UsageError("script line " + std::to_string(line) + ": result #" +
                       token + " does not exist yet");
    }
    return results[k];
  };
  auto log_cap = [&](const Result<Capability, Fault>& r) {
    if (r) {
      err << " -> #" << results.size() << " " << r->ToString() << "\n";
      results.emplace_back(r.value());
    } else {
      err << " -> #" << results.size() << " fault " << DescribeFault(r.error())
          << "\n";
      results.emplace_back(std::nullopt);
    }
  };

  std::string raw;
  int line = 0;
  while (std::getline(script, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream words(raw);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty()) continue;

    const std::string& cmd = tok[0];
    if (cmd == "malloc" && tok.size() == 2) {
      uint32_t n = ParseScriptNumber(tok[1], line);
      err << "malloc " << n;
      log_cap(alloc.Malloc(n));
    } else if (cmd == "free" && tok.size() == 2) {
      auto c = operand(tok[1], line);
      err << "free #" << tok[1];
      if (!c) {
        err << " -> skipped (no capability)\n";
        continue;
      }
      auto s = alloc.Free(*c);
      err << (s ? std::string(" -> ok") : " -> fault " + DescribeFault(s.error()))
          << "\n";
    } else if (cmd == "realloc" && tok.size() == 3) {
      auto c = operand(tok[1], line);
      uint32_t n = ParseScriptNumber(tok[2], line);
      err << "realloc #" << tok[1] << " " << n;
      if (!c) {
        err << " -> #" << results.size() << " skipped (no capability)\n";
        results.emplace_back(std::nullopt);
        continue;
      }
      log_cap(alloc.Realloc(*c, n));
    } else {
      throw UsageError("script line " + std::to_string(line) +
                       ": expected 'malloc N', 'free K' or 'realloc K N'");
    }
  }

  std::vector<uint8_t> snapshot = sandbox.heap().Snapshot();
  if (a.out_path.empty()) {
    out.write(reinterpret_cast<const char*>(snapshot.data()),
              static_cast<std::streamsize>(snapshot.size()));
  } else {
    std::ofstream file(a.out_path, std::ios::binary);
    if (!file) throw UsageError("cannot write " + a.out_path);
    file.write(reinterpret_cast<const char*>(snapshot.data()),
               static_cast<std::streamsize>(snapshot.size()));
    err << "wrote " << snapshot.size() << " bytes to " << a.out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Capability heap lab: allocators, attack probes, benchmarks",
               "caplab"};
  app.require_subcommand(1);
  const auto names = AllocatorNames();
  auto names_or_all = names;
  names_or_all.push_back("all");
  std::vector<std::string> attack_ids;
  for (AttackId id : kAllAttacks) attack_ids.emplace_back(AttackIdName(id));

  MatrixArgs matrix;
  auto* matrix_cmd = app.add_subcommand("matrix", "Run the allocator x attack matrix");
  matrix_cmd->add_option("--format", matrix.format, "Output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  matrix_cmd->add_flag("--expect", matrix.expect,
                       "Compare against the expected matrix; exit 1 on mismatch");
  matrix_cmd->add_flag("--serial", matrix.serial, "Run cells one at a time");
  matrix_cmd->add_flag("--rounding-bounds", matrix.rounding,
                       "Pad large bounds to the coarse representable alignment");

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "Run one attack probe");
  attack_cmd->add_option("attack", attack.attack, "Attack id")
      ->required()
      ->check(CLI::IsMember(attack_ids));
  attack_cmd->add_option("--allocator", attack.allocator, "Allocator name")
      ->required()
      ->check(CLI::IsMember(names));
  attack_cmd->add_flag("--trace", attack.trace, "Print every probe step");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a deterministic workload");
  bench_cmd->add_option("workload", bench.workload, "Workload kind")
      ->required()
      ->check(CLI::IsMember({"churn", "randsize", "reallocramp"}));
  bench_cmd->add_option("--allocator", bench.allocator, "Allocator name or 'all'")
      ->required()
      ->check(CLI::IsMember(names_or_all));
  bench_cmd->add_option("--ops", bench.ops, "Operation count")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--size", bench.size,
                        "churn block size; randsize maximum size")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "randsize seed");
  bench_cmd->add_option("--min-size", bench.min_size, "randsize minimum size")
      ->check(CLI::PositiveNumber);

  bool list_traits = false;
  auto* list_cmd = app.add_subcommand("list", "List the allocators in table order");
  list_cmd->add_flag("--traits", list_traits, "Show each allocator's traits");

  DumpArgs dump;
  auto* dump_cmd =
      app.add_subcommand("dump", "Run an allocation script and dump the heap");
  dump_cmd->add_option("--allocator", dump.allocator, "Allocator name")
      ->required()
      ->check(CLI::IsMember(names));
  dump_cmd->add_option("--script", dump.script, "Script file")->required();
  dump_cmd->add_option("--out", dump.out_path,
                       "Snapshot file (default: standard output)");
  dump_cmd->add_option("--heap-size", dump.heap_size, "Heap size in bytes")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (matrix_cmd->parsed()) return RunMatrixCommand(matrix, out, err);
    if (attack_cmd->parsed()) return RunAttackCommand(attack, out);
    if (bench_cmd->parsed()) return RunBenchCommand(bench, out);
    if (list_cmd->parsed()) return RunListCommand(list_traits, out);
    if (dump_cmd->parsed()) return RunDumpCommand(dump, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace caplab::cli

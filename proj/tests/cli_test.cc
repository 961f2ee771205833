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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "gtest/gtest.h"

namespace caplab::cli {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome Invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = Run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() /
          ("caplab_cli_test_" + std::to_string(::getpid()) + "_" + name))
      .string();
}

TEST(CliTest, MatrixExpectPasses) {
  auto r = Invoke({"matrix", "--expect"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("snmalloc-repo"), std::string::npos);
  EXPECT_NE(r.err.find("all 35 cells match expected"), std::string::npos);
}

TEST(CliTest, MatrixCsvIsStable) {
  auto a = Invoke({"matrix", "--format", "csv"});
  auto b = Invoke({"matrix", "--format", "csv", "--serial"});
  EXPECT_EQ(a.code, kExitOk);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.substr(0, a.out.find('\n')), "allocator,A1,A2,A3,A4,A5");
}

TEST(CliTest, MatrixJson) {
  auto r = Invoke({"matrix", "--format", "json"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out.front(), '{');
}

TEST(CliTest, AttackReportsOutcome) {
  auto na = Invoke({"attack", "A4", "--allocator", "snmalloc-cheribuild"});
  EXPECT_EQ(na.code, kExitOk);
  EXPECT_NE(na.out.find("⊘ not applicable (deferred free)"), std::string::npos);

  auto traced = Invoke({"attack", "A3", "--allocator", "dlmalloc-cheribuild", "--trace"});
  EXPECT_EQ(traced.code, kExitOk);
  EXPECT_NE(traced.out.find("free-narrowed"), std::string::npos);
  EXPECT_NE(traced.out.find("×"), std::string::npos);
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Invoke({}).code, kExitUsage);
  EXPECT_EQ(Invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"attack", "A9", "--allocator", "jemalloc"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"attack", "A1", "--allocator", "hoard"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"matrix", "--format", "xml"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"bench", "churn", "--allocator", "jemalloc", "--ops", "0"}).code,
            kExitUsage);
  EXPECT_EQ(Invoke({"bench", "randsize", "--allocator", "jemalloc", "--size", "4",
                    "--min-size", "8"}).code,
            kExitUsage);
}

TEST(CliTest, ListPrintsTableOrder) {
  auto r = Invoke({"list"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out,
            "bump-alloc-cheri\nbump-alloc-nocheri\ndlmalloc-cheribuild\njemalloc\n"
            "libmalloc-simple\nsnmalloc-cheribuild\nsnmalloc-repo\n");
  auto traits = Invoke({"list", "--traits"});
  EXPECT_EQ(traits.code, kExitOk);
  EXPECT_NE(traits.out.find("metadata-lookup"), std::string::npos);
}

TEST(CliTest, BenchEmitsCsv) {
  auto r = Invoke({"bench", "churn", "--allocator", "all", "--ops", "200", "--size", "32"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 8);
  EXPECT_NE(r.out.find("bump-alloc-cheri,churn;ops=200;size=32,200,"), std::string::npos);
}

TEST(CliTest, DumpWritesSnapshot) {
  std::string script = TempPath("script.txt");
  std::string out = TempPath("heap.bin");
  {
    std::ofstream f(script);
    f << "# two blocks\nmalloc 32\nmalloc 48   # second\n\nrealloc 0 64\nfree 1\n";
  }
  auto r = Invoke({"dump", "--allocator", "bump-alloc-cheri", "--script", script,
                   "--heap-size", "4096", "--out", out});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("realloc #0 64 -> #2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("free #1 -> ok"), std::string::npos) << r.err;
  EXPECT_EQ(std::filesystem::file_size(out), 4096u + 4096u / 16 / 8);

  auto stdout_dump = Invoke({"dump", "--allocator", "bump-alloc-cheri", "--script",
                             script, "--heap-size", "4096"});
  EXPECT_EQ(stdout_dump.code, kExitOk);
  EXPECT_EQ(stdout_dump.out.size(), 4096u + 32);

  {
    std::ofstream f(script);
    f << "free 3\n";
  }
  EXPECT_EQ(Invoke({"dump", "--allocator", "jemalloc", "--script", script}).code,
            kExitUsage);
  {
    std::ofstream f(script);
    f << "malloc lots\n";
  }
  EXPECT_EQ(Invoke({"dump", "--allocator", "jemalloc", "--script", script}).code,
            kExitUsage);
  std::remove(script.c_str());
  std::remove(out.c_str());
}

}  // namespace
}  // namespace caplab::cli

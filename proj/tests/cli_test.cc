// Copyright 2026 The embinvert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Drives the command line tool as a subprocess.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "embinvert/binary_io.h"
#include "test_support.h"

namespace embinvert {
namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(EMBINVERT_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fx(const char* name) { return testing::fixture(name).string(); }

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("stats --bogus-flag").code, 1);
}

TEST(Cli, DataErrorsExitTwo) {
  EXPECT_EQ(run("stats /nonexistent/file.txt --vocab /nonexistent/vocab.txt").code, 2);
}

TEST(Cli, RemoteErrorsExitThree) {
  const auto r = run("embed " + testing::fixture("smoke.txt").string() +
                     R"( --embedder '{"kind":"remote","dim":4,"endpoint":"http://127.0.0.1:1","max_attempts":1,"timeout_s":1}')");
  EXPECT_EQ(r.code, 3);
}

TEST(Cli, SegmentAndStats) {
  const auto dir = testing::scratch_dir("cli_segment");
  write_text_file(dir / "doc.txt", "Dr. Smith arrived. He left.");
  const auto seg = run("segment " + (dir / "doc.txt").string());
  EXPECT_EQ(seg.code, 0);
  EXPECT_EQ(seg.out, "Dr. Smith arrived.\nHe left.\n");

  const auto dir2 = testing::scratch_dir("cli_stats");
  ASSERT_EQ(run("build-vocab " + fx("news.txt") + " -o " + (dir2 / "v.txt").string()).code, 0);
  const auto stats = run("stats " + fx("news.txt") + " --vocab " + (dir2 / "v.txt").string());
  ASSERT_EQ(stats.code, 0);
  const auto doc = nlohmann::json::parse(stats.out);
  EXPECT_GT(doc["n_sentences"].get<int>(), 0);
}

TEST(Cli, TrainDecodeEvaluate) {
  const auto dir = testing::scratch_dir("cli_pipeline");
  const std::string d = dir.string();
  const std::string emb = R"(--embedder '{"kind":"positional_mix","dim":32,"seed":7}')";
  ASSERT_EQ(run("build-vocab " + fx("smoke.txt") + " -o " + d + "/vocab.txt").code, 0);
  ASSERT_EQ(run("make-trainset " + fx("smoke.txt") + " --vocab " + d + "/vocab.txt " + emb +
                " --split 0.8,0.1,0.1 -o " + d + "/pairs.bin").code, 0);
  ASSERT_TRUE(std::filesystem::exists(dir / "pairs.bin.train"));
  ASSERT_EQ(run("train " + d + "/pairs.bin.train --validation " + d +
                "/pairs.bin.validation --vocab " + d + "/vocab.txt --hidden 32 --epochs 3 -o " +
                d + "/model.ckpt").code, 0);
  const auto dec = run("decode " + fx("wiki_heldout.txt") + " --checkpoint " + d +
                       "/model.ckpt --vocab " + d + "/vocab.txt " + emb +
                       " --mode beam --beam-width 2");
  ASSERT_EQ(dec.code, 0);
  const auto first = nlohmann::json::parse(dec.out.substr(0, dec.out.find('\n')));
  EXPECT_EQ(first["mode"], "beam");
  EXPECT_TRUE(first.contains("surface"));
  EXPECT_TRUE(first.contains("logprob"));
}

TEST(Cli, CorpusSimPrintsSymmetricMatrix) {
  const auto r = run("corpus-sim " + fx("wiki_heldout.txt") + " " + fx("news.txt") + " " +
                     fx("clinical.txt") + " --reference " + fx("wiki.txt") + " -k 1000");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("1.000000"), std::string::npos);
}

TEST(Cli, RunIsDeterministic) {
  std::string first;
  for (const char* name : {"cli_run_a", "cli_run_b"}) {
    const auto dir = testing::scratch_dir(name);
    const auto r = run("--config " + (testing::source_dir() / "configs" / "smoke.json").string() +
                       " --out-dir " + dir.string() + " run in_distribution");
    ASSERT_EQ(r.code, 0);
    const auto csv = read_text_file(dir / "reports" / "smoke_in_distribution.csv");
    if (first.empty()) {
      first = csv;
    } else {
      EXPECT_EQ(csv, first);
    }
  }
}

}  // namespace
}  // namespace embinvert

// Copyright 2026 The cw2v Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <signal.h>
#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "cw2v/cli.hpp"
#include "cw2v/eval.hpp"
#include "cw2v/oracle.hpp"
#include "support/toy.hpp"

extern char** environ;

namespace cw2v {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cw2v-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// The 1e5-token corpus and its vocabulary and index files.
struct Pipeline {
  TempDir dir;
  std::string text, vocab, index;
  Pipeline() : text(dir / "corpus.txt"), vocab(dir / "vocab.tsv"), index(dir / "corpus.idx") {
    const auto d = testing::zipf_corpus(2000, 100000, 21);
    std::ofstream(text) << testing::join_text(d.text);
    const auto v = cli({"vocab", "--corpus", text, "--output", vocab, "--min-count", "2"});
    REQUIRE(v.code == 0);
    const auto p = cli({"preprocess", "--corpus", text, "--vocab", vocab, "--output", index});
    REQUIRE(p.code == 0);
  }
};

std::vector<std::string> small_train(const Pipeline& p, const std::string& out) {
  return {"train", "--corpus", p.index, "--vocab", p.vocab, "--output", out, "--dim", "16",
          "--shards", "2", "--epochs", "1", "--batch-size", "20", "--quiet"};
}

pid_t spawn(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, 1, "/dev/null", O_WRONLY, 0);
  const int rc = posix_spawn(&pid, argv[0], &fa, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  REQUIRE(rc == 0);
  return pid;
}

std::string wait_for_file(const std::string& path) {
  for (int i = 0; i < 500; ++i) {
    if (fs::exists(path)) {
      std::string s = slurp(path);
      while (!s.empty() && s.back() == '\n') s.pop_back();
      return s;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  FAIL("shard did not publish its endpoint: " << path);
  return {};
}

int wait_exit(pid_t pid) {
  int status = 0;
  for (int i = 0; i < 1000; ++i) {
    if (waitpid(pid, &status, WNOHANG) == pid) return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  kill(pid, SIGKILL);
  waitpid(pid, &status, 0);
  return -2;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("full local-sim pipeline exports parseable vectors") {
  Pipeline p;
  const auto vectors = p.dir / "vectors.txt";
  const auto manifest = p.dir / "run.json";
  auto args = small_train(p, vectors);
  args.insert(args.end(), {"--manifest", manifest});
  const auto r = cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("train:") != std::string::npos);
  const auto set = EmbeddingSet::load(vectors);
  CHECK(set.size() == load_vocabulary(p.vocab).size());
  CHECK(set.dim() == 16);

  const auto e = cli({"eval", "--vectors", vectors, "--query", "w1", "-k", "3", "--compare", vectors,
                      "--pairs", "100"});
  CHECK(e.code == 0);
  CHECK(e.out.find("vectors:") != std::string::npos);

  const auto b = cli({"bandwidth", "--manifest", manifest});
  REQUIRE(b.code == 0);
  CHECK(b.out.find("payload within bound: yes") != std::string::npos);
}

TEST_CASE("bandwidth prints the conventional example") {
  const auto r = cli({"bandwidth", "--conventional", "-w", "10", "-n", "10", "-d", "500"});
  CHECK(r.code == 0);
  CHECK(r.out.find("= 204000 bytes") != std::string::npos);
  const auto q = cli({"bandwidth", "--proposed", "-w", "10", "-n", "10", "-S", "15", "-d", "300"});
  CHECK(q.out.find("= 6600 bytes") != std::string::npos);
  CHECK(q.out.find("ratio S/d = 0.05") != std::string::npos);
}

TEST_CASE("epochs=0 exports the initialization exactly") {
  Pipeline p;
  const auto vectors = p.dir / "init.txt";
  auto args = small_train(p, vectors);
  *(std::find(args.begin(), args.end(), "--epochs") + 1) = "0";
  REQUIRE(cli(args).code == 0);
  const auto tv = load_text_vectors(vectors);
  const auto init = init_full_store(load_vocabulary(p.vocab).size(), 16, 1);
  CHECK(tv.vectors == init.input);
}

TEST_CASE("rerunning a step gives byte-identical outputs") {
  Pipeline p;
  const auto vocab2 = p.dir / "vocab2.tsv", index2 = p.dir / "corpus2.idx";
  REQUIRE(cli({"vocab", "--corpus", p.text, "--output", vocab2, "--min-count", "2"}).code == 0);
  REQUIRE(cli({"preprocess", "--corpus", p.text, "--vocab", vocab2, "--output", index2}).code == 0);
  CHECK(slurp(vocab2) == slurp(p.vocab));
  CHECK(slurp(index2) == slurp(p.index));

  const auto a = p.dir / "a.txt", b = p.dir / "b.txt", m = p.dir / "a.json";
  auto args = small_train(p, a);
  args.insert(args.end(), {"--manifest", m});
  REQUIRE(cli(args).code == 0);
  REQUIRE(cli(small_train(p, b)).code == 0);
  CHECK(slurp(a) == slurp(b));

  // Replay reproduces the run from the manifest alone.
  const auto c = p.dir / "c.txt";
  REQUIRE(cli({"train", "--replay", m, "--output", c, "--quiet"}).code == 0);
  CHECK(slurp(a) == slurp(c));
}

TEST_CASE("text corpus input equals indexed corpus input") {
  Pipeline p;
  const auto a = p.dir / "a.txt", b = p.dir / "b.txt";
  REQUIRE(cli(small_train(p, a)).code == 0);
  auto args = small_train(p, b);
  args[2] = p.text;
  REQUIRE(cli(args).code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("bad flags are usage errors") {
  CHECK(cli({}).code != 0);
  CHECK(cli({"bogus"}).code != 0);
  CHECK(cli({"train", "--dim", "abc"}).code != 0);
  CHECK(cli({"vocab", "--corpus", "x"}).code != 0);
  Pipeline p;
  auto args = small_train(p, p.dir / "v.txt");
  *(std::find(args.begin(), args.end(), "--shards") + 1) = "99";
  const auto r = cli(args);
  CHECK(r.code == 2);
  CHECK(r.err.find("shards") != std::string::npos);
  auto mode = small_train(p, p.dir / "v.txt");
  mode.insert(mode.end(), {"--mode", "cloud"});
  CHECK(cli(mode).code == 2);
  CHECK(cli({"train", "--mode", "client", "--corpus", p.index, "--vocab", p.vocab}).code == 2);
  CHECK(cli({"eval", "--vectors", p.dir / "missing.txt"}).code == 1);
}

TEST_CASE("flags override the config file, which overrides defaults") {
  Pipeline p;
  const auto cfg = p.dir / "train.conf";
  std::ofstream(cfg) << "dim=12\nshards=3\nepochs=0\n";
  const auto a = p.dir / "a.txt", m = p.dir / "a.json";
  REQUIRE(cli({"train", "--config", cfg, "--corpus", p.index, "--vocab", p.vocab, "--output", a,
               "--manifest", m, "--dim", "9", "--quiet"})
              .code == 0);
  const std::string json = slurp(m);
  CHECK(json.find("\"dim\": 9") != std::string::npos);
  CHECK(json.find("\"shards\": 3") != std::string::npos);
  CHECK(json.find("\"epochs\": 0") != std::string::npos);
  CHECK(json.find("\"window\": 5") != std::string::npos);
}

TEST_CASE("oracle mode equals local-sim in the strict configuration") {
  Pipeline p;
  const auto a = p.dir / "oracle.txt", b = p.dir / "sim.txt";
  const std::vector<std::string> common{"--corpus", p.index, "--vocab", p.vocab, "--dim", "8",
                                        "--epochs", "1", "--quiet", "--subsample", "1e-3"};
  auto oa = std::vector<std::string>{"train", "--mode", "oracle", "--output", a};
  oa.insert(oa.end(), common.begin(), common.end());
  auto sa = std::vector<std::string>{"train", "--mode", "local-sim", "--output", b};
  sa.insert(sa.end(), common.begin(), common.end());
  REQUIRE(cli(oa).code == 0);
  REQUIRE(cli(sa).code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("local-sim matches shard processes over loopback bit for bit") {
  Pipeline p;
  const std::uint32_t S = 3;
  std::vector<pid_t> pids;
  std::string endpoints;
  for (std::uint32_t s = 0; s < S; ++s) {
    const auto port_file = p.dir / ("shard" + std::to_string(s) + ".addr");
    pids.push_back(spawn({CW2V_TOOL, "train", "--mode", "shard", "--vocab", p.vocab, "--dim", "12",
                          "--shards", std::to_string(S), "--shard-id", std::to_string(s),
                          "--listen", "127.0.0.1:0", "--port-file", port_file, "--threads", "2"}));
    endpoints += wait_for_file(port_file) + "\n";
  }
  const auto eps = p.dir / "endpoints.txt";
  std::ofstream(eps) << "# shards\n" << endpoints;

  const std::vector<std::string> common{"--corpus", p.index, "--vocab", p.vocab, "--dim", "12",
                                        "--shards", std::to_string(S), "--epochs", "1",
                                        "--batch-size", "10", "--quiet"};
  const auto tcp = p.dir / "tcp.txt", sim = p.dir / "sim.txt", pulled = p.dir / "pulled.txt";
  auto ca = std::vector<std::string>{"train", "--mode", "client", "--endpoints-file", eps,
                                     "--output", tcp};
  ca.insert(ca.end(), common.begin(), common.end());
  const auto r = cli(ca);
  REQUIRE(r.code == 0);
  REQUIRE(cli({"export", "--endpoints-file", eps, "--vocab", p.vocab, "--output", pulled,
               "--shutdown-shards"})
              .code == 0);
  for (pid_t pid : pids) CHECK(wait_exit(pid) == 0);

  auto la = std::vector<std::string>{"train", "--mode", "local-sim", "--output", sim};
  la.insert(la.end(), common.begin(), common.end());
  REQUIRE(cli(la).code == 0);
  CHECK(slurp(tcp) == slurp(sim));
  CHECK(slurp(pulled) == slurp(sim));
}

TEST_CASE("shard processes exit cleanly on SIGTERM") {
  Pipeline p;
  const auto port_file = p.dir / "s.addr";
  const pid_t pid = spawn({CW2V_TOOL, "train", "--mode", "shard", "--vocab", p.vocab, "--dim", "4",
                           "--port-file", port_file});
  wait_for_file(port_file);
  kill(pid, SIGTERM);
  CHECK(wait_exit(pid) == 0);
}

}  // TEST_SUITE

}  // namespace cw2v

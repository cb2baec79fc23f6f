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

#include "cw2v/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <thread>

#include "cw2v/bandwidth.hpp"
#include "cw2v/client.hpp"
#include "cw2v/corpus.hpp"
#include "cw2v/eval.hpp"
#include "cw2v/net.hpp"
#include "cw2v/oracle.hpp"
#include "cw2v/server.hpp"

namespace cw2v {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_atomically(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Accepts either an indexed corpus file or plain text.
IndexedCorpus load_corpus(const fs::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[sizeof(kIndexedCorpusMagic)] = {};
  in.read(magic, sizeof(magic));
  in.clear();
  in.seekg(0);
  if (std::memcmp(magic, kIndexedCorpusMagic, sizeof(magic)) == 0) {
    IndexedCorpus c = read_indexed_corpus(in);
    for (const auto& s : c.sentences) {
      for (WordId w : s) {
        if (w >= vocab.size()) {
          throw std::runtime_error(path.string() + " was indexed against a different vocabulary");
        }
      }
    }
    return c;
  }
  return preprocess(in, vocab);
}

json config_json(const TrainConfig& c) {
  return {{"dim", c.dim},
          {"shards", c.shards},
          {"window", c.window},
          {"negatives", c.negatives},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"alpha", c.alpha},
          {"alpha_min", c.effective_alpha_min()},
          {"subsample", c.subsample},
          {"min_count", c.min_count},
          {"seed", c.seed},
          {"threads", c.threads},
          {"interleaved", c.interleaved}};
}

json snapshot_json(const BandwidthMeter::Snapshot& s) {
  json ops = json::object();
  for (int op = 1; op < kNumOpCodes; ++op) {
    if (s.op_frames[op][0] == 0 && s.op_frames[op][1] == 0) continue;
    ops[op_name(static_cast<OpCode>(op))] = {
        {"op", op},
        {"bytes", {s.op_bytes[op][0], s.op_bytes[op][1]}},
        {"frames", {s.op_frames[op][0], s.op_frames[op][1]}}};
  }
  return {{"bytes", {s.bytes[0], s.bytes[1]}},
          {"frames", {s.frames[0], s.frames[1]}},
          {"scalar_payload", {s.scalar_payload[0], s.scalar_payload[1]}},
          {"index_bytes", {s.index_bytes[0], s.index_bytes[1]}},
          {"vector_component_bytes", {s.vector_component_bytes[0], s.vector_component_bytes[1]}},
          {"steps", s.steps},
          {"minibatch_words", s.minibatch_words},
          {"pairs", s.pairs},
          {"ops", ops}};
}

BandwidthMeter::Snapshot snapshot_from_json(const json& j) {
  BandwidthMeter::Snapshot s;
  for (int d = 0; d < 2; ++d) {
    s.bytes[d] = j.at("bytes").at(d).get<std::uint64_t>();
    s.frames[d] = j.at("frames").at(d).get<std::uint64_t>();
    s.scalar_payload[d] = j.at("scalar_payload").at(d).get<std::uint64_t>();
    s.index_bytes[d] = j.at("index_bytes").at(d).get<std::uint64_t>();
    s.vector_component_bytes[d] = j.at("vector_component_bytes").at(d).get<std::uint64_t>();
  }
  for (const auto& [name, v] : j.at("ops").items()) {
    const int op = v.at("op").get<int>();
    if (op <= 0 || op >= kNumOpCodes) throw std::runtime_error("manifest names unknown op " + name);
    for (int d = 0; d < 2; ++d) {
      s.op_bytes[op][d] = v.at("bytes").at(d).get<std::uint64_t>();
      s.op_frames[op][d] = v.at("frames").at(d).get<std::uint64_t>();
    }
  }
  s.steps = j.at("steps").get<std::uint64_t>();
  s.minibatch_words = j.at("minibatch_words").get<std::uint64_t>();
  s.pairs = j.at("pairs").get<std::uint64_t>();
  return s;
}

json stats_json(const TrainStats& t) {
  return {{"steps", t.steps},
          {"words", t.words},
          {"pairs", t.pairs},
          {"negatives", t.negatives},
          {"bytes_sent", t.bytes_sent},
          {"bytes_received", t.bytes_received},
          {"retries", t.retries},
          {"seconds", t.seconds},
          {"final_alpha", t.final_alpha}};
}

void add_train_options(CLI::App* cmd, TrainConfig& c) {
  cmd->add_option("--dim", c.dim, "Vector dimension d")->capture_default_str();
  cmd->add_option("--shards", c.shards, "Number of shards S")->capture_default_str();
  cmd->add_option("--window", c.window, "Maximum window B")->capture_default_str();
  cmd->add_option("--negatives", c.negatives, "Negatives per positive N")->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size, "Input words per minibatch")->capture_default_str();
  cmd->add_option("--epochs", c.epochs, "Passes over the corpus")->capture_default_str();
  cmd->add_option("--alpha", c.alpha, "Initial learning rate")->capture_default_str();
  cmd->add_option("--alpha-min", c.alpha_min, "Final learning rate (0: alpha*1e-4)");
  cmd->add_option("--subsample", c.subsample, "Subsampling threshold t (0 disables)")
      ->capture_default_str();
  cmd->add_option("--min-count", c.min_count, "Vocabulary cutoff")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Global seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Client threads (train) or worker threads (shard)")
      ->capture_default_str();
  cmd->add_flag("--interleaved", c.interleaved, "Form minibatches across sentences");
}

// ---------------------------------------------------------------------------

struct VocabArgs {
  std::string corpus, output;
  std::uint64_t min_count = 5;
  std::size_t max_vocab = 0;
};

int cmd_vocab(const VocabArgs& a, std::ostream& out) {
  std::ifstream in(a.corpus);
  if (!in) throw std::runtime_error("cannot read " + a.corpus);
  VocabularyBuilder builder;
  builder.add_text(in);
  std::optional<std::size_t> cap;
  if (a.max_vocab > 0) cap = a.max_vocab;
  const Vocabulary vocab = builder.build(a.min_count, cap);
  save_vocabulary(a.output, vocab);
  out << "vocabulary: " << vocab.size() << " words, " << vocab.total_count()
      << " tokens covered -> " << a.output << '\n';
  return 0;
}

struct PreprocessArgs {
  std::string corpus, vocab, output;
};

int cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  const Vocabulary vocab = load_vocabulary(a.vocab);
  std::ifstream in(a.corpus);
  if (!in) throw std::runtime_error("cannot read " + a.corpus);
  PreprocessStats stats;
  const IndexedCorpus corpus = preprocess(in, vocab, &stats);
  save_indexed_corpus(a.output, corpus);
  out << "preprocess: " << corpus.sentences.size() << " sentences, " << stats.retained
      << " tokens kept, " << stats.dropped_oov << " out-of-vocabulary dropped, "
      << stats.dropped_sentences << " empty sentences dropped -> " << a.output << '\n';
  return 0;
}

struct TrainArgs {
  TrainConfig config;
  std::string mode = "local-sim";
  std::string corpus, vocab, output, manifest, endpoints_file, replay, port_file;
  std::string listen = "127.0.0.1:0";
  std::uint32_t shard_id = 0;
  std::uint32_t client_id = 0;
  std::uint32_t num_clients = 1;
  bool shutdown_shards = false;
  bool quiet = false;
};

void apply_replay(TrainArgs& a, CLI::App* cmd) {
  std::ifstream in(a.replay);
  if (!in) throw std::runtime_error("cannot read " + a.replay);
  const json m = json::parse(in);
  auto unset = [&](const char* flag) { return cmd->count(flag) == 0; };
  const json& c = m.at("config");
  TrainConfig& t = a.config;
  if (unset("--dim")) t.dim = c.at("dim");
  if (unset("--shards")) t.shards = c.at("shards");
  if (unset("--window")) t.window = c.at("window");
  if (unset("--negatives")) t.negatives = c.at("negatives");
  if (unset("--batch-size")) t.batch_size = c.at("batch_size");
  if (unset("--epochs")) t.epochs = c.at("epochs");
  if (unset("--alpha")) t.alpha = c.at("alpha");
  if (unset("--alpha-min")) t.alpha_min = c.at("alpha_min");
  if (unset("--subsample")) t.subsample = c.at("subsample");
  if (unset("--min-count")) t.min_count = c.at("min_count");
  if (unset("--seed")) t.seed = c.at("seed");
  if (unset("--threads")) t.threads = c.at("threads");
  if (unset("--interleaved")) t.interleaved = c.at("interleaved");
  if (unset("--mode")) a.mode = m.at("mode");
  const json& p = m.at("paths");
  if (unset("--corpus")) a.corpus = p.at("corpus");
  if (unset("--vocab")) a.vocab = p.at("vocab");
  if (unset("--output")) a.output = p.at("output");
  if (unset("--endpoints-file") && p.contains("endpoints_file")) {
    a.endpoints_file = p.at("endpoints_file");
  }
  if (m.contains("client")) {
    if (unset("--client-id")) a.client_id = m["client"].at("id");
    if (unset("--num-clients")) a.num_clients = m["client"].at("count");
  }
}

void write_manifest(const TrainArgs& a, const TrainStats& stats, const BandwidthMeter& meter,
                    const json& deployment) {
  if (a.manifest.empty()) return;
  json m;
  m["format"] = "cw2v-run-manifest";
  m["version"] = 1;
  m["command"] = "train";
  m["mode"] = a.mode;
  m["config"] = config_json(a.config);
  m["seeds"] = {{"global", a.config.seed},
                {"init", a.config.seed},
                {"note", "per-minibatch and per-epoch seeds derive from the global seed"}};
  m["paths"] = {{"corpus", fs::absolute(a.corpus).string()},
                {"vocab", fs::absolute(a.vocab).string()},
                {"output", a.output.empty() ? "" : fs::absolute(a.output).string()}};
  if (!a.endpoints_file.empty()) {
    m["paths"]["endpoints_file"] = fs::absolute(a.endpoints_file).string();
  }
  m["client"] = {{"id", a.client_id}, {"count", a.num_clients}};
  m["deployment"] = deployment;
  m["stats"] = stats_json(stats);
  m["bandwidth"] = snapshot_json(meter.snapshot());
  write_atomically(a.manifest, m.dump(2) + "\n");
}

void print_train_summary(std::ostream& out, const TrainStats& s) {
  out << "train: " << s.steps << " steps, " << s.words << " input words, " << s.pairs
      << " pairs, " << s.bytes_sent << " bytes sent, " << s.bytes_received
      << " bytes received, " << s.retries << " retries, " << s.seconds << " s\n";
}

/// Runs until SHUTDOWN arrives or SIGINT/SIGTERM is received.
int run_shard(const TrainArgs& a, std::ostream& out) {
  const TrainConfig& c = a.config;
  const Vocabulary vocab = load_vocabulary(a.vocab);
  const ShardLayout layout(c.dim, c.shards);
  ShardCore core(init_store(a.shard_id, layout, vocab.size(), c.seed), NoiseTable(vocab));

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGUSR1);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ShardServer server(core, {parse_endpoint(a.listen), c.threads});
  server.start();
  const auto& cols = core.store().columns();
  out << "shard " << a.shard_id << " of " << c.shards << " columns [" << cols.lo << ", " << cols.hi
      << ") listening on " << server.endpoint().str() << std::endl;
  if (!a.port_file.empty()) write_atomically(a.port_file, server.endpoint().str() + "\n");

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    if (sig != SIGUSR1) server.stop();
  });
  server.wait();
  pthread_kill(waiter.native_handle(), SIGUSR1);
  waiter.join();
  out << "shard " << a.shard_id << " stopped after " << server.requests_served() << " requests"
      << std::endl;
  return 0;
}

int run_train(TrainArgs& a, CLI::App* cmd, std::ostream& out, std::ostream& err) {
  if (!a.replay.empty()) apply_replay(a, cmd);
  if (a.mode == "shard") return run_shard(a, out);

  if (a.corpus.empty() || a.vocab.empty()) throw UsageError("train needs --corpus and --vocab");
  a.config.validate();
  const Vocabulary vocab = load_vocabulary(a.vocab);
  IndexedCorpus corpus = load_corpus(a.corpus, vocab);

  auto progress = [&](const TrainProgress& p) {
    if (!a.quiet) {
      err << "epoch " << p.epoch << ": " << p.processed << " words, alpha " << p.alpha << '\n';
    }
  };

  BandwidthMeter meter;
  TrainStats stats;
  json deployment;
  DenseMatrix vectors;
  if (a.mode == "local-sim") {
    LocalCluster cluster(vocab, a.config.dim, a.config.shards, a.config.seed);
    auto group = cluster.connect(&meter);
    stats = train(corpus, vocab, a.config, *group, 0, progress);
    deployment = {{"kind", "local-sim"}, {"dim", a.config.dim}, {"shards", a.config.shards}};
    if (!a.output.empty()) vectors = group->export_all(Matrix::kInput);
  } else if (a.mode == "oracle") {
    FullVectorStore store = oracle_train(corpus, vocab, a.config);
    deployment = {{"kind", "oracle"}, {"dim", a.config.dim}};
    vectors = std::move(store.input);
  } else if (a.mode == "client") {
    if (a.endpoints_file.empty()) throw UsageError("client mode needs --endpoints-file");
    if (a.num_clients == 0 || a.client_id >= a.num_clients) {
      throw UsageError("--client-id must be below --num-clients");
    }
    const auto endpoints = read_endpoints_file(a.endpoints_file);
    if (endpoints.size() != a.config.shards) {
      throw UsageError("--shards is " + std::to_string(a.config.shards) + " but " +
                       a.endpoints_file + " lists " + std::to_string(endpoints.size()));
    }
    if (a.num_clients > 1) corpus = partition_corpus(corpus, a.num_clients)[a.client_id];
    auto group = connect_group(endpoints, &meter);
    const auto infos = group->hello_all();
    if (infos[0].dim != a.config.dim || infos[0].vocab_size != vocab.size()) {
      throw UsageError("shards serve d=" + std::to_string(infos[0].dim) + ", |V|=" +
                       std::to_string(infos[0].vocab_size) + " but this client has d=" +
                       std::to_string(a.config.dim) + ", |V|=" + std::to_string(vocab.size()));
    }
    stats = train(corpus, vocab, a.config, *group, a.client_id, progress);
    json eps = json::array();
    for (const auto& e : endpoints) eps.push_back(e.str());
    deployment = {{"kind", "tcp"}, {"endpoints", eps}};
    if (!a.output.empty()) vectors = group->export_all(Matrix::kInput);
    if (a.shutdown_shards) group->shutdown_all();
  } else {
    throw UsageError("unknown --mode '" + a.mode + "' (local-sim, shard, client, oracle)");
  }
  if (!a.output.empty()) {
    save_text_vectors(a.output, vocab, vectors);
    out << "vectors: " << vectors.rows << " x " << vectors.cols << " -> " << a.output << '\n';
  }
  print_train_summary(out, stats);
  write_manifest(a, stats, meter, deployment);
  return 0;
}

struct ExportArgs {
  std::string endpoints_file, vocab, output;
  bool output_vectors = false;
  bool shutdown_shards = false;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const Vocabulary vocab = load_vocabulary(a.vocab);
  auto group = connect_group(read_endpoints_file(a.endpoints_file), nullptr);
  DenseMatrix m = group->export_all(a.output_vectors ? Matrix::kOutput : Matrix::kInput);
  if (m.rows != vocab.size()) {
    throw std::runtime_error("shards hold " + std::to_string(m.rows) + " words but the vocabulary has " +
                             std::to_string(vocab.size()));
  }
  save_text_vectors(a.output, vocab, m);
  out << "vectors: " << m.rows << " x " << m.cols << " -> " << a.output << '\n';
  if (a.shutdown_shards) group->shutdown_all();
  return 0;
}

struct EvalArgs {
  std::string vectors, wordsim, analogies, compare, query;
  std::size_t k = 10;
  double threshold = -2.0;
  std::size_t pairs = 5000;
  std::size_t max_rank = 0;
  std::uint64_t seed = 1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const EmbeddingSet set = EmbeddingSet::load(a.vectors);
  out << "vectors: " << set.size() << " words, dim " << set.dim() << '\n';
  if (!a.wordsim.empty()) {
    const auto judgments = load_judgments(a.wordsim);
    const auto r = spearman(set, judgments);
    out << "wordsim spearman " << r.rho << " (" << r.pairs_used << " pairs used, "
        << r.pairs_skipped << " skipped)\n";
  }
  if (!a.analogies.empty()) {
    const auto questions = load_analogies(a.analogies);
    const auto r = analogy_accuracy(set, questions);
    if (auto acc = r.accuracy()) {
      out << "analogy accuracy " << *acc << " (" << r.correct << "/" << r.used << ", "
          << r.skipped << " skipped)\n";
    } else {
      out << "analogy accuracy undefined (0 questions usable, " << r.skipped << " skipped)\n";
    }
  }
  if (!a.compare.empty()) {
    const EmbeddingSet other = EmbeddingSet::load(a.compare);
    const auto pairs = sample_pairs(set, other, a.pairs, a.seed, a.max_rank);
    print_agreement(out, agreement_report(set, other, pairs));
  }
  if (!a.query.empty()) {
    std::optional<double> tau;
    if (a.threshold > -1.5) tau = a.threshold;
    for (const auto& n : top_k(set, a.query, a.k, tau)) out << n.word << '\t' << n.score << '\n';
  }
  return 0;
}

struct BandwidthArgs {
  bool conventional = false;
  bool proposed = false;
  double w = 10, n = 10, d = 500, shards = 15;
  std::string manifest;
};

int cmd_bandwidth(const BandwidthArgs& a, std::ostream& out) {
  const bool all = !a.conventional && !a.proposed && a.manifest.empty();
  if (a.conventional || all) {
    out << "conventional r(w=" << a.w << ", n=" << a.n << ", d=" << a.d
        << ") = " << static_cast<std::uint64_t>(predicted_conventional_bytes(a.w, a.n, a.d))
        << " bytes per minibatch word\n";
  }
  if (a.proposed || all) {
    out << "column-partitioned r'(w=" << a.w << ", n=" << a.n << ", S=" << a.shards
        << ") = " << static_cast<std::uint64_t>(predicted_proposed_bytes(a.w, a.n, a.shards))
        << " bytes per minibatch word per direction\n";
    out << "ratio S/d = " << bandwidth_ratio(a.shards, a.d) << '\n';
  }
  if (!a.manifest.empty()) {
    std::ifstream in(a.manifest);
    if (!in) throw std::runtime_error("cannot read " + a.manifest);
    const json m = json::parse(in);
    const json& c = m.at("config");
    const auto report = measured_vs_predicted(snapshot_from_json(m.at("bandwidth")),
                                              c.at("negatives"), c.at("shards"), c.at("dim"),
                                              c.at("window"));
    print_report(out, report);
  }
  return 0;
}

}  // namespace

// `train --config FILE`: CLI11 only applies config files at the top level, so
// the file's items are spliced in as flags right after "train". Later flags
// on the command line win.
void expand_train_config(std::vector<std::string>& argv) {
  if (argv.empty() || argv[0] != "train") return;
  for (std::size_t i = 1; i + 1 < argv.size(); ++i) {
    if (argv[i] != "--config") continue;
    const std::string path = argv[i + 1];
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    std::vector<std::string> flags;
    for (const auto& item : CLI::ConfigINI().from_config(in)) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      flags.push_back("--" + item.name);
      if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "false")) {
        if (item.inputs[0] == "false") flags.pop_back();
        continue;
      }
      flags.insert(flags.end(), item.inputs.begin(), item.inputs.end());
    }
    argv.erase(argv.begin() + static_cast<std::ptrdiff_t>(i),
               argv.begin() + static_cast<std::ptrdiff_t>(i + 2));
    argv.insert(argv.begin() + 1, flags.begin(), flags.end());
    return;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cw2v: column-partitioned word2vec training"};
  app.require_subcommand(1);

  VocabArgs va;
  auto* vocab_cmd = app.add_subcommand("vocab", "Count words and write the vocabulary");
  vocab_cmd->add_option("--corpus", va.corpus, "Text corpus, one sentence per line")->required();
  vocab_cmd->add_option("--output", va.output, "Vocabulary file")->required();
  vocab_cmd->add_option("--min-count", va.min_count, "Drop rarer words")->capture_default_str();
  vocab_cmd->add_option("--max-vocab", va.max_vocab, "Keep at most this many words (0: all)");

  PreprocessArgs pa;
  auto* pre_cmd = app.add_subcommand("preprocess", "Map a text corpus to word indices");
  pre_cmd->add_option("--corpus", pa.corpus, "Text corpus")->required();
  pre_cmd->add_option("--vocab", pa.vocab, "Vocabulary file")->required();
  pre_cmd->add_option("--output", pa.output, "Indexed corpus file")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train vectors (local-sim, shard, client, oracle)");
  // Repeats are allowed so config file values can sit ahead of the real flags.
  train_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_file;
  train_cmd->add_option("--config", config_file, "key=value file; flags take precedence");
  train_cmd->add_option("--mode", ta.mode, "local-sim | shard | client | oracle")
      ->capture_default_str();
  train_cmd->add_option("--corpus", ta.corpus, "Indexed corpus or text");
  train_cmd->add_option("--vocab", ta.vocab, "Vocabulary file");
  train_cmd->add_option("--output", ta.output, "Write input vectors here after training");
  train_cmd->add_option("--manifest", ta.manifest, "Write a run manifest (JSON)");
  train_cmd->add_option("--replay", ta.replay, "Rerun the configuration of a manifest");
  train_cmd->add_option("--endpoints-file", ta.endpoints_file, "Shard endpoints, one per line");
  train_cmd->add_option("--listen", ta.listen, "Shard mode: host:port to bind")
      ->capture_default_str();
  train_cmd->add_option("--port-file", ta.port_file, "Shard mode: write the bound endpoint here");
  train_cmd->add_option("--shard-id", ta.shard_id, "Shard mode: which column slice to serve");
  train_cmd->add_option("--client-id", ta.client_id, "Client mode: this client's corpus slice");
  train_cmd->add_option("--num-clients", ta.num_clients, "Client mode: number of client processes");
  train_cmd->add_flag("--shutdown-shards", ta.shutdown_shards, "Client mode: stop shards at the end");
  train_cmd->add_flag("--quiet", ta.quiet, "No per-epoch progress");
  add_train_options(train_cmd, ta.config);

  ExportArgs ea;
  auto* export_cmd = app.add_subcommand("export", "Pull vectors from running shards");
  export_cmd->add_option("--endpoints-file", ea.endpoints_file, "Shard endpoints")->required();
  export_cmd->add_option("--vocab", ea.vocab, "Vocabulary file")->required();
  export_cmd->add_option("--output", ea.output, "Text vector file")->required();
  export_cmd->add_flag("--output-vectors", ea.output_vectors, "Export v instead of u");
  export_cmd->add_flag("--shutdown-shards", ea.shutdown_shards, "Stop the shards afterwards");

  EvalArgs eva;
  auto* eval_cmd = app.add_subcommand("eval", "Score exported vectors");
  eval_cmd->add_option("--vectors", eva.vectors, "Text vector file")->required();
  eval_cmd->add_option("--wordsim", eva.wordsim, "Word-pair similarity judgments");
  eval_cmd->add_option("--analogies", eva.analogies, "Analogy questions");
  eval_cmd->add_option("--compare", eva.compare, "Second vector file for cosine agreement");
  eval_cmd->add_option("--pairs", eva.pairs, "Word pairs sampled for agreement")
      ->capture_default_str();
  eval_cmd->add_option("--max-rank", eva.max_rank, "Sample pairs among the most frequent words");
  eval_cmd->add_option("--seed", eva.seed, "Pair sampling seed")->capture_default_str();
  eval_cmd->add_option("--query", eva.query, "Print nearest neighbours of this word");
  eval_cmd->add_option("-k,--top", eva.k, "Neighbours to print")->capture_default_str();
  eval_cmd->add_option("--threshold", eva.threshold, "Minimum cosine for neighbours");

  BandwidthArgs ba;
  auto* bw_cmd = app.add_subcommand("bandwidth", "Traffic model predictions and measurements");
  bw_cmd->add_flag("--conventional", ba.conventional, "Row-partitioned parameter server r(w,n,d)");
  bw_cmd->add_flag("--proposed", ba.proposed, "Column-partitioned r'(w,n,S)");
  bw_cmd->add_option("-w", ba.w, "Contexts per input word")->capture_default_str();
  bw_cmd->add_option("-n", ba.n, "Negatives per context")->capture_default_str();
  bw_cmd->add_option("-d", ba.d, "Vector dimension")->capture_default_str();
  bw_cmd->add_option("-S,--shards", ba.shards, "Shards")->capture_default_str();
  bw_cmd->add_option("--manifest", ba.manifest, "Compare a training manifest's measured traffic");

  std::vector<std::string> argv = args;
  try {
    expand_train_config(argv);
  } catch (const std::exception& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*vocab_cmd) return cmd_vocab(va, out);
    if (*pre_cmd) return cmd_preprocess(pa, out);
    if (*train_cmd) return run_train(ta, train_cmd, out, err);
    if (*export_cmd) return cmd_export(ea, out);
    if (*eval_cmd) return cmd_eval(eva, out);
    if (*bw_cmd) return cmd_bandwidth(ba, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace cw2v

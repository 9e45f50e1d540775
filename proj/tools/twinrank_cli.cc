// Copyright 2026 The twinrank Authors.
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

// twinrank command-line tool.
//
// Resolution order for every setting: built-in default, then command-line
// flag, then the --config JSON file (highest). The resolved configuration is
// echoed into the manifest written next to every output.

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "twinrank/bench.h"
#include "twinrank/index.h"
#include "twinrank/metrics.h"
#include "twinrank/model.h"
#include "twinrank/training.h"

namespace twinrank {
namespace {

using nlohmann::json;

constexpr int kManifestVersion = 1;

std::string Sha256Hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string FileHash(const std::string& path) { return Sha256Hex(ReadFile(path)); }

// Tab-separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int Column(const std::string& name, const std::string& source) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw std::runtime_error(source + ":1: missing column '" + name + "'");
    }
    return static_cast<int>(it - header.begin());
  }
};

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, '\t')) out.push_back(cell);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

Table ReadTable(std::istream& in, const std::string& source) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(source + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = SplitTabs(line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = SplitTabs(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(t.header.size()) +
                               " columns, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table ReadTableFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return ReadTable(in, path);
}

// Output sink: a file when a path is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open for writing: " + path);
    }
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream file_;
};

// Sidecar manifest `<out>.manifest.json`; for stdout the manifest goes to
// stderr as a single `# manifest` line.
void WriteManifest(const std::string& command, const std::string& out_path,
                   const json& resolved, const std::string& checkpoint_path) {
  json m;
  m["format_version"] = kManifestVersion;
  m["command"] = command;
  m["config"] = resolved;
  m["config_hash"] = Sha256Hex(resolved.dump());
  if (!checkpoint_path.empty()) {
    m["checkpoint"] = checkpoint_path;
    m["checkpoint_hash"] = FileHash(checkpoint_path);
  }
  if (out_path.empty()) {
    std::cerr << "# manifest " << m.dump() << "\n";
    return;
  }
  std::ofstream out(out_path + ".manifest.json");
  out << m.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest for " + out_path);
}

json LoadConfigFile(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    json j = json::parse(ReadFile(path));
    if (!j.is_object()) throw std::runtime_error("top level must be an object");
    for (const auto& [key, value] : j.items()) {
      if (key != "model" && key != "training" && key != "index" &&
          key != "bench") {
        throw std::runtime_error("unknown section '" + key + "'");
      }
    }
    return j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
}

// Flag values overlaid by the file's section.
json Overlay(json flags, const json& file, const char* section) {
  if (file.contains(section)) flags.merge_patch(file.at(section));
  return flags;
}

struct ModelFlags {
  ModelConfig config = ModelConfig::Desk();
  std::string pooling = "weighted_average";
  std::string crossing = "residual";
  bool unshared = false;
  CLI::Option* ffn_option = nullptr;

  void Register(CLI::App* app) {
    app->add_option("--layers", config.layers, "transformer layers")
        ->capture_default_str();
    app->add_option("--hidden", config.hidden, "hidden size")
        ->capture_default_str();
    app->add_option("--heads", config.heads, "attention heads")
        ->capture_default_str();
    ffn_option = app->add_option("--ffn", config.ffn,
                                 "feed-forward width (default: hidden)");
    app->add_option("--buckets", config.vocab_buckets, "trigram hash buckets")
        ->capture_default_str();
    app->add_option("--hash-seed", config.hash_seed, "trigram hash seed")
        ->capture_default_str();
    app->add_option("--max-len", config.max_len, "words per text")
        ->capture_default_str();
    app->add_option("--pooling", pooling, "weighted_average | cls_token")
        ->capture_default_str();
    app->add_option("--crossing", crossing, "residual | cosine")
        ->capture_default_str();
    app->add_flag("--unshared", unshared, "separate keyword encoder");
    app->add_option("--dropout", config.dropout, "training dropout rate")
        ->capture_default_str();
    app->add_option("--residual-blocks", config.residual_blocks,
                    "residual crossing blocks")
        ->capture_default_str();
  }

  ModelConfig Resolve(const json& file) {
    config.pooling = ParsePooling(pooling);
    config.crossing = ParseCrossing(crossing);
    config.shared_encoders = !unshared;
    json flags = config.ToJson();
    // Without an explicit width, ffn follows the resolved hidden size.
    if (ffn_option->count() == 0) flags.erase("ffn");
    return ModelConfig::FromJson(Overlay(flags, file, "model"));
  }
};

struct TrainingFlags {
  DistillationConfig config;

  void Register(CLI::App* app, bool finetune) {
    if (finetune) {
      app->add_option("--lr", config.finetune_learning_rate, "learning rate")
          ->capture_default_str();
      app->add_option("--epochs", config.finetune_epochs, "epochs")
          ->capture_default_str();
    } else {
      app->add_option("--lr", config.learning_rate, "learning rate")
          ->capture_default_str();
      app->add_option("--epochs", config.epochs, "epochs")->capture_default_str();
      app->add_option("--temperature", config.temperature,
                      "soft-label temperature")
          ->capture_default_str();
    }
    app->add_option("--batch-size", config.batch_size, "pairs per step")
        ->capture_default_str();
    app->add_option("--weight-decay", config.weight_decay,
                    "decoupled weight decay")
        ->capture_default_str();
    app->add_option("--seed", config.seed, "shuffle and dropout seed")
        ->capture_default_str();
    app->add_option("--workers", config.workers, "gradient worker threads")
        ->capture_default_str();
  }

  DistillationConfig Resolve(const json& file) {
    return DistillationConfig::FromJson(Overlay(config.ToJson(), file, "training"));
  }
};

void PrintLoss(const TrainResult& r) {
  for (size_t e = 0; e < r.epoch_loss.size(); ++e) {
    std::cerr << "epoch " << e + 1 << " loss " << r.epoch_loss[e] << "\n";
  }
  std::cerr << r.steps << " steps in " << r.seconds << "s\n";
}

json TrainManifest(const ModelConfig& m, const DistillationConfig& t,
                   const std::string& data, const TrainResult& r) {
  return {{"model", m.ToJson()},
          {"training", t.ToJson()},
          {"data", data},
          {"data_hash", FileHash(data)},
          {"learning_rate", r.learning_rate},
          {"epoch_loss", r.epoch_loss}};
}

struct KeywordList {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
};

// `keyword_id<TAB>keyword` with a header row.
KeywordList ReadKeywords(const std::string& path) {
  const Table t = ReadTableFile(path);
  const int id = t.Column("keyword_id", path);
  const int text = t.Column("keyword", path);
  KeywordList k;
  for (const auto& row : t.rows) {
    k.ids.push_back(row[id]);
    k.texts.push_back(row[text]);
  }
  return k;
}

std::vector<std::string> ReadLines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<int> ParseGrid(const std::string& s) {
  std::vector<int> grid;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) grid.push_back(std::stoi(item));
  return grid;
}

int GradeOf(const std::string& label) {
  if (label.size() == 1 && label[0] >= '0' && label[0] <= '3') {
    return label[0] - '0';
  }
  return static_cast<int>(ParseEditorialLabel(label));
}

int BinaryOf(const std::string& label) {
  if (label == "0" || label == "1") return label == "1";
  return BinarizeLabel(ParseEditorialLabel(label));
}

int Run(int argc, char** argv) {
  CLI::App app{"Twin-encoder relevance model: training, indexing, search "
               "and evaluation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config with model/training/index/bench sections; "
                 "overrides flags");

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic",
                                 "write synthetic teacher-labeled pairs or keywords");
  int gen_count = 5000;
  uint64_t gen_seed = 42;
  std::string gen_kind = "pairs", gen_out;
  gen->add_option("--count", gen_count, "rows")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--kind", gen_kind, "pairs | keywords")->capture_default_str();
  gen->add_option("--out", gen_out, "output TSV")->required();

  // distill
  auto* distill = app.add_subcommand("distill", "train a student on teacher logits");
  ModelFlags distill_model;
  TrainingFlags distill_train;
  uint64_t init_seed = 1;
  std::string distill_data, distill_out;
  distill_model.Register(distill);
  distill_train.Register(distill, false);
  distill->add_option("--init-seed", init_seed, "parameter init seed")
      ->capture_default_str();
  distill->add_option("--data", distill_data, "pair TSV with teacher logits")
      ->required();
  distill->add_option("--out", distill_out, "output checkpoint")->required();

  // finetune
  auto* finetune = app.add_subcommand("finetune", "train on hard labels");
  TrainingFlags finetune_train;
  std::string finetune_model, finetune_data, finetune_out;
  finetune_train.Register(finetune, true);
  finetune->add_option("--model", finetune_model, "input checkpoint")->required();
  finetune->add_option("--data", finetune_data, "labeled pair TSV")->required();
  finetune->add_option("--out", finetune_out, "output checkpoint")->required();

  // encode-corpus
  auto* encode = app.add_subcommand("encode-corpus", "embed a keyword corpus");
  std::string encode_model, encode_keywords, encode_out;
  int encode_workers = 1;
  encode->add_option("--model", encode_model, "checkpoint")->required();
  encode->add_option("--keywords", encode_keywords,
                     "TSV with keyword_id and keyword columns")
      ->required();
  encode->add_option("--out", encode_out, "embedding store")->required();
  encode->add_option("--workers", encode_workers, "encoding threads")
      ->capture_default_str();

  // build-index
  auto* build = app.add_subcommand("build-index", "build the graph index");
  std::string build_embeddings, build_out;
  GraphParams graph;
  build->add_option("--embeddings", build_embeddings, "embedding store")
      ->required();
  build->add_option("--out", build_out, "index file")->required();
  build->add_option("--degree-bound", graph.degree_bound, "max out-degree")
      ->capture_default_str();
  build->add_option("--build-beam", graph.build_beam, "construction beam")
      ->capture_default_str();
  build->add_option("--alpha", graph.prune_alpha, "pruning slack")
      ->capture_default_str();
  build->add_option("--seed", graph.seed, "insertion-order seed")
      ->capture_default_str();

  // search
  auto* search = app.add_subcommand("search", "top keywords for each query");
  std::string search_model, search_index, search_queries, search_out;
  int top_n = 10, search_beam = 64;
  bool exact = false;
  search->add_option("--model", search_model, "checkpoint")->required();
  search->add_option("--index", search_index, "index file")->required();
  search->add_option("--queries", search_queries,
                     "one query per line (default: stdin)");
  search->add_option("--top-n", top_n, "results per query")->capture_default_str();
  search->add_option("--beam", search_beam, "search beam")->capture_default_str();
  search->add_flag("--exact", exact, "brute-force search");
  search->add_option("--out", search_out, "output TSV (default: stdout)");

  // score
  auto* score = app.add_subcommand("score", "score explicit query/keyword pairs");
  std::string score_model, score_pairs, score_out;
  score->add_option("--model", score_model, "checkpoint")->required();
  score->add_option("--pairs", score_pairs,
                    "TSV with query and keyword columns; other columns are kept")
      ->required();
  score->add_option("--out", score_out, "output TSV (default: stdout)");

  // eval-auc
  auto* auc = app.add_subcommand("eval-auc", "ROC-AUC of a scored TSV");
  std::string auc_scores, auc_score_col = "score", auc_label_col = "label";
  auc->add_option("--scores", auc_scores, "scored TSV")->required();
  auc->add_option("--score-column", auc_score_col)->capture_default_str();
  auc->add_option("--label-column", auc_label_col,
                  "0/1 or bad/fair/good/excellent")
      ->capture_default_str();

  // eval-ndcg
  auto* ndcg = app.add_subcommand("eval-ndcg", "mean nDCG by position");
  std::string ndcg_scores, ndcg_score_col = "score", ndcg_label_col = "label";
  int ndcg_max = 5;
  bool exponential = false;
  ndcg->add_option("--scores", ndcg_scores, "scored TSV with a query column")
      ->required();
  ndcg->add_option("--score-column", ndcg_score_col)->capture_default_str();
  ndcg->add_option("--label-column", ndcg_label_col,
                   "0-3 or bad/fair/good/excellent")
      ->capture_default_str();
  ndcg->add_option("--positions", ndcg_max, "report positions 1..n")
      ->capture_default_str();
  ndcg->add_flag("--exponential-gain", exponential, "gain 2^g - 1");

  // bench
  auto* bench = app.add_subcommand("bench", "latency grid over keyword counts");
  std::string bench_model, bench_modes = "twin_cosine,twin_residual,cross_encoder",
                           bench_grid = "25,50,100,200", bench_out;
  int bench_queries = 20, bench_reps = 3, bench_qel = 1;
  bool no_cache = false;
  bench->add_option("--model", bench_model,
                    "checkpoint (default: randomly initialized desk model)");
  bench->add_option("--modes", bench_modes)->capture_default_str();
  bench->add_option("--grid", bench_grid, "keywords per query")
      ->capture_default_str();
  bench->add_option("--queries", bench_queries)->capture_default_str();
  bench->add_option("--repetitions", bench_reps)->capture_default_str();
  bench->add_option("--qel", bench_qel, "query encoding loops")
      ->capture_default_str();
  bench->add_flag("--no-cache", no_cache, "encode keywords inside the timed loop");
  bench->add_option("--out", bench_out, "output TSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);
  const json file = LoadConfigFile(config_path);

  if (gen->parsed()) {
    if (gen_count < 1) throw std::invalid_argument("--count must be >= 1");
    if (gen_kind == "pairs") {
      WritePairsTsv(gen_out, GenerateSyntheticPairs(gen_count, gen_seed));
    } else if (gen_kind == "keywords") {
      const auto kws = GenerateSyntheticKeywords(gen_count, gen_seed);
      std::ofstream out(gen_out);
      out << "keyword_id\tkeyword\n";
      for (size_t i = 0; i < kws.size(); ++i) out << "kw" << i << "\t" << kws[i] << "\n";
      if (!out) throw std::runtime_error("cannot write: " + gen_out);
    } else {
      throw std::invalid_argument("--kind must be pairs or keywords");
    }
    WriteManifest("gen-synthetic", gen_out,
                  {{"count", gen_count}, {"seed", gen_seed}, {"kind", gen_kind}},
                  "");
    return 0;
  }

  if (distill->parsed()) {
    const ModelConfig mc = distill_model.Resolve(file);
    const DistillationConfig tc = distill_train.Resolve(file);
    const auto data = ReadPairsTsv(distill_data);
    TwinModel model = TwinModel::Init(mc, init_seed);
    const TrainResult r = DistillTrain(data, tc, model);
    PrintLoss(r);
    SaveCheckpoint(model, distill_out);
    json resolved = TrainManifest(mc, tc, distill_data, r);
    resolved["init_seed"] = init_seed;
    WriteManifest("distill", distill_out, resolved, distill_out);
    return 0;
  }

  if (finetune->parsed()) {
    const DistillationConfig tc = finetune_train.Resolve(file);
    TwinModel model = LoadCheckpoint(finetune_model);
    const auto data = ReadPairsTsv(finetune_data);
    const TrainResult r = Finetune(data, tc, model);
    PrintLoss(r);
    SaveCheckpoint(model, finetune_out);
    json resolved = TrainManifest(model.config(), tc, finetune_data, r);
    resolved["base_checkpoint"] = finetune_model;
    resolved["base_checkpoint_hash"] = FileHash(finetune_model);
    WriteManifest("finetune", finetune_out, resolved, finetune_out);
    return 0;
  }

  if (encode->parsed()) {
    const TwinModel model = LoadCheckpoint(encode_model);
    const KeywordList k = ReadKeywords(encode_keywords);
    const EmbeddingStore store =
        EncodeCorpus(model, k.ids, k.texts, encode_workers);
    store.Save(encode_out);
    std::cerr << "encoded " << store.ids.size() << " of " << k.ids.size()
              << " keywords\n";
    WriteManifest("encode-corpus", encode_out,
                  {{"keywords", encode_keywords},
                   {"keywords_hash", FileHash(encode_keywords)},
                   {"encoded", store.ids.size()},
                   {"workers", encode_workers}},
                  encode_model);
    return 0;
  }

  if (build->parsed()) {
    json g = {{"degree_bound", graph.degree_bound},
              {"build_beam", graph.build_beam},
              {"prune_alpha", graph.prune_alpha},
              {"seed", graph.seed}};
    g = Overlay(g, file, "index");
    graph.degree_bound = g.value("degree_bound", graph.degree_bound);
    graph.build_beam = g.value("build_beam", graph.build_beam);
    graph.prune_alpha = g.value("prune_alpha", graph.prune_alpha);
    graph.seed = g.value("seed", graph.seed);
    EmbeddingIndex index =
        EmbeddingIndex::FromStore(EmbeddingStore::Load(build_embeddings));
    index.BuildGraph(graph);
    index.Save(build_out);
    g["embeddings"] = build_embeddings;
    g["embeddings_hash"] = FileHash(build_embeddings);
    WriteManifest("build-index", build_out, g, "");
    return 0;
  }

  if (search->parsed()) {
    const TwinModel model = LoadCheckpoint(search_model);
    const EmbeddingIndex index = EmbeddingIndex::Load(search_index);
    std::vector<std::string> queries;
    if (search_queries.empty()) {
      queries = ReadLines(std::cin);
    } else {
      std::ifstream in(search_queries);
      if (!in) throw std::runtime_error("cannot open: " + search_queries);
      queries = ReadLines(in);
    }
    Output out(search_out);
    out.stream() << "query\trank\tkeyword_id\tcosine_score\n";
    int skipped = 0;
    for (const auto& q : queries) {
      VecD emb;
      try {
        emb = model.EncodeQuery(std::string_view(q));
      } catch (const std::invalid_argument& e) {
        std::cerr << "warning: skipping query '" << q << "': " << e.what() << "\n";
        ++skipped;
        continue;
      }
      const auto unit = Normalized({emb.data(), static_cast<size_t>(emb.size())});
      const auto results = exact ? index.KnnExact(unit, top_n)
                                 : index.KnnApprox(unit, top_n, search_beam);
      for (const auto& r : results) {
        out.stream() << q << "\t" << r.rank << "\t" << r.keyword_id << "\t"
                     << std::setprecision(9) << r.cosine_score << "\n";
      }
    }
    WriteManifest("search", search_out,
                  {{"index", search_index},
                   {"index_hash", FileHash(search_index)},
                   {"top_n", top_n},
                   {"beam", search_beam},
                   {"exact", exact},
                   {"queries", queries.size()},
                   {"skipped", skipped}},
                  search_model);
    return 0;
  }

  if (score->parsed()) {
    const TwinModel model = LoadCheckpoint(score_model);
    const Table t = ReadTableFile(score_pairs);
    const int qc = t.Column("query", score_pairs);
    const int kc = t.Column("keyword", score_pairs);
    Output out(score_out);
    for (const auto& h : t.header) out.stream() << h << "\t";
    out.stream() << "score\n";
    for (size_t i = 0; i < t.rows.size(); ++i) {
      double s;
      try {
        s = model.Score(t.rows[i][qc], t.rows[i][kc]);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error(score_pairs + ":" + std::to_string(i + 2) + ": " +
                                 e.what());
      }
      for (const auto& cell : t.rows[i]) out.stream() << cell << "\t";
      out.stream() << std::setprecision(12) << s << "\n";
    }
    WriteManifest("score", score_out,
                  {{"pairs", score_pairs},
                   {"pairs_hash", FileHash(score_pairs)},
                   {"crossing", ToString(model.config().crossing)}},
                  score_model);
    return 0;
  }

  if (auc->parsed()) {
    const Table t = ReadTableFile(auc_scores);
    const int sc = t.Column(auc_score_col, auc_scores);
    const int lc = t.Column(auc_label_col, auc_scores);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& row : t.rows) {
      scores.push_back(std::stod(row[sc]));
      labels.push_back(BinaryOf(row[lc]));
    }
    std::cout << "metric\tvalue\nroc_auc\t" << std::setprecision(9)
              << RocAuc(scores, labels) << "\n";
    WriteManifest("eval-auc", "",
                  {{"scores", auc_scores}, {"scores_hash", FileHash(auc_scores)}},
                  "");
    return 0;
  }

  if (ndcg->parsed()) {
    const Table t = ReadTableFile(ndcg_scores);
    const int qc = t.Column("query", ndcg_scores);
    const int sc = t.Column(ndcg_score_col, ndcg_scores);
    const int lc = t.Column(ndcg_label_col, ndcg_scores);
    std::map<std::string, std::vector<std::pair<double, int>>> by_query;
    for (const auto& row : t.rows) {
      by_query[row[qc]].push_back({std::stod(row[sc]), GradeOf(row[lc])});
    }
    std::vector<std::vector<int>> rankings;
    for (auto& [q, items] : by_query) {
      std::stable_sort(items.begin(), items.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      std::vector<int> grades;
      for (const auto& it : items) grades.push_back(it.second);
      rankings.push_back(std::move(grades));
    }
    const GainKind kind = exponential ? GainKind::kExponential : GainKind::kLinear;
    std::cout << "position\tndcg\n";
    for (int p = 1; p <= ndcg_max; ++p) {
      const auto m = MeanNdcgAt(rankings, p, kind);
      std::cout << p << "\t";
      if (m) {
        std::cout << std::setprecision(9) << *m;
      } else {
        std::cout << "nan";
      }
      std::cout << "\n";
    }
    WriteManifest("eval-ndcg", "",
                  {{"scores", ndcg_scores},
                   {"scores_hash", FileHash(ndcg_scores)},
                   {"gain", exponential ? "exponential" : "linear"},
                   {"queries", rankings.size()}},
                  "");
    return 0;
  }

  if (bench->parsed()) {
    json b = {{"modes", bench_modes},
              {"grid", bench_grid},
              {"queries", bench_queries},
              {"repetitions", bench_reps},
              {"qel", bench_qel},
              {"keyword_cache", !no_cache}};
    b = Overlay(b, file, "bench");
    const TwinModel model = bench_model.empty()
                                ? TwinModel::Init(ModelConfig::Desk(), 1)
                                : LoadCheckpoint(bench_model);
    std::vector<BenchMode> modes;
    {
      std::istringstream in(b.at("modes").get<std::string>());
      std::string m;
      while (std::getline(in, m, ',')) modes.push_back(ParseBenchMode(m));
    }
    const std::vector<int> grid = ParseGrid(b.at("grid").get<std::string>());
    if (grid.empty()) throw std::invalid_argument("--grid is empty");
    const int nq = b.at("queries").get<int>();
    const BenchWorkload w =
        MakeBenchWorkload(nq, *std::max_element(grid.begin(), grid.end()), 7);
    Output out(bench_out);
    out.stream() << "mode\tn_keywords\tmean_query_ms\tmedian_query_ms\t"
                    "p95_query_ms\ttotal_ms\ttokenize_ms\tquery_encoder_calls\t"
                    "keyword_encoder_calls\tcross_encoder_calls\n";
    json fits = json::array();
    for (BenchMode mode : modes) {
      std::vector<double> xs, ys;
      for (int nk : grid) {
        LatencyScenario s;
        s.mode = mode;
        s.n_queries = nq;
        s.n_keywords_per_query = nk;
        s.repetitions = b.at("repetitions").get<int>();
        s.qel = b.at("qel").get<int>();
        s.keyword_cache = b.at("keyword_cache").get<bool>();
        const TimingReport r = Bench(s, model, w);
        out.stream() << ToString(mode) << "\t" << nk << "\t" << r.mean_query_ms
                     << "\t" << r.median_query_ms << "\t" << r.p95_query_ms
                     << "\t" << r.total_ms << "\t" << r.tokenize_ms << "\t"
                     << r.counters.query_encoder_calls << "\t"
                     << r.counters.keyword_encoder_calls << "\t"
                     << r.counters.cross_encoder_calls << "\n";
        xs.push_back(nk);
        ys.push_back(r.mean_query_ms);
      }
      if (xs.size() >= 3) {
        const LinearFit f = ComplexityFit(xs, ys);
        std::cerr << ToString(mode) << ": per-query ms = " << f.intercept << " + "
                  << f.slope << " * n_keywords (rms " << f.rms_residual << ")\n";
        fits.push_back({{"mode", ToString(mode)},
                        {"alpha_ms", f.intercept},
                        {"beta_ms", f.slope},
                        {"rms_residual", f.rms_residual}});
      }
    }
    b["fits"] = fits;
    WriteManifest("bench", bench_out, b, bench_model);
    return 0;
  }
  return 0;
}

}  // namespace
}  // namespace twinrank

int main(int argc, char** argv) {
  try {
    return twinrank::Run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

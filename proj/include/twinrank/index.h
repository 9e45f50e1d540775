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

#ifndef TWINRANK_INDEX_H_
#define TWINRANK_INDEX_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twinrank/model.h"

namespace twinrank {

struct SearchResult {
  std::string keyword_id;
  double cosine_score = 0;
  int rank = 0;  // 1-based
};

struct SearchStats {
  int64_t distance_computations = 0;
};

struct GraphParams {
  int degree_bound = 16;
  int build_beam = 64;
  double prune_alpha = 1.2;
  uint64_t seed = 7;
};

// Raw (unnormalized) keyword embeddings in float64, keyed by id. This is the
// offline cache the crossing heads read at serving time.
struct EmbeddingStore {
  int hidden = 0;
  std::vector<std::string> ids;
  std::vector<double> vectors;  // ids.size() x hidden, row-major

  std::span<const double> vector(size_t i) const {
    return {vectors.data() + i * hidden, static_cast<size_t>(hidden)};
  }
  VecD Row(size_t i) const;

  void Save(const std::string& path) const;
  static EmbeddingStore Load(const std::string& path);
};

// Encodes keywords with the keyword-side encoder. Keywords that fail to
// tokenize (e.g. empty after normalization) are skipped with a warning on
// stderr. Throws std::invalid_argument on an empty corpus or mismatched ids.
EmbeddingStore EncodeCorpus(const TwinModel& model,
                            std::span<const std::string> ids,
                            std::span<const std::string> keywords,
                            int workers = 1);

// Unit-normalized keyword vectors (float32) with an optional proximity graph
// for approximate search. Immutable once built; searches are const and may
// run concurrently.
class EmbeddingIndex {
 public:
  explicit EmbeddingIndex(int hidden = 0) : hidden_(hidden) {}

  // L2-normalizes every stored vector. Zero vectors are rejected.
  static EmbeddingIndex FromStore(const EmbeddingStore& store);

  // Throws std::invalid_argument unless |v| == 1 within 1e-6, the dimension
  // matches and the id is new. Invalidates any built graph.
  void Add(const std::string& id, std::span<const double> unit_vector);

  size_t size() const { return ids_.size(); }
  int hidden() const { return hidden_; }
  const std::string& id(size_t i) const { return ids_[i]; }
  std::span<const float> vector(size_t i) const {
    return {vectors_.data() + i * hidden_, static_cast<size_t>(hidden_)};
  }

  // Exhaustive scan. Throws std::invalid_argument on an empty index, a
  // non-unit query or top_n < 1.
  std::vector<SearchResult> KnnExact(std::span<const double> query,
                                     int top_n,
                                     SearchStats* stats = nullptr) const;

  // Builds the proximity graph: points are inserted in a seeded order
  // starting from the medoid, each linked to a pruned set of candidates
  // from a beam search over the partial graph, with reverse links re-pruned
  // to degree_bound. A final pass links any node not reachable from the
  // entry point. Throws std::invalid_argument if degree_bound < 1.
  void BuildGraph(const GraphParams& params);
  bool has_graph() const { return !graph_.empty(); }
  const std::vector<std::vector<uint32_t>>& graph() const { return graph_; }
  uint32_t entry_point() const { return entry_; }
  const GraphParams& graph_params() const { return graph_params_; }

  // Greedy best-first search with a bounded candidate beam. Throws
  // std::invalid_argument if search_beam < top_n or no graph is built.
  std::vector<SearchResult> KnnApprox(std::span<const double> query,
                                      int top_n, int search_beam,
                                      SearchStats* stats = nullptr) const;

  // Index file: magic, version, N, H, metric tag, graph params, entry point,
  // float32 vector block, id table and adjacency lists, little-endian.
  void Save(const std::string& path) const;
  static EmbeddingIndex Load(const std::string& path);

  // Number of nodes reachable from the entry point.
  size_t ReachableCount() const;

 private:
  struct Candidate {
    double distance;
    uint32_t node;
    bool operator<(const Candidate& o) const {
      return distance < o.distance ||
             (distance == o.distance && node < o.node);
    }
    bool operator>(const Candidate& o) const { return o < *this; }
  };

  double Distance(std::span<const double> q, uint32_t node) const;
  double Distance(uint32_t a, uint32_t b) const;
  std::vector<Candidate> BeamSearch(std::span<const double> query, int beam,
                                    SearchStats* stats) const;
  std::vector<uint32_t> Prune(uint32_t node, std::vector<Candidate> cands,
                              int degree, double alpha) const;
  std::vector<SearchResult> Finish(std::span<const double> query,
                                   std::vector<uint32_t> nodes,
                                   int top_n) const;

  int hidden_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> vectors_;
  std::vector<std::vector<uint32_t>> graph_;
  uint32_t entry_ = 0;
  GraphParams graph_params_;
};

// L2-normalized copy. Throws std::invalid_argument on a zero vector.
std::vector<double> Normalized(std::span<const double> v);

inline constexpr uint32_t kIndexVersion = 1;

}  // namespace twinrank

#endif  // TWINRANK_INDEX_H_

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

#include "twinrank/index.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "twinrank/binary_io.h"

namespace twinrank {
namespace {

constexpr char kIndexMagic[9] = "TWRKINDX";
constexpr char kStoreMagic[9] = "TWRKEMBS";
constexpr uint32_t kMetricUnitEuclidean = 1;
constexpr double kUnitTolerance = 1e-6;

template <typename T>
double NormOf(std::span<const T> v) {
  double s = 0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

void CheckUnit(std::span<const double> v, const char* what) {
  if (std::abs(NormOf(v) - 1.0) > kUnitTolerance) {
    throw std::invalid_argument(std::string(what) + ": vector is not unit norm");
  }
}

}  // namespace

std::vector<double> Normalized(std::span<const double> v) {
  const double n = NormOf(v);
  if (n == 0.0 || !std::isfinite(n)) {
    throw std::invalid_argument("Normalized: zero or non-finite vector");
  }
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

VecD EmbeddingStore::Row(size_t i) const {
  VecD r(hidden);
  for (int j = 0; j < hidden; ++j) r(j) = vectors[i * hidden + j];
  return r;
}

void EmbeddingStore::Save(const std::string& path) const {
  io::AtomicWrite(path, [&](std::ostream& out) {
    out.write(kStoreMagic, 8);
    io::PutUnsigned<uint32_t>(out, kIndexVersion);
    io::PutUnsigned<uint64_t>(out, ids.size());
    io::PutUnsigned<uint32_t>(out, static_cast<uint32_t>(hidden));
    for (double v : vectors) io::PutF64(out, v);
    for (const auto& id : ids) io::PutString(out, id);
  });
}

EmbeddingStore EmbeddingStore::Load(const std::string& path) {
  auto in = io::OpenForRead(path);
  try {
    io::ExpectMagic(in, kStoreMagic);
    if (io::GetUnsigned<uint32_t>(in) != kIndexVersion) {
      throw std::runtime_error("unsupported version");
    }
    EmbeddingStore s;
    const uint64_t n = io::GetUnsigned<uint64_t>(in);
    s.hidden = static_cast<int>(io::GetUnsigned<uint32_t>(in));
    if (s.hidden < 1 || n > (uint64_t{1} << 32)) {
      throw std::runtime_error("bad header");
    }
    s.vectors.resize(n * s.hidden);
    for (double& v : s.vectors) v = io::GetF64(in);
    for (uint64_t i = 0; i < n; ++i) s.ids.push_back(io::GetString(in));
    return s;
  } catch (const std::exception& e) {
    throw std::runtime_error("embedding store " + path + ": " + e.what());
  }
}

EmbeddingStore EncodeCorpus(const TwinModel& model,
                            std::span<const std::string> ids,
                            std::span<const std::string> keywords,
                            int workers) {
  if (keywords.empty()) throw std::invalid_argument("EncodeCorpus: empty corpus");
  if (ids.size() != keywords.size()) {
    throw std::invalid_argument("EncodeCorpus: ids/keywords size mismatch");
  }
  const size_t n = keywords.size();
  std::vector<std::optional<VecD>> rows(n);
  std::vector<std::string> errors(n);
  auto work = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      try {
        rows[i] = model.EncodeKeyword(keywords[i]);
      } catch (const std::invalid_argument& e) {
        errors[i] = e.what();
      }
    }
  };
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back(work, n * w / workers, n * (w + 1) / workers);
    }
    for (auto& t : threads) t.join();
  }
  EmbeddingStore store;
  store.hidden = model.config().hidden;
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < n; ++i) {
    if (!rows[i]) {
      std::cerr << "warning: skipping keyword " << ids[i] << ": " << errors[i]
                << "\n";
      continue;
    }
    if (!seen.insert(ids[i]).second) {
      throw std::invalid_argument("EncodeCorpus: duplicate id " + ids[i]);
    }
    store.ids.push_back(ids[i]);
    store.vectors.insert(store.vectors.end(), rows[i]->data(),
                         rows[i]->data() + rows[i]->size());
  }
  if (store.ids.empty()) {
    throw std::invalid_argument("EncodeCorpus: no keyword could be encoded");
  }
  return store;
}

EmbeddingIndex EmbeddingIndex::FromStore(const EmbeddingStore& store) {
  EmbeddingIndex index(store.hidden);
  for (size_t i = 0; i < store.ids.size(); ++i) {
    index.Add(store.ids[i], Normalized(store.vector(i)));
  }
  return index;
}

void EmbeddingIndex::Add(const std::string& id,
                         std::span<const double> unit_vector) {
  if (hidden_ < 1) throw std::invalid_argument("EmbeddingIndex: no dimension");
  if (static_cast<int>(unit_vector.size()) != hidden_) {
    throw std::invalid_argument("EmbeddingIndex::Add: dimension mismatch");
  }
  CheckUnit(unit_vector, "EmbeddingIndex::Add");
  if (std::find(ids_.begin(), ids_.end(), id) != ids_.end()) {
    throw std::invalid_argument("EmbeddingIndex::Add: duplicate id " + id);
  }
  std::vector<float> f(unit_vector.begin(), unit_vector.end());
  if (std::abs(NormOf(std::span<const float>(f)) - 1.0) > kUnitTolerance) {
    throw std::invalid_argument("EmbeddingIndex::Add: not unit after rounding");
  }
  ids_.push_back(id);
  vectors_.insert(vectors_.end(), f.begin(), f.end());
  graph_.clear();
}

double EmbeddingIndex::Distance(std::span<const double> q,
                                uint32_t node) const {
  const float* v = vectors_.data() + static_cast<size_t>(node) * hidden_;
  double d = 0;
  for (int i = 0; i < hidden_; ++i) {
    const double diff = q[i] - static_cast<double>(v[i]);
    d += diff * diff;
  }
  return d;
}

double EmbeddingIndex::Distance(uint32_t a, uint32_t b) const {
  const float* va = vectors_.data() + static_cast<size_t>(a) * hidden_;
  const float* vb = vectors_.data() + static_cast<size_t>(b) * hidden_;
  double d = 0;
  for (int i = 0; i < hidden_; ++i) {
    const double diff = static_cast<double>(va[i]) - static_cast<double>(vb[i]);
    d += diff * diff;
  }
  return d;
}

std::vector<SearchResult> EmbeddingIndex::Finish(std::span<const double> query,
                                                 std::vector<uint32_t> nodes,
                                                 int top_n) const {
  std::vector<std::pair<double, uint32_t>> scored;
  scored.reserve(nodes.size());
  for (uint32_t n : nodes) {
    const float* v = vectors_.data() + static_cast<size_t>(n) * hidden_;
    double dot = 0;
    for (int i = 0; i < hidden_; ++i) dot += query[i] * static_cast<double>(v[i]);
    scored.emplace_back(dot, n);
  }
  const size_t keep = std::min<size_t>(top_n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                    [&](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return ids_[a.second] < ids_[b.second];
                    });
  std::vector<SearchResult> out;
  for (size_t i = 0; i < keep; ++i) {
    out.push_back({ids_[scored[i].second], scored[i].first,
                   static_cast<int>(i + 1)});
  }
  return out;
}

std::vector<SearchResult> EmbeddingIndex::KnnExact(
    std::span<const double> query, int top_n, SearchStats* stats) const {
  if (ids_.empty()) throw std::invalid_argument("KnnExact: empty index");
  if (top_n < 1) throw std::invalid_argument("KnnExact: top_n must be >= 1");
  if (static_cast<int>(query.size()) != hidden_) {
    throw std::invalid_argument("KnnExact: dimension mismatch");
  }
  CheckUnit(query, "KnnExact");
  std::vector<uint32_t> all(ids_.size());
  std::iota(all.begin(), all.end(), 0u);
  if (stats != nullptr) stats->distance_computations += all.size();
  return Finish(query, std::move(all), top_n);
}

std::vector<EmbeddingIndex::Candidate> EmbeddingIndex::BeamSearch(
    std::span<const double> query, int beam, SearchStats* stats) const {
  std::vector<bool> visited(ids_.size(), false);
  std::priority_queue<Candidate, std::vector<Candidate>,
                      std::greater<Candidate>>
      frontier;
  std::priority_queue<Candidate> best;  // max-heap, worst on top
  int64_t computed = 0;
  auto consider = [&](uint32_t node) {
    visited[node] = true;
    const Candidate c{Distance(query, node), node};
    ++computed;
    if (static_cast<int>(best.size()) < beam || c < best.top()) {
      frontier.push(c);
      best.push(c);
      if (static_cast<int>(best.size()) > beam) best.pop();
    }
  };
  consider(entry_);
  while (!frontier.empty()) {
    const Candidate c = frontier.top();
    frontier.pop();
    if (static_cast<int>(best.size()) >= beam && best.top() < c) break;
    for (uint32_t nb : graph_[c.node]) {
      if (!visited[nb]) consider(nb);
    }
  }
  if (stats != nullptr) stats->distance_computations += computed;
  std::vector<Candidate> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<uint32_t> EmbeddingIndex::Prune(uint32_t node,
                                            std::vector<Candidate> cands,
                                            int degree, double alpha) const {
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end(),
                          [](const Candidate& a, const Candidate& b) {
                            return a.node == b.node;
                          }),
              cands.end());
  const double alpha_sq = alpha * alpha;
  std::vector<uint32_t> out;
  for (const Candidate& c : cands) {
    if (static_cast<int>(out.size()) >= degree) break;
    if (c.node == node) continue;
    bool covered = false;
    for (uint32_t r : out) {
      if (alpha_sq * Distance(r, c.node) <= c.distance) {
        covered = true;
        break;
      }
    }
    if (!covered) out.push_back(c.node);
  }
  return out;
}

void EmbeddingIndex::BuildGraph(const GraphParams& params) {
  if (params.degree_bound < 1) {
    throw std::invalid_argument("BuildGraph: degree_bound must be >= 1");
  }
  if (params.build_beam < 1) {
    throw std::invalid_argument("BuildGraph: build_beam must be >= 1");
  }
  if (!(params.prune_alpha >= 1.0)) {
    throw std::invalid_argument("BuildGraph: prune_alpha must be >= 1");
  }
  if (ids_.empty()) throw std::invalid_argument("BuildGraph: empty index");
  const size_t n = ids_.size();
  graph_params_ = params;

  std::vector<double> centroid(hidden_, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < hidden_; ++j) centroid[j] += vectors_[i * hidden_ + j];
  }
  for (double& c : centroid) c /= static_cast<double>(n);
  uint32_t medoid = 0;
  double best = std::numeric_limits<double>::infinity();
  for (uint32_t i = 0; i < n; ++i) {
    const double d = Distance(centroid, i);
    if (d < best) {
      best = d;
      medoid = i;
    }
  }
  entry_ = medoid;

  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(params.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::iter_swap(order.begin(), std::find(order.begin(), order.end(), medoid));

  graph_.assign(n, {});
  std::vector<double> q(hidden_);
  for (size_t idx = 1; idx < n; ++idx) {
    const uint32_t node = order[idx];
    for (int j = 0; j < hidden_; ++j) q[j] = vectors_[node * hidden_ + j];
    auto cands = BeamSearch(q, params.build_beam, nullptr);
    graph_[node] = Prune(node, std::move(cands), params.degree_bound,
                         params.prune_alpha);
    for (uint32_t nb : graph_[node]) {
      auto& adj = graph_[nb];
      if (std::find(adj.begin(), adj.end(), node) != adj.end()) continue;
      adj.push_back(node);
      if (static_cast<int>(adj.size()) > params.degree_bound) {
        std::vector<Candidate> c;
        for (uint32_t a : adj) c.push_back({Distance(nb, a), a});
        adj = Prune(nb, std::move(c), params.degree_bound, params.prune_alpha);
      }
    }
  }

  // Reachability repair: link each stranded node from the nearest reachable
  // node that still has a free slot.
  std::vector<bool> reach(n, false);
  auto flood = [&](uint32_t from) {
    std::deque<uint32_t> queue{from};
    reach[from] = true;
    while (!queue.empty()) {
      const uint32_t u = queue.front();
      queue.pop_front();
      for (uint32_t v : graph_[u]) {
        if (!reach[v]) {
          reach[v] = true;
          queue.push_back(v);
        }
      }
    }
  };
  flood(entry_);
  for (uint32_t u = 0; u < n; ++u) {
    if (reach[u]) continue;
    std::vector<Candidate> donors;
    for (uint32_t r = 0; r < n; ++r) {
      if (reach[r] && static_cast<int>(graph_[r].size()) < params.degree_bound) {
        donors.push_back({Distance(u, r), r});
      }
    }
    if (donors.empty()) {
      throw std::runtime_error("BuildGraph: cannot connect node " + ids_[u]);
    }
    const uint32_t donor = std::min_element(donors.begin(), donors.end())->node;
    graph_[donor].push_back(u);
    flood(u);
  }
}

size_t EmbeddingIndex::ReachableCount() const {
  if (graph_.empty()) return 0;
  std::vector<bool> seen(graph_.size(), false);
  std::deque<uint32_t> queue{entry_};
  seen[entry_] = true;
  size_t count = 1;
  while (!queue.empty()) {
    const uint32_t u = queue.front();
    queue.pop_front();
    for (uint32_t v : graph_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        queue.push_back(v);
      }
    }
  }
  return count;
}

std::vector<SearchResult> EmbeddingIndex::KnnApprox(
    std::span<const double> query, int top_n, int search_beam,
    SearchStats* stats) const {
  if (graph_.empty()) throw std::invalid_argument("KnnApprox: graph not built");
  if (top_n < 1) throw std::invalid_argument("KnnApprox: top_n must be >= 1");
  if (search_beam < top_n) {
    throw std::invalid_argument("KnnApprox: search_beam must be >= top_n");
  }
  if (static_cast<int>(query.size()) != hidden_) {
    throw std::invalid_argument("KnnApprox: dimension mismatch");
  }
  CheckUnit(query, "KnnApprox");
  const auto cands = BeamSearch(query, search_beam, stats);
  std::vector<uint32_t> nodes;
  for (size_t i = 0; i < cands.size(); ++i) nodes.push_back(cands[i].node);
  // Rescoring the returned candidates by inner product costs one more
  // vector op each.
  if (stats != nullptr) stats->distance_computations += nodes.size();
  return Finish(query, std::move(nodes), top_n);
}

void EmbeddingIndex::Save(const std::string& path) const {
  io::AtomicWrite(path, [&](std::ostream& out) {
    out.write(kIndexMagic, 8);
    io::PutUnsigned<uint32_t>(out, kIndexVersion);
    io::PutUnsigned<uint64_t>(out, ids_.size());
    io::PutUnsigned<uint32_t>(out, static_cast<uint32_t>(hidden_));
    io::PutUnsigned<uint32_t>(out, kMetricUnitEuclidean);
    io::PutUnsigned<uint32_t>(out,
                              static_cast<uint32_t>(graph_params_.degree_bound));
    io::PutUnsigned<uint32_t>(out,
                              static_cast<uint32_t>(graph_params_.build_beam));
    io::PutF64(out, graph_params_.prune_alpha);
    io::PutUnsigned<uint64_t>(out, graph_params_.seed);
    io::PutUnsigned<uint8_t>(out, has_graph() ? 1 : 0);
    io::PutUnsigned<uint32_t>(out, entry_);
    for (float v : vectors_) io::PutF32(out, v);
    for (const auto& id : ids_) io::PutString(out, id);
    if (has_graph()) {
      for (const auto& adj : graph_) {
        io::PutUnsigned<uint32_t>(out, static_cast<uint32_t>(adj.size()));
        for (uint32_t v : adj) io::PutUnsigned<uint32_t>(out, v);
      }
    }
  });
}

EmbeddingIndex EmbeddingIndex::Load(const std::string& path) {
  auto in = io::OpenForRead(path);
  try {
    io::ExpectMagic(in, kIndexMagic);
    if (io::GetUnsigned<uint32_t>(in) != kIndexVersion) {
      throw std::runtime_error("unsupported version");
    }
    const uint64_t n = io::GetUnsigned<uint64_t>(in);
    EmbeddingIndex index(static_cast<int>(io::GetUnsigned<uint32_t>(in)));
    if (io::GetUnsigned<uint32_t>(in) != kMetricUnitEuclidean) {
      throw std::runtime_error("unknown metric tag");
    }
    if (index.hidden_ < 1 || n > (uint64_t{1} << 32)) {
      throw std::runtime_error("bad header");
    }
    index.graph_params_.degree_bound =
        static_cast<int>(io::GetUnsigned<uint32_t>(in));
    index.graph_params_.build_beam =
        static_cast<int>(io::GetUnsigned<uint32_t>(in));
    index.graph_params_.prune_alpha = io::GetF64(in);
    index.graph_params_.seed = io::GetUnsigned<uint64_t>(in);
    const bool has_graph = io::GetUnsigned<uint8_t>(in) != 0;
    index.entry_ = io::GetUnsigned<uint32_t>(in);
    index.vectors_.resize(n * index.hidden_);
    for (float& v : index.vectors_) v = io::GetF32(in);
    std::unordered_set<std::string> seen;
    for (uint64_t i = 0; i < n; ++i) {
      index.ids_.push_back(io::GetString(in));
      if (!seen.insert(index.ids_.back()).second) {
        throw std::runtime_error("duplicate id " + index.ids_.back());
      }
      if (std::abs(NormOf(index.vector(i)) - 1.0) > kUnitTolerance) {
        throw std::runtime_error("stored vector is not unit norm");
      }
    }
    if (has_graph) {
      index.graph_.resize(n);
      for (auto& adj : index.graph_) {
        const uint32_t deg = io::GetUnsigned<uint32_t>(in);
        if (deg > n) throw std::runtime_error("bad adjacency list");
        adj.resize(deg);
        for (uint32_t& v : adj) {
          v = io::GetUnsigned<uint32_t>(in);
          if (v >= n) throw std::runtime_error("bad adjacency entry");
        }
      }
      if (index.entry_ >= n) throw std::runtime_error("bad entry point");
    }
    return index;
  } catch (const std::exception& e) {
    throw std::runtime_error("index " + path + ": " + e.what());
  }
}

}  // namespace twinrank

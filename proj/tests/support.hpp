#pragma once

// Fixtures and brute-force oracles shared by the test files.

#include "gpnn/gnn.hpp"
#include "gpnn/graph.hpp"
#include "gpnn/partition.hpp"
#include "gpnn/rng.hpp"
#include "gpnn/schedule.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace gpnn::test {

inline Graph undirected(int n, const std::vector<std::pair<int, int>>& pairs, int types = 1) {
  std::vector<Edge> edges;
  for (const auto& [u, v] : pairs) {
    edges.push_back({u, v, 0});
  }
  return bidirect(Graph(n, types, std::move(edges)));
}

inline Graph chain(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i + 1 < n; ++i) {
    pairs.emplace_back(i, i + 1);
  }
  return undirected(n, pairs);
}

inline void clique_pairs(int n, int offset, std::vector<std::pair<int, int>>& pairs) {
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      pairs.emplace_back(offset + i, offset + j);
    }
  }
}

/// Two 4-cliques {0..3} and {4..7} joined by the bridge 3-4.
inline Graph barbell() {
  std::vector<std::pair<int, int>> pairs;
  clique_pairs(4, 0, pairs);
  clique_pairs(4, 4, pairs);
  pairs.emplace_back(3, 4);
  return undirected(8, pairs);
}

/// Random directed multigraph with `types` edge types; may be disconnected.
inline Graph random_graph(Rng& rng, int n, int m, int types = 1, bool symmetric = false) {
  std::vector<Edge> edges;
  for (int i = 0; i < m; ++i) {
    const int u = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    const int v = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    edges.push_back({u, v, static_cast<int>(rng.index(static_cast<std::size_t>(types)))});
  }
  Graph g(n, types, std::move(edges));
  return symmetric ? bidirect(g) : g;
}

inline constexpr int kUnreachable = std::numeric_limits<int>::max() / 4;

/// Floyd-Warshall hop distances.
inline std::vector<std::vector<int>> all_pairs_hops(const Graph& g) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kUnreachable));
  for (std::size_t v = 0; v < n; ++v) {
    d[v][v] = 0;
  }
  for (const Edge& e : g.edges()) {
    if (e.src != e.dst) {
      d[static_cast<std::size_t>(e.src)][static_cast<std::size_t>(e.dst)] = 1;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
      }
    }
  }
  return d;
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
  explicit ScratchDir(const std::string& name) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gpnn-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

  void write(const std::string& leaf, const std::string& text) const {
    std::ofstream(path_ / leaf, std::ios::binary) << text;
  }

private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> contents for every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files[std::filesystem::relative(entry.path(), root).generic_string()] = slurp(entry.path());
    }
  }
  return files;
}

// Exhaustive minimum normalized cut over all bipartitions (n <= ~20) of the
// symmetrized graph. Node 0 is always on side 0.
inline std::vector<int> min_normalized_cut(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<std::vector<double>> w(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (const Edge& e : g.edges()) {
    w[static_cast<std::size_t>(e.src)][static_cast<std::size_t>(e.dst)] += 1.0;
    w[static_cast<std::size_t>(e.dst)][static_cast<std::size_t>(e.src)] += 1.0;
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_side;
  for (unsigned mask = 1; mask < (1U << (n - 1)); ++mask) {
    std::vector<int> side(static_cast<std::size_t>(n), 0);
    for (int v = 1; v < n; ++v) {
      side[static_cast<std::size_t>(v)] = static_cast<int>((mask >> (v - 1)) & 1U);
    }
    double cut = 0.0;
    double vol[2] = {0.0, 0.0};
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        const double x = w[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
        vol[side[static_cast<std::size_t>(u)]] += x;
        if (side[static_cast<std::size_t>(u)] == 0 && side[static_cast<std::size_t>(v)] == 1) {
          cut += x;
        }
      }
    }
    if (vol[0] == 0.0 || vol[1] == 0.0) {
      continue;
    }
    const double ncut = cut / vol[0] + cut / vol[1];
    if (ncut < best - 1e-12) {
      best = ncut;
      best_side = side;
    }
  }
  return best_side;
}

// Flood fill replay. Takes the random choices recorded in a trace (seeds and
// per-round queue orders) and re-runs the growth rule from scratch: every
// round, each nonempty queue in the given order pops one node and claims its
// unvisited out-neighbors in edge-id order.
struct FloodFillReplay {
  std::vector<int> assignment;
  std::vector<FloodFillStep> steps;
  std::vector<NodeId> leftovers;
  int leftover_subgraph = -1;
  int rounds = 0;
};

inline FloodFillReplay replay_flood_fill(const Graph& g, const std::vector<NodeId>& seeds,
                                         const std::vector<std::vector<int>>& round_orders) {
  const int n = g.num_nodes();
  const int k_count = static_cast<int>(seeds.size());
  std::vector<std::vector<NodeId>> successors(static_cast<std::size_t>(n));
  for (const Edge& e : g.edges()) {
    successors[static_cast<std::size_t>(e.src)].push_back(e.dst);
  }
  FloodFillReplay out;
  out.assignment.assign(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<NodeId>> queue(static_cast<std::size_t>(k_count));
  std::vector<std::size_t> head(static_cast<std::size_t>(k_count), 0);
  for (int k = 0; k < k_count; ++k) {
    queue[static_cast<std::size_t>(k)].push_back(seeds[static_cast<std::size_t>(k)]);
    out.assignment[static_cast<std::size_t>(seeds[static_cast<std::size_t>(k)])] = k;
  }
  auto pending = [&](int k) {
    return head[static_cast<std::size_t>(k)] < queue[static_cast<std::size_t>(k)].size();
  };
  for (const auto& order : round_orders) {
    bool any = false;
    for (int k = 0; k < k_count; ++k) {
      any = any || pending(k);
    }
    if (!any) {
      break;
    }
    for (const int k : order) {
      if (!pending(k)) {
        continue;
      }
      const NodeId u = queue[static_cast<std::size_t>(k)][head[static_cast<std::size_t>(k)]++];
      FloodFillStep step{out.rounds, k, u, {}};
      for (const NodeId v : successors[static_cast<std::size_t>(u)]) {
        if (out.assignment[static_cast<std::size_t>(v)] < 0) {
          out.assignment[static_cast<std::size_t>(v)] = k;
          queue[static_cast<std::size_t>(k)].push_back(v);
          step.claimed.push_back(v);
        }
      }
      out.steps.push_back(std::move(step));
    }
    ++out.rounds;
  }
  std::vector<int> sizes(static_cast<std::size_t>(k_count), 0);
  for (const int a : out.assignment) {
    if (a >= 0) {
      ++sizes[static_cast<std::size_t>(a)];
    }
  }
  int smallest = 0;
  for (int k = 1; k < k_count; ++k) {
    if (sizes[static_cast<std::size_t>(k)] < sizes[static_cast<std::size_t>(smallest)]) {
      smallest = k;
    }
  }
  for (int v = 0; v < n; ++v) {
    if (out.assignment[static_cast<std::size_t>(v)] < 0) {
      out.assignment[static_cast<std::size_t>(v)] = smallest;
      out.leftovers.push_back(v);
      out.leftover_subgraph = smallest;
    }
  }
  return out;
}

// Empty when the partition matches the replay of its own trace, otherwise the
// first disagreement.
inline std::string compare_with_replay(const Graph& g, const std::vector<NodeId>& labeled,
                                       const Partition& p, const FloodFillTrace& trace) {
  const auto k_count = static_cast<std::size_t>(p.num_subgraphs);
  if (trace.seeds.size() != k_count) {
    return "seed count";
  }
  std::vector<NodeId> sorted_seeds = trace.seeds;
  std::sort(sorted_seeds.begin(), sorted_seeds.end());
  if (std::adjacent_find(sorted_seeds.begin(), sorted_seeds.end()) != sorted_seeds.end()) {
    return "repeated seed";
  }
  for (const NodeId s : trace.seeds) {
    if (std::find(labeled.begin(), labeled.end(), s) == labeled.end()) {
      return "seed " + std::to_string(s) + " is not labeled";
    }
  }
  for (const auto& order : trace.round_orders) {
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != k_count || sorted[i] != static_cast<int>(i)) {
        return "round order is not a permutation";
      }
    }
  }
  const FloodFillReplay replay = replay_flood_fill(g, trace.seeds, trace.round_orders);
  if (replay.rounds != static_cast<int>(trace.round_orders.size())) {
    return "round count " + std::to_string(trace.round_orders.size()) + " vs " +
           std::to_string(replay.rounds);
  }
  if (replay.steps.size() != trace.steps.size()) {
    return "step count";
  }
  for (std::size_t i = 0; i < replay.steps.size(); ++i) {
    if (!(replay.steps[i] == trace.steps[i])) {
      return "step " + std::to_string(i) + " differs";
    }
  }
  if (replay.leftovers != trace.leftovers || replay.leftover_subgraph != trace.leftover_subgraph) {
    return "leftovers";
  }
  if (replay.assignment != p.assignment) {
    return "assignment";
  }
  return {};
}

// Gradient-check fixtures.
// Six nodes, two edge types: a bidirected type-0 chain plus directed type-1 chords.
inline Graph two_type_graph() {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < 6; ++i) {
    edges.push_back({i, i + 1, 0});
    edges.push_back({i + 1, i, 0});
  }
  edges.push_back({0, 3, 1});
  edges.push_back({5, 2, 1});
  edges.push_back({4, 1, 1});
  edges.push_back({2, 5, 1});
  return Graph(6, 2, std::move(edges));
}

inline SparseMatrix random_features(Rng& rng, int n, int f) {
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < f; ++j) {
      if (rng.uniform() < 0.7) {
        rows[static_cast<std::size_t>(v)].emplace_back(j, rng.uniform(-1.0, 1.0));
      }
    }
  }
  return SparseMatrix::from_rows(f, std::move(rows));
}

// Every tensor filled with U(-scale, scale), biases included.
inline ModelParams random_params(const ModelConfig& c, Rng& rng, double scale = 0.6) {
  ModelParams p = ModelParams::zeros(c);
  for (auto& t : p.tensors()) {
    for (double& x : t.value->data) {
      x = rng.uniform(-scale, scale);
    }
  }
  return p;
}

inline double full_loss(const PropagationPlan& plan, const ModelParams& p, const Batch& b) {
  const ForwardTape tape = forward(plan, p, b.features, false);
  return readout_loss(tape.final_states, tape.initial, b.features, b.labels, b.mask, p, b.weight_decay).loss;
}

// Largest |analytic - numeric| over a tensor, relative to the largest numeric entry.
inline double worst_group_error(const PropagationPlan& plan, const ModelParams& params, const Batch& batch,
                         std::string* worst_name = nullptr) {
  const LossAndGradients lg = loss_and_gradients(plan, params, batch);
  const auto analytic = lg.gradients.tensors();
  ModelParams probe = params;
  auto values = probe.tensors();
  const double eps = 1e-4;
  double worst = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    double diff = 0.0;
    double scale = 1e-8;
    auto& data = values[t].value->data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double up = full_loss(plan, probe, batch);
      data[i] = saved - eps;
      const double down = full_loss(plan, probe, batch);
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      diff = std::max(diff, std::abs(numeric - analytic[t].value->data[i]));
      scale = std::max(scale, std::abs(numeric));
    }
    const double err = diff / scale;
    if (err > worst) {
      worst = err;
      if (worst_name != nullptr) {
        *worst_name = values[t].name;
      }
    }
  }
  return worst;
}

inline Schedule schedule_of_kind(const Graph& g, ScheduleKind kind) {
  switch (kind) {
  case ScheduleKind::synchronous:
    return synchronous_schedule(g, 2);
  case ScheduleKind::gpnn: {
    Partition p;
    p.assignment = {0, 0, 0, 1, 1, 1};
    p.num_subgraphs = 2;
    return gpnn_schedule(g, p, 2, 2, 1);
  }
  case ScheduleKind::sequential:
    return sequential_schedule(g, 0, 1);
  case ScheduleKind::mst:
    return mst_schedule(g, 2, 9);
  case ScheduleKind::random:
    return random_phase_schedule(g, 3, 4);
  }
  return {};
}

struct GradCase {
  ModelConfig config;
  SparseMatrix features;
  std::vector<int> labels{0, 1, 2, 0, 1, 2};
  std::vector<NodeId> mask{0, 2, 3, 5};
};

inline GradCase grad_case(Rng& rng) {
  GradCase gc;
  gc.config.num_nodes = 6;
  gc.config.state_dim = 3;
  gc.config.num_edge_types = 2;
  gc.config.feature_dim = 4;
  gc.config.num_classes = 3;
  gc.features = random_features(rng, 6, 4);
  return gc;
}

} // namespace gpnn::test

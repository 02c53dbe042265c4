#include "gpnn/broadcast.hpp"

#include "gpnn/error.hpp"
#include "gpnn/parallel.hpp"
#include "gpnn/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <json.hpp>
#include <limits>

namespace gpnn {

bool BroadcastState::knows(NodeId v, NodeId token) const {
  const auto row = static_cast<std::size_t>(v) * static_cast<std::size_t>(words_per_node);
  return (known[row + static_cast<std::size_t>(token) / 64] >> (token % 64)) & 1U;
}

int BroadcastState::known_count(NodeId v) const {
  const auto row = static_cast<std::size_t>(v) * static_cast<std::size_t>(words_per_node);
  int count = 0;
  for (std::size_t w = 0; w < static_cast<std::size_t>(words_per_node); ++w) {
    count += std::popcount(known[row + w]);
  }
  return count;
}

BroadcastSimulator::BroadcastSimulator(const Graph& graph) : graph_(&graph) {
  const int n = graph.num_nodes();
  const auto nn = static_cast<std::size_t>(n);
  state_.num_nodes = n;
  state_.words_per_node = (n + 63) / 64;
  const auto words = static_cast<std::size_t>(state_.words_per_node);
  state_.known.assign(nn * words, 0);
  target_.assign(nn * words, 0);
  for (std::size_t v = 0; v < nn; ++v) {
    state_.known[v * words + v / 64] |= std::uint64_t{1} << (v % 64);
  }

  // Tokens that can reach v: BFS over reversed edges from v.
  std::vector<int> mark(nn, -1);
  std::vector<NodeId> queue;
  for (NodeId v = 0; v < n; ++v) {
    queue.assign(1, v);
    mark[static_cast<std::size_t>(v)] = v;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (const EdgeId e : graph.in_edges(queue[head])) {
        const NodeId u = graph.edge(e).src;
        if (mark[static_cast<std::size_t>(u)] != v) {
          mark[static_cast<std::size_t>(u)] = v;
          queue.push_back(u);
        }
      }
    }
    for (const NodeId u : queue) {
      target_[static_cast<std::size_t>(v) * words + static_cast<std::size_t>(u) / 64] |=
          std::uint64_t{1} << (u % 64);
    }
  }

  saturated_.assign(nn, 0);
  unsaturated_ = n;
  incomplete_ = n;
  for (NodeId v = 0; v < n; ++v) {
    refresh(v);
  }
  state_.solved = unsaturated_ == 0;
  state_.complete = incomplete_ == 0;
}

void BroadcastSimulator::refresh(NodeId v) {
  const auto words = static_cast<std::size_t>(state_.words_per_node);
  const auto row = static_cast<std::size_t>(v) * words;
  if (!saturated_[static_cast<std::size_t>(v)] &&
      std::equal(state_.known.begin() + static_cast<std::ptrdiff_t>(row),
                 state_.known.begin() + static_cast<std::ptrdiff_t>(row + words),
                 target_.begin() + static_cast<std::ptrdiff_t>(row))) {
    saturated_[static_cast<std::size_t>(v)] = 1;
    --unsaturated_;
    if (known_all(v)) {
      --incomplete_;
    }
  }
}

bool BroadcastSimulator::known_all(NodeId v) const {
  return state_.known_count(v) == state_.num_nodes;
}

void BroadcastSimulator::run(const Schedule& schedule, bool stop_when_solved) {
  schedule.check_compatible(*graph_);
  if (stop_when_solved && state_.solved) {
    return;
  }
  const auto words = static_cast<std::size_t>(state_.words_per_node);
  std::vector<std::uint64_t> snapshot;
  for (const Phase& phase : schedule.phases) {
    snapshot = state_.known;
    for (const EdgeId e : phase.edges) {
      const Edge& edge = graph_->edge(e);
      const auto src = static_cast<std::size_t>(edge.src) * words;
      const auto dst = static_cast<std::size_t>(edge.dst) * words;
      for (std::size_t w = 0; w < words; ++w) {
        state_.known[dst + w] |= snapshot[src + w];
      }
    }
    for (const EdgeId e : phase.edges) {
      refresh(graph_->edge(e).dst);
    }
    state_.messages_sent += static_cast<long long>(phase.edges.size());
    ++state_.phases_executed;
    state_.solved = unsaturated_ == 0;
    state_.complete = incomplete_ == 0;
    if (stop_when_solved && state_.solved) {
      break;
    }
  }
}

BroadcastState simulate_broadcast(const Graph& graph, const Schedule& schedule,
                                  bool stop_when_solved) {
  BroadcastSimulator sim(graph);
  sim.run(schedule, stop_when_solved);
  return sim.state();
}

ChainFormulaReport chain_formulas(long long n, long long k) {
  if (n < 1 || k < 1 || k > n) {
    throw Error("chain formulas: need 1 <= K <= N, got N=" + std::to_string(n) +
                " K=" + std::to_string(k));
  }
  auto gpnn = [n](long long kk) { return 2 * ((n - kk) * (n - kk) + (kk - 1) * (kk - 1)); };
  ChainFormulaReport r;
  r.n = n;
  r.k = k;
  r.sync_messages = 2 * (n - 1) * (n - 1);
  r.gpnn_messages = gpnn(k);
  r.optimal_k = static_cast<double>(n + 1) / 2.0;
  r.even_partition = n % k == 0;
  r.min_gpnn_messages = std::numeric_limits<long long>::max();
  for (long long kk = 1; kk <= n; ++kk) {
    const long long m = gpnn(kk);
    if (m < r.min_gpnn_messages) {
      r.min_gpnn_messages = m;
      r.argmin_k.assign(1, kk);
    } else if (m == r.min_gpnn_messages) {
      r.argmin_k.push_back(kk);
    }
  }
  return r;
}

Graph make_chain(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) {
    edges.push_back(Edge{i, i + 1, 0});
    edges.push_back(Edge{i + 1, i, 0});
  }
  return Graph(n, 1, std::move(edges));
}

Partition contiguous_partition(int n, int k) {
  if (k < 1 || k > std::max(n, 1)) {
    throw Error("contiguous partition: need 1 <= K <= N");
  }
  Partition p;
  p.num_subgraphs = k;
  p.method = PartitionMethod::manual;
  p.assignment.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    p.assignment[static_cast<std::size_t>(v)] =
        static_cast<int>(static_cast<long long>(v) * k / std::max(n, 1));
  }
  return p;
}

std::string to_string(GraphFamily family) {
  switch (family) {
  case GraphFamily::chain:
    return "chain";
  case GraphFamily::cycle:
    return "cycle";
  case GraphFamily::grid:
    return "grid";
  case GraphFamily::sbm:
    return "sbm";
  }
  return "chain";
}

GraphFamily parse_graph_family(std::string_view name) {
  if (name == "chain") {
    return GraphFamily::chain;
  }
  if (name == "cycle") {
    return GraphFamily::cycle;
  }
  if (name == "grid") {
    return GraphFamily::grid;
  }
  if (name == "sbm") {
    return GraphFamily::sbm;
  }
  throw Error("unknown graph family '" + std::string(name) + "'");
}

Graph make_family_graph(GraphFamily family, int n, double p_in, double p_out, std::uint64_t seed) {
  if (n < 1) {
    throw Error("graph family: size must be positive");
  }
  std::vector<Edge> undirected;
  switch (family) {
  case GraphFamily::chain:
    return make_chain(n);
  case GraphFamily::cycle:
    for (int i = 0; i < n && n > 1; ++i) {
      if (n == 2 && i == 1) {
        break;
      }
      undirected.push_back(Edge{i, (i + 1) % n, 0});
    }
    break;
  case GraphFamily::grid: {
    int rows = static_cast<int>(std::sqrt(static_cast<double>(n)));
    while (rows > 1 && n % rows != 0) {
      --rows;
    }
    const int cols = n / rows;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const int v = r * cols + c;
        if (c + 1 < cols) {
          undirected.push_back(Edge{v, v + 1, 0});
        }
        if (r + 1 < rows) {
          undirected.push_back(Edge{v, v + cols, 0});
        }
      }
    }
    break;
  }
  case GraphFamily::sbm: {
    Rng rng(seed);
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        const bool same = (u * 2 / n) == (v * 2 / n);
        if (rng.uniform() < (same ? p_in : p_out)) {
          undirected.push_back(Edge{u, v, 0});
        }
      }
    }
    break;
  }
  }
  return bidirect(Graph(n, 1, std::move(undirected)));
}

namespace {

SweepRow sweep_one(const SweepOptions& options, int n, ScheduleKind kind) {
  const Graph graph = make_family_graph(options.family, n, options.p_in, options.p_out,
                                        derive_seed(options.seed, "sweep-graph"));
  SweepRow row;
  row.family = to_string(options.family);
  row.n = n;
  row.kind = to_string(kind);
  const int max_rounds = options.max_rounds > 0 ? options.max_rounds : n + 1;

  Partition partition;
  if (kind == ScheduleKind::gpnn) {
    int k = options.num_subgraphs;
    if (k <= 0) {
      k = options.family == GraphFamily::chain || options.family == GraphFamily::cycle
              ? std::max(1, n / 2)
              : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))));
    }
    k = std::min(k, n);
    if (options.family == GraphFamily::chain || options.family == GraphFamily::cycle) {
      partition = contiguous_partition(n, k);
    } else {
      std::vector<NodeId> all(static_cast<std::size_t>(n));
      for (int v = 0; v < n; ++v) {
        all[static_cast<std::size_t>(v)] = v;
      }
      partition = flood_fill_partition(graph, k, all, derive_seed(options.seed, "sweep-partition"));
    }
    row.k = k;
    row.intra_steps = std::max(1, partition_stats(graph, partition).max_diameter);
    row.inter_steps = 1;
  }
  Schedule mst;
  if (kind == ScheduleKind::mst) {
    mst = mst_schedule(graph, max_rounds, derive_seed(options.seed, "sweep-mst"));
  }

  BroadcastSimulator sim(graph);
  for (int round = 0; round < max_rounds && !sim.state().solved; ++round) {
    Schedule step;
    switch (kind) {
    case ScheduleKind::synchronous:
      step = synchronous_schedule(graph, 1);
      break;
    case ScheduleKind::gpnn:
      step = gpnn_schedule(graph, partition, 1, row.intra_steps, row.inter_steps);
      break;
    case ScheduleKind::sequential:
      step = sequential_schedule(graph, 0, 1);
      break;
    case ScheduleKind::mst: {
      step = mst;
      const std::string label = "mst-" + std::to_string(round);
      std::erase_if(step.phases, [&](const Phase& p) { return p.label != label; });
      break;
    }
    case ScheduleKind::random:
      step = random_phase_schedule(graph, std::max(1, n / 2),
                                   derive_seed(options.seed, "sweep-random-" + std::to_string(round)));
      break;
    }
    sim.run(step, true);
  }
  row.phases = sim.state().phases_executed;
  row.messages = sim.state().messages_sent;
  row.saturated = sim.state().solved;
  row.solved = sim.state().complete;
  return row;
}

} // namespace

std::vector<SweepRow> broadcast_sweep(const SweepOptions& options, int threads) {
  std::vector<SweepRow> rows(options.sizes.size() * options.kinds.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    rows[i] = sweep_one(options, options.sizes[i / options.kinds.size()],
                        options.kinds[i % options.kinds.size()]);
  });
  return rows;
}

std::string sweep_jsonl(const std::vector<SweepRow>& rows) {
  std::string out;
  for (const SweepRow& r : rows) {
    nlohmann::ordered_json j;
    j["family"] = r.family;
    j["N"] = r.n;
    j["kind"] = r.kind;
    j["K"] = r.k;
    j["T_S"] = r.intra_steps;
    j["T_C"] = r.inter_steps;
    j["phases"] = r.phases;
    j["messages"] = r.messages;
    j["solved"] = r.solved;
    j["saturated"] = r.saturated;
    out += j.dump() + "\n";
  }
  return out;
}

} // namespace gpnn

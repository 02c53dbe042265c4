#include "gpnn/schedule.hpp"

#include "gpnn/error.hpp"
#include "gpnn/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

namespace gpnn {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
  case ScheduleKind::synchronous:
    return "synchronous";
  case ScheduleKind::gpnn:
    return "gpnn";
  case ScheduleKind::sequential:
    return "sequential";
  case ScheduleKind::mst:
    return "mst";
  case ScheduleKind::random:
    return "random";
  }
  return "synchronous";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "synchronous" || name == "sync") {
    return ScheduleKind::synchronous;
  }
  if (name == "gpnn" || name == "partition") {
    return ScheduleKind::gpnn;
  }
  if (name == "sequential") {
    return ScheduleKind::sequential;
  }
  if (name == "mst") {
    return ScheduleKind::mst;
  }
  if (name == "random") {
    return ScheduleKind::random;
  }
  throw Error("unknown schedule kind '" + std::string(name) + "'");
}

void Schedule::check_compatible(const Graph& graph) const {
  if (num_nodes != graph.num_nodes() || num_edges != graph.num_edges()) {
    throw Error("schedule was built for a graph with " + std::to_string(num_nodes) + " nodes and " +
                std::to_string(num_edges) + " edges, got " + std::to_string(graph.num_nodes()) +
                " and " + std::to_string(graph.num_edges()));
  }
  for (std::size_t p = 0; p < phases.size(); ++p) {
    for (const EdgeId e : phases[p].edges) {
      if (e < 0 || e >= graph.num_edges()) {
        throw Error("schedule phase " + std::to_string(p) + " references edge " +
                    std::to_string(e) + " outside the graph");
      }
    }
  }
}

long long message_count(const Schedule& schedule) {
  long long total = 0;
  for (const Phase& phase : schedule.phases) {
    total += static_cast<long long>(phase.edges.size());
  }
  return total;
}

namespace {

Schedule empty_schedule(const Graph& graph, ScheduleKind kind) {
  Schedule s;
  s.kind = kind;
  s.num_nodes = graph.num_nodes();
  s.num_edges = graph.num_edges();
  return s;
}

void push_phase(Schedule& schedule, std::vector<EdgeId> edges, std::string label) {
  if (!edges.empty()) {
    schedule.phases.push_back(Phase{std::move(edges), std::move(label)});
  }
}

std::vector<EdgeId> all_edges(const Graph& graph) {
  std::vector<EdgeId> ids(static_cast<std::size_t>(graph.num_edges()));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

class DisjointSet {
public:
  explicit DisjointSet(int n) : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return false;
    }
    if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) {
      std::swap(a, b);
    }
    parent_[static_cast<std::size_t>(b)] = a;
    size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
    return true;
  }

private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

// Per-DAG level phases. `rank` orders nodes; `forward` selects which
// direction of rank the DAG follows.
std::vector<std::vector<EdgeId>> dag_level_phases(const Graph& graph, const std::vector<int>& rank,
                                                  const std::vector<NodeId>& order, bool forward) {
  const auto n = static_cast<std::size_t>(graph.num_nodes());
  auto in_dag = [&](const Edge& e) {
    const int ru = rank[static_cast<std::size_t>(e.src)];
    const int rv = rank[static_cast<std::size_t>(e.dst)];
    return forward ? ru < rv : ru > rv;
  };
  std::vector<int> level(n, 0);
  auto visit = [&](NodeId v) {
    int lv = 0;
    for (const EdgeId e : graph.in_edges(v)) {
      const Edge& edge = graph.edge(e);
      if (in_dag(edge)) {
        lv = std::max(lv, level[static_cast<std::size_t>(edge.src)] + 1);
      }
    }
    level[static_cast<std::size_t>(v)] = lv;
  };
  if (forward) {
    std::ranges::for_each(order, visit);
  } else {
    std::for_each(order.rbegin(), order.rend(), visit);
  }
  std::vector<std::vector<EdgeId>> phases;
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    const Edge& edge = graph.edge(e);
    if (!in_dag(edge)) {
      continue;
    }
    const auto p = static_cast<std::size_t>(level[static_cast<std::size_t>(edge.src)]);
    if (phases.size() <= p) {
      phases.resize(p + 1);
    }
    phases[p].push_back(e);
  }
  return phases;
}

} // namespace

Schedule synchronous_schedule(const Graph& graph, int steps) {
  if (steps < 1) {
    throw Error("synchronous schedule: steps must be positive");
  }
  Schedule s = empty_schedule(graph, ScheduleKind::synchronous);
  s.params.steps = steps;
  const std::vector<EdgeId> edges = all_edges(graph);
  for (int t = 0; t < steps; ++t) {
    push_phase(s, edges, "sync");
  }
  return s;
}

Schedule gpnn_schedule(const Graph& graph, const Partition& partition, int steps,
                       int intra_steps, int inter_steps, bool drop_final_inter) {
  if (partition.assignment.size() != static_cast<std::size_t>(graph.num_nodes())) {
    throw Error("gpnn schedule: partition was built for a different graph (" +
                std::to_string(partition.assignment.size()) + " nodes vs " +
                std::to_string(graph.num_nodes()) + ")");
  }
  if (steps < 1 || intra_steps < 0 || inter_steps < 0) {
    throw Error("gpnn schedule: need T >= 1 and T_S, T_C >= 0");
  }
  const PartitionView view = partition.view(graph);
  std::vector<EdgeId> intra;
  for (const auto& sub : view.subgraphs) {
    intra.insert(intra.end(), sub.begin(), sub.end());
  }
  std::sort(intra.begin(), intra.end());

  Schedule s = empty_schedule(graph, ScheduleKind::gpnn);
  s.params = ScheduleParams{steps, intra_steps, inter_steps, partition.num_subgraphs, 0,
                            drop_final_inter};
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < intra_steps; ++i) {
      push_phase(s, intra, "intra");
    }
    const bool last = t + 1 == steps;
    if (last && drop_final_inter) {
      continue;
    }
    for (int i = 0; i < inter_steps; ++i) {
      push_phase(s, view.cut, "inter");
    }
  }
  return s;
}

Schedule sequential_schedule(const Graph& graph, NodeId root, int steps) {
  const int n = graph.num_nodes();
  if (n > 0 && (root < 0 || root >= n)) {
    throw Error("sequential schedule: root " + std::to_string(root) + " out of range");
  }
  if (steps < 1) {
    throw Error("sequential schedule: steps must be positive");
  }
  Schedule s = empty_schedule(graph, ScheduleKind::sequential);
  s.params.steps = steps;
  s.params.root = root;
  if (n == 0) {
    return s;
  }

  std::vector<int> rank(static_cast<std::size_t>(n), -1);
  std::vector<NodeId> order;
  std::vector<NodeId> frontier{root};
  rank[static_cast<std::size_t>(root)] = 0;
  while (!frontier.empty()) {
    order.insert(order.end(), frontier.begin(), frontier.end());
    std::vector<NodeId> next;
    for (const NodeId u : frontier) {
      for (const EdgeId e : graph.out_edges(u)) {
        const NodeId v = graph.edge(e).dst;
        if (rank[static_cast<std::size_t>(v)] < 0) {
          rank[static_cast<std::size_t>(v)] = 0;
          next.push_back(v);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }
  for (NodeId v = 0; v < n; ++v) {
    if (rank[static_cast<std::size_t>(v)] < 0) {
      order.push_back(v);
    }
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    rank[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  }

  const auto fwd = dag_level_phases(graph, rank, order, true);
  const auto bwd = dag_level_phases(graph, rank, order, false);
  for (int t = 0; t < steps; ++t) {
    for (const auto& p : fwd) {
      push_phase(s, p, "dag-fwd");
    }
    for (const auto& p : bwd) {
      push_phase(s, p, "dag-bwd");
    }
  }
  return s;
}

Schedule mst_schedule(const Graph& graph, int num_trees, std::uint64_t seed) {
  if (num_trees < 1) {
    throw Error("mst schedule: number of trees must be positive");
  }
  Schedule s = empty_schedule(graph, ScheduleKind::mst);
  s.params.steps = num_trees;
  const int n = graph.num_nodes();

  // Undirected support: one entry per unordered node pair, self-loops excluded.
  struct Pair {
    NodeId a, b;
  };
  std::vector<Pair> pairs;
  std::map<std::pair<NodeId, NodeId>, EdgeId> directed; // lowest edge id per (src, dst)
  {
    std::map<std::pair<NodeId, NodeId>, int> seen;
    for (EdgeId e = 0; e < graph.num_edges(); ++e) {
      const Edge& edge = graph.edge(e);
      if (edge.src == edge.dst) {
        continue;
      }
      directed.try_emplace({edge.src, edge.dst}, e);
      const auto key = std::minmax(edge.src, edge.dst);
      if (seen.try_emplace({key.first, key.second}, static_cast<int>(pairs.size())).second) {
        pairs.push_back(Pair{key.first, key.second});
      }
    }
  }

  Rng rng(seed);
  std::vector<double> weight(pairs.size());
  for (double& w : weight) {
    do {
      w = rng.uniform();
    } while (w == 0.0);
  }

  std::vector<std::size_t> by_weight(pairs.size());
  for (int tree = 0; tree < num_trees; ++tree) {
    std::iota(by_weight.begin(), by_weight.end(), 0);
    std::sort(by_weight.begin(), by_weight.end(), [&](std::size_t x, std::size_t y) {
      return weight[x] != weight[y] ? weight[x] < weight[y] : x < y;
    });
    DisjointSet forest(n);
    std::vector<std::vector<NodeId>> adjacency(static_cast<std::size_t>(n));
    for (const std::size_t i : by_weight) {
      if (forest.unite(pairs[i].a, pairs[i].b)) {
        weight[i] += 1.0;
        adjacency[static_cast<std::size_t>(pairs[i].a)].push_back(pairs[i].b);
        adjacency[static_cast<std::size_t>(pairs[i].b)].push_back(pairs[i].a);
      }
    }
    for (auto& adj : adjacency) {
      std::sort(adj.begin(), adj.end());
    }

    // Root each component at its lowest id; one phase per depth.
    std::vector<int> depth(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<EdgeId>> levels;
    for (NodeId root = 0; root < n; ++root) {
      if (depth[static_cast<std::size_t>(root)] >= 0) {
        continue;
      }
      depth[static_cast<std::size_t>(root)] = 0;
      std::vector<NodeId> queue{root};
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const NodeId u = queue[head];
        const int du = depth[static_cast<std::size_t>(u)];
        for (const NodeId v : adjacency[static_cast<std::size_t>(u)]) {
          if (depth[static_cast<std::size_t>(v)] >= 0) {
            continue;
          }
          depth[static_cast<std::size_t>(v)] = du + 1;
          queue.push_back(v);
          const auto it = directed.find({u, v});
          if (it == directed.end()) {
            continue; // no edge in the away-from-root direction
          }
          if (levels.size() <= static_cast<std::size_t>(du)) {
            levels.resize(static_cast<std::size_t>(du) + 1);
          }
          levels[static_cast<std::size_t>(du)].push_back(it->second);
        }
      }
    }
    for (auto& level : levels) {
      std::sort(level.begin(), level.end());
      push_phase(s, std::move(level), "mst-" + std::to_string(tree));
    }
  }
  return s;
}

Schedule random_phase_schedule(const Graph& graph, int k, std::uint64_t seed) {
  Schedule s = empty_schedule(graph, ScheduleKind::random);
  s.params.steps = k;
  for (auto& chunk : random_edge_phases(graph, k, seed)) {
    push_phase(s, std::move(chunk), "random-chunk");
  }
  return s;
}

std::string format_schedule(const Schedule& schedule) {
  std::string out = "# kind=" + to_string(schedule.kind) + " nodes=" +
                    std::to_string(schedule.num_nodes) + " edges=" +
                    std::to_string(schedule.num_edges) + "\n";
  for (std::size_t p = 0; p < schedule.phases.size(); ++p) {
    const Phase& phase = schedule.phases[p];
    out += std::to_string(p) + '\t' + phase.label + '\t';
    for (std::size_t i = 0; i < phase.edges.size(); ++i) {
      if (i > 0) {
        out += ',';
      }
      out += std::to_string(phase.edges[i]);
    }
    out += '\n';
  }
  return out;
}

Schedule parse_schedule(std::string_view text, const Graph& graph) {
  Schedule s = empty_schedule(graph, ScheduleKind::synchronous);
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      const auto pos = line.find("kind=");
      if (pos != std::string::npos) {
        const auto end = line.find(' ', pos);
        s.kind = parse_schedule_kind(line.substr(pos + 5, end == std::string::npos ? end : end - pos - 5));
      }
      continue;
    }
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw ParseError("malformed schedule record at line " + std::to_string(line_no));
    }
    Phase phase;
    phase.label = line.substr(tab1 + 1, tab2 - tab1 - 1);
    std::istringstream ids(line.substr(tab2 + 1));
    std::string token;
    while (std::getline(ids, token, ',')) {
      try {
        std::size_t used = 0;
        const int e = std::stoi(token, &used);
        if (used != token.size() || e < 0 || e >= graph.num_edges()) {
          throw ParseError("");
        }
        phase.edges.push_back(e);
      } catch (const std::exception&) {
        throw ParseError("bad edge id '" + token + "' at line " + std::to_string(line_no));
      }
    }
    s.phases.push_back(std::move(phase));
  }
  return s;
}

} // namespace gpnn

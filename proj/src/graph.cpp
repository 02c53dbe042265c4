#include "gpnn/graph.hpp"

#include "gpnn/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace gpnn {

namespace {

void build_csr(int num_nodes, std::span<const Edge> edges, bool by_src,
               std::vector<int>& offsets, std::vector<EdgeId>& ids) {
  offsets.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  for (const Edge& e : edges) {
    ++offsets[static_cast<std::size_t>(by_src ? e.src : e.dst) + 1];
  }
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    offsets[i] += offsets[i - 1];
  }
  ids.assign(edges.size(), 0);
  std::vector<int> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const NodeId v = by_src ? edges[i].src : edges[i].dst;
    ids[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = static_cast<EdgeId>(i);
  }
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
      ++i;
    }
    if (i > start) {
      fields.push_back(line.substr(start, i - start));
    }
  }
  return fields;
}

bool parse_int(std::string_view s, long long& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

struct RawEdge {
  long long src, dst, type;
  int line;
};

} // namespace

Graph::Graph(int num_nodes, int num_edge_types, std::vector<Edge> edges)
    : num_nodes_(num_nodes), num_edge_types_(num_edge_types), edges_(std::move(edges)) {
  if (num_nodes < 0) {
    throw Error("graph: negative node count");
  }
  if (num_edge_types < 1) {
    throw Error("graph: at least one edge type is required");
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes) {
      throw Error("graph: edge " + std::to_string(i) + " has an endpoint out of range");
    }
    if (e.type < 0 || e.type >= num_edge_types) {
      throw Error("graph: edge " + std::to_string(i) + " has edge type out of range");
    }
  }
  build_csr(num_nodes_, edges_, true, out_offsets_, out_ids_);
  build_csr(num_nodes_, edges_, false, in_offsets_, in_ids_);
}

std::span<const EdgeId> Graph::out_edges(NodeId v) const {
  const auto i = static_cast<std::size_t>(v);
  return std::span<const EdgeId>(out_ids_).subspan(
      static_cast<std::size_t>(out_offsets_[i]),
      static_cast<std::size_t>(out_offsets_[i + 1] - out_offsets_[i]));
}

std::span<const EdgeId> Graph::in_edges(NodeId v) const {
  const auto i = static_cast<std::size_t>(v);
  return std::span<const EdgeId>(in_ids_).subspan(
      static_cast<std::size_t>(in_offsets_[i]),
      static_cast<std::size_t>(in_offsets_[i + 1] - in_offsets_[i]));
}

std::vector<NodeId> Graph::out_neighbors(NodeId v) const {
  std::vector<NodeId> result;
  for (const EdgeId e : out_edges(v)) {
    result.push_back(edge(e).dst);
  }
  return result;
}

std::vector<NodeId> Graph::in_neighbors(NodeId v) const {
  std::vector<NodeId> result;
  for (const EdgeId e : in_edges(v)) {
    result.push_back(edge(e).src);
  }
  return result;
}

Graph parse_edge_list(std::string_view text, std::optional<int> num_nodes,
                      std::optional<int> num_edge_types) {
  std::optional<long long> header_nodes;
  std::optional<long long> header_types;
  std::vector<RawEdge> raw;
  bool seen_record = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#') {
      continue;
    }
    if (!seen_record && fields.front().starts_with("nodes=")) {
      for (const auto f : fields) {
        long long value = 0;
        if (f.starts_with("nodes=") && parse_int(f.substr(6), value) && value >= 0) {
          header_nodes = value;
        } else if (f.starts_with("types=") && parse_int(f.substr(6), value) && value >= 1) {
          header_types = value;
        } else {
          throw ParseError("malformed header at line " + std::to_string(line_no));
        }
      }
      seen_record = true;
      continue;
    }
    seen_record = true;
    RawEdge r{0, 0, 0, line_no};
    if (fields.size() < 2 || fields.size() > 3 || !parse_int(fields[0], r.src) ||
        !parse_int(fields[1], r.dst) || (fields.size() == 3 && !parse_int(fields[2], r.type))) {
      throw ParseError("malformed edge record at line " + std::to_string(line_no));
    }
    raw.push_back(r);
  }

  long long n = num_nodes ? *num_nodes : header_nodes.value_or(-1);
  long long c = num_edge_types ? *num_edge_types : header_types.value_or(-1);
  if (n < 0) {
    n = 0;
    for (const RawEdge& r : raw) {
      n = std::max({n, r.src + 1, r.dst + 1});
    }
  }
  if (c < 0) {
    c = 1;
    for (const RawEdge& r : raw) {
      c = std::max(c, r.type + 1);
    }
  }

  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const RawEdge& r : raw) {
    for (const long long id : {r.src, r.dst}) {
      if (id < 0 || id >= n) {
        throw ParseError("node id " + std::to_string(id) + " out of range at line " +
                         std::to_string(r.line));
      }
    }
    if (r.type < 0 || r.type >= c) {
      throw ParseError("edge type " + std::to_string(r.type) + " out of range at line " +
                       std::to_string(r.line));
    }
    edges.push_back(Edge{static_cast<NodeId>(r.src), static_cast<NodeId>(r.dst),
                         static_cast<EdgeType>(r.type)});
  }
  return Graph(static_cast<int>(n), static_cast<int>(c), std::move(edges));
}

Graph read_edge_list(const std::filesystem::path& path, std::optional<int> num_nodes,
                     std::optional<int> num_edge_types) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open edge list " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_edge_list(buffer.str(), num_nodes, num_edge_types);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_edge_list(const Graph& graph) {
  std::string out = "nodes=" + std::to_string(graph.num_nodes()) +
                    " types=" + std::to_string(graph.num_edge_types()) + "\n";
  for (const Edge& e : graph.edges()) {
    out += std::to_string(e.src) + '\t' + std::to_string(e.dst) + '\t' + std::to_string(e.type) + '\n';
  }
  return out;
}

Graph bidirect(const Graph& graph) {
  std::vector<Edge> edges;
  edges.reserve(graph.edges().size() * 2);
  for (const Edge& e : graph.edges()) {
    edges.push_back(e);
    edges.push_back(Edge{e.dst, e.src, e.type});
  }
  return Graph(graph.num_nodes(), graph.num_edge_types(), std::move(edges));
}

PartitionView partition_view(const Graph& graph, std::span<const int> assignment,
                             int num_subgraphs) {
  if (assignment.size() != static_cast<std::size_t>(graph.num_nodes())) {
    throw Error("partition: assignment covers " + std::to_string(assignment.size()) +
                " nodes but graph has " + std::to_string(graph.num_nodes()));
  }
  if (num_subgraphs < 1) {
    throw Error("partition: number of subgraphs must be positive");
  }
  for (std::size_t v = 0; v < assignment.size(); ++v) {
    if (assignment[v] < 0 || assignment[v] >= num_subgraphs) {
      throw Error("partition: node " + std::to_string(v) + " has subgraph id " +
                  std::to_string(assignment[v]) + " outside [0, " +
                  std::to_string(num_subgraphs) + ")");
    }
  }
  PartitionView view;
  view.subgraphs.resize(static_cast<std::size_t>(num_subgraphs));
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    const Edge& edge = graph.edge(e);
    const int a = assignment[static_cast<std::size_t>(edge.src)];
    if (a == assignment[static_cast<std::size_t>(edge.dst)]) {
      view.subgraphs[static_cast<std::size_t>(a)].push_back(e);
    } else {
      view.cut.push_back(e);
    }
  }
  return view;
}

namespace {

// Adjacency restricted to an edge subset, as CSR over node ids.
struct SubsetAdjacency {
  std::vector<int> offsets;
  std::vector<NodeId> targets;
};

SubsetAdjacency subset_adjacency(const Graph& graph, std::span<const EdgeId> edge_subset) {
  SubsetAdjacency adj;
  adj.offsets.assign(static_cast<std::size_t>(graph.num_nodes()) + 1, 0);
  for (const EdgeId e : edge_subset) {
    ++adj.offsets[static_cast<std::size_t>(graph.edge(e).src) + 1];
  }
  for (std::size_t i = 1; i < adj.offsets.size(); ++i) {
    adj.offsets[i] += adj.offsets[i - 1];
  }
  adj.targets.resize(edge_subset.size());
  std::vector<int> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  for (const EdgeId e : edge_subset) {
    const Edge& edge = graph.edge(e);
    adj.targets[static_cast<std::size_t>(cursor[static_cast<std::size_t>(edge.src)]++)] = edge.dst;
  }
  return adj;
}

// Returns (eccentricity, number of reached nodes) for one BFS source.
std::pair<int, int> bfs_from(const SubsetAdjacency& adj, NodeId source, std::vector<int>& dist,
                             std::vector<NodeId>& queue) {
  queue.clear();
  queue.push_back(source);
  dist[static_cast<std::size_t>(source)] = 0;
  int ecc = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId u = queue[head];
    const int du = dist[static_cast<std::size_t>(u)];
    ecc = std::max(ecc, du);
    const auto begin = static_cast<std::size_t>(adj.offsets[static_cast<std::size_t>(u)]);
    const auto end = static_cast<std::size_t>(adj.offsets[static_cast<std::size_t>(u) + 1]);
    for (std::size_t i = begin; i < end; ++i) {
      const NodeId v = adj.targets[i];
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = du + 1;
        queue.push_back(v);
      }
    }
  }
  const int reached = static_cast<int>(queue.size());
  for (const NodeId v : queue) {
    dist[static_cast<std::size_t>(v)] = -1;
  }
  return {ecc, reached};
}

} // namespace

DiameterReport bfs_diameter(const Graph& graph, std::span<const EdgeId> edge_subset) {
  const SubsetAdjacency adj = subset_adjacency(graph, edge_subset);
  DiameterReport report;
  report.eccentricity.assign(static_cast<std::size_t>(graph.num_nodes()), 0);
  std::vector<int> dist(static_cast<std::size_t>(graph.num_nodes()), -1);
  std::vector<NodeId> queue;
  for (NodeId s = 0; s < graph.num_nodes(); ++s) {
    const auto [ecc, reached] = bfs_from(adj, s, dist, queue);
    report.eccentricity[static_cast<std::size_t>(s)] = ecc;
    report.diameter = std::max(report.diameter, ecc);
    if (reached != graph.num_nodes()) {
      report.strongly_connected = false;
    }
  }
  return report;
}

DiameterReport bfs_diameter(const Graph& graph) {
  std::vector<EdgeId> all(static_cast<std::size_t>(graph.num_edges()));
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    all[static_cast<std::size_t>(e)] = e;
  }
  return bfs_diameter(graph, all);
}

int induced_diameter(const Graph& graph, std::span<const NodeId> members,
                     std::span<const EdgeId> edge_subset) {
  const SubsetAdjacency adj = subset_adjacency(graph, edge_subset);
  std::vector<int> dist(static_cast<std::size_t>(graph.num_nodes()), -1);
  std::vector<NodeId> queue;
  int diameter = 0;
  for (const NodeId s : members) {
    diameter = std::max(diameter, bfs_from(adj, s, dist, queue).first);
  }
  return diameter;
}

} // namespace gpnn

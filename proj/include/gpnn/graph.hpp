#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpnn {

using NodeId = int;
using EdgeId = int;
using EdgeType = int;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  EdgeType type = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed multigraph with typed edges.
///
/// Edge ids are positions in the construction list and never change. Out/in
/// adjacency is stored as CSR arrays of edge ids, each row in ascending edge
/// id order. Immutable after construction.
class Graph {
public:
  Graph() = default;

  /// Validates every endpoint and type; throws gpnn::Error on violation.
  Graph(int num_nodes, int num_edge_types, std::vector<Edge> edges);

  [[nodiscard]] int num_nodes() const noexcept { return num_nodes_; }
  [[nodiscard]] int num_edges() const noexcept { return static_cast<int>(edges_.size()); }
  [[nodiscard]] int num_edge_types() const noexcept { return num_edge_types_; }

  [[nodiscard]] const Edge& edge(EdgeId e) const { return edges_[static_cast<std::size_t>(e)]; }
  [[nodiscard]] std::span<const Edge> edges() const noexcept { return edges_; }

  [[nodiscard]] std::span<const EdgeId> out_edges(NodeId v) const;
  [[nodiscard]] std::span<const EdgeId> in_edges(NodeId v) const;

  [[nodiscard]] int out_degree(NodeId v) const { return static_cast<int>(out_edges(v).size()); }
  [[nodiscard]] int in_degree(NodeId v) const { return static_cast<int>(in_edges(v).size()); }

  /// Destinations of v's out-edges, one entry per edge instance.
  [[nodiscard]] std::vector<NodeId> out_neighbors(NodeId v) const;
  [[nodiscard]] std::vector<NodeId> in_neighbors(NodeId v) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.num_edge_types_ == b.num_edge_types_ &&
           a.edges_ == b.edges_;
  }

private:
  int num_nodes_ = 0;
  int num_edge_types_ = 1;
  std::vector<Edge> edges_;
  std::vector<int> out_offsets_{0};
  std::vector<EdgeId> out_ids_;
  std::vector<int> in_offsets_{0};
  std::vector<EdgeId> in_ids_;
};

/// Parses "src<TAB>dst<TAB>etype" records. '#' lines and blank lines are
/// skipped; an optional first record "nodes=N types=C" fixes the counts.
/// Explicit arguments take precedence over the header; missing counts are
/// inferred as max id + 1.
Graph parse_edge_list(std::string_view text, std::optional<int> num_nodes = std::nullopt,
                      std::optional<int> num_edge_types = std::nullopt);

Graph read_edge_list(const std::filesystem::path& path,
                     std::optional<int> num_nodes = std::nullopt,
                     std::optional<int> num_edge_types = std::nullopt);

/// Header plus one record per edge, in edge id order.
std::string format_edge_list(const Graph& graph);

/// Splits every edge (u,v,c) into (u,v,c) and (v,u,c) at ids 2i and 2i+1.
/// No deduplication; a self-loop yields two copies.
Graph bidirect(const Graph& graph);

/// Induced subgraph edge sets plus the cut, each in ascending edge id order.
struct PartitionView {
  std::vector<std::vector<EdgeId>> subgraphs;
  std::vector<EdgeId> cut;
};

PartitionView partition_view(const Graph& graph, std::span<const int> assignment,
                             int num_subgraphs);

struct DiameterReport {
  int diameter = 0;
  /// Longest finite BFS distance from each source.
  std::vector<int> eccentricity;
  bool strongly_connected = true;
};

/// Hop diameter over reachable ordered pairs, treating edges as directed.
DiameterReport bfs_diameter(const Graph& graph);

/// Same, restricted to the given edge ids (nodes without any of these edges
/// still count as vertices for connectivity).
DiameterReport bfs_diameter(const Graph& graph, std::span<const EdgeId> edge_subset);

/// Diameter of one induced subgraph: only `members` count as vertices.
int induced_diameter(const Graph& graph, std::span<const NodeId> members,
                     std::span<const EdgeId> edge_subset);

} // namespace gpnn

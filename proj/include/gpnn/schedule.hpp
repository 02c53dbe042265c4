#pragma once

#include "gpnn/graph.hpp"
#include "gpnn/partition.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gpnn {

enum class ScheduleKind { synchronous, gpnn, sequential, mst, random };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

/// A set of directed edges that fire simultaneously: every message is computed
/// from pre-phase states and delivered at the phase barrier.
struct Phase {
  std::vector<EdgeId> edges; // ascending
  std::string label;
};

struct ScheduleParams {
  int steps = 0;           // T (outer iterations / repetitions / trees / chunks)
  int intra_steps = 0;     // T_S
  int inter_steps = 0;     // T_C
  int num_subgraphs = 0;   // K
  NodeId root = 0;
  bool drop_final_inter = false;
};

/// Ordered phase list built for one graph. Empty phases are never stored.
struct Schedule {
  ScheduleKind kind = ScheduleKind::synchronous;
  ScheduleParams params;
  int num_nodes = 0;
  int num_edges = 0;
  std::vector<Phase> phases;

  /// Throws unless every phase references valid edges of `graph`.
  void check_compatible(const Graph& graph) const;
};

/// Total messages: the sum of phase sizes.
long long message_count(const Schedule& schedule);

/// T phases, each containing every edge.
Schedule synchronous_schedule(const Graph& graph, int steps);

/// Partition propagation: T outer iterations of T_S intra-subgraph phases
/// (union of all subgraph edge sets, since subgraphs run side by side)
/// followed by T_C cut phases. T_S or T_C may be zero.
Schedule gpnn_schedule(const Graph& graph, const Partition& partition, int steps,
                       int intra_steps, int inter_steps, bool drop_final_inter = false);

/// BFS-order DAG schedule from `root`, repeated `steps` times. Nodes are
/// ranked by BFS visit order (ascending id within a frontier, unreached nodes
/// appended by ascending id). Forward-DAG edges go up in rank, backward-DAG
/// edges down; self-loops are dropped. In each DAG an edge (u,v) fires in the
/// phase equal to u's level, where level(u) = 1 + max level of u's DAG parents.
Schedule sequential_schedule(const Graph& graph, NodeId root, int steps = 1);

/// Sequence of `num_trees` minimum spanning forests of the undirected support
/// under random weights in (0,1), each chosen pair's weight increased by 1
/// after every tree. Each tree yields one phase per depth, edges directed
/// away from the lowest-id node of each component.
Schedule mst_schedule(const Graph& graph, int num_trees, std::uint64_t seed);

/// k phases from random_edge_phases, in order (empty chunks dropped).
Schedule random_phase_schedule(const Graph& graph, int k, std::uint64_t seed);

/// "phase_idx<TAB>label<TAB>e0,e1,..." per line.
std::string format_schedule(const Schedule& schedule);
Schedule parse_schedule(std::string_view text, const Graph& graph);

} // namespace gpnn

#pragma once

#include "gpnn/graph.hpp"
#include "gpnn/schedule.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gpnn {

/// Per-node token sets for the broadcast problem, stored as bitsets.
struct BroadcastState {
  int num_nodes = 0;
  int words_per_node = 0;
  std::vector<std::uint64_t> known;
  long long messages_sent = 0;
  int phases_executed = 0;
  /// Every node knows every token that can reach it.
  bool solved = false;
  /// Every node knows all N tokens (only possible when strongly connected).
  bool complete = false;

  [[nodiscard]] bool knows(NodeId v, NodeId token) const;
  [[nodiscard]] int known_count(NodeId v) const;
};

/// Runs schedules against a graph with barrier semantics: within a phase every
/// active edge (u,v) ORs u's pre-phase token set into v. Successive run() calls
/// continue from the current state.
class BroadcastSimulator {
public:
  explicit BroadcastSimulator(const Graph& graph);

  /// Executes phases in order. With stop_when_solved, halts after the first
  /// phase that leaves the state solved (and executes nothing if already solved).
  void run(const Schedule& schedule, bool stop_when_solved);

  [[nodiscard]] const BroadcastState& state() const noexcept { return state_; }

private:
  void refresh(NodeId v);
  [[nodiscard]] bool known_all(NodeId v) const;

  const Graph* graph_;
  BroadcastState state_;
  std::vector<std::uint64_t> target_;
  std::vector<char> saturated_;
  int unsaturated_ = 0;
  int incomplete_ = 0;
};

BroadcastState simulate_broadcast(const Graph& graph, const Schedule& schedule,
                                  bool stop_when_solved);

/// Closed-form message counts for broadcast on a bidirected chain of N nodes
/// split evenly into K sub-chains.
struct ChainFormulaReport {
  long long n = 0;
  long long k = 0;
  long long sync_messages = 0;  // 2(N-1)^2
  long long gpnn_messages = 0;  // 2((N-K)^2 + (K-1)^2)
  double optimal_k = 0.0;       // (N+1)/2
  std::vector<long long> argmin_k;
  long long min_gpnn_messages = 0;
  bool even_partition = false;  // K divides N
};

ChainFormulaReport chain_formulas(long long n, long long k);

/// Bidirected chain 0-1-...-(n-1) with edges (i,i+1),(i+1,i) at ids 2i, 2i+1.
Graph make_chain(int n);
/// Contiguous assignment of a chain into k blocks of near-equal size.
Partition contiguous_partition(int n, int k);

enum class GraphFamily { chain, cycle, grid, sbm };

std::string to_string(GraphFamily family);
GraphFamily parse_graph_family(std::string_view name);

struct SweepOptions {
  GraphFamily family = GraphFamily::chain;
  std::vector<int> sizes;
  std::vector<ScheduleKind> kinds;
  /// Subgraph count for gpnn; 0 picks N/2 on chains and cycles, round(sqrt N) otherwise.
  int num_subgraphs = 0;
  double p_in = 0.5;
  double p_out = 0.05;
  std::uint64_t seed = 0;
  /// Propagation rounds before giving up; 0 means N + 1.
  int max_rounds = 0;
};

/// One row per (size, kind). `solved` means every node holds every token;
/// `saturated` means every node holds every token that can reach it.
struct SweepRow {
  std::string family;
  int n = 0;
  std::string kind;
  int k = 0;
  int intra_steps = 0;
  int inter_steps = 0;
  int phases = 0;
  long long messages = 0;
  bool solved = false;
  bool saturated = false;
};

Graph make_family_graph(GraphFamily family, int n, double p_in, double p_out, std::uint64_t seed);

/// Rows are produced in (size, kind) order; independent rows run on up to
/// `threads` workers without affecting the result.
std::vector<SweepRow> broadcast_sweep(const SweepOptions& options, int threads = 1);

/// JSON lines with keys family, N, kind, K, T_S, T_C, phases, messages, solved, saturated.
std::string sweep_jsonl(const std::vector<SweepRow>& rows);

} // namespace gpnn

#pragma once

#include "gpnn/graph.hpp"
#include "gpnn/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpnn {

enum class PartitionMethod { flood_fill, spectral, manual };

std::string to_string(PartitionMethod method);
PartitionMethod parse_partition_method(std::string_view name);

struct Partition {
  std::vector<int> assignment;
  int num_subgraphs = 1;
  PartitionMethod method = PartitionMethod::manual;
  std::uint64_t seed = 0;

  [[nodiscard]] PartitionView view(const Graph& graph) const {
    return partition_view(graph, assignment, num_subgraphs);
  }
};

/// Degree-biased sampler over labeled nodes: p_u = d_u / sum of d_v.
///
/// Draws are without replacement. Once every remaining candidate has zero
/// degree, the remaining draws are uniform over the candidates left.
class SeedSampler {
public:
  SeedSampler(const Graph& graph, std::span<const NodeId> labeled);

  [[nodiscard]] std::span<const NodeId> candidates() const noexcept { return ids_; }
  [[nodiscard]] std::span<const int> degrees() const noexcept { return degrees_; }
  [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return probabilities_; }

  std::vector<NodeId> draw(int count, Rng& rng) const;

private:
  std::vector<NodeId> ids_;
  std::vector<int> degrees_;
  std::vector<double> probabilities_;
};

/// One pop of the multi-seed flood fill: queue `subgraph` popped `node` in
/// `round` and claimed `claimed` (in claim order).
struct FloodFillStep {
  int round = 0;
  int subgraph = 0;
  NodeId node = 0;
  std::vector<NodeId> claimed;

  friend bool operator==(const FloodFillStep&, const FloodFillStep&) = default;
};

struct FloodFillTrace {
  std::vector<NodeId> seeds;
  std::vector<std::vector<int>> round_orders;
  std::vector<FloodFillStep> steps;
  /// Nodes not reached by any queue, and the subgraph they were given.
  std::vector<NodeId> leftovers;
  int leftover_subgraph = -1;
};

/// Modified multi-seed flood fill.
///
/// Seeds are sampled (degree-biased, without replacement) from `labeled`; seed
/// k owns subgraph k. Each round visits the queues in a fresh random order and
/// every nonempty queue pops exactly one node, claiming its unvisited
/// out-neighbors. Nodes never reached go to the smallest subgraph (lowest id on
/// ties). Throws if num_subgraphs exceeds the number of labeled ids.
Partition flood_fill_partition(const Graph& graph, int num_subgraphs,
                               std::span<const NodeId> labeled, std::uint64_t seed,
                               FloodFillTrace* trace = nullptr);

struct SpectralOptions {
  /// Dense eigensolves above this node count are refused.
  int max_nodes = 5000;
  int kmeans_iterations = 300;
  double residual_tolerance = 1e-6;
};

/// Random-walk Laplacian L = I - D^-1 W of the symmetrized graph. Isolated
/// nodes get a zero row with 1 on the diagonal.
struct LaplacianMatrix {
  int n = 0;
  std::vector<double> degree;
  /// Row-major n*n.
  std::vector<double> values;

  [[nodiscard]] double at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)];
  }
};

/// Symmetrized weights: each edge (u,v) adds 1 to W[u][v] and to W[v][u].
LaplacianMatrix random_walk_laplacian(const Graph& graph);

struct SpectralEmbedding {
  std::vector<double> eigenvalues;
  /// N rows of K coordinates (row-major), eigenvectors of L as columns.
  std::vector<double> coordinates;
  /// max over returned pairs of |L x - lambda x|_inf.
  double max_residual = 0.0;
};

SpectralEmbedding spectral_embedding(const Graph& graph, int num_vectors,
                                     const SpectralOptions& options = {});

/// Normalized-cut spectral partition: K smallest eigenvectors of L, rows
/// clustered with seeded k-means (k-means++ init). Cluster ids are
/// renumbered by first appearance in node order.
Partition spectral_partition(const Graph& graph, int num_subgraphs, std::uint64_t seed = 0,
                             const SpectralOptions& options = {});

/// Lloyd's k-means over row-major points (n x dim). Returns labels.
std::vector<int> kmeans(std::span<const double> points, int n, int dim, int k, Rng& rng,
                        int max_iterations);

/// Random permutation of all edge ids cut into k consecutive chunks whose
/// sizes differ by at most one (larger chunks first). Each chunk is sorted.
std::vector<std::vector<EdgeId>> random_edge_phases(const Graph& graph, int k,
                                                    std::uint64_t seed);

struct PartitionStats {
  std::vector<int> subgraph_nodes;
  std::vector<int> subgraph_edges;
  std::vector<int> subgraph_diameters;
  int cut_edges = 0;
  /// Largest subgraph diameter.
  int max_diameter = 0;
};

PartitionStats partition_stats(const Graph& graph, const Partition& partition);

/// JSON object text with stable key order.
std::string partition_stats_json(const PartitionStats& stats, const Partition& partition);

/// "node_id<TAB>subgraph_id" per line.
std::string format_partition(const Partition& partition);
Partition parse_partition(std::string_view text, int num_nodes);

} // namespace gpnn

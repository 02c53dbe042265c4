#include "gpnn/partition.hpp"

#include "gpnn/error.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <json.hpp>
#include <numeric>
#include <unordered_set>

namespace gpnn {

std::string to_string(PartitionMethod method) {
  switch (method) {
  case PartitionMethod::flood_fill:
    return "flood_fill";
  case PartitionMethod::spectral:
    return "spectral";
  case PartitionMethod::manual:
    return "manual";
  }
  return "manual";
}

PartitionMethod parse_partition_method(std::string_view name) {
  if (name == "flood_fill" || name == "flood-fill") {
    return PartitionMethod::flood_fill;
  }
  if (name == "spectral") {
    return PartitionMethod::spectral;
  }
  throw Error("unknown partition method '" + std::string(name) + "'");
}

SeedSampler::SeedSampler(const Graph& graph, std::span<const NodeId> labeled)
    : ids_(labeled.begin(), labeled.end()) {
  long long total = 0;
  for (const NodeId u : ids_) {
    if (u < 0 || u >= graph.num_nodes()) {
      throw Error("flood fill: labeled node " + std::to_string(u) + " out of range");
    }
    degrees_.push_back(graph.out_degree(u));
    total += degrees_.back();
  }
  probabilities_.resize(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    probabilities_[i] = total > 0 ? static_cast<double>(degrees_[i]) / static_cast<double>(total)
                                  : 1.0 / static_cast<double>(ids_.size());
  }
}

std::vector<NodeId> SeedSampler::draw(int count, Rng& rng) const {
  if (count < 0 || static_cast<std::size_t>(count) > ids_.size()) {
    throw Error("seed sampler: cannot draw " + std::to_string(count) + " distinct seeds from " +
                std::to_string(ids_.size()) + " labeled nodes");
  }
  std::vector<std::size_t> remaining(ids_.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<NodeId> seeds;
  seeds.reserve(static_cast<std::size_t>(count));
  for (int draw = 0; draw < count; ++draw) {
    long long total = 0;
    for (const std::size_t i : remaining) {
      total += degrees_[i];
    }
    std::size_t pick = 0;
    if (total == 0) {
      pick = rng.index(remaining.size());
    } else {
      const double target = rng.uniform() * static_cast<double>(total);
      double cumulative = 0.0;
      pick = remaining.size();
      for (std::size_t j = 0; j < remaining.size(); ++j) {
        if (degrees_[remaining[j]] == 0) {
          continue;
        }
        cumulative += degrees_[remaining[j]];
        pick = j;
        if (target < cumulative) {
          break;
        }
      }
    }
    seeds.push_back(ids_[remaining[pick]]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return seeds;
}

Partition flood_fill_partition(const Graph& graph, int num_subgraphs,
                               std::span<const NodeId> labeled, std::uint64_t seed,
                               FloodFillTrace* trace) {
  if (num_subgraphs < 1) {
    throw Error("flood fill: number of subgraphs must be positive");
  }
  if (labeled.empty()) {
    throw Error("flood fill: labeled node set is empty");
  }
  if (static_cast<std::size_t>(num_subgraphs) > labeled.size()) {
    throw Error("flood fill: " + std::to_string(num_subgraphs) + " subgraphs requested but only " +
                std::to_string(labeled.size()) + " labeled nodes");
  }
  std::unordered_set<NodeId> unique(labeled.begin(), labeled.end());
  if (unique.size() != labeled.size()) {
    throw Error("flood fill: duplicate labeled node ids");
  }

  Rng rng(seed);
  const SeedSampler sampler(graph, labeled);
  const std::vector<NodeId> seeds = sampler.draw(num_subgraphs, rng);

  const auto n = static_cast<std::size_t>(graph.num_nodes());
  const auto k_count = static_cast<std::size_t>(num_subgraphs);
  std::vector<char> visited(n, 0);
  std::vector<int> label(n, -1);
  std::vector<int> sizes(k_count, 0);
  std::vector<std::deque<NodeId>> queues(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto s = static_cast<std::size_t>(seeds[k]);
    queues[k].push_back(seeds[k]);
    visited[s] = 1;
    label[s] = static_cast<int>(k);
    ++sizes[k];
  }
  if (trace != nullptr) {
    *trace = FloodFillTrace{};
    trace->seeds = seeds;
  }

  auto any_nonempty = [&] {
    return std::any_of(queues.begin(), queues.end(), [](const auto& q) { return !q.empty(); });
  };
  for (int round = 0; any_nonempty(); ++round) {
    const std::vector<int> order = rng.permutation(num_subgraphs);
    if (trace != nullptr) {
      trace->round_orders.push_back(order);
    }
    for (const int k : order) {
      auto& queue = queues[static_cast<std::size_t>(k)];
      if (queue.empty()) {
        continue;
      }
      const NodeId u = queue.front();
      queue.pop_front();
      FloodFillStep step{round, k, u, {}};
      for (const EdgeId e : graph.out_edges(u)) {
        const NodeId v = graph.edge(e).dst;
        if (!visited[static_cast<std::size_t>(v)]) {
          queue.push_back(v);
          label[static_cast<std::size_t>(v)] = k;
          visited[static_cast<std::size_t>(v)] = 1;
          ++sizes[static_cast<std::size_t>(k)];
          step.claimed.push_back(v);
        }
      }
      if (trace != nullptr) {
        trace->steps.push_back(std::move(step));
      }
    }
  }

  const int smallest = static_cast<int>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t v = 0; v < n; ++v) {
    if (!visited[v]) {
      label[v] = smallest;
      if (trace != nullptr) {
        trace->leftovers.push_back(static_cast<NodeId>(v));
      }
    }
  }
  if (trace != nullptr && !trace->leftovers.empty()) {
    trace->leftover_subgraph = smallest;
  }
  return Partition{std::move(label), num_subgraphs, PartitionMethod::flood_fill, seed};
}

std::vector<std::vector<EdgeId>> random_edge_phases(const Graph& graph, int k,
                                                    std::uint64_t seed) {
  if (k < 1) {
    throw Error("random edge phases: k must be positive");
  }
  Rng rng(seed);
  const std::vector<int> order = rng.permutation(graph.num_edges());
  const std::size_t total = order.size();
  const std::size_t base = total / static_cast<std::size_t>(k);
  const std::size_t extra = total % static_cast<std::size_t>(k);
  std::vector<std::vector<EdgeId>> chunks(static_cast<std::size_t>(k));
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const std::size_t size = base + (i < extra ? 1 : 0);
    chunks[i].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                     order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    std::sort(chunks[i].begin(), chunks[i].end());
    cursor += size;
  }
  return chunks;
}

PartitionStats partition_stats(const Graph& graph, const Partition& partition) {
  const PartitionView view = partition.view(graph);
  const auto k_count = static_cast<std::size_t>(partition.num_subgraphs);
  PartitionStats stats;
  stats.subgraph_nodes.assign(k_count, 0);
  stats.subgraph_edges.assign(k_count, 0);
  stats.subgraph_diameters.assign(k_count, 0);
  std::vector<std::vector<NodeId>> members(k_count);
  for (std::size_t v = 0; v < partition.assignment.size(); ++v) {
    const auto k = static_cast<std::size_t>(partition.assignment[v]);
    ++stats.subgraph_nodes[k];
    members[k].push_back(static_cast<NodeId>(v));
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    stats.subgraph_edges[k] = static_cast<int>(view.subgraphs[k].size());
    stats.subgraph_diameters[k] = induced_diameter(graph, members[k], view.subgraphs[k]);
    stats.max_diameter = std::max(stats.max_diameter, stats.subgraph_diameters[k]);
  }
  stats.cut_edges = static_cast<int>(view.cut.size());
  return stats;
}

std::string partition_stats_json(const PartitionStats& stats, const Partition& partition) {
  nlohmann::ordered_json j;
  j["method"] = to_string(partition.method);
  j["num_subgraphs"] = partition.num_subgraphs;
  j["seed"] = partition.seed;
  j["subgraph_nodes"] = stats.subgraph_nodes;
  j["subgraph_edges"] = stats.subgraph_edges;
  j["subgraph_diameters"] = stats.subgraph_diameters;
  j["cut_edges"] = stats.cut_edges;
  j["max_diameter"] = stats.max_diameter;
  return j.dump(2) + "\n";
}

std::string format_partition(const Partition& partition) {
  std::string out;
  for (std::size_t v = 0; v < partition.assignment.size(); ++v) {
    out += std::to_string(v) + '\t' + std::to_string(partition.assignment[v]) + '\n';
  }
  return out;
}

Partition parse_partition(std::string_view text, int num_nodes) {
  Partition partition;
  partition.assignment.assign(static_cast<std::size_t>(num_nodes), -1);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    long long node = -1;
    long long sub = -1;
    if (std::sscanf(line.c_str(), "%lld %lld", &node, &sub) != 2) {
      throw ParseError("malformed partition record at line " + std::to_string(line_no));
    }
    if (node < 0 || node >= num_nodes || sub < 0) {
      throw ParseError("partition entry out of range at line " + std::to_string(line_no));
    }
    partition.assignment[static_cast<std::size_t>(node)] = static_cast<int>(sub);
  }
  int max_id = -1;
  for (std::size_t v = 0; v < partition.assignment.size(); ++v) {
    if (partition.assignment[v] < 0) {
      throw Error("partition: node " + std::to_string(v) + " is unassigned");
    }
    max_id = std::max(max_id, partition.assignment[v]);
  }
  partition.num_subgraphs = std::max(1, max_id + 1);
  return partition;
}

} // namespace gpnn

#pragma once

#include "gpnn/graph.hpp"
#include "gpnn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gpnn {

/// Node classification data. Unlabeled nodes carry label -1.
struct Dataset {
  Graph graph;
  SparseMatrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<NodeId> train, val, test;
  /// The graph was built by bidirecting an undirected edge list; saving
  /// writes back only the original edges.
  bool undirected = false;

  [[nodiscard]] int num_nodes() const { return graph.num_nodes(); }
  [[nodiscard]] double label_rate() const;
};

struct DatasetPaths {
  std::filesystem::path edges;
  std::filesystem::path features; // optional
  std::filesystem::path labels;
  std::filesystem::path train, val, test;
  bool undirected = true;
};

/// Features: "node<TAB>dim:value dim:value ...". Labels: "node<TAB>class".
/// Masks: one node id per line. '#' lines and blank lines are skipped.
Dataset load_dataset(const DatasetPaths& paths);

/// Writes edges.txt, features.txt, labels.txt, train.txt, val.txt and
/// test.txt under `dir` and returns the paths for load_dataset.
DatasetPaths save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

struct SbmOptions {
  int num_nodes = 400;
  int num_classes = 4;
  double p_in = 0.5;
  double p_out = 0.02;
  double feature_noise = 1.0;
  int train_per_class = 20;
  int num_val = 100;
  /// Negative: every node not in train or val.
  int num_test = -1;
  std::uint64_t seed = 0;
};

/// Contiguous equal blocks (earlier blocks take the remainder), one block per
/// class; bidirected single-type edges; features one-hot(class) + noise.
Dataset gen_sbm(const SbmOptions& options);

} // namespace gpnn

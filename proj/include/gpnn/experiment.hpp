#pragma once

#include "gpnn/broadcast.hpp"
#include "gpnn/dataset.hpp"
#include "gpnn/gnn.hpp"
#include "gpnn/partition.hpp"
#include "gpnn/schedule.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gpnn {

using OrderedJson = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;

struct DatasetSpec {
  enum class Source { sbm, files } source = Source::sbm;
  SbmOptions sbm;
  DatasetPaths files;
};

struct PartitionSpec {
  PartitionMethod method = PartitionMethod::flood_fill;
  int num_subgraphs = 10;
  int max_spectral_nodes = 5000;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::gpnn;
  int steps = 3;
  /// Unset: the partition's largest subgraph diameter.
  std::optional<int> intra_steps;
  int inter_steps = 1;
  bool drop_final_inter = false;
  NodeId root = 0;
  /// Edge chunks per step for the random schedule.
  int random_chunks = 4;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  DatasetSpec dataset;
  PartitionSpec partition;
  ScheduleSpec schedule;
  /// Node, feature, class and edge-type counts are filled from the dataset.
  ModelConfig model;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  int threads = 1;
  std::filesystem::path output_dir;
  /// Broadcast sweep settings for the `broadcast` subcommand.
  SweepOptions broadcast;
  /// Grid for the `sweep` subcommand: every (kind, steps) pair.
  std::vector<ScheduleKind> sweep_kinds;
  std::vector<int> sweep_steps;
};

/// Parses a JSON config. Relative dataset paths resolve against `base_dir`.
/// Unknown keys and a mismatched schema_version are errors.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Rows of a metrics file, one JSON object per line.
struct MetricsReport {
  std::vector<OrderedJson> rows;
};

/// Writes JSON lines in insertion key order. Non-finite numbers are refused.
void emit_metrics(const MetricsReport& report, const std::filesystem::path& path);
std::string format_metrics(const MetricsReport& report);

struct RunResult {
  std::uint64_t seed = 0;
  int phases = 0;
  long long messages = 0;
  int epochs = 0;
  int best_epoch = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  MetricsReport report; // one row per seed, then a summary row
};

Dataset build_dataset(const ExperimentConfig& config);

/// Partition used by the gpnn schedule; seeded from derive_seed(seed, "partition").
Partition build_partition(const ExperimentConfig& config, const Dataset& dataset, std::uint64_t seed);

Schedule build_schedule(const ExperimentConfig& config, const Dataset& dataset, std::uint64_t seed,
                        const Partition* partition);

ModelConfig model_config_for(const ExperimentConfig& config, const Dataset& dataset);

/// Trains and evaluates one run per seed (runs spread over config.threads).
/// With a non-empty output_dir, writes metrics.jsonl and per seed
/// history.jsonl, partition.tsv, schedule.txt, embeddings.tsv and
/// checkpoint.txt under seed-<s>/.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Mean and sample standard deviation per metric across runs.
OrderedJson summarize_runs(const std::vector<RunResult>& runs);

/// CLI entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);

} // namespace gpnn

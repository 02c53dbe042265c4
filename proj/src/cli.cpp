#include "gpnn/error.hpp"
#include "gpnn/experiment.hpp"
#include "gpnn/parallel.hpp"

#include "text_io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace gpnn {

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  std::string schedule;
  std::string out;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "run a single seed instead of the configured list");
  cmd->add_option("--k", o.k, "number of subgraphs");
  cmd->add_option("--schedule", o.schedule, "schedule kind: synchronous, gpnn, sequential, mst, random");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load_with_overrides(const CommonOptions& o) {
  ExperimentConfig c = load_experiment_config(o.config);
  if (o.seed) {
    c.seeds = {*o.seed};
    c.broadcast.seed = *o.seed;
  }
  if (o.k) {
    c.partition.num_subgraphs = *o.k;
    c.broadcast.num_subgraphs = *o.k;
  }
  if (!o.schedule.empty()) {
    c.schedule.kind = parse_schedule_kind(o.schedule);
    c.broadcast.kinds = {c.schedule.kind};
  }
  if (!o.out.empty()) {
    c.output_dir = o.out;
  }
  if (o.threads) {
    c.threads = *o.threads;
  }
  if (c.output_dir.empty()) {
    throw Error("no output directory: set output_dir in the config or pass --out");
  }
  return c;
}

void print_summary(const OrderedJson& summary) {
  std::cout << "runs " << summary["runs"].get<std::size_t>() << "  test_acc "
            << summary["test_acc_mean"].get<double>() << " +/- " << summary["test_acc_std"].get<double>()
            << "  val_acc " << summary["val_acc_mean"].get<double>() << '\n';
}

int cmd_partition(const CommonOptions& o) {
  const ExperimentConfig c = load_with_overrides(o);
  const Dataset d = build_dataset(c);
  const Partition p = build_partition(c, d, c.seeds.front());
  const PartitionStats stats = partition_stats(d.graph, p);
  detail::write_text_file(c.output_dir / "partition.tsv", format_partition(p));
  detail::write_text_file(c.output_dir / "partition_stats.json", partition_stats_json(stats, p));
  std::cout << "subgraphs " << p.num_subgraphs << "  cut edges " << stats.cut_edges << "  max diameter "
            << stats.max_diameter << '\n';
  return 0;
}

int cmd_schedule(const CommonOptions& o) {
  const ExperimentConfig c = load_with_overrides(o);
  const Dataset d = build_dataset(c);
  std::optional<Partition> p;
  if (c.schedule.kind == ScheduleKind::gpnn) {
    p = build_partition(c, d, c.seeds.front());
    detail::write_text_file(c.output_dir / "partition.tsv", format_partition(*p));
  }
  const Schedule s = build_schedule(c, d, c.seeds.front(), p ? &*p : nullptr);
  detail::write_text_file(c.output_dir / "schedule.txt", format_schedule(s));
  std::cout << to_string(s.kind) << "  phases " << s.phases.size() << "  messages " << message_count(s) << '\n';
  return 0;
}

int cmd_broadcast(const CommonOptions& o) {
  const ExperimentConfig c = load_with_overrides(o);
  if (c.broadcast.sizes.empty()) {
    throw Error("broadcast: config has no broadcast.sizes");
  }
  const auto rows = broadcast_sweep(c.broadcast, c.threads);
  detail::write_text_file(c.output_dir / "broadcast.jsonl", sweep_jsonl(rows));
  std::size_t solved = 0;
  for (const SweepRow& r : rows) {
    solved += r.solved ? 1 : 0;
  }
  std::cout << "rows " << rows.size() << "  solved " << solved << '\n';
  return 0;
}

int cmd_train(const CommonOptions& o) {
  const ExperimentConfig c = load_with_overrides(o);
  const ExperimentResult r = run_experiment(c);
  print_summary(r.report.rows.back());
  return 0;
}

int cmd_eval(const CommonOptions& o, const std::string& checkpoint, int recall_k, int positive_class) {
  const ExperimentConfig c = load_with_overrides(o);
  const Dataset d = build_dataset(c);
  const std::uint64_t seed = c.seeds.front();
  std::optional<Partition> p;
  if (c.schedule.kind == ScheduleKind::gpnn) {
    p = build_partition(c, d, seed);
  }
  const Schedule s = build_schedule(c, d, seed, p ? &*p : nullptr);
  const ModelParams params = parse_checkpoint(detail::read_text_file(checkpoint));
  if (params.config != model_config_for(c, d)) {
    throw Error("eval: checkpoint " + checkpoint + " was trained with a different model configuration");
  }
  const SparseMatrix* features = params.config.feature_dim > 0 ? &d.features : nullptr;
  const Matrix probs = predict(compile_plan(d.graph, s), params, features);
  OrderedJson row;
  row["seed"] = seed;
  row["schedule"] = to_string(s.kind);
  const std::pair<const char*, const std::vector<NodeId>*> splits[] = {
      {"train_acc", &d.train}, {"val_acc", &d.val}, {"test_acc", &d.test}};
  for (const auto& [name, split] : splits) {
    if (!split->empty()) {
      row[name] = accuracy(probs, d.labels, *split);
    }
  }
  if (recall_k > 0) {
    row["recall_k"] = recall_k;
    row["recall"] = recall_at_k(probs, d.labels, d.test, positive_class, recall_k);
  }
  emit_metrics(MetricsReport{{row}}, c.output_dir / "eval.jsonl");
  std::cout << row.dump() << '\n';
  return 0;
}

int cmd_sweep(const CommonOptions& o) {
  const ExperimentConfig base = load_with_overrides(o);
  const std::vector<ScheduleKind> kinds =
      o.schedule.empty() && !base.sweep_kinds.empty() ? base.sweep_kinds : std::vector{base.schedule.kind};
  const std::vector<int> steps = base.sweep_steps.empty() ? std::vector{base.schedule.steps} : base.sweep_steps;
  std::vector<ExperimentConfig> grid;
  for (const ScheduleKind kind : kinds) {
    for (const int t : steps) {
      ExperimentConfig c = base;
      c.schedule.kind = kind;
      c.schedule.steps = t;
      c.threads = 1;
      c.output_dir = base.output_dir / (to_string(kind) + "-steps" + std::to_string(t));
      grid.push_back(std::move(c));
    }
  }
  std::vector<OrderedJson> summaries(grid.size());
  parallel_for(grid.size(), base.threads, [&](std::size_t i) {
    const ExperimentResult r = run_experiment(grid[i]);
    OrderedJson row;
    row["schedule"] = to_string(grid[i].schedule.kind);
    row["steps"] = grid[i].schedule.steps;
    for (const auto& [key, value] : r.report.rows.back().items()) {
      if (key != "summary") {
        row[key] = value;
      }
    }
    summaries[i] = std::move(row);
  });
  emit_metrics(MetricsReport{summaries}, base.output_dir / "sweep.jsonl");
  for (const OrderedJson& row : summaries) {
    std::cout << row["schedule"].get<std::string>() << " steps " << row["steps"].get<int>() << "  test_acc "
              << row["test_acc_mean"].get<double>() << " +/- " << row["test_acc_std"].get<double>() << '\n';
  }
  return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Partition-scheduled graph propagation: partitions, schedules, broadcast analysis and GNN training"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string checkpoint;
  int recall_k = 0;
  int positive_class = 1;

  auto* partition = app.add_subcommand("partition", "partition the dataset graph");
  auto* schedule = app.add_subcommand("schedule", "build and dump a propagation schedule");
  auto* broadcast = app.add_subcommand("broadcast", "message counts of the broadcast problem");
  auto* train_cmd = app.add_subcommand("train", "train and evaluate, one run per seed");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  auto* sweep = app.add_subcommand("sweep", "train over a grid of schedule kinds and step counts");
  for (auto* cmd : {partition, schedule, broadcast, train_cmd, eval, sweep}) {
    add_common(cmd, common);
  }
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--recall-k", recall_k, "also report recall@k on the test split");
  eval->add_option("--positive-class", positive_class, "class ranked for recall@k");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*partition) {
      return cmd_partition(common);
    }
    if (*schedule) {
      return cmd_schedule(common);
    }
    if (*broadcast) {
      return cmd_broadcast(common);
    }
    if (*train_cmd) {
      return cmd_train(common);
    }
    if (*eval) {
      return cmd_eval(common, checkpoint, recall_k, positive_class);
    }
    return cmd_sweep(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

} // namespace gpnn

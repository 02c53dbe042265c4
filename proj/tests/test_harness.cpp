#include "support.hpp"

#include "gpnn/dataset.hpp"
#include "gpnn/error.hpp"
#include "gpnn/experiment.hpp"

#include <doctest.h>

#include <cmath>

using namespace gpnn;
using namespace gpnn::test;

namespace {

void write_toy(const ScratchDir& dir) {
  dir.write("edges.txt", "nodes=4 types=1\n0 1 0\n1 2 0\n2 3 0\n");
  dir.write("features.txt", "0\t0:1\n1\t1:1\n2\t0:0.5 1:0.5\n3\t1:2\n");
  dir.write("labels.txt", "0\t0\n1\t1\n2\t0\n3\t1\n");
  dir.write("train.txt", "0\n1\n");
  dir.write("val.txt", "2\n");
  dir.write("test.txt", "3\n");
}

DatasetPaths toy_paths(const ScratchDir& dir) {
  return DatasetPaths{dir / "edges.txt", dir / "features.txt", dir / "labels.txt",
                      dir / "train.txt", dir / "val.txt",      dir / "test.txt"};
}

// A small block-model experiment that trains in well under a second.
OrderedJson small_config() {
  return OrderedJson::parse(R"({
    "schema_version": 1,
    "dataset": {"source": "sbm", "num_nodes": 60, "num_classes": 2, "p_in": 0.4, "p_out": 0.05,
                "train_per_class": 5, "num_val": 20, "seed": 3},
    "partition": {"method": "flood_fill", "k": 3},
    "schedule": {"kind": "gpnn", "steps": 2, "t_s": 1, "t_c": 1},
    "model": {"state_dim": 6},
    "train": {"max_epochs": 12},
    "seeds": [0, 1]
  })");
}

ExperimentConfig parse(const OrderedJson& j) { return parse_experiment_config(j.dump()); }

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gpnn");
  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST_CASE("toy dataset loads") {
  const ScratchDir dir("toy");
  write_toy(dir);
  const Dataset d = load_dataset(toy_paths(dir));
  CHECK(d.num_nodes() == 4);
  CHECK(d.graph.num_edges() == 6);
  CHECK(d.num_classes == 2);
  CHECK(d.labels == std::vector<int>{0, 1, 0, 1});
  CHECK(d.features.cols == 2);
  CHECK(d.train == std::vector<NodeId>{0, 1});
  CHECK(d.label_rate() == doctest::Approx(0.5));
}

TEST_CASE("dataset errors name the file and line") {
  const ScratchDir dir("bad");
  write_toy(dir);
  dir.write("labels.txt", "0\t0\n99\t1\n");
  CHECK_THROWS_WITH_AS(load_dataset(toy_paths(dir)),
                       doctest::Contains("labels.txt line 2: node 99 out of range (graph has 4 nodes)"),
                       ParseError);
  write_toy(dir);
  dir.write("val.txt", "1\n");
  CHECK_THROWS_WITH_AS(load_dataset(toy_paths(dir)), "masks overlap: node 1 is in both train and val",
                       Error);
  write_toy(dir);
  dir.write("features.txt", "0\t0:1\n0\t1:1\n");
  CHECK_THROWS_WITH_AS(load_dataset(toy_paths(dir)), doctest::Contains("duplicate feature row for node 0"),
                       ParseError);
  write_toy(dir);
  dir.write("labels.txt", "0\t0\n1\t1\n2\t0\n");
  CHECK_THROWS_WITH_AS(load_dataset(toy_paths(dir)), "test mask node 3 has no label", Error);
}

TEST_CASE("block model with no cross edges is a set of cliques") {
  SbmOptions o;
  o.num_nodes = 12;
  o.num_classes = 3;
  o.p_in = 1.0;
  o.p_out = 0.0;
  o.train_per_class = 1;
  o.num_val = 3;
  const Dataset d = gen_sbm(o);
  CHECK(d.graph.num_edges() == 3 * 4 * 3);
  for (const Edge& e : d.graph.edges()) {
    CHECK(d.labels[static_cast<std::size_t>(e.src)] == d.labels[static_cast<std::size_t>(e.dst)]);
  }
  CHECK(d.labels == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2});
  CHECK(d.train.size() == 3);
  CHECK(d.val.size() == 3);
  CHECK(d.test.size() == 6);
}

TEST_CASE("block model is reproducible byte for byte") {
  SbmOptions o;
  o.num_nodes = 50;
  o.num_classes = 2;
  o.train_per_class = 4;
  o.num_val = 10;
  o.seed = 17;
  const ScratchDir a("sbm-a");
  const ScratchDir b("sbm-b");
  save_dataset(gen_sbm(o), a.path());
  save_dataset(gen_sbm(o), b.path());
  CHECK(snapshot(a.path()) == snapshot(b.path()));
  o.seed = 18;
  const ScratchDir c("sbm-c");
  save_dataset(gen_sbm(o), c.path());
  CHECK(snapshot(a.path()) != snapshot(c.path()));
}

TEST_CASE("saved datasets load back unchanged") {
  SbmOptions o;
  o.num_nodes = 40;
  o.num_classes = 4;
  o.train_per_class = 2;
  o.num_val = 8;
  const Dataset d = gen_sbm(o);
  const ScratchDir dir("roundtrip");
  const Dataset back = load_dataset(save_dataset(d, dir.path()));
  CHECK(back.graph.edges().size() == d.graph.edges().size());
  CHECK(std::equal(back.graph.edges().begin(), back.graph.edges().end(), d.graph.edges().begin()));
  CHECK(back.labels == d.labels);
  CHECK(back.train == d.train);
  CHECK(back.val == d.val);
  CHECK(back.test == d.test);
  CHECK(back.features.cols == d.features.cols);
  CHECK(back.features.offsets == d.features.offsets);
  CHECK(back.features.indices == d.features.indices);
  CHECK(back.features.values == d.features.values);
}

TEST_CASE("metrics files") {
  const ScratchDir dir("metrics");
  emit_metrics(MetricsReport{}, dir / "empty.jsonl");
  CHECK(slurp(dir / "empty.jsonl").empty());

  OrderedJson row;
  row["seed"] = 1;
  row["acc"] = 0.1;
  row["name"] = "x";
  const MetricsReport report{{row, row}};
  emit_metrics(report, dir / "a.jsonl");
  emit_metrics(report, dir / "b.jsonl");
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(slurp(dir / "a.jsonl") == "{\"seed\":1,\"acc\":0.1,\"name\":\"x\"}\n{\"seed\":1,\"acc\":0.1,\"name\":\"x\"}\n");

  row["acc"] = std::nan("");
  CHECK_THROWS_WITH_AS(emit_metrics(MetricsReport{{row}}, dir / "c.jsonl"), doctest::Contains("non-finite"),
                       Error);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(parse(small_config()));
  OrderedJson j = small_config();
  j["schedule"]["t_z"] = 1;
  CHECK_THROWS_WITH_AS(parse(j), "config: unknown key schedule.t_z", Error);
  j = small_config();
  j["schema_version"] = 2;
  CHECK_THROWS_AS(parse(j), Error);
  j = small_config();
  j["model"]["state_dim"] = "wide";
  CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("model.state_dim has the wrong type"), Error);
  CHECK_THROWS_AS(parse_experiment_config("{"), ParseError);
  j = small_config();
  j["dataset"] = {{"source", "files"}, {"edges", "missing.txt"}, {"labels", "l"}, {"train", "t"}, {"val", "v"}};
  CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("does not exist"), Error);
}

TEST_CASE("config defaults for intra steps come from the partition") {
  OrderedJson j = small_config();
  j["schedule"]["t_s"] = nullptr;
  const ExperimentConfig c = parse(j);
  CHECK_FALSE(c.schedule.intra_steps.has_value());
  const Dataset d = build_dataset(c);
  const Partition p = build_partition(c, d, 0);
  const Schedule s = build_schedule(c, d, 0, &p);
  CHECK(s.params.intra_steps == partition_stats(d.graph, p).max_diameter);
  CHECK(s.params.inter_steps == 1);
}

TEST_CASE("spectral partition refuses graphs above the configured cap") {
  OrderedJson j = small_config();
  j["partition"]["method"] = "spectral";
  j["partition"]["max_spectral_nodes"] = 50;
  const ExperimentConfig c = parse(j);
  const Dataset d = build_dataset(c);
  CHECK_THROWS_WITH_AS(build_partition(c, d, 0), doctest::Contains("cap of 50"), Error);
}

TEST_CASE("one-subgraph partition trains exactly like synchronous") {
  OrderedJson j = small_config();
  j["partition"]["k"] = 1;
  j["schedule"] = {{"kind", "gpnn"}, {"steps", 2}, {"t_s", 1}, {"t_c", 1}};
  const ExperimentResult partitioned = run_experiment(parse(j));
  j["schedule"] = {{"kind", "synchronous"}, {"steps", 2}};
  const ExperimentResult sync = run_experiment(parse(j));
  REQUIRE(partitioned.runs.size() == sync.runs.size());
  for (std::size_t i = 0; i < sync.runs.size(); ++i) {
    CHECK(partitioned.runs[i].phases == sync.runs[i].phases);
    CHECK(partitioned.runs[i].epochs == sync.runs[i].epochs);
    CHECK(partitioned.runs[i].train_acc == sync.runs[i].train_acc);
    CHECK(partitioned.runs[i].val_acc == sync.runs[i].val_acc);
    CHECK(partitioned.runs[i].test_acc == sync.runs[i].test_acc);
  }
}

TEST_CASE("summary uses the sample standard deviation") {
  std::vector<RunResult> runs(3);
  runs[0].test_acc = 0.5;
  runs[1].test_acc = 0.7;
  runs[2].test_acc = 0.9;
  const OrderedJson s = summarize_runs(runs);
  CHECK(s["test_acc_mean"].get<double>() == doctest::Approx(0.7));
  CHECK(s["test_acc_std"].get<double>() == doctest::Approx(0.2));
}

TEST_CASE("default block model: training loss falls over the first epochs") {
  ExperimentConfig c = parse_experiment_config(R"({"schema_version": 1})");
  const Dataset d = build_dataset(c);
  CHECK(d.num_nodes() == 400);
  CHECK(d.train.size() == 80);
  const Partition p = build_partition(c, d, 0);
  const Schedule s = build_schedule(c, d, 0, &p);
  const ModelConfig m = model_config_for(c, d);
  c.train.max_epochs = 5;
  c.train.early_stop_window = 100;
  const TrainData data{&d.features, d.labels, d.train, d.val};
  const TrainResult r =
      train(compile_plan(d.graph, s), ModelParams::initialize(m, derive_seed(0, "model"), &d.features), data, c.train);
  REQUIRE(r.history.size() == 5);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    CHECK(r.history[i].train_loss < r.history[i - 1].train_loss);
  }
}

TEST_CASE("CLI outputs do not depend on the thread count") {
  const ScratchDir dir("cli");
  OrderedJson j = small_config();
  j["seeds"] = {0, 1, 2};
  j["broadcast"] = {{"family", "grid"}, {"sizes", {9, 16}}, {"kinds", {"synchronous", "gpnn", "mst"}}};
  j["sweep"] = {{"kinds", {"synchronous", "gpnn"}}, {"steps", {1, 2}}};
  dir.write("config.json", j.dump(2));
  const std::string config = (dir / "config.json").string();
  for (const std::string cmd : {"partition", "schedule", "broadcast", "train", "sweep"}) {
    const std::string one = (dir / (cmd + "-1")).string();
    const std::string four = (dir / (cmd + "-4")).string();
    REQUIRE(cli({cmd, "--config", config, "--out", one, "--threads", "1"}) == 0);
    REQUIRE(cli({cmd, "--config", config, "--out", four, "--threads", "4"}) == 0);
    const auto a = snapshot(one);
    CHECK_FALSE(a.empty());
    CHECK(a == snapshot(four));
  }
  const std::string checkpoint = (dir / "train-1" / "seed-0" / "checkpoint.txt").string();
  const std::string e1 = (dir / "eval-1").string();
  const std::string e2 = (dir / "eval-2").string();
  REQUIRE(cli({"eval", "--config", config, "--out", e1, "--checkpoint", checkpoint, "--seed", "0"}) == 0);
  REQUIRE(cli({"eval", "--config", config, "--out", e2, "--checkpoint", checkpoint, "--seed", "0",
               "--threads", "3"}) == 0);
  CHECK(snapshot(e1) == snapshot(e2));
}

TEST_CASE("CLI reports errors with a nonzero exit") {
  const ScratchDir dir("cli-err");
  OrderedJson j = small_config();
  j["bogus"] = 1;
  dir.write("config.json", j.dump());
  CHECK(cli({"train", "--config", (dir / "config.json").string(), "--out", (dir / "o").string()}) == 1);
  CHECK(cli({"train"}) != 0);
}

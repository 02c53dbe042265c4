#include "gpnn/experiment.hpp"

#include "gpnn/error.hpp"
#include "gpnn/parallel.hpp"
#include "gpnn/rng.hpp"

#include "text_io.hpp"

#include <cmath>
#include <set>

namespace gpnn {

namespace {

using Json = nlohmann::json;

// Reads one config object, remembering which keys were used so leftovers can
// be reported as typos.
class Section {
public:
  Section(const Json& json, std::string path) : json_(json), path_(std::move(path)) {
    if (!json_.is_object()) {
      throw Error("config: " + label() + " must be an object");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    const auto it = json_.find(key);
    if (it == json_.end()) {
      return;
    }
    used_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const Json::exception&) {
      throw Error("config: " + name(key) + " has the wrong type (" + it->dump() + ")");
    }
  }

  const Json* child(const char* key) {
    const auto it = json_.find(key);
    if (it == json_.end()) {
      return nullptr;
    }
    used_.insert(key);
    return &*it;
  }

  [[nodiscard]] std::string name(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : json_.items()) {
      if (used_.count(key) == 0) {
        throw Error("config: unknown key " + name(key.c_str()));
      }
    }
  }

private:
  [[nodiscard]] std::string label() const { return path_.empty() ? "top level" : path_; }

  const Json& json_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Enum, typename Parse>
void get_enum(Section& s, const char* key, Enum& out, Parse parse) {
  std::string text;
  s.get(key, text);
  if (!text.empty()) {
    try {
      out = parse(text);
    } catch (const Error& e) {
      throw Error("config: " + s.name(key) + ": " + e.what());
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) {
    return {};
  }
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void parse_dataset(const Json& j, DatasetSpec& spec, const std::filesystem::path& base) {
  Section s(j, "dataset");
  std::string source = "sbm";
  s.get("source", source);
  if (source == "sbm") {
    spec.source = DatasetSpec::Source::sbm;
    SbmOptions& o = spec.sbm;
    s.get("num_nodes", o.num_nodes);
    s.get("num_classes", o.num_classes);
    s.get("p_in", o.p_in);
    s.get("p_out", o.p_out);
    s.get("feature_noise", o.feature_noise);
    s.get("train_per_class", o.train_per_class);
    s.get("num_val", o.num_val);
    s.get("num_test", o.num_test);
    s.get("seed", o.seed);
  } else if (source == "files") {
    spec.source = DatasetSpec::Source::files;
    std::string edges, features, labels, train, val, test;
    s.get("edges", edges);
    s.get("features", features);
    s.get("labels", labels);
    s.get("train", train);
    s.get("val", val);
    s.get("test", test);
    s.get("undirected", spec.files.undirected);
    if (edges.empty() || labels.empty() || train.empty() || val.empty()) {
      throw Error("config: dataset.source=files needs edges, labels, train and val");
    }
    spec.files.edges = resolve(base, edges);
    spec.files.features = resolve(base, features);
    spec.files.labels = resolve(base, labels);
    spec.files.train = resolve(base, train);
    spec.files.val = resolve(base, val);
    spec.files.test = resolve(base, test);
    for (const auto* p : {&spec.files.edges, &spec.files.features, &spec.files.labels, &spec.files.train,
                          &spec.files.val, &spec.files.test}) {
      if (!p->empty() && !std::filesystem::exists(*p)) {
        throw Error("config: dataset file " + p->string() + " does not exist");
      }
    }
  } else {
    throw Error("config: dataset.source must be 'sbm' or 'files', got '" + source + "'");
  }
  s.finish();
}

void parse_schedule_section(const Json& j, ScheduleSpec& spec) {
  Section s(j, "schedule");
  get_enum(s, "kind", spec.kind, parse_schedule_kind);
  s.get("steps", spec.steps);
  if (const Json* ts = s.child("t_s"); ts != nullptr && !ts->is_null()) {
    if (!ts->is_number_integer()) {
      throw Error("config: schedule.t_s must be an integer or null");
    }
    spec.intra_steps = ts->get<int>();
  }
  s.get("t_c", spec.inter_steps);
  s.get("drop_final_inter", spec.drop_final_inter);
  s.get("root", spec.root);
  s.get("random_chunks", spec.random_chunks);
  s.finish();
  if (spec.steps < 0 || spec.inter_steps < 0 || (spec.intra_steps && *spec.intra_steps < 0)) {
    throw Error("config: schedule step counts must be non-negative");
  }
  if (spec.random_chunks < 1) {
    throw Error("config: schedule.random_chunks must be positive");
  }
}

void parse_model(const Json& j, ModelConfig& m) {
  Section s(j, "model");
  s.get("state_dim", m.state_dim);
  s.get("hidden_dim", m.hidden_dim);
  get_enum(s, "input", m.input_mode, parse_input_mode);
  get_enum(s, "message", m.message, parse_message_kind);
  get_enum(s, "aggregation", m.aggregation, parse_aggregation);
  get_enum(s, "concat", m.concat, parse_concat_mode);
  s.finish();
  if (m.state_dim < 1 || m.hidden_dim < 0) {
    throw Error("config: model.state_dim must be positive and model.hidden_dim non-negative");
  }
}

void parse_train(const Json& j, TrainConfig& t) {
  Section s(j, "train");
  s.get("learning_rate", t.learning_rate);
  s.get("max_epochs", t.max_epochs);
  s.get("early_stop_window", t.early_stop_window);
  s.get("grad_clip", t.grad_clip);
  s.get("weight_decay", t.weight_decay);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("epsilon", t.epsilon);
  s.finish();
}

void parse_broadcast(const Json& j, SweepOptions& b) {
  Section s(j, "broadcast");
  get_enum(s, "family", b.family, parse_graph_family);
  s.get("sizes", b.sizes);
  std::vector<std::string> kinds;
  s.get("kinds", kinds);
  if (!kinds.empty()) {
    b.kinds.clear();
    for (const auto& k : kinds) {
      b.kinds.push_back(parse_schedule_kind(k));
    }
  }
  s.get("k", b.num_subgraphs);
  s.get("p_in", b.p_in);
  s.get("p_out", b.p_out);
  s.get("max_rounds", b.max_rounds);
  s.finish();
}

std::vector<ScheduleKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ScheduleKind> out;
  for (const auto& n : names) {
    out.push_back(parse_schedule_kind(n));
  }
  return out;
}

} // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig config;
  config.broadcast.kinds = {ScheduleKind::synchronous, ScheduleKind::gpnn};
  Section s(root, "");
  if (const Json* v = s.child("schema_version"); v == nullptr || !v->is_number_integer() ||
                                                  v->get<int>() != kConfigSchemaVersion) {
    throw Error("config: schema_version must be " + std::to_string(kConfigSchemaVersion));
  }
  if (const Json* d = s.child("dataset")) {
    parse_dataset(*d, config.dataset, base_dir);
  }
  if (const Json* p = s.child("partition")) {
    Section ps(*p, "partition");
    get_enum(ps, "method", config.partition.method, parse_partition_method);
    ps.get("k", config.partition.num_subgraphs);
    ps.get("max_spectral_nodes", config.partition.max_spectral_nodes);
    ps.finish();
    if (config.partition.num_subgraphs < 1) {
      throw Error("config: partition.k must be positive");
    }
  }
  if (const Json* sc = s.child("schedule")) {
    parse_schedule_section(*sc, config.schedule);
  }
  if (const Json* m = s.child("model")) {
    parse_model(*m, config.model);
  }
  if (const Json* t = s.child("train")) {
    parse_train(*t, config.train);
  }
  s.get("seeds", config.seeds);
  if (config.seeds.empty()) {
    throw Error("config: seeds must not be empty");
  }
  s.get("threads", config.threads);
  std::string out;
  s.get("output_dir", out);
  config.output_dir = out;
  if (const Json* b = s.child("broadcast")) {
    parse_broadcast(*b, config.broadcast);
  }
  if (const Json* w = s.child("sweep")) {
    Section ws(*w, "sweep");
    std::vector<std::string> kinds;
    ws.get("kinds", kinds);
    ws.get("steps", config.sweep_steps);
    ws.finish();
    config.sweep_kinds = parse_kinds(kinds);
  }
  s.finish();
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  try {
    return parse_experiment_config(detail::read_text_file(path), path.parent_path());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

namespace {

void check_finite(const OrderedJson& j, const std::string& where) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    throw Error("metrics: non-finite value at " + where);
  }
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      check_finite(v, where + "." + k);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      check_finite(j[i], where + "[" + std::to_string(i) + "]");
    }
  }
}

} // namespace

std::string format_metrics(const MetricsReport& report) {
  std::string out;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    check_finite(report.rows[i], "row " + std::to_string(i));
    out += report.rows[i].dump();
    out += '\n';
  }
  return out;
}

void emit_metrics(const MetricsReport& report, const std::filesystem::path& path) {
  detail::write_text_file(path, format_metrics(report));
}

Dataset build_dataset(const ExperimentConfig& config) {
  return config.dataset.source == DatasetSpec::Source::sbm ? gen_sbm(config.dataset.sbm)
                                                           : load_dataset(config.dataset.files);
}

Partition build_partition(const ExperimentConfig& config, const Dataset& dataset, std::uint64_t seed) {
  const PartitionSpec& p = config.partition;
  const std::uint64_t sub = derive_seed(seed, "partition");
  if (p.method == PartitionMethod::spectral) {
    SpectralOptions options;
    options.max_nodes = p.max_spectral_nodes;
    return spectral_partition(dataset.graph, p.num_subgraphs, sub, options);
  }
  if (p.method != PartitionMethod::flood_fill) {
    throw Error("partition: unsupported method " + to_string(p.method));
  }
  return flood_fill_partition(dataset.graph, p.num_subgraphs, dataset.train, sub);
}

Schedule build_schedule(const ExperimentConfig& config, const Dataset& dataset, std::uint64_t seed,
                        const Partition* partition) {
  const ScheduleSpec& s = config.schedule;
  const Graph& g = dataset.graph;
  switch (s.kind) {
  case ScheduleKind::synchronous:
    return synchronous_schedule(g, s.steps);
  case ScheduleKind::gpnn: {
    if (partition == nullptr) {
      throw Error("schedule: gpnn needs a partition");
    }
    const int intra = s.intra_steps ? *s.intra_steps : std::max(0, partition_stats(g, *partition).max_diameter);
    return gpnn_schedule(g, *partition, s.steps, intra, s.inter_steps, s.drop_final_inter);
  }
  case ScheduleKind::sequential:
    return sequential_schedule(g, s.root, s.steps);
  case ScheduleKind::mst:
    return mst_schedule(g, s.steps, derive_seed(seed, "schedule"));
  case ScheduleKind::random: {
    Schedule out;
    const std::uint64_t base = derive_seed(seed, "schedule");
    for (int t = 0; t < s.steps; ++t) {
      Schedule step = random_phase_schedule(g, s.random_chunks, derive_seed(base, "step-" + std::to_string(t)));
      if (t == 0) {
        out = std::move(step);
      } else {
        out.phases.insert(out.phases.end(), step.phases.begin(), step.phases.end());
      }
    }
    if (s.steps == 0) {
      out = synchronous_schedule(g, 0);
      out.kind = ScheduleKind::random;
    }
    out.params.steps = s.steps;
    return out;
  }
  }
  throw Error("schedule: unknown kind");
}

ModelConfig model_config_for(const ExperimentConfig& config, const Dataset& dataset) {
  ModelConfig m = config.model;
  m.num_nodes = dataset.num_nodes();
  m.num_edge_types = dataset.graph.num_edge_types();
  m.feature_dim = dataset.features.cols;
  m.num_classes = dataset.num_classes;
  if (m.input_mode == InputMode::feature && m.feature_dim == 0) {
    throw Error("model: feature input needs a feature file");
  }
  return m;
}

namespace {

struct RunOutput {
  RunResult result;
  std::string history;
  std::string partition;
  std::string schedule;
  std::string embeddings;
  std::string checkpoint;
};

RunOutput run_one(const ExperimentConfig& config, const Dataset& dataset, std::uint64_t seed) {
  RunOutput out;
  out.result.seed = seed;
  std::optional<Partition> partition;
  if (config.schedule.kind == ScheduleKind::gpnn) {
    partition = build_partition(config, dataset, seed);
    out.partition = format_partition(*partition);
  }
  const Schedule schedule = build_schedule(config, dataset, seed, partition ? &*partition : nullptr);
  out.schedule = format_schedule(schedule);
  out.result.phases = static_cast<int>(schedule.phases.size());
  out.result.messages = message_count(schedule);

  const PropagationPlan plan = compile_plan(dataset.graph, schedule);
  const ModelConfig model = model_config_for(config, dataset);
  const SparseMatrix* features = model.feature_dim > 0 ? &dataset.features : nullptr;
  ModelParams initial = ModelParams::initialize(model, derive_seed(seed, "model"), features);

  const TrainData data{features, dataset.labels, dataset.train, dataset.val};
  const TrainResult trained = train(plan, std::move(initial), data, config.train);
  out.result.epochs = static_cast<int>(trained.history.size());
  out.result.best_epoch = trained.best_epoch;
  for (const EpochRecord& r : trained.history) {
    OrderedJson row;
    row["epoch"] = r.epoch;
    row["train_loss"] = r.train_loss;
    row["val_acc"] = r.val_acc;
    out.history += format_metrics(MetricsReport{{row}});
  }

  const ForwardTape tape = forward(plan, trained.params, features, false);
  const std::vector<NodeId> any{0};
  const Matrix probs = readout_loss(tape.final_states, tape.initial, features,
                                    std::vector<int>(dataset.labels.size(), 0), any, trained.params, 0.0)
                           .probabilities;
  out.result.train_acc = accuracy(probs, dataset.labels, dataset.train);
  out.result.val_acc = accuracy(probs, dataset.labels, dataset.val);
  out.result.test_acc = dataset.test.empty() ? 0.0 : accuracy(probs, dataset.labels, dataset.test);

  for (int v = 0; v < tape.final_states.rows; ++v) {
    out.embeddings += std::to_string(v);
    for (const double x : tape.final_states.row(v)) {
      out.embeddings += '\t';
      detail::append_double(out.embeddings, x);
    }
    out.embeddings += '\n';
  }
  out.checkpoint = format_checkpoint(trained.params);
  return out;
}

OrderedJson run_row(const ExperimentConfig& config, const RunResult& r) {
  OrderedJson row;
  row["seed"] = r.seed;
  row["schedule"] = to_string(config.schedule.kind);
  row["steps"] = config.schedule.steps;
  if (config.schedule.kind == ScheduleKind::gpnn) {
    row["partition"] = to_string(config.partition.method);
    row["k"] = config.partition.num_subgraphs;
  }
  row["phases"] = r.phases;
  row["messages"] = r.messages;
  row["epochs"] = r.epochs;
  row["best_epoch"] = r.best_epoch;
  row["train_acc"] = r.train_acc;
  row["val_acc"] = r.val_acc;
  row["test_acc"] = r.test_acc;
  return row;
}

} // namespace

OrderedJson summarize_runs(const std::vector<RunResult>& runs) {
  OrderedJson row;
  row["summary"] = true;
  row["runs"] = runs.size();
  const std::pair<const char*, double RunResult::*> metrics[] = {
      {"train_acc", &RunResult::train_acc}, {"val_acc", &RunResult::val_acc}, {"test_acc", &RunResult::test_acc}};
  for (const auto& [name, field] : metrics) {
    double mean = 0.0;
    for (const RunResult& r : runs) {
      mean += r.*field;
    }
    mean /= static_cast<double>(std::max<std::size_t>(runs.size(), 1));
    double var = 0.0;
    for (const RunResult& r : runs) {
      var += (r.*field - mean) * (r.*field - mean);
    }
    const double std = runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0.0;
    row[std::string(name) + "_mean"] = mean;
    row[std::string(name) + "_std"] = std;
  }
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const Dataset dataset = build_dataset(config);
  std::vector<RunOutput> outputs(config.seeds.size());
  parallel_for(config.seeds.size(), config.threads, [&](std::size_t i) {
    try {
      outputs[i] = run_one(config, dataset, config.seeds[i]);
    } catch (const Error& e) {
      throw Error("run with seed " + std::to_string(config.seeds[i]) + " (schedule " +
                  to_string(config.schedule.kind) + "): " + e.what());
    }
  });

  ExperimentResult result;
  for (const RunOutput& o : outputs) {
    result.runs.push_back(o.result);
    result.report.rows.push_back(run_row(config, o.result));
  }
  result.report.rows.push_back(summarize_runs(result.runs));

  if (!config.output_dir.empty()) {
    emit_metrics(result.report, config.output_dir / "metrics.jsonl");
    for (const RunOutput& o : outputs) {
      const auto dir = config.output_dir / ("seed-" + std::to_string(o.result.seed));
      detail::write_text_file(dir / "history.jsonl", o.history);
      detail::write_text_file(dir / "schedule.txt", o.schedule);
      detail::write_text_file(dir / "embeddings.tsv", o.embeddings);
      detail::write_text_file(dir / "checkpoint.txt", o.checkpoint);
      if (!o.partition.empty()) {
        detail::write_text_file(dir / "partition.tsv", o.partition);
      }
    }
  }
  return result;
}

} // namespace gpnn

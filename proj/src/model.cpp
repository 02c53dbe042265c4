#include "gpnn/error.hpp"
#include "gpnn/gnn.hpp"
#include "gpnn/rng.hpp"

#include "kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace gpnn {

std::string to_string(InputMode v) { return v == InputMode::feature ? "feature" : "embedding"; }
std::string to_string(MessageKind v) { return v == MessageKind::affine ? "affine" : "identity"; }

std::string to_string(Aggregation v) {
  switch (v) {
  case Aggregation::sum:
    return "sum";
  case Aggregation::avg:
    return "avg";
  case Aggregation::max:
    return "max";
  }
  return "sum";
}

std::string to_string(ConcatMode v) {
  switch (v) {
  case ConcatMode::none:
    return "none";
  case ConcatMode::state:
    return "state";
  case ConcatMode::raw:
    return "raw";
  }
  return "none";
}

InputMode parse_input_mode(std::string_view s) {
  if (s == "feature") {
    return InputMode::feature;
  }
  if (s == "embedding") {
    return InputMode::embedding;
  }
  throw Error("unknown input mode '" + std::string(s) + "'");
}

MessageKind parse_message_kind(std::string_view s) {
  if (s == "affine") {
    return MessageKind::affine;
  }
  if (s == "identity") {
    return MessageKind::identity;
  }
  throw Error("unknown message kind '" + std::string(s) + "'");
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "sum") {
    return Aggregation::sum;
  }
  if (s == "avg") {
    return Aggregation::avg;
  }
  if (s == "max") {
    return Aggregation::max;
  }
  throw Error("unknown aggregation '" + std::string(s) + "'");
}

ConcatMode parse_concat_mode(std::string_view s) {
  if (s == "none") {
    return ConcatMode::none;
  }
  if (s == "state") {
    return ConcatMode::state;
  }
  if (s == "raw") {
    return ConcatMode::raw;
  }
  throw Error("unknown concat mode '" + std::string(s) + "'");
}

int ModelConfig::readout_dim() const {
  switch (concat) {
  case ConcatMode::none:
    return state_dim;
  case ConcatMode::state:
    return 2 * state_dim;
  case ConcatMode::raw:
    return state_dim + feature_dim;
  }
  return state_dim;
}

SparseMatrix SparseMatrix::from_rows(int cols, std::vector<std::vector<std::pair<int, double>>> rows) {
  SparseMatrix m(static_cast<int>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& entries = rows[r];
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, v] : entries) {
      m.indices.push_back(c);
      m.values.push_back(v);
    }
    m.offsets[r + 1] = static_cast<int>(m.indices.size());
  }
  return m;
}

std::vector<ModelParams::TensorRef> ModelParams::tensors() {
  std::vector<TensorRef> out;
  for (const auto& t : std::as_const(*this).tensors()) {
    out.push_back(TensorRef{t.name, const_cast<Matrix*>(t.value), t.role});
  }
  return out;
}

std::vector<ModelParams::ConstTensorRef> ModelParams::tensors() const {
  std::vector<ConstTensorRef> out;
  if (config.message == MessageKind::affine) {
    for (std::size_t c = 0; c < message_weight.size(); ++c) {
      out.push_back({"message_weight_" + std::to_string(c), &message_weight[c], TensorRole::weight});
      out.push_back({"message_bias_" + std::to_string(c), &message_bias[c], TensorRole::bias});
    }
  }
  out.push_back({"gru_w_r", &gru_w_r, TensorRole::weight});
  out.push_back({"gru_w_z", &gru_w_z, TensorRole::weight});
  out.push_back({"gru_w_h", &gru_w_h, TensorRole::weight});
  out.push_back({"gru_u_r", &gru_u_r, TensorRole::weight});
  out.push_back({"gru_u_z", &gru_u_z, TensorRole::weight});
  out.push_back({"gru_u_h", &gru_u_h, TensorRole::weight});
  out.push_back({"gru_b_r", &gru_b_r, TensorRole::bias});
  out.push_back({"gru_b_z", &gru_b_z, TensorRole::bias});
  out.push_back({"gru_b_h", &gru_b_h, TensorRole::bias});
  if (config.input_mode == InputMode::embedding) {
    out.push_back({"embedding", &embedding, TensorRole::embedding});
  } else {
    out.push_back({"input_weight", &input_weight, TensorRole::weight});
  }
  if (config.hidden_dim > 0) {
    out.push_back({"hidden_weight", &hidden_weight, TensorRole::weight});
    out.push_back({"hidden_bias", &hidden_bias, TensorRole::bias});
  }
  out.push_back({"output_weight", &output_weight, TensorRole::weight});
  out.push_back({"output_bias", &output_bias, TensorRole::bias});
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) {
    n += t.value->size();
  }
  return n;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (!(a.config == b.config)) {
    return false;
  }
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(*ta[i].value == *tb[i].value)) {
      return false;
    }
  }
  return true;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  const int d = config.state_dim;
  if (d < 1 || config.num_edge_types < 1 || config.num_classes < 1 || config.num_nodes < 0 ||
      config.feature_dim < 0 || config.hidden_dim < 0) {
    throw Error("model: invalid dimensions");
  }
  if (config.input_mode == InputMode::feature && config.feature_dim < 1) {
    throw Error("model: feature input requires a positive feature dimension");
  }
  ModelParams p;
  p.config = config;
  if (config.message == MessageKind::affine) {
    p.message_weight.assign(static_cast<std::size_t>(config.num_edge_types), Matrix(d, d));
    p.message_bias.assign(static_cast<std::size_t>(config.num_edge_types), Matrix(1, d));
  }
  for (Matrix* m : {&p.gru_w_r, &p.gru_w_z, &p.gru_w_h, &p.gru_u_r, &p.gru_u_z, &p.gru_u_h}) {
    *m = Matrix(d, d);
  }
  for (Matrix* m : {&p.gru_b_r, &p.gru_b_z, &p.gru_b_h}) {
    *m = Matrix(1, d);
  }
  if (config.input_mode == InputMode::embedding) {
    p.embedding = Matrix(config.num_nodes, d);
  } else {
    p.input_weight = Matrix(config.feature_dim, d);
  }
  int head_in = config.readout_dim();
  if (config.hidden_dim > 0) {
    p.hidden_weight = Matrix(head_in, config.hidden_dim);
    p.hidden_bias = Matrix(1, config.hidden_dim);
    head_in = config.hidden_dim;
  }
  p.output_weight = Matrix(head_in, config.num_classes);
  p.output_bias = Matrix(1, config.num_classes);
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed,
                                    const SparseMatrix* observed_features) {
  ModelParams p = zeros(config);
  Rng rng(seed);
  for (auto& t : p.tensors()) {
    if (t.role == TensorRole::bias) {
      continue;
    }
    if (t.role == TensorRole::embedding) {
      for (double& v : t.value->data) {
        v = rng.uniform(-0.1, 0.1);
      }
      continue;
    }
    // Message and GRU matrices are used as M x, so fan-in is the column count;
    // head matrices are used as x W, so fan-in is the row count.
    const bool column_form = t.name.starts_with("message") || t.name.starts_with("gru");
    const int fan_in = column_form ? t.value->cols : t.value->rows;
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
    for (double& v : t.value->data) {
      v = rng.uniform(-bound, bound);
    }
  }
  if (config.input_mode == InputMode::embedding && observed_features != nullptr) {
    if (observed_features->rows != config.num_nodes) {
      throw Error("model: observed feature rows do not match the node count");
    }
    for (int v = 0; v < config.num_nodes; ++v) {
      if (observed_features->row_nnz(v) == 0) {
        continue;
      }
      auto row = p.embedding.row(v);
      const int width = std::min(config.state_dim, observed_features->cols);
      std::fill(row.begin(), row.begin() + width, 0.0);
      const auto idx = observed_features->row_indices(v);
      const auto val = observed_features->row_values(v);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < width) {
          row[static_cast<std::size_t>(idx[i])] = val[i];
        }
      }
    }
  }
  return p;
}

Matrix init_states(const ModelParams& params, const SparseMatrix* features) {
  const ModelConfig& c = params.config;
  if (c.input_mode == InputMode::embedding) {
    return params.embedding;
  }
  if (features == nullptr || features->cols != c.feature_dim || features->rows != c.num_nodes) {
    throw Error("init_states: feature matrix shape does not match the model (expected " +
                std::to_string(c.num_nodes) + " x " + std::to_string(c.feature_dim) + ")");
  }
  Matrix h(c.num_nodes, c.state_dim);
  for (int v = 0; v < c.num_nodes; ++v) {
    auto out = h.row(v);
    const auto idx = features->row_indices(v);
    const auto val = features->row_values(v);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto w = params.input_weight.row(idx[i]);
      for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] += val[i] * w[j];
      }
    }
  }
  return h;
}

std::vector<double> message(std::span<const double> state, EdgeType type, const ModelParams& params) {
  if (params.config.message == MessageKind::identity) {
    return {state.begin(), state.end()};
  }
  if (type < 0 || type >= params.config.num_edge_types) {
    throw Error("message: edge type " + std::to_string(type) + " out of range");
  }
  const auto& b = params.message_bias[static_cast<std::size_t>(type)];
  std::vector<double> out(b.data.begin(), b.data.end());
  detail::matvec_add(params.message_weight[static_cast<std::size_t>(type)], state, out);
  return out;
}

std::vector<double> aggregate(const std::vector<std::vector<double>>& messages, Aggregation kind,
                              int dim) {
  std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
  if (messages.empty()) {
    return out;
  }
  if (kind == Aggregation::max) {
    out = messages.front();
    for (std::size_t m = 1; m < messages.size(); ++m) {
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::max(out[i], messages[m][i]);
      }
    }
    return out;
  }
  for (const auto& m : messages) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += m[i];
    }
  }
  if (kind == Aggregation::avg) {
    for (double& v : out) {
      v /= static_cast<double>(messages.size());
    }
  }
  return out;
}

std::vector<double> gru_update(std::span<const double> state, std::span<const double> aggregated,
                               const ModelParams& params) {
  const auto d = state.size();
  std::vector<double> r(d), z(d), candidate(d), out(d), gated(d);
  detail::gru_forward(params, state, aggregated, r, z, candidate, out, gated);
  return out;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

} // namespace

std::string format_checkpoint(const ModelParams& params) {
  const ModelConfig& c = params.config;
  std::string out = "gpnn-checkpoint 1\n";
  out += "config num_nodes=" + std::to_string(c.num_nodes) + " state_dim=" + std::to_string(c.state_dim) +
         " num_edge_types=" + std::to_string(c.num_edge_types) + " feature_dim=" +
         std::to_string(c.feature_dim) + " num_classes=" + std::to_string(c.num_classes) +
         " hidden_dim=" + std::to_string(c.hidden_dim) + " input=" + to_string(c.input_mode) +
         " message=" + to_string(c.message) + " aggregation=" + to_string(c.aggregation) +
         " concat=" + to_string(c.concat) + "\n";
  for (const auto& t : params.tensors()) {
    out += "tensor " + t.name + " " + std::to_string(t.value->rows) + " " +
           std::to_string(t.value->cols) + "\n";
    for (std::size_t i = 0; i < t.value->data.size(); ++i) {
      if (i > 0) {
        out += ' ';
      }
      append_double(out, t.value->data[i]);
    }
    out += "\n";
  }
  return out;
}

ModelParams parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "gpnn-checkpoint 1") {
    throw ParseError("checkpoint: missing header");
  }
  if (!std::getline(in, line) || !line.starts_with("config ")) {
    throw ParseError("checkpoint: missing config line");
  }
  ModelConfig c;
  {
    std::istringstream fields(line.substr(7));
    std::string field;
    while (fields >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) {
        throw ParseError("checkpoint: malformed config field '" + field + "'");
      }
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "input") {
        c.input_mode = parse_input_mode(value);
      } else if (key == "message") {
        c.message = parse_message_kind(value);
      } else if (key == "aggregation") {
        c.aggregation = parse_aggregation(value);
      } else if (key == "concat") {
        c.concat = parse_concat_mode(value);
      } else {
        const int n = std::stoi(value);
        if (key == "num_nodes") {
          c.num_nodes = n;
        } else if (key == "state_dim") {
          c.state_dim = n;
        } else if (key == "num_edge_types") {
          c.num_edge_types = n;
        } else if (key == "feature_dim") {
          c.feature_dim = n;
        } else if (key == "num_classes") {
          c.num_classes = n;
        } else if (key == "hidden_dim") {
          c.hidden_dim = n;
        } else {
          throw ParseError("checkpoint: unknown config key '" + key + "'");
        }
      }
    }
  }
  ModelParams p = ModelParams::zeros(c);
  for (auto& t : p.tensors()) {
    if (!std::getline(in, line)) {
      throw ParseError("checkpoint: missing tensor " + t.name);
    }
    std::istringstream head(line);
    std::string tag, name;
    int rows = 0, cols = 0;
    head >> tag >> name >> rows >> cols;
    if (tag != "tensor" || name != t.name || rows != t.value->rows || cols != t.value->cols) {
      throw ParseError("checkpoint: expected tensor " + t.name + " " + std::to_string(t.value->rows) +
                       "x" + std::to_string(t.value->cols) + ", found '" + line + "'");
    }
    if (!std::getline(in, line)) {
      throw ParseError("checkpoint: missing values for " + t.name);
    }
    const char* pos = line.data();
    const char* end = line.data() + line.size();
    for (double& v : t.value->data) {
      while (pos < end && *pos == ' ') {
        ++pos;
      }
      const auto [ptr, ec] = std::from_chars(pos, end, v);
      if (ec != std::errc{}) {
        throw ParseError("checkpoint: bad value in tensor " + t.name);
      }
      pos = ptr;
    }
  }
  return p;
}

} // namespace gpnn

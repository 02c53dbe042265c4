#pragma once

#include "gpnn/graph.hpp"
#include "gpnn/schedule.hpp"
#include "gpnn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpnn {

enum class InputMode { feature, embedding };
enum class MessageKind { affine, identity };
enum class Aggregation { sum, avg, max };
/// What the output head sees next to the final state: nothing, the initial
/// (reduced or embedded) state, or the raw sparse features.
enum class ConcatMode { none, state, raw };

std::string to_string(InputMode v);
std::string to_string(MessageKind v);
std::string to_string(Aggregation v);
std::string to_string(ConcatMode v);
InputMode parse_input_mode(std::string_view s);
MessageKind parse_message_kind(std::string_view s);
Aggregation parse_aggregation(std::string_view s);
ConcatMode parse_concat_mode(std::string_view s);

struct ModelConfig {
  int num_nodes = 0;
  int state_dim = 16;
  int num_edge_types = 1;
  int feature_dim = 0;
  int num_classes = 2;
  /// Width of the optional tanh layer before the logits; 0 disables it.
  int hidden_dim = 0;
  InputMode input_mode = InputMode::feature;
  MessageKind message = MessageKind::affine;
  Aggregation aggregation = Aggregation::avg;
  ConcatMode concat = ConcatMode::none;

  /// Width of the vector fed to the output head.
  [[nodiscard]] int readout_dim() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class TensorRole { weight, bias, embedding };

/// All trainable tensors.
///
/// Message and GRU matrices act on column vectors (m = M h + b). Input and
/// output heads act on row vectors (H0 = X W_in, logits = z W_out + b).
struct ModelParams {
  ModelConfig config;
  std::vector<Matrix> message_weight; // C of d x d
  std::vector<Matrix> message_bias;   // C of 1 x d
  Matrix gru_w_r, gru_w_z, gru_w_h;   // d x d, applied to the aggregated message
  Matrix gru_u_r, gru_u_z, gru_u_h;   // d x d, applied to the state
  Matrix gru_b_r, gru_b_z, gru_b_h;   // 1 x d
  Matrix embedding;                   // N x d, embedding input only
  Matrix input_weight;                // F x d, feature input only
  Matrix hidden_weight, hidden_bias;  // readout_dim x H, 1 x H (hidden_dim > 0)
  Matrix output_weight, output_bias;  // (H or readout_dim) x classes, 1 x classes

  struct TensorRef {
    std::string name;
    Matrix* value;
    TensorRole role;
  };
  struct ConstTensorRef {
    std::string name;
    const Matrix* value;
    TensorRole role;
  };

  /// Every tensor present for this config, in a fixed order.
  std::vector<TensorRef> tensors();
  [[nodiscard]] std::vector<ConstTensorRef> tensors() const;
  [[nodiscard]] std::size_t parameter_count() const;

  /// All tensors shaped for `config` and zero-filled.
  static ModelParams zeros(const ModelConfig& config);

  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0, embeddings
  /// ~ U(-0.1, 0.1). Under embedding input, nodes with a nonempty feature row
  /// copy their first min(F, d) feature values into their embedding row.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed,
                                const SparseMatrix* observed_features = nullptr);

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

/// Node states at step 0: X W_in (feature input) or the embedding table.
Matrix init_states(const ModelParams& params, const SparseMatrix* features);

/// M_c h + b_c, or h itself for identity messages.
std::vector<double> message(std::span<const double> state, EdgeType type, const ModelParams& params);

/// Elementwise reduction in the given order; an empty list gives zeros.
std::vector<double> aggregate(const std::vector<std::vector<double>>& messages, Aggregation kind,
                              int dim);

/// GRU with the aggregated message as input and the node state as hidden state.
std::vector<double> gru_update(std::span<const double> state, std::span<const double> aggregated,
                               const ModelParams& params);

/// Per-phase receivers and their incoming edges, precomputed once per
/// (graph, schedule) pair.
struct PhasePlan {
  std::vector<NodeId> receivers;               // ascending
  std::vector<int> offsets;                    // receivers.size() + 1
  std::vector<int> edge_source;                // per incoming edge: index into sources
  std::vector<std::pair<NodeId, EdgeType>> sources;
};

struct PropagationPlan {
  int num_nodes = 0;
  std::vector<PhasePlan> phases;
};

PropagationPlan compile_plan(const Graph& graph, const Schedule& schedule);

/// Activations recorded by the forward pass for backpropagation.
struct ForwardTape {
  struct PhaseRecord {
    std::vector<double> messages;  // sources x d
    std::vector<double> prev;      // receivers x d
    std::vector<double> aggregated;
    std::vector<double> reset;
    std::vector<double> update;
    std::vector<double> candidate;
    std::vector<int> argmax;       // receivers x d, index into the receiver's edges (max only)
  };
  Matrix initial;
  Matrix final_states;
  std::vector<PhaseRecord> phases;
};

/// Runs every phase: messages from pre-phase states, aggregation at nodes
/// that received at least one message, GRU update of those nodes only.
/// Throws with the phase index if a state becomes non-finite.
ForwardTape forward(const PropagationPlan& plan, const ModelParams& params,
                    const SparseMatrix* features, bool keep_tape = true);

Matrix propagate(const Graph& graph, const Schedule& schedule, const Matrix& states,
                 const ModelParams& params);

struct ReadoutResult {
  double loss = 0.0;       // data loss + weight decay
  double data_loss = 0.0;  // mean cross-entropy over the mask
  Matrix probabilities;    // N x classes
};

/// Softmax cross-entropy averaged over `mask`, plus weight_decay/2 times the
/// squared norm of every weight matrix (biases and embeddings excluded).
ReadoutResult readout_loss(const Matrix& final_states, const Matrix& initial_states,
                           const SparseMatrix* features, std::span<const int> labels,
                           std::span<const NodeId> mask, const ModelParams& params,
                           double weight_decay);

struct Batch {
  const SparseMatrix* features = nullptr;
  std::span<const int> labels;
  std::span<const NodeId> mask;
  double weight_decay = 0.0;
};

/// Backpropagation through the recorded phases given dL/dH_T and an extra
/// dL/dH_0 term (from the output head). Returns gradients of the propagation
/// and input parameters; head tensors are left at zero.
ModelParams backward(const PropagationPlan& plan, const ModelParams& params, const ForwardTape& tape,
                     const SparseMatrix* features, const Matrix& grad_final,
                     const Matrix& grad_initial);

struct LossAndGradients {
  ReadoutResult readout;
  ModelParams gradients;
};

/// Exact gradient of readout_loss after forward propagation under `plan`.
LossAndGradients loss_and_gradients(const PropagationPlan& plan, const ModelParams& params,
                                    const Batch& batch);

/// Class probabilities for every node.
Matrix predict(const PropagationPlan& plan, const ModelParams& params, const SparseMatrix* features);

/// Fraction of `split` whose argmax (lowest class on ties) matches the label.
double accuracy(const Matrix& probabilities, std::span<const int> labels, std::span<const NodeId> split);

/// Fraction of positive nodes in `split` ranked within the top k by the
/// positive-class probability (ties broken by node id).
double recall_at_k(const Matrix& probabilities, std::span<const int> labels,
                   std::span<const NodeId> split, int positive_class, int k);

struct TrainConfig {
  double learning_rate = 0.01;
  int max_epochs = 100;
  int early_stop_window = 10;
  double grad_clip = 5.0;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainData {
  const SparseMatrix* features = nullptr;
  std::span<const int> labels;
  std::span<const NodeId> train;
  std::span<const NodeId> val;
};

struct TrainResult {
  ModelParams params; // best validation accuracy
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_acc = 0.0;
};

/// Adam with decoupled moments per tensor.
class AdamOptimizer {
public:
  AdamOptimizer(const ModelParams& params, const TrainConfig& config);
  void step(ModelParams& params, const ModelParams& gradients);

private:
  TrainConfig config_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  long long t_ = 0;
};

/// Scales gradients so their global L2 norm is at most max_norm; returns the
/// norm before clipping.
double clip_gradients(ModelParams& gradients, double max_norm);

/// Full-batch training: each epoch computes loss, gradients and validation
/// accuracy at the current parameters, then takes one clipped Adam step.
/// Stops after `early_stop_window` epochs without a strict validation gain.
TrainResult train(const PropagationPlan& plan, ModelParams initial, const TrainData& data,
                  const TrainConfig& config);

/// Text checkpoint: header, config line, then "tensor name rows cols" and a
/// line of values per tensor.
std::string format_checkpoint(const ModelParams& params);
ModelParams parse_checkpoint(std::string_view text);

} // namespace gpnn

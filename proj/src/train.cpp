#include "gpnn/error.hpp"
#include "gpnn/gnn.hpp"

#include <cmath>

namespace gpnn {

AdamOptimizer::AdamOptimizer(const ModelParams& params, const TrainConfig& config) : config_(config) {
  for (const auto& t : params.tensors()) {
    first_.emplace_back(t.value->size(), 0.0);
    second_.emplace_back(t.value->size(), 0.0);
  }
}

void AdamOptimizer::step(ModelParams& params, const ModelParams& gradients) {
  auto values = params.tensors();
  const auto grads = gradients.tensors();
  if (values.size() != first_.size() || grads.size() != values.size()) {
    throw Error("adam: parameter layout changed between steps");
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& w = values[i].value->data;
    const auto& g = grads[i].value->data;
    auto& m = first_[i];
    auto& v = second_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / correction1;
      const double vhat = v[k] / correction2;
      w[k] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

double clip_gradients(ModelParams& gradients, double max_norm) {
  double sq = 0.0;
  for (const auto& t : std::as_const(gradients).tensors()) {
    for (const double g : t.value->data) {
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& t : gradients.tensors()) {
      for (double& g : t.value->data) {
        g *= scale;
      }
    }
  }
  return norm;
}

TrainResult train(const PropagationPlan& plan, ModelParams initial, const TrainData& data,
                  const TrainConfig& config) {
  if (data.train.empty()) {
    throw Error("train: empty training split");
  }
  if (data.val.empty()) {
    throw Error("train: empty validation split");
  }
  if (config.max_epochs < 1 || config.early_stop_window < 1) {
    throw Error("train: max_epochs and early_stop_window must be positive");
  }
  TrainResult result;
  ModelParams params = std::move(initial);
  AdamOptimizer optimizer(params, config);
  const Batch batch{data.features, data.labels, data.train, config.weight_decay};
  result.best_val_acc = -1.0;
  int since_best = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    LossAndGradients lg = loss_and_gradients(plan, params, batch);
    if (!std::isfinite(lg.readout.loss)) {
      throw Error("training diverged at epoch " + std::to_string(epoch) + ": loss is not finite");
    }
    const double val_acc = accuracy(lg.readout.probabilities, data.labels, data.val);
    result.history.push_back({epoch, lg.readout.loss, val_acc});
    if (val_acc > result.best_val_acc) {
      result.best_val_acc = val_acc;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= config.early_stop_window) {
      break;
    }
    const double norm = clip_gradients(lg.gradients, config.grad_clip);
    if (!std::isfinite(norm)) {
      throw Error("training diverged at epoch " + std::to_string(epoch) + ": gradient is not finite");
    }
    optimizer.step(params, lg.gradients);
  }
  return result;
}

} // namespace gpnn

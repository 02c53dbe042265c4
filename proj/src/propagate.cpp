#include "gpnn/error.hpp"
#include "gpnn/gnn.hpp"

#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace gpnn {

PropagationPlan compile_plan(const Graph& graph, const Schedule& schedule) {
  schedule.check_compatible(graph);
  PropagationPlan plan;
  plan.num_nodes = graph.num_nodes();
  plan.phases.reserve(schedule.phases.size());
  std::vector<EdgeId> order;
  for (const Phase& phase : schedule.phases) {
    order.assign(phase.edges.begin(), phase.edges.end());
    std::sort(order.begin(), order.end(), [&](EdgeId a, EdgeId b) {
      const NodeId da = graph.edge(a).dst;
      const NodeId db = graph.edge(b).dst;
      return da != db ? da < db : a < b;
    });
    PhasePlan pp;
    std::map<std::pair<NodeId, EdgeType>, int> source_index;
    for (const EdgeId e : order) {
      const Edge& edge = graph.edge(e);
      if (pp.receivers.empty() || pp.receivers.back() != edge.dst) {
        pp.receivers.push_back(edge.dst);
        pp.offsets.push_back(static_cast<int>(pp.edge_source.size()));
      }
      const auto [it, inserted] =
          source_index.try_emplace({edge.src, edge.type}, static_cast<int>(pp.sources.size()));
      if (inserted) {
        pp.sources.emplace_back(edge.src, edge.type);
      }
      pp.edge_source.push_back(it->second);
    }
    pp.offsets.push_back(static_cast<int>(pp.edge_source.size()));
    plan.phases.push_back(std::move(pp));
  }
  return plan;
}

namespace {

void compute_messages(const PhasePlan& pp, const ModelParams& params, const Matrix& states,
                      std::vector<double>& out) {
  const auto d = static_cast<std::size_t>(params.config.state_dim);
  out.assign(pp.sources.size() * d, 0.0);
  for (std::size_t s = 0; s < pp.sources.size(); ++s) {
    const auto [u, type] = pp.sources[s];
    const auto h = states.row(u);
    std::span<double> m(out.data() + s * d, d);
    if (params.config.message == MessageKind::identity) {
      std::copy(h.begin(), h.end(), m.begin());
    } else {
      const auto& b = params.message_bias[static_cast<std::size_t>(type)].data;
      std::copy(b.begin(), b.end(), m.begin());
      detail::matvec_add(params.message_weight[static_cast<std::size_t>(type)], h, m);
    }
  }
}

// Aggregates one receiver's messages; `argmax` (max only) receives the index
// within the receiver's edge range of the winning message per dimension.
void aggregate_receiver(const PhasePlan& pp, std::size_t i, std::span<const double> messages,
                        Aggregation kind, std::span<double> out, std::span<int> argmax) {
  const auto d = out.size();
  const auto begin = static_cast<std::size_t>(pp.offsets[i]);
  const auto end = static_cast<std::size_t>(pp.offsets[i + 1]);
  auto msg = [&](std::size_t k) {
    return messages.subspan(static_cast<std::size_t>(pp.edge_source[k]) * d, d);
  };
  if (kind == Aggregation::max) {
    const auto first = msg(begin);
    std::copy(first.begin(), first.end(), out.begin());
    std::fill(argmax.begin(), argmax.end(), 0);
    for (std::size_t k = begin + 1; k < end; ++k) {
      const auto m = msg(k);
      for (std::size_t j = 0; j < d; ++j) {
        if (m[j] > out[j]) {
          out[j] = m[j];
          argmax[j] = static_cast<int>(k - begin);
        }
      }
    }
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = begin; k < end; ++k) {
    const auto m = msg(k);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] += m[j];
    }
  }
  if (kind == Aggregation::avg) {
    const double count = static_cast<double>(end - begin);
    for (double& v : out) {
      v /= count;
    }
  }
}

} // namespace

ForwardTape forward(const PropagationPlan& plan, const ModelParams& params,
                    const SparseMatrix* features, bool keep_tape) {
  const ModelConfig& c = params.config;
  if (plan.num_nodes != c.num_nodes) {
    throw Error("forward: plan has " + std::to_string(plan.num_nodes) + " nodes, model expects " +
                std::to_string(c.num_nodes));
  }
  const auto d = static_cast<std::size_t>(c.state_dim);
  ForwardTape tape;
  tape.initial = init_states(params, features);
  Matrix states = tape.initial;
  if (keep_tape) {
    tape.phases.resize(plan.phases.size());
  }
  std::vector<double> messages, agg(d), r(d), z(d), cand(d), gated(d), next(d);
  std::vector<int> argmax(d);
  for (std::size_t p = 0; p < plan.phases.size(); ++p) {
    const PhasePlan& pp = plan.phases[p];
    compute_messages(pp, params, states, messages);
    const std::size_t nr = pp.receivers.size();
    ForwardTape::PhaseRecord* rec = keep_tape ? &tape.phases[p] : nullptr;
    if (rec != nullptr) {
      rec->prev.resize(nr * d);
      rec->aggregated.resize(nr * d);
      rec->reset.resize(nr * d);
      rec->update.resize(nr * d);
      rec->candidate.resize(nr * d);
      if (c.aggregation == Aggregation::max) {
        rec->argmax.resize(nr * d);
      }
    }
    for (std::size_t i = 0; i < nr; ++i) {
      const NodeId v = pp.receivers[i];
      auto h = states.row(v);
      aggregate_receiver(pp, i, messages, c.aggregation, agg, argmax);
      detail::gru_forward(params, h, agg, r, z, cand, next, gated);
      if (rec != nullptr) {
        const auto at = static_cast<std::ptrdiff_t>(i * d);
        std::copy(h.begin(), h.end(), rec->prev.begin() + at);
        std::copy(agg.begin(), agg.end(), rec->aggregated.begin() + at);
        std::copy(r.begin(), r.end(), rec->reset.begin() + at);
        std::copy(z.begin(), z.end(), rec->update.begin() + at);
        std::copy(cand.begin(), cand.end(), rec->candidate.begin() + at);
        if (c.aggregation == Aggregation::max) {
          std::copy(argmax.begin(), argmax.end(), rec->argmax.begin() + at);
        }
      }
      for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(next[j])) {
          throw Error("propagation produced a non-finite state at phase " + std::to_string(p) +
                      " (node " + std::to_string(v) + ")");
        }
      }
      // Messages were computed before any update, so writing in place keeps
      // barrier semantics.
      std::copy(next.begin(), next.end(), h.begin());
    }
    if (rec != nullptr) {
      rec->messages = messages;
    }
  }
  tape.final_states = std::move(states);
  return tape;
}

Matrix propagate(const Graph& graph, const Schedule& schedule, const Matrix& states,
                 const ModelParams& params) {
  const PropagationPlan plan = compile_plan(graph, schedule);
  if (states.rows != graph.num_nodes() || states.cols != params.config.state_dim) {
    throw Error("propagate: state matrix shape mismatch");
  }
  const auto d = static_cast<std::size_t>(params.config.state_dim);
  Matrix h = states;
  std::vector<double> messages, agg(d), r(d), z(d), cand(d), gated(d), next(d);
  std::vector<int> argmax(d);
  for (std::size_t p = 0; p < plan.phases.size(); ++p) {
    const PhasePlan& pp = plan.phases[p];
    compute_messages(pp, params, h, messages);
    for (std::size_t i = 0; i < pp.receivers.size(); ++i) {
      auto row = h.row(pp.receivers[i]);
      aggregate_receiver(pp, i, messages, params.config.aggregation, agg, argmax);
      detail::gru_forward(params, row, agg, r, z, cand, next, gated);
      for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(next[j])) {
          throw Error("propagation produced a non-finite state at phase " + std::to_string(p));
        }
      }
      std::copy(next.begin(), next.end(), row.begin());
    }
  }
  return h;
}

namespace {

// Output head over z_v = [h_T(v); extra(v)]; extra is H_0(v) or the sparse
// feature row depending on the concat mode.
struct HeadInput {
  const ModelConfig& config;
  const Matrix& final_states;
  const Matrix& initial_states;
  const SparseMatrix* features;

  [[nodiscard]] int dense_dim() const {
    return config.concat == ConcatMode::state ? 2 * config.state_dim : config.state_dim;
  }

  void dense(NodeId v, std::span<double> out) const {
    const auto h = final_states.row(v);
    std::copy(h.begin(), h.end(), out.begin());
    if (config.concat == ConcatMode::state) {
      const auto h0 = initial_states.row(v);
      std::copy(h0.begin(), h0.end(), out.begin() + static_cast<std::ptrdiff_t>(h.size()));
    }
  }

  // out += z W (W has readout_dim rows).
  void affine(NodeId v, std::span<const double> zdense, const Matrix& w, std::span<double> out) const {
    for (std::size_t i = 0; i < zdense.size(); ++i) {
      const double x = zdense[i];
      const auto r = w.row(static_cast<int>(i));
      for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] += x * r[j];
      }
    }
    if (config.concat == ConcatMode::raw) {
      const auto idx = features->row_indices(v);
      const auto val = features->row_values(v);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto r = w.row(config.state_dim + idx[k]);
        for (std::size_t j = 0; j < out.size(); ++j) {
          out[j] += val[k] * r[j];
        }
      }
    }
  }

  // dW += z^T g, and dz_dense = W[0:dense] g.
  void affine_backward(NodeId v, std::span<const double> zdense, const Matrix& w,
                       std::span<const double> g, Matrix& dw, std::span<double> dz) const {
    for (std::size_t i = 0; i < zdense.size(); ++i) {
      auto dr = dw.row(static_cast<int>(i));
      const auto r = w.row(static_cast<int>(i));
      double acc = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        dr[j] += zdense[i] * g[j];
        acc += r[j] * g[j];
      }
      dz[i] = acc;
    }
    if (config.concat == ConcatMode::raw) {
      const auto idx = features->row_indices(v);
      const auto val = features->row_values(v);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        auto dr = dw.row(config.state_dim + idx[k]);
        for (std::size_t j = 0; j < g.size(); ++j) {
          dr[j] += val[k] * g[j];
        }
      }
    }
  }
};

double weight_penalty(const ModelParams& params) {
  double s = 0.0;
  for (const auto& t : params.tensors()) {
    if (t.role != TensorRole::weight) {
      continue;
    }
    for (const double v : t.value->data) {
      s += v * v;
    }
  }
  return 0.5 * s;
}

// Computes the readout; when `grads` is given also fills head gradients and
// dL/dH_T, dL/dH_0 (weight decay excluded).
ReadoutResult readout_impl(const Matrix& final_states, const Matrix& initial_states,
                           const SparseMatrix* features, std::span<const int> labels,
                           std::span<const NodeId> mask, const ModelParams& params, double weight_decay,
                           ModelParams* grads, Matrix* grad_final, Matrix* grad_initial) {
  const ModelConfig& c = params.config;
  if (mask.empty()) {
    throw Error("readout: empty mask");
  }
  if (c.concat == ConcatMode::raw &&
      (features == nullptr || features->cols != c.feature_dim || features->rows != c.num_nodes)) {
    throw Error("readout: raw concat needs the feature matrix");
  }
  const HeadInput head{c, final_states, initial_states, features};
  const int n = final_states.rows;
  const auto classes = static_cast<std::size_t>(c.num_classes);
  const auto hid = static_cast<std::size_t>(c.hidden_dim);

  ReadoutResult result;
  result.probabilities = Matrix(n, c.num_classes);
  std::vector<double> z(static_cast<std::size_t>(head.dense_dim()));
  std::vector<double> hidden(hid);
  std::vector<double> logits(classes);
  std::vector<char> in_mask(static_cast<std::size_t>(n), 0);
  for (const NodeId v : mask) {
    if (v < 0 || v >= n) {
      throw Error("readout: mask node " + std::to_string(v) + " out of range");
    }
    if (labels[static_cast<std::size_t>(v)] < 0 || labels[static_cast<std::size_t>(v)] >= c.num_classes) {
      throw Error("readout: mask node " + std::to_string(v) + " has no valid label");
    }
    in_mask[static_cast<std::size_t>(v)] = 1;
  }
  // Log-sum-exp minus the label logit, per masked node.
  std::vector<double> node_loss(static_cast<std::size_t>(n), 0.0);
  for (NodeId v = 0; v < n; ++v) {
    head.dense(v, z);
    if (hid > 0) {
      std::copy(params.hidden_bias.data.begin(), params.hidden_bias.data.end(), hidden.begin());
      head.affine(v, z, params.hidden_weight, hidden);
      for (double& a : hidden) {
        a = std::tanh(a);
      }
      std::copy(params.output_bias.data.begin(), params.output_bias.data.end(), logits.begin());
      detail::row_affine(hidden, params.output_weight, logits);
    } else {
      std::copy(params.output_bias.data.begin(), params.output_bias.data.end(), logits.begin());
      head.affine(v, z, params.output_weight, logits);
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (const double l : logits) {
      sum += std::exp(l - top);
    }
    const double lse = top + std::log(sum);
    auto prob = result.probabilities.row(v);
    for (std::size_t k = 0; k < classes; ++k) {
      prob[k] = std::exp(logits[k] - lse);
    }
    if (in_mask[static_cast<std::size_t>(v)]) {
      node_loss[static_cast<std::size_t>(v)] =
          lse - logits[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])];
    }
    if (grads == nullptr || !in_mask[static_cast<std::size_t>(v)]) {
      continue;
    }
    const double scale = 1.0 / static_cast<double>(mask.size());
    std::vector<double> g(classes);
    for (std::size_t k = 0; k < classes; ++k) {
      g[k] = prob[k] * scale;
    }
    g[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])] -= scale;
    std::vector<double> dz(z.size());
    if (hid > 0) {
      detail::outer_add(grads->output_weight, hidden, g);
      std::vector<double> dhidden(hid, 0.0);
      for (std::size_t i = 0; i < hid; ++i) {
        const auto r = params.output_weight.row(static_cast<int>(i));
        double acc = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
          acc += r[k] * g[k];
        }
        dhidden[i] = acc * (1.0 - hidden[i] * hidden[i]);
      }
      for (std::size_t k = 0; k < classes; ++k) {
        grads->output_bias.data[k] += g[k];
      }
      for (std::size_t i = 0; i < hid; ++i) {
        grads->hidden_bias.data[i] += dhidden[i];
      }
      head.affine_backward(v, z, params.hidden_weight, dhidden, grads->hidden_weight, dz);
    } else {
      for (std::size_t k = 0; k < classes; ++k) {
        grads->output_bias.data[k] += g[k];
      }
      head.affine_backward(v, z, params.output_weight, g, grads->output_weight, dz);
    }
    const auto d = static_cast<std::size_t>(c.state_dim);
    auto gf = grad_final->row(v);
    for (std::size_t j = 0; j < d; ++j) {
      gf[j] += dz[j];
    }
    if (c.concat == ConcatMode::state) {
      auto gi = grad_initial->row(v);
      for (std::size_t j = 0; j < d; ++j) {
        gi[j] += dz[d + j];
      }
    }
  }
  double total = 0.0;
  for (const NodeId v : mask) {
    total += node_loss[static_cast<std::size_t>(v)];
  }
  result.data_loss = total / static_cast<double>(mask.size());
  result.loss = result.data_loss + weight_decay * weight_penalty(params);
  return result;
}

} // namespace

ReadoutResult readout_loss(const Matrix& final_states, const Matrix& initial_states,
                           const SparseMatrix* features, std::span<const int> labels,
                           std::span<const NodeId> mask, const ModelParams& params,
                           double weight_decay) {
  return readout_impl(final_states, initial_states, features, labels, mask, params, weight_decay,
                      nullptr, nullptr, nullptr);
}

ModelParams backward(const PropagationPlan& plan, const ModelParams& params, const ForwardTape& tape,
                     const SparseMatrix* features, const Matrix& grad_final,
                     const Matrix& grad_initial) {
  const ModelConfig& c = params.config;
  if (tape.phases.size() != plan.phases.size()) {
    throw Error("backward: tape does not match the plan (was the forward pass run without a tape?)");
  }
  const auto d = static_cast<std::size_t>(c.state_dim);
  ModelParams grads = ModelParams::zeros(c);
  Matrix g = grad_final;
  Matrix states = tape.final_states;
  const bool affine = c.message == MessageKind::affine;

  std::vector<double> dh(d), dc(d), dz(d), dr(d), dgated(d), dm(d), gated(d), tmp(d);
  std::vector<double> dsource;
  std::vector<double> new_g;
  for (std::size_t p = plan.phases.size(); p-- > 0;) {
    const PhasePlan& pp = plan.phases[p];
    const auto& rec = tape.phases[p];
    const std::size_t nr = pp.receivers.size();
    dsource.assign(pp.sources.size() * d, 0.0);
    new_g.assign(nr * d, 0.0);
    for (std::size_t i = 0; i < nr; ++i) {
      const NodeId v = pp.receivers[i];
      const auto at = i * d;
      const std::span<const double> h(rec.prev.data() + at, d);
      const std::span<const double> m(rec.aggregated.data() + at, d);
      const std::span<const double> r(rec.reset.data() + at, d);
      const std::span<const double> z(rec.update.data() + at, d);
      const std::span<const double> cand(rec.candidate.data() + at, d);
      const auto gv = g.row(v);

      for (std::size_t j = 0; j < d; ++j) {
        dc[j] = gv[j] * z[j] * (1.0 - cand[j] * cand[j]);
        dz[j] = gv[j] * (cand[j] - h[j]) * z[j] * (1.0 - z[j]);
        dh[j] = gv[j] * (1.0 - z[j]);
        gated[j] = r[j] * h[j];
      }
      // Candidate: tanh(W_h m + U_h (r*h) + b_h).
      detail::outer_add(grads.gru_w_h, dc, m);
      detail::outer_add(grads.gru_u_h, dc, gated);
      std::fill(dm.begin(), dm.end(), 0.0);
      std::fill(dgated.begin(), dgated.end(), 0.0);
      detail::matvec_t_add(params.gru_w_h, dc, dm);
      detail::matvec_t_add(params.gru_u_h, dc, dgated);
      for (std::size_t j = 0; j < d; ++j) {
        grads.gru_b_h.data[j] += dc[j];
        dh[j] += dgated[j] * r[j];
        dr[j] = dgated[j] * h[j] * r[j] * (1.0 - r[j]);
      }
      // Update gate.
      detail::outer_add(grads.gru_w_z, dz, m);
      detail::outer_add(grads.gru_u_z, dz, h);
      detail::matvec_t_add(params.gru_w_z, dz, dm);
      detail::matvec_t_add(params.gru_u_z, dz, dh);
      // Reset gate.
      detail::outer_add(grads.gru_w_r, dr, m);
      detail::outer_add(grads.gru_u_r, dr, h);
      detail::matvec_t_add(params.gru_w_r, dr, dm);
      detail::matvec_t_add(params.gru_u_r, dr, dh);
      for (std::size_t j = 0; j < d; ++j) {
        grads.gru_b_z.data[j] += dz[j];
        grads.gru_b_r.data[j] += dr[j];
      }
      std::copy(dh.begin(), dh.end(), new_g.begin() + static_cast<std::ptrdiff_t>(at));

      // Aggregation.
      const auto begin = static_cast<std::size_t>(pp.offsets[i]);
      const auto end = static_cast<std::size_t>(pp.offsets[i + 1]);
      if (c.aggregation == Aggregation::max) {
        for (std::size_t j = 0; j < d; ++j) {
          const auto k = begin + static_cast<std::size_t>(rec.argmax[at + j]);
          dsource[static_cast<std::size_t>(pp.edge_source[k]) * d + j] += dm[j];
        }
      } else {
        const double scale = c.aggregation == Aggregation::avg ? 1.0 / static_cast<double>(end - begin) : 1.0;
        for (std::size_t k = begin; k < end; ++k) {
          double* ds = dsource.data() + static_cast<std::size_t>(pp.edge_source[k]) * d;
          for (std::size_t j = 0; j < d; ++j) {
            ds[j] += dm[j] * scale;
          }
        }
      }
    }
    // Receivers' gradients now refer to their pre-phase states; restore those
    // states so message gradients see what the messages were computed from.
    for (std::size_t i = 0; i < nr; ++i) {
      const NodeId v = pp.receivers[i];
      const auto at = static_cast<std::ptrdiff_t>(i * d);
      auto gv = g.row(v);
      std::copy(new_g.begin() + at, new_g.begin() + at + static_cast<std::ptrdiff_t>(d), gv.begin());
      auto sv = states.row(v);
      std::copy(rec.prev.begin() + at, rec.prev.begin() + at + static_cast<std::ptrdiff_t>(d), sv.begin());
    }
    for (std::size_t s = 0; s < pp.sources.size(); ++s) {
      const auto [u, type] = pp.sources[s];
      const std::span<const double> ds(dsource.data() + s * d, d);
      auto gu = g.row(u);
      if (affine) {
        const auto t = static_cast<std::size_t>(type);
        detail::outer_add(grads.message_weight[t], ds, states.row(u));
        for (std::size_t j = 0; j < d; ++j) {
          grads.message_bias[t].data[j] += ds[j];
        }
        detail::matvec_t_add(params.message_weight[t], ds, gu);
      } else {
        for (std::size_t j = 0; j < d; ++j) {
          gu[j] += ds[j];
        }
      }
    }
  }

  for (std::size_t i = 0; i < g.data.size(); ++i) {
    g.data[i] += grad_initial.data[i];
  }
  if (c.input_mode == InputMode::embedding) {
    grads.embedding = g;
  } else {
    for (int v = 0; v < c.num_nodes; ++v) {
      const auto idx = features->row_indices(v);
      const auto val = features->row_values(v);
      const auto gv = g.row(v);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        auto w = grads.input_weight.row(idx[k]);
        for (std::size_t j = 0; j < d; ++j) {
          w[j] += val[k] * gv[j];
        }
      }
    }
  }
  return grads;
}

LossAndGradients loss_and_gradients(const PropagationPlan& plan, const ModelParams& params,
                                    const Batch& batch) {
  const ModelConfig& c = params.config;
  if (batch.labels.size() != static_cast<std::size_t>(c.num_nodes)) {
    throw Error("loss: label vector does not cover every node");
  }
  const ForwardTape tape = forward(plan, params, batch.features, true);
  ModelParams head = ModelParams::zeros(c);
  Matrix grad_final(c.num_nodes, c.state_dim);
  Matrix grad_initial(c.num_nodes, c.state_dim);
  LossAndGradients out;
  out.readout = readout_impl(tape.final_states, tape.initial, batch.features, batch.labels, batch.mask,
                             params, batch.weight_decay, &head, &grad_final, &grad_initial);
  out.gradients = backward(plan, params, tape, batch.features, grad_final, grad_initial);

  auto total = out.gradients.tensors();
  const auto from_head = std::as_const(head).tensors();
  const auto values = params.tensors();
  for (std::size_t i = 0; i < total.size(); ++i) {
    auto& dst = total[i].value->data;
    const auto& src = from_head[i].value->data;
    for (std::size_t k = 0; k < dst.size(); ++k) {
      dst[k] += src[k];
    }
    if (total[i].role == TensorRole::weight && batch.weight_decay != 0.0) {
      const auto& w = values[i].value->data;
      for (std::size_t k = 0; k < dst.size(); ++k) {
        dst[k] += batch.weight_decay * w[k];
      }
    }
  }
  return out;
}

Matrix predict(const PropagationPlan& plan, const ModelParams& params, const SparseMatrix* features) {
  const ForwardTape tape = forward(plan, params, features, false);
  std::vector<int> no_labels(static_cast<std::size_t>(params.config.num_nodes), 0);
  const NodeId any[] = {0};
  if (params.config.num_nodes == 0) {
    return Matrix(0, params.config.num_classes);
  }
  return readout_loss(tape.final_states, tape.initial, features, no_labels, any, params, 0.0)
      .probabilities;
}

double accuracy(const Matrix& probabilities, std::span<const int> labels, std::span<const NodeId> split) {
  if (split.empty()) {
    throw Error("accuracy: empty split");
  }
  int correct = 0;
  for (const NodeId v : split) {
    const auto row = probabilities.row(v);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == labels[static_cast<std::size_t>(v)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

double recall_at_k(const Matrix& probabilities, std::span<const int> labels,
                   std::span<const NodeId> split, int positive_class, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > split.size()) {
    throw Error("recall@k: k=" + std::to_string(k) + " exceeds the " + std::to_string(split.size()) +
                " ranked instances");
  }
  std::vector<NodeId> ranked(split.begin(), split.end());
  std::stable_sort(ranked.begin(), ranked.end(), [&](NodeId a, NodeId b) {
    const double pa = probabilities(a, positive_class);
    const double pb = probabilities(b, positive_class);
    return pa != pb ? pa > pb : a < b;
  });
  int positives = 0;
  int hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (labels[static_cast<std::size_t>(ranked[i])] == positive_class) {
      ++positives;
      if (i < static_cast<std::size_t>(k)) {
        ++hits;
      }
    }
  }
  return positives == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(positives);
}

} // namespace gpnn

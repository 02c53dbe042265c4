#pragma once

// Small dense kernels shared by the forward and backward passes.

#include "gpnn/gnn.hpp"

#include <cmath>
#include <span>

namespace gpnn::detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// out += M x, with M (rows x cols) row-major.
inline void matvec_add(const Matrix& m, std::span<const double> x, std::span<double> out) {
  for (int i = 0; i < m.rows; ++i) {
    const auto r = m.row(i);
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      s += r[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] += s;
  }
}

/// out += M^T g.
inline void matvec_t_add(const Matrix& m, std::span<const double> g, std::span<double> out) {
  for (int i = 0; i < m.rows; ++i) {
    const auto r = m.row(i);
    const double gi = g[static_cast<std::size_t>(i)];
    if (gi == 0.0) {
      continue;
    }
    for (int j = 0; j < m.cols; ++j) {
      out[static_cast<std::size_t>(j)] += r[static_cast<std::size_t>(j)] * gi;
    }
  }
}

/// M += g x^T.
inline void outer_add(Matrix& m, std::span<const double> g, std::span<const double> x) {
  for (int i = 0; i < m.rows; ++i) {
    const double gi = g[static_cast<std::size_t>(i)];
    if (gi == 0.0) {
      continue;
    }
    auto r = m.row(i);
    for (int j = 0; j < m.cols; ++j) {
      r[static_cast<std::size_t>(j)] += gi * x[static_cast<std::size_t>(j)];
    }
  }
}

/// Row-vector affine map: out = x W + b (W is in x out).
inline void row_affine(std::span<const double> x, const Matrix& w, std::span<double> out) {
  for (int i = 0; i < w.rows; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    if (xi == 0.0) {
      continue;
    }
    const auto r = w.row(i);
    for (int j = 0; j < w.cols; ++j) {
      out[static_cast<std::size_t>(j)] += xi * r[static_cast<std::size_t>(j)];
    }
  }
}

/// Computes the GRU gates and new state for one node. `gated` is scratch of size d.
inline void gru_forward(const ModelParams& p, std::span<const double> h, std::span<const double> m,
                        std::span<double> r, std::span<double> z, std::span<double> candidate,
                        std::span<double> out, std::span<double> gated) {
  const auto d = h.size();
  for (std::size_t i = 0; i < d; ++i) {
    r[i] = p.gru_b_r.data[i];
    z[i] = p.gru_b_z.data[i];
    candidate[i] = p.gru_b_h.data[i];
  }
  matvec_add(p.gru_w_r, m, r);
  matvec_add(p.gru_u_r, h, r);
  matvec_add(p.gru_w_z, m, z);
  matvec_add(p.gru_u_z, h, z);
  for (std::size_t i = 0; i < d; ++i) {
    r[i] = sigmoid(r[i]);
    z[i] = sigmoid(z[i]);
    gated[i] = r[i] * h[i];
  }
  matvec_add(p.gru_w_h, m, candidate);
  matvec_add(p.gru_u_h, gated, candidate);
  for (std::size_t i = 0; i < d; ++i) {
    candidate[i] = std::tanh(candidate[i]);
    out[i] = (1.0 - z[i]) * h[i] + z[i] * candidate[i];
  }
}

} // namespace gpnn::detail

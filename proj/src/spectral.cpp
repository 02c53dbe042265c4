#include "gpnn/error.hpp"
#include "gpnn/partition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpnn {

namespace {

struct SymmetricWeights {
  std::vector<double> weights; // row-major n*n
  std::vector<double> degree;
};

SymmetricWeights symmetric_weights(const Graph& graph) {
  const auto nn = static_cast<std::size_t>(graph.num_nodes());
  SymmetricWeights w{std::vector<double>(nn * nn, 0.0), std::vector<double>(nn, 0.0)};
  for (const Edge& e : graph.edges()) {
    const auto u = static_cast<std::size_t>(e.src);
    const auto v = static_cast<std::size_t>(e.dst);
    w.weights[u * nn + v] += 1.0;
    w.weights[v * nn + u] += 1.0;
  }
  for (std::size_t u = 0; u < nn; ++u) {
    for (std::size_t v = 0; v < nn; ++v) {
      w.degree[u] += w.weights[u * nn + v];
    }
  }
  return w;
}

} // namespace

LaplacianMatrix random_walk_laplacian(const Graph& graph) {
  const auto nn = static_cast<std::size_t>(graph.num_nodes());
  SymmetricWeights w = symmetric_weights(graph);
  LaplacianMatrix lap;
  lap.n = graph.num_nodes();
  lap.values.assign(nn * nn, 0.0);
  for (std::size_t u = 0; u < nn; ++u) {
    lap.values[u * nn + u] = 1.0;
    if (w.degree[u] == 0.0) {
      continue;
    }
    for (std::size_t v = 0; v < nn; ++v) {
      lap.values[u * nn + v] -= w.weights[u * nn + v] / w.degree[u];
    }
  }
  lap.degree = std::move(w.degree);
  return lap;
}

SpectralEmbedding spectral_embedding(const Graph& graph, int num_vectors,
                                     const SpectralOptions& options) {
  const int n = graph.num_nodes();
  if (num_vectors < 1 || num_vectors > n) {
    throw Error("spectral: requested " + std::to_string(num_vectors) +
                " eigenvectors for a graph with " + std::to_string(n) + " nodes");
  }
  if (n > options.max_nodes) {
    throw Error("spectral: graph has " + std::to_string(n) +
                " nodes, above the dense solver cap of " + std::to_string(options.max_nodes));
  }
  const SymmetricWeights w = symmetric_weights(graph);
  const LaplacianMatrix lap = random_walk_laplacian(graph);
  const auto nn = static_cast<std::size_t>(n);

  // I - D^-1/2 W D^-1/2 shares the spectrum of L; eigenvectors map back by D^-1/2.
  Eigen::VectorXd inv_sqrt(n);
  for (int u = 0; u < n; ++u) {
    const double d = w.degree[static_cast<std::size_t>(u)];
    inv_sqrt(u) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  Eigen::MatrixXd sym = Eigen::MatrixXd::Identity(n, n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      const double weight = w.weights[static_cast<std::size_t>(u) * nn + static_cast<std::size_t>(v)];
      if (weight != 0.0) {
        sym(u, v) -= inv_sqrt(u) * weight * inv_sqrt(v);
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error("spectral: eigensolver did not converge");
  }

  SpectralEmbedding out;
  const auto kk = static_cast<std::size_t>(num_vectors);
  out.coordinates.assign(nn * kk, 0.0);
  for (int j = 0; j < num_vectors; ++j) {
    const double lambda = solver.eigenvalues()(j);
    Eigen::VectorXd x = inv_sqrt.cwiseProduct(solver.eigenvectors().col(j));
    x.normalize();
    double residual = 0.0;
    for (int u = 0; u < n; ++u) {
      double lx = 0.0;
      for (int v = 0; v < n; ++v) {
        lx += lap.at(u, v) * x(v);
      }
      residual = std::max(residual, std::abs(lx - lambda * x(u)));
    }
    out.max_residual = std::max(out.max_residual, residual);
    out.eigenvalues.push_back(lambda);
    for (int u = 0; u < n; ++u) {
      out.coordinates[static_cast<std::size_t>(u) * kk + static_cast<std::size_t>(j)] = x(u);
    }
  }
  if (out.max_residual > options.residual_tolerance) {
    throw Error("spectral: eigenpair residual " + std::to_string(out.max_residual) +
                " exceeds tolerance " + std::to_string(options.residual_tolerance));
  }
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

} // namespace

std::vector<int> kmeans(std::span<const double> points, int n, int dim, int k, Rng& rng,
                        int max_iterations) {
  const auto d = static_cast<std::size_t>(dim);
  const auto kk = static_cast<std::size_t>(k);
  auto point = [&](int i) { return points.subspan(static_cast<std::size_t>(i) * d, d); };

  // k-means++ seeding.
  std::vector<double> centers(kk * d, 0.0);
  auto center = [&](std::size_t c) { return std::span<double>(centers).subspan(c * d, d); };
  {
    const int first = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    std::ranges::copy(point(first), center(0).begin());
    std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < kk; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        auto& b = best[static_cast<std::size_t>(i)];
        b = std::min(b, squared_distance(point(i), center(c - 1)));
        total += b;
      }
      int pick = n - 1;
      if (total <= 0.0) {
        pick = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
      } else {
        const double target = rng.uniform() * total;
        double cumulative = 0.0;
        for (int i = 0; i < n; ++i) {
          cumulative += best[static_cast<std::size_t>(i)];
          if (target < cumulative) {
            pick = i;
            break;
          }
        }
      }
      std::ranges::copy(point(pick), center(c).begin());
    }
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  auto nearest = [&](int i) {
    int arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < kk; ++c) {
      const double dist = squared_distance(point(i), center(c));
      if (dist < best) {
        best = dist;
        arg = static_cast<int>(c);
      }
    }
    return arg;
  };
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = nearest(i);
      if (c != labels[static_cast<std::size_t>(i)]) {
        labels[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed) {
      break;
    }
    std::vector<double> sums(kk * d, 0.0);
    std::vector<int> counts(kk, 0);
    for (int i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      ++counts[c];
      const auto p = point(i);
      for (std::size_t j = 0; j < d; ++j) {
        sums[c * d + j] += p[j];
      }
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) {
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) {
        centers[c * d + j] = sums[c * d + j] / counts[c];
      }
    }
  }

  // Empty clusters take the point farthest from its center among clusters
  // that can spare one.
  std::vector<int> counts(kk, 0);
  for (const int l : labels) {
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t c = 0; c < kk; ++c) {
    if (counts[c] > 0) {
      continue;
    }
    int far = -1;
    double far_dist = -1.0;
    for (int i = 0; i < n; ++i) {
      const auto l = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      if (counts[l] < 2) {
        continue;
      }
      const double dist = squared_distance(point(i), center(l));
      if (dist > far_dist) {
        far_dist = dist;
        far = i;
      }
    }
    if (far < 0) {
      break;
    }
    --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
    labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
    counts[c] = 1;
    std::ranges::copy(point(far), center(c).begin());
  }
  return labels;
}

Partition spectral_partition(const Graph& graph, int num_subgraphs, std::uint64_t seed,
                             const SpectralOptions& options) {
  const int n = graph.num_nodes();
  if (num_subgraphs < 1) {
    throw Error("spectral: number of subgraphs must be positive");
  }
  if (num_subgraphs > n) {
    throw Error("spectral: " + std::to_string(num_subgraphs) + " subgraphs requested for " +
                std::to_string(n) + " nodes");
  }
  Partition partition{std::vector<int>(static_cast<std::size_t>(n), 0), num_subgraphs,
                      PartitionMethod::spectral, seed};
  if (num_subgraphs == 1) {
    return partition;
  }
  const SpectralEmbedding embedding = spectral_embedding(graph, num_subgraphs, options);
  Rng rng(seed);
  const std::vector<int> labels =
      kmeans(embedding.coordinates, n, num_subgraphs, num_subgraphs, rng, options.kmeans_iterations);

  std::vector<int> remap(static_cast<std::size_t>(num_subgraphs), -1);
  int next = 0;
  for (int v = 0; v < n; ++v) {
    auto& r = remap[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])];
    if (r < 0) {
      r = next++;
    }
    partition.assignment[static_cast<std::size_t>(v)] = r;
  }
  return partition;
}

} // namespace gpnn

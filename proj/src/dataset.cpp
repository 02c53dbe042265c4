#include "gpnn/dataset.hpp"

#include "gpnn/error.hpp"
#include "gpnn/rng.hpp"

#include "text_io.hpp"

#include <algorithm>

namespace gpnn {

double Dataset::label_rate() const {
  return num_nodes() == 0 ? 0.0 : static_cast<double>(train.size()) / static_cast<double>(num_nodes());
}

namespace {

std::string where(const std::filesystem::path& path, int line) {
  return path.string() + " line " + std::to_string(line);
}

int parse_node(std::string_view field, int num_nodes, const std::filesystem::path& path, int line) {
  long long v = 0;
  if (!detail::parse_number(field, v)) {
    throw ParseError(where(path, line) + ": malformed node id '" + std::string(field) + "'");
  }
  if (v < 0 || v >= num_nodes) {
    throw ParseError(where(path, line) + ": node " + std::to_string(v) + " out of range (graph has " +
                     std::to_string(num_nodes) + " nodes)");
  }
  return static_cast<int>(v);
}

SparseMatrix load_features(const std::filesystem::path& path, int num_nodes) {
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(num_nodes));
  std::vector<char> seen(static_cast<std::size_t>(num_nodes), 0);
  int cols = 0;
  detail::for_each_record(detail::read_text_file(path), [&](int line, std::string_view text) {
    const auto fields = detail::split_fields(text);
    const int v = parse_node(fields[0], num_nodes, path, line);
    if (seen[static_cast<std::size_t>(v)]) {
      throw ParseError(where(path, line) + ": duplicate feature row for node " + std::to_string(v));
    }
    seen[static_cast<std::size_t>(v)] = 1;
    auto& row = rows[static_cast<std::size_t>(v)];
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto colon = fields[i].find(':');
      int dim = 0;
      double value = 0.0;
      if (colon == std::string_view::npos || !detail::parse_number(fields[i].substr(0, colon), dim) ||
          !detail::parse_number(fields[i].substr(colon + 1), value) || dim < 0) {
        throw ParseError(where(path, line) + ": malformed feature entry '" + std::string(fields[i]) + "'");
      }
      row.emplace_back(dim, value);
      cols = std::max(cols, dim + 1);
    }
  });
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i].first == row[i - 1].first) {
        throw ParseError(path.string() + ": repeated feature dimension " + std::to_string(row[i].first));
      }
    }
  }
  return SparseMatrix::from_rows(cols, std::move(rows));
}

std::vector<NodeId> load_mask(const std::filesystem::path& path, int num_nodes) {
  std::vector<NodeId> mask;
  detail::for_each_record(detail::read_text_file(path), [&](int line, std::string_view text) {
    const auto fields = detail::split_fields(text);
    if (fields.size() != 1) {
      throw ParseError(where(path, line) + ": expected one node id");
    }
    mask.push_back(parse_node(fields[0], num_nodes, path, line));
  });
  return mask;
}

void validate_masks(const Dataset& d) {
  std::vector<int> owner(static_cast<std::size_t>(d.num_nodes()), -1);
  const std::vector<NodeId>* masks[] = {&d.train, &d.val, &d.test};
  const char* names[] = {"train", "val", "test"};
  for (int m = 0; m < 3; ++m) {
    for (const NodeId v : *masks[m]) {
      int& o = owner[static_cast<std::size_t>(v)];
      if (o == m) {
        throw Error(std::string(names[m]) + " mask lists node " + std::to_string(v) + " twice");
      }
      if (o >= 0) {
        throw Error("masks overlap: node " + std::to_string(v) + " is in both " + names[o] + " and " +
                    names[m]);
      }
      o = m;
      if (d.labels[static_cast<std::size_t>(v)] < 0) {
        throw Error(std::string(names[m]) + " mask node " + std::to_string(v) + " has no label");
      }
    }
  }
}

void append_mask(std::string& out, const std::vector<NodeId>& mask) {
  for (const NodeId v : mask) {
    out += std::to_string(v);
    out += '\n';
  }
}

} // namespace

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset d;
  const Graph raw = read_edge_list(paths.edges);
  d.graph = paths.undirected ? bidirect(raw) : raw;
  d.undirected = paths.undirected;
  const int n = d.graph.num_nodes();
  d.features = paths.features.empty() ? SparseMatrix(n, 0) : load_features(paths.features, n);

  d.labels.assign(static_cast<std::size_t>(n), -1);
  detail::for_each_record(detail::read_text_file(paths.labels), [&](int line, std::string_view text) {
    const auto fields = detail::split_fields(text);
    if (fields.size() != 2) {
      throw ParseError(where(paths.labels, line) + ": expected 'node<TAB>class'");
    }
    const int v = parse_node(fields[0], n, paths.labels, line);
    int label = 0;
    if (!detail::parse_number(fields[1], label) || label < 0) {
      throw ParseError(where(paths.labels, line) + ": malformed class '" + std::string(fields[1]) + "'");
    }
    if (d.labels[static_cast<std::size_t>(v)] >= 0) {
      throw ParseError(where(paths.labels, line) + ": node " + std::to_string(v) + " labeled twice");
    }
    d.labels[static_cast<std::size_t>(v)] = label;
    d.num_classes = std::max(d.num_classes, label + 1);
  });
  d.train = load_mask(paths.train, n);
  d.val = load_mask(paths.val, n);
  if (!paths.test.empty()) {
    d.test = load_mask(paths.test, n);
  }
  validate_masks(d);
  return d;
}

DatasetPaths save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  DatasetPaths paths{dir / "edges.txt",  dir / "features.txt", dir / "labels.txt",
                     dir / "train.txt", dir / "val.txt",      dir / "test.txt",
                     dataset.undirected};
  const Graph& g = dataset.graph;
  if (dataset.undirected) {
    std::vector<Edge> originals;
    for (EdgeId e = 0; e < g.num_edges(); e += 2) {
      originals.push_back(g.edge(e));
    }
    detail::write_text_file(paths.edges,
                            format_edge_list(Graph(g.num_nodes(), g.num_edge_types(), std::move(originals))));
  } else {
    detail::write_text_file(paths.edges, format_edge_list(g));
  }

  std::string text;
  for (int v = 0; v < dataset.features.rows; ++v) {
    text += std::to_string(v);
    text += '\t';
    const auto idx = dataset.features.row_indices(v);
    const auto val = dataset.features.row_values(v);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k > 0) {
        text += ' ';
      }
      text += std::to_string(idx[k]);
      text += ':';
      detail::append_double(text, val[k]);
    }
    text += '\n';
  }
  detail::write_text_file(paths.features, text);

  text.clear();
  for (std::size_t v = 0; v < dataset.labels.size(); ++v) {
    if (dataset.labels[v] >= 0) {
      text += std::to_string(v) + '\t' + std::to_string(dataset.labels[v]) + '\n';
    }
  }
  detail::write_text_file(paths.labels, text);

  const std::pair<const std::vector<NodeId>*, std::filesystem::path> masks[] = {
      {&dataset.train, paths.train}, {&dataset.val, paths.val}, {&dataset.test, paths.test}};
  for (const auto& [mask, path] : masks) {
    text.clear();
    append_mask(text, *mask);
    detail::write_text_file(path, text);
  }
  return paths;
}

Dataset gen_sbm(const SbmOptions& o) {
  if (o.num_nodes < 1 || o.num_classes < 1 || o.num_classes > o.num_nodes) {
    throw Error("gen_sbm: need 1 <= num_classes <= num_nodes");
  }
  if (!(0.0 <= o.p_out && o.p_out <= o.p_in && o.p_in <= 1.0)) {
    throw Error("gen_sbm: need 0 <= p_out <= p_in <= 1");
  }
  const int n = o.num_nodes;
  const int c = o.num_classes;
  Dataset d;
  d.num_classes = c;
  d.undirected = true;
  d.labels.resize(static_cast<std::size_t>(n));
  std::vector<std::vector<NodeId>> blocks(static_cast<std::size_t>(c));
  {
    const int base = n / c;
    const int extra = n % c;
    NodeId v = 0;
    for (int b = 0; b < c; ++b) {
      for (int i = 0; i < base + (b < extra ? 1 : 0); ++i, ++v) {
        d.labels[static_cast<std::size_t>(v)] = b;
        blocks[static_cast<std::size_t>(b)].push_back(v);
      }
    }
  }

  Rng edge_rng(derive_seed(o.seed, "sbm-edges"));
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const bool same = d.labels[static_cast<std::size_t>(u)] == d.labels[static_cast<std::size_t>(v)];
      if (edge_rng.uniform() < (same ? o.p_in : o.p_out)) {
        edges.push_back(Edge{u, v, 0});
      }
    }
  }
  d.graph = bidirect(Graph(n, 1, std::move(edges)));

  Rng feature_rng(derive_seed(o.seed, "sbm-features"));
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) {
    for (int k = 0; k < c; ++k) {
      const double hot = k == d.labels[static_cast<std::size_t>(v)] ? 1.0 : 0.0;
      rows[static_cast<std::size_t>(v)].emplace_back(k, hot + o.feature_noise * feature_rng.normal());
    }
  }
  d.features = SparseMatrix::from_rows(c, std::move(rows));

  Rng mask_rng(derive_seed(o.seed, "sbm-masks"));
  std::vector<NodeId> rest;
  for (auto& block : blocks) {
    if (o.train_per_class > static_cast<int>(block.size())) {
      throw Error("gen_sbm: train_per_class exceeds a block size");
    }
    mask_rng.shuffle(block);
    d.train.insert(d.train.end(), block.begin(), block.begin() + o.train_per_class);
    rest.insert(rest.end(), block.begin() + o.train_per_class, block.end());
  }
  std::sort(rest.begin(), rest.end());
  mask_rng.shuffle(rest);
  const auto num_val = static_cast<std::size_t>(std::max(o.num_val, 0));
  const std::size_t num_test = o.num_test < 0 ? rest.size() - std::min(num_val, rest.size())
                                              : static_cast<std::size_t>(o.num_test);
  if (num_val + num_test > rest.size()) {
    throw Error("gen_sbm: " + std::to_string(num_val + num_test) + " val/test nodes requested but only " +
                std::to_string(rest.size()) + " remain after training");
  }
  d.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(num_val));
  d.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(num_val),
                rest.begin() + static_cast<std::ptrdiff_t>(num_val + num_test));
  for (auto* mask : {&d.train, &d.val, &d.test}) {
    std::sort(mask->begin(), mask->end());
  }
  return d;
}

} // namespace gpnn

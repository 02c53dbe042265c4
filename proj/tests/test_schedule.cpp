#include "support.hpp"

#include "gpnn/error.hpp"
#include "gpnn/schedule.hpp"

#include <doctest.h>

#include <map>
#include <numeric>
#include <set>

using namespace gpnn;
using namespace gpnn::test;

namespace {

std::vector<std::vector<EdgeId>> phase_sets(const Schedule& s) {
  std::vector<std::vector<EdgeId>> out;
  for (const Phase& p : s.phases) {
    out.push_back(p.edges);
  }
  return out;
}

Partition halves_of_six() {
  Partition p;
  p.assignment = {0, 0, 0, 1, 1, 1};
  p.num_subgraphs = 2;
  return p;
}

// Undirected pairs used by each MST tree, keyed by phase label.
std::map<std::string, std::vector<std::pair<NodeId, NodeId>>> tree_pairs(const Graph& g, const Schedule& s) {
  std::map<std::string, std::vector<std::pair<NodeId, NodeId>>> out;
  for (const Phase& p : s.phases) {
    for (const EdgeId e : p.edges) {
      const auto [a, b] = std::minmax(g.edge(e).src, g.edge(e).dst);
      out[p.label].emplace_back(a, b);
    }
  }
  return out;
}

} // namespace

TEST_CASE("synchronous schedule repeats every edge") {
  const Graph g = chain(3);
  const Schedule s = synchronous_schedule(g, 2);
  CHECK(s.phases.size() == 2);
  CHECK(s.phases[0].edges == std::vector<EdgeId>{0, 1, 2, 3});
  CHECK(message_count(s) == 8);
  CHECK(synchronous_schedule(g, 1).phases.size() == 1);
  CHECK(message_count(synchronous_schedule(chain(5), 4)) == 32);
  CHECK(message_count(Schedule{}) == 0);
  CHECK_THROWS_AS(synchronous_schedule(g, 0), Error);
}

TEST_CASE("gpnn schedule alternates intra and cut phases") {
  const Graph g = chain(6);
  const Schedule s = gpnn_schedule(g, halves_of_six(), 1, 2, 1);
  REQUIRE(s.phases.size() == 3);
  CHECK(s.phases[0].edges.size() == 8);
  CHECK(s.phases[1].edges.size() == 8);
  CHECK(s.phases[2].edges == std::vector<EdgeId>{4, 5});
  CHECK(s.phases[0].label == "intra");
  CHECK(s.phases[2].label == "inter");
  CHECK(message_count(s) == 18);
}

TEST_CASE("gpnn schedule on an even chain split matches the closed form") {
  const Graph g = chain(10);
  Partition p;
  p.assignment = {0, 0, 1, 1, 2, 2, 3, 3, 4, 4};
  p.num_subgraphs = 5;
  const Schedule s = gpnn_schedule(g, p, 5, 1, 1, true);
  CHECK(message_count(s) == 82);
  CHECK(s.phases.back().label == "intra");
  CHECK(message_count(gpnn_schedule(g, p, 5, 1, 1, false)) == 82 + 8);
}

TEST_CASE("gpnn schedule with one subgraph is synchronous") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = random_graph(rng, 15, 40, 2);
    Partition whole;
    whole.assignment.assign(15, 0);
    for (int t = 1; t <= 3; ++t) {
      const Schedule a = gpnn_schedule(g, whole, t, 1, 1 + trial % 3);
      CHECK(phase_sets(a) == phase_sets(synchronous_schedule(g, t)));
      const Schedule b = gpnn_schedule(g, whole, 1, t, 1);
      CHECK(phase_sets(b) == phase_sets(synchronous_schedule(g, t)));
    }
  }
}

TEST_CASE("gpnn schedule per-iteration cost is constant") {
  Rng rng(5);
  const Graph g = random_graph(rng, 30, 90, 1, true);
  Partition p;
  for (int v = 0; v < 30; ++v) {
    p.assignment.push_back(v % 4);
  }
  p.num_subgraphs = 4;
  const Schedule s = gpnn_schedule(g, p, 4, 2, 1);
  REQUIRE(s.phases.size() == 12);
  long long first = 0;
  for (int t = 0; t < 4; ++t) {
    long long cost = 0;
    for (int i = 0; i < 3; ++i) {
      cost += static_cast<long long>(s.phases[static_cast<std::size_t>(3 * t + i)].edges.size());
    }
    if (t == 0) {
      first = cost;
    }
    CHECK(cost == first);
  }
}

TEST_CASE("gpnn schedule allows zero intra or cut steps") {
  const Graph g = chain(6);
  const Schedule no_cut = gpnn_schedule(g, halves_of_six(), 2, 1, 0);
  CHECK(no_cut.phases.size() == 2);
  const Schedule cut_only = gpnn_schedule(g, halves_of_six(), 2, 0, 1);
  CHECK(cut_only.phases.size() == 2);
  CHECK(message_count(cut_only) == 4);
  CHECK_THROWS_AS(gpnn_schedule(g, halves_of_six(), 0, 1, 1), Error);
  CHECK_THROWS_AS(gpnn_schedule(g, halves_of_six(), 1, -1, 1), Error);
  CHECK_THROWS_AS(gpnn_schedule(chain(5), halves_of_six(), 1, 1, 1), Error);
}

TEST_CASE("sequential schedule on a three-chain") {
  const Graph g = chain(3);
  const Schedule s = sequential_schedule(g, 0);
  REQUIRE(s.phases.size() == 4);
  CHECK(s.phases[0].edges == std::vector<EdgeId>{0});
  CHECK(s.phases[1].edges == std::vector<EdgeId>{2});
  CHECK(s.phases[2].edges == std::vector<EdgeId>{3});
  CHECK(s.phases[3].edges == std::vector<EdgeId>{1});
  CHECK(message_count(s) == 4);
  CHECK(sequential_schedule(Graph(1, 1, {}), 0).phases.empty());
  CHECK(sequential_schedule(g, 0, 3).phases.size() == 12);
}

TEST_CASE("sequential schedule on a triangle") {
  // Edge ids: (0,1)=0 (1,0)=1 (1,2)=2 (2,1)=3 (0,2)=4 (2,0)=5.
  const Graph g = undirected(3, {{0, 1}, {1, 2}, {0, 2}});
  const Schedule s = sequential_schedule(g, 0);
  REQUIRE(s.phases.size() == 4);
  CHECK(s.phases[0].edges == std::vector<EdgeId>{0, 4});
  CHECK(s.phases[1].edges == std::vector<EdgeId>{2});
  CHECK(s.phases[2].edges == std::vector<EdgeId>{3, 5});
  CHECK(s.phases[3].edges == std::vector<EdgeId>{1});
}

TEST_CASE("sequential schedule respects DAG order on random graphs") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng.index(40));
    std::vector<Edge> edges;
    for (int i = 0; i < 3 * n; ++i) {
      edges.push_back({static_cast<int>(rng.index(static_cast<std::size_t>(n))),
                       static_cast<int>(rng.index(static_cast<std::size_t>(n))), 0});
    }
    const Graph g(n, 1, std::move(edges));
    const NodeId root = static_cast<NodeId>(rng.index(static_cast<std::size_t>(n)));
    const Schedule s = sequential_schedule(g, root);

    std::vector<int> phase_of(static_cast<std::size_t>(g.num_edges()), -1);
    for (std::size_t p = 0; p < s.phases.size(); ++p) {
      CHECK_FALSE(s.phases[p].edges.empty());
      for (const EdgeId e : s.phases[p].edges) {
        CHECK(phase_of[static_cast<std::size_t>(e)] == -1);
        phase_of[static_cast<std::size_t>(e)] = static_cast<int>(p);
      }
    }
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      const Edge& edge = g.edge(e);
      const int pe = phase_of[static_cast<std::size_t>(e)];
      if (edge.src == edge.dst) {
        CHECK(pe == -1);
        continue;
      }
      REQUIRE(pe >= 0);
      const std::string& dag = s.phases[static_cast<std::size_t>(pe)].label;
      for (const EdgeId in : g.in_edges(edge.src)) {
        const int pin = phase_of[static_cast<std::size_t>(in)];
        if (pin >= 0 && s.phases[static_cast<std::size_t>(pin)].label == dag) {
          CHECK(pin < pe);
        }
      }
    }
  }
}

TEST_CASE("mst schedule of a tree is the tree") {
  // A rooted tree: 0-1, 0-2, 1-3, 1-4, 2-5.
  const Graph g = undirected(6, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}});
  const Schedule s = mst_schedule(g, 1, 3);
  REQUIRE(s.phases.size() == 2);
  CHECK(s.phases[0].edges == std::vector<EdgeId>{0, 2});
  CHECK(s.phases[1].edges == std::vector<EdgeId>{4, 6, 8});
  CHECK(message_count(s) == 5);
  CHECK(mst_schedule(Graph(1, 1, {}), 2, 0).phases.empty());
  CHECK_THROWS_AS(mst_schedule(g, 0, 0), Error);
}

TEST_CASE("second mst of a triangle covers the remaining edge") {
  const Graph g = undirected(3, {{0, 1}, {1, 2}, {0, 2}});
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto trees = tree_pairs(g, mst_schedule(g, 2, seed));
    REQUIRE(trees.size() == 2);
    const std::set<std::pair<NodeId, NodeId>> first(trees.at("mst-0").begin(), trees.at("mst-0").end());
    const std::set<std::pair<NodeId, NodeId>> second(trees.at("mst-1").begin(), trees.at("mst-1").end());
    CHECK(first.size() == 2);
    CHECK(second.size() == 2);
    std::set<std::pair<NodeId, NodeId>> both = first;
    both.insert(second.begin(), second.end());
    CHECK(both.size() == 3);
  }
}

TEST_CASE("mst trees are spanning forests") {
  Rng rng(44);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(30));
    const Graph g = random_graph(rng, n, 2 * n, 1, true);
    const Schedule s = mst_schedule(g, 3, static_cast<std::uint64_t>(trial));
    const auto oracle = all_pairs_hops(g);
    int components = 0;
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    for (int v = 0; v < n; ++v) {
      if (comp[static_cast<std::size_t>(v)] < 0) {
        for (int u = 0; u < n; ++u) {
          if (oracle[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] < kUnreachable) {
            comp[static_cast<std::size_t>(u)] = components;
          }
        }
        ++components;
      }
    }
    std::map<std::string, std::vector<EdgeId>> by_tree;
    for (const Phase& p : s.phases) {
      std::set<NodeId> receivers;
      for (const EdgeId e : p.edges) {
        CHECK(receivers.insert(g.edge(e).dst).second);
        by_tree[p.label].push_back(e);
      }
    }
    for (const auto& [label, edges] : by_tree) {
      CHECK(static_cast<int>(edges.size()) == n - components);
      std::set<NodeId> receivers;
      for (const EdgeId e : edges) {
        CHECK(receivers.insert(g.edge(e).dst).second);
      }
    }
  }
}

TEST_CASE("random phase schedule wraps edge chunks") {
  const Graph g = chain(6);
  CHECK(phase_sets(random_phase_schedule(g, 1, 0)) == phase_sets(synchronous_schedule(g, 1)));
  const Schedule singles = random_phase_schedule(g, g.num_edges(), 8);
  CHECK(singles.phases.size() == 10);
  std::vector<EdgeId> seen;
  for (const Phase& p : singles.phases) {
    REQUIRE(p.edges.size() == 1);
    seen.push_back(p.edges[0]);
  }
  std::sort(seen.begin(), seen.end());
  std::vector<EdgeId> all(10);
  std::iota(all.begin(), all.end(), 0);
  CHECK(seen == all);
  for (int k = 1; k <= 10; ++k) {
    CHECK(message_count(random_phase_schedule(g, k, 2)) == 10);
  }
}

TEST_CASE("every schedule kind stores only nonempty phases") {
  Rng rng(2);
  const Graph g = random_graph(rng, 20, 30, 1, true);
  Partition p;
  p.assignment.assign(20, 0);
  p.assignment[19] = 1;
  p.num_subgraphs = 2;
  const std::vector<Schedule> all{synchronous_schedule(g, 2), gpnn_schedule(g, p, 2, 2, 1),
                                  sequential_schedule(g, 0), mst_schedule(g, 2, 1),
                                  random_phase_schedule(g, 50, 1)};
  for (const Schedule& s : all) {
    for (const Phase& ph : s.phases) {
      CHECK_FALSE(ph.edges.empty());
    }
  }
}

TEST_CASE("schedule text round trip") {
  const Graph g = undirected(3, {{0, 1}, {1, 2}, {0, 2}});
  const Schedule s = sequential_schedule(g, 0);
  const std::string text = format_schedule(s);
  const Schedule back = parse_schedule(text, g);
  CHECK(phase_sets(back) == phase_sets(s));
  CHECK(format_schedule(back) == text);
  CHECK_THROWS_AS(parse_schedule("0\tx\t1,99\n", g), Error);
  CHECK_THROWS_AS(parse_schedule("0\tx\t1,a\n", g), ParseError);
}

TEST_CASE("schedules refuse a different graph") {
  const Schedule s = synchronous_schedule(chain(4), 1);
  CHECK_NOTHROW(s.check_compatible(chain(4)));
  CHECK_THROWS_AS(s.check_compatible(chain(5)), Error);
}

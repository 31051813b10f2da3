#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "stemtn/scheme.hpp"
#include "stemtn/tree.hpp"
#include "test_support.hpp"

using namespace stemtn;
using stemtn::testing::random_network;
using stemtn::testing::tensor_close;

namespace {

Tensor random_tensor(Rng &rng, std::vector<int> dims) {
  Tensor t(std::move(dims));
  for (auto &c : t.data) c = cx(2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0);
  return t;
}

// The 4-tensor, 5-hyperedge example network: a ring 1-2-4-3 with chords so
// that contracting (1,2), then 3, then 4 costs 16+16+8 with width 3.
TensorNetwork worked_example_network(Rng &rng) {
  TensorNetwork net;
  int a = net.add_edge(2, false);  // {1,2}
  int b = net.add_edge(2, false);  // {2,3}
  int d = net.add_edge(2, false);  // {2,4}
  int f = net.add_edge(2, false);  // {3,4}
  int g = net.add_edge(2, false);  // {1,4}
  net.add_vertex_with_id(1, random_tensor(rng, {2, 2}), {a, g});
  net.add_vertex_with_id(2, random_tensor(rng, {2, 2, 2}), {a, b, d});
  net.add_vertex_with_id(3, random_tensor(rng, {2, 2}), {b, f});
  net.add_vertex_with_id(4, random_tensor(rng, {2, 2, 2}), {d, f, g});
  net.validate();
  return net;
}

ContractionTree random_tree(const TensorNetwork &net, Rng &rng,
                            const std::vector<int> &sliced = {}) {
  ContractionTree t = ContractionTree::make(net, sliced);
  std::vector<int> roots;
  for (int i = 0; i < t.leaf_count(); ++i) roots.push_back(i);
  while (roots.size() > 1) {
    std::size_t i = rng.next_below(roots.size());
    std::size_t j = rng.next_below(roots.size());
    while (j == i) j = rng.next_below(roots.size());
    int merged = t.combine(roots[i], roots[j]);
    if (i > j) std::swap(i, j);
    roots.erase(roots.begin() + j);
    roots[i] = merged;
  }
  t.finalize();
  return t;
}

}  // namespace

TEST_CASE("worked 4-tensor example: tc = 16+16+8 = 40, width 3", "[tree]") {
  Rng rng(2024);
  TensorNetwork net = worked_example_network(rng);
  ContractionTree t = ContractionTree::make(net);
  int u1 = t.combine(t.leaf_of_vertex.at(1), t.leaf_of_vertex.at(2));
  int u2 = t.combine(u1, t.leaf_of_vertex.at(3));
  t.combine(u2, t.leaf_of_vertex.at(4));
  t.finalize();
  t.validate_against(net);

  TreeCosts c = t.costs();
  REQUIRE(c.tc == 40);
  REQUIRE(c.cw == 3);  // peak intermediate tensor has 2^3 = 8 entries
  std::vector<int> widths;
  for (const auto &pn : c.per_node) widths.push_back(pn.step_width);
  std::sort(widths.begin(), widths.end());
  REQUIRE(widths == std::vector<int>{3, 4, 4});

  // formula agrees with stepwise replay, and the value with feynman
  auto rep = t.replay_value(net);
  REQUIRE(rep.step_cost_sum == c.tc);
  REQUIRE(rep.max_rank == c.cw);
  REQUIRE(tensor_close(rep.value, net.feynman_value(), 1e-10));
}

TEST_CASE("contracting two scalars costs 2^0 with width 0", "[tree]") {
  TensorNetwork net;
  net.add_vertex(Tensor::scalar(cx(2, 0)), {});
  net.add_vertex(Tensor::scalar(cx(0, 5)), {});
  ContractionTree t = ContractionTree::make(net);
  t.combine(0, 1);
  t.finalize();
  TreeCosts c = t.costs();
  REQUIRE(c.tc == 1);
  REQUIRE(c.cw == 0);
}

TEST_CASE("tree cost formula equals replayed stepwise contraction", "[tree]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(stream_seed(100, seed));
    stemtn::testing::RandomNetOptions opt;
    opt.vertices = 10;
    opt.extra_edges = 6;
    opt.open_edges = 2;
    opt.hyper_prob = 0.25;
    TensorNetwork net = random_network(rng, opt);
    ContractionTree t = random_tree(net, rng);
    t.validate_against(net);
    TreeCosts c = t.costs();
    auto rep = t.replay_value(net);
    REQUIRE(rep.step_cost_sum == c.tc);
    REQUIRE(rep.max_rank == c.cw);
    REQUIRE(rep.steps == t.internal_count());
    REQUIRE(tensor_close(rep.value, net.feynman_value(), 1e-9));
  }
}

TEST_CASE("stem of a caterpillar tree covers every internal node", "[tree]") {
  Rng rng(55);
  stemtn::testing::RandomNetOptions opt;
  opt.vertices = 7;
  opt.extra_edges = 3;
  TensorNetwork net = random_network(rng, opt);
  ContractionTree t = ContractionTree::make(net);
  int acc = 0;
  for (int leaf = 1; leaf < t.leaf_count(); ++leaf) acc = t.combine(leaf == 1 ? 0 : acc, leaf);
  t.finalize();
  StemInfo stem = t.extract_stem();
  REQUIRE(int(stem.nodes.size()) == t.internal_count());
  REQUIRE(stem.fraction == 1.0);
  REQUIRE(stem.nodes.front() == t.root);
}

TEST_CASE("stem tie-break picks the smaller child id on balanced uniform trees", "[tree]") {
  TensorNetwork net;
  for (int i = 0; i < 4; ++i) net.add_vertex(Tensor::scalar(cx(1, 0)), {});
  ContractionTree t = ContractionTree::make(net);
  int u1 = t.combine(0, 1);  // id 4
  int u2 = t.combine(2, 3);  // id 5
  int r = t.combine(u1, u2);
  t.finalize();
  StemInfo stem = t.extract_stem();
  REQUIRE(stem.nodes == std::vector<int>{r, u1});
  REQUIRE(stem.fraction == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("stem is the maximal root-to-tip path (exhaustive check)", "[tree]") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(stream_seed(200, seed));
    stemtn::testing::RandomNetOptions opt;
    opt.vertices = 9;
    opt.extra_edges = 5;
    TensorNetwork net = random_network(rng, opt);
    ContractionTree t = random_tree(net, rng);
    StemInfo stem = t.extract_stem();
    REQUIRE(stem.nodes.front() == t.root);
    // path connectivity
    for (std::size_t i = 1; i < stem.nodes.size(); ++i) {
      const TreeNode &p = t.nodes[stem.nodes[i - 1]];
      REQUIRE((p.left == stem.nodes[i] || p.right == stem.nodes[i]));
    }
    // exhaustive maximality over all root-to-tip paths
    std::function<BigInt(int)> best_path = [&](int n) -> BigInt {
      if (t.nodes[n].is_leaf()) return 0;
      return t.step_cost(n) + std::max(best_path(t.nodes[n].left), best_path(t.nodes[n].right));
    };
    REQUIRE(stem.cost == best_path(t.root));
  }
}

TEST_CASE("apply_slice halves affected node costs and never increases width", "[tree]") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng(stream_seed(300, seed));
    stemtn::testing::RandomNetOptions opt;
    opt.vertices = 8;
    opt.extra_edges = 5;
    opt.open_edges = 1;
    TensorNetwork net = random_network(rng, opt);
    ContractionTree t = random_tree(net, rng);
    TreeCosts before = t.costs();
    for (const auto &[eid, info] : t.edge_info) {
      if (info.open) continue;
      ContractionTree s = t.apply_slice(eid);
      TreeCosts after = s.costs();
      REQUIRE(2 * after.tc >= before.tc);
      REQUIRE(after.tc < before.tc);  // every closed edge occurs in some step
      REQUIRE(after.cw <= before.cw);
      for (std::size_t i = 0; i < before.per_node.size(); ++i) {
        bool had = std::binary_search(t.nodes[before.per_node[i].node].step.begin(),
                                      t.nodes[before.per_node[i].node].step.end(), eid);
        int want = before.per_node[i].step_width - (had ? 1 : 0);
        REQUIRE(after.per_node[i].step_width == want);
      }
    }
  }
}

TEST_CASE("slicing a sibling-leaf edge only touches the siblings' parent", "[tree]") {
  TensorNetwork net;
  int e01 = net.add_edge(2, false);
  int e12 = net.add_edge(2, false);
  int e23 = net.add_edge(2, false);
  Rng rng(1);
  net.add_vertex_with_id(0, random_tensor(rng, {2}), {e01});
  net.add_vertex_with_id(1, random_tensor(rng, {2, 2}), {e01, e12});
  net.add_vertex_with_id(2, random_tensor(rng, {2, 2}), {e12, e23});
  net.add_vertex_with_id(3, random_tensor(rng, {2}), {e23});
  ContractionTree t = ContractionTree::make(net);
  int u1 = t.combine(0, 1);  // siblings joined by edge e01
  int u2 = t.combine(2, 3);
  t.combine(u1, u2);
  t.finalize();
  ContractionTree s = t.apply_slice(e01);
  for (int n = 0; n < int(t.nodes.size()); ++n) {
    if (n == u1 || t.nodes[n].is_leaf()) continue;
    REQUIRE(t.nodes[n].step == s.nodes[n].step);
    REQUIRE(t.nodes[n].alive == s.nodes[n].alive);
  }
  REQUIRE(int(s.nodes[u1].step.size()) == int(t.nodes[u1].step.size()) - 1);
}

TEST_CASE("scheme cost bookkeeping: subtasks and tc scaling", "[tree]") {
  Rng rng(77);
  stemtn::testing::RandomNetOptions opt;
  opt.vertices = 9;
  opt.extra_edges = 8;  // 8 tree + 8 extra = 15 closed edges to choose from
  opt.open_edges = 1;
  opt.hyper_prob = 0.0;
  TensorNetwork net = random_network(rng, opt);
  std::vector<int> closed;
  for (const auto &[eid, e] : net.edges)
    if (!e.open) closed.push_back(eid);

  ContractionScheme s;
  s.network_hash = net.structural_hash_hex();
  s.sliced_edges.assign(closed.begin(), closed.begin() + 7);
  for (int e : s.sliced_edges) s.sliced_dims[e] = net.edges.at(e).dim;
  s.tree = random_tree(net, rng, s.sliced_edges);
  REQUIRE(s.subtasks() == 128);  // 2^7 for bond-2
  REQUIRE(s.tc() == BigInt(128) * s.tree.costs().tc);

  ContractionScheme empty;
  empty.network_hash = net.structural_hash_hex();
  empty.tree = random_tree(net, rng);
  REQUIRE(empty.subtasks() == 1);
  REQUIRE(empty.tc() == empty.tree.costs().tc);
}

TEST_CASE("order file round trip and validation", "[tree]") {
  Rng rng(88);
  stemtn::testing::RandomNetOptions opt;
  opt.vertices = 7;
  opt.extra_edges = 5;
  opt.open_edges = 1;
  TensorNetwork net = random_network(rng, opt);
  std::vector<int> closed;
  for (const auto &[eid, e] : net.edges)
    if (!e.open) closed.push_back(eid);

  ContractionScheme s;
  s.network_hash = net.structural_hash_hex();
  s.sliced_edges = {closed[0], closed[2]};
  for (int e : s.sliced_edges) s.sliced_dims[e] = net.edges.at(e).dim;
  s.tree = random_tree(net, rng, s.sliced_edges);
  s.params.seeds = {1, 2, 3};

  nlohmann::json j = serialize_scheme(s);
  ContractionScheme back = parse_scheme(j, net);
  REQUIRE(serialize_scheme(back) == j);  // canonical json equality

  SECTION("unknown vertex id is named in the error") {
    nlohmann::json bad = j;
    bad["tree"][0] = 999;
    try {
      parse_scheme(bad, net);
      FAIL("expected SchemaError");
    } catch (const Error &e) {
      REQUIRE(e.kind() == ErrorKind::SchemaError);
      REQUIRE(std::string(e.what()).find("999") != std::string::npos);
    }
  }

  SECTION("hash mismatch against a different network") {
    Rng rng2(89);
    TensorNetwork other = random_network(rng2, opt);
    REQUIRE(other.structural_hash() != net.structural_hash());
    REQUIRE_THROWS_MATCHES(parse_scheme(j, other), Error,
                           Catch::Matchers::Predicate<Error>([](const Error &e) {
                             return e.kind() == ErrorKind::HashMismatch;
                           }));
  }

  SECTION("tampered cost summary is rejected") {
    nlohmann::json bad = j;
    bad["costs"]["cw"] = int(bad["costs"]["cw"]) + 1;
    REQUIRE_THROWS_MATCHES(parse_scheme(bad, net), Error,
                           Catch::Matchers::Predicate<Error>([](const Error &e) {
                             return e.kind() == ErrorKind::SchemaError;
                           }));
  }
}

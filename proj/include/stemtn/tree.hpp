#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "stemtn/errors.hpp"
#include "stemtn/network.hpp"

namespace stemtn {

using BigInt = boost::multiprecision::cpp_int;

inline double log2_big(const BigInt &x) {
  if (x <= 0) return 0.0;
  unsigned bits = boost::multiprecision::msb(x);
  if (bits <= 52) return std::log2(x.convert_to<double>());
  BigInt shifted = x >> (bits - 52);
  return std::log2(shifted.convert_to<double>()) + double(bits - 52);
}

// Rooted binary contraction tree over the vertices of a tensor network.
//
// Leaves carry network vertices. Each node tracks the edges alive at its
// subtree: edge e is alive at subtree S when it touches a leaf of S and is
// open or touches a leaf outside S. For an internal node u with children
// A and B the step edge set is E_u = alive(A) ∪ alive(B); the edges alive
// at u itself form E*_u ⊆ E_u. Step time cost is the product of the bond
// dimensions over E_u (2^|E_u| for bond-2 networks) and the contraction
// width is max |E*_u|; total time cost tc is the sum over internal nodes.
// Leaves cost nothing.
//
// The tree is self-contained: it copies bond dimensions, open flags and
// leaf incidence counts, so cost transformations never need the network.
struct TreeNode {
  int left = -1, right = -1, parent = -1;
  int leaf_vertex = -1;  // >= 0 iff leaf
  // (edge id, number of incident leaves inside this subtree), ascending ids,
  // restricted to edges alive at this subtree
  std::vector<std::pair<int, int>> alive;
  std::vector<int> step;  // E_u for internal nodes, ascending

  bool is_leaf() const { return leaf_vertex >= 0; }
  std::vector<int> alive_ids() const {
    std::vector<int> out;
    out.reserve(alive.size());
    for (const auto &[e, c] : alive) out.push_back(e);
    return out;
  }
};

struct EdgeInfo {
  int dim = 2;
  bool open = false;
  int incidence = 0;  // number of incident network vertices
};

struct TreeCosts {
  BigInt tc;
  double log2_tc = 0.0;
  int cw = 0;
  struct PerNode {
    int node;
    int step_width;   // |E_u|
    int out_width;    // |E*_u|
    BigInt time_cost; // product of dims over E_u
  };
  std::vector<PerNode> per_node;
};

struct StemInfo {
  std::vector<int> nodes;  // internal node ids, root first
  BigInt cost;
  double fraction = 0.0;  // stem cost / tc
};

class ContractionTree {
 public:
  std::map<int, EdgeInfo> edge_info;
  std::vector<TreeNode> nodes;  // leaves first, internal nodes appended
  int root = -1;
  std::map<int, int> leaf_of_vertex;

  // Leaves only; callers combine() their way up. `exclude` lists edges that
  // are treated as absent (sliced before tree construction).
  static ContractionTree make(const TensorNetwork &net, const std::vector<int> &exclude = {}) {
    ContractionTree t;
    for (const auto &[eid, e] : net.edges) {
      if (std::binary_search(exclude.begin(), exclude.end(), eid)) continue;
      t.edge_info[eid] = EdgeInfo{e.dim, e.open, int(e.endpoints.size())};
    }
    for (const auto &[vid, v] : net.vertices) {
      TreeNode leaf;
      leaf.leaf_vertex = vid;
      for (int e : v.axes) {
        if (!t.edge_info.count(e)) continue;  // sliced away
        const EdgeInfo &info = t.edge_info.at(e);
        if (info.open || info.incidence > 1) leaf.alive.emplace_back(e, 1);
      }
      std::sort(leaf.alive.begin(), leaf.alive.end());
      t.leaf_of_vertex[vid] = int(t.nodes.size());
      t.nodes.push_back(std::move(leaf));
    }
    return t;
  }

  int leaf_count() const { return int(leaf_of_vertex.size()); }
  int internal_count() const { return int(nodes.size()) - leaf_count(); }

  // Merges two roots into a new internal node and returns its id.
  int combine(int a, int b) {
    require(a >= 0 && a < int(nodes.size()) && b >= 0 && b < int(nodes.size()) && a != b,
            ErrorKind::MalformedNetwork, "combine: bad node ids");
    require(nodes[a].parent < 0 && nodes[b].parent < 0, ErrorKind::MalformedNetwork,
            "combine: nodes already have parents");
    int id = int(nodes.size());
    TreeNode u;
    u.left = a;
    u.right = b;
    merge_alive(nodes[a], nodes[b], u);
    nodes.push_back(std::move(u));
    nodes[a].parent = id;
    nodes[b].parent = id;
    root = id;
    return id;
  }

  void finalize() {
    int roots = 0;
    for (int i = 0; i < int(nodes.size()); ++i)
      if (nodes[i].parent < 0) {
        root = i;
        roots++;
      }
    require(roots == 1, ErrorKind::MalformedNetwork, "tree is not fully combined");
  }

  // Internal nodes in post-order (children before parents).
  std::vector<int> post_order() const {
    std::vector<int> out;
    if (root < 0) return out;
    std::vector<std::pair<int, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [n, expanded] = stack.back();
      stack.pop_back();
      if (nodes[n].is_leaf()) continue;
      if (expanded) {
        out.push_back(n);
      } else {
        stack.push_back({n, true});
        stack.push_back({nodes[n].right, false});
        stack.push_back({nodes[n].left, false});
      }
    }
    return out;
  }

  BigInt step_cost(int n) const {
    BigInt c = 1;
    for (int e : nodes[n].step) c *= edge_info.at(e).dim;
    return c;
  }

  TreeCosts costs() const {
    TreeCosts out;
    out.tc = 0;
    for (int n : post_order()) {
      BigInt c = step_cost(n);
      out.tc += c;
      int ow = int(nodes[n].alive.size());
      out.cw = std::max(out.cw, ow);
      out.per_node.push_back({n, int(nodes[n].step.size()), ow, std::move(c)});
    }
    out.log2_tc = log2_big(out.tc);
    return out;
  }

  // Heaviest root-to-tip path of internal nodes by summed step cost.
  // Ties descend into the child with the smaller node id.
  StemInfo extract_stem() const {
    StemInfo out;
    if (root < 0 || nodes[root].is_leaf()) return out;
    std::vector<BigInt> best(nodes.size(), 0);
    std::vector<BigInt> cost(nodes.size(), 0);
    for (int n : post_order()) {
      cost[n] = step_cost(n);
      const TreeNode &u = nodes[n];
      BigInt bl = nodes[u.left].is_leaf() ? BigInt(0) : best[u.left];
      BigInt br = nodes[u.right].is_leaf() ? BigInt(0) : best[u.right];
      best[n] = cost[n] + std::max(bl, br);
    }
    BigInt tc = 0;
    for (int n : post_order()) tc += cost[n];
    int cur = root;
    while (!nodes[cur].is_leaf()) {
      out.nodes.push_back(cur);
      out.cost += cost[cur];
      const TreeNode &u = nodes[cur];
      bool lleaf = nodes[u.left].is_leaf(), rleaf = nodes[u.right].is_leaf();
      if (lleaf && rleaf) break;
      int next;
      if (lleaf)
        next = u.right;
      else if (rleaf)
        next = u.left;
      else if (best[u.left] > best[u.right])
        next = u.left;
      else if (best[u.right] > best[u.left])
        next = u.right;
      else
        next = std::min(u.left, u.right);
      cur = next;
    }
    out.fraction = tc > 0 ? (out.cost.convert_to<double>() / tc.convert_to<double>()) : 0.0;
    if (tc > 0 && out.fraction > 1.0) out.fraction = 1.0;
    return out;
  }

  // Removes a (closed) edge from every node set; same tree shape, each
  // affected step cost divided by the edge's dimension.
  ContractionTree apply_slice(int edge) const {
    auto it = edge_info.find(edge);
    require(it != edge_info.end(), ErrorKind::EdgeNotFound,
            "apply_slice: edge " + std::to_string(edge) + " not in tree");
    require(!it->second.open, ErrorKind::OpenEdgeSliced,
            "apply_slice: edge " + std::to_string(edge) + " is open");
    ContractionTree out = *this;
    out.edge_info.erase(edge);
    for (TreeNode &n : out.nodes) {
      n.alive.erase(std::remove_if(n.alive.begin(), n.alive.end(),
                                   [&](const auto &p) { return p.first == edge; }),
                    n.alive.end());
      n.step.erase(std::remove(n.step.begin(), n.step.end(), edge), n.step.end());
    }
    return out;
  }

  // Recomputes alive/step sets bottom-up; used after structural rewrites.
  void recompute_sets() {
    for (int n : post_order()) {
      TreeNode &u = nodes[n];
      u.alive.clear();
      u.step.clear();
      merge_alive(nodes[u.left], nodes[u.right], u);
    }
  }

  void validate_against(const TensorNetwork &net, const std::vector<int> &sliced = {}) const {
    require(root >= 0, ErrorKind::MalformedNetwork, "tree has no root");
    require(leaf_of_vertex.size() == net.vertices.size(), ErrorKind::MalformedNetwork,
            "tree leaves do not cover the network vertices");
    require(nodes.size() == 2 * leaf_of_vertex.size() - 1, ErrorKind::MalformedNetwork,
            "tree node count is not 2n-1");
    for (const auto &[vid, n] : leaf_of_vertex) {
      require(net.vertices.count(vid), ErrorKind::MalformedNetwork, "tree leaf for unknown vertex");
      require(nodes[n].is_leaf() && nodes[n].leaf_vertex == vid, ErrorKind::MalformedNetwork,
              "leaf table corrupt");
    }
    for (int i = 0; i < int(nodes.size()); ++i) {
      const TreeNode &u = nodes[i];
      if (u.is_leaf()) continue;
      require(u.left >= 0 && u.right >= 0 && nodes[u.left].parent == i &&
                  nodes[u.right].parent == i,
              ErrorKind::MalformedNetwork, "parent/child links corrupt");
    }
    require(post_order().size() == nodes.size() - leaf_of_vertex.size(),
            ErrorKind::MalformedNetwork, "not all internal nodes reachable from the root");
    std::size_t expect_edges = 0;
    for (const auto &[eid, e] : net.edges)
      if (!std::binary_search(sliced.begin(), sliced.end(), eid)) expect_edges++;
    require(edge_info.size() == expect_edges, ErrorKind::MalformedNetwork,
            "tree edge table does not match the (sliced) network");
    ContractionTree fresh = rebuilt_copy(net);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      require(nodes[i].alive == fresh.nodes[i].alive && nodes[i].step == fresh.nodes[i].step,
              ErrorKind::MalformedNetwork, "tree edge sets are stale");
    }
    // at the root only open edges survive
    for (const auto &[e, c] : nodes[root].alive)
      require(edge_info.at(e).open, ErrorKind::MalformedNetwork,
              "closed edge alive at the root");
  }

  // Executes the tree on a network via pairwise contraction, returning the
  // value plus exact step-cost and width accounting. The per-step costs are
  // derived from the live network state, independently of this tree's
  // bookkeeping, so tests can compare both.
  struct Replay {
    Tensor value;
    BigInt step_cost_sum;
    int max_rank = 0;
    int steps = 0;
  };
  Replay replay_value(const TensorNetwork &net) const {
    Replay out;
    out.step_cost_sum = 0;
    TensorNetwork work = net;
    std::vector<int> vertex_of(nodes.size(), -1);
    for (const auto &[vid, n] : leaf_of_vertex) vertex_of[n] = vid;
    for (int n : post_order()) {
      int a = vertex_of[nodes[n].left], b = vertex_of[nodes[n].right];
      std::set<int> e_ab(work.vertices.at(a).axes.begin(), work.vertices.at(a).axes.end());
      e_ab.insert(work.vertices.at(b).axes.begin(), work.vertices.at(b).axes.end());
      BigInt c = 1;
      for (int e : e_ab) c *= work.edges.at(e).dim;
      out.step_cost_sum += c;
      work = work.contract_pair(a, b);
      int merged = work.vertices.rbegin()->first;
      vertex_of[n] = merged;
      out.max_rank = std::max(out.max_rank, work.vertices.at(merged).tensor.rank());
      out.steps++;
    }
    out.value = work.feynman_value();  // sums any remaining closed edges (none by construction)
    return out;
  }

  nlohmann::json to_nested_json() const {
    require(root >= 0, ErrorKind::MalformedNetwork, "tree has no root");
    return nested(root);
  }

  static ContractionTree from_nested_json(const nlohmann::json &j, const TensorNetwork &net,
                                          const std::vector<int> &sliced = {}) {
    ContractionTree t = make(net, sliced);
    std::vector<bool> used(t.nodes.size(), false);
    int top = t.build_nested(j, used);
    t.root = top;
    for (const auto &[vid, n] : t.leaf_of_vertex)
      require(used[n], ErrorKind::SchemaError,
              "tree does not cover vertex " + std::to_string(vid));
    t.finalize();
    return t;
  }

  void merge_alive(const TreeNode &a, const TreeNode &b, TreeNode &u) {
    std::size_t i = 0, j = 0;
    while (i < a.alive.size() || j < b.alive.size()) {
      int eid;
      int cnt = 0;
      if (j >= b.alive.size() || (i < a.alive.size() && a.alive[i].first < b.alive[j].first)) {
        eid = a.alive[i].first;
        cnt = a.alive[i].second;
        ++i;
      } else if (i >= a.alive.size() || b.alive[j].first < a.alive[i].first) {
        eid = b.alive[j].first;
        cnt = b.alive[j].second;
        ++j;
      } else {
        eid = a.alive[i].first;
        cnt = a.alive[i].second + b.alive[j].second;
        ++i;
        ++j;
      }
      u.step.push_back(eid);
      const EdgeInfo &info = edge_info.at(eid);
      if (info.open || cnt < info.incidence) u.alive.emplace_back(eid, cnt);
    }
  }

 private:
  ContractionTree rebuilt_copy(const TensorNetwork &net) const {
    ContractionTree fresh = *this;
    for (const auto &[vid, nidx] : fresh.leaf_of_vertex) {
      TreeNode &leaf = fresh.nodes[nidx];
      leaf.alive.clear();
      for (int e : net.vertices.at(vid).axes) {
        auto it = fresh.edge_info.find(e);
        if (it == fresh.edge_info.end()) continue;
        if (it->second.open || it->second.incidence > 1) leaf.alive.emplace_back(e, 1);
      }
      std::sort(leaf.alive.begin(), leaf.alive.end());
    }
    fresh.recompute_sets();
    return fresh;
  }

  nlohmann::json nested(int n) const {
    if (nodes[n].is_leaf()) return nodes[n].leaf_vertex;
    return nlohmann::json::array({nested(nodes[n].left), nested(nodes[n].right)});
  }

  int build_nested(const nlohmann::json &j, std::vector<bool> &used) {
    if (j.is_number_integer()) {
      int vid = j.get<int>();
      auto it = leaf_of_vertex.find(vid);
      require(it != leaf_of_vertex.end(), ErrorKind::SchemaError,
              "tree references unknown vertex id " + std::to_string(vid));
      require(!used[it->second], ErrorKind::SchemaError,
              "tree uses vertex " + std::to_string(vid) + " twice");
      used[it->second] = true;
      return it->second;
    }
    require(j.is_array() && j.size() == 2, ErrorKind::SchemaError,
            "tree nodes must be [left,right] pairs or leaf ids");
    int a = build_nested(j[0], used);
    int b = build_nested(j[1], used);
    return combine(a, b);
  }
};

}  // namespace stemtn

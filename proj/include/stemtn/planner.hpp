#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "stemtn/cmaes.hpp"
#include "stemtn/errors.hpp"
#include "stemtn/partition.hpp"
#include "stemtn/rng.hpp"
#include "stemtn/scheme.hpp"
#include "stemtn/tree.hpp"

namespace stemtn {

// Two-phase contraction planner. Phase 1 searches hypergraph-decomposition
// parameters (K, eps, eps') with CMA-ES, building one candidate tree per
// evaluation: a K-way top partition isolates the components, large
// components are thinned by repeated lopsided bipartitions that peel one
// small branch at a time, and the pieces are ordered exactly (subset DP for
// up to 8 leaves) or by greedy min-cost pairing. Phase 2 applies brute-force
// local optimization on windows around the stem, interleaved with greedy
// dynamic slicing until the contraction width fits the budget.

struct PlannerIterations {
  int cma = 50;        // objective evaluations per restart
  int local_pre = 20;  // local optimization before slicing
  int local_mid = 20;  // between consecutive sliced edges
  int local_post = 50; // after slicing
};

struct PlannerParams {
  int K = 4;
  double eps = 0.45;
  double eps_prime = 0.9;
  int N = 25;  // peel until a component has at most this many vertices
  PlannerIterations iterations;
  int target_cw = 29;
  int restarts = 5;
  std::uint64_t seed = 0;
  int window = 8;          // max leaves of a local-optimization window
  double stem_bias = 0.9;  // probability a window starts on the stem
  int cma_population = 8;
  double k_min = 2.0, k_max = 6.0;
  bool parallel_restarts = true;
};

namespace detail {

// Optimal binary merge structure over <= 8 sibling subtrees, by dynamic
// programming over subsets. Items are current roots in the builder; the
// cost model is the same product-of-dims step cost as ContractionTree.
struct MergePlan {
  std::vector<std::pair<int, int>> merges;  // refs: <k items, >=k earlier merges
  BigInt cost;
};

inline MergePlan optimal_merge_plan(const ContractionTree &t, const std::vector<int> &items) {
  int k = int(items.size());
  require(k >= 2 && k <= 20, ErrorKind::Infeasible, "merge plan arity");
  // local edge table
  std::map<int, int> local;
  struct LE {
    int dim;
    bool ext;
    unsigned items_mask;
  };
  std::vector<LE> edges;
  {
    std::map<int, int> inside_cnt;
    for (int i = 0; i < k; ++i)
      for (const auto &[e, c] : t.nodes[items[i]].alive) inside_cnt[e] += c;
    for (int i = 0; i < k; ++i)
      for (const auto &[e, c] : t.nodes[items[i]].alive) {
        auto it = local.find(e);
        if (it == local.end()) {
          const EdgeInfo &info = t.edge_info.at(e);
          bool ext = info.open || inside_cnt.at(e) < info.incidence;
          local[e] = int(edges.size());
          edges.push_back({info.dim, ext, 0u});
          it = local.find(e);
        }
        edges[it->second].items_mask |= 1u << i;
      }
  }
  int L = int(edges.size());
  unsigned full = (1u << k) - 1;
  bool bond2 = true;
  for (const LE &e : edges) bond2 &= (e.dim == 2);

  auto alive_at = [&](const LE &e, unsigned mask) {
    return (e.items_mask & mask) && (e.ext || (e.items_mask & full & ~mask));
  };

  std::vector<BigInt> cost(full + 1);
  std::vector<unsigned> split(full + 1, 0);
  std::vector<char> ready(full + 1, 0);
  for (int i = 0; i < k; ++i) ready[1u << i] = 1;

  if (bond2 && L <= 512) {
    // bitset fast path: |E_u| by popcount, costs as 2^e in unsigned __int128
    int words = (L + 63) / 64;
    std::vector<std::uint64_t> alive_bits((full + 1) * std::size_t(words), 0);
    for (unsigned m = 1; m <= full; ++m)
      for (int e = 0; e < L; ++e)
        if (alive_at(edges[e], m)) alive_bits[m * std::size_t(words) + e / 64] |= 1ull << (e % 64);
    std::vector<unsigned __int128> c128(full + 1, 0);
    bool overflow = false;
    for (unsigned m = 1; m <= full && !overflow; ++m) {
      if (ready[m]) continue;
      unsigned low = m & (~m + 1);
      unsigned __int128 best = 0;
      unsigned best_split = 0;
      for (unsigned sub = (m - 1) & m; sub; sub = (sub - 1) & m) {
        if (!(sub & low)) continue;  // canonical: low bit stays left
        unsigned rest = m ^ sub;
        int eu = 0;
        for (int w = 0; w < words; ++w)
          eu += __builtin_popcountll(alive_bits[sub * std::size_t(words) + w] |
                                     alive_bits[rest * std::size_t(words) + w]);
        if (eu > 120) {
          overflow = true;
          break;
        }
        unsigned __int128 c = c128[sub] + c128[rest] + ((unsigned __int128)1 << eu);
        if (best_split == 0 || c < best) {
          best = c;
          best_split = sub;
        }
      }
      c128[m] = best;
      split[m] = best_split;
      ready[m] = 1;
    }
    if (!overflow) {
      MergePlan plan;
      // reconstruct in post-order
      std::vector<int> ref_of(full + 1, -1);
      for (int i = 0; i < k; ++i) ref_of[1u << i] = i;
      std::function<int(unsigned)> build = [&](unsigned m) -> int {
        if (ref_of[m] >= 0) return ref_of[m];
        int a = build(split[m]);
        int b = build(m ^ split[m]);
        plan.merges.emplace_back(a, b);
        ref_of[m] = k + int(plan.merges.size()) - 1;
        return ref_of[m];
      };
      build(full);
      plan.cost = BigInt(std::uint64_t(c128[full] >> 64));
      plan.cost <<= 64;
      plan.cost += std::uint64_t(c128[full]);
      return plan;
    }
    std::fill(ready.begin(), ready.end(), 0);
    for (int i = 0; i < k; ++i) ready[1u << i] = 1;
  }

  // general path with exact BigInt products
  for (unsigned m = 1; m <= full; ++m) {
    if (ready[m]) continue;
    unsigned low = m & (~m + 1);
    BigInt best = -1;
    unsigned best_split = 0;
    for (unsigned sub = (m - 1) & m; sub; sub = (sub - 1) & m) {
      if (!(sub & low)) continue;
      unsigned rest = m ^ sub;
      BigInt step = 1;
      for (const LE &e : edges)
        if (alive_at(e, sub) || alive_at(e, rest)) step *= e.dim;
      BigInt c = cost[sub] + cost[rest] + step;
      if (best < 0 || c < best) {
        best = c;
        best_split = sub;
      }
    }
    cost[m] = best;
    split[m] = best_split;
    ready[m] = 1;
  }
  MergePlan plan;
  std::vector<int> ref_of(full + 1, -1);
  for (int i = 0; i < k; ++i) ref_of[1u << i] = i;
  std::function<int(unsigned)> build = [&](unsigned m) -> int {
    if (ref_of[m] >= 0) return ref_of[m];
    int a = build(split[m]);
    int b = build(m ^ split[m]);
    plan.merges.emplace_back(a, b);
    ref_of[m] = k + int(plan.merges.size()) - 1;
    return ref_of[m];
  };
  build(full);
  plan.cost = cost[full];
  return plan;
}

inline BigInt union_step_cost(const ContractionTree &t, int a, int b) {
  const auto &A = t.nodes[a].alive;
  const auto &B = t.nodes[b].alive;
  BigInt c = 1;
  std::size_t i = 0, j = 0;
  while (i < A.size() || j < B.size()) {
    int e;
    if (j >= B.size() || (i < A.size() && A[i].first < B[j].first))
      e = A[i++].first;
    else if (i >= A.size() || B[j].first < A[i].first)
      e = B[j++].first;
    else {
      e = A[i].first;
      ++i;
      ++j;
    }
    c *= t.edge_info.at(e).dim;
  }
  return c;
}

// Greedy min-cost pairing over the given roots; ties break on node ids.
inline int greedy_combine(ContractionTree &t, std::vector<int> items) {
  while (items.size() > 1) {
    int bi = 0, bj = 1;
    BigInt best = -1;
    for (std::size_t i = 0; i < items.size(); ++i)
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        BigInt c = union_step_cost(t, items[i], items[j]);
        if (best < 0 || c < best) {
          best = c;
          bi = int(i);
          bj = int(j);
        }
      }
    int merged = t.combine(items[bi], items[bj]);
    items.erase(items.begin() + bj);
    items[bi] = merged;
  }
  return items[0];
}

inline int apply_merge_plan(ContractionTree &t, const std::vector<int> &items,
                            const MergePlan &plan) {
  std::vector<int> refs = items;
  for (auto [a, b] : plan.merges) refs.push_back(t.combine(refs[a], refs[b]));
  return refs.back();
}

// Exhaustive ordering for small groups, greedy otherwise.
inline int combine_items(ContractionTree &t, const std::vector<int> &items, int dp_cap = 8) {
  require(!items.empty(), ErrorKind::Infeasible, "cannot combine an empty group");
  if (items.size() == 1) return items[0];
  if (int(items.size()) <= dp_cap)
    return apply_merge_plan(t, items, optimal_merge_plan(t, items));
  return greedy_combine(t, items);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Phase 1: decomposition-based tree construction
// ---------------------------------------------------------------------------

inline ContractionTree build_tree_by_decomposition(const TensorNetwork &net,
                                                   const PlannerParams &p,
                                                   std::optional<std::uint64_t> seed_override =
                                                       std::nullopt) {
  std::uint64_t seed = seed_override.value_or(p.seed);
  ContractionTree t = ContractionTree::make(net);
  int n = t.leaf_count();
  require(n >= 1, ErrorKind::Infeasible, "empty network");
  if (n == 1) {
    t.root = 0;
    return t;
  }
  Rng rng(stream_seed(seed, 0xB117D));

  auto order_leaves = [&](const std::vector<int> &verts) {
    std::vector<int> items;
    for (int v : verts) items.push_back(t.leaf_of_vertex.at(v));
    return detail::combine_items(t, items);
  };

  // Strip one small branch at a time with lopsided bipartitions; the first
  // peeled branch ends up closest to the root, so the remaining core grows
  // into the stem tip.
  auto peel_component = [&](std::vector<int> verts) {
    std::vector<int> branch_roots;
    while (int(verts.size()) > std::max(p.N, 2)) {
      Partition bp = bipartition_subset(net, verts, p.eps_prime, rng.next_u64());
      std::vector<int> &b0 = bp.blocks[0];
      std::vector<int> &b1 = bp.blocks[1];
      if (b0.empty() || b1.empty()) break;
      bool zero_is_branch =
          b0.size() < b1.size() || (b0.size() == b1.size() && b0.front() < b1.front());
      std::vector<int> &branch = zero_is_branch ? b0 : b1;
      std::vector<int> &rest = zero_is_branch ? b1 : b0;
      branch_roots.push_back(order_leaves(branch));
      verts = rest;
    }
    int core = order_leaves(verts);
    for (auto it = branch_roots.rbegin(); it != branch_roots.rend(); ++it)
      core = t.combine(*it, core);
    return core;
  };

  std::vector<int> all_verts;
  for (const auto &[vid, v] : net.vertices) all_verts.push_back(vid);

  if (n <= p.N) {
    order_leaves(all_verts);
  } else {
    int K = std::clamp(p.K, 2, std::min(6, n));
    Partition top = partition_hypergraph(net, K, p.eps, rng.next_u64());
    std::vector<std::vector<int>> blocks;
    for (auto &b : top.blocks)
      if (!b.empty()) blocks.push_back(std::move(b));
    std::sort(blocks.begin(), blocks.end(), [](const auto &a, const auto &b) {
      if (a.size() != b.size()) return a.size() > b.size();
      return a.front() < b.front();
    });
    std::vector<int> component_roots;
    for (const auto &block : blocks)
      component_roots.push_back(int(block.size()) > p.N ? peel_component(block)
                                                        : order_leaves(block));
    // merge order of the top-level components is found exhaustively
    detail::combine_items(t, component_roots);
  }
  t.finalize();
  return t;
}

// ---------------------------------------------------------------------------
// Phase 2a: brute-force local optimization of stem windows
// ---------------------------------------------------------------------------

namespace detail {

struct Window {
  std::vector<int> nodes;   // ascending internal node ids
  int top = -1;
  std::vector<int> inputs;  // children outside the window, ascending
};

inline std::optional<Window> sample_window(const ContractionTree &t, Rng &rng,
                                           const std::vector<int> &stem_nodes, int window,
                                           double stem_bias) {
  int leaves = t.leaf_count();
  int internals = t.internal_count();
  if (internals < 2) return std::nullopt;
  int start;
  if (!stem_nodes.empty() && rng.next_double() < stem_bias)
    start = stem_nodes[rng.next_below(stem_nodes.size())];
  else
    start = leaves + int(rng.next_below(std::uint64_t(internals)));

  std::set<int> w{start};
  std::vector<int> cand;
  auto push_neighbors = [&](int u) {
    const TreeNode &nd = t.nodes[u];
    if (nd.parent >= 0 && !w.count(nd.parent)) cand.push_back(nd.parent);
    for (int ch : {nd.left, nd.right})
      if (ch >= 0 && !t.nodes[ch].is_leaf() && !w.count(ch)) cand.push_back(ch);
  };
  push_neighbors(start);
  while (int(w.size()) < window - 1 && !cand.empty()) {
    std::size_t i = rng.next_below(cand.size());
    int u = cand[i];
    cand.erase(cand.begin() + int(i));
    if (w.count(u)) continue;
    w.insert(u);
    push_neighbors(u);
  }
  if (w.size() < 2) return std::nullopt;
  Window out;
  out.nodes.assign(w.begin(), w.end());
  for (int u : w) {
    if (!w.count(t.nodes[u].parent)) {
      if (out.top >= 0) return std::nullopt;  // not connected upward; resample
      out.top = u;
    }
    for (int ch : {t.nodes[u].left, t.nodes[u].right})
      if (!w.count(ch)) out.inputs.push_back(ch);
  }
  std::sort(out.inputs.begin(), out.inputs.end());
  return out;
}

inline int splice_window(ContractionTree &t, const Window &w, const MergePlan &plan) {
  int old_parent = t.nodes[w.top].parent;
  bool was_left = old_parent >= 0 && t.nodes[old_parent].left == w.top;
  std::vector<int> refs = w.inputs;
  for (std::size_t mi = 0; mi < plan.merges.size(); ++mi) {
    int id = w.nodes[mi];
    auto [a, b] = plan.merges[mi];
    int l = refs[a], r = refs[b];
    TreeNode &nd = t.nodes[id];
    nd.left = l;
    nd.right = r;
    nd.leaf_vertex = -1;
    nd.alive.clear();
    nd.step.clear();
    t.nodes[l].parent = id;
    t.nodes[r].parent = id;
    t.merge_alive(t.nodes[l], t.nodes[r], nd);
    refs.push_back(id);
  }
  int new_top = refs.back();
  t.nodes[new_top].parent = old_parent;
  if (old_parent >= 0) {
    if (was_left)
      t.nodes[old_parent].left = new_top;
    else
      t.nodes[old_parent].right = new_top;
  } else {
    t.root = new_top;
  }
  return new_top;
}

}  // namespace detail

// Repeatedly samples a connected window of internal nodes around the stem,
// finds the optimal internal structure over the window's inputs by subset
// DP, and splices it in when it is strictly cheaper. tc never increases.
inline ContractionTree local_optimize(const ContractionTree &tree, int window, int iterations,
                                      std::uint64_t seed, double stem_bias = 0.9) {
  ContractionTree t = tree;
  if (t.internal_count() < 2 || window < 3 || iterations <= 0) return t;
  Rng rng(stream_seed(seed, 0x10CA1));
  std::vector<int> stem_nodes = t.extract_stem().nodes;
  for (int it = 0; it < iterations; ++it) {
    auto w = detail::sample_window(t, rng, stem_nodes, window, stem_bias);
    if (!w) continue;
    BigInt before = 0;
    for (int u : w->nodes) before += t.step_cost(u);
    detail::MergePlan plan = detail::optimal_merge_plan(t, w->inputs);
    if (plan.cost < before) {
      std::vector<std::pair<int, int>> top_alive = t.nodes[w->top].alive;
      int new_top = detail::splice_window(t, *w, plan);
      // the window's interface to the rest of the tree is invariant
      require(t.nodes[new_top].alive == top_alive, ErrorKind::MalformedNetwork,
              "window rewrite changed the subtree interface");
      stem_nodes = t.extract_stem().nodes;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Phase 2b: greedy dynamic slicing
// ---------------------------------------------------------------------------

inline ContractionScheme dynamic_slice(const TensorNetwork &net, const ContractionTree &tree,
                                       int target_cw, int local_iters, std::uint64_t seed,
                                       int window = 8, double stem_bias = 0.9) {
  ContractionTree t = tree;
  std::vector<int> sliced;
  for (int round = 0;; ++round) {
    TreeCosts c = t.costs();
    if (c.cw <= target_cw) break;

    StemInfo stem = t.extract_stem();
    std::set<int> stem_set(stem.nodes.begin(), stem.nodes.end());
    std::map<int, BigInt> delta;   // tc drop per candidate edge
    std::map<int, int> stem_hits;  // occurrence count within stem steps
    for (const auto &pn : c.per_node)
      for (int e : t.nodes[pn.node].step) {
        if (t.edge_info.at(e).open) continue;
        delta[e] += pn.time_cost - pn.time_cost / t.edge_info.at(e).dim;
        if (stem_set.count(pn.node)) stem_hits[e]++;
      }
    if (delta.empty())
      fail(ErrorKind::Stuck, "no sliceable edges left; best achieved width " +
                                 std::to_string(c.cw));
    // primary: scheme tc after slicing; secondary: stem intersections; then id
    int best_edge = -1;
    BigInt best_score = -1;
    int best_hits = -1;
    for (const auto &[e, d] : delta) {
      BigInt score = BigInt(t.edge_info.at(e).dim) * (c.tc - d);
      int hits = stem_hits.count(e) ? stem_hits.at(e) : 0;
      bool better = best_edge < 0 || score < best_score ||
                    (score == best_score && hits > best_hits) ||
                    (score == best_score && hits == best_hits && e < best_edge);
      if (better) {
        best_edge = e;
        best_score = score;
        best_hits = hits;
      }
    }
    t = t.apply_slice(best_edge);
    sliced.push_back(best_edge);
    if (local_iters > 0)
      t = local_optimize(t, window, local_iters, stream_seed(seed, 0x511CE, round), stem_bias);
  }

  ContractionScheme s;
  std::sort(sliced.begin(), sliced.end());
  s.sliced_edges = sliced;
  for (int e : sliced) s.sliced_dims[e] = net.edges.at(e).dim;
  s.tree = std::move(t);
  s.network_hash = net.structural_hash_hex();
  return s;
}

// ---------------------------------------------------------------------------
// Phase 1 driver: CMA-ES over (K, eps, eps')
// ---------------------------------------------------------------------------

namespace detail {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline PlannerParams decode_point(const PlannerParams &base, const std::vector<double> &x) {
  PlannerParams p = base;
  p.K = int(std::lround(std::clamp(x[0], base.k_min, base.k_max)));
  p.eps = std::clamp(sigmoid(x[1]), 0.02, 0.98);
  p.eps_prime = std::clamp(sigmoid(x[2]), 0.02, 0.98);
  return p;
}

struct CmaOutcome {
  ContractionTree tree;
  PlannerParams params;
  std::vector<double> best_log2_by_eval;  // best-so-far after each evaluation
  BigInt best_tc;
};

inline CmaOutcome cma_search(const TensorNetwork &net, const PlannerParams &base, int restart) {
  CmaOutcome out;
  auto evaluate = [&](const std::vector<double> &x, int eval_idx) {
    PlannerParams p = decode_point(base, x);
    ContractionTree t =
        build_tree_by_decomposition(net, p, stream_seed(base.seed, restart, eval_idx));
    BigInt tc = t.costs().tc;
    if (out.best_log2_by_eval.empty() || tc < out.best_tc) {
      out.best_tc = tc;
      out.tree = std::move(t);
      out.params = p;
    }
    out.best_log2_by_eval.push_back(log2_big(out.best_tc));
    return log2_big(tc);
  };

  std::vector<double> x0 = {double(base.K), logit(std::clamp(base.eps, 0.02, 0.98)),
                            logit(std::clamp(base.eps_prime, 0.02, 0.98))};
  int budget = std::max(1, base.iterations.cma);
  evaluate(x0, 0);
  int evals = 1;
  Cmaes cma(x0, 0.7, base.cma_population, stream_seed(base.seed, 0xC3AE5, restart));
  while (evals + base.cma_population <= budget) {
    auto xs = cma.ask();
    std::vector<double> fitness;
    for (const auto &x : xs) fitness.push_back(evaluate(x, ++evals));
    cma.tell(fitness);
  }
  return out;
}

}  // namespace detail

struct OptimizeResult {
  ContractionTree tree;
  PlannerParams params;
  std::vector<std::vector<double>> traces;  // per restart: best-so-far log2 tc
};

// Best unsliced tree over `restarts` independent CMA-ES searches.
inline OptimizeResult optimize_params(const TensorNetwork &net, const PlannerParams &params) {
  int R = std::max(1, params.restarts);
  std::vector<detail::CmaOutcome> outcomes(R);
  if (params.parallel_restarts && R > 1) {
    std::vector<std::future<detail::CmaOutcome>> futs;
    for (int r = 0; r < R; ++r)
      futs.push_back(std::async(std::launch::async,
                                [&net, &params, r] { return detail::cma_search(net, params, r); }));
    for (int r = 0; r < R; ++r) outcomes[r] = futs[r].get();
  } else {
    for (int r = 0; r < R; ++r) outcomes[r] = detail::cma_search(net, params, r);
  }
  int best = 0;
  for (int r = 1; r < R; ++r)
    if (outcomes[r].best_tc < outcomes[best].best_tc) best = r;
  OptimizeResult res;
  res.tree = std::move(outcomes[best].tree);
  res.params = outcomes[best].params;
  for (auto &o : outcomes) res.traces.push_back(std::move(o.best_log2_by_eval));
  return res;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

struct PlanResult {
  ContractionScheme scheme;
  std::vector<double> restart_log2_tc;  // final scheme cost per restart
  std::vector<std::vector<double>> traces;
  int best_restart = 0;
};

inline PlanResult plan(const TensorNetwork &net, const PlannerParams &params) {
  int R = std::max(1, params.restarts);
  struct RestartOut {
    ContractionScheme scheme;
    BigInt tc;
    std::vector<double> trace;
  };
  auto run_one = [&](int r) {
    detail::CmaOutcome c = detail::cma_search(net, params, r);
    ContractionTree t = local_optimize(c.tree, params.window, params.iterations.local_pre,
                                       stream_seed(params.seed, 0x9E, r), params.stem_bias);
    ContractionScheme s =
        dynamic_slice(net, t, params.target_cw, params.iterations.local_mid,
                      stream_seed(params.seed, 0x51, r), params.window, params.stem_bias);
    s.tree = local_optimize(s.tree, params.window, params.iterations.local_post,
                            stream_seed(params.seed, 0xAF, r), params.stem_bias);
    s.params.K = c.params.K;
    s.params.eps = c.params.eps;
    s.params.eps_prime = c.params.eps_prime;
    s.params.seeds = {params.seed, std::uint64_t(r)};
    return RestartOut{std::move(s), BigInt(0), std::move(c.best_log2_by_eval)};
  };
  std::vector<RestartOut> outs(R);
  if (params.parallel_restarts && R > 1) {
    std::vector<std::future<RestartOut>> futs;
    for (int r = 0; r < R; ++r)
      futs.push_back(std::async(std::launch::async, [&run_one, r] { return run_one(r); }));
    for (int r = 0; r < R; ++r) outs[r] = futs[r].get();
  } else {
    for (int r = 0; r < R; ++r) outs[r] = run_one(r);
  }
  PlanResult res;
  int best = 0;
  for (int r = 0; r < R; ++r) {
    outs[r].tc = outs[r].scheme.tc();
    res.restart_log2_tc.push_back(log2_big(outs[r].tc));
    res.traces.push_back(std::move(outs[r].trace));
    if (outs[r].tc < outs[best].tc) best = r;
  }
  res.scheme = std::move(outs[best].scheme);
  res.best_restart = best;
  return res;
}

}  // namespace stemtn

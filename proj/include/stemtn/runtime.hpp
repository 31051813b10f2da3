#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stemtn/errors.hpp"
#include "stemtn/scheme.hpp"
#include "stemtn/tree.hpp"

namespace stemtn {

enum class Precision { Single, Double };

inline const char *precision_name(Precision p) {
  return p == Precision::Single ? "single" : "double";
}

struct CompileOptions {
  int merge_min_dim = 32;  // branch absorptions below this size get merged
  Precision precision = Precision::Single;
  int width_budget = 30;   // refuse plans wider than this (log2 elements)
};

// One pairwise contraction lowered to transpose-transpose-GEMM. Axis groups
// relative to the operands' sorted-edge axis order:
//   D: batch edges alive in both children and in the output (true hyperedges)
//   K: summed edges (alive in both children, dead in the output)
//   M/N: the remaining edges of the left/right child.
// The kernel loops D outermost, then an M*K x K*N product per batch index.
struct Step {
  int node, lhs, rhs;
  bool is_branch;  // computable independently of the slice assignment
  std::vector<int> lperm, rperm;  // child axes -> [D|M|K] and [D|K|N]
  std::vector<int> operm;         // [D|M|N] -> sorted output axes
  std::int64_t D, M, N, K;
  std::vector<int> out_dims;  // sorted-output-axis dims
  std::uint64_t mults;        // D*M*N*K
};

struct LeafPrep {
  int node;
  int vertex;
  // (axis position in the original tensor, index into sliced_edges), applied
  // in descending axis order
  std::vector<std::pair<int, int>> sliced_axes;
  std::vector<int> perm;  // post-restriction axes -> ascending edge id
};

struct ExecutablePlan {
  ContractionScheme scheme;  // as planned (costs metadata refer to this tree)
  ContractionTree exec_tree; // after branch merging; what actually runs
  TensorNetwork net;
  CompileOptions options;
  std::vector<Step> steps;   // post-order over exec_tree internals
  std::map<int, LeafPrep> leaf_prep;
  std::vector<int> open_edges;
  std::uint64_t subtasks = 1;
  int merged_groups = 0;
  BigInt exec_tc;  // formula cost of exec_tree (>= scheme tree cost when merged)
  int exec_cw = 0;
  std::uint64_t identity = 0;  // guards cache/plan pairing
};

struct SubtaskResult {
  std::uint64_t assignment = 0;
  Tensor value;
  int step_count = 0;
  std::uint64_t mults = 0;
  std::uint64_t peak_elements = 0;  // largest intermediate tensor produced
};

namespace detail_rt {

template <class R>
struct TypedTensor {
  std::vector<int> dims;
  std::vector<std::complex<R>> data;
  std::size_t size() const { return data.size(); }
};

template <class R>
TypedTensor<R> from_tensor(const Tensor &t) {
  TypedTensor<R> out;
  out.dims = t.dims;
  out.data.reserve(t.data.size());
  for (const cx &v : t.data)
    out.data.emplace_back(std::complex<R>(R(v.real()), R(v.imag())));
  return out;
}

template <class R>
Tensor to_tensor(const TypedTensor<R> &t) {
  Tensor out;
  out.dims = t.dims;
  out.data.assign(t.data.size(), cx(0, 0));
  for (std::size_t i = 0; i < t.data.size(); ++i)
    out.data[i] = cx(double(t.data[i].real()), double(t.data[i].imag()));
  return out;
}

template <class R>
TypedTensor<R> permute(const TypedTensor<R> &t, const std::vector<int> &perm) {
  int r = int(t.dims.size());
  if (r <= 1) return t;
  bool identity = true;
  for (int i = 0; i < r; ++i) identity &= (perm[i] == i);
  if (identity) return t;
  TypedTensor<R> out;
  out.dims.resize(r);
  for (int i = 0; i < r; ++i) out.dims[i] = t.dims[perm[i]];
  out.data.resize(t.data.size());
  std::vector<std::size_t> in_strides(r, 1);
  for (int i = r - 2; i >= 0; --i) in_strides[i] = in_strides[i + 1] * std::size_t(t.dims[i + 1]);
  std::vector<std::size_t> step(r);
  for (int i = 0; i < r; ++i) step[i] = in_strides[perm[i]];
  std::vector<int> idx(r, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < out.data.size(); ++flat) {
    out.data[flat] = t.data[src];
    for (int ax = r - 1; ax >= 0; --ax) {
      idx[ax]++;
      src += step[ax];
      if (idx[ax] < out.dims[ax]) break;
      src -= std::size_t(out.dims[ax]) * step[ax];
      idx[ax] = 0;
    }
  }
  return out;
}

}  // namespace detail_rt

// Read-only partial results for the slice-independent part of the plan,
// shared by every subtask. Built once before dispatch.
struct BranchCache {
  std::uint64_t plan_identity = 0;
  std::uint64_t mults = 0;
  std::uint64_t elements = 0;
  std::map<int, detail_rt::TypedTensor<float>> single;
  std::map<int, detail_rt::TypedTensor<double>> dbl;
};

namespace detail_rt {

inline std::vector<int> positions_in(const std::vector<int> &sorted_ids,
                                     const std::vector<int> &wanted) {
  std::vector<int> out;
  for (int w : wanted) {
    auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), w);
    out.push_back(int(it - sorted_ids.begin()));
  }
  return out;
}

// Branch-merge rewrite: walking the stem from tip to root, group consecutive
// small branch absorptions, pre-contract each group into one tensor and
// absorb it in a single step. Node ids of collapsed stem nodes are reused,
// keeping the node count at 2n-1 and all outside links valid.
inline int merge_small_branches(ContractionTree &t, int merge_min_dim) {
  StemInfo stem = t.extract_stem();
  if (int(stem.nodes.size()) < 3 || merge_min_dim <= 1) return 0;
  const std::vector<int> &S = stem.nodes;  // root..tip
  int L = int(S.size()) - 1;

  auto branch_of = [&](int i) {
    const TreeNode &u = t.nodes[S[i]];
    return u.left == S[i + 1] ? u.right : u.left;
  };
  auto size_of = [&](int node) -> double {
    double sz = 1;
    for (const auto &[e, c] : t.nodes[node].alive) sz *= t.edge_info.at(e).dim;
    return sz;
  };

  int groups_rewritten = 0;
  int i = L - 1;
  while (i >= 0) {
    if (size_of(branch_of(i)) >= merge_min_dim) {
      --i;
      continue;
    }
    // open a group [j..i] walking rootward while branches stay small and the
    // accumulated size is below the threshold
    double acc = size_of(branch_of(i));
    int j = i - 1;
    while (j >= 0 && acc < merge_min_dim && size_of(branch_of(j)) < merge_min_dim) {
      acc *= size_of(branch_of(j));
      --j;
    }
    int lo = j + 1;  // group covers stem indices [lo..i], absorb order i..lo
    int g = i - lo + 1;
    if (g >= 2) {
      std::vector<int> members;  // branch nodes in absorb order (tipward first)
      for (int k = i; k >= lo; --k) members.push_back(branch_of(k));
      int below = S[i + 1];
      // reuse the collapsed stem ids: S[lo] stays the absorb node so links
      // from above remain valid; the rest become the merge chain
      std::vector<int> free_ids;
      for (int k = i; k > lo; --k) free_ids.push_back(S[k]);
      int chain = members[0];
      for (int m = 1; m < g; ++m) {
        int id = free_ids[m - 1];
        TreeNode &nd = t.nodes[id];
        nd.left = chain;
        nd.right = members[m];
        nd.leaf_vertex = -1;
        nd.alive.clear();
        nd.step.clear();
        t.nodes[chain].parent = id;
        t.nodes[members[m]].parent = id;
        t.merge_alive(t.nodes[chain], t.nodes[members[m]], nd);
        chain = id;
      }
      TreeNode &absorb = t.nodes[S[lo]];
      absorb.left = below;
      absorb.right = chain;
      absorb.alive.clear();
      absorb.step.clear();
      t.nodes[below].parent = S[lo];
      t.nodes[chain].parent = S[lo];
      t.merge_alive(t.nodes[below], t.nodes[chain], absorb);
      groups_rewritten++;
    }
    i = lo - 1;
  }
  if (groups_rewritten) t.recompute_sets();
  return groups_rewritten;
}

}  // namespace detail_rt

inline ExecutablePlan compile(const TensorNetwork &net, const ContractionScheme &scheme,
                              const CompileOptions &options = {}) {
  require(scheme.network_hash == net.structural_hash_hex(), ErrorKind::HashMismatch,
          "scheme was planned for a different network");
  scheme.tree.validate_against(net, scheme.sliced_edges);

  ExecutablePlan plan;
  plan.scheme = scheme;
  plan.net = net;
  plan.options = options;
  plan.exec_tree = scheme.tree;
  plan.subtasks = scheme.subtasks();
  plan.merged_groups = detail_rt::merge_small_branches(plan.exec_tree, options.merge_min_dim);

  TreeCosts ec = plan.exec_tree.costs();
  plan.exec_tc = ec.tc;
  plan.exec_cw = ec.cw;
  require(ec.cw <= options.width_budget, ErrorKind::WidthExceedsBudget,
          "plan width " + std::to_string(ec.cw) + " exceeds budget " +
              std::to_string(options.width_budget));

  for (const auto &[eid, e] : net.edges)
    if (e.open) plan.open_edges.push_back(eid);

  const ContractionTree &t = plan.exec_tree;
  // per-node slice dependence
  std::vector<char> touches(t.nodes.size(), 0);
  for (const auto &[vid, nidx] : t.leaf_of_vertex) {
    const Vertex &v = net.vertices.at(vid);
    LeafPrep prep;
    prep.node = nidx;
    prep.vertex = vid;
    std::vector<int> kept_axes;
    for (int ax = 0; ax < int(v.axes.size()); ++ax) {
      auto it = std::lower_bound(scheme.sliced_edges.begin(), scheme.sliced_edges.end(),
                                 v.axes[ax]);
      if (it != scheme.sliced_edges.end() && *it == v.axes[ax]) {
        prep.sliced_axes.emplace_back(ax, int(it - scheme.sliced_edges.begin()));
        touches[nidx] = 1;
      } else {
        kept_axes.push_back(v.axes[ax]);
      }
    }
    std::sort(prep.sliced_axes.rbegin(), prep.sliced_axes.rend());
    std::vector<int> sorted_axes = kept_axes;
    std::sort(sorted_axes.begin(), sorted_axes.end());
    for (int e : sorted_axes) {
      auto it = std::find(kept_axes.begin(), kept_axes.end(), e);
      prep.perm.push_back(int(it - kept_axes.begin()));
    }
    plan.leaf_prep[nidx] = std::move(prep);
  }

  for (int n : t.post_order()) {
    const TreeNode &u = t.nodes[n];
    touches[n] = touches[u.left] | touches[u.right];
    Step s;
    s.node = n;
    s.lhs = u.left;
    s.rhs = u.right;
    std::vector<int> la = t.nodes[u.left].alive_ids();
    std::vector<int> lb = t.nodes[u.right].alive_ids();
    std::vector<int> lu = u.alive_ids();
    std::vector<int> shared, d_edges, k_edges, m_edges, n_edges;
    std::set_intersection(la.begin(), la.end(), lb.begin(), lb.end(),
                          std::back_inserter(shared));
    for (int e : shared) {
      if (std::binary_search(lu.begin(), lu.end(), e))
        d_edges.push_back(e);
      else
        k_edges.push_back(e);
    }
    for (int e : la)
      if (!std::binary_search(shared.begin(), shared.end(), e)) m_edges.push_back(e);
    for (int e : lb)
      if (!std::binary_search(shared.begin(), shared.end(), e)) n_edges.push_back(e);

    auto dim_of = [&](int e) { return t.edge_info.at(e).dim; };
    auto prod = [&](const std::vector<int> &es) {
      std::int64_t p = 1;
      for (int e : es) p *= dim_of(e);
      return p;
    };
    s.D = prod(d_edges);
    s.M = prod(m_edges);
    s.N = prod(n_edges);
    s.K = prod(k_edges);
    s.mults = std::uint64_t(s.D) * std::uint64_t(s.M) * std::uint64_t(s.N) * std::uint64_t(s.K);

    std::vector<int> l_order = d_edges, r_order = d_edges, o_order = d_edges;
    l_order.insert(l_order.end(), m_edges.begin(), m_edges.end());
    l_order.insert(l_order.end(), k_edges.begin(), k_edges.end());
    r_order.insert(r_order.end(), k_edges.begin(), k_edges.end());
    r_order.insert(r_order.end(), n_edges.begin(), n_edges.end());
    o_order.insert(o_order.end(), m_edges.begin(), m_edges.end());
    o_order.insert(o_order.end(), n_edges.begin(), n_edges.end());
    s.lperm = detail_rt::positions_in(la, l_order);
    s.rperm = detail_rt::positions_in(lb, r_order);
    // output is produced in o_order; permute it to ascending edge id
    for (int e : lu) {
      auto it = std::find(o_order.begin(), o_order.end(), e);
      s.operm.push_back(int(it - o_order.begin()));
    }
    for (int e : lu) s.out_dims.push_back(dim_of(e));
    s.is_branch = !touches[n];
    plan.steps.push_back(std::move(s));
  }

  plan.identity = fnv1a64_u64(net.structural_hash(),
                              fnv1a64_u64(std::uint64_t(plan.steps.size()),
                                          fnv1a64_u64(std::uint64_t(options.merge_min_dim),
                                                      0xCBF29CE484222325ull)));
  for (int e : scheme.sliced_edges) plan.identity = fnv1a64_u64(std::uint64_t(e), plan.identity);
  plan.identity = fnv1a64_u64(options.precision == Precision::Single ? 1 : 2, plan.identity);
  return plan;
}

namespace detail_rt {

template <class R>
struct Engine {
  const ExecutablePlan &plan;
  const std::map<int, TypedTensor<R>> *cache = nullptr;

  TypedTensor<R> load_leaf(int node, std::uint64_t assignment) const {
    const LeafPrep &prep = plan.leaf_prep.at(node);
    Tensor t = plan.net.vertices.at(prep.vertex).tensor;
    if (!prep.sliced_axes.empty()) {
      // digit of sliced edge i: mixed-radix, first sliced edge most significant
      std::vector<int> digits(plan.scheme.sliced_edges.size(), 0);
      std::uint64_t rest = assignment;
      for (std::size_t i = plan.scheme.sliced_edges.size(); i-- > 0;) {
        int d = plan.scheme.sliced_dims.at(plan.scheme.sliced_edges[i]);
        digits[i] = int(rest % std::uint64_t(d));
        rest /= std::uint64_t(d);
      }
      for (const auto &[axis, slice_idx] : prep.sliced_axes)
        t = restrict_axis(t, axis, digits[slice_idx]);
    }
    TypedTensor<R> typed = from_tensor<R>(t);
    return permute(typed, prep.perm);
  }

  TypedTensor<R> gemm(const Step &s, const TypedTensor<R> &a, const TypedTensor<R> &b) const {
    TypedTensor<R> al = permute(a, s.lperm);
    TypedTensor<R> bl = permute(b, s.rperm);
    std::size_t D = std::size_t(s.D), M = std::size_t(s.M), N = std::size_t(s.N),
                K = std::size_t(s.K);
    TypedTensor<R> c;
    c.data.assign(D * M * N, std::complex<R>(0, 0));
    const std::complex<R> *pa = al.data.data();
    const std::complex<R> *pb = bl.data.data();
    std::complex<R> *pc = c.data.data();
    for (std::size_t d = 0; d < D; ++d) {
      const std::complex<R> *ba = pa + d * M * K;
      const std::complex<R> *bb = pb + d * K * N;
      std::complex<R> *bc = pc + d * M * N;
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t k = 0; k < K; ++k) {
          std::complex<R> amk = ba[m * K + k];
          const std::complex<R> *brow = bb + k * N;
          std::complex<R> *crow = bc + m * N;
          for (std::size_t n = 0; n < N; ++n) crow[n] += amk * brow[n];
        }
    }
    // reshape [D|M|N] into output axes then sort axes by edge id
    c.dims.clear();
    {
      const std::vector<int> &od = s.out_dims;
      // dims in produced order: recover from operm inverse
      std::vector<int> produced(od.size());
      for (std::size_t i = 0; i < od.size(); ++i) produced[s.operm[i]] = od[i];
      c.dims = produced;
    }
    return permute(c, s.operm);
  }

  SubtaskResult run(std::uint64_t assignment) const {
    SubtaskResult out;
    out.assignment = assignment;
    std::map<int, TypedTensor<R>> live;
    auto fetch = [&](int node) -> TypedTensor<R> {
      auto it = live.find(node);
      if (it != live.end()) {
        TypedTensor<R> v = std::move(it->second);
        live.erase(it);
        return v;
      }
      if (cache) {
        auto c = cache->find(node);
        if (c != cache->end()) return c->second;
      }
      require(plan.exec_tree.nodes[node].is_leaf(), ErrorKind::SubtaskFailure,
              "operand for node " + std::to_string(node) + " unavailable");
      return load_leaf(node, assignment);
    };
    for (const Step &s : plan.steps) {
      if (cache && s.is_branch) continue;
      TypedTensor<R> a = fetch(s.lhs);
      TypedTensor<R> b = fetch(s.rhs);
      TypedTensor<R> c = gemm(s, a, b);
      out.step_count++;
      out.mults += s.mults;
      out.peak_elements = std::max<std::uint64_t>(out.peak_elements, c.size());
      live.emplace(s.node, std::move(c));
    }
    int root = plan.exec_tree.root;
    TypedTensor<R> result = live.count(root) ? std::move(live.at(root)) : fetch(root);
    out.value = to_tensor(result);
    return out;
  }
};

template <class R>
std::map<int, TypedTensor<R>> build_cache_typed(const ExecutablePlan &plan, std::uint64_t &mults,
                                                std::uint64_t &elements) {
  Engine<R> eng{plan, nullptr};
  std::map<int, TypedTensor<R>> all;
  for (const Step &s : plan.steps) {
    if (!s.is_branch) continue;
    auto fetch = [&](int node) -> TypedTensor<R> {
      auto it = all.find(node);
      if (it != all.end()) return it->second;
      return eng.load_leaf(node, 0);
    };
    TypedTensor<R> a = fetch(s.lhs);
    TypedTensor<R> b = fetch(s.rhs);
    all.emplace(s.node, eng.gemm(s, a, b));
    mults += s.mults;
  }
  // keep only outputs consumed by non-branch steps (or the root)
  std::set<int> needed;
  for (const Step &s : plan.steps)
    if (!s.is_branch) {
      needed.insert(s.lhs);
      needed.insert(s.rhs);
    }
  needed.insert(plan.exec_tree.root);
  std::map<int, TypedTensor<R>> kept;
  for (auto &[node, tensor] : all)
    if (needed.count(node)) {
      elements += tensor.size();
      kept.emplace(node, std::move(tensor));
    }
  return kept;
}

}  // namespace detail_rt

inline BranchCache build_branch_cache(const ExecutablePlan &plan) {
  BranchCache cache;
  cache.plan_identity = plan.identity;
  if (plan.options.precision == Precision::Single)
    cache.single = detail_rt::build_cache_typed<float>(plan, cache.mults, cache.elements);
  else
    cache.dbl = detail_rt::build_cache_typed<double>(plan, cache.mults, cache.elements);
  return cache;
}

inline SubtaskResult run_subtask(const ExecutablePlan &plan, std::uint64_t assignment,
                                 const BranchCache *cache = nullptr) {
  require(assignment < plan.subtasks, ErrorKind::SubtaskFailure, "assignment out of range");
  if (cache)
    require(cache->plan_identity == plan.identity, ErrorKind::SubtaskFailure,
            "branch cache belongs to a different plan");
  if (plan.options.precision == Precision::Single) {
    detail_rt::Engine<float> eng{plan, cache ? &cache->single : nullptr};
    return eng.run(assignment);
  }
  detail_rt::Engine<double> eng{plan, cache ? &cache->dbl : nullptr};
  return eng.run(assignment);
}

struct RunReport {
  double log2_tc = 0;
  int cw = 0;
  std::uint64_t subtasks = 1;
  std::uint64_t mult_count = 0;
  std::uint64_t branch_mults = 0;
  double wall_seconds = 0;
  double p50_ms = 0, p90_ms = 0, p99_ms = 0;
  int parallelism = 1;
  std::string precision;
  std::uint64_t peak_elements = 0;
  int merged_groups = 0;

  nlohmann::json to_json() const {
    return {{"log2_tc", log2_tc},
            {"cw", cw},
            {"subtasks", subtasks},
            {"mult_count", mult_count},
            {"branch_mults", branch_mults},
            {"wall_seconds", wall_seconds},
            {"per_subtask_ms", {{"p50", p50_ms}, {"p90", p90_ms}, {"p99", p99_ms}}},
            {"parallelism", parallelism},
            {"precision", precision},
            {"peak_elements", peak_elements},
            {"merged_groups", merged_groups}};
  }
  // view without timing or run-configuration fields, for determinism checks
  nlohmann::json deterministic_json() const {
    nlohmann::json j = to_json();
    j.erase("wall_seconds");
    j.erase("per_subtask_ms");
    j.erase("parallelism");
    return j;
  }
};

// Executes every subtask and sums the results in ascending assignment order
// regardless of completion order, so the output is bit-stable across
// parallelism levels.
inline std::pair<Tensor, RunReport> run_scheme(const ExecutablePlan &plan, int parallelism = 1) {
  require(parallelism >= 1, ErrorKind::SubtaskFailure, "parallelism must be positive");
  auto t0 = std::chrono::steady_clock::now();
  BranchCache cache = build_branch_cache(plan);

  std::uint64_t n = plan.subtasks;
  std::vector<Tensor> values(n);
  std::vector<double> ms(n, 0.0);
  std::vector<std::uint64_t> mults(n, 0);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::string fail_msg;
  std::mutex fail_mu;
  std::uint64_t peak = 0;
  std::mutex peak_mu;

  auto worker = [&] {
    for (;;) {
      std::uint64_t a = next.fetch_add(1);
      if (a >= n || failed.load()) return;
      try {
        auto s0 = std::chrono::steady_clock::now();
        SubtaskResult r = run_subtask(plan, a, &cache);
        auto s1 = std::chrono::steady_clock::now();
        values[a] = std::move(r.value);
        ms[a] = std::chrono::duration<double, std::milli>(s1 - s0).count();
        mults[a] = r.mults;
        std::lock_guard<std::mutex> lk(peak_mu);
        peak = std::max(peak, r.peak_elements);
      } catch (const std::exception &e) {
        std::lock_guard<std::mutex> lk(fail_mu);
        fail_msg = "subtask " + std::to_string(a) + ": " + e.what();
        failed.store(true);
        return;
      }
    }
  };
  if (parallelism == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < parallelism; ++i) pool.emplace_back(worker);
    for (auto &th : pool) th.join();
  }
  require(!failed.load(), ErrorKind::SubtaskFailure, fail_msg);

  Tensor sum(values[0].dims);
  for (std::uint64_t a = 0; a < n; ++a) {
    require(values[a].dims == sum.dims, ErrorKind::SubtaskFailure, "subtask shape mismatch");
    for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += values[a].data[i];
  }
  auto t1 = std::chrono::steady_clock::now();

  RunReport rep;
  auto costs = plan.scheme.costs();
  rep.log2_tc = costs.log2_tc;
  rep.cw = costs.cw;
  rep.subtasks = n;
  rep.branch_mults = cache.mults;
  rep.mult_count = cache.mults;
  for (std::uint64_t a = 0; a < n; ++a) rep.mult_count += mults[a];
  rep.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  std::vector<double> sorted_ms = ms;
  std::sort(sorted_ms.begin(), sorted_ms.end());
  auto quantile = [&](double q) {
    if (sorted_ms.empty()) return 0.0;
    std::size_t i = std::size_t(q * double(sorted_ms.size() - 1) + 0.5);
    return sorted_ms[std::min(i, sorted_ms.size() - 1)];
  };
  rep.p50_ms = quantile(0.50);
  rep.p90_ms = quantile(0.90);
  rep.p99_ms = quantile(0.99);
  rep.parallelism = parallelism;
  rep.precision = precision_name(plan.options.precision);
  rep.peak_elements = peak;
  rep.merged_groups = plan.merged_groups;
  return {std::move(sum), std::move(rep)};
}

}  // namespace stemtn

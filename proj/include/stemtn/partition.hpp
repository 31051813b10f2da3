#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "stemtn/errors.hpp"
#include "stemtn/network.hpp"
#include "stemtn/rng.hpp"

namespace stemtn {

// Balanced K-way hypergraph partitioning by seeded greedy growth followed by
// move-based Fiduccia-Mattheyses refinement with the cut-net metric (number
// of hyperedges spanning more than one block). Block sizes are bounded by
// (1+eps)*ceil(n/K). Deterministic per seed. This is a self-contained stand-in
// for a production partitioner; the planner only needs "good", not optimal.

struct Partition {
  std::vector<std::vector<int>> blocks;  // vertex ids, ascending within block
  std::vector<int> cut_edges;            // hyperedge ids spanning >1 block
  int cut() const { return int(cut_edges.size()); }
};

namespace detail {

// Subset view with compressed indices. Only hyperedges with >= 2 endpoints
// inside the subset can contribute to a cut.
struct SubsetView {
  std::vector<int> verts;                // sorted vertex ids
  std::vector<std::vector<int>> pins;    // per local edge: local vertex idx
  std::vector<int> edge_ids;             // local edge -> network edge id
  std::vector<std::vector<int>> nets_of; // per local vertex: local edge idx

  static SubsetView make(const TensorNetwork &net, const std::vector<int> &verts_in) {
    SubsetView s;
    s.verts = verts_in;
    std::sort(s.verts.begin(), s.verts.end());
    std::map<int, int> local;
    for (int i = 0; i < int(s.verts.size()); ++i) local[s.verts[i]] = i;
    s.nets_of.resize(s.verts.size());
    for (const auto &[eid, e] : net.edges) {
      std::vector<int> inside;
      for (int v : e.endpoints) {
        auto it = local.find(v);
        if (it != local.end()) inside.push_back(it->second);
      }
      if (inside.size() < 2) continue;
      int le = int(s.pins.size());
      for (int v : inside) s.nets_of[v].push_back(le);
      s.pins.push_back(std::move(inside));
      s.edge_ids.push_back(eid);
    }
    return s;
  }

  int n() const { return int(verts.size()); }
};

inline std::vector<int> bfs_order(const SubsetView &s, int start) {
  std::vector<int> order;
  std::vector<bool> seen(s.n(), false);
  std::queue<int> q;
  q.push(start);
  seen[start] = true;
  while (!q.empty() || int(order.size()) < s.n()) {
    if (q.empty()) {  // disconnected: continue from the smallest unseen vertex
      for (int v = 0; v < s.n(); ++v)
        if (!seen[v]) {
          q.push(v);
          seen[v] = true;
          break;
        }
    }
    int v = q.front();
    q.pop();
    order.push_back(v);
    for (int e : s.nets_of[v])
      for (int w : s.pins[e])
        if (!seen[w]) {
          seen[w] = true;
          q.push(w);
        }
  }
  return order;
}

// One FM bipartition run from a BFS-ball initial split.
struct BisectResult {
  std::vector<int> side;  // 0/1 per local vertex
  int cut = 0;
};

inline BisectResult fm_bipartition_run(const SubsetView &s, int cap, int lower, int seed_vertex) {
  int n = s.n();
  BisectResult r;
  r.side.assign(n, 1);
  std::vector<int> order = bfs_order(s, seed_vertex);
  for (int i = 0; i < lower; ++i) r.side[order[i]] = 0;

  int size0 = lower;
  std::vector<std::array<int, 2>> h(s.pins.size(), {0, 0});
  for (int e = 0; e < int(s.pins.size()); ++e)
    for (int v : s.pins[e]) h[e][r.side[v]]++;
  auto cut_now = [&] {
    int c = 0;
    for (const auto &he : h) c += (he[0] > 0 && he[1] > 0);
    return c;
  };
  int cut = cut_now();

  auto gain_of = [&](int v) {
    int from = r.side[v], to = 1 - from;
    int g = 0;
    for (int e : s.nets_of[v]) {
      if (h[e][from] == 1) g++;   // edge leaves the cut
      if (h[e][to] == 0) g--;     // edge enters the cut
    }
    return g;
  };

  for (int pass = 0; pass < 8; ++pass) {
    // (negative gain, vertex) ordered set = deterministic max-gain selection
    std::set<std::pair<int, int>> bucket;
    std::vector<int> gain(n);
    std::vector<bool> locked(n, false);
    for (int v = 0; v < n; ++v) {
      gain[v] = gain_of(v);
      bucket.insert({-gain[v], v});
    }
    struct Move {
      int v;
      int cut_after;
    };
    std::vector<Move> moves;
    int best_cut = cut, best_prefix = 0, cur = cut;
    while (!bucket.empty()) {
      // best feasible move under the balance bounds
      auto it = bucket.begin();
      int chosen = -1;
      for (; it != bucket.end(); ++it) {
        int v = it->second;
        int from = r.side[v];
        int new_size0 = size0 + (from == 0 ? -1 : 1);
        if (new_size0 >= lower && new_size0 <= cap) {
          chosen = v;
          break;
        }
      }
      if (chosen < 0) break;
      bucket.erase(it);
      locked[chosen] = true;
      int from = r.side[chosen], to = 1 - from;
      cur -= gain[chosen];
      for (int e : s.nets_of[chosen]) {
        h[e][from]--;
        h[e][to]++;
      }
      r.side[chosen] = to;
      size0 += (from == 0 ? -1 : 1);
      // refresh gains of unlocked neighbours
      std::set<int> touched;
      for (int e : s.nets_of[chosen])
        for (int w : s.pins[e])
          if (!locked[w]) touched.insert(w);
      for (int w : touched) {
        bucket.erase({-gain[w], w});
        gain[w] = gain_of(w);
        bucket.insert({-gain[w], w});
      }
      moves.push_back({chosen, cur});
      if (cur < best_cut) {
        best_cut = cur;
        best_prefix = int(moves.size());
      }
    }
    // roll back to the best prefix
    for (int i = int(moves.size()) - 1; i >= best_prefix; --i) {
      int v = moves[i].v;
      int from = r.side[v], to = 1 - from;
      for (int e : s.nets_of[v]) {
        h[e][from]--;
        h[e][to]++;
      }
      r.side[v] = to;
      size0 += (from == 0 ? -1 : 1);
    }
    if (best_cut >= cut) break;
    cut = best_cut;
  }
  r.cut = cut_now();
  return r;
}

}  // namespace detail

// Bipartition of a vertex subset with imbalance eps'. With eps' close to 1
// the small side may shrink to a single vertex, which is what lets the
// planner peel one branch at a time.
inline Partition bipartition_subset(const TensorNetwork &net, const std::vector<int> &verts,
                                    double eps, std::uint64_t seed) {
  require(verts.size() >= 2, ErrorKind::Infeasible, "bipartition needs at least 2 vertices");
  detail::SubsetView s = detail::SubsetView::make(net, verts);
  int n = s.n();
  int cap = int((1.0 + eps) * double((n + 1) / 2));
  cap = std::min(cap, n - 1);
  int lower = std::max(1, n - cap);
  Rng rng(seed);
  detail::BisectResult best;
  bool have = false;
  for (int attempt = 0; attempt < 4; ++attempt) {
    int sv = int(rng.next_below(std::uint64_t(n)));
    detail::BisectResult r = detail::fm_bipartition_run(s, cap, lower, sv);
    if (!have || r.cut < best.cut) {
      best = r;
      have = true;
    }
  }
  Partition p;
  p.blocks.assign(2, {});
  for (int v = 0; v < n; ++v) p.blocks[best.side[v]].push_back(s.verts[v]);
  for (int e = 0; e < int(s.pins.size()); ++e) {
    bool in0 = false, in1 = false;
    for (int v : s.pins[e]) (best.side[v] ? in1 : in0) = true;
    if (in0 && in1) p.cut_edges.push_back(s.edge_ids[e]);
  }
  return p;
}

// K-way partition of the whole network: greedy growth from spread seeds,
// then pass-based move refinement under the balance bound.
inline Partition partition_hypergraph(const TensorNetwork &net, int K, double eps,
                                      std::uint64_t seed) {
  require(K >= 2, ErrorKind::Infeasible, "K must be at least 2");
  std::vector<int> verts;
  for (const auto &[vid, v] : net.vertices) verts.push_back(vid);
  require(int(verts.size()) >= K, ErrorKind::Infeasible, "fewer vertices than blocks");
  if (K == 2) return bipartition_subset(net, verts, eps, seed);

  detail::SubsetView s = detail::SubsetView::make(net, verts);
  int n = s.n();
  int cap = std::max(1, int((1.0 + eps) * double((n + K - 1) / K)));
  Rng rng(seed);

  // spread seeds: k-center greedy over BFS hop distance
  std::vector<int> seeds;
  seeds.push_back(int(rng.next_below(std::uint64_t(n))));
  auto bfs_dist = [&](const std::vector<int> &srcs) {
    std::vector<int> d(n, 1 << 29);
    std::queue<int> q;
    for (int v : srcs) {
      d[v] = 0;
      q.push(v);
    }
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int e : s.nets_of[v])
        for (int w : s.pins[e])
          if (d[w] > d[v] + 1) {
            d[w] = d[v] + 1;
            q.push(w);
          }
    }
    return d;
  };
  while (int(seeds.size()) < K) {
    std::vector<int> d = bfs_dist(seeds);
    int pick = 0;
    for (int v = 1; v < n; ++v)
      if (d[v] > d[pick] || (d[v] == d[pick] && v < pick)) pick = v;
    seeds.push_back(pick);
  }

  std::vector<int> block(n, -1);
  std::vector<int> size(K, 0);
  for (int b = 0; b < K; ++b) {
    if (block[seeds[b]] >= 0) {  // duplicate seed on tiny graphs
      for (int v = 0; v < n; ++v)
        if (block[v] < 0) {
          seeds[b] = v;
          break;
        }
    }
    block[seeds[b]] = b;
    size[b] = 1;
  }
  // greedy growth by connectivity
  for (int assigned = K; assigned < n; ++assigned) {
    int best_v = -1, best_b = -1, best_gain = -1;
    for (int v = 0; v < n; ++v) {
      if (block[v] >= 0) continue;
      std::vector<int> conn(K, 0);
      for (int e : s.nets_of[v])
        for (int w : s.pins[e])
          if (block[w] >= 0) conn[block[w]]++;
      for (int b = 0; b < K; ++b) {
        if (size[b] >= cap) continue;
        int g = conn[b];
        if (g > best_gain || (g == best_gain && (best_b < 0 || size[b] < size[best_b]))) {
          best_gain = g;
          best_v = v;
          best_b = b;
        }
      }
    }
    require(best_v >= 0, ErrorKind::Infeasible, "balance constraint cannot be met");
    block[best_v] = best_b;
    size[best_b]++;
  }

  // move-based refinement
  std::vector<std::vector<int>> h(s.pins.size(), std::vector<int>(K, 0));
  for (int e = 0; e < int(s.pins.size()); ++e)
    for (int v : s.pins[e]) h[e][block[v]]++;
  auto span = [&](int e) {
    int c = 0;
    for (int b = 0; b < K; ++b) c += h[e][b] > 0;
    return c;
  };
  auto total_cut = [&] {
    int c = 0;
    for (int e = 0; e < int(s.pins.size()); ++e) c += span(e) > 1;
    return c;
  };
  int cut = total_cut();
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<bool> locked(n, false);
    struct Move {
      int v, from, to, cut_after;
    };
    std::vector<Move> moves;
    int best_cut = cut, best_prefix = 0, cur = cut;
    for (int step = 0; step < n; ++step) {
      int bv = -1, bt = -1, bg = -(1 << 29);
      for (int v = 0; v < n; ++v) {
        if (locked[v]) continue;
        int from = block[v];
        if (size[from] <= 1) continue;
        for (int to = 0; to < K; ++to) {
          if (to == from || size[to] >= cap) continue;
          int g = 0;
          for (int e : s.nets_of[v]) {
            int before = span(e) > 1;
            h[e][from]--;
            h[e][to]++;
            int after = span(e) > 1;
            h[e][from]++;
            h[e][to]--;
            g += before - after;
          }
          if (g > bg || (g == bg && (bv < 0 || v < bv))) {
            bg = g;
            bv = v;
            bt = to;
          }
        }
      }
      if (bv < 0) break;
      int from = block[bv];
      for (int e : s.nets_of[bv]) {
        h[e][from]--;
        h[e][bt]++;
      }
      block[bv] = bt;
      size[from]--;
      size[bt]++;
      locked[bv] = true;
      cur -= bg;
      moves.push_back({bv, from, bt, cur});
      if (cur < best_cut) {
        best_cut = cur;
        best_prefix = int(moves.size());
      }
      if (int(moves.size()) - best_prefix > n / 4 + 4) break;  // give up on this pass
    }
    for (int i = int(moves.size()) - 1; i >= best_prefix; --i) {
      const Move &m = moves[i];
      for (int e : s.nets_of[m.v]) {
        h[e][m.to]--;
        h[e][m.from]++;
      }
      block[m.v] = m.from;
      size[m.to]--;
      size[m.from]++;
    }
    if (best_cut >= cut) break;
    cut = best_cut;
  }

  Partition p;
  p.blocks.assign(K, {});
  for (int v = 0; v < n; ++v) p.blocks[block[v]].push_back(s.verts[v]);
  for (int e = 0; e < int(s.pins.size()); ++e)
    if (span(e) > 1) p.cut_edges.push_back(s.edge_ids[e]);
  return p;
}

}  // namespace stemtn

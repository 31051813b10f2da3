#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stemtn/errors.hpp"
#include "stemtn/rng.hpp"
#include "stemtn/tensor.hpp"

namespace stemtn {

// A tensor network is an attributed multi-hypergraph. Every hyperedge carries
// a bond dimension and an open flag; every vertex carries a tensor plus the
// ordering of incident hyperedges (axes[i] is the hyperedge bound to tensor
// axis i). The value of the network is the sum over all hyperedge index
// assignments of the product of the selected tensor entries, grouped by the
// assignment of the open edges.
//
// Representation constraints enforced by validate():
//   - a hyperedge occupies at most one axis of any one tensor,
//   - closed hyperedges have at least two endpoints (an edge summing a single
//     axis alone should be pre-summed into its tensor instead),
//   - open hyperedges may dangle off a single vertex.

struct Hyperedge {
  int dim = 2;
  bool open = false;
  std::vector<int> endpoints;  // sorted vertex ids
};

struct Vertex {
  Tensor tensor;
  std::vector<int> axes;  // hyperedge id per tensor axis
};

class TensorNetwork {
 public:
  std::map<int, Vertex> vertices;
  std::map<int, Hyperedge> edges;

  int add_edge(int dim, bool open_edge) {
    int id = edges.empty() ? 0 : edges.rbegin()->first + 1;
    add_edge_with_id(id, dim, open_edge);
    return id;
  }

  void add_edge_with_id(int id, int dim, bool open_edge) {
    require(!edges.count(id), ErrorKind::MalformedNetwork, "duplicate edge id");
    require(dim >= 1, ErrorKind::MalformedNetwork, "bond dimension must be positive");
    Hyperedge e;
    e.dim = dim;
    e.open = open_edge;
    edges.emplace(id, std::move(e));
  }

  int add_vertex(Tensor t, std::vector<int> axes) {
    int id = vertices.empty() ? 0 : vertices.rbegin()->first + 1;
    add_vertex_with_id(id, std::move(t), std::move(axes));
    return id;
  }

  void add_vertex_with_id(int id, Tensor t, std::vector<int> axes) {
    require(!vertices.count(id), ErrorKind::MalformedNetwork, "duplicate vertex id");
    require(axes.size() == t.dims.size(), ErrorKind::MalformedNetwork,
            "vertex axes arity must match tensor rank");
    for (std::size_t i = 0; i < axes.size(); ++i) {
      auto it = edges.find(axes[i]);
      require(it != edges.end(), ErrorKind::MalformedNetwork,
              "vertex references unknown edge " + std::to_string(axes[i]));
      require(it->second.dim == t.dims[i], ErrorKind::MalformedNetwork,
              "tensor dim does not match bond dimension of edge " + std::to_string(axes[i]));
    }
    for (int e : axes) {
      auto &ep = edges.at(e).endpoints;
      ep.insert(std::lower_bound(ep.begin(), ep.end(), id), id);
    }
    Vertex v;
    v.tensor = std::move(t);
    v.axes = std::move(axes);
    vertices.emplace(id, std::move(v));
  }

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t edge_count() const { return edges.size(); }

  std::vector<int> open_edge_ids() const {
    std::vector<int> out;
    for (const auto &[id, e] : edges)
      if (e.open) out.push_back(id);
    return out;
  }

  void validate() const {
    std::map<int, std::vector<int>> incidence;
    for (const auto &[vid, v] : vertices) {
      require(v.axes.size() == v.tensor.dims.size(), ErrorKind::MalformedNetwork,
              "vertex " + std::to_string(vid) + ": rank does not match axis count");
      require(v.tensor.data.size() == Tensor::element_count(v.tensor.dims),
              ErrorKind::MalformedNetwork,
              "vertex " + std::to_string(vid) + ": tensor data length mismatch");
      std::set<int> seen;
      for (std::size_t i = 0; i < v.axes.size(); ++i) {
        auto it = edges.find(v.axes[i]);
        require(it != edges.end(), ErrorKind::MalformedNetwork,
                "vertex " + std::to_string(vid) + ": unknown edge " + std::to_string(v.axes[i]));
        require(it->second.dim == v.tensor.dims[i], ErrorKind::MalformedNetwork,
                "vertex " + std::to_string(vid) + ": axis " + std::to_string(i) +
                    " dim mismatch with edge " + std::to_string(v.axes[i]));
        require(seen.insert(v.axes[i]).second, ErrorKind::MalformedNetwork,
                "vertex " + std::to_string(vid) + ": edge " + std::to_string(v.axes[i]) +
                    " occupies two axes of one tensor");
        incidence[v.axes[i]].push_back(vid);
      }
    }
    for (const auto &[eid, e] : edges) {
      auto it = incidence.find(eid);
      std::vector<int> inc = (it == incidence.end()) ? std::vector<int>{} : it->second;
      std::sort(inc.begin(), inc.end());
      require(!inc.empty(), ErrorKind::MalformedNetwork,
              "edge " + std::to_string(eid) + " is incident to no vertex");
      require(inc == e.endpoints, ErrorKind::MalformedNetwork,
              "edge " + std::to_string(eid) + " endpoint list is stale");
      require(e.open || inc.size() >= 2, ErrorKind::MalformedNetwork,
              "closed edge " + std::to_string(eid) +
                  " dangles off a single vertex; pre-sum that axis instead");
    }
  }

  // ---------------------------------------------------------------------
  // Feynman-path evaluation: enumerate every assignment of every hyperedge.
  // Exponential in the edge count; guarded by `cap` on the number of paths.
  // The result tensor's axes are the open edges in ascending id order.
  // ---------------------------------------------------------------------
  Tensor feynman_value(std::uint64_t cap = (1ull << 26)) const {
    validate();
    std::vector<int> eids;
    std::vector<int> edims;
    double log_paths = 0.0;
    for (const auto &[id, e] : edges) {
      eids.push_back(id);
      edims.push_back(e.dim);
      log_paths += std::log2(double(e.dim));
    }
    require(log_paths <= 63.0 && [&] {
      std::uint64_t paths = 1;
      for (int d : edims) paths *= std::uint64_t(d);
      return paths <= cap;
    }(), ErrorKind::CapExceeded, "path enumeration bound exceeded");

    std::map<int, int> pos_of_edge;
    for (std::size_t i = 0; i < eids.size(); ++i) pos_of_edge[eids[i]] = int(i);

    // per vertex: (position in assignment, stride into tensor data)
    struct VertexLookup {
      const std::vector<cx> *data;
      std::vector<std::pair<int, std::size_t>> terms;
    };
    std::vector<VertexLookup> lookups;
    for (const auto &[vid, v] : vertices) {
      VertexLookup lk;
      lk.data = &v.tensor.data;
      auto strides = v.tensor.strides();
      for (std::size_t i = 0; i < v.axes.size(); ++i)
        lk.terms.emplace_back(pos_of_edge.at(v.axes[i]), strides[i]);
      lookups.push_back(std::move(lk));
    }

    std::vector<int> open_pos;
    std::vector<int> open_dims;
    for (std::size_t i = 0; i < eids.size(); ++i)
      if (edges.at(eids[i]).open) {
        open_pos.push_back(int(i));
        open_dims.push_back(edims[i]);
      }

    Tensor out(open_dims);
    std::vector<int> assign(eids.size(), 0);
    bool done = eids.empty();
    for (;;) {
      cx term(1.0, 0.0);
      for (const auto &lk : lookups) {
        std::size_t f = 0;
        for (const auto &[pos, stride] : lk.terms) f += std::size_t(assign[pos]) * stride;
        term *= (*lk.data)[f];
      }
      std::size_t of = 0;
      for (std::size_t i = 0; i < open_pos.size(); ++i)
        of = of * std::size_t(open_dims[i]) + std::size_t(assign[open_pos[i]]);
      out.data[of] += term;
      if (done) break;
      int ax = int(assign.size()) - 1;
      for (; ax >= 0; --ax) {
        if (++assign[ax] < edims[ax]) break;
        assign[ax] = 0;
      }
      if (ax < 0) break;
    }
    return out;
  }

  // ---------------------------------------------------------------------
  // Pairwise contraction of vertices u and v. Edges incident to u or v are
  // enumerated; edges that are open or connected to a third vertex survive
  // as axes of the merged tensor, in ascending edge-id order; the rest are
  // summed out (including edges shared by u and v, i.e. internal traces).
  // The merged vertex gets id max(vertex ids)+1.
  // ---------------------------------------------------------------------
  TensorNetwork contract_pair(int u, int v) const {
    require(u != v, ErrorKind::MalformedNetwork, "contract_pair needs two distinct vertices");
    require(vertices.count(u) && vertices.count(v), ErrorKind::MalformedNetwork,
            "contract_pair: unknown vertex");
    const Vertex &a = vertices.at(u);
    const Vertex &b = vertices.at(v);

    std::vector<int> e_ab;  // all edges incident to u or v, ascending
    {
      std::set<int> s(a.axes.begin(), a.axes.end());
      s.insert(b.axes.begin(), b.axes.end());
      e_ab.assign(s.begin(), s.end());
    }
    std::vector<int> e_keep;  // open or connected to other vertices
    for (int eid : e_ab) {
      const Hyperedge &e = edges.at(eid);
      bool external = e.open;
      for (int ep : e.endpoints)
        if (ep != u && ep != v) external = true;
      if (external) e_keep.push_back(eid);
    }

    std::map<int, int> pos_of_edge;
    std::vector<int> dims_ab;
    for (std::size_t i = 0; i < e_ab.size(); ++i) {
      pos_of_edge[e_ab[i]] = int(i);
      dims_ab.push_back(edges.at(e_ab[i]).dim);
    }
    std::vector<int> keep_pos, keep_dims;
    for (int eid : e_keep) {
      keep_pos.push_back(pos_of_edge.at(eid));
      keep_dims.push_back(edges.at(eid).dim);
    }

    auto make_terms = [&](const Vertex &w) {
      std::vector<std::pair<int, std::size_t>> terms;
      auto strides = w.tensor.strides();
      for (std::size_t i = 0; i < w.axes.size(); ++i)
        terms.emplace_back(pos_of_edge.at(w.axes[i]), strides[i]);
      return terms;
    };
    auto ta = make_terms(a), tb = make_terms(b);

    Tensor merged(keep_dims);
    std::vector<int> assign(e_ab.size(), 0);
    for (;;) {
      std::size_t fa = 0, fb = 0;
      for (const auto &[pos, stride] : ta) fa += std::size_t(assign[pos]) * stride;
      for (const auto &[pos, stride] : tb) fb += std::size_t(assign[pos]) * stride;
      std::size_t fo = 0;
      for (std::size_t i = 0; i < keep_pos.size(); ++i)
        fo = fo * std::size_t(keep_dims[i]) + std::size_t(assign[keep_pos[i]]);
      merged.data[fo] += a.tensor.data[fa] * b.tensor.data[fb];
      int ax = int(assign.size()) - 1;
      for (; ax >= 0; --ax) {
        if (++assign[ax] < dims_ab[ax]) break;
        assign[ax] = 0;
      }
      if (ax < 0) break;
    }

    TensorNetwork out;
    out.edges = edges;
    for (int eid : e_ab) {
      bool kept = std::binary_search(e_keep.begin(), e_keep.end(), eid);
      if (!kept) {
        out.edges.erase(eid);
        continue;
      }
      auto &ep = out.edges.at(eid).endpoints;
      ep.erase(std::remove_if(ep.begin(), ep.end(), [&](int x) { return x == u || x == v; }),
               ep.end());
    }
    int merged_id = vertices.rbegin()->first + 1;
    for (const auto &[vid, w] : vertices)
      if (vid != u && vid != v) out.vertices.emplace(vid, w);
    for (int eid : e_keep) {
      auto &ep = out.edges.at(eid).endpoints;
      ep.insert(std::lower_bound(ep.begin(), ep.end(), merged_id), merged_id);
    }
    Vertex mv;
    mv.tensor = std::move(merged);
    mv.axes = e_keep;
    out.vertices.emplace(merged_id, std::move(mv));
    return out;
  }

  // ---------------------------------------------------------------------
  // Slicing: fix an index for each chosen (closed) hyperedge, remove the
  // edge, and restrict every incident tensor on the corresponding axis.
  // The vertex set is unchanged; summing the values of the sub-networks
  // over all assignments reproduces the value of the full network.
  // ---------------------------------------------------------------------
  TensorNetwork slice(const std::vector<int> &edge_ids, const std::vector<int> &assignment) const {
    require(edge_ids.size() == assignment.size(), ErrorKind::IndexOutOfRange,
            "slice: one index per sliced edge required");
    TensorNetwork out = *this;
    for (std::size_t i = 0; i < edge_ids.size(); ++i) {
      int eid = edge_ids[i];
      auto it = out.edges.find(eid);
      require(it != out.edges.end(), ErrorKind::EdgeNotFound,
              "slice: unknown edge " + std::to_string(eid));
      require(!it->second.open, ErrorKind::OpenEdgeSliced,
              "slice: edge " + std::to_string(eid) + " is open");
      require(assignment[i] >= 0 && assignment[i] < it->second.dim, ErrorKind::IndexOutOfRange,
              "slice: index out of range for edge " + std::to_string(eid));
      for (int vid : it->second.endpoints) {
        Vertex &w = out.vertices.at(vid);
        int axis = -1;
        for (std::size_t k = 0; k < w.axes.size(); ++k)
          if (w.axes[k] == eid) axis = int(k);
        w.tensor = restrict_axis(w.tensor, axis, assignment[i]);
        w.axes.erase(w.axes.begin() + axis);
      }
      out.edges.erase(it);
    }
    return out;
  }

  // Hash of the hypergraph structure (ids, dims, open flags, axis orders).
  // Tensor values are deliberately excluded: a contraction scheme depends
  // only on the structure, so an order file stays valid when e.g. the same
  // circuit shape is regenerated with different gate draws.
  std::uint64_t structural_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    h = fnv1a64_u64(vertices.size(), h);
    for (const auto &[vid, v] : vertices) {
      h = fnv1a64_u64(std::uint64_t(vid), h);
      h = fnv1a64_u64(v.axes.size(), h);
      for (int e : v.axes) h = fnv1a64_u64(std::uint64_t(e), h);
    }
    h = fnv1a64_u64(edges.size(), h);
    for (const auto &[eid, e] : edges) {
      h = fnv1a64_u64(std::uint64_t(eid), h);
      h = fnv1a64_u64(std::uint64_t(e.dim), h);
      h = fnv1a64_u64(e.open ? 1 : 0, h);
    }
    return h;
  }

  std::string structural_hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)structural_hash());
    return std::string(buf);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["vertices"] = nlohmann::json::array();
    for (const auto &[vid, v] : vertices) {
      nlohmann::json jv;
      jv["id"] = vid;
      jv["dims"] = v.tensor.dims;
      nlohmann::json data = nlohmann::json::array();
      for (const cx &c : v.tensor.data) data.push_back({c.real(), c.imag()});
      jv["data"] = std::move(data);
      j["vertices"].push_back(std::move(jv));
    }
    j["edges"] = nlohmann::json::array();
    for (const auto &[eid, e] : edges) {
      j["edges"].push_back({{"id", eid}, {"dim", e.dim}, {"endpoints", e.endpoints}, {"open", e.open}});
    }
    nlohmann::json order;
    for (const auto &[vid, v] : vertices) order[std::to_string(vid)] = v.axes;
    j["edge_order"] = std::move(order);
    return j;
  }

  static TensorNetwork from_json(const nlohmann::json &j) {
    TensorNetwork net;
    try {
      for (const auto &je : j.at("edges"))
        net.add_edge_with_id(je.at("id").get<int>(), je.at("dim").get<int>(),
                             je.at("open").get<bool>());
      for (const auto &jv : j.at("vertices")) {
        int vid = jv.at("id").get<int>();
        std::vector<int> dims = jv.at("dims").get<std::vector<int>>();
        std::vector<cx> data;
        for (const auto &pair : jv.at("data"))
          data.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
        std::vector<int> axes =
            j.at("edge_order").at(std::to_string(vid)).get<std::vector<int>>();
        net.add_vertex_with_id(vid, Tensor(std::move(dims), std::move(data)), std::move(axes));
      }
    } catch (const nlohmann::json::exception &e) {
      fail(ErrorKind::SchemaError, std::string("network json: ") + e.what());
    }
    net.validate();
    return net;
  }
};

}  // namespace stemtn

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "stemtn/errors.hpp"
#include "stemtn/tree.hpp"

namespace stemtn {

struct SchemeParams {
  int K = 4;
  double eps = 0.3;
  double eps_prime = 0.9;
  std::vector<std::uint64_t> seeds;
};

// A sliced contraction scheme: the set of sliced edges plus a contraction
// tree over the residual network. Executing it means enumerating all index
// assignments of the sliced edges, contracting each sub-network along the
// tree, and summing the results.
struct ContractionScheme {
  std::vector<int> sliced_edges;   // ascending ids
  std::map<int, int> sliced_dims;  // bond dimension per sliced edge
  ContractionTree tree;            // over (V, E \ sliced_edges)
  std::string network_hash;        // structural hash of the source network
  SchemeParams params;

  std::uint64_t subtasks() const {
    std::uint64_t n = 1;
    for (int e : sliced_edges) n *= std::uint64_t(sliced_dims.at(e));
    return n;
  }

  BigInt tc() const { return BigInt(subtasks()) * tree.costs().tc; }

  struct Costs {
    double log2_tc;
    int cw;
    std::uint64_t subtasks;
  };
  Costs costs() const {
    TreeCosts tcst = tree.costs();
    return Costs{log2_big(BigInt(subtasks()) * tcst.tc), tcst.cw, subtasks()};
  }
};

inline nlohmann::json serialize_scheme(const ContractionScheme &s) {
  nlohmann::json j;
  j["version"] = 1;
  j["network_hash"] = s.network_hash;
  j["sliced_edges"] = s.sliced_edges;
  j["tree"] = s.tree.to_nested_json();
  j["params"] = {{"K", s.params.K},
                 {"eps", s.params.eps},
                 {"eps_prime", s.params.eps_prime},
                 {"seeds", s.params.seeds}};
  auto c = s.costs();
  j["costs"] = {{"log2_tc", c.log2_tc}, {"cw", c.cw}, {"subtasks", c.subtasks}};
  return j;
}

inline ContractionScheme parse_scheme(const nlohmann::json &j, const TensorNetwork &net) {
  ContractionScheme s;
  try {
    require(j.at("version").get<int>() == 1, ErrorKind::SchemaError, "unsupported version");
    s.network_hash = j.at("network_hash").get<std::string>();
    s.sliced_edges = j.at("sliced_edges").get<std::vector<int>>();
    if (j.contains("params")) {
      const auto &p = j.at("params");
      s.params.K = p.value("K", 4);
      s.params.eps = p.value("eps", 0.3);
      s.params.eps_prime = p.value("eps_prime", 0.9);
      s.params.seeds = p.value("seeds", std::vector<std::uint64_t>{});
    }
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::SchemaError, std::string("order file: ") + e.what());
  }
  require(s.network_hash == net.structural_hash_hex(), ErrorKind::HashMismatch,
          "order file was produced for a different network (hash " + s.network_hash + " vs " +
              net.structural_hash_hex() + ")");
  std::sort(s.sliced_edges.begin(), s.sliced_edges.end());
  for (int e : s.sliced_edges) {
    auto it = net.edges.find(e);
    require(it != net.edges.end(), ErrorKind::SchemaError,
            "order file slices unknown edge " + std::to_string(e));
    require(!it->second.open, ErrorKind::SchemaError,
            "order file slices open edge " + std::to_string(e));
    s.sliced_dims[e] = it->second.dim;
  }
  s.tree = ContractionTree::from_nested_json(j.at("tree"), net, s.sliced_edges);
  if (j.contains("costs")) {
    auto c = s.costs();
    try {
      double stored_log2 = j.at("costs").at("log2_tc").get<double>();
      int stored_cw = j.at("costs").at("cw").get<int>();
      std::uint64_t stored_subtasks = j.at("costs").at("subtasks").get<std::uint64_t>();
      require(std::abs(stored_log2 - c.log2_tc) <= 1e-9 && stored_cw == c.cw &&
                  stored_subtasks == c.subtasks,
              ErrorKind::SchemaError, "order file cost summary does not match its tree");
    } catch (const nlohmann::json::exception &e) {
      fail(ErrorKind::SchemaError, std::string("order file costs: ") + e.what());
    }
  }
  return s;
}

}  // namespace stemtn

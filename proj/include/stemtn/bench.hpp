#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "stemtn/circuit.hpp"
#include "stemtn/planner.hpp"

namespace stemtn {

struct NamedCircuit {
  std::string name;
  Circuit circuit;
};

// Desk-scale benchmark suite: 3x4 and 4x4 grids at m in {6,8,10,12}, one
// fixed generation seed per circuit.
inline std::vector<NamedCircuit> desk_benchmark_suite() {
  std::vector<NamedCircuit> out;
  int idx = 0;
  for (auto [rows, cols] : {std::pair{3, 4}, {4, 4}})
    for (int m : {6, 8, 10, 12}) {
      NamedCircuit nc;
      nc.name = "grid" + std::to_string(rows) + "x" + std::to_string(cols) + "_m" +
                std::to_string(m);
      nc.circuit = generate_random_circuit(rows, cols, m, 2000 + idx);
      out.push_back(std::move(nc));
      ++idx;
    }
  return out;
}

struct BenchRow {
  std::string circuit;
  std::vector<double> runs;  // per-run log2 tc of the planned scheme
  double best_log2_tc = 0;
  int cw = 0;
  std::uint64_t subtasks = 1;
  double wall_s = 0;
};

// Plans each circuit `runs` times with independent seeds and keeps the best
// scheme, reporting the contraction cost of every run.
inline std::vector<BenchRow> run_bench(const std::vector<NamedCircuit> &circuits,
                                       const PlannerParams &base, int runs = 5) {
  std::vector<BenchRow> rows;
  for (std::size_t ci = 0; ci < circuits.size(); ++ci) {
    const NamedCircuit &nc = circuits[ci];
    std::map<int, int> fixed;
    for (int q = 0; q < nc.circuit.qubit_count(); ++q) fixed[q] = 0;
    TensorNetwork net = circuit_to_network(nc.circuit, {}, fixed).net;
    BenchRow row;
    row.circuit = nc.name;
    auto t0 = std::chrono::steady_clock::now();
    ContractionScheme best;
    BigInt best_tc = -1;
    for (int r = 0; r < runs; ++r) {
      PlannerParams p = base;
      p.restarts = 1;
      p.seed = stream_seed(base.seed, ci, std::uint64_t(r));
      ContractionScheme s = plan(net, p).scheme;
      BigInt tc = s.tc();
      row.runs.push_back(log2_big(tc));
      if (best_tc < 0 || tc < best_tc) {
        best_tc = tc;
        best = std::move(s);
      }
    }
    auto t1 = std::chrono::steady_clock::now();
    auto costs = best.costs();
    row.best_log2_tc = costs.log2_tc;
    row.cw = costs.cw;
    row.subtasks = costs.subtasks;
    row.wall_s = std::chrono::duration<double>(t1 - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json bench_to_json(const std::vector<BenchRow> &rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const BenchRow &r : rows)
    out.push_back({{"circuit", r.circuit},
                   {"runs", r.runs},
                   {"best_log2_tc", r.best_log2_tc},
                   {"cw", r.cw},
                   {"subtasks", r.subtasks},
                   {"wall_s", r.wall_s}});
  return out;
}

inline std::string bench_table(const std::vector<BenchRow> &rows) {
  char line[256];
  std::string out;
  int nruns = rows.empty() ? 0 : int(rows[0].runs.size());
  out += "circuit        ";
  for (int r = 0; r < nruns; ++r) out += "   run" + std::to_string(r + 1);
  out += "    best  cw  subtasks   wall_s\n";
  for (const BenchRow &r : rows) {
    std::snprintf(line, sizeof line, "%-15s", r.circuit.c_str());
    out += line;
    for (double v : r.runs) {
      std::snprintf(line, sizeof line, " %6.2f", v);
      out += line;
    }
    std::snprintf(line, sizeof line, "  %6.2f  %2d  %8llu  %7.2f\n", r.best_log2_tc, r.cw,
                  (unsigned long long)r.subtasks, r.wall_s);
    out += line;
  }
  return out;
}

}  // namespace stemtn

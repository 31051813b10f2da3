// Command-line front end: circuit generation, contraction planning, sliced
// execution, frugal sampling, XEB scoring, benchmarking, and the local
// agent/worker harness over a shared queue directory.
//
// Exit codes: 0 success, 2 validation error, 3 execution error,
// 4 queue corruption.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "stemtn/bench.hpp"
#include "stemtn/circuit.hpp"
#include "stemtn/planner.hpp"
#include "stemtn/queue.hpp"
#include "stemtn/runtime.hpp"
#include "stemtn/sampler.hpp"
#include "stemtn/statevector.hpp"

using namespace stemtn;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingResult:
    case ErrorKind::ChecksumMismatch:
      return 4;
    case ErrorKind::Stuck:
    case ErrorKind::SubtaskFailure:
    case ErrorKind::WidthExceedsBudget:
    case ErrorKind::EmptySamples:
    case ErrorKind::CapExceeded:
      return 3;
    default:
      return 2;
  }
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorKind::SyntaxError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(bool(out), ErrorKind::SyntaxError, "cannot write " + path);
  out << text;
}

std::uint64_t env_seed() {
  const char *s = std::getenv("STEMTN_SEED");
  return s ? std::strtoull(s, nullptr, 0) : 0;
}

std::string env_queue_dir() {
  const char *s = std::getenv("STEMTN_QUEUE_DIR");
  return s ? s : "";
}

// "auto": the 6-qubit batch (all qubits when the circuit has at most 6);
// "none": closed network; otherwise a comma-separated qubit list.
std::vector<int> parse_open_qubits(const std::string &spec, const Circuit &c) {
  if (spec == "none") return {};
  if (spec == "auto") {
    if (c.qubit_count() <= 6) {
      std::vector<int> all(c.qubit_count());
      for (int q = 0; q < c.qubit_count(); ++q) all[q] = q;
      return all;
    }
    return batch_qubit_selector(c.layout, c.cycles);
  }
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception &) {
      fail(ErrorKind::SyntaxError, "bad qubit list: " + spec);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Bit k of the hex value is the output bit of the k-th closed qubit in
// ascending id order.
std::map<int, int> fixed_bits_from_hex(const std::string &hex, const Circuit &c,
                                       const std::vector<int> &open) {
  std::set<int> open_set(open.begin(), open.end());
  std::uint64_t bits = hex.empty() ? 0 : std::strtoull(hex.c_str(), nullptr, 16);
  std::map<int, int> fixed;
  int k = 0;
  for (int q = 0; q < c.qubit_count(); ++q) {
    if (open_set.count(q)) continue;
    fixed[q] = int((bits >> k) & 1);
    ++k;
  }
  require(k <= 64, ErrorKind::QubitCoverage, "more than 64 closed qubits");
  return fixed;
}

PlannerParams planner_params_from(const std::string &params_json, std::uint64_t seed,
                                  int target_cw, int restarts) {
  PlannerParams p;
  p.seed = seed;
  p.target_cw = target_cw;
  p.restarts = restarts;
  if (!params_json.empty()) {
    nlohmann::json j = nlohmann::json::parse(read_file(params_json));
    p.K = j.value("K", p.K);
    p.eps = j.value("eps", p.eps);
    p.eps_prime = j.value("eps_prime", p.eps_prime);
    p.N = j.value("N", p.N);
    p.window = j.value("window", p.window);
    p.stem_bias = j.value("stem_bias", p.stem_bias);
    p.cma_population = j.value("cma_population", p.cma_population);
    if (j.contains("iterations")) {
      const auto &it = j["iterations"];
      p.iterations.cma = it.value("cma", p.iterations.cma);
      p.iterations.local_pre = it.value("local_pre", p.iterations.local_pre);
      p.iterations.local_mid = it.value("local_mid", p.iterations.local_mid);
      p.iterations.local_post = it.value("local_post", p.iterations.local_post);
    }
  }
  return p;
}

nlohmann::json amplitudes_json(const Tensor &t, const std::vector<int> &open) {
  nlohmann::json out;
  out["open_qubits"] = open;
  out["dims"] = t.dims;
  nlohmann::json data = nlohmann::json::array();
  for (const cx &v : t.data) data.push_back({v.real(), v.imag()});
  out["amplitudes"] = std::move(data);
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"stem-optimized tensor network circuit simulator"};
  app.require_subcommand(1);

  // ---- gen ----
  auto *gen = app.add_subcommand("gen", "generate a random circuit file");
  int gen_rows = 3, gen_cols = 4, gen_cycles = 8;
  std::string gen_layout, gen_out;
  std::uint64_t gen_seed = env_seed();
  double gen_theta = 1.5707963267948966, gen_phi = 0.5235987755982988;
  gen->add_option("--rows", gen_rows);
  gen->add_option("--cols", gen_cols);
  gen->add_option("--layout", gen_layout, "named layout (e.g. sycamore53) instead of a grid");
  gen->add_option("--cycles,-m", gen_cycles);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--theta", gen_theta, "fsim theta (radians)");
  gen->add_option("--phi", gen_phi, "fsim phi (radians)");
  gen->add_option("--out,-o", gen_out, "output file (stdout when omitted)");

  // ---- plan ----
  auto *plan_cmd = app.add_subcommand("plan", "search for a contraction scheme");
  std::string plan_circuit, plan_open = "none", plan_params_json, plan_out = "order.json";
  int plan_target_cw = 29, plan_restarts = 5;
  std::uint64_t plan_seed = env_seed();
  plan_cmd->add_option("--circuit", plan_circuit)->required();
  plan_cmd->add_option("--open-qubits", plan_open, "auto | none | comma list");
  plan_cmd->add_option("--target-cw", plan_target_cw);
  plan_cmd->add_option("--restarts", plan_restarts);
  plan_cmd->add_option("--seed", plan_seed);
  plan_cmd->add_option("--params-json", plan_params_json);
  plan_cmd->add_option("--out,-o", plan_out);

  // ---- run ----
  auto *run_cmd = app.add_subcommand("run", "execute a contraction scheme");
  std::string run_circuit, run_order, run_open = "none", run_fixed_hex, run_report,
              run_amps_out, run_precision = "single";
  int run_parallelism = 1;
  run_cmd->add_option("--circuit", run_circuit)->required();
  run_cmd->add_option("--order", run_order)->required();
  run_cmd->add_option("--open-qubits", run_open);
  run_cmd->add_option("--fixed-bits", run_fixed_hex,
                      "hex; bit k is the k-th closed qubit's output bit");
  run_cmd->add_option("--parallelism", run_parallelism);
  run_cmd->add_option("--precision", run_precision)->check(CLI::IsMember({"single", "double"}));
  run_cmd->add_option("--report-json", run_report);
  run_cmd->add_option("--out-amplitudes", run_amps_out);

  // ---- sample ----
  auto *sample_cmd = app.add_subcommand("sample", "frugal rejection sampling");
  std::string sm_circuit, sm_order, sm_open = "auto", sm_report;
  long long sm_samples = 1000;
  int sm_max_batches = -1, sm_parallelism = 1;
  double sm_r = 10.0;
  std::uint64_t sm_seed = env_seed();
  std::string sm_precision = "double";
  bool sm_first_only = false;
  sample_cmd->add_option("--circuit", sm_circuit)->required();
  sample_cmd->add_option("--order", sm_order, "order file (planned on the fly when omitted)");
  sample_cmd->add_option("--open-qubits", sm_open);
  sample_cmd->add_option("--samples", sm_samples);
  sample_cmd->add_option("--max-batches", sm_max_batches);
  sample_cmd->add_option("--frugal-R", sm_r);
  sample_cmd->add_option("--seed", sm_seed);
  sample_cmd->add_option("--parallelism", sm_parallelism);
  sample_cmd->add_option("--precision", sm_precision)->check(CLI::IsMember({"single", "double"}));
  sample_cmd->add_flag("--first-only", sm_first_only, "at most one sample per batch");
  sample_cmd->add_option("--report-json", sm_report);

  // ---- xeb ----
  auto *xeb_cmd = app.add_subcommand("xeb", "score samples against ideal probabilities");
  std::string xeb_circuit, xeb_samples_file;
  xeb_cmd->add_option("--circuit", xeb_circuit)->required();
  xeb_cmd->add_option("--samples-file", xeb_samples_file, "one bitstring per line")->required();

  // ---- bench ----
  auto *bench_cmd = app.add_subcommand("bench", "plan the bundled benchmark suite");
  std::string bench_out;
  int bench_runs = 5;
  std::uint64_t bench_seed = env_seed();
  std::string bench_params_json;
  int bench_target_cw = 29;
  bench_cmd->add_option("--out,-o", bench_out, "also write rows as JSON");
  bench_cmd->add_option("--runs", bench_runs);
  bench_cmd->add_option("--seed", bench_seed);
  bench_cmd->add_option("--params-json", bench_params_json);
  bench_cmd->add_option("--target-cw", bench_target_cw);

  // ---- agent ----
  auto *agent_cmd = app.add_subcommand("agent", "split a scheme into a queue and collect results");
  std::string ag_circuit, ag_order, ag_open = "none", ag_fixed_hex,
              ag_queue = env_queue_dir(), ag_precision = "single", ag_amps_out;
  int ag_chunk = 32, ag_workers = 0;
  bool ag_no_collect = false;
  agent_cmd->add_option("--circuit", ag_circuit)->required();
  agent_cmd->add_option("--order", ag_order)->required();
  agent_cmd->add_option("--open-qubits", ag_open);
  agent_cmd->add_option("--fixed-bits", ag_fixed_hex);
  agent_cmd->add_option("--queue-dir", ag_queue)->required(env_queue_dir().empty());
  agent_cmd->add_option("--chunk", ag_chunk);
  agent_cmd->add_option("--workers", ag_workers, "spawn local worker threads");
  agent_cmd->add_option("--precision", ag_precision)->check(CLI::IsMember({"single", "double"}));
  agent_cmd->add_option("--out-amplitudes", ag_amps_out);
  agent_cmd->add_flag("--init-only", ag_no_collect, "initialize the queue and exit");

  // ---- worker ----
  auto *worker_cmd = app.add_subcommand("worker", "drain a queue directory");
  std::string wk_queue = env_queue_dir();
  long long wk_max_tasks = -1;
  std::uint64_t wk_token = std::uint64_t(::getpid());
  double wk_stale = 30.0;
  bool wk_crash = false;
  worker_cmd->add_option("--queue-dir", wk_queue)->required(env_queue_dir().empty());
  worker_cmd->add_option("--max-tasks", wk_max_tasks);
  worker_cmd->add_option("--token", wk_token);
  worker_cmd->add_option("--stale-seconds", wk_stale);
  worker_cmd->add_flag("--crash-after-claim", wk_crash, "fault injection for tests");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      Layout layout = gen_layout.empty() ? Layout::grid(gen_rows, gen_cols)
                                         : Layout::named(gen_layout);
      Circuit c = generate_random_circuit(layout, gen_cycles, gen_seed,
                                          GenOptions{gen_theta, gen_phi});
      std::string text = serialize_circuit(c);
      if (gen_out.empty())
        std::cout << text;
      else
        write_file(gen_out, text);
    } else if (*plan_cmd) {
      Circuit c = parse_circuit(read_file(plan_circuit));
      std::vector<int> open = parse_open_qubits(plan_open, c);
      std::set<int> open_set(open.begin(), open.end());
      std::map<int, int> fixed;
      for (int q = 0; q < c.qubit_count(); ++q)
        if (!open_set.count(q)) fixed[q] = 0;
      TensorNetwork net = circuit_to_network(c, open_set, fixed).net;
      PlannerParams p =
          planner_params_from(plan_params_json, plan_seed, plan_target_cw, plan_restarts);
      PlanResult res = plan(net, p);
      write_file(plan_out, serialize_scheme(res.scheme).dump(2) + "\n");
      nlohmann::json summary;
      auto costs = res.scheme.costs();
      summary["log2_tc"] = costs.log2_tc;
      summary["cw"] = costs.cw;
      summary["subtasks"] = costs.subtasks;
      summary["sliced_edges"] = res.scheme.sliced_edges.size();
      summary["restart_log2_tc"] = res.restart_log2_tc;
      summary["out"] = plan_out;
      std::cout << summary.dump(2) << "\n";
    } else if (*run_cmd) {
      Circuit c = parse_circuit(read_file(run_circuit));
      std::vector<int> open = parse_open_qubits(run_open, c);
      std::set<int> open_set(open.begin(), open.end());
      std::map<int, int> fixed = fixed_bits_from_hex(run_fixed_hex, c, open);
      TensorNetwork net = circuit_to_network(c, open_set, fixed).net;
      ContractionScheme scheme = parse_scheme(nlohmann::json::parse(read_file(run_order)), net);
      CompileOptions co;
      co.precision = run_precision == "double" ? Precision::Double : Precision::Single;
      ExecutablePlan p = compile(net, scheme, co);
      auto [value, report] = run_scheme(p, run_parallelism);
      if (!run_amps_out.empty())
        write_file(run_amps_out, amplitudes_json(value, open).dump(2) + "\n");
      nlohmann::json rj = report.to_json();
      if (!run_report.empty()) write_file(run_report, rj.dump(2) + "\n");
      std::cout << rj.dump(2) << "\n";
    } else if (*sample_cmd) {
      Circuit c = parse_circuit(read_file(sm_circuit));
      std::vector<int> open = parse_open_qubits(sm_open, c);
      SchemeProvider provider;
      if (!sm_order.empty()) {
        std::string order_text = read_file(sm_order);
        provider = [order_text](const TensorNetwork &net) {
          return parse_scheme(nlohmann::json::parse(order_text), net);
        };
      } else {
        std::uint64_t seed = sm_seed;
        provider = [seed](const TensorNetwork &net) {
          PlannerParams p;
          p.seed = seed;
          p.restarts = 2;
          p.iterations = {16, 8, 4, 8};
          return plan(net, p).scheme;
        };
      }
      SampleOptions opt;
      opt.seed = sm_seed;
      opt.frugal_r = sm_r;
      opt.first_only = sm_first_only;
      opt.precision = sm_precision == "double" ? Precision::Double : Precision::Single;
      opt.parallelism = sm_parallelism;
      opt.stop_after_samples = sm_samples;
      opt.batches = sm_max_batches > 0 ? sm_max_batches : int(std::max<long long>(64, sm_samples));
      SampleReport rep = frugal_sample(c, open, provider, opt);
      if (!sm_report.empty()) write_file(sm_report, rep.to_json(true).dump() + "\n");
      std::cout << rep.to_json(false).dump(2) << "\n";
    } else if (*xeb_cmd) {
      Circuit c = parse_circuit(read_file(xeb_circuit));
      int n = c.qubit_count();
      require(n <= 26, ErrorKind::CapExceeded, "xeb scoring needs a <=26 qubit state vector");
      std::vector<cx> psi = statevector(c);
      std::vector<double> probs;
      std::istringstream in(read_file(xeb_samples_file));
      std::string line;
      int line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        require(int(line.size()) == n, ErrorKind::SyntaxError,
                "line " + std::to_string(line_no) + ": bitstring length != qubit count");
        std::vector<int> bits(n);
        for (int q = 0; q < n; ++q) {
          require(line[q] == '0' || line[q] == '1', ErrorKind::SyntaxError,
                  "line " + std::to_string(line_no) + ": not a bitstring");
          bits[q] = line[q] - '0';
        }
        probs.push_back(std::norm(psi[bits_to_index(bits)]));
      }
      XebEstimate e = xeb(probs, n);
      nlohmann::json out{{"samples", probs.size()}, {"xeb", e.value}, {"sigma", e.sigma}};
      std::cout << out.dump(2) << "\n";
    } else if (*bench_cmd) {
      PlannerParams p = planner_params_from(bench_params_json, bench_seed, bench_target_cw, 1);
      std::vector<BenchRow> rows = run_bench(desk_benchmark_suite(), p, bench_runs);
      std::cout << bench_table(rows);
      if (!bench_out.empty()) write_file(bench_out, bench_to_json(rows).dump(2) + "\n");
    } else if (*agent_cmd) {
      Circuit c = parse_circuit(read_file(ag_circuit));
      std::vector<int> open = parse_open_qubits(ag_open, c);
      std::set<int> open_set(open.begin(), open.end());
      std::map<int, int> fixed = fixed_bits_from_hex(ag_fixed_hex, c, open);
      TensorNetwork net = circuit_to_network(c, open_set, fixed).net;
      ContractionScheme scheme = parse_scheme(nlohmann::json::parse(read_file(ag_order)), net);
      CompileOptions co;
      co.precision = ag_precision == "double" ? Precision::Double : Precision::Single;
      queue_init(ag_queue, net, scheme, std::uint64_t(ag_chunk), co);
      std::cout << "queue initialized: " << agent_split(scheme.subtasks(), ag_chunk).size()
                << " envelopes, " << scheme.subtasks() << " subtasks\n";
      if (ag_no_collect) return 0;
      std::vector<std::thread> workers;
      for (int w = 0; w < ag_workers; ++w)
        workers.emplace_back([&ag_queue, w] {
          WorkerOptions wo;
          wo.token = 1000 + std::uint64_t(w);
          worker_loop(ag_queue, wo);
        });
      for (auto &t : workers) t.join();
      Tensor value = agent_collect(ag_queue);
      if (!ag_amps_out.empty())
        write_file(ag_amps_out, amplitudes_json(value, open).dump(2) + "\n");
      std::cout << "collected " << value.data.size() << " amplitudes\n";
    } else if (*worker_cmd) {
      WorkerOptions wo;
      wo.max_tasks = wk_max_tasks;
      wo.token = wk_token;
      wo.stale_seconds = wk_stale;
      wo.crash_after_claim = wk_crash;
      int done = worker_loop(wk_queue, wo);
      std::cout << "completed " << done << " envelopes\n";
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

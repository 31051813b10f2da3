#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stemtn/errors.hpp"
#include "stemtn/runtime.hpp"
#include "stemtn/scheme.hpp"

namespace stemtn {

// File-based work queue mirroring the agent / object-store / worker
// architecture on one machine. The queue directory is the only shared
// state; claiming is an atomic rename, results are checksummed and written
// via rename, and re-execution of a claimed task reproduces identical bytes,
// so any interleaving of worker crashes and restarts yields the same
// aggregate.
//
//   dir/manifest.json   subtask count, chunking, per-envelope ranges
//   dir/network.json    tensor network (circuit compiled by the agent)
//   dir/order.json      contraction scheme
//   dir/pending/t<k>.json
//   dir/claimed/t<k>.<token>.json
//   dir/results/t<k>.json

struct TaskEnvelope {
  int task_id = 0;
  std::uint64_t lo = 0, hi = 0;  // assignment range [lo, hi)
  std::string network_hash;
  int attempts = 0;
};

inline std::vector<TaskEnvelope> agent_split(std::uint64_t subtasks, std::uint64_t chunk,
                                             const std::string &network_hash = "") {
  require(chunk >= 1, ErrorKind::SchemaError, "chunk must be at least 1");
  std::vector<TaskEnvelope> out;
  int id = 0;
  for (std::uint64_t lo = 0; lo < subtasks; lo += chunk) {
    TaskEnvelope e;
    e.task_id = id++;
    e.lo = lo;
    e.hi = std::min(subtasks, lo + chunk);
    e.network_hash = network_hash;
    out.push_back(std::move(e));
  }
  return out;
}

namespace detail_q {

namespace fs = std::filesystem;

inline void write_text_atomic(const fs::path &final_path, const std::string &text,
                              std::uint64_t token) {
  fs::path tmp = final_path;
  tmp += ".tmp" + std::to_string(token);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
  }
  fs::rename(tmp, final_path);
}

inline std::optional<nlohmann::json> read_json(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &) {
    return std::nullopt;
  }
}

inline std::uint64_t values_checksum(const std::vector<Tensor> &values) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const Tensor &t : values) {
    for (int d : t.dims) h = fnv1a64_u64(std::uint64_t(d), h);
    h = fnv1a64(t.data.data(), t.data.size() * sizeof(cx), h);
  }
  return h;
}

inline nlohmann::json envelope_json(const TaskEnvelope &e) {
  return {{"task_id", e.task_id},
          {"lo", e.lo},
          {"hi", e.hi},
          {"network_hash", e.network_hash},
          {"attempts", e.attempts}};
}

inline TaskEnvelope envelope_from(const nlohmann::json &j) {
  TaskEnvelope e;
  e.task_id = j.at("task_id").get<int>();
  e.lo = j.at("lo").get<std::uint64_t>();
  e.hi = j.at("hi").get<std::uint64_t>();
  e.network_hash = j.value("network_hash", "");
  e.attempts = j.value("attempts", 0);
  return e;
}

// Parses and verifies a result file; nullopt when missing or corrupt.
inline std::optional<std::vector<Tensor>> read_result(const fs::path &p, std::uint64_t lo,
                                                      std::uint64_t hi) {
  auto j = read_json(p);
  if (!j) return std::nullopt;
  try {
    if (j->at("lo").get<std::uint64_t>() != lo || j->at("hi").get<std::uint64_t>() != hi)
      return std::nullopt;
    std::vector<int> dims = j->at("dims").get<std::vector<int>>();
    std::vector<Tensor> values;
    for (const auto &jv : j->at("values")) {
      std::vector<cx> data;
      for (const auto &pair : jv) data.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
      values.emplace_back(dims, std::move(data));
    }
    if (values.size() != hi - lo) return std::nullopt;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)values_checksum(values));
    if (j->at("checksum").get<std::string>() != buf) return std::nullopt;
    return values;
  } catch (const std::exception &) {
    return std::nullopt;
  }
}

inline void write_result(const fs::path &p, const TaskEnvelope &e,
                         const std::vector<Tensor> &values, std::uint64_t token) {
  nlohmann::json j;
  j["task_id"] = e.task_id;
  j["lo"] = e.lo;
  j["hi"] = e.hi;
  j["dims"] = values.empty() ? std::vector<int>{} : values[0].dims;
  nlohmann::json jvals = nlohmann::json::array();
  for (const Tensor &t : values) {
    nlohmann::json jv = nlohmann::json::array();
    for (const cx &c : t.data) jv.push_back({c.real(), c.imag()});
    jvals.push_back(std::move(jv));
  }
  j["values"] = std::move(jvals);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)values_checksum(values));
  j["checksum"] = buf;
  write_text_atomic(p, j.dump(), token);
}

}  // namespace detail_q

inline void queue_init(const std::filesystem::path &dir, const TensorNetwork &net,
                       const ContractionScheme &scheme, std::uint64_t chunk,
                       const CompileOptions &options = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "pending");
  fs::create_directories(dir / "claimed");
  fs::create_directories(dir / "results");
  std::vector<TaskEnvelope> envelopes =
      agent_split(scheme.subtasks(), chunk, scheme.network_hash);
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["network_hash"] = scheme.network_hash;
  manifest["subtasks"] = scheme.subtasks();
  manifest["chunk"] = chunk;
  manifest["precision"] = precision_name(options.precision);
  manifest["merge_min_dim"] = options.merge_min_dim;
  manifest["width_budget"] = options.width_budget;
  nlohmann::json jenv = nlohmann::json::array();
  for (const TaskEnvelope &e : envelopes)
    jenv.push_back({{"task_id", e.task_id}, {"lo", e.lo}, {"hi", e.hi}});
  manifest["envelopes"] = std::move(jenv);
  detail_q::write_text_atomic(dir / "manifest.json", manifest.dump(2), 0);
  detail_q::write_text_atomic(dir / "network.json", net.to_json().dump(), 0);
  detail_q::write_text_atomic(dir / "order.json", serialize_scheme(scheme).dump(2), 0);
  for (const TaskEnvelope &e : envelopes)
    detail_q::write_text_atomic(dir / "pending" / ("t" + std::to_string(e.task_id) + ".json"),
                                detail_q::envelope_json(e).dump(), 0);
}

struct WorkerOptions {
  long long max_tasks = -1;       // stop after this many completions (<0: unlimited)
  bool crash_after_claim = false; // fault injection: claim one task, then exit
  std::uint64_t token = 1;        // distinguishes claim files of this worker
  int max_attempts = 3;           // bound on re-queues of a corrupt task
  double stale_seconds = 30.0;    // claims older than this may be re-queued
};

// Drains the queue: claim pending envelopes by rename, execute the
// assignment range, write a checksummed result, release the claim. When
// pending is empty, stale claims without results are re-queued and corrupt
// results retried (bounded), then the worker exits.
inline int worker_loop(const std::filesystem::path &dir, const WorkerOptions &opt = {}) {
  namespace fs = std::filesystem;
  auto manifest = detail_q::read_json(dir / "manifest.json");
  require(manifest.has_value(), ErrorKind::MissingResult, "queue has no manifest");

  std::optional<ExecutablePlan> plan;
  std::optional<BranchCache> cache;
  auto ensure_plan = [&] {
    if (plan) return;
    auto jnet = detail_q::read_json(dir / "network.json");
    auto jorder = detail_q::read_json(dir / "order.json");
    require(jnet && jorder, ErrorKind::MissingResult, "queue is missing network or order file");
    TensorNetwork net = TensorNetwork::from_json(*jnet);
    ContractionScheme scheme = parse_scheme(*jorder, net);
    CompileOptions co;
    co.precision = manifest->value("precision", std::string("single")) == "double"
                       ? Precision::Double
                       : Precision::Single;
    co.merge_min_dim = manifest->value("merge_min_dim", 32);
    co.width_budget = manifest->value("width_budget", 30);
    plan = compile(net, scheme, co);
    cache = build_branch_cache(*plan);
  };

  int completed = 0;
  for (;;) {
    if (opt.max_tasks >= 0 && completed >= opt.max_tasks) return completed;
    // claim the lowest-numbered pending envelope
    std::vector<fs::path> pending;
    for (const auto &entry : fs::directory_iterator(dir / "pending"))
      pending.push_back(entry.path());
    std::sort(pending.begin(), pending.end());
    bool claimed_one = false;
    for (const fs::path &p : pending) {
      fs::path claim = dir / "claimed" /
                       (p.stem().string() + "." + std::to_string(opt.token) + ".json");
      std::error_code ec;
      fs::rename(p, claim, ec);
      if (ec) continue;  // claimed by another worker
      claimed_one = true;
      if (opt.crash_after_claim) return completed;  // simulated kill
      auto je = detail_q::read_json(claim);
      if (!je) {
        fs::remove(claim, ec);
        break;
      }
      TaskEnvelope e = detail_q::envelope_from(*je);
      fs::path result = dir / "results" / ("t" + std::to_string(e.task_id) + ".json");
      if (!detail_q::read_result(result, e.lo, e.hi)) {
        ensure_plan();
        require(e.network_hash.empty() || e.network_hash == plan->scheme.network_hash,
                ErrorKind::HashMismatch, "envelope belongs to a different network");
        std::vector<Tensor> values;
        for (std::uint64_t a = e.lo; a < e.hi; ++a)
          values.push_back(run_subtask(*plan, a, &*cache).value);
        detail_q::write_result(result, e, values, opt.token);
      }
      fs::remove(claim, ec);
      completed++;
      break;
    }
    if (claimed_one) continue;

    // idle: re-queue stale claims and corrupt results, else drain
    bool requeued = false;
    for (const auto &entry : fs::directory_iterator(dir / "claimed")) {
      auto je = detail_q::read_json(entry.path());
      if (!je) continue;
      TaskEnvelope e = detail_q::envelope_from(*je);
      fs::path result = dir / "results" / ("t" + std::to_string(e.task_id) + ".json");
      if (detail_q::read_result(result, e.lo, e.hi)) {
        std::error_code ec;
        fs::remove(entry.path(), ec);  // finished by a worker that died afterwards
        continue;
      }
      auto age = std::chrono::duration<double>(
                     std::chrono::file_clock::now() - fs::last_write_time(entry.path()))
                     .count();
      if (age < opt.stale_seconds) continue;
      e.attempts++;
      if (e.attempts > opt.max_attempts) continue;
      std::error_code ec;
      fs::path back = dir / "pending" / ("t" + std::to_string(e.task_id) + ".json");
      detail_q::write_text_atomic(back, detail_q::envelope_json(e).dump(), opt.token);
      fs::remove(entry.path(), ec);
      requeued = true;
    }
    if (!requeued) {
      // verify results against the manifest; retry corrupt ones
      for (const auto &jm : manifest->at("envelopes")) {
        TaskEnvelope e;
        e.task_id = jm.at("task_id").get<int>();
        e.lo = jm.at("lo").get<std::uint64_t>();
        e.hi = jm.at("hi").get<std::uint64_t>();
        fs::path result = dir / "results" / ("t" + std::to_string(e.task_id) + ".json");
        if (fs::exists(result) && !detail_q::read_result(result, e.lo, e.hi)) {
          std::error_code ec;
          fs::remove(result, ec);
          detail_q::write_text_atomic(
              dir / "pending" / ("t" + std::to_string(e.task_id) + ".json"),
              detail_q::envelope_json(e).dump(), opt.token);
          requeued = true;
        }
      }
    }
    if (!requeued) return completed;
  }
}

// Sums chunk results in ascending range order after validating checksums.
// The reduction order matches run_scheme exactly, so the aggregate is
// bitwise equal to in-process execution.
inline Tensor agent_collect(const std::filesystem::path &dir) {
  namespace fs = std::filesystem;
  auto manifest = detail_q::read_json(dir / "manifest.json");
  require(manifest.has_value(), ErrorKind::MissingResult, "queue has no manifest");
  Tensor sum;
  bool first = true;
  for (const auto &jm : manifest->at("envelopes")) {
    int task_id = jm.at("task_id").get<int>();
    std::uint64_t lo = jm.at("lo").get<std::uint64_t>();
    std::uint64_t hi = jm.at("hi").get<std::uint64_t>();
    fs::path result = dir / "results" / ("t" + std::to_string(task_id) + ".json");
    require(fs::exists(result), ErrorKind::MissingResult,
            "no result for envelope t" + std::to_string(task_id));
    auto values = detail_q::read_result(result, lo, hi);
    require(values.has_value(), ErrorKind::ChecksumMismatch,
            "corrupt result for envelope t" + std::to_string(task_id));
    for (const Tensor &v : *values) {
      if (first) {
        sum = Tensor(v.dims);
        first = false;
      }
      require(v.dims == sum.dims, ErrorKind::ChecksumMismatch, "result shapes disagree");
      for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += v.data[i];
    }
  }
  require(!first, ErrorKind::MissingResult, "queue has no envelopes");
  return sum;
}

}  // namespace stemtn

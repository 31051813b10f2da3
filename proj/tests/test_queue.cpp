#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <fstream>
#include <thread>

#include "stemtn/circuit.hpp"
#include "stemtn/planner.hpp"
#include "stemtn/queue.hpp"
#include "test_support.hpp"

using namespace stemtn;
using stemtn::testing::TempDir;

namespace {

struct Fixture {
  TensorNetwork net;
  ContractionScheme scheme;
  CompileOptions co;

  explicit Fixture(std::uint64_t seed, int target_cw = 4) {
    Circuit c = generate_random_circuit(2, 4, 5, seed);
    std::map<int, int> fixed;
    std::set<int> open = {0, 1};
    for (int q = 0; q < 8; ++q)
      if (!open.count(q)) fixed[q] = 0;
    net = circuit_to_network(c, open, fixed).net;
    PlannerParams p;
    p.iterations = {6, 4, 2, 4};
    p.restarts = 2;
    p.seed = seed;
    p.target_cw = target_cw;
    scheme = plan(net, p).scheme;
    co.precision = Precision::Double;
  }
};

bool bits_equal(const Tensor &a, const Tensor &b) {
  return a.dims == b.dims &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(cx)) == 0;
}

}  // namespace

TEST_CASE("agent_split partitions the assignment space", "[queue]") {
  auto envs = agent_split(128, 32);
  REQUIRE(envs.size() == 4);  // 2^7 subtasks in chunks of 32
  auto one = agent_split(10, 64);
  REQUIRE(one.size() == 1);
  REQUIRE(one[0].lo == 0);
  REQUIRE(one[0].hi == 10);
  auto ragged = agent_split(100, 17);
  std::uint64_t expect = 0;
  for (const auto &e : ragged) {
    REQUIRE(e.lo == expect);
    REQUIRE(e.hi > e.lo);
    expect = e.hi;
  }
  REQUIRE(expect == 100);
  REQUIRE_THROWS_AS(agent_split(8, 0), Error);
}

TEST_CASE("harness aggregate equals in-process execution bitwise", "[queue]") {
  Fixture f(41);
  REQUIRE(f.scheme.subtasks() >= 4);
  TempDir dir("roundtrip");
  queue_init(dir.path(), f.net, f.scheme, 3, f.co);
  WorkerOptions w;
  w.token = 7;
  int done = worker_loop(dir.path(), w);
  REQUIRE(done == int(agent_split(f.scheme.subtasks(), 3).size()));
  Tensor collected = agent_collect(dir.path());
  ExecutablePlan plan_ = compile(f.net, f.scheme, f.co);
  auto [direct, rep] = run_scheme(plan_, 1);
  REQUIRE(bits_equal(collected, direct));
}

TEST_CASE("two workers drain the queue with every envelope done exactly once", "[queue]") {
  Fixture f(42);
  TempDir dir("two_workers");
  queue_init(dir.path(), f.net, f.scheme, 2, f.co);
  int n_envelopes = int(agent_split(f.scheme.subtasks(), 2).size());
  int done1 = 0, done2 = 0;
  std::thread t1([&] {
    WorkerOptions w;
    w.token = 1;
    done1 = worker_loop(dir.path(), w);
  });
  std::thread t2([&] {
    WorkerOptions w;
    w.token = 2;
    done2 = worker_loop(dir.path(), w);
  });
  t1.join();
  t2.join();
  REQUIRE(done1 + done2 == n_envelopes);  // claim log: no envelope ran twice
  Tensor collected = agent_collect(dir.path());
  ExecutablePlan plan_ = compile(f.net, f.scheme, f.co);
  auto [direct, rep] = run_scheme(plan_, 4);
  REQUIRE(bits_equal(collected, direct));
}

TEST_CASE("a worker killed mid-task does not change the aggregate", "[queue]") {
  Fixture f(43);
  TempDir dir("kill_restart");
  queue_init(dir.path(), f.net, f.scheme, 2, f.co);
  WorkerOptions crash;
  crash.token = 9;
  crash.crash_after_claim = true;  // claims one envelope and "dies"
  REQUIRE(worker_loop(dir.path(), crash) == 0);
  int claimed = 0;
  for (const auto &e : std::filesystem::directory_iterator(dir.path() / "claimed")) {
    (void)e;
    claimed++;
  }
  REQUIRE(claimed == 1);
  WorkerOptions recover;
  recover.token = 10;
  recover.stale_seconds = 0.0;  // treat the orphaned claim as immediately stale
  worker_loop(dir.path(), recover);
  Tensor collected = agent_collect(dir.path());
  ExecutablePlan plan_ = compile(f.net, f.scheme, f.co);
  auto [direct, rep] = run_scheme(plan_, 1);
  REQUIRE(bits_equal(collected, direct));
}

TEST_CASE("corrupt results are reported by the agent and healed by workers", "[queue]") {
  Fixture f(44);
  TempDir dir("corrupt");
  queue_init(dir.path(), f.net, f.scheme, 2, f.co);
  WorkerOptions w;
  w.token = 3;
  worker_loop(dir.path(), w);
  // flip bytes in one result
  auto target = dir.path() / "results" / "t0.json";
  {
    std::ifstream in(target);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto pos = text.find("\"checksum\"");
    text[pos + 13] = text[pos + 13] == 'a' ? 'b' : 'a';
    std::ofstream out(target, std::ios::trunc);
    out << text;
  }
  try {
    agent_collect(dir.path());
    FAIL("expected ChecksumMismatch");
  } catch (const Error &e) {
    REQUIRE(e.kind() == ErrorKind::ChecksumMismatch);
    REQUIRE(std::string(e.what()).find("t0") != std::string::npos);
  }
  // a fresh worker notices, re-queues and recomputes the envelope
  WorkerOptions heal;
  heal.token = 4;
  heal.stale_seconds = 0.0;
  REQUIRE(worker_loop(dir.path(), heal) >= 1);
  Tensor collected = agent_collect(dir.path());
  ExecutablePlan plan_ = compile(f.net, f.scheme, f.co);
  auto [direct, rep] = run_scheme(plan_, 1);
  REQUIRE(bits_equal(collected, direct));
}

TEST_CASE("missing results are reported with the envelope name", "[queue]") {
  Fixture f(45);
  TempDir dir("missing");
  queue_init(dir.path(), f.net, f.scheme, 2, f.co);
  REQUIRE_THROWS_MATCHES(agent_collect(dir.path()), Error,
                         Catch::Matchers::Predicate<Error>([](const Error &e) {
                           return e.kind() == ErrorKind::MissingResult;
                         }));
}

TEST_CASE("single-envelope queues aggregate to that result", "[queue]") {
  Fixture f(46, 29);  // no slicing needed
  REQUIRE(f.scheme.subtasks() == 1);
  TempDir dir("single");
  queue_init(dir.path(), f.net, f.scheme, 64, f.co);
  WorkerOptions w;
  worker_loop(dir.path(), w);
  Tensor collected = agent_collect(dir.path());
  ExecutablePlan plan_ = compile(f.net, f.scheme, f.co);
  REQUIRE(bits_equal(collected, run_subtask(plan_, 0, nullptr).value));
}

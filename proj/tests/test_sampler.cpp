#include <catch2/catch_amalgamated.hpp>

#include "stemtn/planner.hpp"
#include "stemtn/sampler.hpp"
#include "stemtn/statevector.hpp"
#include "test_support.hpp"

using namespace stemtn;

namespace {

SchemeProvider light_planner(std::uint64_t seed) {
  return [seed](const TensorNetwork &net) {
    PlannerParams p;
    p.iterations = {6, 4, 2, 4};
    p.restarts = 2;
    p.seed = seed;
    p.target_cw = 26;
    return plan(net, p).scheme;
  };
}

std::vector<double> output_probs(const Circuit &c) {
  std::vector<cx> psi = statevector(c);
  std::vector<double> p(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) p[i] = std::norm(psi[i]);
  return p;
}

// inverse-CDF sampling from an explicit distribution
std::vector<std::uint64_t> sample_from(const std::vector<double> &p, int count, Rng &rng) {
  std::vector<double> cum(p.size());
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cum[i] = acc;
  }
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) {
    double u = rng.next_double() * acc;
    out.push_back(std::uint64_t(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin()));
  }
  return out;
}

Circuit identity_circuit(int rows, int cols) {
  Circuit c;
  c.layout = Layout::grid(rows, cols);
  c.cycles = 0;
  Layer final_layer;
  std::vector<cx> eye = {cx(1, 0), cx(0, 0), cx(0, 0), cx(1, 0)};
  for (int q = 0; q < rows * cols; ++q) final_layer.gates.push_back(make_custom({q}, eye));
  c.layers.push_back(std::move(final_layer));
  return c;
}

}  // namespace

TEST_CASE("a single sample at p = 2^-n gives exactly zero XEB", "[sampler]") {
  XebEstimate e = xeb({1.0 / 1024.0}, 10);
  REQUIRE(e.value == 0.0);
}

TEST_CASE("xeb is 1 for ideal samples and 0 for uniform samples", "[sampler]") {
  Circuit c = generate_random_circuit(2, 5, 8, 2024);
  std::vector<double> p = output_probs(c);
  Rng rng(55);
  const int m = 50000;

  std::vector<double> ideal_probs;
  for (std::uint64_t x : sample_from(p, m, rng)) ideal_probs.push_back(p[x]);
  XebEstimate ideal = xeb(ideal_probs, 10);
  // the estimator mean over the ideal distribution is 2^n sum p^2 - 1
  double expected = 0;
  for (double v : p) expected += v * v;
  expected = 1024.0 * expected - 1.0;
  REQUIRE(std::abs(ideal.value - expected) <= 3.0 * ideal.sigma);
  REQUIRE(ideal.value > 0.8);  // deep circuits concentrate near 1

  std::vector<double> uniform_probs;
  for (int i = 0; i < m; ++i) uniform_probs.push_back(p[rng.next_below(1024)]);
  XebEstimate uni = xeb(uniform_probs, 10);
  REQUIRE(std::abs(uni.value) <= 3.0 * uni.sigma);
}

TEST_CASE("xeb rejects empty sample sets", "[sampler]") {
  REQUIRE_THROWS_MATCHES(xeb({}, 4), Error, Catch::Matchers::Predicate<Error>([](const Error &e) {
                           return e.kind() == ErrorKind::EmptySamples;
                         }));
}

TEST_CASE("porter-thomas flags a point mass at the 1/e deviation", "[sampler]") {
  std::vector<double> p(256, 1.0 / 256.0);
  PorterThomasResult r = porter_thomas_check(p, 256);
  REQUIRE(r.degenerate);
  REQUIRE(r.ks == Catch::Approx(std::exp(-1.0)).margin(1e-9));
}

TEST_CASE("deep circuits match porter-thomas, shallow ones do not", "[sampler]") {
  Circuit deep = generate_random_circuit(2, 5, 10, 77);
  Circuit shallow = generate_random_circuit(2, 5, 1, 77);
  Rng rng(11);
  auto collect = [&](const Circuit &c) {
    std::vector<double> p = output_probs(c);
    std::vector<double> drawn;
    for (int i = 0; i < 50000; ++i) drawn.push_back(p[rng.next_below(1024)]);
    return porter_thomas_check(drawn, 1024);
  };
  PorterThomasResult d = collect(deep);
  PorterThomasResult s = collect(shallow);
  // with 2^10 distinct states the finite-size KS floor is ~1/sqrt(1024)
  REQUIRE(d.ks < 0.06);
  REQUIRE(s.ks > 2.0 * d.ks);
  REQUIRE_FALSE(d.degenerate);
}

TEST_CASE("batch qubit selection follows the pinned sycamore choices", "[sampler]") {
  Layout s = Layout::sycamore53();
  for (int m : {12, 14, 20, 8})
    REQUIRE(batch_qubit_selector(s, m) == std::vector<int>{0, 1, 2, 3, 4, 5});
  for (int m : {16, 18})
    REQUIRE(batch_qubit_selector(s, m) == std::vector<int>{10, 17, 18, 26, 27, 36});
  REQUIRE(batch_qubit_selector(Layout::grid(2, 3), 4) == std::vector<int>{0, 1, 2, 3, 4, 5});
  REQUIRE_THROWS_MATCHES(batch_qubit_selector(Layout::grid(1, 4), 4), Error,
                         Catch::Matchers::Predicate<Error>([](const Error &e) {
                           return e.kind() == ErrorKind::LayoutTooSmall;
                         }));
  // generated grids get a connected corner patch
  std::vector<int> g = batch_qubit_selector(Layout::grid(4, 4), 10);
  REQUIRE(g.size() == 6);
}

TEST_CASE("identity circuits only ever emit the all-zeros string", "[sampler]") {
  Circuit c = identity_circuit(2, 3);
  SampleOptions opt;
  opt.batches = 5;
  opt.seed = 9;
  SampleReport rep = frugal_sample(c, {0, 1, 2, 3, 4, 5}, light_planner(1), opt);
  REQUIRE(rep.accepted > 0);
  for (const std::string &s : rep.samples) REQUIRE(s == "000000");
  REQUIRE(rep.acceptance_rate > 0.0);
  REQUIRE(rep.acceptance_rate <= 1.0);
}

TEST_CASE("with R=10 a 64-batch accepts at least once with high probability", "[sampler]") {
  // direct simulation of the Porter-Thomas acceptance model: u ~ Exp(1),
  // accept with min(1, u/R)
  Rng rng(123);
  const double R = 10.0;
  int trials = 20000, hit = 0;
  for (int t = 0; t < trials; ++t) {
    bool any = false;
    for (int i = 0; i < 64; ++i) {
      double u = -std::log(1.0 - rng.next_double());
      if (rng.next_double() < std::min(1.0, u / R)) any = true;
    }
    hit += any;
  }
  REQUIRE(double(hit) / trials > 0.99);
}

TEST_CASE("frugal sampling induces the right distribution on a real circuit", "[sampler]") {
  Circuit c = generate_random_circuit(2, 4, 8, 31);  // 8 qubits
  std::vector<int> open = {0, 1, 2, 3, 4, 5};
  SampleOptions opt;
  opt.batches = 400;
  opt.seed = 5;
  SampleReport rep = frugal_sample(c, open, light_planner(2), opt);
  REQUIRE(rep.accepted > 100);

  std::vector<double> p = output_probs(c);
  // the sampler's induced distribution q(x) ~ min(1, p(x) 2^n / R): its
  // exact TV distance to p is the acceptance-cap truncation bias
  double z = 0;
  std::vector<double> q(p.size());
  for (std::size_t x = 0; x < p.size(); ++x) {
    q[x] = std::min(1.0, p[x] * 256.0 / opt.frugal_r);
    z += q[x];
  }
  double tv_induced = 0;
  for (std::size_t x = 0; x < p.size(); ++x) tv_induced += std::abs(q[x] / z - p[x]);
  tv_induced /= 2;
  REQUIRE(tv_induced < 0.02);

  // empirical sample histogram stays close to the induced distribution
  std::map<std::string, int> counts;
  for (const std::string &s : rep.samples) counts[s]++;
  double tv_emp = 0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    std::string key(8, '0');
    for (int qb = 0; qb < 8; ++qb) key[qb] = char('0' + ((x >> qb) & 1));
    double emp = counts.count(key) ? double(counts[key]) / double(rep.samples.size()) : 0.0;
    tv_emp += std::abs(emp - q[x] / z);
  }
  tv_emp /= 2;
  REQUIRE(tv_emp < 4.0 * std::sqrt(double(p.size()) / (2 * 3.14159 * double(rep.accepted))));

  // XEB of the accepted samples is near 1
  REQUIRE(std::abs(rep.xeb_value - 1.0) < 0.05 + 4.0 * rep.xeb_sigma);
}

TEST_CASE("first-only mode emits at most one sample per batch", "[sampler]") {
  Circuit c = generate_random_circuit(2, 4, 6, 3);
  SampleOptions opt;
  opt.batches = 50;
  opt.seed = 2;
  opt.first_only = true;
  SampleReport rep = frugal_sample(c, {0, 1, 2, 3, 4, 5}, light_planner(3), opt);
  REQUIRE(rep.accepted <= std::uint64_t(rep.batches_run));
}

TEST_CASE("sampling runs are deterministic per seed", "[sampler]") {
  Circuit c = generate_random_circuit(2, 3, 6, 12);
  SampleOptions opt;
  opt.batches = 20;
  opt.seed = 77;
  SampleReport a = frugal_sample(c, {0, 1, 2, 3, 4, 5}, light_planner(4), opt);
  SampleReport b = frugal_sample(c, {0, 1, 2, 3, 4, 5}, light_planner(4), opt);
  REQUIRE(a.to_json().dump() == b.to_json().dump());
  opt.seed = 78;
  SampleReport d = frugal_sample(c, {0, 1, 2, 3, 4, 5}, light_planner(4), opt);
  REQUIRE(a.to_json().dump() != d.to_json().dump());
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "stemtn/circuit.hpp"
#include "stemtn/errors.hpp"
#include "stemtn/rng.hpp"
#include "stemtn/runtime.hpp"

namespace stemtn {

struct XebEstimate {
  double value = 0;
  double sigma = 0;  // standard error of the estimate
};

// Linear cross-entropy benchmarking fidelity 2^n <p_I(x)> - 1 over samples,
// with a standard-error estimate. 0 for uniform output, 1 for ideal output.
inline XebEstimate xeb(const std::vector<double> &probs, int n_qubits) {
  require(!probs.empty(), ErrorKind::EmptySamples, "xeb needs at least one sample");
  double scale = std::pow(2.0, double(n_qubits));
  double mean = 0;
  for (double p : probs) mean += p;
  mean /= double(probs.size());
  double var = 0;
  for (double p : probs) var += (p - mean) * (p - mean);
  var /= std::max<double>(1.0, double(probs.size()) - 1.0);
  XebEstimate out;
  out.value = scale * mean - 1.0;
  out.sigma = scale * std::sqrt(var / double(probs.size()));
  return out;
}

struct PorterThomasResult {
  double bin_width = 0;
  std::vector<double> density;  // histogram of u = N*p
  double ks = 0;                // max_i |i/n - (1 - e^{-u_(i)})|
  bool degenerate = false;      // all probabilities identical (point mass)
};

// Compares the scaled output probabilities u = N*p against the
// Porter-Thomas law (u ~ Exp(1)). probs should come from uniformly random
// output bitstrings, not from accepted samples.
inline PorterThomasResult porter_thomas_check(std::vector<double> probs,
                                              std::uint64_t n_states) {
  require(!probs.empty(), ErrorKind::EmptySamples, "porter_thomas_check needs probabilities");
  PorterThomasResult out;
  std::vector<double> u;
  u.reserve(probs.size());
  for (double p : probs) u.push_back(double(n_states) * p);
  std::sort(u.begin(), u.end());
  out.degenerate = (u.front() == u.back());
  double n = double(u.size());
  // sup over sample points of |F_emp(u) - F(u)| with the right-continuous
  // empirical CDF (ties grouped)
  for (std::size_t i = 0; i < u.size();) {
    std::size_t j = i;
    while (j < u.size() && u[j] == u[i]) ++j;
    double f = 1.0 - std::exp(-u[i]);
    out.ks = std::max(out.ks, std::abs(double(j) / n - f));
    i = j;
  }
  double hi = std::max(10.0, u.back());
  int bins = 50;
  out.bin_width = hi / bins;
  out.density.assign(bins, 0.0);
  for (double v : u) {
    int b = std::min(bins - 1, int(v / out.bin_width));
    out.density[b] += 1.0;
  }
  for (double &d : out.density) d /= (n * out.bin_width);
  return out;
}

// The six-qubit batch used for open-network amplitude evaluation. For the
// built-in sycamore53 layout the choice is pinned per cycle count (the
// lower-right corner for m in {16,18}, the upper-right corner otherwise);
// for generated grids it is a connected corner-adjacent set found by BFS
// from the upper-right corner.
inline std::vector<int> batch_qubit_selector(const Layout &layout, int m) {
  if (layout.name == "sycamore53") {
    if (m == 16 || m == 18) return {10, 17, 18, 26, 27, 36};
    return {0, 1, 2, 3, 4, 5};
  }
  require(layout.qubit_count() >= 6, ErrorKind::LayoutTooSmall,
          "batch selection needs at least 6 qubits");
  int start = 0;
  for (int q = 1; q < layout.qubit_count(); ++q) {
    auto [r, c] = layout.coords[q];
    auto [br, bc] = layout.coords[start];
    if (r < br || (r == br && c > bc)) start = q;
  }
  std::vector<int> picked;
  std::vector<bool> seen(layout.qubit_count(), false);
  std::queue<int> q;
  q.push(start);
  seen[start] = true;
  while (!q.empty() && int(picked.size()) < 6) {
    int v = q.front();
    q.pop();
    picked.push_back(v);
    for (int w : layout.neighbors(v))
      if (!seen[w]) {
        seen[w] = true;
        q.push(w);
      }
  }
  require(int(picked.size()) == 6, ErrorKind::LayoutTooSmall,
          "layout is disconnected around the corner");
  std::sort(picked.begin(), picked.end());
  return picked;
}

struct SampleOptions {
  int batches = 100;
  std::uint64_t seed = 0;
  double frugal_r = 10.0;   // acceptance cap constant; ~10x oversampling
  bool first_only = false;  // accept at most one outcome per batch
  Precision precision = Precision::Double;
  int parallelism = 1;
  long long stop_after_samples = -1;  // checked between batches
  int merge_min_dim = 32;
  int width_budget = 30;
};

struct SampleReport {
  int n_qubits = 0;
  std::vector<int> open_qubits;
  std::vector<std::string> samples;  // character i is the bit of qubit i
  std::vector<double> probs;         // ideal probability per accepted sample
  double xeb_value = 0, xeb_sigma = 0;
  std::uint64_t accepted = 0, attempted = 0;
  double acceptance_rate = 0;
  int batches_run = 0;
  PorterThomasResult pt;  // over all evaluated batch amplitudes
  double frugal_r = 10.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json(bool include_samples = true) const {
    nlohmann::json j{{"n_qubits", n_qubits},
                     {"open_qubits", open_qubits},
                     {"xeb", xeb_value},
                     {"xeb_sigma", xeb_sigma},
                     {"accepted", accepted},
                     {"attempted", attempted},
                     {"acceptance_rate", acceptance_rate},
                     {"batches", batches_run},
                     {"frugal_r", frugal_r},
                     {"seed", seed},
                     {"pt_histogram",
                      {{"bin_width", pt.bin_width}, {"density", pt.density}, {"ks", pt.ks}}}};
    if (include_samples) {
      j["samples"] = samples;
      j["probs"] = probs;
    }
    return j;
  }
};

using SchemeProvider = std::function<ContractionScheme(const TensorNetwork &)>;

// Frugal rejection sampling. Per batch: draw the closed qubits uniformly at
// random, evaluate all 2^|open| amplitudes of the open tensor network in one
// contraction, then visit the open assignments in random order and accept
// each with probability min(1, p(x) * 2^n / R). Under the Porter-Thomas
// assumption the acceptance cap truncates only ~e^{-R} of the mass.
inline SampleReport frugal_sample(const Circuit &circuit, const std::vector<int> &open_qubits,
                                  const SchemeProvider &scheme_provider,
                                  const SampleOptions &opt = {}) {
  int n = circuit.qubit_count();
  std::set<int> open(open_qubits.begin(), open_qubits.end());
  std::map<int, int> fixed;
  for (int q = 0; q < n; ++q)
    if (!open.count(q)) fixed[q] = 0;
  CircuitNetwork cn = circuit_to_network(circuit, open, fixed);
  ContractionScheme scheme = scheme_provider(cn.net);
  CompileOptions co;
  co.precision = opt.precision;
  co.merge_min_dim = opt.merge_min_dim;
  co.width_budget = opt.width_budget;
  ExecutablePlan plan = compile(cn.net, scheme, co);

  int k = int(open.size());
  std::uint64_t batch_size = 1ull << k;
  double full_scale = std::pow(2.0, double(n));

  SampleReport rep;
  rep.n_qubits = n;
  rep.open_qubits.assign(open.begin(), open.end());
  rep.frugal_r = opt.frugal_r;
  rep.seed = opt.seed;
  std::vector<double> pt_pool;

  for (int b = 0; b < opt.batches; ++b) {
    if (opt.stop_after_samples >= 0 && (long long)rep.samples.size() >= opt.stop_after_samples)
      break;
    // redraw the closed qubits and poke the projector tensors
    std::map<int, int> bits;
    for (const auto &[q, vid] : cn.out_vertex_of_qubit) {
      int bit = int(stream_seed(opt.seed, 0xB175ull * std::uint64_t(b + 1), std::uint64_t(q)) & 1);
      bits[q] = bit;
      Tensor &t = plan.net.vertices.at(vid).tensor;
      t.data[0] = cx(bit == 0 ? 1 : 0, 0);
      t.data[1] = cx(bit == 1 ? 1 : 0, 0);
    }
    auto [amps, run_rep] = run_scheme(plan, opt.parallelism);
    std::vector<double> p(batch_size);
    for (std::uint64_t x = 0; x < batch_size; ++x) p[x] = std::norm(amps.data[x]);
    pt_pool.insert(pt_pool.end(), p.begin(), p.end());

    std::vector<std::uint64_t> order(batch_size);
    for (std::uint64_t x = 0; x < batch_size; ++x) order[x] = x;
    Rng batch_rng(stream_seed(opt.seed, 0xACCE9ull, std::uint64_t(b)));
    batch_rng.shuffle(order);
    for (std::uint64_t x : order) {
      rep.attempted++;
      double p_accept = std::min(1.0, p[x] * full_scale / opt.frugal_r);
      if (batch_rng.next_double() < p_accept) {
        std::string bitstring(n, '0');
        for (const auto &[q, bit] : bits) bitstring[q] = char('0' + bit);
        for (int i = 0; i < k; ++i)
          bitstring[rep.open_qubits[i]] = char('0' + ((x >> (k - 1 - i)) & 1));
        rep.samples.push_back(std::move(bitstring));
        rep.probs.push_back(p[x]);
        rep.accepted++;
        if (opt.first_only) break;
      }
    }
    rep.batches_run = b + 1;
  }
  rep.acceptance_rate = rep.attempted ? double(rep.accepted) / double(rep.attempted) : 0.0;
  if (!rep.probs.empty()) {
    XebEstimate e = xeb(rep.probs, n);
    rep.xeb_value = e.value;
    rep.xeb_sigma = e.sigma;
  }
  if (!pt_pool.empty()) rep.pt = porter_thomas_check(pt_pool, 1ull << n);
  return rep;
}

}  // namespace stemtn

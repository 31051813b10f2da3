#pragma once

#include <cstdint>
#include <vector>

#include "stemtn/circuit.hpp"
#include "stemtn/errors.hpp"

namespace stemtn {

// Brute-force state-vector simulation. This is the oracle path: it applies
// gate matrices to a dense 2^n vector directly and shares nothing with the
// tensor-network contraction machinery. Bit q of an amplitude index is the
// measured bit of qubit q (qubit 0 = least significant bit).

inline void apply_gate1(std::vector<cx> &psi, int q, const std::vector<cx> &u) {
  std::uint64_t bit = 1ull << q;
  for (std::uint64_t i = 0; i < psi.size(); ++i) {
    if (i & bit) continue;
    cx a0 = psi[i], a1 = psi[i | bit];
    psi[i] = u[0] * a0 + u[1] * a1;
    psi[i | bit] = u[2] * a0 + u[3] * a1;
  }
}

// Row index of u is (b_q1 * 2 + b_q2): the first listed qubit is the most
// significant bit of the 4x4 matrix index, matching the tensor layout used
// in circuit_to_network.
inline void apply_gate2(std::vector<cx> &psi, int q1, int q2, const std::vector<cx> &u) {
  std::uint64_t b1 = 1ull << q1, b2 = 1ull << q2;
  for (std::uint64_t i = 0; i < psi.size(); ++i) {
    if (i & (b1 | b2)) continue;
    std::uint64_t idx[4] = {i, i | b2, i | b1, i | b1 | b2};  // (b_q1 b_q2) = 00,01,10,11
    cx a[4] = {psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]};
    for (int r = 0; r < 4; ++r) {
      cx acc(0, 0);
      for (int k = 0; k < 4; ++k) acc += u[r * 4 + k] * a[k];
      psi[idx[r]] = acc;
    }
  }
}

inline std::vector<cx> statevector(const Circuit &c) {
  int n = c.qubit_count();
  require(n <= 26, ErrorKind::CapExceeded, "state vector limited to 26 qubits");
  std::vector<cx> psi(1ull << n, cx(0, 0));
  psi[0] = cx(1, 0);
  for (const Layer &layer : c.layers)
    for (const Gate &g : layer.gates) {
      if (g.qubits.size() == 1)
        apply_gate1(psi, g.qubits[0], g.matrix);
      else
        apply_gate2(psi, g.qubits[0], g.qubits[1], g.matrix);
    }
  return psi;
}

// Amplitude index for a full output assignment given per-qubit bits.
inline std::uint64_t bits_to_index(const std::vector<int> &bits) {
  std::uint64_t idx = 0;
  for (std::size_t q = 0; q < bits.size(); ++q)
    if (bits[q]) idx |= 1ull << q;
  return idx;
}

}  // namespace stemtn

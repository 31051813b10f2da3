#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stemtn/errors.hpp"
#include "stemtn/network.hpp"
#include "stemtn/rng.hpp"

namespace stemtn {

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

enum class GateKind { SqrtX, SqrtY, SqrtW, FSim, CustomUnitary };

inline const char *gate_name(GateKind k) {
  switch (k) {
    case GateKind::SqrtX: return "sx";
    case GateKind::SqrtY: return "sy";
    case GateKind::SqrtW: return "sw";
    case GateKind::FSim: return "fsim";
    case GateKind::CustomUnitary: return "u4";
  }
  return "?";
}

// Unitary matrix of a named gate, row-major. For two-qubit gates the row
// index is (b_first_qubit * 2 + b_second_qubit).
inline std::vector<cx> gate_matrix(GateKind kind, std::optional<double> theta = std::nullopt,
                                   std::optional<double> phi = std::nullopt) {
  const double s = 1.0 / std::sqrt(2.0);
  if (kind == GateKind::FSim) {
    require(theta.has_value() && phi.has_value(), ErrorKind::MissingParams,
            "fsim requires theta and phi");
    double th = *theta, ph = *phi;
    std::vector<cx> u(16, cx(0, 0));
    u[0] = cx(1, 0);
    u[5] = cx(std::cos(th), 0);
    u[6] = cx(0, -std::sin(th));
    u[9] = cx(0, -std::sin(th));
    u[10] = cx(std::cos(th), 0);
    u[15] = cx(std::cos(ph), -std::sin(ph));  // e^{-i phi}
    return u;
  }
  require(!theta.has_value() && !phi.has_value(), ErrorKind::MissingParams,
          "only fsim takes parameters");
  switch (kind) {
    case GateKind::SqrtX:
      return {s * cx(1, 0), s * cx(0, -1), s * cx(0, -1), s * cx(1, 0)};
    case GateKind::SqrtY:
      return {s * cx(1, 0), s * cx(-1, 0), s * cx(1, 0), s * cx(1, 0)};
    case GateKind::SqrtW: {
      // sqrt(i) = e^{i pi/4}, sqrt(-i) = e^{-i pi/4}
      cx sqrt_i(s, s), sqrt_mi(s, -s);
      return {s * cx(1, 0), s * (-sqrt_i), s * sqrt_mi, s * cx(1, 0)};
    }
    default:
      fail(ErrorKind::MissingParams, "custom unitaries have no derived matrix");
  }
}

inline bool is_unitary(const std::vector<cx> &u, int n, double tol = 1e-10) {
  if (u.size() != std::size_t(n) * std::size_t(n)) return false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cx acc(0, 0);
      for (int k = 0; k < n; ++k) acc += std::conj(u[k * n + i]) * u[k * n + j];
      if (std::abs(acc - (i == j ? cx(1, 0) : cx(0, 0))) > tol) return false;
    }
  return true;
}

struct Gate {
  GateKind kind;
  std::vector<int> qubits;  // 1 or 2 ids
  double theta = 0.0, phi = 0.0;
  std::vector<cx> matrix;  // 2x2 or 4x4 row-major

  int matrix_dim() const { return qubits.size() == 1 ? 2 : 4; }
};

inline Gate make_gate1(GateKind kind, int qubit) {
  Gate g;
  g.kind = kind;
  g.qubits = {qubit};
  g.matrix = gate_matrix(kind);
  return g;
}

inline Gate make_fsim(int q1, int q2, double theta, double phi) {
  Gate g;
  g.kind = GateKind::FSim;
  g.qubits = {q1, q2};
  g.theta = theta;
  g.phi = phi;
  g.matrix = gate_matrix(GateKind::FSim, theta, phi);
  return g;
}

inline Gate make_custom(std::vector<int> qubits, std::vector<cx> matrix) {
  Gate g;
  g.kind = GateKind::CustomUnitary;
  g.qubits = std::move(qubits);
  g.matrix = std::move(matrix);
  require(g.matrix.size() == (g.qubits.size() == 1 ? 4u : 16u), ErrorKind::InvariantViolation,
          "custom unitary matrix size mismatch");
  return g;
}

// ---------------------------------------------------------------------------
// Layouts
//
// All layouts are coordinate lists on a square lattice; couplers connect
// qubits at Manhattan distance 1. The four two-qubit pairing classes are
//   A: vertical (r,c)-(r+1,c) with r+c even     B: vertical, r+c odd
//   C: horizontal (r,c)-(r,c+1) with r+c even   D: horizontal, r+c odd
// which is the diagonal-staggered structure of the device layouts rotated
// onto the axis-aligned grid. The built-in "sycamore53" layout is the
// 53-site diamond in that rotated frame; it is intended for planner
// benchmarking and makes no claim of per-pair gate-parameter fidelity.
// ---------------------------------------------------------------------------

struct Layout {
  std::string name;  // "gridRxC", "sycamore53", or "custom"
  std::vector<std::pair<int, int>> coords;

  int qubit_count() const { return int(coords.size()); }

  int qubit_at(int r, int c) const {
    for (int q = 0; q < int(coords.size()); ++q)
      if (coords[q].first == r && coords[q].second == c) return q;
    return -1;
  }

  std::vector<std::pair<int, int>> pattern_pairs(char pattern) const {
    std::vector<std::pair<int, int>> out;
    bool vertical = (pattern == 'A' || pattern == 'B');
    int parity = (pattern == 'A' || pattern == 'C') ? 0 : 1;
    for (int q = 0; q < int(coords.size()); ++q) {
      auto [r, c] = coords[q];
      if (((r + c) & 1) != parity) continue;
      int other = vertical ? qubit_at(r + 1, c) : qubit_at(r, c + 1);
      if (other >= 0) out.emplace_back(q, other);
    }
    return out;
  }

  std::vector<int> neighbors(int q) const {
    auto [r, c] = coords[q];
    std::vector<int> out;
    for (auto [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
      int n = qubit_at(r + dr, c + dc);
      if (n >= 0) out.push_back(n);
    }
    return out;
  }

  static Layout grid(int rows, int cols) {
    require(rows >= 1 && cols >= 1, ErrorKind::SyntaxError, "grid needs positive dimensions");
    Layout l;
    l.name = "grid" + std::to_string(rows) + "x" + std::to_string(cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) l.coords.emplace_back(r, c);
    return l;
  }

  // 53-qubit diamond, qubits numbered in reading order (row, then column).
  static Layout sycamore53() {
    Layout l;
    l.name = "sycamore53";
    auto row = [&](int r, int c0, int c1) {
      for (int c = c0; c <= c1; ++c) l.coords.emplace_back(r, c);
    };
    row(0, 5, 6);
    row(1, 4, 7);
    row(2, 3, 8);
    row(3, 2, 9);
    row(4, 1, 8);
    row(5, 0, 8);
    row(6, 1, 7);
    row(7, 2, 6);
    row(8, 3, 5);
    row(9, 4, 4);
    return l;
  }

  static Layout named(const std::string &spec) {
    if (spec == "sycamore53") return sycamore53();
    if (spec.rfind("grid", 0) == 0) {
      auto x = spec.find('x');
      require(x != std::string::npos, ErrorKind::SyntaxError, "bad grid layout name: " + spec);
      try {
        int rows = std::stoi(spec.substr(4, x - 4));
        int cols = std::stoi(spec.substr(x + 1));
        return grid(rows, cols);
      } catch (const std::exception &) {
        fail(ErrorKind::SyntaxError, "bad grid layout name: " + spec);
      }
    }
    fail(ErrorKind::SyntaxError, "unknown layout: " + spec);
  }

  std::string spec_string() const {
    if (name != "custom") return name;
    std::string out = "coords";
    for (auto [r, c] : coords) out += " (" + std::to_string(r) + "," + std::to_string(c) + ")";
    return out;
  }
};

// ---------------------------------------------------------------------------
// Circuits
// ---------------------------------------------------------------------------

// Two-qubit pattern label for a cycle; the 8-cycle sequence A,B,C,D,C,D,A,B.
inline char pattern_for_cycle(int cycle) {
  static const char seq[9] = "ABCDCDAB";
  return seq[cycle % 8];
}

struct Layer {
  bool two_qubit = false;
  char pattern = 0;  // A..D for two-qubit layers
  std::vector<Gate> gates;
};

// m cycles of (single-qubit layer, two-qubit layer) plus one final
// single-qubit layer before measurement; layers[2c] and layers[2c+1] belong
// to cycle c, layers.back() is the final layer.
struct Circuit {
  Layout layout;
  int cycles = 0;
  std::vector<Layer> layers;

  int qubit_count() const { return layout.qubit_count(); }
  const Layer &final_layer() const { return layers.back(); }

  void validate() const {
    int n = qubit_count();
    require(n >= 1, ErrorKind::InvariantViolation, "circuit has no qubits");
    require(int(layers.size()) == 2 * cycles + 1, ErrorKind::InvariantViolation,
            "layer sequence must be m single/two-qubit pairs plus a final single-qubit layer");
    std::vector<GateKind> prev(n, GateKind::CustomUnitary);
    bool have_prev = false;
    for (int li = 0; li < int(layers.size()); ++li) {
      const Layer &layer = layers[li];
      int cycle = li / 2;
      bool expect_two = (li % 2 == 1);
      require(layer.two_qubit == expect_two, ErrorKind::InvariantViolation,
              "layer " + std::to_string(li) + " has the wrong kind");
      std::set<int> touched;
      for (const Gate &g : layer.gates) {
        for (int q : g.qubits) {
          require(q >= 0 && q < n, ErrorKind::InvariantViolation,
                  "gate on unknown qubit " + std::to_string(q));
          require(touched.insert(q).second, ErrorKind::InvariantViolation,
                  "qubit " + std::to_string(q) + " touched twice in cycle " +
                      std::to_string(cycle));
        }
        require(int(g.qubits.size()) == (layer.two_qubit ? 2 : 1), ErrorKind::InvariantViolation,
                "gate arity does not match its layer");
        require(is_unitary(g.matrix, g.matrix_dim()), ErrorKind::InvariantViolation,
                "non-unitary gate matrix in cycle " + std::to_string(cycle));
      }
      if (!layer.two_qubit) {
        require(touched.size() == std::size_t(n), ErrorKind::InvariantViolation,
                "single-qubit layer of cycle " + std::to_string(cycle) +
                    " does not cover every qubit");
        for (const Gate &g : layer.gates) {
          // the no-repeat rule applies to the random gate set; custom
          // single-qubit unitaries are exempt
          bool named = g.kind == GateKind::SqrtX || g.kind == GateKind::SqrtY ||
                       g.kind == GateKind::SqrtW;
          require(named || g.kind == GateKind::CustomUnitary, ErrorKind::InvariantViolation,
                  "fsim is not a single-qubit gate");
          if (have_prev && named)
            require(prev[g.qubits[0]] != g.kind, ErrorKind::InvariantViolation,
                    "qubit " + std::to_string(g.qubits[0]) + " repeats its single-qubit gate in cycle " +
                        std::to_string(cycle));
        }
        for (const Gate &g : layer.gates) prev[g.qubits[0]] = g.kind;
        have_prev = true;
      }
    }
  }
};

struct GenOptions {
  double theta = 1.5707963267948966;  // pi/2
  double phi = 0.5235987755982988;    // pi/6
};

// Deterministic random circuit. The single-qubit gate of qubit q in cycle c
// is drawn from stream_seed(seed, q, c): cycle 0 picks r
// mod 3 from {sx, sy, sw}; later cycles pick r mod 2 from that list minus
// the previous gate (list kept in sx < sy < sw order). Identical seeds give
// byte-identical circuits, and the derivation is portable.
inline Circuit generate_random_circuit(const Layout &layout, int m, std::uint64_t seed,
                                       const GenOptions &opt = {}) {
  require(m >= 0, ErrorKind::InvariantViolation, "cycle count must be non-negative");
  Circuit c;
  c.layout = layout;
  c.cycles = m;
  int n = layout.qubit_count();
  std::vector<GateKind> prev(n);
  const GateKind all[3] = {GateKind::SqrtX, GateKind::SqrtY, GateKind::SqrtW};
  for (int cycle = 0; cycle <= m; ++cycle) {
    Layer single;
    for (int q = 0; q < n; ++q) {
      std::uint64_t r = stream_seed(seed, std::uint64_t(q), std::uint64_t(cycle));
      GateKind kind;
      if (cycle == 0) {
        kind = all[r % 3];
      } else {
        GateKind options[2];
        int k = 0;
        for (GateKind g : all)
          if (g != prev[q]) options[k++] = g;
        kind = options[r % 2];
      }
      prev[q] = kind;
      single.gates.push_back(make_gate1(kind, q));
    }
    c.layers.push_back(std::move(single));
    if (cycle == m) break;
    Layer two;
    two.two_qubit = true;
    two.pattern = pattern_for_cycle(cycle);
    for (auto [a, b] : layout.pattern_pairs(two.pattern))
      two.gates.push_back(make_fsim(a, b, opt.theta, opt.phi));
    c.layers.push_back(std::move(two));
  }
  c.validate();
  return c;
}

inline Circuit generate_random_circuit(int rows, int cols, int m, std::uint64_t seed,
                                       const GenOptions &opt = {}) {
  return generate_random_circuit(Layout::grid(rows, cols), m, seed, opt);
}

// ---------------------------------------------------------------------------
// Circuit file format (one gate per line):
//   qubits: <n> layout: <gridRxC|sycamore53|coords (r,c) (r,c) ...>
//   <cycle> <gate> <qubit> [<qubit2>] [<theta> <phi>]
// Gates: sx | sy | sw | fsim | u4:(re,im),... (16 pairs) | u2:(re,im),...
// (4 pairs). '#' starts a comment. Single-qubit gates at cycle c form the
// single-qubit layer of cycle c; the largest cycle index holds only
// single-qubit gates and is the final layer before measurement.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string serialize_circuit(const Circuit &c) {
  std::string out = "qubits: " + std::to_string(c.qubit_count()) + " layout: " +
                    c.layout.spec_string() + "\n";
  for (int li = 0; li < int(c.layers.size()); ++li) {
    const Layer &layer = c.layers[li];
    int cycle = li / 2;
    for (const Gate &g : layer.gates) {
      out += std::to_string(cycle);
      out += ' ';
      if (g.kind == GateKind::CustomUnitary) {
        int entries = g.qubits.size() == 1 ? 4 : 16;
        out += (entries == 4) ? "u2:" : "u4:";
        for (int i = 0; i < entries; ++i) {
          if (i) out += ',';
          out += '(' + format_double(g.matrix[i].real()) + ',' +
                 format_double(g.matrix[i].imag()) + ')';
        }
      } else {
        out += gate_name(g.kind);
      }
      for (int q : g.qubits) out += ' ' + std::to_string(q);
      if (g.kind == GateKind::FSim)
        out += ' ' + format_double(g.theta) + ' ' + format_double(g.phi);
      out += '\n';
    }
  }
  return out;
}

namespace detail {

inline std::vector<cx> parse_unitary_token(const std::string &tok, int entries, int line_no) {
  std::vector<cx> m;
  std::size_t i = 3;  // past "u2:"/"u4:"
  while (i < tok.size()) {
    require(tok[i] == '(', ErrorKind::SyntaxError,
            "line " + std::to_string(line_no) + ": expected '(' in u4 entry");
    std::size_t comma = tok.find(',', i);
    std::size_t close = tok.find(')', i);
    require(comma != std::string::npos && close != std::string::npos && comma < close,
            ErrorKind::SyntaxError, "line " + std::to_string(line_no) + ": bad u4 entry");
    try {
      double re = std::stod(tok.substr(i + 1, comma - i - 1));
      double im = std::stod(tok.substr(comma + 1, close - comma - 1));
      m.emplace_back(re, im);
    } catch (const std::exception &) {
      fail(ErrorKind::SyntaxError, "line " + std::to_string(line_no) + ": bad u4 number");
    }
    i = close + 1;
    if (i < tok.size()) {
      require(tok[i] == ',', ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": u4 entries must be comma separated");
      ++i;
    }
  }
  require(int(m.size()) == entries, ErrorKind::SyntaxError,
          "line " + std::to_string(line_no) + ": expected " + std::to_string(entries) +
              " complex entries");
  return m;
}

}  // namespace detail

inline Circuit parse_circuit(const std::string &text) {
  struct Line {
    int cycle;
    Gate gate;
  };
  std::vector<Line> entries;
  int n_qubits = -1;
  Layout layout;
  int line_no = 0;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "qubits:") {
      require(n_qubits < 0, ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": duplicate header");
      std::string kw;
      require(bool(ls >> n_qubits >> kw) && kw == "layout:", ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": header must be 'qubits: <n> layout: <spec>'");
      std::string spec;
      require(bool(ls >> spec), ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": missing layout");
      if (spec == "coords") {
        layout.name = "custom";
        std::string tok;
        while (ls >> tok) {
          int r, c;
          if (std::sscanf(tok.c_str(), "(%d,%d)", &r, &c) != 2)
            fail(ErrorKind::SyntaxError,
                 "line " + std::to_string(line_no) + ": bad coordinate " + tok);
          layout.coords.emplace_back(r, c);
        }
      } else {
        layout = Layout::named(spec);
      }
      require(layout.qubit_count() == n_qubits, ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": layout size does not match qubit count");
      continue;
    }
    require(n_qubits > 0, ErrorKind::SyntaxError,
            "line " + std::to_string(line_no) + ": gate before the 'qubits:' header");
    Line entry;
    try {
      entry.cycle = std::stoi(first);
    } catch (const std::exception &) {
      fail(ErrorKind::SyntaxError, "line " + std::to_string(line_no) + ": bad cycle index");
    }
    require(entry.cycle >= 0, ErrorKind::SyntaxError,
            "line " + std::to_string(line_no) + ": negative cycle");
    std::string gate_tok;
    require(bool(ls >> gate_tok), ErrorKind::SyntaxError,
            "line " + std::to_string(line_no) + ": missing gate");
    auto read_qubit = [&]() {
      int q;
      require(bool(ls >> q), ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": missing qubit id");
      require(q >= 0 && q < n_qubits, ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": qubit id out of range");
      return q;
    };
    if (gate_tok == "sx" || gate_tok == "sy" || gate_tok == "sw") {
      GateKind kind = gate_tok == "sx"   ? GateKind::SqrtX
                      : gate_tok == "sy" ? GateKind::SqrtY
                                         : GateKind::SqrtW;
      entry.gate = make_gate1(kind, read_qubit());
    } else if (gate_tok == "fsim") {
      int a = read_qubit(), b = read_qubit();
      double theta, phi;
      require(bool(ls >> theta >> phi), ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": fsim needs theta and phi");
      require(a != b, ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": fsim qubits must differ");
      entry.gate = make_fsim(a, b, theta, phi);
    } else if (gate_tok.rfind("u4:", 0) == 0) {
      std::vector<cx> m = detail::parse_unitary_token(gate_tok, 16, line_no);
      int a = read_qubit(), b = read_qubit();
      require(a != b, ErrorKind::SyntaxError,
              "line " + std::to_string(line_no) + ": u4 qubits must differ");
      entry.gate = make_custom({a, b}, std::move(m));
    } else if (gate_tok.rfind("u2:", 0) == 0) {
      std::vector<cx> m = detail::parse_unitary_token(gate_tok, 4, line_no);
      entry.gate = make_custom({read_qubit()}, std::move(m));
    } else {
      fail(ErrorKind::SyntaxError,
           "line " + std::to_string(line_no) + ": unknown gate '" + gate_tok + "'");
    }
    std::string extra;
    require(!(ls >> extra), ErrorKind::SyntaxError,
            "line " + std::to_string(line_no) + ": trailing tokens");
    entries.push_back(std::move(entry));
  }
  require(n_qubits > 0, ErrorKind::SyntaxError, "missing 'qubits:' header");
  require(!entries.empty(), ErrorKind::SyntaxError, "circuit has no gates");

  int max_cycle = 0;
  for (const Line &e : entries) max_cycle = std::max(max_cycle, e.cycle);
  for (const Line &e : entries)
    require(!(e.cycle == max_cycle && e.gate.qubits.size() == 2), ErrorKind::InvariantViolation,
            "two-qubit gate in the final layer (cycle " + std::to_string(max_cycle) + ")");

  Circuit c;
  c.layout = layout;
  c.cycles = max_cycle;
  c.layers.resize(2 * max_cycle + 1);
  for (int cyc = 0; cyc < max_cycle; ++cyc) {
    c.layers[2 * cyc + 1].two_qubit = true;
    c.layers[2 * cyc + 1].pattern = pattern_for_cycle(cyc);
  }
  for (const Line &e : entries) {
    int li = (e.gate.qubits.size() == 1) ? 2 * e.cycle : 2 * e.cycle + 1;
    c.layers[li].gates.push_back(e.gate);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Circuit -> tensor network compilation.
//
// Every qubit wire starts as a rank-1 [1,0] input tensor; each gate adds a
// vertex whose axes are (output edges..., input edges...); measurement either
// leaves the final wire edge open or caps it with a [1,0]/[0,1] projector.
// The value of the network is the amplitude tensor
// <open bits, fixed bits | U | 0...0> indexed by the open qubits.
// Edge ids are renumbered so that open edges come last in ascending qubit
// order; the axes of the feynman/runtime result (ascending edge id) then
// enumerate open qubits in ascending order.
// ---------------------------------------------------------------------------

struct CircuitNetwork {
  TensorNetwork net;
  std::vector<int> open_qubits;            // ascending
  std::map<int, int> open_edge_of_qubit;   // qubit -> open edge id
  std::map<int, int> out_vertex_of_qubit;  // fixed qubit -> projector vertex id
};

inline CircuitNetwork circuit_to_network(const Circuit &c, const std::set<int> &open_qubits,
                                         const std::map<int, int> &fixed_bits) {
  c.validate();
  int n = c.qubit_count();
  for (int q : open_qubits)
    require(q >= 0 && q < n && !fixed_bits.count(q), ErrorKind::QubitCoverage,
            "open qubit " + std::to_string(q) + " is out of range or also fixed");
  for (const auto &[q, b] : fixed_bits) {
    require(q >= 0 && q < n, ErrorKind::QubitCoverage, "fixed qubit out of range");
    require(b == 0 || b == 1, ErrorKind::QubitCoverage, "fixed bits must be 0 or 1");
  }
  require(open_qubits.size() + fixed_bits.size() == std::size_t(n), ErrorKind::QubitCoverage,
          "open and fixed qubits together must cover the circuit");

  TensorNetwork net;
  std::vector<int> wire(n);
  for (int q = 0; q < n; ++q) {
    wire[q] = net.add_edge(2, false);
    net.add_vertex(Tensor({2}, {cx(1, 0), cx(0, 0)}), {wire[q]});
  }
  for (const Layer &layer : c.layers) {
    for (const Gate &g : layer.gates) {
      if (g.qubits.size() == 1) {
        int q = g.qubits[0];
        int out = net.add_edge(2, false);
        net.add_vertex(Tensor({2, 2}, g.matrix), {out, wire[q]});
        wire[q] = out;
      } else {
        int a = g.qubits[0], b = g.qubits[1];
        int oa = net.add_edge(2, false);
        int ob = net.add_edge(2, false);
        // T[o1][o2][i1][i2] = U[o1*2+o2][i1*2+i2]; same memory layout
        net.add_vertex(Tensor({2, 2, 2, 2}, g.matrix), {oa, ob, wire[a], wire[b]});
        wire[a] = oa;
        wire[b] = ob;
      }
    }
  }
  CircuitNetwork out;
  std::map<int, int> remap;  // old edge id -> new edge id
  {
    std::set<int> wire_open;
    for (int q : open_qubits) wire_open.insert(wire[q]);
    int next = 0;
    for (const auto &[eid, e] : net.edges)
      if (!wire_open.count(eid)) remap[eid] = next++;
    for (int q : open_qubits) remap[wire[q]] = next++;  // ascending qubit order
  }
  TensorNetwork renum;
  for (const auto &[eid, e] : net.edges) {
    bool open = false;
    for (int q : open_qubits)
      if (wire[q] == eid) open = true;
    renum.add_edge_with_id(remap.at(eid), e.dim, open);
  }
  for (const auto &[vid, v] : net.vertices) {
    std::vector<int> axes;
    for (int e : v.axes) axes.push_back(remap.at(e));
    renum.add_vertex_with_id(vid, v.tensor, std::move(axes));
  }
  for (const auto &[q, b] : fixed_bits) {
    int vid = renum.add_vertex(
        Tensor({2}, {cx(b == 0 ? 1 : 0, 0), cx(b == 1 ? 1 : 0, 0)}), {remap.at(wire[q])});
    out.out_vertex_of_qubit[q] = vid;
  }
  out.net = std::move(renum);
  out.net.validate();
  out.open_qubits.assign(open_qubits.begin(), open_qubits.end());
  for (int q : open_qubits) out.open_edge_of_qubit[q] = remap.at(wire[q]);
  return out;
}

}  // namespace stemtn

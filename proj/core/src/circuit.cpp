#include "hiersim/circuit.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>

#include "hiersim/errors.hpp"

namespace hiersim {

const char *error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnsupportedGate: return "UnsupportedGate";
    case ErrorKind::QubitOutOfRange: return "QubitOutOfRange";
    case ErrorKind::InvalidSize: return "InvalidSize";
    case ErrorKind::NotAPermutation: return "NotAPermutation";
    case ErrorKind::InfeasibleShape: return "InfeasibleShape";
    case ErrorKind::NoPlanWithinLimit: return "NoPlanWithinLimit";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::Stuck: return "Stuck";
    case ErrorKind::SizeExceeded: return "SizeExceeded";
    case ErrorKind::NoFeasibleSegmentation: return "NoFeasibleSegmentation";
    case ErrorKind::NotInsular: return "NotInsular";
    case ErrorKind::LocalityViolation: return "LocalityViolation";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::PlanViolation: return "PlanViolation";
  }
  return "Error";
}

namespace {

constexpr double kZeroTol = 1e-12;

struct KindInfo {
  GateKind kind;
  const char *name;
  int arity;
  int params;
};

constexpr std::array<KindInfo, 19> kKinds = {{
    {GateKind::H, "h", 1, 0},     {GateKind::X, "x", 1, 0},       {GateKind::Y, "y", 1, 0},
    {GateKind::Z, "z", 1, 0},     {GateKind::S, "s", 1, 0},       {GateKind::Sdg, "sdg", 1, 0},
    {GateKind::T, "t", 1, 0},     {GateKind::Tdg, "tdg", 1, 0},   {GateKind::RX, "rx", 1, 1},
    {GateKind::RY, "ry", 1, 1},   {GateKind::RZ, "rz", 1, 1},     {GateKind::P, "p", 1, 1},
    {GateKind::U3, "u3", 1, 3},   {GateKind::CX, "cx", 2, 0},     {GateKind::CZ, "cz", 2, 0},
    {GateKind::CP, "cp", 2, 1},   {GateKind::CCX, "ccx", 3, 0},   {GateKind::SWAP, "swap", 2, 0},
    {GateKind::CU, "cu", 2, 4},
}};

const KindInfo &info(GateKind kind) { return kKinds[static_cast<size_t>(kind)]; }

Matrix u3_matrix(double theta, double phi, double lambda) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  return Matrix(2, {c, -std::polar(1.0, lambda) * s, std::polar(1.0, phi) * s,
                    std::polar(1.0, phi + lambda) * c});
}

// Controlled version of `u`: `u` acts on the operands after the controls.
Matrix controlled(int num_controls, const Matrix &u) {
  const int ku = std::countr_zero(static_cast<unsigned>(u.dim()));
  const int k = num_controls + ku;
  const int dim = 1 << k;
  const int cmask = (1 << num_controls) - 1;
  Matrix m(dim);
  for (int c = 0; c < dim; ++c) {
    if ((c & cmask) != cmask) {
      m(c, c) = 1.0;
      continue;
    }
    const int tc = c >> num_controls;
    for (int tr = 0; tr < u.dim(); ++tr) m((tr << num_controls) | cmask, c) = u(tr, tc);
  }
  return m;
}

QubitRole role_of_2x2(const Matrix &u) {
  if (std::abs(u(0, 1)) < kZeroTol && std::abs(u(1, 0)) < kZeroTol) return QubitRole::Diagonal;
  if (std::abs(u(0, 0)) < kZeroTol && std::abs(u(1, 1)) < kZeroTol) return QubitRole::AntiDiagonal;
  return QubitRole::General;
}

Matrix apply_flips(const Matrix &u, unsigned flip) {
  if (flip == 0) return u;
  Matrix out(u.dim());
  for (int r = 0; r < u.dim(); ++r)
    for (int c = 0; c < u.dim(); ++c) out(r, c) = u(r ^ flip, c ^ flip);
  return out;
}

Matrix bare_with_flips(const Gate &g) {
  return apply_flips(base_unitary(g.kind, g.params), g.flip_mask);
}

int operand_position(const Gate &g, int q) {
  for (size_t j = 0; j < g.qubits.size(); ++j)
    if (g.qubits[j] == q) return static_cast<int>(j);
  return -1;
}

QubitRole combine(QubitRole acc, QubitRole r) {
  if (acc == QubitRole::General || r == QubitRole::General) return QubitRole::General;
  return acc == r ? QubitRole::Diagonal : QubitRole::AntiDiagonal;
}

Gate strip_attached(const Gate &g) {
  Gate h = g;
  h.attached.clear();
  h.attached_before = 0;
  return h;
}

void flip_qubit(Gate &g, int q) {
  const int pos = operand_position(g, q);
  if (pos >= 0) g.flip_mask ^= 1u << pos;
  for (Gate &a : g.attached)
    if (a.qubits[0] == q) a.flip_mask ^= 1u;
}

}  // namespace

int gate_arity(GateKind kind) { return info(kind).arity; }
int gate_param_count(GateKind kind) { return info(kind).params; }
std::string_view gate_name(GateKind kind) { return info(kind).name; }

std::vector<int> gate_controls(GateKind kind) {
  switch (kind) {
    case GateKind::CX:
    case GateKind::CU: return {0};
    case GateKind::CCX: return {0, 1};
    default: return {};
  }
}

std::optional<GateKind> gate_kind_from_name(std::string_view name) {
  for (const auto &k : kKinds)
    if (name == k.name) return k.kind;
  return std::nullopt;
}

const std::vector<GateKind> &all_gate_kinds() {
  static const std::vector<GateKind> kinds = [] {
    std::vector<GateKind> v;
    for (const auto &k : kKinds) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

QubitMask Gate::qubit_mask() const {
  QubitMask m = 0;
  for (int q : qubits) m |= QubitMask{1} << q;
  return m;
}

Gate make_gate(GateKind kind, std::vector<int> qubits, std::vector<double> params) {
  if (static_cast<int>(qubits.size()) != gate_arity(kind))
    throw Error(ErrorKind::InvalidArgument, std::string("wrong operand count for ") +
                                                std::string(gate_name(kind)));
  if (static_cast<int>(params.size()) != gate_param_count(kind))
    throw Error(ErrorKind::InvalidArgument, std::string("wrong parameter count for ") +
                                                std::string(gate_name(kind)));
  Gate g;
  g.kind = kind;
  g.qubits = std::move(qubits);
  g.params = std::move(params);
  return g;
}

Matrix base_unitary(GateKind kind, const std::vector<double> &p) {
  using std::numbers::pi;
  const double r2 = 1.0 / std::sqrt(2.0);
  const cplx i{0, 1};
  switch (kind) {
    case GateKind::H: return Matrix(2, {r2, r2, r2, -r2});
    case GateKind::X: return Matrix(2, {0, 1, 1, 0});
    case GateKind::Y: return Matrix(2, {0, -i, i, 0});
    case GateKind::Z: return Matrix(2, {1, 0, 0, -1});
    case GateKind::S: return Matrix(2, {1, 0, 0, i});
    case GateKind::Sdg: return Matrix(2, {1, 0, 0, -i});
    case GateKind::T: return Matrix(2, {1, 0, 0, std::polar(1.0, pi / 4)});
    case GateKind::Tdg: return Matrix(2, {1, 0, 0, std::polar(1.0, -pi / 4)});
    case GateKind::RX: {
      const double c = std::cos(p[0] / 2), s = std::sin(p[0] / 2);
      return Matrix(2, {c, -i * s, -i * s, c});
    }
    case GateKind::RY: {
      const double c = std::cos(p[0] / 2), s = std::sin(p[0] / 2);
      return Matrix(2, {c, -s, s, c});
    }
    case GateKind::RZ:
      return Matrix(2, {std::polar(1.0, -p[0] / 2), 0, 0, std::polar(1.0, p[0] / 2)});
    case GateKind::P: return Matrix(2, {1, 0, 0, std::polar(1.0, p[0])});
    case GateKind::U3: return u3_matrix(p[0], p[1], p[2]);
    case GateKind::CX: return controlled(1, base_unitary(GateKind::X, {}));
    case GateKind::CZ: return controlled(1, base_unitary(GateKind::Z, {}));
    case GateKind::CP: return controlled(1, base_unitary(GateKind::P, {p[0]}));
    case GateKind::CCX: return controlled(2, base_unitary(GateKind::X, {}));
    case GateKind::SWAP: return Matrix(4, {1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1});
    case GateKind::CU: {
      Matrix u = u3_matrix(p[0], p[1], p[2]);
      const cplx ph = std::polar(1.0, p[3]);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) u(r, c) *= ph;
      return controlled(1, u);
    }
  }
  return Matrix();
}

Matrix unitary_of(const Gate &gate) {
  Matrix m = bare_with_flips(gate);
  if (gate.attached.empty()) return m;
  const int k = static_cast<int>(gate.qubits.size());
  auto embed = [&](const Gate &a) {
    const int pos = operand_position(gate, a.qubits[0]);
    return expand(bare_with_flips(a), {pos}, k);
  };
  Matrix acc = Matrix::identity(1 << k);
  for (int j = 0; j < gate.attached_before; ++j) acc = embed(gate.attached[j]) * acc;
  acc = m * acc;
  for (size_t j = gate.attached_before; j < gate.attached.size(); ++j)
    acc = embed(gate.attached[j]) * acc;
  return acc;
}

QubitRole operand_role(GateKind kind, const std::vector<double> &params, int pos) {
  switch (kind) {
    case GateKind::H:
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::SWAP: return QubitRole::General;
    case GateKind::X:
    case GateKind::Y: return QubitRole::AntiDiagonal;
    case GateKind::Z:
    case GateKind::S:
    case GateKind::Sdg:
    case GateKind::T:
    case GateKind::Tdg:
    case GateKind::RZ:
    case GateKind::P:
    case GateKind::CZ:
    case GateKind::CP: return QubitRole::Diagonal;
    case GateKind::U3: return role_of_2x2(base_unitary(kind, params));
    case GateKind::CX: return pos == 0 ? QubitRole::Diagonal : QubitRole::General;
    case GateKind::CCX: return pos < 2 ? QubitRole::Diagonal : QubitRole::General;
    case GateKind::CU: {
      if (pos == 0) return QubitRole::Diagonal;
      return role_of_2x2(u3_matrix(params[0], params[1], params[2])) == QubitRole::Diagonal
                 ? QubitRole::Diagonal
                 : QubitRole::General;
    }
  }
  return QubitRole::General;
}

QubitRole qubit_role(const Gate &gate, int q) {
  const int pos = operand_position(gate, q);
  if (pos < 0) return QubitRole::Diagonal;
  QubitRole r = operand_role(gate.kind, gate.params, pos);
  for (const Gate &a : gate.attached)
    if (a.qubits[0] == q) r = combine(r, operand_role(a.kind, a.params, 0));
  return r;
}

std::vector<int> insular_qubits(const Gate &gate) {
  std::vector<int> out;
  for (size_t j = 0; j < gate.qubits.size(); ++j)
    if (qubit_role(gate, gate.qubits[j]) != QubitRole::General) out.push_back(static_cast<int>(j));
  return out;
}

std::vector<int> non_insular_qubits(const Gate &gate) {
  std::vector<int> out;
  for (int q : gate.qubits)
    if (qubit_role(gate, q) == QubitRole::General) out.push_back(q);
  return out;
}

QubitMask non_insular_mask(const Gate &gate) {
  QubitMask m = 0;
  for (int q : non_insular_qubits(gate)) m |= QubitMask{1} << q;
  return m;
}

void validate_gate(const Gate &gate, int num_qubits) {
  if (static_cast<int>(gate.qubits.size()) != gate_arity(gate.kind))
    throw Error(ErrorKind::InvalidArgument, "operand count does not match gate arity");
  QubitMask seen = 0;
  for (int q : gate.qubits) {
    if (q < 0 || q >= num_qubits)
      throw Error(ErrorKind::QubitOutOfRange, "qubit " + std::to_string(q) + " out of range");
    if (seen & (QubitMask{1} << q))
      throw Error(ErrorKind::QubitOutOfRange, "duplicate operand q[" + std::to_string(q) + "]");
    seen |= QubitMask{1} << q;
  }
  for (const Gate &a : gate.attached) {
    validate_gate(a, num_qubits);
    if (!(gate.qubit_mask() & a.qubit_mask()))
      throw Error(ErrorKind::InvalidArgument, "attached gate is not on a host operand");
  }
}

void validate_circuit(const Circuit &circuit) {
  if (circuit.num_qubits < 0 || circuit.num_qubits > kMaxQubits)
    throw Error(ErrorKind::InvalidSize, "qubit count out of supported range");
  for (const Gate &g : circuit.gates) validate_gate(g, circuit.num_qubits);
}

DependencyEdges dependencies_over(const std::vector<QubitMask> &qubits) {
  std::vector<int> last(kMaxQubits, -1);
  std::set<std::pair<int, int>> edges;
  for (int g = 0; g < static_cast<int>(qubits.size()); ++g) {
    for (QubitMask m = qubits[g]; m; m &= m - 1) {
      const int q = std::countr_zero(m);
      if (last[q] >= 0) edges.insert({last[q], g});
      last[q] = g;
    }
  }
  return {edges.begin(), edges.end()};
}

DependencyEdges dependencies(const Circuit &circuit) {
  std::vector<QubitMask> masks;
  masks.reserve(circuit.gates.size());
  for (const Gate &g : circuit.gates) masks.push_back(g.qubit_mask());
  DependencyEdges edges = dependencies_over(masks);
  for (auto &[a, b] : edges) {
    a = circuit.gates[a].id;
    b = circuit.gates[b].id;
  }
  return edges;
}

bool topologically_equivalent(const std::vector<int> &a, const std::vector<int> &b,
                              const DependencyEdges &deps) {
  std::vector<int> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) throw Error(ErrorKind::NotAPermutation, "sequences hold different gate ids");
  if (std::adjacent_find(sa.begin(), sa.end()) != sa.end())
    throw Error(ErrorKind::NotAPermutation, "repeated gate id");
  if (sa.empty()) return true;
  const int hi = sa.back() + 1, lo = sa.front();
  if (lo < 0) throw Error(ErrorKind::NotAPermutation, "negative gate id");
  std::vector<int> pa(hi, -1), pb(hi, -1);
  for (size_t i = 0; i < a.size(); ++i) pa[a[i]] = static_cast<int>(i);
  for (size_t i = 0; i < b.size(); ++i) pb[b[i]] = static_cast<int>(i);
  for (const auto &[u, v] : deps) {
    if (u >= hi || v >= hi || u < 0 || v < 0 || pa[u] < 0 || pa[v] < 0) continue;
    if (pa[u] > pa[v] || pb[u] > pb[v]) return false;
  }
  return true;
}

Circuit flatten(const Circuit &circuit) {
  Circuit out;
  out.num_qubits = circuit.num_qubits;
  auto push = [&](const Gate &g) {
    Gate h = strip_attached(g);
    h.id = static_cast<int>(out.gates.size());
    out.gates.push_back(std::move(h));
  };
  for (const Gate &g : circuit.gates) {
    for (int j = 0; j < g.attached_before; ++j) push(g.attached[j]);
    push(g);
    for (size_t j = g.attached_before; j < g.attached.size(); ++j) push(g.attached[j]);
  }
  return out;
}

AttachResult attach_single_qubit_gates(const Circuit &input) {
  bool nested = false;
  for (const Gate &g : input.gates) nested = nested || !g.attached.empty();
  const Circuit flat = nested ? flatten(input) : input;
  const auto &gates = flat.gates;
  const int m = static_cast<int>(gates.size());

  AttachResult result;
  const bool any_multi = std::any_of(gates.begin(), gates.end(),
                                     [](const Gate &g) { return g.qubits.size() > 1; });
  if (!any_multi) {
    result.circuit = flat;
    result.no_host = true;
    return result;
  }

  // host[i] = index of the multi-qubit gate absorbing single-qubit gate i, or -1.
  std::vector<int> host(m, -1);
  std::vector<int> next_multi(kMaxQubits, -1);
  for (int i = m - 1; i >= 0; --i) {
    const Gate &g = gates[i];
    if (g.qubits.size() == 1) {
      host[i] = next_multi[g.qubits[0]];
    } else {
      for (int q : g.qubits) next_multi[q] = i;
    }
  }
  std::vector<int> prev_multi(kMaxQubits, -1);
  for (int i = 0; i < m; ++i) {
    const Gate &g = gates[i];
    if (g.qubits.size() == 1) {
      if (host[i] < 0) host[i] = prev_multi[g.qubits[0]];
    } else {
      for (int q : g.qubits) prev_multi[q] = i;
    }
  }

  std::vector<Gate> composite(m);
  for (int i = 0; i < m; ++i)
    if (gates[i].qubits.size() > 1) composite[i] = gates[i];
  for (int i = 0; i < m; ++i) {
    if (gates[i].qubits.size() != 1 || host[i] < 0) continue;
    Gate &h = composite[host[i]];
    h.attached.push_back(gates[i]);
    if (i < host[i]) ++h.attached_before;
  }

  result.circuit.num_qubits = flat.num_qubits;
  for (int i = 0; i < m; ++i) {
    const bool single = gates[i].qubits.size() == 1;
    if (single && host[i] >= 0) continue;
    Gate g = single ? gates[i] : composite[i];
    g.id = static_cast<int>(result.circuit.gates.size());
    result.circuit.gates.push_back(std::move(g));
  }
  return result;
}

Circuit reorder_with_flips(const Circuit &circuit, const std::vector<int> &order) {
  const int m = static_cast<int>(circuit.gates.size());
  std::vector<int> index_of_id;
  for (int i = 0; i < m; ++i) {
    const int id = circuit.gates[i].id;
    if (id >= static_cast<int>(index_of_id.size())) index_of_id.resize(id + 1, -1);
    index_of_id[id] = i;
  }
  std::vector<int> ids;
  for (const Gate &g : circuit.gates) ids.push_back(g.id);
  std::vector<int> sorted_order = order;
  std::sort(ids.begin(), ids.end());
  std::sort(sorted_order.begin(), sorted_order.end());
  if (ids != sorted_order) throw Error(ErrorKind::NotAPermutation, "order is not a permutation");

  std::vector<int> new_pos(m);
  for (int p = 0; p < m; ++p) new_pos[index_of_id[order[p]]] = p;
  std::vector<Gate> gates = circuit.gates;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      if (new_pos[i] < new_pos[j]) continue;
      const QubitMask shared = circuit.gates[i].qubit_mask() & circuit.gates[j].qubit_mask();
      for (QubitMask s = shared; s; s &= s - 1) {
        const int q = std::countr_zero(s);
        const QubitRole ri = qubit_role(circuit.gates[i], q);
        const QubitRole rj = qubit_role(circuit.gates[j], q);
        if (ri == QubitRole::Diagonal && rj == QubitRole::Diagonal) continue;
        if (ri == QubitRole::AntiDiagonal && rj == QubitRole::Diagonal) {
          flip_qubit(gates[j], q);
        } else if (ri == QubitRole::Diagonal && rj == QubitRole::AntiDiagonal) {
          flip_qubit(gates[i], q);
        } else {
          throw Error(ErrorKind::InvalidArgument,
                      "gates " + std::to_string(circuit.gates[i].id) + " and " +
                          std::to_string(circuit.gates[j].id) + " do not commute on q[" +
                          std::to_string(q) + "]");
        }
      }
    }
  Circuit out;
  out.num_qubits = circuit.num_qubits;
  for (int p = 0; p < m; ++p) {
    Gate g = gates[index_of_id[order[p]]];
    g.id = p;
    out.gates.push_back(std::move(g));
  }
  return out;
}

}  // namespace hiersim

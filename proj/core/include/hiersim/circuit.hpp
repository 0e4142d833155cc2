#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiersim/matrix.hpp"

namespace hiersim {

using QubitMask = uint64_t;
constexpr int kMaxQubits = 64;

enum class GateKind { H, X, Y, Z, S, Sdg, T, Tdg, RX, RY, RZ, P, U3, CX, CZ, CP, CCX, SWAP, CU };

int gate_arity(GateKind kind);
int gate_param_count(GateKind kind);
// Operand positions acting as controls (CX: {0}, CCX: {0,1}, CU: {0}).
std::vector<int> gate_controls(GateKind kind);
std::string_view gate_name(GateKind kind);
std::optional<GateKind> gate_kind_from_name(std::string_view name);
const std::vector<GateKind> &all_gate_kinds();

// How a gate acts on one operand: block-diagonal, block-anti-diagonal, or neither.
enum class QubitRole { Diagonal, AntiDiagonal, General };

struct Gate {
  int id = 0;
  GateKind kind = GateKind::H;
  std::vector<double> params;
  std::vector<int> qubits;
  // Bit j set: operand j is conjugated by X (control fires on |0>).
  unsigned flip_mask = 0;
  // Single-qubit gates folded into this one, in original order; the first
  // `attached_before` run before the host, the rest after it.
  std::vector<Gate> attached;
  int attached_before = 0;

  QubitMask qubit_mask() const;
};

struct Circuit {
  int num_qubits = 0;
  std::vector<Gate> gates;
};

using DependencyEdges = std::vector<std::pair<int, int>>;

Gate make_gate(GateKind kind, std::vector<int> qubits, std::vector<double> params = {});

// Matrix of the bare kind; operand 0 is the least-significant axis.
Matrix base_unitary(GateKind kind, const std::vector<double> &params);

// Full matrix of a gate on its operands, including flips and attached gates.
Matrix unitary_of(const Gate &gate);

// Role of operand `pos` for the bare kind (static table, numeric check for U3/CU).
QubitRole operand_role(GateKind kind, const std::vector<double> &params, int pos);

// Role of logical qubit q for the composite gate (host plus attached gates).
QubitRole qubit_role(const Gate &gate, int q);

// Operand positions whose composite role is Diagonal or AntiDiagonal.
std::vector<int> insular_qubits(const Gate &gate);

// Logical qubits whose composite role is General.
std::vector<int> non_insular_qubits(const Gate &gate);
QubitMask non_insular_mask(const Gate &gate);

// Throws QubitOutOfRange for out-of-range or repeated operands.
void validate_gate(const Gate &gate, int num_qubits);
void validate_circuit(const Circuit &circuit);

DependencyEdges dependencies(const Circuit &circuit);
// Same scan over arbitrary per-gate qubit masks (indexed by position).
DependencyEdges dependencies_over(const std::vector<QubitMask> &qubits);

// Both sequences are permutations of the same ids and respect every edge of
// `deps` whose endpoints occur in them. Throws NotAPermutation.
bool topologically_equivalent(const std::vector<int> &a, const std::vector<int> &b,
                              const DependencyEdges &deps);

struct AttachResult {
  Circuit circuit;
  bool no_host = false;
};

// Folds every single-qubit gate into the nearest multi-qubit gate on its qubit
// (successor first, then predecessor). Top-level gates are renumbered densely.
AttachResult attach_single_qubit_gates(const Circuit &circuit);

// Expands attached gates back into a flat gate list (ids renumbered).
Circuit flatten(const Circuit &circuit);

// Returns the circuit reordered to `order` (gate ids), flipping operands of
// diagonal-role gates that move across an anti-diagonal gate on a shared qubit.
// Throws InvalidArgument when a swapped pair does not commute this way.
Circuit reorder_with_flips(const Circuit &circuit, const std::vector<int> &order);

}  // namespace hiersim

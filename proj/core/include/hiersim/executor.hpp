#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "hiersim/circuit.hpp"
#include "hiersim/kernelizer.hpp"
#include "hiersim/reference.hpp"
#include "hiersim/staging.hpp"

namespace hiersim {

struct ShardLayout {
  int L = 0, R = 0, G = 0;

  static ShardLayout from(const MachineShape &shape) { return {shape.L, shape.R, shape.G}; }
  int n() const { return L + R + G; }
  uint64_t shard_size() const { return uint64_t{1} << L; }
  uint64_t node_size() const { return uint64_t{1} << (L + R); }
  uint64_t node_count() const { return uint64_t{1} << G; }
  uint64_t shard_count() const { return uint64_t{1} << (R + G); }
  QubitMask local_bits() const { return (QubitMask{1} << L) - 1; }
};

// Logical qubit l lives at physical bit phys_of_logical[l].
struct QubitMapping {
  std::vector<int> phys_of_logical;

  int n() const { return static_cast<int>(phys_of_logical.size()); }
  std::vector<int> logical_of_physical() const;
  // Physical index of a logical basis index.
  uint64_t to_physical(uint64_t logical_index) const;
  // Physical mask of a logical qubit mask.
  QubitMask physical_mask(QubitMask logical) const;
  // Logical qubits whose physical position is local.
  QubitMask local_logical(const ShardLayout &layout) const;
};

// Throws InvalidArgument unless the mapping is a permutation of [0, n).
void validate_mapping(const QubitMapping &mapping, const ShardLayout &layout);

// Stage 0: each class in ascending logical order. Later stages: qubits that
// stay in their class keep their position, newcomers take the free positions
// of the class in ascending order.
std::vector<QubitMapping> stage_mappings(const StagingPlan &plan);

// Movement of one remap.
struct CommDelta {
  uint64_t intra_node_amplitudes_moved = 0;
  uint64_t inter_node_amplitudes_moved = 0;
  int local_swaps = 0;
  int global_swaps = 0;
};

struct CommStats {
  uint64_t intra_node_amplitudes_moved = 0;
  uint64_t inter_node_amplitudes_moved = 0;
  long long local_swaps = 0;
  long long global_swaps = 0;
  std::vector<CommDelta> per_stage;  // entry k: remap into stage k (entry 0 is empty)

  void add(const CommDelta &d);
};

// Permutes a physically ordered state from one mapping to another. When
// `pending_flips` is given, it is carried along (relabeled to the new
// positions) instead of being folded into the data.
CommDelta remap(StateVector &physical, const QubitMapping &from, const QubitMapping &to,
                const ShardLayout &layout, QubitMask *pending_flips = nullptr);

// Movement counts without touching a state.
CommDelta remap_counts(const QubitMapping &from, const QubitMapping &to, const ShardLayout &layout);

struct SpecializedGate {
  enum Kind { SmallerGate, Identity, PhaseFactor } kind = Identity;
  Matrix u;                // on `qubits` (SmallerGate)
  std::vector<int> qubits; // remaining logical operands
  cplx phase{1.0, 0.0};    // PhaseFactor
  QubitMask flipped = 0;   // physical bits whose value the gate inverts
};

// Fixes the operands whose physical bit appears in `known_bits` (physical
// qubit -> 0/1). Throws NotInsular when a fixed operand is non-insular.
SpecializedGate specialize_gate(const Gate &gate, const std::map<int, int> &known_bits,
                                const QubitMapping &mapping);

// Logical qubits touched by a kernel, ascending.
std::vector<int> kernel_operand_qubits(const Kernel &kernel, const Circuit &seq);

// Product of the member unitaries (emission order) on kernel_operand_qubits.
// Throws SizeExceeded above max_qubits.
Matrix fuse_kernel_unitary(const Kernel &kernel, const Circuit &seq, int max_qubits = 7);

struct ExecuteContext {
  const Circuit *seq = nullptr;  // gates referenced by the kernel ids
  QubitMapping mapping;
  ShardLayout layout;
  int q_max_shared = 10;
  int ls_qubits = 3;
};

// Runs one kernel on one shard (2^L amplitudes). `shard_bits` holds the true
// values of physical bits >= L. Returns the non-local physical bits flipped by
// anti-diagonal insular operands. Throws LocalityViolation.
QubitMask execute_kernel(std::vector<cplx> &shard, const Kernel &kernel, const ExecuteContext &ctx,
                         uint64_t shard_bits);

struct SimulateOptions {
  bool reverse_shards = false;
  bool check_plans = true;
};

struct SimulationResult {
  StateVector state;  // logical order
  CommStats comm;
};

// `circuit` is the attached circuit the plans were built from. Throws
// PlanViolation before touching the state when a plan is inconsistent.
SimulationResult simulate(const Circuit &circuit, const StagingPlan &staging,
                          const std::vector<KernelPlan> &kernels, const CostModel &model,
                          const StateVector &input, const SimulateOptions &options = {});

// Gates of one stage in stage order, ids kept.
Circuit stage_circuit(const Circuit &circuit, const Stage &stage);

// Local mask and least-significant logical qubits for kernelizing one stage.
KernelizeOptions stage_kernelize_options(const QubitMapping &mapping, const ShardLayout &layout,
                                         const CostModel &model, KernelizeOptions base = {});

}  // namespace hiersim

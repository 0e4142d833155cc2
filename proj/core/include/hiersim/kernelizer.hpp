#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "hiersim/circuit.hpp"

namespace hiersim {

enum class KernelKind { Fusion, SharedMemory };

std::string_view kernel_kind_name(KernelKind kind);  // "fusion" | "shm"

struct CostModel {
  std::vector<double> fusion_cost;  // fusion_cost[q-1] for q = 1..q_max_fusion
  double alpha = 0.8;
  std::array<double, 19> gate_cost{};  // indexed by GateKind
  int q_max_fusion = 7;
  int q_max_shared = 10;
  int ls_qubits = 3;

  // fusion_cost[q] = 2^max(0, q-5); gate cost 0.05 / 0.08 / 0.12 by arity.
  static CostModel defaults();

  double fusion(int q) const { return fusion_cost.at(std::max(q, 1) - 1); }
  double gate(GateKind kind) const { return gate_cost[static_cast<size_t>(kind)]; }
  // Host plus attached gates.
  double gate(const Gate &g) const;
  // Throws InvalidArgument on negative costs, decreasing fusion costs or bad limits.
  void validate() const;
};

// argmin over q of fusion_cost[q] / q (larger q on ties).
int most_efficient_fusion_size(const CostModel &model);

// Where a stage sits on the machine. Fusion kernels are sized by their local
// qubits; shared-memory kernels by active (non-insular local) qubits plus the
// qubits pinned to the least-significant physical positions. Without an
// explicit `ls_logical`, ls_qubits placeholder qubits are counted instead.
struct KernelizeOptions {
  QubitMask local_mask = ~QubitMask{0};
  std::optional<std::vector<int>> ls_logical;
  // Ignore qubits on which every gate of the sequence is diagonal when
  // ordering kernels (gates commute there).
  bool relax_commuting = true;
  // Force a gate into an open fusion kernel that already covers it.
  bool subsumption = true;
  // When set, DP states are checked for the disjointness invariant.
  bool check_invariants = false;
};

struct Kernel {
  std::vector<int> gate_ids;  // emission order
  KernelKind kind = KernelKind::Fusion;
  std::vector<int> qubits;    // qubits counted for the size limit
  double cost = 0;
};

struct KernelPlan {
  std::vector<Kernel> kernels;
  double total_cost = 0;
  std::vector<int> realized_order;
};

struct KernelDescriptor {
  KernelKind kind = KernelKind::Fusion;
  QubitMask qubits = 0;        // union of member gate qubits
  bool ext_all = true;         // extensible on every qubit
  QubitMask ext = 0;           // extensible qubits when !ext_all
  QubitMask ext_insular = 0;   // extensible insular qubits when !ext_all
  QubitMask active = 0;        // non-insular union
  QubitMask size_mask = 0;     // qubits counted for the size limit
  int extra_size = 0;          // placeholder least-significant qubits
  int exclusive_size = 0;      // counted qubits held by no other kernel (added on merge)
  double gate_cost = 0;        // accumulated member gate cost

  int size() const;
};

// Fusion: fusion_cost[size]; shared memory: alpha + accumulated gate cost.
// Throws SizeExceeded.
double kernel_cost(const KernelDescriptor &kernel, const CostModel &model);

// Per-gate facts derived from a sequence, shared by every kernelizer routine.
struct SequenceInfo {
  int num_qubits = 0;
  std::vector<int> ids;
  std::vector<QubitMask> qubits;   // all operands
  std::vector<QubitMask> order;    // operands that constrain ordering
  std::vector<QubitMask> local;    // fusion size contribution
  std::vector<QubitMask> active;   // shared-memory size contribution
  std::vector<double> shm_cost;
  QubitMask ls_mask = 0;
  int ls_extra = 0;
};

SequenceInfo analyze_sequence(const Circuit &seq, const CostModel &model,
                              const KernelizeOptions &options = {});

// Constraint check for the gates at `positions` of a sequence of qubit masks.
bool satisfies_kernel_constraint_masks(const std::vector<int> &positions,
                                       const std::vector<QubitMask> &qubits);
// Same for gate ids of `seq`, using full operand sets.
bool satisfies_kernel_constraint(const std::vector<int> &kernel_ids, const Circuit &seq);

// Maintains extensible sets after placing a gate on `gate_qubits` into
// kernels[host] (host < 0: new singleton appended with the given kind).
void update_extensible(std::vector<KernelDescriptor> &kernels, QubitMask gate_qubits, int host,
                       KernelKind new_kind = KernelKind::Fusion);

// Qubits q < n such that adding a gate on q right before position i keeps the
// kernel valid, by direct evaluation of the constraint.
QubitMask extensible_oracle(const std::vector<int> &kernel_positions, int i,
                            const std::vector<QubitMask> &qubits, int n);

struct PackResult {
  std::vector<std::vector<int>> groups;  // indices into the input
  std::vector<KernelDescriptor> kernels;
  double total_cost = 0;
};

// Greedy packing: fusion kernels toward the most cost-efficient size, largest
// first; shared-memory kernels up to q_max_shared.
PackResult greedy_pack(const std::vector<KernelDescriptor> &kernels, const CostModel &model);

// Optimal over contiguous segmentations. Throws NoFeasibleSegmentation.
KernelPlan ordered_kernelize(const Circuit &seq, const CostModel &model,
                             const KernelizeOptions &options = {});

constexpr int kNoPruning = 0;

// Extensible-set DP; prune_T = kNoPruning disables pruning.
KernelPlan kernelize(const Circuit &seq, const CostModel &model, int prune_T = 500,
                     const KernelizeOptions &options = {});

// Left-to-right packing into fusion kernels of at most `max_qubits` qubits.
KernelPlan greedy_fusion_kernelize(const Circuit &seq, const CostModel &model, int max_qubits = 5,
                                   const KernelizeOptions &options = {});

enum class ViolationKind {
  UnknownGate,
  DuplicateGate,
  MissingGate,
  KernelConstraint,
  SizeLimit,
  CostMismatch,
  OrderMismatch,
  NotTopological,
};

struct Violation {
  ViolationKind kind;
  int kernel = -1;
  std::string message;
};

std::vector<Violation> verify_plan(const KernelPlan &plan, const Circuit &seq,
                                   const CostModel &model, const KernelizeOptions &options = {});

// Dependency edges (gate ids) used for ordering kernels of `seq`.
DependencyEdges ordering_dependencies(const Circuit &seq, const KernelizeOptions &options = {});

}  // namespace hiersim

#pragma once

// Brute-force reference implementations used only by tests. None of these
// call the routine they are compared against.

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "hiersim/circuit.hpp"
#include "hiersim/executor.hpp"
#include "hiersim/kernelizer.hpp"
#include "hiersim/reference.hpp"
#include "hiersim/staging.hpp"

namespace hiersim::oracle {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RandomCircuitOptions {
  bool single_qubit = true;
  bool two_qubit = true;
  bool three_qubit = true;
};

Gate random_gate(int n, std::mt19937_64 &rng, const RandomCircuitOptions &opts = {});
Circuit random_circuit(int n, int m, std::mt19937_64 &rng, const RandomCircuitOptions &opts = {});
StateVector random_state(int n, std::mt19937_64 &rng);

// Applies the gate's matrix column by column: for every basis index, scatter
// its amplitude over the 2^k indices that differ only on the gate operands.
StateVector apply_embedded(const StateVector &state, const Gate &gate);
StateVector simulate_embedded(const Circuit &circuit, const StateVector &input);

// Pairs (a, b), a < b, that share a qubit with no gate in between touching it.
DependencyEdges pairwise_dependencies(const Circuit &circuit);

struct StagingAnswer {
  bool feasible = false;
  int stages = 0;
  double cost = kInf;
};
// Smallest s <= s_max for which some sequence of local sets admits a
// dependency-respecting gate assignment, and the cheapest such sequence with
// an optimal choice of global sets. Input must have single-qubit gates attached.
StagingAnswer exhaustive_staging(const Circuit &attached, const MachineShape &shape, int s_max);
// Qubit partitions needed per stage by the search above.
long long staging_search_size(int n, const MachineShape &shape);

// Cost of gates [begin, end) as one kernel: cheaper of the two kinds, or kInf.
double segment_cost(const Circuit &seq, int begin, int end, const CostModel &model,
                    const KernelizeOptions &options = {});
// Minimum over all 2^(m-1) contiguous segmentations.
double best_contiguous(const Circuit &seq, const CostModel &model,
                       const KernelizeOptions &options = {});

// Direct quantifier evaluation of the kernel constraint on full operand sets.
bool kernel_constraint(const std::vector<int> &positions, const Circuit &seq);
// Minimum over every set partition of the gates into blocks that satisfy the
// constraint and can be ordered without breaking a dependency. m <= 11.
double best_partition(const Circuit &seq, const CostModel &model,
                      std::vector<std::vector<int>> *blocks = nullptr);

struct MoveCount {
  uint64_t intra = 0;
  uint64_t inter = 0;
};
// Walks every logical index and compares its old and new physical positions.
MoveCount enumerate_moves(const QubitMapping &from, const QubitMapping &to, const ShardLayout &layout);

double max_abs_diff(const std::vector<cplx> &a, const std::vector<cplx> &b);

}  // namespace hiersim::oracle

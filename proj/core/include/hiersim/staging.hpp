#pragma once

#include <string>
#include <vector>

#include "hiersim/circuit.hpp"
#include "hiersim/ilp.hpp"

namespace hiersim {

struct QubitPartition {
  std::vector<int> local, regional, global;  // sorted logical qubits
};

struct Stage {
  std::vector<int> gate_ids;  // ascending circuit order
  QubitPartition partition;
};

struct StagingStats {
  long long nodes = 0;
  double seconds = 0;
  int models_solved = 0;
};

struct StagingPlan {
  std::vector<Stage> stages;
  double total_cost = 0;
  MachineShape shape;
  StagingStats stats;
};

struct StageOptions {
  int s_max = 16;
  SolveBudget budget;
};

// Smallest stage count whose model is feasible, with its optimal partitions.
// Input must already have single-qubit gates attached. Throws
// NoPlanWithinLimit, BudgetExceeded, InfeasibleShape.
StagingPlan stage(const Circuit &circuit, const MachineShape &shape,
                  const StageOptions &options = {});

// Plan extracted from a solved model: gate stage = first k with F[g,k] = 1.
StagingPlan plan_from_assignment(const IlpModel &model, const std::vector<uint8_t> &x);

// Sum over consecutive stages of new-local count + c * new-global count.
double staging_cost(const StagingPlan &plan, const MachineShape &shape);

// Greedy baseline: pick the L qubits most needed by ready gates, run the
// maximal dependency-closed set of runnable gates, repeat. Throws Stuck.
StagingPlan greedy_stage(const Circuit &circuit, const MachineShape &shape);

// Empty string when the plan is consistent with the circuit and shape;
// otherwise a description of the first problem found.
std::string check_staging_plan(const StagingPlan &plan, const Circuit &circuit,
                               const MachineShape &shape);

}  // namespace hiersim

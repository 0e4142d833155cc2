#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hiersim/circuit.hpp"

namespace hiersim {

struct MachineShape {
  int L = 1;  // local qubits
  int R = 0;  // regional qubits
  int G = 0;  // global qubits
  double c = 3.0;  // cost of a new global qubit relative to a new local one

  int n() const { return L + R + G; }
};

// Throws InvalidArgument unless L >= 1, R, G >= 0, c >= 1 and L + R + G == n.
void validate_shape(const MachineShape &shape, int n);

enum class VarFamily { A, B, F, S, T };
enum class Sense { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  std::string name;
  std::vector<std::pair<int, int>> terms;  // (variable, coefficient)
  Sense sense = Sense::LessEqual;
  int rhs = 0;
};

// Binary program for a fixed stage count s. Variables are laid out family by
// family: A[q,k], B[q,k], F[g,k] (k < s), then S[q,k], T[q,k] (k < s-1).
struct IlpModel {
  int n = 0, m = 0, s = 0;
  MachineShape shape;
  std::vector<double> objective;
  std::vector<LinearConstraint> constraints;

  int num_vars() const { return 2 * n * s + m * s + 2 * n * (s - 1); }
  int a(int q, int k) const { return q * s + k; }
  int b(int q, int k) const { return n * s + q * s + k; }
  int f(int g, int k) const { return 2 * n * s + g * s + k; }
  int s_var(int q, int k) const { return 2 * n * s + m * s + q * (s - 1) + k; }
  int t(int q, int k) const { return 2 * n * s + m * s + n * (s - 1) + q * (s - 1) + k; }

  VarFamily family(int v) const;
  // (row index, stage) of variable v within its family.
  std::pair<int, int> coordinates(int v) const;
  std::string var_name(int v) const;
  int count(VarFamily fam) const;
};

// Throws InfeasibleShape if a gate has more non-insular qubits than L.
IlpModel build_ilp(const Circuit &circuit, const MachineShape &shape, int s);

// CPLEX LP text with variables named A_q_k, B_q_k, F_g_k, S_q_k, T_q_k.
std::string to_lp_format(const IlpModel &model);

enum class BranchOrder {
  LocalsFirst,      // A by stage, F by stage, B by stage, then S and T
  GateStagesFirst,  // F by stage, A, B, then S and T
};

struct SolveBudget {
  long long max_nodes = 10'000'000;
  double max_seconds = 0;  // 0: no time limit
  BranchOrder order = BranchOrder::LocalsFirst;
};

enum class SolveStatus { Feasible, Infeasible, BudgetExceeded };

struct SolveStats {
  long long nodes = 0;
  double seconds = 0;
};

struct IlpResult {
  SolveStatus status = SolveStatus::Infeasible;
  bool has_incumbent = false;
  std::vector<uint8_t> assignment;
  double objective = 0;
  SolveStats stats;
};

// Exact depth-first branch and bound with bound propagation on every row and an
// objective cutoff. Feasible results are proven optimal.
IlpResult solve_ilp(const IlpModel &model, const SolveBudget &budget = {});

// Checks every constraint of the model against a full assignment.
bool satisfies_model(const IlpModel &model, const std::vector<uint8_t> &assignment);
double objective_value(const IlpModel &model, const std::vector<uint8_t> &assignment);

}  // namespace hiersim

#pragma once

#include <cstdint>
#include <vector>

#include "hiersim/circuit.hpp"

namespace hiersim {

struct StateVector {
  int n = 0;
  std::vector<cplx> amplitudes;

  static StateVector zero(int n);
  static StateVector basis(int n, uint64_t index);
  double norm() const;
};

// Lower index of the i-th amplitude pair touched by a single-qubit gate on q.
inline uint64_t pair_index(int q, uint64_t i) {
  return ((i >> q) << (q + 1)) + (i & ((uint64_t{1} << q) - 1));
}

// Applies the gate (attached gates included) to every index group in place.
void apply_gate_dense(StateVector &state, const Gate &gate);
StateVector apply_gate_dense(const StateVector &state, const Gate &gate);

constexpr int kReferenceMaxQubits = 26;

// Gate-by-gate dense simulation; throws TooLarge above 26 qubits.
StateVector simulate_reference(const Circuit &circuit, const StateVector &input);

struct ComparisonReport {
  double max_abs_diff = 0;
  bool global_phase_aligned = false;
  double norm_a = 0, norm_b = 0;
};

// Throws DimensionMismatch when the qubit counts differ.
ComparisonReport compare(const StateVector &a, const StateVector &b, bool align_phase = false);

}  // namespace hiersim

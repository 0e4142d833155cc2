#include "hiersim/reference.hpp"

#include <algorithm>
#include <cmath>

#include "hiersim/errors.hpp"

namespace hiersim {

StateVector StateVector::zero(int n) { return basis(n, 0); }

StateVector StateVector::basis(int n, uint64_t index) {
  StateVector s;
  s.n = n;
  s.amplitudes.assign(uint64_t{1} << n, cplx{});
  s.amplitudes.at(index) = 1.0;
  return s;
}

double StateVector::norm() const {
  double acc = 0;
  for (const cplx &a : amplitudes) acc += std::norm(a);
  return std::sqrt(acc);
}

namespace {

void apply_bare(StateVector &state, const Gate &g) {
  const Matrix u = unitary_of(g);
  if (g.qubits.size() == 1) {
    const int q = g.qubits[0];
    const uint64_t stride = uint64_t{1} << q;
    const uint64_t half = uint64_t{1} << (state.n - 1);
    cplx *a = state.amplitudes.data();
    for (uint64_t i = 0; i < half; ++i) {
      const uint64_t lo = pair_index(q, i);
      const cplx x = a[lo], y = a[lo + stride];
      a[lo] = u(0, 0) * x + u(0, 1) * y;
      a[lo + stride] = u(1, 0) * x + u(1, 1) * y;
    }
    return;
  }
  apply_matrix(state.amplitudes.data(), state.n, u, g.qubits);
}

}  // namespace

void apply_gate_dense(StateVector &state, const Gate &gate) {
  for (int q : gate.qubits)
    if (q < 0 || q >= state.n) throw Error(ErrorKind::QubitOutOfRange, "gate qubit outside state");
  if (gate.attached.empty()) {
    apply_bare(state, gate);
    return;
  }
  Gate host = gate;
  host.attached.clear();
  host.attached_before = 0;
  for (int j = 0; j < gate.attached_before; ++j) apply_bare(state, gate.attached[j]);
  apply_bare(state, host);
  for (size_t j = gate.attached_before; j < gate.attached.size(); ++j)
    apply_bare(state, gate.attached[j]);
}

StateVector apply_gate_dense(const StateVector &state, const Gate &gate) {
  StateVector out = state;
  apply_gate_dense(out, gate);
  return out;
}

StateVector simulate_reference(const Circuit &circuit, const StateVector &input) {
  if (circuit.num_qubits > kReferenceMaxQubits)
    throw Error(ErrorKind::TooLarge, "reference simulator is limited to 26 qubits");
  if (input.n != circuit.num_qubits)
    throw Error(ErrorKind::DimensionMismatch, "input state size does not match circuit");
  StateVector s = input;
  for (const Gate &g : circuit.gates) apply_gate_dense(s, g);
  return s;
}

ComparisonReport compare(const StateVector &a, const StateVector &b, bool align_phase) {
  if (a.n != b.n || a.amplitudes.size() != b.amplitudes.size())
    throw Error(ErrorKind::DimensionMismatch, "states have different qubit counts");
  ComparisonReport r;
  r.norm_a = a.norm();
  r.norm_b = b.norm();
  cplx phase = 1.0;
  if (align_phase) {
    cplx inner = 0;
    for (size_t i = 0; i < a.amplitudes.size(); ++i) inner += std::conj(b.amplitudes[i]) * a.amplitudes[i];
    if (std::abs(inner) > 0) phase = inner / std::abs(inner);
    r.global_phase_aligned = true;
  }
  for (size_t i = 0; i < a.amplitudes.size(); ++i)
    r.max_abs_diff = std::max(r.max_abs_diff, std::abs(a.amplitudes[i] - phase * b.amplitudes[i]));
  return r;
}

}  // namespace hiersim

#pragma once

#include <string>
#include <string_view>

#include "hiersim/circuit.hpp"

namespace hiersim {

// Reads the OpenQASM 2.0 subset: one qreg, the built-in gate kinds plus the
// aliases u1 -> p, cu1 -> cp, u/u3, cu3 -> cu (zero global phase). Barriers are
// skipped; classical registers, measurement and control flow are rejected.
Circuit parse_qasm(std::string_view text);

// Debug serializer emitting the same subset. Attached gates are expanded in
// replay order; flipped operands are written as x conjugations.
std::string render_qasm(const Circuit &circuit);

}  // namespace hiersim

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hiersim/circuit.hpp"

namespace hiersim {

enum class Family { Ghz, Qft, GraphStateRing };

std::string_view family_name(Family family);
// Accepts "ghz", "qft", "graphstate_ring" (also "graphstate").
Family family_from_name(std::string_view name);
const std::vector<Family> &all_families();

// ghz: H then a CX chain (n gates). qft: H on each target followed by
// controlled phases from every later qubit, no final swaps (n + n(n-1)/2).
// graphstate_ring: H on every qubit then a ring of CZ (2n). Throws InvalidSize
// for n < 2.
Circuit generate(Family family, int n);

}  // namespace hiersim

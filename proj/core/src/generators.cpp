#include "hiersim/generators.hpp"

#include <cmath>
#include <numbers>

#include "hiersim/errors.hpp"

namespace hiersim {

std::string_view family_name(Family family) {
  switch (family) {
    case Family::Ghz: return "ghz";
    case Family::Qft: return "qft";
    case Family::GraphStateRing: return "graphstate_ring";
  }
  return "";
}

Family family_from_name(std::string_view name) {
  if (name == "ghz") return Family::Ghz;
  if (name == "qft") return Family::Qft;
  if (name == "graphstate_ring" || name == "graphstate") return Family::GraphStateRing;
  throw Error(ErrorKind::InvalidArgument, "unknown circuit family '" + std::string(name) + "'");
}

const std::vector<Family> &all_families() {
  static const std::vector<Family> v = {Family::Ghz, Family::Qft, Family::GraphStateRing};
  return v;
}

Circuit generate(Family family, int n) {
  if (n < 2) throw Error(ErrorKind::InvalidSize, "generators need at least 2 qubits");
  if (n > kMaxQubits) throw Error(ErrorKind::InvalidSize, "too many qubits");
  Circuit c;
  c.num_qubits = n;
  auto push = [&](GateKind k, std::vector<int> qs, std::vector<double> ps = {}) {
    Gate g = make_gate(k, std::move(qs), std::move(ps));
    g.id = static_cast<int>(c.gates.size());
    c.gates.push_back(std::move(g));
  };
  switch (family) {
    case Family::Ghz:
      push(GateKind::H, {0});
      for (int i = 0; i + 1 < n; ++i) push(GateKind::CX, {i, i + 1});
      break;
    case Family::Qft:
      for (int i = 0; i < n; ++i) {
        push(GateKind::H, {i});
        for (int j = i + 1; j < n; ++j)
          push(GateKind::CP, {j, i}, {std::numbers::pi / std::ldexp(1.0, j - i)});
      }
      break;
    case Family::GraphStateRing:
      for (int i = 0; i < n; ++i) push(GateKind::H, {i});
      for (int i = 0; i < n; ++i) push(GateKind::CZ, {i, (i + 1) % n});
      break;
  }
  return c;
}

}  // namespace hiersim

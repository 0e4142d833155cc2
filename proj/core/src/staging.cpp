#include "hiersim/staging.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "hiersim/errors.hpp"

namespace hiersim {

namespace {

std::vector<int> mask_to_list(QubitMask m) {
  std::vector<int> out;
  for (; m; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

QubitMask list_to_mask(const std::vector<int> &v) {
  QubitMask m = 0;
  for (int q : v) m |= QubitMask{1} << q;
  return m;
}

}  // namespace

StagingPlan plan_from_assignment(const IlpModel &M, const std::vector<uint8_t> &x) {
  StagingPlan plan;
  plan.shape = M.shape;
  plan.stages.resize(M.s);
  for (int k = 0; k < M.s; ++k) {
    QubitPartition &p = plan.stages[k].partition;
    for (int q = 0; q < M.n; ++q) {
      if (x[M.a(q, k)]) p.local.push_back(q);
      else if (x[M.b(q, k)]) p.global.push_back(q);
      else p.regional.push_back(q);
    }
  }
  for (int g = 0; g < M.m; ++g) {
    int k = 0;
    while (k < M.s && !x[M.f(g, k)]) ++k;
    plan.stages[std::min(k, M.s - 1)].gate_ids.push_back(g);
  }
  plan.total_cost = objective_value(M, x);
  return plan;
}

StagingPlan stage(const Circuit &circuit, const MachineShape &shape, const StageOptions &options) {
  if (options.s_max < 1) throw Error(ErrorKind::InvalidArgument, "s_max must be >= 1");
  StagingStats stats;
  for (int s = 1; s <= options.s_max; ++s) {
    const IlpModel model = build_ilp(circuit, shape, s);
    const IlpResult res = solve_ilp(model, options.budget);
    stats.nodes += res.stats.nodes;
    stats.seconds += res.stats.seconds;
    ++stats.models_solved;
    if (res.status == SolveStatus::BudgetExceeded)
      throw Error(ErrorKind::BudgetExceeded,
                  "solver budget exhausted at " + std::to_string(s) + " stage(s)" +
                      (res.has_incumbent ? " with an unproven incumbent" : ""));
    if (res.status == SolveStatus::Feasible) {
      StagingPlan plan = plan_from_assignment(model, res.assignment);
      plan.stats = stats;
      return plan;
    }
  }
  throw Error(ErrorKind::NoPlanWithinLimit,
              "no feasible plan with at most " + std::to_string(options.s_max) + " stages");
}

double staging_cost(const StagingPlan &plan, const MachineShape &shape) {
  double cost = 0;
  for (size_t k = 1; k < plan.stages.size(); ++k) {
    const auto &prev = plan.stages[k - 1].partition;
    const auto &cur = plan.stages[k].partition;
    const QubitMask new_local = list_to_mask(cur.local) & ~list_to_mask(prev.local);
    const QubitMask new_global = list_to_mask(cur.global) & ~list_to_mask(prev.global);
    cost += std::popcount(new_local) + shape.c * std::popcount(new_global);
  }
  return cost;
}

StagingPlan greedy_stage(const Circuit &circuit, const MachineShape &shape) {
  validate_circuit(circuit);
  validate_shape(shape, circuit.num_qubits);
  const int n = circuit.num_qubits;
  const int m = static_cast<int>(circuit.gates.size());
  std::vector<QubitMask> ni(m), all(m);
  for (int g = 0; g < m; ++g) {
    ni[g] = non_insular_mask(circuit.gates[g]);
    all[g] = circuit.gates[g].qubit_mask();
    if (std::popcount(ni[g]) > shape.L)
      throw Error(ErrorKind::Stuck, "gate " + std::to_string(g) + " cannot fit in L local qubits");
  }
  std::vector<std::vector<int>> preds(m);
  for (const auto &[a, b] : dependencies_over(all)) preds[b].push_back(a);

  std::vector<char> done(m, 0);
  int remaining = m;
  StagingPlan plan;
  plan.shape = shape;
  QubitMask prev_global = 0;
  bool first = true;

  while (remaining > 0 || first) {
    std::vector<int> ready_score(n, 0), total(n, 0);
    int earliest_ready = -1;
    for (int g = 0; g < m; ++g) {
      if (done[g]) continue;
      for (QubitMask a = all[g]; a; a &= a - 1) ++total[std::countr_zero(a)];
      const bool ready = std::all_of(preds[g].begin(), preds[g].end(),
                                     [&](int p) { return done[p] != 0; });
      if (!ready) continue;
      if (earliest_ready < 0) earliest_ready = g;
      for (QubitMask a = ni[g]; a; a &= a - 1) ++ready_score[std::countr_zero(a)];
    }
    std::vector<int> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) {
      if (ready_score[a] != ready_score[b]) return ready_score[a] > ready_score[b];
      if (total[a] != total[b]) return total[a] > total[b];
      return a < b;
    });
    QubitMask local = 0;
    if (earliest_ready >= 0) local = ni[earliest_ready];
    for (int q : rank) {
      if (std::popcount(local) >= shape.L) break;
      local |= QubitMask{1} << q;
    }

    // Run everything that becomes runnable under this local set.
    Stage st;
    bool progress = true;
    while (progress) {
      progress = false;
      for (int g = 0; g < m; ++g) {
        if (done[g] || (ni[g] & ~local)) continue;
        if (!std::all_of(preds[g].begin(), preds[g].end(), [&](int p) { return done[p] != 0; }))
          continue;
        done[g] = 1;
        --remaining;
        st.gate_ids.push_back(g);
        progress = true;
      }
    }
    if (st.gate_ids.empty() && !first)
      throw Error(ErrorKind::Stuck, "greedy staging made no progress");
    std::sort(st.gate_ids.begin(), st.gate_ids.end());

    // Globals: keep previous globals that are still non-local, then the
    // non-local qubits with the least remaining work.
    const QubitMask nonlocal = ~local & ((n == 64) ? ~QubitMask{0} : ((QubitMask{1} << n) - 1));
    QubitMask global = prev_global & nonlocal;
    while (std::popcount(global) > shape.G) global &= global - 1;
    std::vector<int> cand = mask_to_list(nonlocal & ~global);
    std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) {
      if (total[a] != total[b]) return total[a] < total[b];
      return a > b;
    });
    for (int q : cand) {
      if (std::popcount(global) >= shape.G) break;
      global |= QubitMask{1} << q;
    }
    st.partition.local = mask_to_list(local);
    st.partition.global = mask_to_list(global);
    st.partition.regional = mask_to_list(nonlocal & ~global);
    plan.stages.push_back(std::move(st));
    prev_global = global;
    first = false;
  }
  plan.total_cost = staging_cost(plan, shape);
  return plan;
}

std::string check_staging_plan(const StagingPlan &plan, const Circuit &circuit,
                               const MachineShape &shape) {
  const int n = circuit.num_qubits;
  const int m = static_cast<int>(circuit.gates.size());
  std::vector<int> stage_of(m, -1);
  for (size_t k = 0; k < plan.stages.size(); ++k) {
    const auto &p = plan.stages[k].partition;
    const std::string where = "stage " + std::to_string(k) + ": ";
    if (static_cast<int>(p.local.size()) != shape.L) return where + "wrong local count";
    if (static_cast<int>(p.global.size()) != shape.G) return where + "wrong global count";
    if (static_cast<int>(p.regional.size()) != n - shape.L - shape.G)
      return where + "wrong regional count";
    const QubitMask l = list_to_mask(p.local), r = list_to_mask(p.regional),
                    g = list_to_mask(p.global);
    if ((l & r) || (l & g) || (r & g)) return where + "partition classes overlap";
    for (int id : plan.stages[k].gate_ids) {
      if (id < 0 || id >= m) return where + "unknown gate id " + std::to_string(id);
      if (stage_of[id] >= 0) return where + "gate " + std::to_string(id) + " assigned twice";
      stage_of[id] = static_cast<int>(k);
      if (non_insular_mask(circuit.gates[id]) & ~l)
        return where + "gate " + std::to_string(id) + " needs a non-local qubit";
    }
  }
  for (int g = 0; g < m; ++g)
    if (stage_of[g] < 0) return "gate " + std::to_string(g) + " is not staged";
  for (const auto &[a, b] : dependencies(circuit))
    if (stage_of[a] > stage_of[b])
      return "dependency " + std::to_string(a) + " -> " + std::to_string(b) + " crosses backwards";
  return {};
}

}  // namespace hiersim

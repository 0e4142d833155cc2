// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hiersim/errors.hpp"
#include "hiersim/executor.hpp"
#include "hiersim/generators.hpp"
#include "hiersim/kernelizer.hpp"
#include "hiersim/pipeline.hpp"
#include "hiersim/reference.hpp"
#include "hiersim/staging.hpp"
#include "oracles.hpp"

using namespace hiersim;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures; keeps the first few messages.
class Check {
 public:
  void fail(const std::string &what) {
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  void expect(bool ok, const std::string &what) {
    ++checks_;
    if (!ok) fail(what);
  }
  Outcome done(const std::string &summary) const {
    std::ostringstream os;
    os << summary << ", " << checks_ << " checks";
    if (failures_) os << ", " << failures_ << " failed: " << messages_;
    return {failures_ == 0, os.str()};
  }

 private:
  long long checks_ = 0, failures_ = 0;
  std::string messages_;
};

const std::vector<int> kCorpusSizes{6, 8, 10, 12, 14};

std::string label(Family f, int n) { return std::string(family_name(f)) + "(" + std::to_string(n) + ")"; }

std::string shape_label(const MachineShape &s) {
  return "L" + std::to_string(s.L) + "R" + std::to_string(s.R) + "G" + std::to_string(s.G);
}

std::vector<MachineShape> e2e_shapes(int n) { return {{n, 0, 0}, {n - 2, 1, 1}, {n - 4, 2, 2}}; }

// Criterion 1.
Outcome generator_fidelity() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  c.expect(generate(Family::Ghz, 28).gates.size() == 28, "ghz(28)");
  c.expect(generate(Family::Qft, 28).gates.size() == 406, "qft(28)");
  c.expect(generate(Family::GraphStateRing, 28).gates.size() == 56, "graphstate_ring(28)");
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(s < 1.0, "runtime over 1 s");
  return c.done("28 / 406 / 56 gates");
}

// Criteria 2 and the end-to-end half of 10 share these runs.
struct EndToEnd {
  double worst_diff = 0;
  double worst_norm_drift = 0;
  Check diffs, norms;
  int runs = 0;
};

EndToEnd run_end_to_end() {
  EndToEnd r;
  std::mt19937_64 rng(2024);
  for (Family f : all_families())
    for (int n : kCorpusSizes)
      for (const MachineShape &shape : e2e_shapes(n)) {
        const std::string what = label(f, n) + " " + shape_label(shape);
        try {
          const Circuit circuit = generate(f, n);
          PipelineOptions o;
          o.shape = shape;
          const Pipeline p = build_pipeline(circuit, o);
          const StateVector in = oracle::random_state(n, rng);
          const SimulationResult got = simulate(p.circuit, p.staging, p.kernels, o.model, in);
          const StateVector ref = simulate_reference(circuit, in);
          const double diff = oracle::max_abs_diff(got.state.amplitudes, ref.amplitudes);
          const double drift = std::abs(got.state.norm() - 1.0);
          r.worst_diff = std::max(r.worst_diff, diff);
          r.worst_norm_drift = std::max(r.worst_norm_drift, drift);
          r.diffs.expect(diff < 1e-9, what + " diff " + std::to_string(diff));
          r.norms.expect(drift < 1e-9, what + " norm drift " + std::to_string(drift));
        } catch (const Error &e) {
          r.diffs.fail(what + ": " + e.what());
        }
        ++r.runs;
      }
  return r;
}

// Criterion 3.
Outcome staging_optimality() {
  Check c;
  std::mt19937_64 rng(3);
  int feasible = 0, multi = 0;
  constexpr int kCircuits = 50;
  constexpr int kMaxStages = 4;
  for (int t = 0; t < kCircuits; ++t) {
    const int n = 3 + t % 8;  // 3..10
    const int m = 5 + static_cast<int>(rng() % 16);  // 5..20
    const Circuit circuit = attach_single_qubit_gates(oracle::random_circuit(n, m, rng)).circuit;
    const int L = 3 + static_cast<int>(rng() % (n - 2));
    const int G = static_cast<int>(rng() % (n - L + 1));
    const MachineShape shape{L, n - L - G, G, 1.0 + static_cast<double>(rng() % 4)};
    const std::string what = "circuit " + std::to_string(t) + " n=" + std::to_string(n) + " " + shape_label(shape);
    const oracle::StagingAnswer truth = oracle::exhaustive_staging(circuit, shape, kMaxStages);
    StageOptions o;
    o.s_max = kMaxStages;
    try {
      const StagingPlan plan = stage(circuit, shape, o);
      c.expect(truth.feasible, what + ": oracle found no plan");
      if (!truth.feasible) continue;
      ++feasible;
      multi += truth.stages > 1;
      c.expect(static_cast<int>(plan.stages.size()) == truth.stages, what + " stage count");
      c.expect(plan.total_cost == truth.cost, what + " cost " + std::to_string(plan.total_cost) + " vs " +
                                                  std::to_string(truth.cost));
      c.expect(check_staging_plan(plan, circuit, shape).empty(), what + " malformed plan");
    } catch (const Error &e) {
      c.expect(e.kind() == ErrorKind::NoPlanWithinLimit && !truth.feasible, what + ": " + e.what());
    }
  }
  return c.done(std::to_string(kCircuits) + " circuits, " + std::to_string(feasible) + " within " +
                std::to_string(kMaxStages) + " stages, " + std::to_string(multi) + " need more than one");
}

// Criterion 4.
Outcome ilp_vs_greedy() {
  Check c;
  int cases = 0, fewer = 0;
  for (Family f : all_families())
    for (int n : kCorpusSizes)
      for (int d = 0; d <= std::min(6, n - 3); ++d) {
        const Circuit circuit = attach_single_qubit_gates(generate(f, n)).circuit;
        const MachineShape shape{n - d, d / 2, d - d / 2};
        const std::string what = label(f, n) + " " + shape_label(shape);
        try {
          StageOptions o;
          o.budget.max_nodes = 200'000'000;  // qft(10) at L=4 needs about 7e7 nodes
          const size_t ilp = stage(circuit, shape, o).stages.size();
          const size_t greedy = greedy_stage(circuit, shape).stages.size();
          c.expect(ilp <= greedy, what + " ilp " + std::to_string(ilp) + " > greedy " + std::to_string(greedy));
          fewer += ilp < greedy;
        } catch (const Error &e) {
          c.fail(what + ": " + e.what());
        }
        ++cases;
      }
  return c.done(std::to_string(cases) + " circuit/L pairs, ILP strictly fewer on " + std::to_string(fewer));
}

// Whole corpus circuits with single-qubit gates attached.
std::vector<std::pair<std::string, Circuit>> attached_corpus() {
  std::vector<std::pair<std::string, Circuit>> out;
  for (Family f : all_families())
    for (int n : kCorpusSizes) out.emplace_back(label(f, n), attach_single_qubit_gates(generate(f, n)).circuit);
  return out;
}

// Every stage sequence of every corpus pipeline, with its stage options.
struct StageSeq {
  std::string name;
  Circuit seq;
  KernelizeOptions options;
};

std::vector<StageSeq> stage_corpus() {
  std::vector<StageSeq> out;
  for (Family f : all_families())
    for (int n : kCorpusSizes)
      for (const MachineShape &shape : e2e_shapes(n)) {
        PipelineOptions o;
        o.shape = shape;
        o.kernelizer = KernelizerKind::Ordered;
        const Pipeline p = build_pipeline(generate(f, n), o);
        for (size_t k = 0; k < p.stage_circuits.size(); ++k)
          out.push_back({label(f, n) + " " + shape_label(shape) + " stage " + std::to_string(k),
                         p.stage_circuits[k], p.stage_options[k]});
      }
  return out;
}

// Criterion 5.
Outcome contiguous_oracle() {
  Check c;
  const CostModel model = CostModel::defaults();
  int compared = 0;
  auto compare = [&](const std::string &name, const Circuit &seq, const KernelizeOptions &o) {
    if (seq.gates.empty() || seq.gates.size() > 12) return;
    const double got = ordered_kernelize(seq, model, o).total_cost;
    const double want = oracle::best_contiguous(seq, model, o);
    c.expect(got == want, name + " " + std::to_string(got) + " vs " + std::to_string(want));
    ++compared;
  };
  for (const auto &[name, circuit] : attached_corpus()) compare(name, circuit, {});
  for (const StageSeq &s : stage_corpus()) compare(s.name, s.seq, s.options);
  return c.done(std::to_string(compared) + " sequences with at most 12 gates");
}

// Criterion 6.
Outcome dominance() {
  Check c;
  const CostModel model = CostModel::defaults();
  int compared = 0;
  double saved = 0;
  auto compare = [&](const std::string &name, const Circuit &seq, const KernelizeOptions &o) {
    if (seq.gates.empty()) return;
    const double dp = kernelize(seq, model, kNoPruning, o).total_cost;
    const double ordered = ordered_kernelize(seq, model, o).total_cost;
    c.expect(dp <= ordered + 1e-9, name + " dp " + std::to_string(dp) + " > ordered " + std::to_string(ordered));
    saved += ordered - dp;
    ++compared;
  };
  for (const auto &[name, circuit] : attached_corpus()) compare(name, circuit, {});
  for (const StageSeq &s : stage_corpus()) compare(s.name, s.seq, s.options);
  int qft = 0;
  for (int n : kCorpusSizes) {
    if (n < 8) continue;
    const Circuit circuit = attach_single_qubit_gates(generate(Family::Qft, n)).circuit;
    const double dp = kernelize(circuit, model, 500).total_cost;
    const double greedy = greedy_fusion_kernelize(circuit, model, 5).total_cost;
    c.expect(dp <= greedy + 1e-9, label(Family::Qft, n) + " dp(500) " + std::to_string(dp) + " > greedy " +
                                      std::to_string(greedy));
    ++qft;
  }
  std::ostringstream os;
  os << compared << " sequences (total saving " << saved << "), " << qft << " qft circuits vs greedy";
  return c.done(os.str());
}

// Criterion 7.
Outcome extensible_sets() {
  Check c;
  std::mt19937_64 rng(7);
  int placements = 0;
  for (int t = 0; placements < 1000; ++t) {
    const int n = 2 + t % 5;  // 2..6
    const int m = 2 + static_cast<int>(rng() % 15);  // 2..16
    const Circuit circuit = oracle::random_circuit(n, m, rng);
    std::vector<QubitMask> qubits;
    for (const Gate &g : circuit.gates) qubits.push_back(g.qubit_mask());
    const QubitMask all = (QubitMask{1} << n) - 1;
    std::vector<KernelDescriptor> kernels;
    std::vector<std::vector<int>> members;
    for (int i = 0; i < m && placements < 1000; ++i) {
      std::vector<int> hosts{-1};
      for (int k = 0; k < static_cast<int>(kernels.size()); ++k)
        if (kernels[k].ext_all || (qubits[i] & ~kernels[k].ext) == 0) hosts.push_back(k);
      const int host = hosts[rng() % hosts.size()];
      update_extensible(kernels, qubits[i], host);
      if (host < 0) members.push_back({i});
      else members[host].push_back(i);
      ++placements;
      for (size_t k = 0; k < kernels.size(); ++k) {
        const QubitMask maintained = kernels[k].ext_all ? all : kernels[k].ext;
        const QubitMask truth = extensible_oracle(members[k], i + 1, qubits, n);
        c.expect(maintained == truth, "circuit " + std::to_string(t) + " gate " + std::to_string(i) +
                                          " kernel " + std::to_string(k));
      }
    }
  }
  return c.done(std::to_string(placements) + " placements");
}

// Criterion 8.
Outcome constraint_soundness() {
  Check c;
  const CostModel model = CostModel::defaults();
  int plans = 0;
  long long segments = 0;
  auto verify = [&](const std::string &name, const Circuit &seq, const KernelizeOptions &o) {
    if (seq.gates.empty()) return;
    for (const auto &[kind, plan] : {std::pair{"dp", kernelize(seq, model, 500, o)},
                                     std::pair{"ordered", ordered_kernelize(seq, model, o)}}) {
      const auto violations = verify_plan(plan, seq, model, o);
      c.expect(violations.empty(),
               name + " " + kind + (violations.empty() ? std::string() : ": " + violations.front().message));
      ++plans;
    }
  };
  for (const auto &[name, circuit] : attached_corpus()) verify(name, circuit, {});
  for (const StageSeq &s : stage_corpus()) verify(s.name, s.seq, s.options);
  for (Family f : all_families())
    for (int n : kCorpusSizes)
      for (const Circuit &circuit : {generate(f, n), attach_single_qubit_gates(generate(f, n)).circuit}) {
        const int m = static_cast<int>(circuit.gates.size());
        Check segment_check;
        bool all_ok = true;
        for (int b = 0; b < m; ++b)
          for (int e = b + 1; e <= m; ++e) {
            std::vector<int> ids(e - b);
            std::iota(ids.begin(), ids.end(), b);
            all_ok = all_ok && satisfies_kernel_constraint(ids, circuit);
            ++segments;
          }
        c.expect(all_ok, label(f, n) + " has a contiguous segment failing the constraint");
      }
  return c.done(std::to_string(plans) + " plans, " + std::to_string(segments) + " contiguous segments");
}

// Criterion 9.
Outcome communication_accounting() {
  Check c;
  const ShardLayout layout{1, 1, 1};
  const QubitMapping start{{0, 1, 2}};
  const QubitMapping regional_swap{{1, 0, 2}};
  const QubitMapping global_swap{{2, 1, 0}};
  std::mt19937_64 rng(9);
  for (const auto &[name, to] : {std::pair{"local/regional", regional_swap}, std::pair{"local/global", global_swap}}) {
    StateVector s = oracle::random_state(3, rng);
    const std::vector<cplx> before = s.amplitudes;
    const CommDelta d = remap(s, start, to, layout);
    const oracle::MoveCount e = oracle::enumerate_moves(start, to, layout);
    c.expect(d.intra_node_amplitudes_moved == e.intra, std::string(name) + " intra count");
    c.expect(d.inter_node_amplitudes_moved == e.inter, std::string(name) + " inter count");
    std::vector<cplx> a = before, b = s.amplitudes;
    auto less = [](const cplx &x, const cplx &y) {
      return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    };
    std::sort(a.begin(), a.end(), less);
    std::sort(b.begin(), b.end(), less);
    c.expect(a == b, std::string(name) + " amplitudes not preserved exactly");
  }
  const CommDelta regional = remap_counts(start, regional_swap, layout);
  const CommDelta global = remap_counts(start, global_swap, layout);
  c.expect(regional.inter_node_amplitudes_moved == 0, "regional change crossed nodes");
  c.expect(regional.intra_node_amplitudes_moved == 4, "regional change intra != 4");
  c.expect(global.inter_node_amplitudes_moved > 0, "global change stayed inside nodes");
  c.expect(global.inter_node_amplitudes_moved == 4, "global change inter != 4");
  std::ostringstream os;
  os << "regional swap intra=" << regional.intra_node_amplitudes_moved
     << " inter=" << regional.inter_node_amplitudes_moved
     << ", global swap inter=" << global.inter_node_amplitudes_moved;
  return c.done(os.str());
}

Circuit random_executable_kernel(int n, int L, const QubitMapping &m, std::mt19937_64 &rng) {
  Circuit c{n, {}};
  const int want = 1 + static_cast<int>(rng() % 8);
  while (static_cast<int>(c.gates.size()) < want) {
    Gate g = oracle::random_gate(n, rng);
    bool ok = true;
    for (int q : g.qubits) ok = ok && (m.phys_of_logical[q] < L || qubit_role(g, q) != QubitRole::General);
    if (!ok) continue;
    g.id = static_cast<int>(c.gates.size());
    c.gates.push_back(g);
  }
  return c;
}

// Fusion vs shared-memory half of criterion 10.
Outcome fusion_vs_shared(Check c) {
  std::mt19937_64 rng(10);
  double worst = 0;
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + t % 8;
    const int L = 1 + static_cast<int>(rng() % n);
    const int R = static_cast<int>(rng() % (n - L + 1));
    const ShardLayout layout{L, R, n - L - R};
    QubitMapping m;
    m.phys_of_logical.resize(n);
    std::iota(m.phys_of_logical.begin(), m.phys_of_logical.end(), 0);
    std::shuffle(m.phys_of_logical.begin(), m.phys_of_logical.end(), rng);
    const Circuit circuit = random_executable_kernel(n, L, m, rng);
    Kernel fusion, shm;
    fusion.kind = KernelKind::Fusion;
    shm.kind = KernelKind::SharedMemory;
    for (const Gate &g : circuit.gates) fusion.gate_ids.push_back(g.id);
    shm.gate_ids = fusion.gate_ids;
    const ExecuteContext ctx{&circuit, m, layout, 10, 3};
    const StateVector in = oracle::random_state(n, rng);
    for (uint64_t s = 0; s < layout.shard_count(); ++s) {
      std::vector<cplx> a(in.amplitudes.begin() + s * layout.shard_size(),
                          in.amplitudes.begin() + (s + 1) * layout.shard_size());
      std::vector<cplx> b = a;
      const QubitMask fa = execute_kernel(a, fusion, ctx, s);
      const QubitMask fb = execute_kernel(b, shm, ctx, s);
      const double diff = oracle::max_abs_diff(a, b);
      worst = std::max(worst, diff);
      c.expect(diff < 1e-12 && fa == fb, "kernel " + std::to_string(t) + " shard " + std::to_string(s));
    }
  }
  std::ostringstream os;
  os << "500 kernels, worst fusion/shm diff " << worst;
  return c.done(os.str());
}

void report(int id, const char *name, const std::function<Outcome()> &run, int &failed) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = run();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %2d %-28s %s  %s (%.2f s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), s);
  std::fflush(stdout);
  failed += !o.pass;
}

}  // namespace

int main() {
  int failed = 0;
  report(1, "generator fidelity", generator_fidelity, failed);

  EndToEnd e2e;
  double e2e_seconds = 0;
  report(2, "end-to-end correctness", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    e2e = run_end_to_end();
    e2e_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    e2e.diffs.expect(e2e_seconds < 300, "runtime over 5 min");
    std::ostringstream os;
    os << e2e.runs << " runs, worst diff " << e2e.worst_diff;
    return e2e.diffs.done(os.str());
  }, failed);

  report(3, "staging optimality", [] {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = staging_optimality();
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (s >= 600) o = {false, o.detail + ", runtime over 10 min"};
    return o;
  }, failed);
  report(4, "ILP <= greedy stages", ilp_vs_greedy, failed);
  report(5, "contiguous oracle", contiguous_oracle, failed);
  report(6, "dominance", dominance, failed);
  report(7, "extensible-set oracle", extensible_sets, failed);
  report(8, "constraint soundness", constraint_soundness, failed);
  report(9, "communication accounting", communication_accounting, failed);
  report(10, "numerical hygiene", [&] {
    Check norms = e2e.norms;
    std::ostringstream os;
    os << "worst norm drift " << e2e.worst_norm_drift << " over " << e2e.runs << " runs; ";
    Outcome o = fusion_vs_shared(norms);
    o.detail = os.str() + o.detail;
    return o;
  }, failed);

  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed ? 1 : 0;
}

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "hiersim/errors.hpp"
#include "hiersim/executor.hpp"
#include "hiersim/generators.hpp"
#include "hiersim/pipeline.hpp"
#include "hiersim/qasm.hpp"
#include "hiersim/reference.hpp"
#include "hiersim/serialization.hpp"

namespace hiersim::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kVerifyTolerance = 1e-9;

Error usage(const std::string &what) { return Error(ErrorKind::InvalidArgument, what); }

int exit_code_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError: return kRuntimeError;
    case ErrorKind::SyntaxError:
    case ErrorKind::UnsupportedGate:
    case ErrorKind::QubitOutOfRange:
    case ErrorKind::InvalidSize:
    case ErrorKind::InvalidArgument:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::PlanViolation:
    case ErrorKind::NotAPermutation:
    case ErrorKind::TooLarge: return kUsage;
    case ErrorKind::InfeasibleShape:
    case ErrorKind::NoPlanWithinLimit:
    case ErrorKind::Stuck:
    case ErrorKind::NoFeasibleSegmentation: return kInfeasible;
    case ErrorKind::BudgetExceeded: return kBudget;
    default: return kRuntimeError;
  }
}

std::string read_text(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Circuit parse_gen(const std::string &text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw usage("--gen expects family:n, got '" + text + "'");
  int n = 0;
  try {
    size_t used = 0;
    n = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception &) {
    throw usage("--gen qubit count is not an integer: '" + text + "'");
  }
  return generate(family_from_name(text.substr(0, colon)), n);
}

Circuit load_circuit(const RunConfig &cfg) {
  Circuit c = cfg.gen.empty() ? parse_qasm(read_text(cfg.input)) : parse_gen(cfg.gen);
  validate_circuit(c);
  return c;
}

MachineShape shape_for(const RunConfig &cfg, int n) {
  MachineShape s;
  s.R = cfg.regional.value_or(0);
  s.G = cfg.global.value_or(0);
  s.L = cfg.local.value_or(n - s.R - s.G);
  s.c = cfg.comm_factor;
  validate_shape(s, n);
  return s;
}

CostModel model_for(const RunConfig &cfg) {
  return cfg.cost_model.empty() ? CostModel::defaults() : load_cost_model(cfg.cost_model);
}

KernelizerKind kernelizer_kind(const std::string &name) {
  if (name == "dp") return KernelizerKind::Dp;
  if (name == "ordered") return KernelizerKind::Ordered;
  if (name == "greedy") return KernelizerKind::GreedyFusion;
  throw usage("unknown kernelizer '" + name + "' (dp, ordered, greedy)");
}

StageOptions stage_options(const RunConfig &cfg) {
  StageOptions o;
  o.s_max = cfg.max_stages;
  o.budget.max_nodes = cfg.budget_nodes;
  return o;
}

fs::path out_path(const RunConfig &cfg, const std::string &name) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + cfg.out + ": " + ec.message());
  return fs::path(cfg.out) / name;
}

// Staging plan from --plan, or a fresh one for the attached circuit.
StagingPlan obtain_staging(const RunConfig &cfg, const Circuit &attached) {
  if (cfg.plan.empty()) {
    const MachineShape shape = shape_for(cfg, attached.num_qubits);
    return cfg.greedy_staging ? greedy_stage(attached, shape)
                              : stage(attached, shape, stage_options(cfg));
  }
  StagingPlan plan = staging_plan_from_json(read_json_file(cfg.plan));
  if (cfg.local || cfg.regional || cfg.global) {
    const MachineShape s = shape_for(cfg, attached.num_qubits);
    if (s.L != plan.shape.L || s.R != plan.shape.R || s.G != plan.shape.G)
      throw usage("shape flags disagree with the shape stored in " + cfg.plan);
  }
  const std::string problem = check_staging_plan(plan, attached, plan.shape);
  if (!problem.empty()) throw Error(ErrorKind::PlanViolation, cfg.plan + ": " + problem);
  return plan;
}

std::vector<KernelPlan> obtain_kernels(const RunConfig &cfg, const Circuit &attached,
                                       const StagingPlan &staging, const CostModel &model) {
  if (!cfg.kernels.empty()) {
    auto plans = kernel_plans_from_json(read_json_file(cfg.kernels));
    if (plans.size() != staging.stages.size())
      throw Error(ErrorKind::PlanViolation, cfg.kernels + ": stage count differs from the staging plan");
    return plans;
  }
  return kernelize_stages(attached, staging, model, kernelizer_kind(cfg.kernelizer), cfg.prune_T);
}

StateVector random_state(int n, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  StateVector s = StateVector::zero(n);
  double norm2 = 0;
  for (cplx &a : s.amplitudes) {
    a = {normal(rng), normal(rng)};
    norm2 += std::norm(a);
  }
  for (cplx &a : s.amplitudes) a /= std::sqrt(norm2);
  return s;
}

int cmd_stage(const RunConfig &cfg, std::ostream &out) {
  const Circuit attached = attach_single_qubit_gates(load_circuit(cfg)).circuit;
  const StagingPlan plan = obtain_staging(cfg, attached);
  const fs::path path = out_path(cfg, "staging.json");
  write_json_file(path.string(), staging_plan_to_json(plan));
  out << "stages=" << plan.stages.size() << " cost=" << plan.total_cost
      << " nodes=" << plan.stats.nodes << " file=" << path.string() << '\n';
  return kOk;
}

int cmd_kernelize(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  const Circuit attached = attach_single_qubit_gates(load_circuit(cfg)).circuit;
  const CostModel model = model_for(cfg);
  const StagingPlan staging = obtain_staging(cfg, attached);
  const auto plans = kernelize_stages(attached, staging, model, kernelizer_kind(cfg.kernelizer),
                                      cfg.prune_T);
  const auto mappings = stage_mappings(staging);
  const ShardLayout layout = ShardLayout::from(staging.shape);
  bool ok = true;
  double total = 0;
  for (size_t k = 0; k < plans.size(); ++k) {
    total += plans[k].total_cost;
    out << "stage=" << k << " kernels=" << plans[k].kernels.size()
        << " cost=" << plans[k].total_cost << '\n';
    if (!cfg.verify) continue;
    const Circuit seq = stage_circuit(attached, staging.stages[k]);
    for (const Violation &v : verify_plan(plans[k], seq, model,
                                          stage_kernelize_options(mappings[k], layout, model))) {
      err << "stage " << k << " kernel " << v.kernel << ": " << v.message << '\n';
      ok = false;
    }
  }
  const fs::path path = out_path(cfg, "kernels.json");
  write_json_file(path.string(), kernel_plans_to_json(plans));
  if (cfg.plan.empty()) write_json_file(out_path(cfg, "staging.json").string(), staging_plan_to_json(staging));
  out << "kernel_cost=" << total << " file=" << path.string() << '\n';
  return ok ? kOk : kVerifyFailed;
}

int cmd_simulate(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  if (!cfg.kernels.empty() && cfg.plan.empty()) throw usage("--kernels needs --plan");
  const Circuit circuit = load_circuit(cfg);
  const Circuit attached = attach_single_qubit_gates(circuit).circuit;
  const CostModel model = model_for(cfg);
  StateVector input;
  if (!cfg.state.empty()) input = read_state(cfg.state);
  else if (cfg.random_state) input = random_state(circuit.num_qubits, cfg.seed);
  else input = StateVector::zero(circuit.num_qubits);
  if (input.n != circuit.num_qubits)
    throw Error(ErrorKind::DimensionMismatch, "input state has " + std::to_string(input.n) +
                                                  " qubits, circuit has " +
                                                  std::to_string(circuit.num_qubits));
  const StagingPlan staging = obtain_staging(cfg, attached);
  const auto kernels = obtain_kernels(cfg, attached, staging, model);
  const SimulationResult r = simulate(attached, staging, kernels, model, input);

  write_state(out_path(cfg, "state.bin").string(), r.state);
  write_json_file(out_path(cfg, "comm.json").string(), comm_stats_to_json(r.comm));
  {
    std::ofstream csv(out_path(cfg, "comm.csv"));
    if (!csv) throw Error(ErrorKind::IoError, "cannot write comm.csv");
    csv << comm_stats_to_csv(r.comm);
  }
  out << "stages=" << staging.stages.size()
      << " intra_node_amplitudes=" << r.comm.intra_node_amplitudes_moved
      << " inter_node_amplitudes=" << r.comm.inter_node_amplitudes_moved
      << " local_swaps=" << r.comm.local_swaps << " global_swaps=" << r.comm.global_swaps
      << std::setprecision(17) << " norm=" << r.state.norm() << '\n';
  if (!cfg.verify) return kOk;

  const StateVector ref = simulate_reference(circuit, input);
  const ComparisonReport cmp = compare(ref, r.state);
  const double norm_drift = std::abs(r.state.norm() - input.norm());
  out << std::setprecision(6) << "max_abs_diff=" << cmp.max_abs_diff << " norm_drift=" << norm_drift
      << '\n';
  if (cmp.max_abs_diff >= kVerifyTolerance || norm_drift >= kVerifyTolerance) {
    err << "verification failed: max_abs_diff=" << cmp.max_abs_diff
        << " norm_drift=" << norm_drift << '\n';
    return kVerifyFailed;
  }
  return kOk;
}

double stage_sum(const std::vector<KernelPlan> &plans) {
  double c = 0;
  for (const KernelPlan &p : plans) c += p.total_cost;
  return c;
}

int cmd_bench(const RunConfig &cfg, std::ostream &out) {
  const CostModel model = model_for(cfg);
  std::ostringstream csv;
  csv << "circuit,n,local,regional,global,stages,staging_cost,kernel_cost_dp,"
         "kernel_cost_ordered,kernel_cost_greedy,intra_node_amplitudes,inter_node_amplitudes,"
         "local_swaps,global_swaps,wall_seconds\n";
  for (const std::string &fam : cfg.families) {
    const Family family = family_from_name(fam);
    for (int n : cfg.sizes) {
      for (int d : cfg.drops) {
        if (n - d < 1) continue;
        const auto t0 = std::chrono::steady_clock::now();
        const MachineShape shape{n - d, d / 2, d - d / 2, cfg.comm_factor};
        validate_shape(shape, n);
        const Circuit attached = attach_single_qubit_gates(generate(family, n)).circuit;
        const StagingPlan staging = cfg.greedy_staging ? greedy_stage(attached, shape)
                                                       : stage(attached, shape, stage_options(cfg));
        const double dp = stage_sum(
            kernelize_stages(attached, staging, model, KernelizerKind::Dp, cfg.prune_T));
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double ordered =
            stage_sum(kernelize_stages(attached, staging, model, KernelizerKind::Ordered));
        const double greedy =
            stage_sum(kernelize_stages(attached, staging, model, KernelizerKind::GreedyFusion));
        const auto mappings = stage_mappings(staging);
        CommStats comm;
        for (size_t k = 1; k < mappings.size(); ++k)
          comm.add(remap_counts(mappings[k - 1], mappings[k], ShardLayout::from(shape)));
        std::ostringstream row;
        row << family_name(family) << ',' << n << ',' << shape.L << ',' << shape.R << ','
            << shape.G << ',' << staging.stages.size() << ',' << staging.total_cost << ',' << dp
            << ',' << ordered << ',' << greedy << ',' << comm.intra_node_amplitudes_moved << ','
            << comm.inter_node_amplitudes_moved << ',' << comm.local_swaps << ','
            << comm.global_swaps << ',' << std::fixed << std::setprecision(4) << wall << '\n';
        csv << row.str();
        out << row.str() << std::flush;
      }
    }
  }
  std::ofstream f(out_path(cfg, "bench.csv"));
  if (!f) throw Error(ErrorKind::IoError, "cannot write bench.csv");
  f << csv.str();
  return kOk;
}

}  // namespace

int parse_prune(const std::string &text) {
  if (text == "inf" || text == "0") return kNoPruning;
  try {
    size_t used = 0;
    const int t = std::stoi(text, &used);
    if (used == text.size() && t >= 2) return t;
  } catch (const std::exception &) {
  }
  throw usage("--prune expects an integer >= 2 or 'inf', got '" + text + "'");
}

void RunConfig::validate(const std::string &command) const {
  if (command != "bench") {
    if (input.empty() == gen.empty()) throw usage("exactly one of --input or --gen is required");
  } else {
    if (families.empty()) throw usage("bench needs at least one circuit family");
    if (sizes.empty()) throw usage("bench needs at least one size");
    for (const std::string &f : families) family_from_name(f);
    for (int d : drops)
      if (d < 0) throw usage("--drops must be non-negative");
  }
  if (local && *local < 1) throw usage("--local must be at least 1");
  if ((regional && *regional < 0) || (global && *global < 0))
    throw usage("--regional and --global must be non-negative");
  if (!(comm_factor >= 1)) throw usage("--comm-factor must be at least 1");
  if (max_stages < 1) throw usage("--max-stages must be at least 1");
  if (budget_nodes < 1) throw usage("--budget-nodes must be at least 1");
  if (prune_T != kNoPruning && prune_T < 2) throw usage("--prune must be at least 2");
  kernelizer_kind(kernelizer);
  if (!state.empty() && random_state) throw usage("--state and --random-state are exclusive");
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Staged, kernelized state-vector simulation pipeline", "hiersim"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string prune = "500";
  int local = 0, regional = 0, global = 0;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--input", cfg.input, "OpenQASM 2.0 circuit file");
    sub->add_option("--gen", cfg.gen, "Generated circuit, family:n (ghz, qft, graphstate_ring)");
    sub->add_option("--local", local, "Local qubits L (default: n - R - G)");
    sub->add_option("--regional", regional, "Regional qubits R (default 0)");
    sub->add_option("--global", global, "Global qubits G (default 0)");
    sub->add_option("--comm-factor", cfg.comm_factor, "Cost of a new global qubit (default 3)");
    sub->add_option("--max-stages", cfg.max_stages, "Largest stage count tried (default 16)");
    sub->add_option("--prune", prune, "DP pruning width, or inf (default 500)");
    sub->add_option("--cost-model", cfg.cost_model, "Cost model JSON");
    sub->add_option("--out", cfg.out, "Output directory (default .)");
    sub->add_flag("--verify", cfg.verify, "Check plans / compare with the reference simulator");
    sub->add_option("--seed", cfg.seed, "Seed for --random-state (default 1)");
    sub->add_option("--budget-nodes", cfg.budget_nodes, "Branch-and-bound node budget");
    sub->add_flag("--greedy-staging", cfg.greedy_staging, "Use the greedy stager");
    sub->add_option("--kernelizer", cfg.kernelizer, "dp, ordered or greedy (default dp)");
  };
  CLI::App *st = app.add_subcommand("stage", "Partition the circuit into stages");
  CLI::App *kz = app.add_subcommand("kernelize", "Group each stage's gates into kernels");
  CLI::App *sim = app.add_subcommand("simulate", "Run the staged, kernelized simulation");
  CLI::App *bench = app.add_subcommand("bench", "Cost table over generated circuits");
  for (CLI::App *sub : {st, kz, sim, bench}) add_common(sub);
  for (CLI::App *sub : {kz, sim}) sub->add_option("--plan", cfg.plan, "Staging plan JSON");
  sim->add_option("--kernels", cfg.kernels, "Kernel plans JSON (needs --plan)");
  sim->add_option("--state", cfg.state, "Input state file (default |0...0>)");
  sim->add_flag("--random-state", cfg.random_state, "Random normalized input from --seed");
  bench->add_option("--families", cfg.families, "Circuit families")->delimiter(',');
  bench->add_option("--sizes", cfg.sizes, "Qubit counts")->delimiter(',');
  bench->add_option("--drops", cfg.drops, "Non-local qubit counts d; shape (n-d, d/2, d-d/2)")
      ->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App *chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  if (chosen->count("--local")) cfg.local = local;
  if (chosen->count("--regional")) cfg.regional = regional;
  if (chosen->count("--global")) cfg.global = global;
  if (command == "bench" && chosen->count("--families") &&
      std::all_of(cfg.families.begin(), cfg.families.end(),
                  [](const std::string &f) { return f.empty(); }))
    cfg.families.clear();

  try {
    cfg.prune_T = parse_prune(prune);
    cfg.validate(command);
    if (command == "stage") return cmd_stage(cfg, out);
    if (command == "kernelize") return cmd_kernelize(cfg, out, err);
    if (command == "simulate") return cmd_simulate(cfg, out, err);
    return cmd_bench(cfg, out);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return exit_code_of(e.kind());
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace hiersim::cli

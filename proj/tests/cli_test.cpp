#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "hiersim/errors.hpp"
#include "hiersim/generators.hpp"
#include "hiersim/reference.hpp"
#include "hiersim/serialization.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace hiersim::cli {
namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hiersim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    args.push_back("--out");
    args.push_back(dir_.string());
    return run_cli(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST(ParsePrune, Values) {
  EXPECT_EQ(parse_prune("500"), 500);
  EXPECT_EQ(parse_prune("inf"), 0);
  EXPECT_EQ(parse_prune("0"), 0);
  EXPECT_THROW(parse_prune("1"), Error);
  EXPECT_THROW(parse_prune("many"), Error);
}

TEST_F(Cli, StageWritesAPlan) {
  ASSERT_EQ(run({"stage", "--gen", "ghz:12", "--local", "6", "--regional", "2", "--global", "4"}), kOk)
      << err_.str();
  EXPECT_NE(out_.str().find("stages=2"), std::string::npos) << out_.str();
  const StagingPlan plan = staging_plan_from_json(read_json_file(path("staging.json")));
  EXPECT_EQ(plan.stages.size(), 2u);
  const Circuit attached = attach_single_qubit_gates(generate(Family::Ghz, 12)).circuit;
  EXPECT_EQ(check_staging_plan(plan, attached, plan.shape), "");
}

TEST_F(Cli, KernelizeQftSixWithVerify) {
  ASSERT_EQ(run({"kernelize", "--gen", "qft:6", "--local", "4", "--regional", "1", "--global", "1",
                 "--verify", "--prune", "inf"}),
            kOk)
      << err_.str();
  const auto plans = kernel_plans_from_json(read_json_file(path("kernels.json")));
  const StagingPlan staging = staging_plan_from_json(read_json_file(path("staging.json")));
  EXPECT_EQ(plans.size(), staging.stages.size());
  EXPECT_NE(out_.str().find("kernel_cost="), std::string::npos);
}

TEST_F(Cli, SimulateGhzThree) {
  ASSERT_EQ(run({"simulate", "--gen", "ghz:3", "--local", "2", "--global", "1", "--verify"}), kOk)
      << err_.str();
  const StateVector s = read_state(path("state.bin"));
  ASSERT_EQ(s.n, 3);
  for (uint64_t i = 0; i < 8; ++i) {
    const double expected = (i == 0 || i == 7) ? 1 / std::sqrt(2.0) : 0.0;
    EXPECT_LT(std::abs(s.amplitudes[i] - cplx(expected)), 1e-12);
  }
  const json comm = read_json_file(path("comm.json"));
  EXPECT_TRUE(comm["total"].contains("inter_node_amplitudes"));
  EXPECT_TRUE(fs::exists(path("comm.csv")));
}

TEST_F(Cli, SimulateQftFromFilesAndState) {
  std::mt19937_64 rng(3);
  const StateVector in = oracle::random_state(6, rng);
  write_state(path("in.bin"), in);
  ASSERT_EQ(run({"kernelize", "--gen", "qft:6", "--local", "3", "--regional", "1", "--global", "2"}), kOk)
      << err_.str();
  ASSERT_EQ(run({"simulate", "--gen", "qft:6", "--plan", path("staging.json"), "--kernels",
                 path("kernels.json"), "--state", path("in.bin"), "--verify"}),
            kOk)
      << err_.str();
  const StateVector out = read_state(path("state.bin"));
  const StateVector ref = simulate_reference(generate(Family::Qft, 6), in);
  EXPECT_LT(oracle::max_abs_diff(out.amplitudes, ref.amplitudes), 1e-9);
  const json comm = read_json_file(path("comm.json"));
  EXPECT_TRUE(comm["total"]["intra_node_amplitudes"].is_number_unsigned());
  EXPECT_TRUE(comm["total"]["inter_node_amplitudes"].is_number_unsigned());
}

TEST_F(Cli, QasmInput) {
  std::ofstream(path("c.qasm")) << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[4];\n"
                                   "h q[0];\ncx q[0],q[1];\ncx q[1],q[2];\ncz q[2],q[3];\n";
  EXPECT_EQ(run({"simulate", "--input", path("c.qasm"), "--local", "2", "--regional", "1", "--global",
                 "1", "--verify"}),
            kOk)
      << err_.str();
  std::ofstream(path("bad.qasm")) << "OPENQASM 2.0;\nqreg q[2];\nfoo q[0];\n";
  EXPECT_EQ(run({"stage", "--input", path("bad.qasm")}), kUsage);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({}), kUsage);
  EXPECT_EQ(run({"stage"}), kUsage);  // no circuit
  EXPECT_EQ(run({"stage", "--gen", "qft:6", "--input", "x.qasm"}), kUsage);
  EXPECT_EQ(run({"stage", "--gen", "ghz:6", "--local", "0", "--global", "6"}), kUsage);
  EXPECT_EQ(run({"stage", "--gen", "ghz:6", "--max-stages", "0"}), kUsage);
  EXPECT_EQ(run({"stage", "--gen", "nope:6"}), kUsage);
  EXPECT_EQ(run({"kernelize", "--gen", "ghz:6", "--prune", "1"}), kUsage);
  EXPECT_EQ(run({"bench", "--families", ""}), kUsage);
  EXPECT_EQ(run({"stage", "--input", path("missing.qasm")}), kRuntimeError);
  EXPECT_EQ(run({"kernelize", "--gen", "ghz:6", "--cost-model", path("missing.json")}), kRuntimeError);
  EXPECT_EQ(run({"stage", "--gen", "qft:8", "--local", "4", "--global", "4", "--max-stages", "1"}),
            kInfeasible);
  EXPECT_EQ(run({"stage", "--gen", "qft:12", "--local", "6", "--global", "6", "--budget-nodes", "5"}),
            kBudget);
}

TEST_F(Cli, PlanShapeMustAgree) {
  ASSERT_EQ(run({"stage", "--gen", "ghz:6", "--local", "4", "--global", "2"}), kOk);
  EXPECT_EQ(run({"kernelize", "--gen", "ghz:6", "--plan", path("staging.json"), "--local", "5", "--global",
                 "1"}),
            kUsage);
  // A plan for another circuit violates the staging rules.
  EXPECT_EQ(run({"kernelize", "--gen", "qft:6", "--plan", path("staging.json")}), kUsage);
}

TEST_F(Cli, InfinitePruningAccepted) {
  EXPECT_EQ(run({"kernelize", "--gen", "graphstate_ring:6", "--prune", "inf", "--verify"}), kOk) << err_.str();
}

TEST_F(Cli, BenchTable) {
  ASSERT_EQ(run({"bench", "--families", "ghz,qft", "--sizes", "6,8", "--drops", "0,2"}), kOk) << err_.str();
  std::ifstream in(path("bench.csv"));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "circuit,n,local,regional,global,stages,staging_cost,kernel_cost_dp,kernel_cost_ordered,"
            "kernel_cost_greedy,intra_node_amplitudes,inter_node_amplitudes,local_swaps,global_swaps,"
            "wall_seconds");
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  EXPECT_EQ(rows, 8);
}

TEST_F(Cli, BinaryExitCodes) {
  const std::string bin = HIERSIM_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";
  auto code = [&](const std::string &args) {
    const int status = std::system((bin + " " + args + " --out " + dir_.string() + quiet).c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(code("stage --gen ghz:6 --local 4 --global 2"), kOk);
  EXPECT_EQ(code("stage --gen ghz:6 --local 9"), kUsage);
  EXPECT_EQ(code("stage --input " + path("none.qasm")), kRuntimeError);
  EXPECT_EQ(code("stage --gen qft:8 --local 4 --global 4 --max-stages 1"), kInfeasible);
  EXPECT_EQ(code("stage --gen qft:12 --local 6 --global 6 --budget-nodes 5"), kBudget);
  EXPECT_EQ(code("--help"), kOk);
}

}  // namespace
}  // namespace hiersim::cli

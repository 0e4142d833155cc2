#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "hiersim/errors.hpp"
#include "hiersim/generators.hpp"
#include "hiersim/pipeline.hpp"
#include "hiersim/serialization.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace hiersim {
namespace {

ErrorKind failure_kind(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::IoError;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hiersim_ser_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

Pipeline qft_pipeline() {
  PipelineOptions o;
  o.shape = MachineShape{4, 1, 2};
  return build_pipeline(generate(Family::Qft, 7), o);
}

TEST(StagingJson, RoundTrip) {
  const Pipeline p = qft_pipeline();
  const json j = staging_plan_to_json(p.staging);
  EXPECT_TRUE(j.contains("cost"));
  EXPECT_EQ(j["shape"]["L"], 4);
  ASSERT_EQ(j["stages"].size(), p.staging.stages.size());
  for (const json &s : j["stages"])
    for (const char *key : {"gates", "local", "regional", "global"}) EXPECT_TRUE(s[key].is_array());
  const StagingPlan back = staging_plan_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.total_cost, p.staging.total_cost);
  EXPECT_EQ(back.shape.L, 4);
  EXPECT_EQ(back.shape.G, 2);
  ASSERT_EQ(back.stages.size(), p.staging.stages.size());
  for (size_t k = 0; k < back.stages.size(); ++k) {
    EXPECT_EQ(back.stages[k].gate_ids, p.staging.stages[k].gate_ids);
    EXPECT_EQ(back.stages[k].partition.local, p.staging.stages[k].partition.local);
    EXPECT_EQ(back.stages[k].partition.regional, p.staging.stages[k].partition.regional);
    EXPECT_EQ(back.stages[k].partition.global, p.staging.stages[k].partition.global);
  }
  EXPECT_EQ(check_staging_plan(back, p.circuit, back.shape), "");
}

TEST(StagingJson, MissingFieldsAreRejected) {
  json j = staging_plan_to_json(qft_pipeline().staging);
  j["stages"][0].erase("local");
  EXPECT_EQ(failure_kind([&] { staging_plan_from_json(j); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(failure_kind([] { staging_plan_from_json(json::object()); }), ErrorKind::InvalidArgument);
}

TEST(KernelJson, RoundTrip) {
  const Pipeline p = qft_pipeline();
  const json j = kernel_plans_to_json(p.kernels);
  for (const json &s : j["stages"]) {
    EXPECT_TRUE(s.contains("total_cost"));
    EXPECT_TRUE(s["realized_order"].is_array());
    for (const json &k : s["kernels"]) {
      const std::string kind = k["kind"];
      EXPECT_TRUE(kind == "fusion" || kind == "shm");
      EXPECT_TRUE(k["gates"].is_array());
      EXPECT_TRUE(k["qubits"].is_array());
      EXPECT_TRUE(k["cost"].is_number());
    }
  }
  const std::vector<KernelPlan> back = kernel_plans_from_json(json::parse(j.dump()));
  ASSERT_EQ(back.size(), p.kernels.size());
  for (size_t s = 0; s < back.size(); ++s) {
    EXPECT_EQ(back[s].total_cost, p.kernels[s].total_cost);
    EXPECT_EQ(back[s].realized_order, p.kernels[s].realized_order);
    ASSERT_EQ(back[s].kernels.size(), p.kernels[s].kernels.size());
    for (size_t k = 0; k < back[s].kernels.size(); ++k) {
      EXPECT_EQ(back[s].kernels[k].gate_ids, p.kernels[s].kernels[k].gate_ids);
      EXPECT_EQ(back[s].kernels[k].kind, p.kernels[s].kernels[k].kind);
      EXPECT_EQ(back[s].kernels[k].qubits, p.kernels[s].kernels[k].qubits);
      EXPECT_EQ(back[s].kernels[k].cost, p.kernels[s].kernels[k].cost);
    }
    EXPECT_TRUE(verify_plan(back[s], p.stage_circuits[s], CostModel::defaults(), p.stage_options[s]).empty());
  }
  json bad = j;
  bad["stages"][0]["kernels"][0]["kind"] = "tensor";
  EXPECT_EQ(failure_kind([&] { kernel_plans_from_json(bad); }), ErrorKind::InvalidArgument);
}

TEST(CostModelJson, RoundTripAndArityKeys) {
  CostModel m = CostModel::defaults();
  m.alpha = 1.25;
  m.fusion_cost = {1, 1, 2, 3};
  m.q_max_fusion = 4;
  m.gate_cost[static_cast<size_t>(GateKind::SWAP)] = 0.3;
  const CostModel back = cost_model_from_json(json::parse(cost_model_to_json(m).dump()));
  EXPECT_EQ(back.alpha, 1.25);
  EXPECT_EQ(back.fusion_cost, m.fusion_cost);
  EXPECT_EQ(back.q_max_fusion, 4);
  EXPECT_EQ(back.gate_cost, m.gate_cost);

  const CostModel arity = cost_model_from_json(json::parse(R"({"gate_cost":{"2":0.5,"CZ":0.25}})"));
  EXPECT_EQ(arity.gate(GateKind::CX), 0.5);
  EXPECT_EQ(arity.gate(GateKind::SWAP), 0.5);
  EXPECT_EQ(arity.gate(GateKind::CZ), 0.25);
  EXPECT_EQ(arity.gate(GateKind::H), 0.05);
  EXPECT_EQ(arity.fusion_cost, CostModel::defaults().fusion_cost);

  EXPECT_EQ(failure_kind([] { cost_model_from_json(json::parse(R"({"gate_cost":{"FOO":1}})")); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(failure_kind([] { cost_model_from_json(json::parse(R"({"alpha":-1})")); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(failure_kind([] { cost_model_from_json(json::parse(R"({"fusion_cost":"x"})")); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(failure_kind([] { cost_model_from_json(json::array()); }), ErrorKind::InvalidArgument);
}

TEST_F(TempDir, CostModelFiles) {
  EXPECT_EQ(failure_kind([&] { load_cost_model(path("absent.json")); }), ErrorKind::IoError);
  std::ofstream(path("broken.json")) << "{ not json";
  EXPECT_EQ(failure_kind([&] { load_cost_model(path("broken.json")); }), ErrorKind::InvalidArgument);
  write_json_file(path("m.json"), cost_model_to_json(CostModel::defaults()));
  EXPECT_EQ(load_cost_model(path("m.json")).fusion_cost, CostModel::defaults().fusion_cost);
}

TEST_F(TempDir, StateFileRoundTrip) {
  std::mt19937_64 rng(31);
  const StateVector s = oracle::random_state(6, rng);
  write_state(path("s.bin"), s);
  EXPECT_EQ(fs::file_size(path("s.bin")), 64u * 16u);
  const json side = read_json_file(path("s.bin.json"));
  EXPECT_EQ(side["n"], 6);
  EXPECT_EQ(side["mapping"].size(), 6u);
  EXPECT_EQ(read_state(path("s.bin")).amplitudes, s.amplitudes);
}

TEST_F(TempDir, StateFileLayoutIsLittleEndianPairs) {
  StateVector s = StateVector::zero(1);
  s.amplitudes = {cplx(0.5, -0.25), cplx(1.0, 2.0)};
  write_state(path("tiny.bin"), s);
  std::ifstream in(path("tiny.bin"), std::ios::binary);
  unsigned char bytes[32];
  in.read(reinterpret_cast<char *>(bytes), 32);
  ASSERT_EQ(in.gcount(), 32);
  // 0.5 = 0x3FE0000000000000, least significant byte first.
  for (int b = 0; b < 6; ++b) EXPECT_EQ(bytes[b], 0);
  EXPECT_EQ(bytes[6], 0xE0);
  EXPECT_EQ(bytes[7], 0x3F);
  // -0.25 = 0xBFD0000000000000.
  EXPECT_EQ(bytes[14], 0xD0);
  EXPECT_EQ(bytes[15], 0xBF);
}

TEST_F(TempDir, StateFileWithMappingIsReadInLogicalOrder) {
  std::mt19937_64 rng(37);
  const StateVector logical = oracle::random_state(4, rng);
  const QubitMapping m{{2, 0, 3, 1}};
  StateVector physical = logical;
  for (uint64_t i = 0; i < 16; ++i) physical.amplitudes[m.to_physical(i)] = logical.amplitudes[i];
  write_state(path("p.bin"), physical, m.phys_of_logical);
  EXPECT_EQ(read_state(path("p.bin")).amplitudes, logical.amplitudes);
}

TEST_F(TempDir, BadStateFiles) {
  EXPECT_EQ(failure_kind([&] { read_state(path("none.bin")); }), ErrorKind::IoError);
  write_state(path("short.bin"), StateVector::zero(3));
  write_json_file(path("short.bin.json"), {{"n", 4}, {"mapping", {0, 1, 2, 3}}});
  EXPECT_EQ(failure_kind([&] { read_state(path("short.bin")); }), ErrorKind::IoError);
  write_state(path("long.bin"), StateVector::zero(3));
  write_json_file(path("long.bin.json"), {{"n", 2}});
  EXPECT_EQ(failure_kind([&] { read_state(path("long.bin")); }), ErrorKind::IoError);
  write_state(path("perm.bin"), StateVector::zero(2));
  write_json_file(path("perm.bin.json"), {{"n", 2}, {"mapping", {1, 1}}});
  EXPECT_EQ(failure_kind([&] { read_state(path("perm.bin")); }), ErrorKind::InvalidArgument);
}

TEST(CommStatsExport, JsonAndCsv) {
  CommStats stats;
  stats.add(CommDelta{});
  stats.add(CommDelta{4, 0, 1, 0});
  stats.add(CommDelta{2, 8, 2, 1});
  EXPECT_EQ(stats.intra_node_amplitudes_moved, 6u);
  EXPECT_EQ(stats.inter_node_amplitudes_moved, 8u);
  EXPECT_EQ(stats.local_swaps, 3);
  EXPECT_EQ(stats.global_swaps, 1);
  const json j = comm_stats_to_json(stats);
  EXPECT_EQ(j["total"]["inter_node_amplitudes"], 8);
  EXPECT_EQ(j["per_stage"].size(), 3u);
  EXPECT_EQ(j["per_stage"][1]["intra_node_amplitudes"], 4);
  EXPECT_EQ(comm_stats_to_csv(stats),
            "stage,intra_node_amplitudes,inter_node_amplitudes,local_swaps,global_swaps\n"
            "0,0,0,0,0\n1,4,0,1,0\n2,2,8,2,1\n");
}

}  // namespace
}  // namespace hiersim

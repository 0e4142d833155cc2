#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiersim/executor.hpp"
#include "hiersim/kernelizer.hpp"
#include "hiersim/staging.hpp"

namespace hiersim {

using json = nlohmann::json;

// {"shape":{L,R,G,c},"cost":..,"stages":[{"local":[..],"regional":[..],
//  "global":[..],"gates":[..]}],"stats":{"nodes":..,"seconds":..,"models":..}}
json staging_plan_to_json(const StagingPlan &plan);
StagingPlan staging_plan_from_json(const json &j);

// {"stages":[{"total_cost":..,"realized_order":[..],"kernels":[{"kind":"fusion"|"shm",
//  "gates":[..],"qubits":[..],"cost":..}]}]}
json kernel_plans_to_json(const std::vector<KernelPlan> &plans);
std::vector<KernelPlan> kernel_plans_from_json(const json &j);

// {"fusion_cost":[..],"alpha":..,"q_max_fusion":..,"q_max_shared":..,"ls_qubits":..,
//  "gate_cost":{"1":..,"2":..,"3":..,"<gate name>":..}}. Arity keys set every
// gate of that arity; gate names (any case) override. Missing fields keep defaults.
json cost_model_to_json(const CostModel &model);
CostModel cost_model_from_json(const json &j);

// Throws IoError (missing/unreadable) or InvalidArgument (bad content).
json read_json_file(const std::string &path);
void write_json_file(const std::string &path, const json &j);
CostModel load_cost_model(const std::string &path);

// Raw little-endian (re, im) float64 pairs in `path`, sidecar
// {"n":..,"mapping":[..]} in `path + ".json"`.
void write_state(const std::string &path, const StateVector &state,
                 const std::vector<int> &mapping = {});
StateVector read_state(const std::string &path);

// {"total":{..},"per_stage":[{..}]}; counts as integers.
json comm_stats_to_json(const CommStats &stats);
// Header: stage,intra_node_amplitudes,inter_node_amplitudes,local_swaps,global_swaps
std::string comm_stats_to_csv(const CommStats &stats);

}  // namespace hiersim

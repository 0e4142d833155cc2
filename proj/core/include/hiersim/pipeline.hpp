#pragma once

#include <vector>

#include "hiersim/circuit.hpp"
#include "hiersim/executor.hpp"
#include "hiersim/kernelizer.hpp"
#include "hiersim/staging.hpp"

namespace hiersim {

enum class KernelizerKind { Dp, Ordered, GreedyFusion };

struct PipelineOptions {
  MachineShape shape;
  StageOptions staging;
  bool greedy_staging = false;
  CostModel model = CostModel::defaults();
  KernelizerKind kernelizer = KernelizerKind::Dp;
  int prune_T = 500;
  KernelizeOptions kernelize;  // local_mask and ls_logical are filled per stage
};

struct Pipeline {
  Circuit circuit;  // single-qubit gates attached
  StagingPlan staging;
  std::vector<QubitMapping> mappings;
  std::vector<Circuit> stage_circuits;
  std::vector<KernelizeOptions> stage_options;
  std::vector<KernelPlan> kernels;

  double kernel_cost() const;
};

// Kernel plans for every stage of an existing staging plan.
std::vector<KernelPlan> kernelize_stages(const Circuit &attached, const StagingPlan &staging,
                                         const CostModel &model, KernelizerKind kind,
                                         int prune_T = 500, const KernelizeOptions &base = {});

// attach -> stage -> mappings -> kernelize.
Pipeline build_pipeline(const Circuit &circuit, const PipelineOptions &options);

}  // namespace hiersim

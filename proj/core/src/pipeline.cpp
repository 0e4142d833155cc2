#include "hiersim/pipeline.hpp"

namespace hiersim {

double Pipeline::kernel_cost() const {
  double c = 0;
  for (const KernelPlan &p : kernels) c += p.total_cost;
  return c;
}

namespace {

KernelPlan run_kernelizer(const Circuit &seq, const CostModel &model, KernelizerKind kind,
                          int prune_T, const KernelizeOptions &opts) {
  switch (kind) {
    case KernelizerKind::Ordered: return ordered_kernelize(seq, model, opts);
    case KernelizerKind::GreedyFusion: return greedy_fusion_kernelize(seq, model, 5, opts);
    case KernelizerKind::Dp: break;
  }
  return kernelize(seq, model, prune_T, opts);
}

}  // namespace

std::vector<KernelPlan> kernelize_stages(const Circuit &attached, const StagingPlan &staging,
                                         const CostModel &model, KernelizerKind kind, int prune_T,
                                         const KernelizeOptions &base) {
  const ShardLayout layout = ShardLayout::from(staging.shape);
  const auto mappings = stage_mappings(staging);
  std::vector<KernelPlan> out;
  for (size_t k = 0; k < staging.stages.size(); ++k) {
    const Circuit seq = stage_circuit(attached, staging.stages[k]);
    out.push_back(run_kernelizer(seq, model, kind, prune_T,
                                 stage_kernelize_options(mappings[k], layout, model, base)));
  }
  return out;
}

Pipeline build_pipeline(const Circuit &circuit, const PipelineOptions &options) {
  Pipeline p;
  p.circuit = attach_single_qubit_gates(circuit).circuit;
  p.staging = options.greedy_staging ? greedy_stage(p.circuit, options.shape)
                                     : stage(p.circuit, options.shape, options.staging);
  p.mappings = stage_mappings(p.staging);
  const ShardLayout layout = ShardLayout::from(options.shape);
  for (size_t k = 0; k < p.staging.stages.size(); ++k) {
    p.stage_circuits.push_back(stage_circuit(p.circuit, p.staging.stages[k]));
    p.stage_options.push_back(
        stage_kernelize_options(p.mappings[k], layout, options.model, options.kernelize));
    p.kernels.push_back(run_kernelizer(p.stage_circuits[k], options.model, options.kernelizer,
                                       options.prune_T, p.stage_options[k]));
  }
  return p;
}

}  // namespace hiersim

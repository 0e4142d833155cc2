#include "hiersim/executor.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <unordered_map>

#include "hiersim/errors.hpp"

namespace hiersim {

std::vector<int> QubitMapping::logical_of_physical() const {
  std::vector<int> inv(phys_of_logical.size(), -1);
  for (size_t l = 0; l < phys_of_logical.size(); ++l) inv.at(phys_of_logical[l]) = static_cast<int>(l);
  return inv;
}

uint64_t QubitMapping::to_physical(uint64_t logical_index) const {
  uint64_t p = 0;
  for (size_t l = 0; l < phys_of_logical.size(); ++l)
    if ((logical_index >> l) & 1) p |= uint64_t{1} << phys_of_logical[l];
  return p;
}

QubitMask QubitMapping::physical_mask(QubitMask logical) const { return to_physical(logical); }

QubitMask QubitMapping::local_logical(const ShardLayout &layout) const {
  QubitMask m = 0;
  for (size_t l = 0; l < phys_of_logical.size(); ++l)
    if (phys_of_logical[l] < layout.L) m |= QubitMask{1} << l;
  return m;
}

void validate_mapping(const QubitMapping &mapping, const ShardLayout &layout) {
  if (mapping.n() != layout.n())
    throw Error(ErrorKind::InvalidArgument, "mapping size does not match the layout");
  std::vector<char> seen(mapping.n(), 0);
  for (int p : mapping.phys_of_logical) {
    if (p < 0 || p >= mapping.n() || seen[p]++)
      throw Error(ErrorKind::InvalidArgument, "mapping is not a permutation");
  }
}

std::vector<QubitMapping> stage_mappings(const StagingPlan &plan) {
  const MachineShape &sh = plan.shape;
  const int n = sh.n();
  std::vector<QubitMapping> out;
  std::vector<int> prev_class(n, -1);
  QubitMapping prev;
  for (const Stage &st : plan.stages) {
    const std::vector<int> *members[3] = {&st.partition.local, &st.partition.regional,
                                          &st.partition.global};
    const int base[3] = {0, sh.L, sh.L + sh.R};
    const int width[3] = {sh.L, sh.R, sh.G};
    QubitMapping cur;
    cur.phys_of_logical.assign(n, -1);
    std::vector<int> cls(n, -1);
    for (int c = 0; c < 3; ++c) {
      std::vector<char> used(width[c], 0);
      std::vector<int> newcomers;
      for (int q : *members[c]) {
        cls[q] = c;
        if (!out.empty() && prev_class[q] == c) {
          cur.phys_of_logical[q] = prev.phys_of_logical[q];
          used[prev.phys_of_logical[q] - base[c]] = 1;
        } else {
          newcomers.push_back(q);
        }
      }
      int slot = 0;
      for (int q : newcomers) {
        while (used[slot]) ++slot;
        used[slot] = 1;
        cur.phys_of_logical[q] = base[c] + slot;
      }
    }
    validate_mapping(cur, ShardLayout::from(sh));
    out.push_back(cur);
    prev = cur;
    prev_class = cls;
  }
  return out;
}

void CommStats::add(const CommDelta &d) {
  intra_node_amplitudes_moved += d.intra_node_amplitudes_moved;
  inter_node_amplitudes_moved += d.inter_node_amplitudes_moved;
  local_swaps += d.local_swaps;
  global_swaps += d.global_swaps;
  per_stage.push_back(d);
}

namespace {

// For every new physical bit, the old physical bit holding the same logical qubit.
std::vector<int> source_bits(const QubitMapping &from, const QubitMapping &to) {
  std::vector<int> src(to.n());
  for (int l = 0; l < to.n(); ++l) src[to.phys_of_logical[l]] = from.phys_of_logical[l];
  return src;
}

uint64_t gather(uint64_t index, const std::vector<int> &src) {
  uint64_t out = 0;
  for (size_t p = 0; p < src.size(); ++p) out |= ((index >> p) & 1) << src[p];
  return out;
}

QubitMask class_logical(const QubitMapping &m, int lo, int hi) {
  QubitMask out = 0;
  for (int l = 0; l < m.n(); ++l)
    if (m.phys_of_logical[l] >= lo && m.phys_of_logical[l] < hi) out |= QubitMask{1} << l;
  return out;
}

CommDelta count_moves(const std::vector<int> &src, const QubitMapping &from, const QubitMapping &to,
                      const ShardLayout &layout) {
  CommDelta d;
  const int n = layout.n();
  const int node_shift = layout.L + layout.R;
  for (uint64_t j = 0; j < (uint64_t{1} << n); ++j) {
    const uint64_t s = gather(j, src);
    if ((s >> node_shift) != (j >> node_shift)) ++d.inter_node_amplitudes_moved;
    else if (s != j) ++d.intra_node_amplitudes_moved;
  }
  const int L = layout.L;
  d.local_swaps = std::popcount(class_logical(to, 0, L) & ~class_logical(from, 0, L));
  d.global_swaps = std::popcount(class_logical(to, node_shift, n) & ~class_logical(from, node_shift, n));
  return d;
}

}  // namespace

CommDelta remap_counts(const QubitMapping &from, const QubitMapping &to, const ShardLayout &layout) {
  validate_mapping(from, layout);
  validate_mapping(to, layout);
  return count_moves(source_bits(from, to), from, to, layout);
}

CommDelta remap(StateVector &physical, const QubitMapping &from, const QubitMapping &to,
                const ShardLayout &layout, QubitMask *pending_flips) {
  validate_mapping(from, layout);
  validate_mapping(to, layout);
  if (physical.n != layout.n())
    throw Error(ErrorKind::DimensionMismatch, "state size does not match the layout");
  const std::vector<int> src = source_bits(from, to);
  const CommDelta d = count_moves(src, from, to, layout);
  if (from.phys_of_logical == to.phys_of_logical) return d;
  const uint64_t len = uint64_t{1} << layout.n();
  std::vector<cplx> out(len);
  for (uint64_t j = 0; j < len; ++j) out[j] = physical.amplitudes[gather(j, src)];
  physical.amplitudes = std::move(out);
  if (pending_flips) {
    QubitMask moved = 0;
    for (int p = 0; p < layout.n(); ++p)
      if ((*pending_flips >> src[p]) & 1) moved |= QubitMask{1} << p;
    *pending_flips = moved;
  }
  return d;
}

namespace {

struct PreparedGate {
  Matrix u;
  std::vector<int> logical;  // operands
  std::vector<int> phys;     // operand physical positions
  std::vector<QubitRole> role;
};

PreparedGate prepare(const Gate &g, const QubitMapping &mapping) {
  PreparedGate p;
  p.u = unitary_of(g);
  p.logical = g.qubits;
  for (int q : g.qubits) {
    p.phys.push_back(mapping.phys_of_logical.at(q));
    p.role.push_back(qubit_role(g, q));
  }
  return p;
}

struct Piece {
  Matrix u;
  std::vector<int> positions;  // operand positions inside the frame
};

// Sub-block of the gate for fixed values of the operands outside `frame`
// (`known_value(phys)` gives their current values). Updates nothing; the
// caller applies `flipped`.
template <class KnownValue, class FramePos>
SpecializedGate specialize_prepared(const PreparedGate &g, KnownValue known_value, FramePos frame_pos,
                                    std::vector<int> *frame_positions) {
  const int k = static_cast<int>(g.phys.size());
  std::vector<int> keep, fixed;
  for (int j = 0; j < k; ++j) (frame_pos(g.phys[j]) >= 0 ? keep : fixed).push_back(j);
  uint64_t c = 0, a = 0;
  SpecializedGate out;
  for (size_t t = 0; t < fixed.size(); ++t) {
    const int j = fixed[t];
    if (g.role[j] == QubitRole::General)
      throw Error(ErrorKind::NotInsular,
                  "qubit " + std::to_string(g.logical[j]) + " is not insular for this gate");
    if (known_value(g.phys[j])) c |= uint64_t{1} << j;
    if (g.role[j] == QubitRole::AntiDiagonal) {
      a |= uint64_t{1} << j;
      out.flipped |= QubitMask{1} << g.phys[j];
    }
  }
  const int r = static_cast<int>(keep.size());
  Matrix v(1 << r);
  for (int ro = 0; ro < (1 << r); ++ro)
    for (int ci = 0; ci < (1 << r); ++ci)
      v(ro, ci) = g.u(static_cast<int>(deposit_bits(ro, keep) | (c ^ a)),
                      static_cast<int>(deposit_bits(ci, keep) | c));
  if (r == 0) {
    out.kind = SpecializedGate::PhaseFactor;
    out.phase = v(0, 0);
    return out;
  }
  for (int j : keep) {
    out.qubits.push_back(g.logical[j]);
    if (frame_positions) frame_positions->push_back(frame_pos(g.phys[j]));
  }
  if (v.is_identity(0.0)) {
    out.kind = SpecializedGate::Identity;
    return out;
  }
  out.kind = SpecializedGate::SmallerGate;
  out.u = std::move(v);
  return out;
}

}  // namespace

SpecializedGate specialize_gate(const Gate &gate, const std::map<int, int> &known_bits,
                                const QubitMapping &mapping) {
  const PreparedGate g = prepare(gate, mapping);
  return specialize_prepared(
      g, [&](int p) { return known_bits.at(p) != 0; },
      [&](int p) { return known_bits.count(p) ? -1 : p; }, nullptr);
}

std::vector<int> kernel_operand_qubits(const Kernel &kernel, const Circuit &seq) {
  std::map<int, const Gate *> by_id;
  for (const Gate &g : seq.gates) by_id[g.id] = &g;
  QubitMask m = 0;
  for (int id : kernel.gate_ids) m |= by_id.at(id)->qubit_mask();
  std::vector<int> out;
  for (; m; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

namespace {

// Applies `pieces` in order to every column of the identity on `width` bits.
Matrix product_on_frame(const std::vector<Piece> &pieces, int width, cplx phase) {
  const int dim = 1 << width;
  Matrix out(dim);
  std::vector<cplx> col(dim);
  for (int c = 0; c < dim; ++c) {
    std::fill(col.begin(), col.end(), cplx{});
    col[c] = phase;
    for (const Piece &p : pieces) apply_matrix(col.data(), width, p.u, p.positions);
    for (int r = 0; r < dim; ++r) out(r, c) = col[r];
  }
  return out;
}

}  // namespace

Matrix fuse_kernel_unitary(const Kernel &kernel, const Circuit &seq, int max_qubits) {
  const std::vector<int> qubits = kernel_operand_qubits(kernel, seq);
  const int width = static_cast<int>(qubits.size());
  if (width > max_qubits)
    throw Error(ErrorKind::SizeExceeded, "kernel spans " + std::to_string(width) + " qubits");
  std::map<int, const Gate *> by_id;
  for (const Gate &g : seq.gates) by_id[g.id] = &g;
  std::vector<Piece> pieces;
  for (int id : kernel.gate_ids) {
    const Gate &g = *by_id.at(id);
    Piece p{unitary_of(g), {}};
    for (int q : g.qubits)
      p.positions.push_back(static_cast<int>(std::lower_bound(qubits.begin(), qubits.end(), q) -
                                             qubits.begin()));
    pieces.push_back(std::move(p));
  }
  return product_on_frame(pieces, width, cplx{1.0, 0.0});
}

namespace {

// One kernel prepared for a stage: frame bits, the bits it reads as known,
// and specialized operators cached per known-bit pattern.
class PreparedKernel {
 public:
  PreparedKernel(const Kernel &kernel, const ExecuteContext &ctx) : kind_(kernel.kind), L_(ctx.layout.L) {
    std::map<int, const Gate *> by_id;
    for (const Gate &g : ctx.seq->gates) by_id[g.id] = &g;
    QubitMask local_ops = 0, active = 0, all_ops = 0;
    for (int id : kernel.gate_ids) {
      gates_.push_back(prepare(*by_id.at(id), ctx.mapping));
      const PreparedGate &g = gates_.back();
      for (size_t j = 0; j < g.phys.size(); ++j) {
        const QubitMask bit = QubitMask{1} << g.phys[j];
        all_ops |= bit;
        if (g.phys[j] < L_) {
          local_ops |= bit;
          if (g.role[j] == QubitRole::General) active |= bit;
        } else if (g.role[j] == QubitRole::General) {
          throw Error(ErrorKind::LocalityViolation,
                      "qubit " + std::to_string(g.logical[j]) + " is non-local in gate " +
                          std::to_string(id));
        }
        if (g.role[j] == QubitRole::AntiDiagonal) anti_ops_ ^= bit;  // two flips cancel
      }
    }
    QubitMask frame = 0;
    if (kind_ == KernelKind::Fusion) {
      frame = local_ops;
    } else {
      const int target = std::min(ctx.q_max_shared, L_);
      frame = active | ((QubitMask{1} << std::min(ctx.ls_qubits, L_)) - 1);
      for (int p = 0; p < L_ && std::popcount(frame) < target; ++p) frame |= QubitMask{1} << p;
    }
    for (QubitMask f = frame; f; f &= f - 1) frame_.push_back(std::countr_zero(f));
    for (QubitMask f = all_ops & ~frame; f; f &= f - 1) known_.push_back(std::countr_zero(f));
    for (QubitMask f = ((QubitMask{1} << L_) - 1) & ~frame; f; f &= f - 1)
      batch_bits_.push_back(std::countr_zero(f));
    frame_index_.assign(64, -1);
    for (size_t i = 0; i < frame_.size(); ++i) frame_index_[frame_[i]] = static_cast<int>(i);
    flips_ = anti_ops_ & ~frame;
  }

  // Non-local bits inverted by the kernel.
  QubitMask nonlocal_flips() const { return flips_ & ~((QubitMask{1} << L_) - 1); }

  // `true_index`: true value of every bit outside the frame (shard bits
  // shifted by L, batch bits in place).
  void run(std::vector<cplx> &shard, uint64_t shard_true_bits) {
    const uint64_t high = shard_true_bits << L_;
    if (kind_ == KernelKind::Fusion) {
      const Ops &ops = ops_for(extract_bits(high, known_));
      apply_matrix(shard.data(), L_, ops.fused, frame_);
      return;
    }
    const int w = static_cast<int>(frame_.size());
    const uint64_t batch_len = uint64_t{1} << w;
    const uint64_t nbatches = uint64_t{1} << batch_bits_.size();
    const QubitMask local_flip = flips_ & ((QubitMask{1} << L_) - 1);
    std::vector<cplx> out(local_flip ? shard.size() : 0);
    std::vector<cplx> buf(batch_len);
    std::vector<uint64_t> off(batch_len);
    for (uint64_t t = 0; t < batch_len; ++t) off[t] = deposit_bits(t, frame_);
    for (uint64_t b = 0; b < nbatches; ++b) {
      const uint64_t base = deposit_bits(b, batch_bits_);
      const Ops &ops = ops_for(extract_bits(high | base, known_));
      for (uint64_t t = 0; t < batch_len; ++t) buf[t] = shard[base | off[t]];
      for (const Piece &p : ops.pieces) apply_matrix(buf.data(), w, p.u, p.positions);
      if (ops.phase != cplx{1.0, 0.0})
        for (auto &x : buf) x *= ops.phase;
      cplx *dst = local_flip ? out.data() : shard.data();
      const uint64_t wbase = base ^ local_flip;
      for (uint64_t t = 0; t < batch_len; ++t) dst[wbase | off[t]] = buf[t];
    }
    if (local_flip) shard = std::move(out);
  }

 private:
  struct Ops {
    std::vector<Piece> pieces;
    cplx phase{1.0, 0.0};
    Matrix fused;
  };

  const Ops &ops_for(uint64_t pattern) {
    auto it = cache_.find(pattern);
    if (it != cache_.end()) return it->second;
    Ops ops;
    QubitMask value = deposit_bits(pattern, known_);
    for (const PreparedGate &g : gates_) {
      Piece piece;
      SpecializedGate s = specialize_prepared(
          g, [&](int p) { return ((value >> p) & 1) != 0; },
          [&](int p) { return frame_index_[p]; }, &piece.positions);
      value ^= s.flipped;
      if (s.kind == SpecializedGate::PhaseFactor) ops.phase *= s.phase;
      if (s.kind != SpecializedGate::SmallerGate) continue;
      piece.u = std::move(s.u);
      ops.pieces.push_back(std::move(piece));
    }
    if (kind_ == KernelKind::Fusion)
      ops.fused = product_on_frame(ops.pieces, static_cast<int>(frame_.size()), ops.phase);
    return cache_.emplace(pattern, std::move(ops)).first->second;
  }

  KernelKind kind_;
  int L_;
  std::vector<PreparedGate> gates_;
  std::vector<int> frame_, known_, batch_bits_, frame_index_;
  QubitMask anti_ops_ = 0, flips_ = 0;
  std::unordered_map<uint64_t, Ops> cache_;
};

}  // namespace

QubitMask execute_kernel(std::vector<cplx> &shard, const Kernel &kernel, const ExecuteContext &ctx,
                         uint64_t shard_bits) {
  if (shard.size() != ctx.layout.shard_size())
    throw Error(ErrorKind::DimensionMismatch, "shard length must be 2^L");
  validate_mapping(ctx.mapping, ctx.layout);
  PreparedKernel pk(kernel, ctx);
  pk.run(shard, shard_bits);
  return pk.nonlocal_flips();
}

Circuit stage_circuit(const Circuit &circuit, const Stage &stage) {
  Circuit out;
  out.num_qubits = circuit.num_qubits;
  for (int id : stage.gate_ids) out.gates.push_back(circuit.gates.at(id));
  return out;
}

KernelizeOptions stage_kernelize_options(const QubitMapping &mapping, const ShardLayout &layout,
                                         const CostModel &model, KernelizeOptions base) {
  base.local_mask = mapping.local_logical(layout);
  std::vector<int> ls;
  const std::vector<int> inv = mapping.logical_of_physical();
  for (int p = 0; p < std::min(model.ls_qubits, layout.L); ++p) ls.push_back(inv[p]);
  std::sort(ls.begin(), ls.end());
  base.ls_logical = ls;
  return base;
}

SimulationResult simulate(const Circuit &circuit, const StagingPlan &staging,
                          const std::vector<KernelPlan> &kernels, const CostModel &model,
                          const StateVector &input, const SimulateOptions &options) {
  const ShardLayout layout = ShardLayout::from(staging.shape);
  const int n = circuit.num_qubits;
  if (input.n != n || layout.n() != n)
    throw Error(ErrorKind::DimensionMismatch, "state, circuit and machine sizes differ");
  if (kernels.size() != staging.stages.size())
    throw Error(ErrorKind::PlanViolation, "one kernel plan per stage is required");
  if (staging.stages.empty()) throw Error(ErrorKind::PlanViolation, "plan has no stages");
  if (options.check_plans) {
    const std::string problem = check_staging_plan(staging, circuit, staging.shape);
    if (!problem.empty()) throw Error(ErrorKind::PlanViolation, problem);
  }
  const std::vector<QubitMapping> mappings = stage_mappings(staging);
  std::vector<Circuit> seqs;
  for (const Stage &st : staging.stages) seqs.push_back(stage_circuit(circuit, st));

  if (options.check_plans) {
    for (size_t k = 0; k < kernels.size(); ++k) {
      const auto v = verify_plan(kernels[k], seqs[k], model,
                                 stage_kernelize_options(mappings[k], layout, model));
      if (!v.empty())
        throw Error(ErrorKind::PlanViolation,
                    "stage " + std::to_string(k) + ": " + v.front().message);
    }
  }

  SimulationResult res;
  StateVector phys;
  phys.n = n;
  phys.amplitudes.resize(input.amplitudes.size());
  for (uint64_t l = 0; l < input.amplitudes.size(); ++l)
    phys.amplitudes[mappings[0].to_physical(l)] = input.amplitudes[l];

  QubitMask pending = 0;  // stored index i holds the amplitude of true index i ^ pending
  const QubitMask local_bits = layout.local_bits();
  const uint64_t nshards = layout.shard_count();
  const uint64_t shard_len = layout.shard_size();
  res.comm.add(CommDelta{});
  for (size_t k = 0; k < staging.stages.size(); ++k) {
    if (k > 0) res.comm.add(remap(phys, mappings[k - 1], mappings[k], layout, &pending));
    if (pending & local_bits) {
      const QubitMask pl = pending & local_bits;
      std::vector<cplx> out(phys.amplitudes.size());
      for (uint64_t i = 0; i < out.size(); ++i) out[i] = phys.amplitudes[i ^ pl];
      phys.amplitudes = std::move(out);
      pending &= ~local_bits;
    }
    const ExecuteContext ctx{&seqs[k], mappings[k], layout, model.q_max_shared, model.ls_qubits};
    std::vector<PreparedKernel> prepared;
    std::vector<QubitMask> start_flips;
    QubitMask p = pending;
    for (const Kernel &kern : kernels[k].kernels) {
      prepared.emplace_back(kern, ctx);
      start_flips.push_back(p);
      p ^= prepared.back().nonlocal_flips();
    }
    std::vector<cplx> shard(shard_len);
    for (uint64_t t = 0; t < nshards; ++t) {
      const uint64_t s = options.reverse_shards ? nshards - 1 - t : t;
      cplx *base = phys.amplitudes.data() + s * shard_len;
      std::copy(base, base + shard_len, shard.begin());
      for (size_t j = 0; j < prepared.size(); ++j)
        prepared[j].run(shard, s ^ (start_flips[j] >> layout.L));
      std::copy(shard.begin(), shard.end(), base);
    }
    pending = p;
  }

  res.state.n = n;
  res.state.amplitudes.resize(phys.amplitudes.size());
  const QubitMapping &last = mappings.back();
  for (uint64_t l = 0; l < res.state.amplitudes.size(); ++l)
    res.state.amplitudes[l] = phys.amplitudes[last.to_physical(l) ^ pending];
  return res;
}

}  // namespace hiersim

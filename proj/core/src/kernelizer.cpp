#include "hiersim/kernelizer.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

#include "hiersim/errors.hpp"

namespace hiersim {

std::string_view kernel_kind_name(KernelKind kind) {
  return kind == KernelKind::Fusion ? "fusion" : "shm";
}

CostModel CostModel::defaults() {
  CostModel m;
  m.q_max_fusion = 7;
  m.q_max_shared = 10;
  m.ls_qubits = 3;
  m.alpha = 0.8;
  for (int q = 1; q <= m.q_max_fusion; ++q) m.fusion_cost.push_back(std::ldexp(1.0, std::max(0, q - 5)));
  for (GateKind k : all_gate_kinds()) {
    const int a = gate_arity(k);
    m.gate_cost[static_cast<size_t>(k)] = a == 1 ? 0.05 : a == 2 ? 0.08 : 0.12;
  }
  return m;
}

double CostModel::gate(const Gate &g) const {
  double c = gate(g.kind);
  for (const Gate &a : g.attached) c += gate(a.kind);
  return c;
}

void CostModel::validate() const {
  if (q_max_fusion < 1 || static_cast<int>(fusion_cost.size()) != q_max_fusion)
    throw Error(ErrorKind::InvalidArgument, "fusion_cost must list q_max_fusion entries");
  for (size_t i = 0; i < fusion_cost.size(); ++i) {
    if (!(fusion_cost[i] >= 0)) throw Error(ErrorKind::InvalidArgument, "negative fusion cost");
    if (i > 0 && fusion_cost[i] < fusion_cost[i - 1])
      throw Error(ErrorKind::InvalidArgument, "fusion cost must be nondecreasing");
  }
  if (!(alpha >= 0)) throw Error(ErrorKind::InvalidArgument, "negative alpha");
  for (double c : gate_cost)
    if (!(c >= 0)) throw Error(ErrorKind::InvalidArgument, "negative gate cost");
  if (q_max_shared < 1 || ls_qubits < 0 || ls_qubits >= q_max_shared)
    throw Error(ErrorKind::InvalidArgument, "bad shared-memory limits");
}

int most_efficient_fusion_size(const CostModel &model) {
  int best = 1;
  for (int q = 2; q <= model.q_max_fusion; ++q)
    if (model.fusion(q) / q <= model.fusion(best) / best) best = q;
  return best;
}

int KernelDescriptor::size() const {
  return std::popcount(size_mask) + extra_size + exclusive_size;
}

double kernel_cost(const KernelDescriptor &k, const CostModel &model) {
  const int size = k.size();
  if (k.kind == KernelKind::Fusion) {
    if (size > model.q_max_fusion)
      throw Error(ErrorKind::SizeExceeded, "fusion kernel with " + std::to_string(size) + " qubits");
    return model.fusion(size);
  }
  if (size > model.q_max_shared)
    throw Error(ErrorKind::SizeExceeded,
                "shared-memory kernel with " + std::to_string(size) + " qubits");
  return model.alpha + k.gate_cost;
}

SequenceInfo analyze_sequence(const Circuit &seq, const CostModel &model,
                              const KernelizeOptions &options) {
  SequenceInfo info;
  info.num_qubits = seq.num_qubits;
  QubitMask non_commuting = 0;
  for (const Gate &g : seq.gates)
    for (int q : g.qubits)
      if (qubit_role(g, q) != QubitRole::Diagonal) non_commuting |= QubitMask{1} << q;
  for (const Gate &g : seq.gates) {
    const QubitMask all = g.qubit_mask();
    info.ids.push_back(g.id);
    info.qubits.push_back(all);
    info.order.push_back(options.relax_commuting ? (all & non_commuting) : all);
    info.local.push_back(all & options.local_mask);
    info.active.push_back(non_insular_mask(g) & options.local_mask);
    info.shm_cost.push_back(model.gate(g));
  }
  if (options.ls_logical) {
    for (int q : *options.ls_logical) info.ls_mask |= QubitMask{1} << q;
  } else {
    info.ls_extra = model.ls_qubits;
  }
  return info;
}

DependencyEdges ordering_dependencies(const Circuit &seq, const KernelizeOptions &options) {
  const SequenceInfo info = analyze_sequence(seq, CostModel::defaults(), options);
  DependencyEdges edges = dependencies_over(info.order);
  for (auto &[a, b] : edges) {
    a = info.ids[a];
    b = info.ids[b];
  }
  return edges;
}

bool satisfies_kernel_constraint_masks(const std::vector<int> &positions,
                                       const std::vector<QubitMask> &qubits) {
  const int m = static_cast<int>(qubits.size());
  std::vector<char> in(m, 0);
  for (int p : positions) in.at(p) = 1;
  std::vector<QubitMask> suffix(m + 1, 0);
  for (int j = m - 1; j >= 0; --j) suffix[j] = suffix[j + 1] | (in[j] ? qubits[j] : 0);
  const QubitMask total = suffix[0];
  QubitMask prefix = 0;
  for (int j = 0; j < m; ++j) {
    if (in[j]) {
      prefix |= qubits[j];
      continue;
    }
    if (qubits[j] & prefix & suffix[j + 1]) return false;
    if ((qubits[j] & prefix) && prefix != total) return false;
  }
  return true;
}

bool satisfies_kernel_constraint(const std::vector<int> &kernel_ids, const Circuit &seq) {
  std::vector<QubitMask> qubits;
  std::map<int, int> pos_of;
  for (size_t i = 0; i < seq.gates.size(); ++i) {
    qubits.push_back(seq.gates[i].qubit_mask());
    pos_of[seq.gates[i].id] = static_cast<int>(i);
  }
  std::vector<int> positions;
  for (int id : kernel_ids) positions.push_back(pos_of.at(id));
  return satisfies_kernel_constraint_masks(positions, qubits);
}

namespace {

// Shared rule: a kernel not receiving the gate loses the gate's qubits from its
// extensible set; an all-extensible kernel becomes restricted once touched.
inline void restrict_on(bool &all, QubitMask &ext, QubitMask kernel_qubits, QubitMask gate) {
  if (all) {
    if (kernel_qubits & gate) {
      all = false;
      ext = kernel_qubits & ~gate;
    }
  } else {
    ext &= ~gate;
  }
}

}  // namespace

void update_extensible(std::vector<KernelDescriptor> &kernels, QubitMask gate_qubits, int host,
                       KernelKind new_kind) {
  for (int j = 0; j < static_cast<int>(kernels.size()); ++j) {
    if (j == host) continue;
    KernelDescriptor &k = kernels[j];
    const bool was_all = k.ext_all;
    restrict_on(k.ext_all, k.ext, k.qubits, gate_qubits);
    if (was_all && !k.ext_all) {
      k.ext_insular = ~gate_qubits;
    } else if (!was_all) {
      k.ext_insular &= ~gate_qubits;
    }
  }
  if (host < 0) {
    KernelDescriptor k;
    k.kind = new_kind;
    k.qubits = gate_qubits;
    kernels.push_back(k);
  } else {
    kernels.at(host).qubits |= gate_qubits;
  }
}

QubitMask extensible_oracle(const std::vector<int> &kernel_positions, int i,
                            const std::vector<QubitMask> &qubits, int n) {
  std::vector<QubitMask> prefix(qubits.begin(), qubits.begin() + i);
  std::vector<int> members;
  for (int p : kernel_positions)
    if (p < i) members.push_back(p);
  members.push_back(i);
  prefix.push_back(0);
  QubitMask out = 0;
  for (int q = 0; q < n; ++q) {
    prefix[i] = QubitMask{1} << q;
    if (satisfies_kernel_constraint_masks(members, prefix)) out |= QubitMask{1} << q;
  }
  return out;
}

PackResult greedy_pack(const std::vector<KernelDescriptor> &kernels, const CostModel &model) {
  PackResult res;
  const int target = most_efficient_fusion_size(model);
  std::vector<int> fusion, shm;
  for (int i = 0; i < static_cast<int>(kernels.size()); ++i)
    (kernels[i].kind == KernelKind::Fusion ? fusion : shm).push_back(i);
  auto by_size = [&](int a, int b) { return kernels[a].size() > kernels[b].size(); };
  std::stable_sort(fusion.begin(), fusion.end(), by_size);
  std::stable_sort(shm.begin(), shm.end(), by_size);

  auto merged = [](const KernelDescriptor &a, const KernelDescriptor &b) {
    KernelDescriptor m = a;
    m.qubits |= b.qubits;
    m.active |= b.active;
    m.size_mask |= b.size_mask;
    m.extra_size = std::max(a.extra_size, b.extra_size);
    m.exclusive_size += b.exclusive_size;
    m.gate_cost += b.gate_cost;
    return m;
  };

  const size_t first_shm_bin = [&] {
    for (int i : fusion) {
      const KernelDescriptor &d = kernels[i];
      bool placed = false;
      for (size_t b = 0; b < res.kernels.size() && !placed; ++b) {
        const KernelDescriptor u = merged(res.kernels[b], d);
        const int us = u.size();
        if (us > model.q_max_fusion) continue;
        if (us > target && us != res.kernels[b].size()) continue;
        if (model.fusion(us) > model.fusion(res.kernels[b].size()) + model.fusion(d.size()) + 1e-12)
          continue;
        res.kernels[b] = u;
        res.groups[b].push_back(i);
        placed = true;
      }
      if (!placed) {
        res.kernels.push_back(d);
        res.groups.push_back({i});
      }
    }
    return res.kernels.size();
  }();
  for (int i : shm) {
    const KernelDescriptor &d = kernels[i];
    bool placed = false;
    for (size_t b = first_shm_bin; b < res.kernels.size() && !placed; ++b) {
      const KernelDescriptor u = merged(res.kernels[b], d);
      if (u.size() > model.q_max_shared) continue;
      res.kernels[b] = u;
      res.groups[b].push_back(i);
      placed = true;
    }
    if (!placed) {
      res.kernels.push_back(d);
      res.groups.push_back({i});
    }
  }
  for (const auto &k : res.kernels) res.total_cost += kernel_cost(k, model);
  return res;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SegmentCost {
  double cost = kInf;
  KernelKind kind = KernelKind::Fusion;
};

int shm_size(QubitMask active, const SequenceInfo &info) {
  return std::popcount(active | info.ls_mask) + info.ls_extra;
}

SegmentCost best_kind(QubitMask local, QubitMask active, double gates, const SequenceInfo &info,
                      const CostModel &model) {
  SegmentCost best;
  if (std::popcount(local) <= model.q_max_fusion) {
    best.cost = model.fusion(std::popcount(local));
    best.kind = KernelKind::Fusion;
  }
  if (shm_size(active, info) <= model.q_max_shared) {
    const double c = model.alpha + gates;
    if (c < best.cost) {
      best.cost = c;
      best.kind = KernelKind::SharedMemory;
    }
  }
  return best;
}

Kernel make_kernel(const std::vector<int> &positions, KernelKind kind, const SequenceInfo &info,
                   const CostModel &model) {
  Kernel k;
  k.kind = kind;
  QubitMask local = 0, active = 0;
  double gates = 0;
  for (int p : positions) {
    k.gate_ids.push_back(info.ids[p]);
    local |= info.local[p];
    active |= info.active[p];
    gates += info.shm_cost[p];
  }
  QubitMask counted = kind == KernelKind::Fusion ? local : (active | info.ls_mask);
  for (; counted; counted &= counted - 1) k.qubits.push_back(std::countr_zero(counted));
  k.cost = kind == KernelKind::Fusion ? model.fusion(std::popcount(local)) : model.alpha + gates;
  return k;
}

KernelPlan finish_plan(std::vector<Kernel> kernels) {
  KernelPlan plan;
  plan.kernels = std::move(kernels);
  for (const Kernel &k : plan.kernels) {
    plan.total_cost += k.cost;
    plan.realized_order.insert(plan.realized_order.end(), k.gate_ids.begin(), k.gate_ids.end());
  }
  return plan;
}

void check_single_gates(const SequenceInfo &info, const CostModel &model) {
  for (size_t i = 0; i < info.ids.size(); ++i)
    if (best_kind(info.local[i], info.active[i], info.shm_cost[i], info, model).cost == kInf)
      throw Error(ErrorKind::NoFeasibleSegmentation,
                  "gate " + std::to_string(info.ids[i]) + " fits neither kernel kind");
}

}  // namespace

KernelPlan ordered_kernelize(const Circuit &seq, const CostModel &model,
                             const KernelizeOptions &options) {
  model.validate();
  const SequenceInfo info = analyze_sequence(seq, model, options);
  const int m = static_cast<int>(info.ids.size());
  check_single_gates(info, model);
  std::vector<double> best(m + 1, kInf);
  std::vector<int> cut(m + 1, -1);
  std::vector<KernelKind> kind(m + 1, KernelKind::Fusion);
  best[0] = 0;
  for (int i = 0; i < m; ++i) {
    QubitMask local = 0, active = 0;
    double gates = 0;
    for (int j = i; j >= 0; --j) {
      local |= info.local[j];
      active |= info.active[j];
      gates += info.shm_cost[j];
      const SegmentCost seg = best_kind(local, active, gates, info, model);
      if (seg.cost == kInf) break;  // only grows as j decreases
      const double c = best[j] + seg.cost;
      if (c < best[i + 1] - 1e-12) {
        best[i + 1] = c;
        cut[i + 1] = j;
        kind[i + 1] = seg.kind;
      }
    }
  }
  std::vector<Kernel> kernels;
  for (int end = m; end > 0; end = cut[end]) {
    std::vector<int> positions(end - cut[end]);
    std::iota(positions.begin(), positions.end(), cut[end]);
    kernels.push_back(make_kernel(positions, kind[end], info, model));
  }
  std::reverse(kernels.begin(), kernels.end());
  return finish_plan(std::move(kernels));
}

KernelPlan greedy_fusion_kernelize(const Circuit &seq, const CostModel &model, int max_qubits,
                                   const KernelizeOptions &options) {
  model.validate();
  const SequenceInfo info = analyze_sequence(seq, model, options);
  const int cap = std::min(max_qubits, model.q_max_fusion);
  std::vector<Kernel> kernels;
  std::vector<int> cur;
  QubitMask cur_local = 0;
  for (int i = 0; i < static_cast<int>(info.ids.size()); ++i) {
    if (std::popcount(info.local[i]) > cap)
      throw Error(ErrorKind::NoFeasibleSegmentation,
                  "gate " + std::to_string(info.ids[i]) + " exceeds the packing limit");
    if (!cur.empty() && std::popcount(cur_local | info.local[i]) > cap) {
      kernels.push_back(make_kernel(cur, KernelKind::Fusion, info, model));
      cur.clear();
      cur_local = 0;
    }
    cur.push_back(i);
    cur_local |= info.local[i];
  }
  if (!cur.empty()) kernels.push_back(make_kernel(cur, KernelKind::Fusion, info, model));
  return finish_plan(std::move(kernels));
}

namespace {

// ---- extensible-set DP ----

struct OpenKernel {
  KernelKind kind;
  bool all;
  QubitMask ord;   // ordering qubits of the members
  QubitMask ext;   // extensible ordering qubits when !all
  QubitMask size;  // fusion: local qubits; shared memory: active qubits
  int label;       // position of the first member
  int dead = 0;    // size qubits no later gate touches, kept only as a count
};

enum class HistOp : uint8_t { New, Join, Merge, Close };

struct Hist {
  std::shared_ptr<const Hist> prev;
  HistOp op;
  int a, b;
};
using HistPtr = std::shared_ptr<const Hist>;

HistPtr record(HistPtr prev, HistOp op, int a, int b) {
  return std::make_shared<const Hist>(Hist{std::move(prev), op, a, b});
}

struct DpState {
  std::vector<OpenKernel> open;
  double value = 0;
  HistPtr hist;
};

// A successor state before deduplication; history entries are kept flat until
// the state is accepted.
struct Candidate {
  std::vector<OpenKernel> open;
  std::vector<Hist> steps;  // prev unused
  double value = 0;
  const DpState *from = nullptr;
};

using Key = std::vector<uint64_t>;

struct KeyHash {
  size_t operator()(const Key &k) const {
    uint64_t h = 0x9e3779b97f4a7c15ULL ^ k.size();
    for (uint64_t w : k) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdULL;
    }
    return static_cast<size_t>(h ^ (h >> 33));
  }
};

std::array<uint64_t, 3> words(const OpenKernel &k) {
  return {static_cast<uint64_t>(k.kind == KernelKind::SharedMemory) | (uint64_t{k.all} << 1) |
              (static_cast<uint64_t>(k.dead) << 2),
          k.all ? k.ord : k.ext, k.size};
}

void canonicalize(std::vector<OpenKernel> &open) {
  std::sort(open.begin(), open.end(), [](const OpenKernel &a, const OpenKernel &b) {
    const auto wa = words(a), wb = words(b);
    if (wa != wb) return wa < wb;
    return a.label < b.label;
  });
}

void key_into(const std::vector<OpenKernel> &open, Key &k) {
  k.clear();
  for (const auto &o : open) {
    const auto w = words(o);
    k.insert(k.end(), w.begin(), w.end());
  }
}

Key key_of(const std::vector<OpenKernel> &open) {
  Key k;
  key_into(open, k);
  return k;
}

class KernelDp {
 public:
  // States whose lower bound exceeds `upper_bound` are dropped; pass the cost
  // of any known plan to keep the search exact.
  KernelDp(const SequenceInfo &info, const CostModel &model, int prune_T,
           const KernelizeOptions &options, double upper_bound = kInf)
      : info_(info), model_(model), prune_T_(prune_T), options_(options),
        upper_bound_(upper_bound), future_(info.order.size() + 1, 0),
        dying_(info.order.size() + 1, 0), joinable_(info.order.size() + 1) {
    std::vector<QubitMask> touched(info.order.size() + 1, 0);
    QubitMask ordering = 0;
    for (int j = static_cast<int>(info.order.size()) - 1; j >= 0; --j) {
      future_[j] = future_[j + 1] | info.order[j];
      touched[j] = touched[j + 1] | info.qubits[j];
      ordering |= info.order[j];
    }
    // Ordering qubits are never shared by two all-extensible kernels, so once
    // untouched they can be counted instead of tracked.
    for (size_t j = 0; j < dying_.size(); ++j) dying_[j] = ordering & ~touched[j] & ~info.ls_mask;
  }

  KernelPlan run() {
    const int m = static_cast<int>(info_.ids.size());
    check_single_gates(info_, model_);
    std::vector<DpState> cur(1);
    Key key;
    for (int i = 0; i < m; ++i) {
      std::vector<DpState> next;
      std::unordered_map<Key, size_t, KeyHash> index;
      for (const DpState &st : cur) {
        expand(st, i, [&](const Candidate &c) {
          if (options_.check_invariants) check_disjoint(c.open);
          if (lower_bound(c.value, c.open) > upper_bound_ + 1e-9) return;
          key_into(c.open, key);
          auto it = index.find(key);
          if (it == index.end()) {
            index.emplace(key, next.size());
            next.push_back(materialize(c));
          } else if (c.value < next[it->second].value - 1e-12) {
            next[it->second] = materialize(c);
          }
        });
      }
      if (next.empty())
        throw Error(ErrorKind::NoFeasibleSegmentation,
                    "no kernel can take gate " + std::to_string(info_.ids[i]));
      if (prune_T_ > 0 && static_cast<int>(next.size()) >= prune_T_)
        prune(next, std::max(1, prune_T_ / 2));
      cur = std::move(next);
    }
    // Final choice: cheapest after packing residual kernels; ties prefer fewer
    // open kernels, then the smaller fingerprint.
    size_t best = 0;
    double best_total = kInf;
    for (size_t s = 0; s < cur.size(); ++s) {
      const double total = cur[s].value + residual_cost(cur[s]);
      if (best_total == kInf || total < best_total - 1e-12 ||
          (total <= best_total + 1e-12 && better_tie(cur[s], cur[best]))) {
        best = s;
        best_total = total;
      }
    }
    return rebuild(cur[best]);
  }

 private:
  static DpState materialize(const Candidate &c) {
    DpState ns;
    ns.open = c.open;
    ns.value = c.value;
    HistPtr h = c.from->hist;
    for (const Hist &e : c.steps) h = record(std::move(h), e.op, e.a, e.b);
    ns.hist = std::move(h);
    return ns;
  }

  bool fits(const OpenKernel &k) const {
    if (k.kind == KernelKind::Fusion) return std::popcount(k.size) + k.dead <= model_.q_max_fusion;
    return shm_size(k.size, info_) + k.dead <= model_.q_max_shared;
  }

  // Drops qubits no later gate touches. False when the kernel can never take
  // another gate: its extensible set empties before any later gate fits in it.
  bool trim(OpenKernel &k, int from) const {
    const QubitMask gone = k.size & dying_[from];
    k.size &= ~gone;
    k.dead += std::popcount(gone);
    if (k.all) {
      k.ord &= future_[from];
      return true;
    }
    k.ext &= future_[from];
    if (k.ext == 0) return false;
    auto &memo = joinable_[from];
    auto it = memo.find(k.ext);
    if (it != memo.end()) return it->second;
    QubitMask e = k.ext;
    bool ok = false;
    for (int j = from; j < static_cast<int>(info_.order.size()) && e && !ok; ++j) {
      if ((info_.order[j] & ~e) == 0) ok = true;
      e &= ~info_.order[j];
    }
    memo.emplace(k.ext, ok);
    return ok;
  }

  double close_cost(const OpenKernel &k) const {
    return k.kind == KernelKind::Fusion ? model_.fusion(std::popcount(k.size) + k.dead)
                                        : model_.alpha;
  }

  QubitMask contribution(KernelKind kind, int i) const {
    return kind == KernelKind::Fusion ? info_.local[i] : info_.active[i];
  }

  // hosts[0..nh): indices of st.open merged into the host (nh = 0: new kernel).
  template <class Emit>
  void apply(const DpState &st, int i, const int *hosts, int nh, KernelKind new_kind,
             Emit &emit) const {
    const QubitMask o = info_.order[i];
    Candidate &c = scratch_;
    c.open.clear();
    c.steps.clear();
    c.value = st.value;
    c.from = &st;
    OpenKernel host;
    if (nh == 0) {
      host = {new_kind, true, o, 0, contribution(new_kind, i), i, 0};
      c.steps.push_back({nullptr, HistOp::New, i, static_cast<int>(new_kind)});
    } else {
      host = st.open[hosts[0]];
      for (int j = 1; j < nh; ++j) {
        const OpenKernel &other = st.open[hosts[j]];
        host.ord |= other.ord;
        host.size |= other.size;
        host.dead += other.dead;
        const int into = std::min(host.label, other.label);
        const int from = std::max(host.label, other.label);
        c.steps.push_back({nullptr, HistOp::Merge, from, into});
        host.label = into;
      }
      host.size |= contribution(host.kind, i);
      if (host.all) host.ord |= o;
      c.steps.push_back({nullptr, HistOp::Join, i, host.label});
    }
    if (!fits(host)) return;
    if (host.kind == KernelKind::SharedMemory) c.value += info_.shm_cost[i];
    for (int j = 0; j < static_cast<int>(st.open.size()); ++j) {
      if (std::find(hosts, hosts + nh, j) != hosts + nh) continue;
      OpenKernel k = st.open[j];
      restrict_on(k.all, k.ext, k.ord, o);
      if (!trim(k, i + 1)) {
        c.value += close_cost(k);
        c.steps.push_back({nullptr, HistOp::Close, k.label, 0});
        continue;
      }
      c.open.push_back(k);
    }
    if (trim(host, i + 1)) {
      c.open.push_back(host);
    } else {
      c.value += close_cost(host);
      c.steps.push_back({nullptr, HistOp::Close, host.label, 0});
    }
    canonicalize(c.open);
    emit(static_cast<const Candidate &>(c));
  }

  template <class Emit>
  void expand(const DpState &st, int i, Emit &&emit) const {
    const QubitMask o = info_.order[i];
    const int k = static_cast<int>(st.open.size());

    if (options_.subsumption) {
      for (int j = 0; j < k; ++j) {
        const OpenKernel &K = st.open[j];
        if (K.kind != KernelKind::Fusion) continue;
        const bool extensible = K.all ? (o & ~K.ord) == 0 : (o & ~K.ext) == 0;
        if (extensible && (info_.local[i] & ~K.size) == 0 && K.dead == 0) {
          apply(st, i, &j, 1, KernelKind::Fusion, emit);
          return;
        }
      }
    }

    std::array<int, kMaxQubits> touched;
    int t = 0;
    for (int j = 0; j < k; ++j) {
      const OpenKernel &K = st.open[j];
      if (K.all) {
        apply(st, i, &j, 1, K.kind, emit);
        if (K.ord & o) touched[t++] = j;
      } else if ((o & ~K.ext) == 0) {
        apply(st, i, &j, 1, K.kind, emit);
      }
    }
    // Joining several touched all-extensible kernels merges them.
    std::array<int, kMaxQubits> hs;
    for (uint64_t sub = 1; sub < (uint64_t{1} << t); ++sub) {
      if (std::popcount(sub) < 2) continue;
      int nh = 0;
      for (int b = 0; b < t; ++b)
        if (sub >> b & 1) hs[nh++] = touched[b];
      const KernelKind kind = st.open[hs[0]].kind;
      bool same = true;
      for (int j = 0; j < nh; ++j) same = same && st.open[hs[j]].kind == kind;
      if (same) apply(st, i, hs.data(), nh, kind, emit);
    }
    apply(st, i, nullptr, 0, KernelKind::Fusion, emit);
    apply(st, i, nullptr, 0, KernelKind::SharedMemory, emit);
  }

  std::vector<KernelDescriptor> packable(const DpState &st, std::vector<int> *which) const {
    std::vector<KernelDescriptor> out;
    for (int j = 0; j < static_cast<int>(st.open.size()); ++j) {
      const OpenKernel &k = st.open[j];
      if (!k.all) continue;
      KernelDescriptor d;
      d.kind = k.kind;
      d.qubits = k.ord;
      d.exclusive_size = k.dead;
      if (k.kind == KernelKind::Fusion) {
        d.size_mask = k.size;
      } else {
        d.size_mask = k.size | info_.ls_mask;
        d.extra_size = info_.ls_extra;
      }
      out.push_back(d);
      if (which) which->push_back(j);
    }
    return out;
  }

  // Restricted kernels close at least at their current cost; all-extensible
  // ones may be packed together, so count one cheapest kernel per kind.
  double lower_bound(double value, const std::vector<OpenKernel> &open) const {
    double c = value;
    bool fusion = false, shm = false;
    for (const auto &k : open) {
      if (!k.all) c += close_cost(k);
      else (k.kind == KernelKind::Fusion ? fusion : shm) = true;
    }
    if (fusion) c += model_.fusion(1);
    if (shm) c += model_.alpha;
    return c;
  }

  double residual_cost(const DpState &st) const {
    double c = 0;
    for (const auto &k : st.open)
      if (!k.all) c += close_cost(k);
    const auto desc = packable(st, nullptr);
    if (!desc.empty()) c += greedy_pack(desc, model_).total_cost;
    return c;
  }

  bool better_tie(const DpState &a, const DpState &b) const {
    if (a.open.size() != b.open.size()) return a.open.size() < b.open.size();
    return key_of(a.open) < key_of(b.open);
  }

  void prune(std::vector<DpState> &states, int keep) const {
    std::vector<double> score(states.size());
    for (size_t s = 0; s < states.size(); ++s) score[s] = states[s].value + residual_cost(states[s]);
    std::vector<size_t> idx(states.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
      if (std::abs(score[a] - score[b]) > 1e-12) return score[a] < score[b];
      return better_tie(states[a], states[b]);
    });
    std::vector<DpState> kept;
    for (int r = 0; r < keep && r < static_cast<int>(idx.size()); ++r)
      kept.push_back(std::move(states[idx[r]]));
    states = std::move(kept);
  }

  void check_disjoint(const std::vector<OpenKernel> &open) const {
    QubitMask seen = 0;
    for (const auto &k : open) {
      const QubitMask s = k.all ? k.ord : k.ext;
      if (seen & s) throw Error(ErrorKind::InvalidArgument, "extensible sets overlap");
      seen |= s;
    }
  }

  KernelPlan rebuild(const DpState &st) const {
    std::vector<const Hist *> chain;
    for (const Hist *h = st.hist.get(); h; h = h->prev.get()) chain.push_back(h);
    std::reverse(chain.begin(), chain.end());
    std::map<int, std::vector<int>> members;
    std::map<int, KernelKind> kinds;
    for (const Hist *h : chain) {
      switch (h->op) {
        case HistOp::New:
          members[h->a] = {h->a};
          kinds[h->a] = static_cast<KernelKind>(h->b);
          break;
        case HistOp::Join: members.at(h->b).push_back(h->a); break;
        case HistOp::Merge: {
          auto &into = members.at(h->b);
          auto &from = members.at(h->a);
          into.insert(into.end(), from.begin(), from.end());
          members.erase(h->a);
          kinds.erase(h->a);
          break;
        }
        case HistOp::Close: break;
      }
    }
    std::vector<int> which;
    const auto desc = packable(st, &which);
    if (!desc.empty()) {
      const PackResult packed = greedy_pack(desc, model_);
      for (const auto &group : packed.groups) {
        int into = st.open[which[group[0]]].label;
        for (int g : group) into = std::min(into, st.open[which[g]].label);
        for (int g : group) {
          const int from = st.open[which[g]].label;
          if (from == into) continue;
          auto &dst = members.at(into);
          auto &src = members.at(from);
          dst.insert(dst.end(), src.begin(), src.end());
          members.erase(from);
          kinds.erase(from);
        }
      }
    }
    std::vector<std::vector<int>> groups;
    std::vector<KernelKind> group_kind;
    for (auto &[label, mem] : members) {
      std::sort(mem.begin(), mem.end());
      groups.push_back(mem);
      group_kind.push_back(kinds.at(label));
    }
    const std::vector<int> order = kernel_order(groups);
    std::vector<Kernel> kernels;
    for (int g : order) kernels.push_back(make_kernel(groups[g], group_kind[g], info_, model_));
    return finish_plan(std::move(kernels));
  }

  // Topological order of the kernel quotient graph; ready kernels are taken
  // by their earliest member.
  std::vector<int> kernel_order(const std::vector<std::vector<int>> &groups) const {
    const int m = static_cast<int>(info_.ids.size());
    const int nk = static_cast<int>(groups.size());
    std::vector<int> group_of(m, -1);
    for (int g = 0; g < nk; ++g)
      for (int p : groups[g]) group_of[p] = g;
    std::vector<std::set<int>> succ(nk);
    std::vector<int> indeg(nk, 0);
    for (const auto &[a, b] : dependencies_over(info_.order)) {
      const int ga = group_of[a], gb = group_of[b];
      if (ga != gb && succ[ga].insert(gb).second) ++indeg[gb];
    }
    std::priority_queue<std::pair<int, int>, std::vector<std::pair<int, int>>, std::greater<>> ready;
    for (int g = 0; g < nk; ++g)
      if (indeg[g] == 0) ready.push({groups[g].front(), g});
    std::vector<int> order;
    while (!ready.empty()) {
      const int g = ready.top().second;
      ready.pop();
      order.push_back(g);
      for (int s : succ[g])
        if (--indeg[s] == 0) ready.push({groups[s].front(), s});
    }
    if (static_cast<int>(order.size()) != nk)
      throw Error(ErrorKind::InvalidArgument, "kernel dependency graph has a cycle");
    return order;
  }

  const SequenceInfo &info_;
  const CostModel &model_;
  int prune_T_;
  KernelizeOptions options_;
  double upper_bound_;
  std::vector<QubitMask> future_;  // ordering qubits of gates j..m-1
  std::vector<QubitMask> dying_;   // ordering qubits no gate j..m-1 touches
  mutable std::vector<std::unordered_map<QubitMask, bool>> joinable_;
  mutable Candidate scratch_;
};

}  // namespace

KernelPlan kernelize(const Circuit &seq, const CostModel &model, int prune_T,
                     const KernelizeOptions &options) {
  model.validate();
  if (prune_T < 0 || prune_T == 1)
    throw Error(ErrorKind::InvalidArgument, "prune threshold must be >= 2 or unlimited");
  if (seq.gates.empty()) return {};
  const SequenceInfo info = analyze_sequence(seq, model, options);
  if (prune_T != kNoPruning) return KernelDp(info, model, prune_T, options).run();
  // Unpruned: bound the search by the better of two cheap plans.
  const double ub = std::min(ordered_kernelize(seq, model, options).total_cost,
                             KernelDp(info, model, 500, options).run().total_cost);
  return KernelDp(info, model, kNoPruning, options, ub).run();
}

std::vector<Violation> verify_plan(const KernelPlan &plan, const Circuit &seq,
                                   const CostModel &model, const KernelizeOptions &options) {
  std::vector<Violation> out;
  try {
    const SequenceInfo info = analyze_sequence(seq, model, options);
    const int m = static_cast<int>(info.ids.size());
    std::map<int, int> pos_of;
    for (int p = 0; p < m; ++p) pos_of[info.ids[p]] = p;
    std::vector<int> seen(m, 0);
    std::vector<int> concat;
    double total = 0;
    for (int k = 0; k < static_cast<int>(plan.kernels.size()); ++k) {
      const Kernel &K = plan.kernels[k];
      std::vector<int> positions;
      bool known = true;
      for (int id : K.gate_ids) {
        concat.push_back(id);
        auto it = pos_of.find(id);
        if (it == pos_of.end()) {
          out.push_back({ViolationKind::UnknownGate, k, "gate id " + std::to_string(id)});
          known = false;
          continue;
        }
        if (seen[it->second]++)
          out.push_back({ViolationKind::DuplicateGate, k, "gate id " + std::to_string(id)});
        positions.push_back(it->second);
      }
      if (!known) continue;
      std::sort(positions.begin(), positions.end());
      positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
      if (!satisfies_kernel_constraint_masks(positions, info.order))
        out.push_back({ViolationKind::KernelConstraint, k, "kernel violates the kernel constraint"});
      QubitMask local = 0, active = 0;
      double gates = 0;
      for (int p : positions) {
        local |= info.local[p];
        active |= info.active[p];
        gates += info.shm_cost[p];
      }
      double expect;
      if (K.kind == KernelKind::Fusion) {
        const int size = std::popcount(local);
        if (size > model.q_max_fusion) {
          out.push_back({ViolationKind::SizeLimit, k, "fusion kernel too large"});
          continue;
        }
        expect = model.fusion(size);
      } else {
        if (shm_size(active, info) > model.q_max_shared) {
          out.push_back({ViolationKind::SizeLimit, k, "shared-memory kernel too large"});
          continue;
        }
        expect = model.alpha + gates;
      }
      if (std::abs(expect - K.cost) > 1e-9 * std::max(1.0, std::abs(expect)))
        out.push_back({ViolationKind::CostMismatch, k,
                       "cost " + std::to_string(K.cost) + " expected " + std::to_string(expect)});
      total += expect;
    }
    for (int p = 0; p < m; ++p)
      if (!seen[p])
        out.push_back({ViolationKind::MissingGate, -1, "gate id " + std::to_string(info.ids[p])});
    if (std::abs(total - plan.total_cost) > 1e-9 * std::max(1.0, std::abs(total)))
      out.push_back({ViolationKind::CostMismatch, -1, "plan total does not match kernel costs"});
    if (plan.realized_order != concat)
      out.push_back({ViolationKind::OrderMismatch, -1,
                     "realized order is not the concatenation of the kernels"});
    if (out.empty()) {
      DependencyEdges deps = dependencies_over(info.order);
      for (auto &[a, b] : deps) {
        a = info.ids[a];
        b = info.ids[b];
      }
      if (!topologically_equivalent(concat, info.ids, deps))
        out.push_back({ViolationKind::NotTopological, -1,
                       "kernel concatenation breaks a gate dependency"});
    }
  } catch (const std::exception &e) {
    out.push_back({ViolationKind::NotTopological, -1, e.what()});
  }
  return out;
}

}  // namespace hiersim

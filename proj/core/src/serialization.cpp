#include "hiersim/serialization.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hiersim/errors.hpp"

namespace hiersim {

namespace {

template <class T>
T field(const json &j, const char *key) {
  if (!j.contains(key)) throw Error(ErrorKind::InvalidArgument, std::string("missing field ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad field ") + key + ": " + e.what());
  }
}

}  // namespace

json staging_plan_to_json(const StagingPlan &plan) {
  json stages = json::array();
  for (const Stage &s : plan.stages)
    stages.push_back({{"local", s.partition.local},
                      {"regional", s.partition.regional},
                      {"global", s.partition.global},
                      {"gates", s.gate_ids}});
  return {{"shape", {{"L", plan.shape.L}, {"R", plan.shape.R}, {"G", plan.shape.G}, {"c", plan.shape.c}}},
          {"cost", plan.total_cost},
          {"stages", stages},
          {"stats",
           {{"nodes", plan.stats.nodes},
            {"seconds", plan.stats.seconds},
            {"models", plan.stats.models_solved}}}};
}

StagingPlan staging_plan_from_json(const json &j) {
  StagingPlan p;
  const json shape = field<json>(j, "shape");
  p.shape.L = field<int>(shape, "L");
  p.shape.R = field<int>(shape, "R");
  p.shape.G = field<int>(shape, "G");
  p.shape.c = shape.value("c", 3.0);
  p.total_cost = j.contains("total_cost") ? field<double>(j, "total_cost") : field<double>(j, "cost");
  for (const json &s : field<json>(j, "stages")) {
    Stage st;
    st.partition.local = field<std::vector<int>>(s, "local");
    st.partition.regional = field<std::vector<int>>(s, "regional");
    st.partition.global = field<std::vector<int>>(s, "global");
    st.gate_ids = field<std::vector<int>>(s, "gates");
    p.stages.push_back(std::move(st));
  }
  if (j.contains("stats")) {
    const json &s = j["stats"];
    p.stats.nodes = s.value("nodes", 0LL);
    p.stats.seconds = s.value("seconds", 0.0);
    p.stats.models_solved = s.value("models", 0);
  }
  return p;
}

json kernel_plans_to_json(const std::vector<KernelPlan> &plans) {
  json stages = json::array();
  for (const KernelPlan &p : plans) {
    json ks = json::array();
    for (const Kernel &k : p.kernels)
      ks.push_back({{"kind", std::string(kernel_kind_name(k.kind))},
                    {"gates", k.gate_ids},
                    {"qubits", k.qubits},
                    {"cost", k.cost}});
    stages.push_back({{"total_cost", p.total_cost}, {"realized_order", p.realized_order}, {"kernels", ks}});
  }
  return {{"stages", stages}};
}

std::vector<KernelPlan> kernel_plans_from_json(const json &j) {
  std::vector<KernelPlan> out;
  for (const json &s : field<json>(j, "stages")) {
    KernelPlan p;
    p.total_cost = field<double>(s, "total_cost");
    p.realized_order = field<std::vector<int>>(s, "realized_order");
    for (const json &k : field<json>(s, "kernels")) {
      Kernel kern;
      const std::string kind = field<std::string>(k, "kind");
      if (kind == "fusion") kern.kind = KernelKind::Fusion;
      else if (kind == "shm") kern.kind = KernelKind::SharedMemory;
      else throw Error(ErrorKind::InvalidArgument, "unknown kernel kind " + kind);
      kern.gate_ids = field<std::vector<int>>(k, "gates");
      kern.qubits = field<std::vector<int>>(k, "qubits");
      kern.cost = field<double>(k, "cost");
      p.kernels.push_back(std::move(kern));
    }
    out.push_back(std::move(p));
  }
  return out;
}

json cost_model_to_json(const CostModel &model) {
  json gates = json::object();
  for (GateKind k : all_gate_kinds()) gates[std::string(gate_name(k))] = model.gate(k);
  return {{"fusion_cost", model.fusion_cost},
          {"alpha", model.alpha},
          {"q_max_fusion", model.q_max_fusion},
          {"q_max_shared", model.q_max_shared},
          {"ls_qubits", model.ls_qubits},
          {"gate_cost", gates}};
}

CostModel cost_model_from_json(const json &j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "cost model must be a JSON object");
  CostModel m = CostModel::defaults();
  try {
    if (j.contains("fusion_cost")) m.fusion_cost = j["fusion_cost"].get<std::vector<double>>();
    m.q_max_fusion = j.value("q_max_fusion", static_cast<int>(m.fusion_cost.size()));
    m.alpha = j.value("alpha", m.alpha);
    m.q_max_shared = j.value("q_max_shared", m.q_max_shared);
    m.ls_qubits = j.value("ls_qubits", m.ls_qubits);
    if (j.contains("gate_cost")) {
      const json &g = j["gate_cost"];
      for (int arity = 1; arity <= 3; ++arity) {
        const std::string key = std::to_string(arity);
        if (!g.contains(key)) continue;
        for (GateKind k : all_gate_kinds())
          if (gate_arity(k) == arity) m.gate_cost[static_cast<size_t>(k)] = g[key].get<double>();
      }
      for (auto it = g.begin(); it != g.end(); ++it) {
        if (it.key().size() == 1 && std::isdigit(static_cast<unsigned char>(it.key()[0]))) continue;
        std::string name = it.key();
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        const auto kind = gate_kind_from_name(name);
        if (!kind) throw Error(ErrorKind::InvalidArgument, "unknown gate in cost model: " + it.key());
        m.gate_cost[static_cast<size_t>(*kind)] = it.value().get<double>();
      }
    }
  } catch (const json::exception &e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad cost model: ") + e.what());
  }
  m.validate();
  return m;
}

json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw Error(ErrorKind::InvalidArgument, path + ": " + e.what());
  }
}

void write_json_file(const std::string &path, const json &j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path);
}

CostModel load_cost_model(const std::string &path) { return cost_model_from_json(read_json_file(path)); }

namespace {

uint64_t to_le(uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  uint64_t r = 0;
  for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xff) << (8 * (7 - b));
  return r;
}

}  // namespace

void write_state(const std::string &path, const StateVector &state, const std::vector<int> &mapping) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  for (const cplx &a : state.amplitudes) {
    for (double part : {a.real(), a.imag()}) {
      const uint64_t w = to_le(std::bit_cast<uint64_t>(part));
      out.write(reinterpret_cast<const char *>(&w), sizeof w);
    }
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path);
  std::vector<int> m = mapping;
  if (m.empty()) {
    m.resize(state.n);
    for (int q = 0; q < state.n; ++q) m[q] = q;
  }
  write_json_file(path + ".json", {{"n", state.n}, {"mapping", m}});
}

StateVector read_state(const std::string &path) {
  const json side = read_json_file(path + ".json");
  const int n = field<int>(side, "n");
  if (n < 0 || n > 40) throw Error(ErrorKind::InvalidArgument, "bad qubit count in sidecar");
  std::vector<int> mapping = side.value("mapping", std::vector<int>{});
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  StateVector raw;
  raw.n = n;
  raw.amplitudes.resize(uint64_t{1} << n);
  for (cplx &a : raw.amplitudes) {
    uint64_t w[2];
    in.read(reinterpret_cast<char *>(w), sizeof w);
    if (!in) throw Error(ErrorKind::IoError, path + ": file shorter than 2^n amplitudes");
    a = {std::bit_cast<double>(to_le(w[0])), std::bit_cast<double>(to_le(w[1]))};
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorKind::IoError, path + ": trailing data after 2^n amplitudes");
  bool identity = true;
  for (size_t q = 0; q < mapping.size(); ++q) identity = identity && mapping[q] == static_cast<int>(q);
  if (mapping.empty() || identity) return raw;
  if (static_cast<int>(mapping.size()) != n)
    throw Error(ErrorKind::InvalidArgument, "sidecar mapping has the wrong length");
  QubitMapping qm{mapping};
  validate_mapping(qm, ShardLayout{n, 0, 0});
  StateVector logical;
  logical.n = n;
  logical.amplitudes.resize(raw.amplitudes.size());
  for (uint64_t l = 0; l < logical.amplitudes.size(); ++l)
    logical.amplitudes[l] = raw.amplitudes[qm.to_physical(l)];
  return logical;
}

json comm_stats_to_json(const CommStats &stats) {
  auto one = [](uint64_t intra, uint64_t inter, long long ls, long long gs) {
    return json{{"intra_node_amplitudes", intra},
                {"inter_node_amplitudes", inter},
                {"local_swaps", ls},
                {"global_swaps", gs}};
  };
  json per = json::array();
  for (const CommDelta &d : stats.per_stage)
    per.push_back(one(d.intra_node_amplitudes_moved, d.inter_node_amplitudes_moved, d.local_swaps,
                      d.global_swaps));
  return {{"total", one(stats.intra_node_amplitudes_moved, stats.inter_node_amplitudes_moved,
                        stats.local_swaps, stats.global_swaps)},
          {"per_stage", per}};
}

std::string comm_stats_to_csv(const CommStats &stats) {
  std::ostringstream os;
  os << "stage,intra_node_amplitudes,inter_node_amplitudes,local_swaps,global_swaps\n";
  for (size_t k = 0; k < stats.per_stage.size(); ++k) {
    const CommDelta &d = stats.per_stage[k];
    os << k << ',' << d.intra_node_amplitudes_moved << ',' << d.inter_node_amplitudes_moved << ','
       << d.local_swaps << ',' << d.global_swaps << '\n';
  }
  return os.str();
}

}  // namespace hiersim

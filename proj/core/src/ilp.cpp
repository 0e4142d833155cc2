#include "hiersim/ilp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "hiersim/errors.hpp"

namespace hiersim {

void validate_shape(const MachineShape &shape, int n) {
  if (shape.L < 1) throw Error(ErrorKind::InvalidArgument, "L must be at least 1");
  if (shape.R < 0 || shape.G < 0) throw Error(ErrorKind::InvalidArgument, "R and G must be >= 0");
  if (!(shape.c >= 1.0)) throw Error(ErrorKind::InvalidArgument, "c must be >= 1");
  if (shape.n() != n)
    throw Error(ErrorKind::InvalidArgument, "L + R + G = " + std::to_string(shape.n()) +
                                                " but the circuit has " + std::to_string(n) +
                                                " qubits");
}

VarFamily IlpModel::family(int v) const {
  if (v < n * s) return VarFamily::A;
  if (v < 2 * n * s) return VarFamily::B;
  if (v < 2 * n * s + m * s) return VarFamily::F;
  if (v < 2 * n * s + m * s + n * (s - 1)) return VarFamily::S;
  return VarFamily::T;
}

std::pair<int, int> IlpModel::coordinates(int v) const {
  switch (family(v)) {
    case VarFamily::A: return {v / s, v % s};
    case VarFamily::B: v -= n * s; return {v / s, v % s};
    case VarFamily::F: v -= 2 * n * s; return {v / s, v % s};
    case VarFamily::S: v -= 2 * n * s + m * s; return {v / (s - 1), v % (s - 1)};
    case VarFamily::T: v -= 2 * n * s + m * s + n * (s - 1); return {v / (s - 1), v % (s - 1)};
  }
  return {0, 0};
}

std::string IlpModel::var_name(int v) const {
  static const char *prefix[] = {"A", "B", "F", "S", "T"};
  const auto [row, k] = coordinates(v);
  return std::string(prefix[static_cast<int>(family(v))]) + "_" + std::to_string(row) + "_" +
         std::to_string(k);
}

int IlpModel::count(VarFamily fam) const {
  switch (fam) {
    case VarFamily::A:
    case VarFamily::B: return n * s;
    case VarFamily::F: return m * s;
    case VarFamily::S:
    case VarFamily::T: return n * (s - 1);
  }
  return 0;
}

IlpModel build_ilp(const Circuit &circuit, const MachineShape &shape, int s) {
  validate_circuit(circuit);
  validate_shape(shape, circuit.num_qubits);
  if (s < 1) throw Error(ErrorKind::InvalidArgument, "stage count must be >= 1");
  IlpModel M;
  M.n = circuit.num_qubits;
  M.m = static_cast<int>(circuit.gates.size());
  M.s = s;
  M.shape = shape;

  std::vector<std::vector<int>> ni(M.m);
  for (int g = 0; g < M.m; ++g) {
    ni[g] = non_insular_qubits(circuit.gates[g]);
    if (static_cast<int>(ni[g].size()) > shape.L)
      throw Error(ErrorKind::InfeasibleShape, "gate " + std::to_string(g) + " has " +
                                                  std::to_string(ni[g].size()) +
                                                  " non-insular qubits but L = " +
                                                  std::to_string(shape.L));
  }

  M.objective.assign(M.num_vars(), 0.0);
  for (int q = 0; q < M.n; ++q)
    for (int k = 0; k + 1 < s; ++k) {
      M.objective[M.s_var(q, k)] = 1.0;
      M.objective[M.t(q, k)] = shape.c;
    }

  auto add = [&](std::string name, std::vector<std::pair<int, int>> terms, Sense sense, int rhs) {
    M.constraints.push_back({std::move(name), std::move(terms), sense, rhs});
  };
  auto tag = [](const char *fam, int a, int k) {
    return std::string(fam) + "_" + std::to_string(a) + "_" + std::to_string(k);
  };

  for (int q = 0; q < M.n; ++q)
    for (int k = 0; k + 1 < s; ++k) {
      add(tag("c1", q, k), {{M.a(q, k + 1), 1}, {M.a(q, k), -1}, {M.s_var(q, k), -1}},
          Sense::LessEqual, 0);
      add(tag("cdeft", q, k), {{M.b(q, k + 1), 1}, {M.b(q, k), -1}, {M.t(q, k), -1}},
          Sense::LessEqual, 0);
    }
  for (int g = 0; g < M.m; ++g)
    for (int k = 0; k + 1 < s; ++k)
      add(tag("c2", g, k), {{M.f(g, k), 1}, {M.f(g, k + 1), -1}}, Sense::LessEqual, 0);
  for (int g = 0; g < M.m; ++g)
    for (int q : ni[g])
      for (int k = 0; k < s; ++k) {
        std::vector<std::pair<int, int>> terms = {{M.f(g, k), 1}};
        if (k > 0) terms.push_back({M.f(g, k - 1), -1});
        terms.push_back({M.a(q, k), -1});
        add("c3_" + std::to_string(g) + "_" + std::to_string(q) + "_" + std::to_string(k),
            std::move(terms), Sense::LessEqual, 0);
      }
  std::vector<QubitMask> masks;
  for (const Gate &g : circuit.gates) masks.push_back(g.qubit_mask());
  for (const auto &[g1, g2] : dependencies_over(masks))
    for (int k = 0; k < s; ++k)
      add("c4_" + std::to_string(g1) + "_" + std::to_string(g2) + "_" + std::to_string(k),
          {{M.f(g2, k), 1}, {M.f(g1, k), -1}}, Sense::LessEqual, 0);
  for (int g = 0; g < M.m; ++g)
    add("c5_" + std::to_string(g), {{M.f(g, s - 1), 1}}, Sense::Equal, 1);
  for (int q = 0; q < M.n; ++q)
    for (int k = 0; k < s; ++k)
      add(tag("cag", q, k), {{M.a(q, k), 1}, {M.b(q, k), 1}}, Sense::LessEqual, 1);
  for (int k = 0; k < s; ++k) {
    std::vector<std::pair<int, int>> local, global;
    for (int q = 0; q < M.n; ++q) {
      local.push_back({M.a(q, k), 1});
      global.push_back({M.b(q, k), 1});
    }
    add("c6_local_" + std::to_string(k), std::move(local), Sense::Equal, shape.L);
    add("c6_global_" + std::to_string(k), std::move(global), Sense::Equal, shape.G);
  }
  return M;
}

std::string to_lp_format(const IlpModel &M) {
  std::ostringstream os;
  os.precision(17);
  os << "\\ staging model: n=" << M.n << " m=" << M.m << " s=" << M.s << "\n";
  os << "Minimize\n obj:";
  bool any = false;
  for (int v = 0; v < M.num_vars(); ++v) {
    if (M.objective[v] == 0) continue;
    os << (any ? " + " : " ") << M.objective[v] << " " << M.var_name(v);
    any = true;
  }
  if (!any) os << " 0 " << M.var_name(0);
  os << "\nSubject To\n";
  for (const auto &c : M.constraints) {
    os << " " << c.name << ":";
    bool first = true;
    for (const auto &[v, a] : c.terms) {
      if (first) {
        os << (a < 0 ? " -" : " ");
      } else {
        os << (a < 0 ? " - " : " + ");
      }
      if (std::abs(a) != 1) os << std::abs(a) << " ";
      os << M.var_name(v);
      first = false;
    }
    os << (c.sense == Sense::LessEqual ? " <= " : c.sense == Sense::Equal ? " = " : " >= ")
       << c.rhs << "\n";
  }
  os << "Binaries\n";
  for (int v = 0; v < M.num_vars(); ++v) os << " " << M.var_name(v) << "\n";
  os << "End\n";
  return os.str();
}

bool satisfies_model(const IlpModel &M, const std::vector<uint8_t> &x) {
  if (static_cast<int>(x.size()) != M.num_vars()) return false;
  for (const auto &c : M.constraints) {
    long lhs = 0;
    for (const auto &[v, a] : c.terms) lhs += static_cast<long>(a) * x[v];
    if (c.sense == Sense::LessEqual && lhs > c.rhs) return false;
    if (c.sense == Sense::Equal && lhs != c.rhs) return false;
    if (c.sense == Sense::GreaterEqual && lhs < c.rhs) return false;
  }
  return true;
}

double objective_value(const IlpModel &M, const std::vector<uint8_t> &x) {
  double acc = 0;
  for (int v = 0; v < M.num_vars(); ++v)
    if (x[v]) acc += M.objective[v];
  return acc;
}

namespace {

constexpr double kCutoffEps = 1e-9;

class BranchAndBound {
 public:
  BranchAndBound(const IlpModel &M, const SolveBudget &budget) : M_(M), budget_(budget) {
    const int nv = M.num_vars();
    value_.assign(nv, -1);
    var_rows_.resize(nv);
    for (const auto &c : M.constraints) {
      if (c.sense != Sense::GreaterEqual) add_row(c.terms, 1, c.rhs);
      if (c.sense != Sense::LessEqual) add_row(c.terms, -1, -c.rhs);
    }
    for (int v = 0; v < nv; ++v)
      if (M.objective[v] != 0) obj_vars_.push_back(v);
    build_order();
    queued_.assign(rows_.size(), 0);
  }

  IlpResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    start_ = t0;
    for (size_t r = 0; r < rows_.size(); ++r) enqueue(static_cast<int>(r));
    search(0);
    IlpResult res;
    res.stats.nodes = nodes_;
    res.stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.has_incumbent = have_incumbent_;
    if (have_incumbent_) {
      res.assignment = best_;
      res.objective = best_obj_;
    }
    if (exceeded_) {
      res.status = SolveStatus::BudgetExceeded;
    } else {
      res.status = have_incumbent_ ? SolveStatus::Feasible : SolveStatus::Infeasible;
    }
    return res;
  }

 private:
  struct Row {
    int begin, end;
    int rhs;
    int minact;
    int maxabs;
  };

  void add_row(const std::vector<std::pair<int, int>> &terms, int sign, int rhs) {
    Row r;
    r.begin = static_cast<int>(coef_.size());
    r.rhs = rhs;
    r.minact = 0;
    r.maxabs = 0;
    const int id = static_cast<int>(rows_.size());
    for (const auto &[v, a0] : terms) {
      const int a = sign * a0;
      if (a == 0) continue;
      var_.push_back(v);
      coef_.push_back(a);
      if (a < 0) r.minact += a;
      r.maxabs = std::max(r.maxabs, std::abs(a));
      var_rows_[v].push_back({id, a});
    }
    r.end = static_cast<int>(coef_.size());
    rows_.push_back(r);
  }

  void build_order() {
    const int n = M_.n, m = M_.m, s = M_.s;
    auto push_family = [&](auto var_of, int rows) {
      for (int k = 0; k < s; ++k)
        for (int i = 0; i < rows; ++i) order_.push_back(var_of(i, k));
    };
    auto a = [&](int q, int k) { return M_.a(q, k); };
    auto b = [&](int q, int k) { return M_.b(q, k); };
    auto f = [&](int g, int k) { return M_.f(g, k); };
    if (budget_.order == BranchOrder::LocalsFirst) {
      push_family(a, n);
      push_family(f, m);
      push_family(b, n);
    } else {
      push_family(f, m);
      push_family(a, n);
      push_family(b, n);
    }
    for (int k = 0; k + 1 < s; ++k)
      for (int q = 0; q < n; ++q) {
        order_.push_back(M_.s_var(q, k));
        order_.push_back(M_.t(q, k));
      }
  }

  // First value tried: keep locals/globals where they were, run gates early,
  // avoid paying for moves.
  int preferred_value(int v) const {
    switch (M_.family(v)) {
      case VarFamily::A:
      case VarFamily::B: {
        const auto [q, k] = M_.coordinates(v);
        if (k == 0) return 1;
        const int prev = M_.family(v) == VarFamily::A ? M_.a(q, k - 1) : M_.b(q, k - 1);
        return value_[prev] >= 0 ? value_[prev] : 1;
      }
      case VarFamily::F: return 1;
      default: return 0;
    }
  }

  void enqueue(int r) {
    if (!queued_[r]) {
      queued_[r] = 1;
      queue_.push_back(r);
    }
  }

  void fix(int v, int val) {
    value_[v] = static_cast<int8_t>(val);
    trail_.push_back(v);
    for (const auto &[r, a] : var_rows_[v]) {
      int delta = 0;
      if (a > 0 && val == 1) delta = a;
      if (a < 0 && val == 0) delta = -a;
      if (delta) {
        rows_[r].minact += delta;
        enqueue(r);
      }
    }
    if (val == 1) obj_fixed_ += M_.objective[v];
  }

  void undo(size_t mark) {
    while (trail_.size() > mark) {
      const int v = trail_.back();
      trail_.pop_back();
      const int val = value_[v];
      for (const auto &[r, a] : var_rows_[v]) {
        if (a > 0 && val == 1) rows_[r].minact -= a;
        if (a < 0 && val == 0) rows_[r].minact += a;
      }
      if (val == 1) obj_fixed_ -= M_.objective[v];
      value_[v] = -1;
    }
  }

  void clear_queue() {
    for (int r : queue_) queued_[r] = 0;
    queue_.clear();
  }

  bool propagate() {
    for (;;) {
      while (!queue_.empty()) {
        const int r = queue_.back();
        queue_.pop_back();
        queued_[r] = 0;
        const Row &row = rows_[r];
        const int slack = row.rhs - row.minact;
        if (slack < 0) {
          clear_queue();
          return false;
        }
        if (slack >= row.maxabs) continue;
        for (int i = row.begin; i < row.end; ++i) {
          const int v = var_[i];
          if (value_[v] >= 0) continue;
          const int a = coef_[i];
          if (a > 0 && a > slack) fix(v, 0);
          else if (a < 0 && -a > slack) fix(v, 1);
        }
      }
      if (!have_incumbent_) return true;
      const double room = best_obj_ - kCutoffEps - obj_fixed_;
      if (room < 0) return false;
      if (turnover_bound() > best_obj_ - kCutoffEps) return false;
      bool changed = false;
      for (int v : obj_vars_)
        if (value_[v] < 0 && M_.objective[v] > room) {
          fix(v, 0);
          changed = true;
        }
      if (!changed) return true;
    }
  }

  // Stage k+1 holds exactly L locals (G globals); any of them that cannot also
  // be local (global) at stage k is new. Bounds the unfixed S/T sums.
  double turnover_bound() const {
    double extra = 0;
    for (int k = 0; k + 1 < M_.s; ++k) {
      int keep_a = 0, keep_b = 0, paid_s = 0, paid_t = 0;
      for (int q = 0; q < M_.n; ++q) {
        keep_a += value_[M_.a(q, k)] != 0 && value_[M_.a(q, k + 1)] != 0;
        keep_b += value_[M_.b(q, k)] != 0 && value_[M_.b(q, k + 1)] != 0;
        paid_s += value_[M_.s_var(q, k)] == 1;
        paid_t += value_[M_.t(q, k)] == 1;
      }
      extra += std::max(0, M_.shape.L - keep_a - paid_s);
      extra += M_.shape.c * std::max(0, M_.shape.G - keep_b - paid_t);
    }
    return obj_fixed_ + extra;
  }

  bool out_of_budget() {
    if (budget_.max_nodes > 0 && nodes_ >= budget_.max_nodes) return true;
    if (budget_.max_seconds > 0 && (nodes_ & 1023) == 0) {
      const double el =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      if (el > budget_.max_seconds) return true;
    }
    return false;
  }

  void search(size_t pos) {
    if (!propagate()) return;
    if (out_of_budget()) {
      exceeded_ = true;
      return;
    }
    ++nodes_;
    while (pos < order_.size() && value_[order_[pos]] >= 0) ++pos;
    if (pos == order_.size()) {
      if (!have_incumbent_ || obj_fixed_ < best_obj_ - kCutoffEps) {
        have_incumbent_ = true;
        best_obj_ = obj_fixed_;
        best_.assign(value_.begin(), value_.end());
      }
      return;
    }
    const int v = order_[pos];
    const int first = preferred_value(v);
    for (int val : {first, 1 - first}) {
      const size_t mark = trail_.size();
      fix(v, val);
      search(pos + 1);
      undo(mark);
      clear_queue();
      if (exceeded_) return;
    }
  }

  const IlpModel &M_;
  SolveBudget budget_;
  std::vector<Row> rows_;
  std::vector<int> var_, coef_;
  std::vector<std::vector<std::pair<int, int>>> var_rows_;
  std::vector<int8_t> value_;
  std::vector<int> trail_;
  std::vector<int> queue_;
  std::vector<char> queued_;
  std::vector<int> obj_vars_;
  std::vector<int> order_;
  double obj_fixed_ = 0;
  bool have_incumbent_ = false;
  double best_obj_ = std::numeric_limits<double>::infinity();
  std::vector<uint8_t> best_;
  long long nodes_ = 0;
  bool exceeded_ = false;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

IlpResult solve_ilp(const IlpModel &model, const SolveBudget &budget) {
  return BranchAndBound(model, budget).run();
}

}  // namespace hiersim

#include "hiersim/qasm.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>

#include "hiersim/errors.hpp"

namespace hiersim {
namespace {

enum class Tok { Ident, Number, String, Symbol, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  double value = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.type = Tok::Ident;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        t.text += advance();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      t.type = Tok::Number;
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
        t.text += advance();
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        t.text += advance();
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) t.text += advance();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          t.text += advance();
      }
      char *end = nullptr;
      t.value = std::strtod(t.text.c_str(), &end);
      if (end != t.text.c_str() + t.text.size())
        throw ParseError(t.line, t.col, "malformed number '" + t.text + "'");
      return t;
    }
    if (c == '"') {
      t.type = Tok::String;
      advance();
      while (pos_ < src_.size() && src_[pos_] != '"') t.text += advance();
      if (pos_ >= src_.size()) throw ParseError(t.line, t.col, "unterminated string");
      advance();
      return t;
    }
    t.type = Tok::Symbol;
    t.text = std::string(1, advance());
    if (t.text == "-" && pos_ < src_.size() && src_[pos_] == '>') t.text += advance();
    if (t.text == "=" && pos_ < src_.size() && src_[pos_] == '=') t.text += advance();
    return t;
  }

 private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

struct Alias {
  const char *name;
  GateKind kind;
  int params;
};

constexpr Alias kAliases[] = {
    {"u1", GateKind::P, 1},   {"cu1", GateKind::CP, 1}, {"cphase", GateKind::CP, 1},
    {"u", GateKind::U3, 3},   {"u2", GateKind::U3, 2},  {"cu3", GateKind::CU, 3},
    {"cnot", GateKind::CX, 0}, {"toffoli", GateKind::CCX, 0},
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { tok_ = lex_.next(); }

  Circuit run() {
    while (tok_.type != Tok::End) statement();
    if (reg_size_ < 0) throw ParseError(tok_.line, tok_.col, "no qreg declared");
    Circuit c;
    c.num_qubits = reg_size_;
    c.gates = std::move(gates_);
    return c;
  }

 private:
  [[noreturn]] void fail(const Token &t, const std::string &msg) {
    throw ParseError(t.line, t.col, msg);
  }

  void bump() { tok_ = lex_.next(); }

  bool is_symbol(const char *s) const { return tok_.type == Tok::Symbol && tok_.text == s; }

  void expect_symbol(const char *s) {
    if (!is_symbol(s)) fail(tok_, std::string("expected '") + s + "'");
    bump();
  }

  std::string expect_ident() {
    if (tok_.type != Tok::Ident) fail(tok_, "expected identifier");
    std::string s = tok_.text;
    bump();
    return s;
  }

  int expect_int() {
    if (tok_.type != Tok::Number || tok_.value != std::floor(tok_.value) || tok_.value < 0)
      fail(tok_, "expected non-negative integer");
    const int v = static_cast<int>(tok_.value);
    bump();
    return v;
  }

  void statement() {
    const Token head = tok_;
    if (head.type != Tok::Ident) fail(head, "expected statement");
    const std::string word = head.text;
    if (word == "OPENQASM") {
      bump();
      if (tok_.type != Tok::Number) fail(tok_, "expected version number");
      if (tok_.value != 2.0) fail(tok_, "only OpenQASM 2.0 is supported");
      bump();
      expect_symbol(";");
      return;
    }
    if (word == "include") {
      bump();
      if (tok_.type != Tok::String) fail(tok_, "expected file name string");
      bump();
      expect_symbol(";");
      return;
    }
    if (word == "qreg") {
      bump();
      if (reg_size_ >= 0) fail(head, "only one quantum register is supported");
      reg_name_ = expect_ident();
      expect_symbol("[");
      reg_size_ = expect_int();
      expect_symbol("]");
      expect_symbol(";");
      if (reg_size_ < 1 || reg_size_ > kMaxQubits)
        throw Error(ErrorKind::InvalidSize, "register size " + std::to_string(reg_size_));
      return;
    }
    if (word == "creg" || word == "measure" || word == "if" || word == "reset" ||
        word == "gate" || word == "opaque")
      throw Error(ErrorKind::UnsupportedGate, word);
    if (word == "barrier") {
      bump();
      while (!is_symbol(";")) {
        if (tok_.type == Tok::End) fail(tok_, "unterminated barrier");
        bump();
      }
      bump();
      return;
    }
    gate_statement();
  }

  void gate_statement() {
    const Token head = tok_;
    const std::string name = expect_ident();
    std::optional<GateKind> kind = gate_kind_from_name(name);
    int nparams = kind ? gate_param_count(*kind) : 0;
    const char *alias = nullptr;
    if (!kind && name != "id") {
      for (const Alias &a : kAliases)
        if (name == a.name) {
          kind = a.kind;
          nparams = a.params;
          alias = a.name;
        }
      if (!kind) throw Error(ErrorKind::UnsupportedGate, name);
    }
    std::vector<double> params;
    if (is_symbol("(")) {
      bump();
      if (!is_symbol(")")) {
        params.push_back(expr());
        while (is_symbol(",")) {
          bump();
          params.push_back(expr());
        }
      }
      expect_symbol(")");
    }
    if (!kind) {  // identity
      args();
      expect_symbol(";");
      return;
    }
    // qiskit-style cu carries four parameters; cu3 carries three.
    if (*kind == GateKind::CU && !alias && params.size() == 3) nparams = 3;
    if (static_cast<int>(params.size()) != nparams)
      fail(head, name + " expects " + std::to_string(nparams) + " parameter(s)");
    if (alias && std::string_view(alias) == "u2")
      params = {std::numbers::pi / 2, params[0], params[1]};
    if (*kind == GateKind::CU && params.size() == 3) params.push_back(0.0);

    std::vector<std::optional<int>> operands = args();
    expect_symbol(";");
    const int arity = gate_arity(*kind);
    if (static_cast<int>(operands.size()) != arity)
      fail(head, name + " expects " + std::to_string(arity) + " operand(s)");
    bool broadcast = false;
    for (const auto &o : operands) broadcast = broadcast || !o;
    if (broadcast) {
      if (arity != 1) throw Error(ErrorKind::QubitOutOfRange, "register broadcast on " + name);
      for (int q = 0; q < reg_size_; ++q) push(*kind, {q}, params);
      return;
    }
    std::vector<int> qs;
    for (const auto &o : operands) qs.push_back(*o);
    push(*kind, std::move(qs), params);
  }

  void push(GateKind kind, std::vector<int> qs, const std::vector<double> &params) {
    Gate g = make_gate(kind, std::move(qs), params);
    validate_gate(g, reg_size_);
    g.id = static_cast<int>(gates_.size());
    gates_.push_back(std::move(g));
  }

  // Operand list; nullopt stands for the whole register.
  std::vector<std::optional<int>> args() {
    std::vector<std::optional<int>> out;
    if (is_symbol(";")) return out;
    out.push_back(arg());
    while (is_symbol(",")) {
      bump();
      out.push_back(arg());
    }
    return out;
  }

  std::optional<int> arg() {
    const Token t = tok_;
    const std::string reg = expect_ident();
    if (reg_size_ < 0 || reg != reg_name_) fail(t, "unknown register '" + reg + "'");
    if (!is_symbol("[")) return std::nullopt;
    bump();
    const int idx = expect_int();
    expect_symbol("]");
    if (idx >= reg_size_)
      throw Error(ErrorKind::QubitOutOfRange,
                  reg + "[" + std::to_string(idx) + "] at line " + std::to_string(t.line));
    return idx;
  }

  double expr() {
    double v = term();
    while (is_symbol("+") || is_symbol("-")) {
      const bool plus = is_symbol("+");
      bump();
      const double r = term();
      v = plus ? v + r : v - r;
    }
    return v;
  }

  double term() {
    double v = unary();
    while (is_symbol("*") || is_symbol("/")) {
      const bool mul = is_symbol("*");
      bump();
      const double r = unary();
      v = mul ? v * r : v / r;
    }
    return v;
  }

  double unary() {
    if (is_symbol("-")) {
      bump();
      return -unary();
    }
    if (is_symbol("+")) {
      bump();
      return unary();
    }
    const double base = primary();
    if (is_symbol("^")) {
      bump();
      return std::pow(base, unary());
    }
    return base;
  }

  double primary() {
    const Token t = tok_;
    if (t.type == Tok::Number) {
      bump();
      return t.value;
    }
    if (is_symbol("(")) {
      bump();
      const double v = expr();
      expect_symbol(")");
      return v;
    }
    if (t.type == Tok::Ident) {
      bump();
      if (t.text == "pi") return std::numbers::pi;
      double (*fn)(double) = nullptr;
      if (t.text == "sin") fn = [](double x) { return std::sin(x); };
      if (t.text == "cos") fn = [](double x) { return std::cos(x); };
      if (t.text == "tan") fn = [](double x) { return std::tan(x); };
      if (t.text == "exp") fn = [](double x) { return std::exp(x); };
      if (t.text == "ln") fn = [](double x) { return std::log(x); };
      if (t.text == "sqrt") fn = [](double x) { return std::sqrt(x); };
      if (!fn) fail(t, "unknown identifier '" + t.text + "' in expression");
      expect_symbol("(");
      const double v = expr();
      expect_symbol(")");
      return fn(v);
    }
    fail(t, "expected expression");
  }

  Lexer lex_;
  Token tok_;
  std::string reg_name_;
  int reg_size_ = -1;
  std::vector<Gate> gates_;
};

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Circuit parse_qasm(std::string_view text) { return Parser(text).run(); }

std::string render_qasm(const Circuit &circuit) {
  const Circuit flat = flatten(circuit);
  std::ostringstream os;
  os << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[" << flat.num_qubits << "];\n";
  for (const Gate &g : flat.gates) {
    for (size_t j = 0; j < g.qubits.size(); ++j)
      if (g.flip_mask >> j & 1) os << "x q[" << g.qubits[j] << "];\n";
    os << gate_name(g.kind);
    if (!g.params.empty()) {
      os << '(';
      for (size_t j = 0; j < g.params.size(); ++j) os << (j ? "," : "") << format_real(g.params[j]);
      os << ')';
    }
    for (size_t j = 0; j < g.qubits.size(); ++j) os << (j ? ", " : " ") << "q[" << g.qubits[j] << ']';
    os << ";\n";
    for (size_t j = 0; j < g.qubits.size(); ++j)
      if (g.flip_mask >> j & 1) os << "x q[" << g.qubits[j] << "];\n";
  }
  return os.str();
}

}  // namespace hiersim

#pragma once

// Expression language for system definitions.
//
//   sum     := signed (('+' | '-') signed)*
//   signed  := '-' signed | product
//   product := power (('*' | '/') ('-'* power))*
//   power   := primary ('^' exponent)?          right associative
//   exponent:= '-'? power                        must fold to an integer
//   primary := number | name | name '(' sum ')' | '(' sum ')'
//
// So "-a*b" is -(a*b) and "-x^2" is -(x^2). Numbers are decimal or
// scientific. Functions: sin cos tan cot sec csc sqrt exp log arctan
// (atan is accepted as a synonym). Names are resolved when an expression is
// bound to an ordered list of coordinate names plus optional named constants.
//
// Error offsets are 1-based character columns.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sodegeo/jet.hpp"

namespace sodegeo {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Fn { kSin, kCos, kTan, kCot, kSec, kCsc, kSqrt, kExp, kLog, kArctan };

inline std::optional<Fn> function_by_name(std::string_view name) {
  static const std::map<std::string_view, Fn> table = {
      {"sin", Fn::kSin},   {"cos", Fn::kCos},   {"tan", Fn::kTan},   {"cot", Fn::kCot},
      {"sec", Fn::kSec},   {"csc", Fn::kCsc},   {"sqrt", Fn::kSqrt}, {"exp", Fn::kExp},
      {"log", Fn::kLog},   {"arctan", Fn::kArctan}, {"atan", Fn::kArctan},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline const char* function_name(Fn f) {
  switch (f) {
    case Fn::kSin: return "sin";
    case Fn::kCos: return "cos";
    case Fn::kTan: return "tan";
    case Fn::kCot: return "cot";
    case Fn::kSec: return "sec";
    case Fn::kCsc: return "csc";
    case Fn::kSqrt: return "sqrt";
    case Fn::kExp: return "exp";
    case Fn::kLog: return "log";
    case Fn::kArctan: return "arctan";
  }
  return "?";
}

struct Node {
  enum class Kind { kNumber, kVariable, kNeg, kAdd, kSub, kMul, kDiv, kPow, kCall };

  Kind kind;
  double number = 0.0;
  std::string name;  // variable name
  Fn fn = Fn::kSin;
  int exponent = 0;
  std::shared_ptr<const Node> lhs;  // also the operand of kNeg, kPow, kCall
  std::shared_ptr<const Node> rhs;
  std::size_t begin = 0;  // 0-based source span [begin, end)
  std::size_t end = 0;
};

using NodePtr = std::shared_ptr<const Node>;

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    skip_ws();
    if (at_end()) fail("empty expression", pos_);
    NodePtr root = sum();
    skip_ws();
    if (!at_end()) fail(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t pos) { throw ParseError(msg, pos + 1); }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr make(Node::Kind kind, NodePtr lhs, NodePtr rhs, std::size_t begin, std::size_t end) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    n->begin = begin;
    n->end = end;
    return n;
  }

  NodePtr sum() {
    skip_ws();
    std::size_t begin = pos_;
    NodePtr left = signed_term();
    while (true) {
      skip_ws();
      char c = peek();
      if (c != '+' && c != '-') break;
      ++pos_;
      NodePtr right = signed_term();
      left = make(c == '+' ? Node::Kind::kAdd : Node::Kind::kSub, left, right, begin, pos_);
    }
    return left;
  }

  NodePtr signed_term() {
    skip_ws();
    std::size_t begin = pos_;
    if (peek() == '-') {
      ++pos_;
      NodePtr operand = signed_term();
      return make(Node::Kind::kNeg, operand, nullptr, begin, pos_);
    }
    return product();
  }

  NodePtr product() {
    skip_ws();
    std::size_t begin = pos_;
    NodePtr left = power();
    while (true) {
      skip_ws();
      char c = peek();
      if (c != '*' && c != '/') break;
      ++pos_;
      NodePtr right = negated_power();
      left = make(c == '*' ? Node::Kind::kMul : Node::Kind::kDiv, left, right, begin, pos_);
    }
    return left;
  }

  NodePtr negated_power() {
    skip_ws();
    std::size_t begin = pos_;
    if (peek() == '-') {
      ++pos_;
      NodePtr operand = negated_power();
      return make(Node::Kind::kNeg, operand, nullptr, begin, pos_);
    }
    return power();
  }

  NodePtr power() {
    skip_ws();
    std::size_t begin = pos_;
    NodePtr base = primary();
    skip_ws();
    if (peek() != '^') return base;
    ++pos_;
    skip_ws();
    std::size_t exp_pos = pos_;
    bool negative = false;
    if (peek() == '-') {
      negative = true;
      ++pos_;
    }
    NodePtr exp_node = power();
    std::optional<double> value = fold_constant(exp_node);
    if (!value) fail("exponent must be a constant integer", exp_pos);
    double e = negative ? -*value : *value;
    if (e != std::round(e) || std::abs(e) > 64) fail("exponent must be an integer in [-64, 64]", exp_pos);
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kPow;
    n->lhs = base;
    n->exponent = static_cast<int>(e);
    n->begin = begin;
    n->end = pos_;
    return n;
  }

  NodePtr primary() {
    skip_ws();
    std::size_t begin = pos_;
    if (at_end()) fail("unexpected end of expression", pos_);
    char c = peek();
    if (c == '(') {
      ++pos_;
      NodePtr inner = sum();
      if (!accept(')')) fail("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      std::string name(src_.substr(begin, pos_ - begin));
      skip_ws();
      if (peek() == '(') {
        auto fn = function_by_name(name);
        if (!fn) fail("unknown function '" + name + "'", begin);
        ++pos_;
        NodePtr arg = sum();
        if (!accept(')')) fail("expected ')'", pos_);
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::kCall;
        n->fn = *fn;
        n->lhs = arg;
        n->begin = begin;
        n->end = pos_;
        return n;
      }
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::kVariable;
      n->name = std::move(name);
      n->begin = begin;
      n->end = pos_;
      return n;
    }
    fail(std::string("unexpected '") + c + "'", pos_);
  }

  NodePtr number() {
    std::size_t begin = pos_;
    auto digits = [&] {
      std::size_t start = pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return pos_ - start;
    };
    std::size_t mantissa = digits();
    if (peek() == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail("malformed number", begin);
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (digits() == 0) {
        pos_ = save;
        fail("malformed exponent in number", save);
      }
    }
    std::string text(src_.substr(begin, pos_ - begin));
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kNumber;
    n->number = std::strtod(text.c_str(), nullptr);
    n->begin = begin;
    n->end = pos_;
    return n;
  }

  static std::optional<double> fold_constant(const NodePtr& n) {
    switch (n->kind) {
      case Node::Kind::kNumber: return n->number;
      case Node::Kind::kNeg: {
        auto v = fold_constant(n->lhs);
        if (!v) return std::nullopt;
        return -*v;
      }
      case Node::Kind::kPow: {
        auto v = fold_constant(n->lhs);
        if (!v) return std::nullopt;
        return std::pow(*v, n->exponent);
      }
      default: return std::nullopt;
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// A parsed expression. Immutable and cheap to copy.
class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view source) {
    Expr e;
    e.source_ = std::string(source);
    e.root_ = detail::Parser(e.source_).parse();
    return e;
  }

  const NodePtr& root() const { return root_; }
  const std::string& source() const { return source_; }

  /// Source text of a node of this expression.
  std::string text(const Node& n) const { return source_.substr(n.begin, n.end - n.begin); }

  /// Fully parenthesized rendering that parses back to the same tree.
  std::string to_string() const { return root_ ? render(*root_) : std::string(); }

  /// Names referenced by the expression, in first-occurrence order.
  std::vector<std::string> variables() const {
    std::vector<std::string> out;
    collect(*root_, out);
    return out;
  }

  static bool structurally_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Node::Kind::kNumber: return a.number == b.number;
      case Node::Kind::kVariable: return a.name == b.name;
      case Node::Kind::kNeg: return structurally_equal(*a.lhs, *b.lhs);
      case Node::Kind::kPow: return a.exponent == b.exponent && structurally_equal(*a.lhs, *b.lhs);
      case Node::Kind::kCall: return a.fn == b.fn && structurally_equal(*a.lhs, *b.lhs);
      default: return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
    }
  }

 private:
  static bool is_atom(const Node& n) {
    return n.kind == Node::Kind::kNumber || n.kind == Node::Kind::kVariable || n.kind == Node::Kind::kCall;
  }
  static std::string wrap(const Node& n) { return is_atom(n) ? render(n) : "(" + render(n) + ")"; }

  static std::string render(const Node& n) {
    switch (n.kind) {
      case Node::Kind::kNumber: {
        std::ostringstream os;
        os.precision(17);
        os << n.number;
        return os.str();
      }
      case Node::Kind::kVariable: return n.name;
      case Node::Kind::kNeg: return "-" + wrap(*n.lhs);
      case Node::Kind::kAdd: return wrap(*n.lhs) + " + " + wrap(*n.rhs);
      case Node::Kind::kSub: return wrap(*n.lhs) + " - " + wrap(*n.rhs);
      case Node::Kind::kMul: return wrap(*n.lhs) + "*" + wrap(*n.rhs);
      case Node::Kind::kDiv: return wrap(*n.lhs) + "/" + wrap(*n.rhs);
      case Node::Kind::kPow:
        return wrap(*n.lhs) + "^" + (n.exponent < 0 ? "(" + std::to_string(n.exponent) + ")" : std::to_string(n.exponent));
      case Node::Kind::kCall: return std::string(function_name(n.fn)) + "(" + render(*n.lhs) + ")";
    }
    return {};
  }

  static void collect(const Node& n, std::vector<std::string>& out) {
    if (n.kind == Node::Kind::kVariable) {
      for (const auto& s : out) {
        if (s == n.name) return;
      }
      out.push_back(n.name);
      return;
    }
    if (n.lhs) collect(*n.lhs, out);
    if (n.rhs) collect(*n.rhs, out);
  }

  std::string source_;
  NodePtr root_;
};

namespace detail {

template <class V>
V apply_fn(Fn f, const V& x) {
  switch (f) {
    case Fn::kSin: return sin(x);
    case Fn::kCos: return cos(x);
    case Fn::kTan: return tan(x);
    case Fn::kCot: return cot(x);
    case Fn::kSec: return sec(x);
    case Fn::kCsc: return csc(x);
    case Fn::kSqrt: return sqrt(x);
    case Fn::kExp: return exp(x);
    case Fn::kLog: return log(x);
    case Fn::kArctan: return atan(x);
  }
  throw std::logic_error("unknown function");
}

}  // namespace detail

/// An expression with names resolved to argument slots, compiled to a
/// postfix program. Evaluation is generic over double and (nested) jets.
class BoundExpr {
 public:
  BoundExpr() = default;

  /// `slots` gives the argument index of each name; `constants` supplies
  /// named numeric values. Unknown names are an error.
  BoundExpr(Expr expr, const std::map<std::string, int>& slots,
            const std::map<std::string, double>& constants = {})
      : expr_(std::move(expr)) {
    if (!expr_.root()) throw BindError("cannot bind an empty expression");
    compile(*expr_.root(), slots, constants);
  }

  const Expr& expr() const { return expr_; }
  const std::string& source() const { return expr_.source(); }
  int max_slot() const { return max_slot_; }

  /// Whether slot `s` is referenced at all.
  bool uses_slot(int s) const {
    for (const auto& ins : program_) {
      if (ins.op == Op::kSlot && ins.slot == s) return true;
    }
    return false;
  }

  template <class V>
  V eval(std::span<const V> args) const {
    if (max_slot_ >= static_cast<int>(args.size())) {
      throw std::invalid_argument("expression needs " + std::to_string(max_slot_ + 1) +
                                  " arguments, got " + std::to_string(args.size()));
    }
    std::vector<V> stack;
    stack.reserve(program_.size());
    for (const auto& ins : program_) {
      switch (ins.op) {
        case Op::kConst: stack.emplace_back(ins.value); break;
        case Op::kSlot: stack.push_back(args[static_cast<std::size_t>(ins.slot)]); break;
        case Op::kNeg: stack.back() = -stack.back(); break;
        case Op::kAdd:
        case Op::kSub:
        case Op::kMul:
        case Op::kDiv: {
          V b = std::move(stack.back());
          stack.pop_back();
          V& a = stack.back();
          if (ins.op == Op::kAdd) a = a + b;
          else if (ins.op == Op::kSub) a = a - b;
          else if (ins.op == Op::kMul) a = a * b;
          else guarded(ins, [&] { a = a / b; });
          break;
        }
        case Op::kPow: guarded(ins, [&] { stack.back() = pow_int(stack.back(), ins.exponent); }); break;
        case Op::kCall: guarded(ins, [&] { stack.back() = detail::apply_fn(ins.fn, stack.back()); }); break;
      }
    }
    return std::move(stack.back());
  }

  template <class V>
  V eval(const std::vector<V>& args) const {
    return eval(std::span<const V>(args));
  }

 private:
  enum class Op { kConst, kSlot, kNeg, kAdd, kSub, kMul, kDiv, kPow, kCall };
  struct Instr {
    Op op;
    double value = 0.0;
    int slot = 0;
    int exponent = 0;
    Fn fn = Fn::kSin;
    const Node* node = nullptr;
  };

  template <class F>
  void guarded(const Instr& ins, F&& f) const {
    try {
      f();
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " in `" + expr_.text(*ins.node) + "` (offset " +
                        std::to_string(ins.node->begin + 1) + " of \"" + expr_.source() + "\")");
    }
  }

  void compile(const Node& n, const std::map<std::string, int>& slots,
               const std::map<std::string, double>& constants) {
    Instr ins;
    ins.node = &n;
    switch (n.kind) {
      case Node::Kind::kNumber:
        ins.op = Op::kConst;
        ins.value = n.number;
        break;
      case Node::Kind::kVariable: {
        if (auto it = slots.find(n.name); it != slots.end()) {
          ins.op = Op::kSlot;
          ins.slot = it->second;
          max_slot_ = std::max(max_slot_, it->second);
        } else if (auto c = constants.find(n.name); c != constants.end()) {
          ins.op = Op::kConst;
          ins.value = c->second;
        } else {
          throw BindError("unbound name '" + n.name + "' at offset " + std::to_string(n.begin + 1) +
                          " of \"" + expr_.source() + "\"");
        }
        break;
      }
      case Node::Kind::kNeg:
        compile(*n.lhs, slots, constants);
        ins.op = Op::kNeg;
        break;
      case Node::Kind::kPow:
        compile(*n.lhs, slots, constants);
        ins.op = Op::kPow;
        ins.exponent = n.exponent;
        break;
      case Node::Kind::kCall:
        compile(*n.lhs, slots, constants);
        ins.op = Op::kCall;
        ins.fn = n.fn;
        break;
      default:
        compile(*n.lhs, slots, constants);
        compile(*n.rhs, slots, constants);
        ins.op = n.kind == Node::Kind::kAdd   ? Op::kAdd
                 : n.kind == Node::Kind::kSub ? Op::kSub
                 : n.kind == Node::Kind::kMul ? Op::kMul
                                              : Op::kDiv;
        break;
    }
    program_.push_back(ins);
  }

  Expr expr_;
  std::vector<Instr> program_;
  int max_slot_ = -1;
};

inline Expr parse(std::string_view source) { return Expr::parse(source); }

/// Evaluate with an explicit name -> jet environment.
inline Jet eval_over_jets(const Expr& e, const std::map<std::string, Jet>& env) {
  std::map<std::string, int> slots;
  std::vector<Jet> args;
  for (const auto& [name, jet] : env) {
    slots[name] = static_cast<int>(args.size());
    args.push_back(jet);
  }
  BoundExpr bound(e, slots);
  return bound.eval(std::span<const Jet>(args));
}

}  // namespace sodegeo

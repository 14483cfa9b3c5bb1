// MAIL core: abstract syntax, the 21-pattern taxonomy, the library-function
// registry and the pattern classifier. The text format itself lives in
// parser.hpp / printer.hpp; see docs/mail_format.md for the conformance notes.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mail {

// ---------------------------------------------------------------------------
// Patterns
// ---------------------------------------------------------------------------

enum class Pattern : std::uint8_t {
  Assign,
  AssignConstant,
  Control,
  ControlConstant,
  Call,
  CallConstant,
  Flag,
  FlagStack,
  Halt,
  Jump,
  JumpConstant,
  JumpStack,
  Libcall,
  LibcallConstant,
  Lock,
  Stack,
  StackConstant,
  Test,
  TestConstant,
  Unknown,
  NotDefined,
};

inline constexpr int kPatternCount = 21;

inline std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::Assign: return "ASSIGN";
    case Pattern::AssignConstant: return "ASSIGN_CONSTANT";
    case Pattern::Control: return "CONTROL";
    case Pattern::ControlConstant: return "CONTROL_CONSTANT";
    case Pattern::Call: return "CALL";
    case Pattern::CallConstant: return "CALL_CONSTANT";
    case Pattern::Flag: return "FLAG";
    case Pattern::FlagStack: return "FLAG_STACK";
    case Pattern::Halt: return "HALT";
    case Pattern::Jump: return "JUMP";
    case Pattern::JumpConstant: return "JUMP_CONSTANT";
    case Pattern::JumpStack: return "JUMP_STACK";
    case Pattern::Libcall: return "LIBCALL";
    case Pattern::LibcallConstant: return "LIBCALL_CONSTANT";
    case Pattern::Lock: return "LOCK";
    case Pattern::Stack: return "STACK";
    case Pattern::StackConstant: return "STACK_CONSTANT";
    case Pattern::Test: return "TEST";
    case Pattern::TestConstant: return "TEST_CONSTANT";
    case Pattern::Unknown: return "UNKNOWN";
    case Pattern::NotDefined: return "NOTDEFINED";
  }
  return "NOTDEFINED";
}

inline std::optional<Pattern> pattern_from_string(std::string_view s) {
  for (int i = 0; i < kPatternCount; ++i) {
    auto p = static_cast<Pattern>(i);
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

enum class MathOp : std::uint8_t { Add, Sub, Mul, Div, Mod, And, Or, Xor, Not, Shl, Shr };
enum class RelOp : std::uint8_t { Lt, Gt, Le, Ge, Eq, Ne };

inline std::string_view to_token(MathOp op) {
  switch (op) {
    case MathOp::Add: return "+";
    case MathOp::Sub: return "-";
    case MathOp::Mul: return "*";
    case MathOp::Div: return "/";
    case MathOp::Mod: return "%";
    case MathOp::And: return "and";
    case MathOp::Or: return "or";
    case MathOp::Xor: return "xor";
    case MathOp::Not: return "not";
    case MathOp::Shl: return "<<";
    case MathOp::Shr: return ">>";
  }
  return "?";
}

inline std::string_view to_token(RelOp op) {
  switch (op) {
    case RelOp::Lt: return "<";
    case RelOp::Gt: return ">";
    case RelOp::Le: return "<=";
    case RelOp::Ge: return ">=";
    case RelOp::Eq: return "==";
    case RelOp::Ne: return "!=";
  }
  return "?";
}

inline bool is_word_op(MathOp op) {
  return op == MathOp::And || op == MathOp::Or || op == MathOp::Xor || op == MathOp::Not;
}

// ---------------------------------------------------------------------------
// Registers and addresses
// ---------------------------------------------------------------------------

// Canonical names: architecture registers uppercase (EAX, R9D, EDX:EAX),
// flag registers ZF/CF/PF/SF/OF/DF, EFLAGS, and lowercase synthetics
// gr_<n> / fr_<n>. The synthetic index space is unbounded.
struct Register {
  std::string name;

  bool is_flag() const {
    return name == "ZF" || name == "CF" || name == "PF" || name == "SF" ||
           name == "OF" || name == "DF";
  }
  bool is_eflags() const { return name == "EFLAGS"; }
  bool is_synthetic() const {
    return name.size() > 3 && (name.rfind("gr_", 0) == 0 || name.rfind("fr_", 0) == 0);
  }

  friend bool operator==(const Register&, const Register&) = default;
};

// Constant code/data address. Renders bare ("jmp 0x401267") in branch-target
// position and bracketed ("[0x10]") in operand position.
struct ConstAddr {
  std::uint64_t value = 0;
  friend bool operator==(const ConstAddr&, const ConstAddr&) = default;
};

// Register expression address, e.g. [EAX+ECX+0x10] or [RAX*0x4+0x8].
// terms.size() == ops.size() + 1; only +, -, * occur between terms.
struct RegAddr {
  using Term = std::variant<Register, std::int64_t>;
  std::vector<Term> terms;
  std::vector<MathOp> ops;
  friend bool operator==(const RegAddr&, const RegAddr&) = default;
};

// Stack expression [SP=SP+0xk] (push) or [SP=SP-0xk] (pop); offset >= 1.
struct StackRef {
  bool push = true;
  std::uint64_t offset = 1;
  friend bool operator==(const StackRef&, const StackRef&) = default;
};

struct UnknownAddr {
  friend bool operator==(const UnknownAddr&, const UnknownAddr&) = default;
};

using Address = std::variant<ConstAddr, RegAddr, StackRef, UnknownAddr>;

// ---------------------------------------------------------------------------
// Expressions and statements
// ---------------------------------------------------------------------------

// One operand: a register, an address form, or an integer constant.
struct Expr {
  std::variant<Register, Address, std::int64_t> value;
  friend bool operator==(const Expr&, const Expr&) = default;

  const Register* reg() const { return std::get_if<Register>(&value); }
  const Address* addr() const { return std::get_if<Address>(&value); }
  const std::int64_t* constant() const { return std::get_if<std::int64_t>(&value); }
};

struct LibCallExpr {
  std::string callee;
  std::vector<Expr> args;
  friend bool operator==(const LibCallExpr&, const LibCallExpr&) = default;
};

struct UnaryRhs {
  MathOp op = MathOp::Sub;
  Expr operand;
  friend bool operator==(const UnaryRhs&, const UnaryRhs&) = default;
};

struct BinaryRhs {
  Expr lhs;
  MathOp op = MathOp::Add;
  Expr rhs;
  friend bool operator==(const BinaryRhs&, const BinaryRhs&) = default;
};

using AssignRhs = std::variant<Expr, UnaryRhs, BinaryRhs, LibCallExpr>;

struct Comparison {
  Expr lhs;
  RelOp op = RelOp::Eq;
  Expr rhs;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

enum class CondJoin : std::uint8_t { And, Or };

// Comparisons joined by and/or, e.g. (ZF == 1 or SF != OF).
struct Condition {
  std::vector<Comparison> comparisons;   // size >= 1
  std::vector<CondJoin> joins;           // size == comparisons.size() - 1
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct AssignmentStmt {
  std::variant<Register, Address> dest;
  AssignRhs rhs;
  friend bool operator==(const AssignmentStmt&, const AssignmentStmt&) = default;
};

struct JumpStmt {
  Address target;
  friend bool operator==(const JumpStmt&, const JumpStmt&) = default;
};

// Direct/indirect call. Not part of the base grammar; required so the CALL and
// CALL_CONSTANT patterns are reachable ("CALL EBX;", "call 0x603248;").
struct CallStmt {
  std::variant<Register, Address> target;
  friend bool operator==(const CallStmt&, const CallStmt&) = default;
};

struct LibCallStmt {
  LibCallExpr call;
  friend bool operator==(const LibCallStmt&, const LibCallStmt&) = default;
};

// Bare operator application used for flag tests, e.g. "EAX and 0x10;".
struct TestStmt {
  Expr lhs;
  MathOp op = MathOp::And;
  Expr rhs;
  friend bool operator==(const TestStmt&, const TestStmt&) = default;
};

struct ConditionStmt {
  Condition cond;
  friend bool operator==(const ConditionStmt&, const ConditionStmt&) = default;
};

struct ControlStmt {
  using Arm = std::variant<JumpStmt, AssignmentStmt>;
  Condition cond;
  Arm then_arm;
  std::optional<Arm> else_arm;
  friend bool operator==(const ControlStmt&, const ControlStmt&) = default;
};

struct FunctionMarkerStmt {
  bool is_start = true;
  std::uint32_t index = 0;
  friend bool operator==(const FunctionMarkerStmt&, const FunctionMarkerStmt&) = default;
};

struct HaltStmt {
  friend bool operator==(const HaltStmt&, const HaltStmt&) = default;
};

struct LockStmt {
  friend bool operator==(const LockStmt&, const LockStmt&) = default;
};

// Placeholder for a source instruction that has no MAIL translation.
struct UnknownStmt {
  friend bool operator==(const UnknownStmt&, const UnknownStmt&) = default;
};

enum class StatementKind : std::uint8_t {
  Assignment,
  Control,
  Condition,
  FunctionMarker,
  Jump,
  LibCall,
  Call,
  Test,
  Halt,
  Lock,
  Unknown,
};

struct MailStatement {
  using Node = std::variant<AssignmentStmt, ControlStmt, ConditionStmt,
                            FunctionMarkerStmt, JumpStmt, LibCallStmt, CallStmt,
                            TestStmt, HaltStmt, LockStmt, UnknownStmt>;
  Node node;
  Pattern pattern = Pattern::NotDefined;  // default for freshly built statements

  StatementKind kind() const { return static_cast<StatementKind>(node.index()); }

  template <typename T>
  const T* as() const { return std::get_if<T>(&node); }
};

// Syntactic equality; pattern tags are annotations and do not participate.
inline bool structurally_equal(const MailStatement& a, const MailStatement& b) {
  return a.node == b.node;
}

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

struct AddressedStatement {
  std::uint64_t addr = 0;
  MailStatement stmt;
};

struct FunctionSpan {
  std::uint32_t index = 0;
  std::string name;
  std::uint64_t start_addr = 0;
  std::uint64_t end_addr = 0;
  // Statement range in MailProgram::statements, markers included.
  std::size_t first_stmt = 0;
  std::size_t stmt_count = 0;
};

struct MailProgram {
  std::vector<AddressedStatement> statements;  // address order, markers included
  std::vector<FunctionSpan> functions;
  // Sorted addresses of source instructions; used to validate branch targets.
  // For programs parsed from MAIL text this equals the statement addresses.
  std::vector<std::uint64_t> instruction_addrs;

  bool has_instruction_at(std::uint64_t a) const {
    return std::binary_search(instruction_addrs.begin(), instruction_addrs.end(), a);
  }
};

// Statement-sequence equality; addresses and pattern tags are pipeline
// annotations that MAIL text does not carry.
inline bool structurally_equal(const MailProgram& a, const MailProgram& b) {
  if (a.statements.size() != b.statements.size()) return false;
  for (std::size_t i = 0; i < a.statements.size(); ++i)
    if (!structurally_equal(a.statements[i].stmt, b.statements[i].stmt)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Library-function registry (Table 1)
// ---------------------------------------------------------------------------

struct LibFunction {
  std::string_view name;
  int arity;
  std::string_view summary;
};

inline std::span<const LibFunction> library_functions() {
  static const LibFunction kTable[] = {
      {"abs", 1, "absolute value of op"},
      {"aes", 2, "AES encrypt/decrypt op, mode selects direction"},
      {"allocate", 1, "allocate n bytes from the heap"},
      {"atan", 1, "arc tangent of op"},
      {"avg", 2, "average of op1 and op2"},
      {"bit", 3, "select len bits of op starting at index"},
      {"clear", 3, "clear bits of op at index up to len"},
      {"compare", 2, "compare two values and set the flag register"},
      {"complement", 2, "complement the bit of op at index"},
      {"convert", 1, "convert value to int or float"},
      {"cos", 1, "cosine of op"},
      {"count", 1, "count the one bits in op"},
      {"len", 1, "length of obj"},
      {"log", 1, "logarithm of op"},
      {"max", 2, "maximum of op1 and op2"},
      {"min", 2, "minimum of op1 and op2"},
      {"rev", 1, "reverse the bit order of op"},
      {"round", 1, "round op"},
      {"scanf", 2, "index of first one bit of op1 stored in op2"},
      {"scanr", 2, "index of last one bit of op1 stored in op2"},
      {"set", 3, "set bits of op at index up to len"},
      {"sin", 1, "sine of op"},
      {"sqrt", 1, "square root of op"},
      {"substr", 3, "substring of value at offset up to len"},
      {"swap", 2, "swap the bits of op2 and write back into op1"},
      {"swap", 1, "swap the bits of op"},
      {"tan", 1, "tangent of op"},
  };
  return kTable;
}

inline bool validate_libcall(std::string_view name, int argc) {
  for (const auto& f : library_functions())
    if (f.name == name && f.arity == argc) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Pattern classification
// ---------------------------------------------------------------------------

struct ClassifyOptions {
  // Tag library calls CALL/CALL_CONSTANT instead of LIBCALL/LIBCALL_CONSTANT.
  bool call_tags_for_libcalls = false;
};

namespace detail {

inline bool is_flag_reg(const Register& r) { return r.is_flag() || r.is_eflags(); }

inline bool expr_has_flag(const Expr& e) {
  if (const Register* r = e.reg()) return is_flag_reg(*r);
  if (const Address* a = e.addr()) {
    if (const RegAddr* ra = std::get_if<RegAddr>(a)) {
      for (const auto& t : ra->terms)
        if (const Register* r = std::get_if<Register>(&t); r && is_flag_reg(*r)) return true;
    }
  }
  return false;
}

inline bool expr_has_stack(const Expr& e) {
  const Address* a = e.addr();
  return a && std::holds_alternative<StackRef>(*a);
}

// A "constant" for classification is an integer-constant operand at
// expression level. Offsets buried inside address forms ([RBP-0x44],
// [SP=SP-0x1]) do not count: the taxonomy tags "EAX = [SP=SP-0x1];" STACK and
// "SUB EAX, [RBP-0x18]" ASSIGN.
inline bool expr_is_const(const Expr& e) { return e.constant() != nullptr; }

template <typename Fn>
inline bool any_rhs_expr(const AssignRhs& rhs, Fn&& fn) {
  if (const Expr* e = std::get_if<Expr>(&rhs)) return fn(*e);
  if (const UnaryRhs* u = std::get_if<UnaryRhs>(&rhs)) return fn(u->operand);
  if (const BinaryRhs* b = std::get_if<BinaryRhs>(&rhs)) return fn(b->lhs) || fn(b->rhs);
  if (const LibCallExpr* c = std::get_if<LibCallExpr>(&rhs)) {
    for (const auto& a : c->args)
      if (fn(a)) return true;
  }
  return false;
}

template <typename Fn>
inline bool any_dest(const std::variant<Register, Address>& dest, Fn&& fn) {
  if (const Register* r = std::get_if<Register>(&dest)) return fn(Expr{*r});
  return fn(Expr{std::get<Address>(dest)});
}

inline bool assign_has_flag(const AssignmentStmt& s) {
  return any_dest(s.dest, expr_has_flag) || any_rhs_expr(s.rhs, expr_has_flag);
}
inline bool assign_has_stack(const AssignmentStmt& s) {
  return any_dest(s.dest, expr_has_stack) || any_rhs_expr(s.rhs, expr_has_stack);
}
inline bool assign_has_const(const AssignmentStmt& s) {
  return any_rhs_expr(s.rhs, expr_is_const);
}

inline bool arm_has_const(const ControlStmt::Arm& arm) {
  if (const JumpStmt* j = std::get_if<JumpStmt>(&arm))
    return std::holds_alternative<ConstAddr>(j->target);
  return assign_has_const(std::get<AssignmentStmt>(arm));
}

}  // namespace detail

// Total function: every constructible statement gets exactly one tag.
inline Pattern classify_pattern(const MailStatement& stmt, const ClassifyOptions& opts = {}) {
  using namespace detail;
  switch (stmt.kind()) {
    case StatementKind::Assignment: {
      const auto& s = *stmt.as<AssignmentStmt>();
      if (assign_has_flag(s)) return assign_has_stack(s) ? Pattern::FlagStack : Pattern::Flag;
      if (assign_has_stack(s))
        return assign_has_const(s) ? Pattern::StackConstant : Pattern::Stack;
      return assign_has_const(s) ? Pattern::AssignConstant : Pattern::Assign;
    }
    case StatementKind::Control: {
      const auto& s = *stmt.as<ControlStmt>();
      bool constant = arm_has_const(s.then_arm) || (s.else_arm && arm_has_const(*s.else_arm));
      return constant ? Pattern::ControlConstant : Pattern::Control;
    }
    case StatementKind::Jump: {
      const auto& t = stmt.as<JumpStmt>()->target;
      if (std::holds_alternative<ConstAddr>(t)) return Pattern::JumpConstant;
      if (std::holds_alternative<StackRef>(t)) return Pattern::JumpStack;
      return Pattern::Jump;
    }
    case StatementKind::Call: {
      const auto& t = stmt.as<CallStmt>()->target;
      const Address* a = std::get_if<Address>(&t);
      bool constant = a && std::holds_alternative<ConstAddr>(*a);
      return constant ? Pattern::CallConstant : Pattern::Call;
    }
    case StatementKind::LibCall: {
      bool constant = false;
      for (const auto& a : stmt.as<LibCallStmt>()->call.args) constant |= expr_is_const(a);
      if (opts.call_tags_for_libcalls)
        return constant ? Pattern::CallConstant : Pattern::Call;
      return constant ? Pattern::LibcallConstant : Pattern::Libcall;
    }
    case StatementKind::Test: {
      const auto& s = *stmt.as<TestStmt>();
      return (expr_is_const(s.lhs) || expr_is_const(s.rhs)) ? Pattern::TestConstant
                                                            : Pattern::Test;
    }
    case StatementKind::Halt: return Pattern::Halt;
    case StatementKind::Lock: return Pattern::Lock;
    case StatementKind::Unknown: return Pattern::Unknown;
    case StatementKind::Condition:
    case StatementKind::FunctionMarker: return Pattern::NotDefined;
  }
  return Pattern::NotDefined;
}

inline void classify_program(MailProgram& program, const ClassifyOptions& opts = {}) {
  for (auto& as : program.statements) as.stmt.pattern = classify_pattern(as.stmt, opts);
}

}  // namespace mail

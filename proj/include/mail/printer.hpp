// Canonical MAIL text emission: one statement per line, ';' terminated,
// lowercase keywords, lowercase 0x constants, single spaces around statement
// operators, no spaces inside bracketed address forms.
#pragma once

#include <cinttypes>
#include <cstdio>
#include <string>

#include "mail/core.hpp"

namespace mail {

namespace detail {

inline std::string hex_const(std::int64_t v) {
  char buf[32];
  if (v < 0)
    std::snprintf(buf, sizeof buf, "-0x%" PRIx64, static_cast<std::uint64_t>(-v));
  else
    std::snprintf(buf, sizeof buf, "0x%" PRIx64, static_cast<std::uint64_t>(v));
  return buf;
}

inline std::string hex_const(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%" PRIx64, v);
  return buf;
}

}  // namespace detail

// Addresses render bare in branch-target position ("jmp 0x401267") and
// bracketed in operand position ("[0x10]"); all other forms are identical.
enum class AddrContext { Operand, BranchTarget };

inline std::string to_text(const Address& a, AddrContext ctx = AddrContext::Operand) {
  using detail::hex_const;
  if (const ConstAddr* c = std::get_if<ConstAddr>(&a)) {
    if (ctx == AddrContext::BranchTarget) return hex_const(c->value);
    return "[" + hex_const(c->value) + "]";
  }
  if (const RegAddr* r = std::get_if<RegAddr>(&a)) {
    std::string out = "[";
    for (std::size_t i = 0; i < r->terms.size(); ++i) {
      if (i > 0) out += to_token(r->ops[i - 1]);
      if (const Register* reg = std::get_if<Register>(&r->terms[i]))
        out += reg->name;
      else
        out += hex_const(std::get<std::int64_t>(r->terms[i]));
    }
    return out + "]";
  }
  if (const StackRef* s = std::get_if<StackRef>(&a))
    return std::string("[SP=SP") + (s->push ? "+" : "-") + hex_const(s->offset) + "]";
  return "UNKNOWN";
}

inline std::string to_text(const Expr& e) {
  if (const Register* r = e.reg()) return r->name;
  if (const std::int64_t* c = e.constant()) return detail::hex_const(*c);
  return to_text(*e.addr(), AddrContext::Operand);
}

inline std::string to_text(const LibCallExpr& c) {
  std::string out = c.callee + "(";
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (i > 0) out += ", ";
    out += to_text(c.args[i]);
  }
  return out + ")";
}

inline std::string to_text(const AssignRhs& rhs) {
  if (const Expr* e = std::get_if<Expr>(&rhs)) return to_text(*e);
  if (const UnaryRhs* u = std::get_if<UnaryRhs>(&rhs)) {
    std::string op{to_token(u->op)};
    return op + (is_word_op(u->op) ? " " : "") + to_text(u->operand);
  }
  if (const BinaryRhs* b = std::get_if<BinaryRhs>(&rhs))
    return to_text(b->lhs) + " " + std::string(to_token(b->op)) + " " + to_text(b->rhs);
  return to_text(std::get<LibCallExpr>(rhs));
}

inline std::string to_text(const Condition& c) {
  std::string out;
  for (std::size_t i = 0; i < c.comparisons.size(); ++i) {
    if (i > 0) out += c.joins[i - 1] == CondJoin::And ? " and " : " or ";
    const Comparison& cmp = c.comparisons[i];
    out += to_text(cmp.lhs) + " " + std::string(to_token(cmp.op)) + " " + to_text(cmp.rhs);
  }
  return out;
}

namespace detail {

inline std::string dest_text(const std::variant<Register, Address>& dest) {
  if (const Register* r = std::get_if<Register>(&dest)) return r->name;
  return to_text(std::get<Address>(dest), AddrContext::Operand);
}

inline std::string assignment_text(const AssignmentStmt& s) {
  return dest_text(s.dest) + " = " + to_text(s.rhs);
}

inline std::string arm_text(const ControlStmt::Arm& arm) {
  if (const JumpStmt* j = std::get_if<JumpStmt>(&arm))
    return "jmp " + to_text(j->target, AddrContext::BranchTarget);
  return assignment_text(std::get<AssignmentStmt>(arm));
}

}  // namespace detail

// Statement text including the terminating ';' but no newline.
inline std::string to_text(const MailStatement& stmt) {
  using namespace detail;
  switch (stmt.kind()) {
    case StatementKind::Assignment:
      return assignment_text(*stmt.as<AssignmentStmt>()) + ";";
    case StatementKind::Control: {
      const auto& s = *stmt.as<ControlStmt>();
      std::string out = "if (" + to_text(s.cond) + ") " + arm_text(s.then_arm);
      if (s.else_arm) out += "; else " + arm_text(*s.else_arm);
      return out + ";";
    }
    case StatementKind::Condition:
      return to_text(stmt.as<ConditionStmt>()->cond) + ";";
    case StatementKind::FunctionMarker: {
      const auto& s = *stmt.as<FunctionMarkerStmt>();
      return (s.is_start ? "start_function_" : "end_function_") + std::to_string(s.index) + ";";
    }
    case StatementKind::Jump:
      return "jmp " + to_text(stmt.as<JumpStmt>()->target, AddrContext::BranchTarget) + ";";
    case StatementKind::LibCall:
      return to_text(stmt.as<LibCallStmt>()->call) + ";";
    case StatementKind::Call: {
      const auto& t = stmt.as<CallStmt>()->target;
      if (const Register* r = std::get_if<Register>(&t)) return "call " + r->name + ";";
      return "call " + to_text(std::get<Address>(t), AddrContext::BranchTarget) + ";";
    }
    case StatementKind::Test: {
      const auto& s = *stmt.as<TestStmt>();
      return to_text(s.lhs) + " " + std::string(to_token(s.op)) + " " + to_text(s.rhs) + ";";
    }
    case StatementKind::Halt: return "halt;";
    case StatementKind::Lock: return "lock;";
    case StatementKind::Unknown: return "UNKNOWN;";
  }
  return ";";
}

inline std::string emit_mail(const MailProgram& program) {
  std::string out;
  for (const auto& as : program.statements) {
    out += to_text(as.stmt);
    out += '\n';
  }
  return out;
}

}  // namespace mail

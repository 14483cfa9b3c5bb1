// ARM (A32) to MAIL lifting. Condition-code suffixes are stripped from the
// mnemonic when the stem is a known instruction (MOVLE -> MOV + LE) and wrap
// the lifted body in a control statement when the body is a single
// assignment or jump. Instructions on the ignore list lift to nothing; anything
// unrecognized to one UNKNOWN statement.
#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mail/core.hpp"
#include "mail/disasm.hpp"
#include "mail/lifter_x86.hpp"  // LiftResult, LiftContext, shared helpers

namespace mail {

namespace arm {

namespace detail {

using mail::detail::trim;
using mail::detail::upper;
using x86::detail::assign;
using x86::detail::cond1;
using x86::detail::cond2;
using x86::detail::constant;
using x86::detail::flag_is;
using x86::detail::flag_rel;
using x86::detail::libcall;
using x86::detail::parse_imm;
using x86::detail::reg;

inline const std::unordered_set<std::string_view>& ignore_set() {
  static const std::unordered_set<std::string_view> kIgnore = {
      "BKPT",
      "CDP", "CDP2", "CLREX", "CLZ", "CPS", "CPSID", "CPSIE", "CRC32", "CRC32C",
      "DBG", "DCPS1", "DCPS2", "DCPS3", "DMB", "DSB",
      "HVC",
      "ISB",
      "LDC", "LDC2",
      "MCR", "MCR2", "MCRR", "MCRR2", "MRC", "MRC2", "MRRC", "MRRC2",
      "PLD", "PLDW", "PLI", "PRFM",
      "SETEND", "SEV", "SHA1C", "SHA1H", "SHA1M", "SHA1P", "SHA1SU0", "SHA1SU1",
      "SHA256H", "SHA256H2", "SHA256SU0", "SHA256SU1", "SMC",
      "SSAT", "SSAT16", "STC", "STC2", "SVC",
      "USAT", "USAT16",
      "VCVT", "VCVTA", "VCVTB", "VCVTM", "VCVTN", "VCVTP", "VCVTR", "VCVTT", "VEXT",
      "VLD1", "VLD2", "VLD3", "VLD4",
      "VQRDMULH", "VQRSHL", "VQRSHRN", "VQRSHRUN",
      "VQSHL", "VQSHLU", "VQSHRN", "VQSHRUN",
      "VRINTA", "VRINTM", "VRINTN", "VRINTP", "VRINTR", "VRINTX", "VRINTZ",
      "VRSHL", "VRSHR", "VRSHRN", "VRSRA", "VRSUBHN",
      "VST1", "VST2", "VST3", "VST4", "VTBL", "VTBX", "VTRN", "VUZP", "VZIP",
      "WFE", "WFI", "YIELD",
  };
  return kIgnore;
}

// Condition predicates keyed by the two-letter ARM condition code.
inline std::optional<Condition> condition_for(std::string_view cc) {
  if (cc == "EQ") return cond1(flag_is("ZF", 1));
  if (cc == "NE") return cond1(flag_is("ZF", 0));
  if (cc == "CS" || cc == "HS") return cond1(flag_is("CF", 1));
  if (cc == "CC" || cc == "LO") return cond1(flag_is("CF", 0));
  if (cc == "MI") return cond1(flag_is("SF", 1));
  if (cc == "PL") return cond1(flag_is("SF", 0));
  if (cc == "VS") return cond1(flag_is("OF", 1));
  if (cc == "VC") return cond1(flag_is("OF", 0));
  if (cc == "HI") return cond2(flag_is("CF", 1), CondJoin::And, flag_is("ZF", 0));
  if (cc == "LS") return cond2(flag_is("CF", 0), CondJoin::Or, flag_is("ZF", 1));
  if (cc == "GE") return cond1(flag_rel("SF", RelOp::Eq, "OF"));
  if (cc == "LT") return cond1(flag_rel("SF", RelOp::Ne, "OF"));
  if (cc == "GT") return cond2(flag_is("ZF", 0), CondJoin::And, flag_rel("SF", RelOp::Eq, "OF"));
  if (cc == "LE") return cond2(flag_is("ZF", 1), CondJoin::Or, flag_rel("SF", RelOp::Ne, "OF"));
  return std::nullopt;
}

inline bool is_shift_spec(std::string_view s) {
  return s.rfind("LSL", 0) == 0 || s.rfind("LSR", 0) == 0 || s.rfind("ASR", 0) == 0 ||
         s.rfind("ROR", 0) == 0 || s.rfind("RRX", 0) == 0;
}

using Operand = x86::Operand;

inline Operand parse_operand(std::string_view raw) {
  std::string text = upper(trim(raw));
  if (text.empty()) return Register{"?"};
  while (!text.empty() && text.back() == '!') text.pop_back();  // writeback marker
  if (text.front() == '#') text.erase(0, 1);
  if (text.front() == '=') text.erase(0, 1);  // literal-pool load
  std::int64_t imm;
  if (parse_imm(text, imm)) return imm;
  if (text.front() == '[') {
    std::string inner(trim(std::string_view(text).substr(1, text.size() - 2)));
    RegAddr addr;
    for (std::string_view piece : mail::detail::split_operands(inner)) {
      std::string p = upper(trim(piece));
      if (p.empty() || is_shift_spec(p)) continue;  // shifted index: keep the base terms
      if (!p.empty() && p.front() == '#') p.erase(0, 1);
      std::int64_t v;
      if (parse_imm(p, v)) {
        if (!addr.terms.empty()) addr.ops.push_back(v < 0 ? MathOp::Sub : MathOp::Add);
        addr.terms.push_back(v < 0 ? -v : v);
      } else {
        if (!addr.terms.empty()) addr.ops.push_back(MathOp::Add);
        addr.terms.push_back(Register{p});
      }
    }
    if (addr.terms.empty()) return Address{UnknownAddr{}};
    if (addr.terms.size() == 1 && std::holds_alternative<std::int64_t>(addr.terms[0]))
      return Address{ConstAddr{static_cast<std::uint64_t>(std::get<std::int64_t>(addr.terms[0]))}};
    return Address{std::move(addr)};
  }
  // CPSR/SPSR read/written by MRS/MSR map to the flags register.
  if (text == "CPSR" || text == "SPSR" || text == "APSR") return Register{"EFLAGS"};
  return Register{std::move(text)};
}

inline std::vector<std::string> reg_list(std::string_view raw) {
  std::string text(trim(raw));
  if (text.empty() || text.front() != '{') return {};
  std::vector<std::string> out;
  for (std::string_view piece :
       mail::detail::split_operands(std::string_view(text).substr(1, text.size() - 2)))
    out.push_back(upper(trim(piece)));
  return out;
}

using x86::detail::to_dest;
using x86::detail::to_expr;

inline std::vector<MailStatement> lift_body(const std::string& m,
                                            const std::vector<std::string>& raw_ops,
                                            LiftContext& ctx) {
  (void)ctx;
  auto operand = [&](std::size_t i) { return parse_operand(raw_ops[i]); };
  auto have = [&](std::size_t n) { return raw_ops.size() >= n; };

  static const std::unordered_map<std::string_view, MathOp> kBin = {
      {"ADD", MathOp::Add}, {"ADC", MathOp::Add},
      {"SUB", MathOp::Sub}, {"SBC", MathOp::Sub}, {"RSB", MathOp::Sub}, {"RSC", MathOp::Sub},
      {"MUL", MathOp::Mul}, {"MLA", MathOp::Mul}, {"MLS", MathOp::Mul},
      {"UMULL", MathOp::Mul}, {"SMULL", MathOp::Mul},
      {"SDIV", MathOp::Div}, {"UDIV", MathOp::Div},
      {"LSL", MathOp::Shl}, {"LSR", MathOp::Shr}, {"ASR", MathOp::Shr}, {"ROR", MathOp::Shr},
      {"AND", MathOp::And}, {"ORR", MathOp::Or}, {"EOR", MathOp::Xor}, {"BIC", MathOp::And},
  };

  if (m == "NOP") return {};

  if (m == "MOV" || m == "MOVW" || m == "MOVT") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    return {assign(to_dest(operand(0)), AssignRhs{to_expr(operand(1))})};
  }
  if (m == "MVN") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    return {assign(to_dest(operand(0)), AssignRhs{UnaryRhs{MathOp::Not, to_expr(operand(1))}})};
  }
  if (m == "MRS") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    return {assign(to_dest(operand(0)), AssignRhs{reg("EFLAGS")})};
  }
  if (m == "MSR") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    return {assign(Register{"EFLAGS"}, AssignRhs{to_expr(operand(1))})};
  }
  if (m == "LDR" || m == "LDRB" || m == "LDRH" || m == "LDRSB" || m == "LDRSH" ||
      m == "LDRD") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    return {assign(to_dest(operand(0)), AssignRhs{to_expr(operand(1))})};
  }
  if (m == "STR" || m == "STRB" || m == "STRH" || m == "STRD") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    // Source first in ARM syntax: STR Rt, [mem] stores Rt.
    return {assign(to_dest(operand(1)), AssignRhs{to_expr(operand(0))})};
  }

  if (auto it = kBin.find(m); it != kBin.end()) {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    MathOp op = it->second;
    if (m == "UMULL" || m == "SMULL") {
      if (!have(4)) return {MailStatement{UnknownStmt{}}};
      BinaryRhs rhs{to_expr(operand(2)), op, to_expr(operand(3))};
      return {assign(to_dest(operand(0)), AssignRhs{std::move(rhs)})};
    }
    std::size_t nsrc = have(3) ? 2 : 1;
    Operand dst = operand(0);
    Operand a = nsrc == 2 ? operand(1) : dst;
    Operand b = operand(nsrc == 2 ? 2 : 1);
    if (m == "RSB" || m == "RSC") std::swap(a, b);
    BinaryRhs rhs{to_expr(a), op, to_expr(b)};
    return {assign(to_dest(dst), AssignRhs{std::move(rhs)})};
  }

  if (m == "CMP" || m == "CMN") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    return {libcall("compare", {to_expr(operand(0)), to_expr(operand(1))})};
  }
  if (m == "TST") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    return {MailStatement{TestStmt{to_expr(operand(0)), MathOp::And, to_expr(operand(1))}}};
  }
  if (m == "TEQ") {
    if (!have(2)) return {MailStatement{UnknownStmt{}}};
    return {MailStatement{TestStmt{to_expr(operand(0)), MathOp::Xor, to_expr(operand(1))}}};
  }

  if (m == "B") {
    std::int64_t imm;
    if (have(1) && parse_imm(upper(trim(raw_ops[0])), imm))
      return {MailStatement{JumpStmt{Address{ConstAddr{static_cast<std::uint64_t>(imm)}}}}};
    return {MailStatement{JumpStmt{Address{UnknownAddr{}}}}};
  }
  if (m == "BX") return {MailStatement{JumpStmt{Address{UnknownAddr{}}}}};
  if (m == "BL" || m == "BLX") {
    CallStmt s;
    std::int64_t imm;
    if (have(1) && parse_imm(upper(trim(raw_ops[0])), imm))
      s.target = Address{ConstAddr{static_cast<std::uint64_t>(imm)}};
    else
      s.target = Address{UnknownAddr{}};
    return {MailStatement{std::move(s)}};
  }

  auto push_regs = [&](const std::vector<std::string>& regs) {
    std::vector<MailStatement> out;
    for (const auto& r : regs)
      out.push_back(assign(Address{StackRef{true, 1}}, AssignRhs{reg(r)}));
    return out;
  };
  auto pop_regs = [&](const std::vector<std::string>& regs) {
    std::vector<MailStatement> out;
    for (const auto& r : regs) {
      if (r == "PC") {  // popping the program counter is the function return
        out.push_back(MailStatement{JumpStmt{Address{StackRef{false, 8}}}});
        continue;
      }
      out.push_back(assign(Register{r}, AssignRhs{Expr{Address{StackRef{false, 1}}}}));
    }
    return out;
  };

  if (m == "PUSH" && have(1)) return push_regs(reg_list(raw_ops[0]));
  if (m == "POP" && have(1)) return pop_regs(reg_list(raw_ops[0]));
  if ((m == "STMFD" || m == "STMDB") && have(2)) return push_regs(reg_list(raw_ops[1]));
  if ((m == "LDMFD" || m == "LDMIA") && have(2)) return pop_regs(reg_list(raw_ops[1]));

  return {MailStatement{UnknownStmt{}}};
}

inline bool known_stem(const std::string& m) {
  static const std::unordered_set<std::string_view> kKnown = {
      "NOP", "MOV", "MOVW", "MOVT", "MVN", "MRS", "MSR",
      "LDR", "LDRB", "LDRH", "LDRSB", "LDRSH", "LDRD",
      "STR", "STRB", "STRH", "STRD",
      "ADD", "ADC", "SUB", "SBC", "RSB", "RSC", "MUL", "MLA", "MLS",
      "UMULL", "SMULL", "SDIV", "UDIV", "LSL", "LSR", "ASR", "ROR",
      "AND", "ORR", "EOR", "BIC",
      "CMP", "CMN", "TST", "TEQ",
      "B", "BX", "BL", "BLX",
      "PUSH", "POP", "STMFD", "STMDB", "LDMFD", "LDMIA",
  };
  return kKnown.count(m) > 0;
}

inline std::vector<MailStatement> lift_arm_statements(const AsmInstruction& insn,
                                                      LiftContext& ctx) {
  std::string m = insn.mnemonic;
  if (ignore_set().count(m)) return {};
  if (known_stem(m)) return lift_body(m, insn.operands, ctx);

  // Peel predication and flag-setting suffixes: cond code first (BLS ->
  // B + LS), then 'S' (ADDS -> ADD), then both (ADDSLE).
  auto try_peel = [&](const std::string& name, std::string& stem,
                      std::string& cc) -> bool {
    if (name.size() > 2) {
      std::string suffix = name.substr(name.size() - 2);
      std::string head = name.substr(0, name.size() - 2);
      if (condition_for(suffix)) {
        if (known_stem(head)) {
          stem = head;
          cc = suffix;
          return true;
        }
        if (!head.empty() && head.back() == 'S' && known_stem(head.substr(0, head.size() - 1))) {
          stem = head.substr(0, head.size() - 1);
          cc = suffix;
          return true;
        }
      }
      if (suffix == "AL" && known_stem(head)) {  // explicit always
        stem = head;
        cc.clear();
        return true;
      }
    }
    if (name.size() > 1 && name.back() == 'S' && known_stem(name.substr(0, name.size() - 1))) {
      stem = name.substr(0, name.size() - 1);
      cc.clear();
      return true;
    }
    return false;
  };

  std::string stem, cc;
  if (!try_peel(m, stem, cc)) return {MailStatement{UnknownStmt{}}};
  std::vector<MailStatement> body = lift_body(stem, insn.operands, ctx);
  if (cc.empty()) return body;
  auto cond = condition_for(cc);
  if (!cond) return body;
  // Wrap single assignments/jumps in a control statement; other bodies stay
  // unpredicated (the grammar's control arms admit only jump/assignment).
  if (body.size() == 1) {
    if (const AssignmentStmt* a = body[0].as<AssignmentStmt>()) {
      ControlStmt s;
      s.cond = std::move(*cond);
      s.then_arm = *a;
      return {MailStatement{std::move(s)}};
    }
    if (const JumpStmt* j = body[0].as<JumpStmt>()) {
      ControlStmt s;
      s.cond = std::move(*cond);
      s.then_arm = *j;
      return {MailStatement{std::move(s)}};
    }
  }
  return body;
}

}  // namespace detail

}  // namespace arm

// Lift one ARM instruction (total, like the x86 entry point).
inline LiftResult lift_instruction_arm(const AsmInstruction& insn, LiftContext& ctx) {
  LiftResult result;
  result.consumed = insn;
  result.statements = arm::detail::lift_arm_statements(insn, ctx);
  for (auto& s : result.statements) s.pattern = classify_pattern(s, ctx.classify);
  return result;
}

inline LiftResult lift_instruction_arm(const AsmInstruction& insn) {
  LiftContext ctx;
  return lift_instruction_arm(insn, ctx);
}

}  // namespace mail

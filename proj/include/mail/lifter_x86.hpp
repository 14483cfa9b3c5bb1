// x86-64 to MAIL lifting. Instructions on the ignore list lift to zero
// statements, unrecognized mnemonics to exactly one UNKNOWN statement, and
// everything in the table below to the statement forms documented in
// data/lifting_x86.tsv. Produced statements are pattern-classified.
#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mail/core.hpp"
#include "mail/disasm.hpp"

namespace mail {

struct LiftResult {
  std::vector<MailStatement> statements;
  AsmInstruction consumed;
};

// Per-function state: XCHG-style temporaries gr_<k> number from 0 and reset
// at each function start.
struct LiftContext {
  std::uint32_t next_temp = 0;
  ClassifyOptions classify;
};

namespace x86 {

using Operand = std::variant<Register, std::int64_t, Address>;

namespace detail {

using mail::detail::trim;
using mail::detail::upper;

inline bool is_size_keyword(std::string_view t) {
  static const std::unordered_set<std::string_view> kSizes = {
      "BYTE", "WORD", "DWORD", "QWORD", "TBYTE", "OWORD",
      "XMMWORD", "YMMWORD", "ZMMWORD", "PTR", "FAR", "NEAR", "SHORT"};
  return kSizes.count(t) > 0;
}

inline bool parse_imm(std::string_view s, std::int64_t& out) {
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return false;
  std::uint64_t v = 0;
  if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) {
    if (!mail::detail::parse_hex_u64(s, v)) return false;
  } else {
    for (char c : s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
  }
  out = neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
  return true;
}

// x87 stack registers map onto the synthetic float registers: ST/ST(0) ->
// fr_0, ST(i) -> fr_i.
inline bool st_register(std::string_view t, std::string& out) {
  if (t == "ST" || t == "ST0") { out = "fr_0"; return true; }
  if (t.rfind("ST(", 0) == 0 && t.back() == ')') {
    out = "fr_" + std::string(t.substr(3, t.size() - 4));
    return true;
  }
  return false;
}

inline Operand parse_operand(std::string_view raw) {
  std::string text = upper(trim(raw));
  // Drop size prefixes: "DWORD [RBP-0x18]", "QWORD PTR [RAX]".
  for (;;) {
    std::size_t sp = text.find(' ');
    if (sp == std::string::npos) break;
    std::string first = text.substr(0, sp);
    if (!is_size_keyword(first)) break;
    text = std::string(trim(std::string_view(text).substr(sp + 1)));
  }
  if (text.empty()) return Register{"?"};

  if (text.front() == '[') {
    std::string_view inner = trim(std::string_view(text).substr(1, text.size() - 2));
    RegAddr addr;
    auto push_term = [&](std::string_view term) {
      std::int64_t imm;
      std::string st;
      if (parse_imm(term, imm))
        addr.terms.push_back(imm);
      else if (st_register(term, st))
        addr.terms.push_back(Register{st});
      else
        addr.terms.push_back(Register{std::string(term)});
    };
    std::size_t start = 0;
    for (std::size_t i = 0; i <= inner.size(); ++i) {
      bool at_end = i == inner.size();
      char c = at_end ? 0 : inner[i];
      bool sep = !at_end && (c == '+' || c == '-' || c == '*') &&
                 !trim(inner.substr(start, i - start)).empty();
      if (at_end || sep) {
        std::string_view term = trim(inner.substr(start, i - start));
        if (!term.empty()) push_term(term);
        if (!at_end) {
          addr.ops.push_back(c == '+' ? MathOp::Add : c == '-' ? MathOp::Sub : MathOp::Mul);
          start = i + 1;
        }
      }
    }
    if (addr.terms.empty()) return Address{UnknownAddr{}};
    // Fold "+ -k" into "- k" so the canonical form stays register-first.
    for (std::size_t k = 1; k < addr.terms.size(); ++k) {
      std::int64_t* c = std::get_if<std::int64_t>(&addr.terms[k]);
      if (c && *c < 0 && addr.ops[k - 1] == MathOp::Add) {
        addr.ops[k - 1] = MathOp::Sub;
        *c = -*c;
      }
    }
    if (addr.terms.size() == 1) {
      if (const std::int64_t* c = std::get_if<std::int64_t>(&addr.terms[0]))
        return Address{ConstAddr{static_cast<std::uint64_t>(*c)}};
      return Address{std::move(addr)};
    }
    // Put a leading constant term last when all joins are '+' so the emitted
    // form matches the grammar's register-first rule.
    if (std::holds_alternative<std::int64_t>(addr.terms.front())) {
      bool all_add = true;
      for (MathOp op : addr.ops) all_add &= op == MathOp::Add;
      if (all_add) {
        auto first = addr.terms.front();
        addr.terms.erase(addr.terms.begin());
        addr.terms.push_back(first);
      }
    }
    return Address{std::move(addr)};
  }

  std::int64_t imm;
  if (parse_imm(text, imm)) return imm;
  std::string st;
  if (st_register(text, st)) return Register{std::move(st)};
  return Register{std::move(text)};
}

inline Expr to_expr(const Operand& op) {
  if (const Register* r = std::get_if<Register>(&op)) return Expr{*r};
  if (const std::int64_t* c = std::get_if<std::int64_t>(&op)) return Expr{*c};
  return Expr{std::get<Address>(op)};
}

inline std::variant<Register, Address> to_dest(const Operand& op) {
  if (const Register* r = std::get_if<Register>(&op)) return *r;
  if (const Address* a = std::get_if<Address>(&op)) return *a;
  return Register{"?"};  // immediate destination: malformed input
}

inline MailStatement assign(std::variant<Register, Address> dest, AssignRhs rhs) {
  AssignmentStmt s;
  s.dest = std::move(dest);
  s.rhs = std::move(rhs);
  return MailStatement{std::move(s)};
}

inline Expr reg(std::string name) { return Expr{Register{std::move(name)}}; }
inline Expr constant(std::int64_t v) { return Expr{v}; }

inline MailStatement bin_assign(const Operand& dest, MathOp op, const Operand& src) {
  BinaryRhs rhs{to_expr(dest), op, to_expr(src)};
  return assign(to_dest(dest), AssignRhs{std::move(rhs)});
}

inline MailStatement libcall(std::string name, std::vector<Expr> args) {
  return MailStatement{LibCallStmt{LibCallExpr{std::move(name), std::move(args)}}};
}

inline Comparison flag_is(const char* flag, std::int64_t v) {
  return Comparison{reg(flag), RelOp::Eq, constant(v)};
}

inline Comparison flag_rel(const char* a, RelOp op, const char* b) {
  return Comparison{reg(a), op, reg(b)};
}

inline Condition cond1(Comparison c) { return Condition{{std::move(c)}, {}}; }

inline Condition cond2(Comparison a, CondJoin j, Comparison b) {
  return Condition{{std::move(a), std::move(b)}, {j}};
}

// Flag predicate table for Jcc/SETcc (standard x86 condition semantics; only
// the rendered predicate shape matters to the pattern tags).
inline std::optional<Condition> condition_for(std::string_view cc) {
  if (cc == "Z" || cc == "E") return cond1(flag_is("ZF", 1));
  if (cc == "NZ" || cc == "NE") return cond1(flag_is("ZF", 0));
  if (cc == "L" || cc == "NGE") return cond1(flag_rel("SF", RelOp::Ne, "OF"));
  if (cc == "LE" || cc == "NG")
    return cond2(flag_is("ZF", 1), CondJoin::Or, flag_rel("SF", RelOp::Ne, "OF"));
  if (cc == "G" || cc == "NLE")
    return cond2(flag_is("ZF", 0), CondJoin::And, flag_rel("SF", RelOp::Eq, "OF"));
  if (cc == "GE" || cc == "NL") return cond1(flag_rel("SF", RelOp::Eq, "OF"));
  if (cc == "B" || cc == "C" || cc == "NAE") return cond1(flag_is("CF", 1));
  if (cc == "BE" || cc == "NA")
    return cond2(flag_is("CF", 1), CondJoin::Or, flag_is("ZF", 1));
  if (cc == "A" || cc == "NBE")
    return cond2(flag_is("CF", 0), CondJoin::And, flag_is("ZF", 0));
  if (cc == "AE" || cc == "NB" || cc == "NC") return cond1(flag_is("CF", 0));
  if (cc == "S") return cond1(flag_is("SF", 1));
  if (cc == "NS") return cond1(flag_is("SF", 0));
  if (cc == "O") return cond1(flag_is("OF", 1));
  if (cc == "NO") return cond1(flag_is("OF", 0));
  if (cc == "P" || cc == "PE") return cond1(flag_is("PF", 1));
  if (cc == "NP" || cc == "PO") return cond1(flag_is("PF", 0));
  return std::nullopt;
}

// x86 instructions that are never translated. Families that cover many
// variants (PREFETCHx, PSHUFx, PSADx, PSIGNx) are matched by prefix.
inline const std::unordered_set<std::string_view>& ignore_set() {
  static const std::unordered_set<std::string_view> kIgnore = {
      "3DNOW",
      "AAA", "AAD", "AAM", "AAS", "AESDEC", "AESDECLAST", "AESENC",
      "AESENCLAST", "AESIMC", "AESKEYGENASSIST", "ARPL",
      "BOUND",
      "DAA", "DAS",
      "EMMS", "ENTER",
      "GETSEC",
      "CLFLUSH", "CLTS", "CMC", "CPUID", "CRC32",
      "FCLEX", "FDECSTP", "FEDISI", "FEEMS", "FENI", "FFREE", "FINCSTP",
      "FINIT", "FLDCW", "FLDENV", "FNCLEX", "FNINIT", "FNSAVE", "FNSTCW",
      "FNSTENV", "FNSTSW", "FRSTOR", "FSAVE", "FSETPM", "FSTCW", "FSTENV",
      "FSTSW", "FXRSTOR", "FXRSTOR64", "FXSAVE", "FXSAVE64", "FXTRACT",
      "INT3", "INVD", "INVEPT", "INVLPG", "INVLPGA", "INVPCID", "INVVPID",
      "LEAVE", "LFENCE", "LZCNT",
      "MFENCE", "MONITOR", "MPSADBW", "MWAIT",
      "PAUSE",
      "RCL", "RCR", "RDRAND", "RDTSC", "RDTSCP", "ROL", "ROR", "RSM",
      "SFENCE", "SHUFPD", "SHUFPS", "SKINIT", "SMSW",
      "SYSCALL", "SYSENTER", "SYSEXIT", "SYSRET",
      "VAESDEC", "VAESDECLAST", "VAESENC", "VAESENCLAST", "VAESIMC",
      "VAESKEYGENASSIST", "VERR", "VERW", "VMCALL", "VMCLEAR", "VMFUNC",
      "VMLAUNCH", "VMLOAD", "VMMCALL", "VMPSADBW", "VMREAD", "VMRESUME",
      "VMRUN", "VMSAVE", "VMWRITE", "VMXOFF", "VSHUFPD", "VSHUFPS",
      "VZEROALL", "VZEROUPPER",
      "WAIT", "WBINVD",
      "XRSTOR", "XSAVE", "XSAVEOPT",
  };
  return kIgnore;
}

inline bool is_ignored(std::string_view m) {
  if (ignore_set().count(m)) return true;
  return m.rfind("PREFETCH", 0) == 0 || m.rfind("PSHUF", 0) == 0 ||
         m.rfind("PSAD", 0) == 0 || m.rfind("PSIGN", 0) == 0;
}

inline bool is_nop(std::string_view m) {
  return m == "NOP" || m == "NOPL" || m == "NOPW";
}

struct BinRule { MathOp op; };

inline const std::unordered_map<std::string_view, MathOp>& bin_table() {
  static const std::unordered_map<std::string_view, MathOp> kBin = {
      {"ADD", MathOp::Add},   {"ADC", MathOp::Add},
      {"SUB", MathOp::Sub},   {"SBB", MathOp::Sub},
      {"IMUL", MathOp::Mul},  {"MUL", MathOp::Mul},
      {"IDIV", MathOp::Div},  {"DIV", MathOp::Div},
      {"AND", MathOp::And},   {"OR", MathOp::Or},    {"XOR", MathOp::Xor},
      {"SHL", MathOp::Shl},   {"SAL", MathOp::Shl},
      {"SHR", MathOp::Shr},   {"SAR", MathOp::Shr},
      {"ADDPS", MathOp::Add}, {"ADDPD", MathOp::Add},
      {"ADDSS", MathOp::Add}, {"ADDSD", MathOp::Add},
      {"SUBPS", MathOp::Sub}, {"SUBPD", MathOp::Sub},
      {"SUBSS", MathOp::Sub}, {"SUBSD", MathOp::Sub},
      {"MULPS", MathOp::Mul}, {"MULPD", MathOp::Mul},
      {"MULSS", MathOp::Mul}, {"MULSD", MathOp::Mul},
      {"DIVPS", MathOp::Div}, {"DIVPD", MathOp::Div},
      {"DIVSS", MathOp::Div}, {"DIVSD", MathOp::Div},
      {"ANDPS", MathOp::And}, {"ANDPD", MathOp::And}, {"PAND", MathOp::And},
      {"ORPS", MathOp::Or},   {"ORPD", MathOp::Or},   {"POR", MathOp::Or},
      {"PXOR", MathOp::Xor},  {"XORPS", MathOp::Xor}, {"XORPD", MathOp::Xor},
      {"PSLLW", MathOp::Shl}, {"PSLLD", MathOp::Shl}, {"PSLLQ", MathOp::Shl},
      {"PSRLW", MathOp::Shr}, {"PSRLD", MathOp::Shr}, {"PSRLQ", MathOp::Shr},
  };
  return kBin;
}

inline std::optional<MathOp> packed_bin(std::string_view m) {
  if (m.rfind("PADD", 0) == 0) return MathOp::Add;
  if (m.rfind("PSUB", 0) == 0) return MathOp::Sub;
  if (m.rfind("PMUL", 0) == 0) return MathOp::Mul;
  return std::nullopt;
}

inline const std::unordered_set<std::string_view>& move_table() {
  static const std::unordered_set<std::string_view> kMove = {
      "MOV", "MOVL", "MOVAPS", "MOVAPD", "MOVUPS", "MOVUPD", "MOVDQA",
      "MOVDQU", "MOVD", "MOVQ", "MOVSS", "MOVNTI", "MOVBE", "LDDQU",
  };
  return kMove;
}

inline const std::unordered_map<std::string_view, std::string_view>& sse_lib_table() {
  // dest = fn(dest, src) style SSE helpers.
  static const std::unordered_map<std::string_view, std::string_view> kLib = {
      {"PAVGB", "avg"},  {"PAVGW", "avg"},
      {"MAXPS", "max"},  {"MAXPD", "max"},  {"MAXSS", "max"},  {"MAXSD", "max"},
      {"PMAXSB", "max"}, {"PMAXSW", "max"}, {"PMAXSD", "max"},
      {"PMAXUB", "max"}, {"PMAXUW", "max"}, {"PMAXUD", "max"},
      {"MINPS", "min"},  {"MINPD", "min"},  {"MINSS", "min"},  {"MINSD", "min"},
      {"PMINSB", "min"}, {"PMINSW", "min"}, {"PMINSD", "min"},
      {"PMINUB", "min"}, {"PMINUW", "min"}, {"PMINUD", "min"},
  };
  return kLib;
}

inline std::string string_acc(std::string_view m) {
  if (m.size() > 4) {
    switch (m.back()) {
      case 'B': return "AL";
      case 'W': return "AX";
      case 'D': return "EAX";
      case 'Q': return "RAX";
    }
  }
  return "EAX";
}

}  // namespace detail

// Lift one x86 instruction. Total: anything outside the table and ignore
// set degrades to a single UNKNOWN statement.
inline LiftResult lift_instruction(const AsmInstruction& insn, LiftContext& ctx);

namespace detail {

inline std::vector<MailStatement> lift_x86_statements(const AsmInstruction& insn,
                                                      LiftContext& ctx) {
  const std::string& m = insn.mnemonic;
  const auto& ops = insn.operands;
  auto operand = [&](std::size_t i) { return parse_operand(ops[i]); };
  auto imm_operand = [&](std::size_t i, std::int64_t& out) {
    Operand op = operand(i);
    if (const std::int64_t* c = std::get_if<std::int64_t>(&op)) {
      out = *c;
      return true;
    }
    return false;
  };

  if (is_ignored(m)) return {};
  if (is_nop(m)) return {};
  if (m == "INT" && ops.size() == 1) {
    std::int64_t v;
    if (imm_operand(0, v) && v == 3) return {};  // "INT 3" is on the ignore list
    return {MailStatement{UnknownStmt{}}};
  }

  // Prefixes that wrap another instruction written on the same line.
  if (m == "LOCK" || m == "REP" || m == "REPE" || m == "REPZ" || m == "REPNE" ||
      m == "REPNZ") {
    std::vector<MailStatement> out;
    if (m == "LOCK") out.push_back(MailStatement{LockStmt{}});
    if (!ops.empty()) {
      AsmInstruction inner = insn;
      std::string first = ops[0];
      std::size_t sp = first.find(' ');
      inner.mnemonic = upper(sp == std::string::npos ? first : first.substr(0, sp));
      inner.operands.clear();
      if (sp != std::string::npos) inner.operands.push_back(std::string(trim(std::string_view(first).substr(sp + 1))));
      for (std::size_t i = 1; i < ops.size(); ++i) inner.operands.push_back(ops[i]);
      auto body = lift_x86_statements(inner, ctx);
      for (auto& s : body) out.push_back(std::move(s));
    }
    return out;
  }

  if (move_table().count(m) || m.rfind("CMOV", 0) == 0) {
    if (ops.size() < 2) return {MailStatement{UnknownStmt{}}};
    Operand dst = operand(0), src = operand(1);
    return {assign(to_dest(dst), AssignRhs{to_expr(src)})};
  }
  if (m == "MOVSD") {
    if (ops.size() >= 2) {  // SSE scalar move; the 0-operand form is the string op
      Operand dst = operand(0), src = operand(1);
      return {assign(to_dest(dst), AssignRhs{to_expr(src)})};
    }
    RegAddr rsi, rdi;
    rsi.terms.push_back(Register{"RSI"});
    rdi.terms.push_back(Register{"RDI"});
    return {assign(Address{rdi}, AssignRhs{Expr{Address{rsi}}})};
  }

  if (m == "LEA") {
    if (ops.size() < 2) return {MailStatement{UnknownStmt{}}};
    Operand dst = operand(0), src = operand(1);
    const Address* a = std::get_if<Address>(&src);
    if (!a) return {assign(to_dest(dst), AssignRhs{to_expr(src)})};
    if (const ConstAddr* c = std::get_if<ConstAddr>(a))
      return {assign(to_dest(dst), AssignRhs{constant(static_cast<std::int64_t>(c->value))})};
    const RegAddr& ra = std::get<RegAddr>(*a);
    if (ra.terms.size() == 1)
      return {assign(to_dest(dst), AssignRhs{to_expr(Operand{std::get<Register>(ra.terms[0])})})};
    if (ra.terms.size() == 2) {
      auto term_expr = [](const RegAddr::Term& t) {
        if (const Register* r = std::get_if<Register>(&t)) return Expr{*r};
        return Expr{std::get<std::int64_t>(t)};
      };
      BinaryRhs rhs{term_expr(ra.terms[0]), ra.ops[0], term_expr(ra.terms[1])};
      return {assign(to_dest(dst), AssignRhs{std::move(rhs)})};
    }
    return {assign(to_dest(dst), AssignRhs{Expr{*a}})};
  }

  if (auto it = bin_table().find(m); it != bin_table().end() || packed_bin(m)) {
    MathOp op = it != bin_table().end() ? it->second : *packed_bin(m);
    if (ops.empty()) return {MailStatement{UnknownStmt{}}};
    if (ops.size() == 1) {
      // One-operand MUL/DIV family works on the accumulator; one-operand
      // shifts shift by one.
      if (op == MathOp::Mul || op == MathOp::Div) {
        Operand acc = Operand{Register{"EAX"}};
        BinaryRhs rhs{to_expr(acc), op, to_expr(operand(0))};
        return {assign(Register{"EAX"}, AssignRhs{std::move(rhs)})};
      }
      Operand dst = operand(0);
      BinaryRhs rhs{to_expr(dst), op, constant(1)};
      return {assign(to_dest(dst), AssignRhs{std::move(rhs)})};
    }
    Operand dst = operand(0), src = operand(1);
    if (ops.size() >= 3 && op == MathOp::Mul) {  // IMUL r, r/m, imm
      BinaryRhs rhs{to_expr(src), op, to_expr(operand(2))};
      return {assign(to_dest(dst), AssignRhs{std::move(rhs)})};
    }
    // Grouping rules: "xor r,r" and "sub r,r" zero the destination,
    // "add r,0" keeps it.
    bool same = dst == src;
    if (same && (op == MathOp::Xor || op == MathOp::Sub))
      return {assign(to_dest(dst), AssignRhs{constant(0)})};
    if (op == MathOp::Add) {
      if (const std::int64_t* c = std::get_if<std::int64_t>(&src); c && *c == 0)
        return {assign(to_dest(dst), AssignRhs{to_expr(dst)})};
    }
    return {bin_assign(dst, op, src)};
  }

  if (m == "INC" || m == "DEC") {
    if (ops.empty()) return {MailStatement{UnknownStmt{}}};
    Operand dst = operand(0);
    BinaryRhs rhs{to_expr(dst), MathOp::Add, constant(m == "INC" ? 1 : -1)};
    return {assign(to_dest(dst), AssignRhs{std::move(rhs)})};
  }
  if (m == "NEG" || m == "NOT") {
    if (ops.empty()) return {MailStatement{UnknownStmt{}}};
    Operand dst = operand(0);
    UnaryRhs rhs{m == "NEG" ? MathOp::Sub : MathOp::Not, to_expr(dst)};
    return {assign(to_dest(dst), AssignRhs{std::move(rhs)})};
  }

  if (m == "PUSH") {
    if (ops.empty()) return {MailStatement{UnknownStmt{}}};
    return {assign(Address{StackRef{true, 1}}, AssignRhs{to_expr(operand(0))})};
  }
  if (m == "POP") {
    if (ops.empty()) return {MailStatement{UnknownStmt{}}};
    return {assign(to_dest(operand(0)), AssignRhs{Expr{Address{StackRef{false, 1}}}})};
  }
  if (m == "PUSHF" || m == "PUSHFD" || m == "PUSHFQ")
    return {assign(Address{StackRef{true, 1}}, AssignRhs{reg("EFLAGS")})};
  if (m == "POPF" || m == "POPFD" || m == "POPFQ")
    return {assign(Register{"EFLAGS"}, AssignRhs{Expr{Address{StackRef{false, 1}}}})};
  if (m == "LAHF") return {assign(Register{"AH"}, AssignRhs{reg("EFLAGS")})};
  if (m == "SAHF") return {assign(Register{"EFLAGS"}, AssignRhs{reg("AH")})};

  if (m == "CALL" || m == "CALLQ") {
    CallStmt s;
    std::int64_t imm;
    if (!ops.empty() && imm_operand(0, imm))
      s.target = Address{ConstAddr{static_cast<std::uint64_t>(imm)}};
    else
      s.target = Address{UnknownAddr{}};  // indirect call target
    return {MailStatement{std::move(s)}};
  }
  if (m == "RET" || m == "RETN" || m == "RETF" || m == "IRET" || m == "IRETD" ||
      m == "IRETQ")
    return {MailStatement{JumpStmt{Address{StackRef{false, 8}}}}};

  if (m == "CMP")
    return ops.size() >= 2
               ? std::vector<MailStatement>{libcall("compare", {to_expr(operand(0)), to_expr(operand(1))})}
               : std::vector<MailStatement>{MailStatement{UnknownStmt{}}};
  if (m == "TEST") {
    if (ops.size() < 2) return {MailStatement{UnknownStmt{}}};
    TestStmt s{to_expr(operand(0)), MathOp::And, to_expr(operand(1))};
    return {MailStatement{std::move(s)}};
  }

  if (m == "JMP" || m == "JMPQ") {
    std::int64_t imm;
    if (!ops.empty() && imm_operand(0, imm))
      return {MailStatement{JumpStmt{Address{ConstAddr{static_cast<std::uint64_t>(imm)}}}}};
    return {MailStatement{JumpStmt{Address{UnknownAddr{}}}}};
  }

  auto conditional_jump = [&](Condition cond) -> std::vector<MailStatement> {
    ControlStmt s;
    s.cond = std::move(cond);
    std::int64_t imm;
    if (!ops.empty() && imm_operand(0, imm))
      s.then_arm = JumpStmt{Address{ConstAddr{static_cast<std::uint64_t>(imm)}}};
    else
      s.then_arm = JumpStmt{Address{UnknownAddr{}}};
    return {MailStatement{std::move(s)}};
  };

  if (m == "JCXZ") return conditional_jump(cond1({reg("CX"), RelOp::Eq, constant(0)}));
  if (m == "JECXZ") return conditional_jump(cond1({reg("ECX"), RelOp::Eq, constant(0)}));
  if (m == "JRCXZ") return conditional_jump(cond1({reg("RCX"), RelOp::Eq, constant(0)}));
  if (m == "LOOP") return conditional_jump(cond1({reg("ECX"), RelOp::Ne, constant(0)}));
  if (m == "LOOPE" || m == "LOOPZ")
    return conditional_jump(
        cond2({reg("ECX"), RelOp::Ne, constant(0)}, CondJoin::And, flag_is("ZF", 1)));
  if (m == "LOOPNE" || m == "LOOPNZ")
    return conditional_jump(
        cond2({reg("ECX"), RelOp::Ne, constant(0)}, CondJoin::And, flag_is("ZF", 0)));

  if (m.size() > 1 && m[0] == 'J') {
    if (auto cond = condition_for(std::string_view(m).substr(1)))
      return conditional_jump(std::move(*cond));
  }
  if (m.rfind("SET", 0) == 0) {
    if (auto cond = condition_for(std::string_view(m).substr(3))) {
      if (ops.empty()) return {MailStatement{UnknownStmt{}}};
      Operand dst = operand(0);
      ControlStmt s;
      s.cond = std::move(*cond);
      AssignmentStmt then_a{to_dest(dst), AssignRhs{constant(1)}};
      AssignmentStmt else_a{to_dest(dst), AssignRhs{constant(0)}};
      s.then_arm = std::move(then_a);
      s.else_arm = std::move(else_a);
      return {MailStatement{std::move(s)}};
    }
  }

  if (m == "XCHG" || m == "XADD") {
    if (ops.size() < 2) return {MailStatement{UnknownStmt{}}};
    Operand a = operand(0), b = operand(1);
    Register tmp{"gr_" + std::to_string(ctx.next_temp++)};
    std::vector<MailStatement> out;
    out.push_back(assign(tmp, AssignRhs{to_expr(a)}));
    if (m == "XCHG")
      out.push_back(assign(to_dest(a), AssignRhs{to_expr(b)}));
    else
      out.push_back(assign(to_dest(a), AssignRhs{BinaryRhs{to_expr(a), MathOp::Add, to_expr(b)}}));
    out.push_back(assign(to_dest(b), AssignRhs{Expr{tmp}}));
    return out;
  }

  // Width conversions (sign/zero extensions and int/float conversions).
  if (m == "MOVSX" || m == "MOVZX" || m == "MOVSXD" || m.rfind("CVT", 0) == 0) {
    if (ops.size() < 2) return {MailStatement{UnknownStmt{}}};
    return {assign(to_dest(operand(0)),
                   AssignRhs{LibCallExpr{"convert", {to_expr(operand(1))}}})};
  }
  if (m == "CBW") return {assign(Register{"AX"}, AssignRhs{LibCallExpr{"convert", {reg("AL")}}})};
  if (m == "CWDE") return {assign(Register{"EAX"}, AssignRhs{LibCallExpr{"convert", {reg("AX")}}})};
  if (m == "CDQE") return {assign(Register{"RAX"}, AssignRhs{LibCallExpr{"convert", {reg("EAX")}}})};
  if (m == "CWD") return {assign(Register{"DX:AX"}, AssignRhs{LibCallExpr{"convert", {reg("AX")}}})};
  if (m == "CDQ") return {assign(Register{"EDX:EAX"}, AssignRhs{LibCallExpr{"convert", {reg("EAX")}}})};
  if (m == "CQO") return {assign(Register{"RDX:RAX"}, AssignRhs{LibCallExpr{"convert", {reg("RAX")}}})};

  if (m == "CLD") return {assign(Register{"DF"}, AssignRhs{constant(0)})};
  if (m == "STD") return {assign(Register{"DF"}, AssignRhs{constant(1)})};
  if (m == "CLC") return {assign(Register{"CF"}, AssignRhs{constant(0)})};
  if (m == "STC") return {assign(Register{"CF"}, AssignRhs{constant(1)})};
  if (m == "HLT") return {MailStatement{HaltStmt{}}};

  // String instructions: one flat statement over the implicit operands.
  if (m == "CMPS" || m == "CMPSB" || m == "CMPSW" || m == "CMPSQ" ||
      (m == "CMPSD" && ops.empty())) {
    RegAddr rsi, rdi;
    rsi.terms.push_back(Register{"RSI"});
    rdi.terms.push_back(Register{"RDI"});
    return {libcall("compare", {Expr{Address{rsi}}, Expr{Address{rdi}}})};
  }
  if (m == "CMPSD" && ops.size() >= 2)
    return {libcall("compare", {to_expr(operand(0)), to_expr(operand(1))})};
  if (m.rfind("SCAS", 0) == 0 && m.size() <= 5) {
    RegAddr rdi;
    rdi.terms.push_back(Register{"RDI"});
    return {libcall("compare", {reg(string_acc(m)), Expr{Address{rdi}}})};
  }
  if (m.rfind("MOVS", 0) == 0 && m.size() <= 5 && ops.empty()) {
    RegAddr rsi, rdi;
    rsi.terms.push_back(Register{"RSI"});
    rdi.terms.push_back(Register{"RDI"});
    return {assign(Address{rdi}, AssignRhs{Expr{Address{rsi}}})};
  }
  if (m.rfind("LODS", 0) == 0 && m.size() <= 5) {
    RegAddr rsi;
    rsi.terms.push_back(Register{"RSI"});
    return {assign(Register{string_acc(m)}, AssignRhs{Expr{Address{rsi}}})};
  }
  if (m.rfind("STOS", 0) == 0 && m.size() <= 5) {
    RegAddr rdi;
    rdi.terms.push_back(Register{"RDI"});
    return {assign(Address{rdi}, AssignRhs{reg(string_acc(m))})};
  }

  // Bit scans and bit tests via the library registry.
  if (m == "BT" && ops.size() >= 2)
    return {assign(Register{"CF"},
                   AssignRhs{LibCallExpr{"bit", {to_expr(operand(0)), to_expr(operand(1)), constant(1)}}})};
  if (m == "BTS" && ops.size() >= 2)
    return {libcall("set", {to_expr(operand(0)), to_expr(operand(1)), constant(1)})};
  if (m == "BTR" && ops.size() >= 2)
    return {libcall("clear", {to_expr(operand(0)), to_expr(operand(1)), constant(1)})};
  if (m == "BTC" && ops.size() >= 2)
    return {libcall("complement", {to_expr(operand(0)), to_expr(operand(1))})};
  if (m == "BSF" && ops.size() >= 2)
    return {libcall("scanf", {to_expr(operand(1)), to_expr(operand(0))})};
  if (m == "BSR" && ops.size() >= 2)
    return {libcall("scanr", {to_expr(operand(1)), to_expr(operand(0))})};
  if (m == "POPCNT" && ops.size() >= 2)
    return {assign(to_dest(operand(0)), AssignRhs{LibCallExpr{"count", {to_expr(operand(1))}}})};
  if (m == "BSWAP" && !ops.empty())
    return {libcall("swap", {to_expr(operand(0))})};

  if (auto it = sse_lib_table().find(m); it != sse_lib_table().end()) {
    if (ops.size() < 2) return {MailStatement{UnknownStmt{}}};
    Operand dst = operand(0);
    return {assign(to_dest(dst),
                   AssignRhs{LibCallExpr{std::string(it->second),
                                         {to_expr(dst), to_expr(operand(1))}}})};
  }
  if ((m == "SQRTPS" || m == "SQRTPD" || m == "SQRTSS" || m == "SQRTSD") && ops.size() >= 2)
    return {assign(to_dest(operand(0)), AssignRhs{LibCallExpr{"sqrt", {to_expr(operand(1))}}})};
  if ((m == "ROUNDPS" || m == "ROUNDPD" || m == "ROUNDSS" || m == "ROUNDSD") && ops.size() >= 2)
    return {assign(to_dest(operand(0)), AssignRhs{LibCallExpr{"round", {to_expr(operand(1))}}})};
  if ((m == "PABSB" || m == "PABSW" || m == "PABSD") && ops.size() >= 2)
    return {assign(to_dest(operand(0)), AssignRhs{LibCallExpr{"abs", {to_expr(operand(1))}}})};

  // x87. The float stack maps to fr_<n>.
  if (m == "FLD" || m == "FILD") {
    if (ops.empty()) return {MailStatement{UnknownStmt{}}};
    return {assign(Register{"fr_0"}, AssignRhs{to_expr(operand(0))})};
  }
  if (m == "FLD1") return {assign(Register{"fr_0"}, AssignRhs{constant(1)})};
  if (m == "FLDZ") return {assign(Register{"fr_0"}, AssignRhs{constant(0)})};
  if (m == "FST" || m == "FSTP" || m == "FIST" || m == "FISTP") {
    if (ops.empty()) return {MailStatement{UnknownStmt{}}};
    return {assign(to_dest(operand(0)), AssignRhs{reg("fr_0")})};
  }
  if (m == "FADD" || m == "FADDP" || m == "FIADD" || m == "FSUB" || m == "FSUBP" ||
      m == "FISUB" || m == "FMUL" || m == "FMULP" || m == "FIMUL" || m == "FDIV" ||
      m == "FDIVP" || m == "FIDIV") {
    MathOp op = (m[1] == 'A' || (m[1] == 'I' && m[2] == 'A')) ? MathOp::Add
                : (m[1] == 'S' || (m[1] == 'I' && m[2] == 'S')) ? MathOp::Sub
                : (m[1] == 'M' || (m[1] == 'I' && m[2] == 'M')) ? MathOp::Mul
                                                                : MathOp::Div;
    if (ops.size() >= 2) return {bin_assign(operand(0), op, operand(1))};
    Expr rhs_src = ops.size() == 1 ? to_expr(operand(0)) : reg("fr_1");
    BinaryRhs rhs{reg("fr_0"), op, std::move(rhs_src)};
    return {assign(Register{"fr_0"}, AssignRhs{std::move(rhs)})};
  }
  if (m == "FSIN") return {assign(Register{"fr_0"}, AssignRhs{LibCallExpr{"sin", {reg("fr_0")}}})};
  if (m == "FCOS") return {assign(Register{"fr_0"}, AssignRhs{LibCallExpr{"cos", {reg("fr_0")}}})};
  if (m == "FSINCOS")
    return {assign(Register{"fr_0"}, AssignRhs{LibCallExpr{"sin", {reg("fr_0")}}}),
            assign(Register{"fr_1"}, AssignRhs{LibCallExpr{"cos", {reg("fr_0")}}})};
  if (m == "FPTAN") return {assign(Register{"fr_0"}, AssignRhs{LibCallExpr{"tan", {reg("fr_0")}}})};
  if (m == "FPATAN") return {assign(Register{"fr_1"}, AssignRhs{LibCallExpr{"atan", {reg("fr_1")}}})};
  if (m == "FSQRT") return {assign(Register{"fr_0"}, AssignRhs{LibCallExpr{"sqrt", {reg("fr_0")}}})};
  if (m == "FABS") return {assign(Register{"fr_0"}, AssignRhs{LibCallExpr{"abs", {reg("fr_0")}}})};
  if (m == "FCHS") return {assign(Register{"fr_0"}, AssignRhs{UnaryRhs{MathOp::Sub, reg("fr_0")}})};
  if (m == "FRNDINT") return {assign(Register{"fr_0"}, AssignRhs{LibCallExpr{"round", {reg("fr_0")}}})};
  if (m == "FXCH") {
    Expr other = ops.empty() ? reg("fr_1") : to_expr(operand(0));
    return {libcall("swap", {reg("fr_0"), std::move(other)})};
  }
  if (m == "FCOM" || m == "FCOMP" || m == "FCOMPP" || m == "FCOMI" || m == "FCOMIP" ||
      m == "FUCOM" || m == "FUCOMP" || m == "FUCOMPP" || m == "FUCOMI" || m == "FUCOMIP" ||
      m == "FICOM" || m == "FICOMP" || m == "FTST") {
    Expr other = ops.empty() ? (m == "FTST" ? constant(0) : reg("fr_1")) : to_expr(operand(0));
    if (ops.size() >= 2) return {libcall("compare", {to_expr(operand(0)), to_expr(operand(1))})};
    return {libcall("compare", {reg("fr_0"), std::move(other)})};
  }

  return {MailStatement{UnknownStmt{}}};
}

}  // namespace detail

}  // namespace x86

inline LiftResult lift_instruction(const AsmInstruction& insn, LiftContext& ctx) {
  LiftResult result;
  result.consumed = insn;
  result.statements = x86::detail::lift_x86_statements(insn, ctx);
  for (auto& s : result.statements) s.pattern = classify_pattern(s, ctx.classify);
  return result;
}

inline LiftResult lift_instruction(const AsmInstruction& insn) {
  LiftContext ctx;
  return lift_instruction(insn, ctx);
}

}  // namespace mail

// Machine-readable dump of the lifting tables (mnemonic -> rule id), shipped
// as data/lifting_x86.tsv and data/lifting_arm.tsv so the ignore sets can be
// audited. The enumeration shares the same underlying sets the dispatchers
// use; a unit test keeps the files in sync.
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mail/lifter_arm.hpp"
#include "mail/lifter_x86.hpp"

namespace mail {

using LiftingTable = std::vector<std::pair<std::string, std::string>>;

inline LiftingTable lifting_table_x86() {
  LiftingTable t;
  auto add = [&](std::string_view m, std::string_view rule) {
    t.push_back({std::string(m), std::string(rule)});
  };
  for (std::string_view m : x86::detail::ignore_set()) add(m, "ignore");
  for (std::string_view m : {"PREFETCH*", "PSHUF*", "PSAD*", "PSIGN*"}) add(m, "ignore");
  for (std::string_view m : {"NOP", "NOPL", "NOPW"}) add(m, "drop");
  for (std::string_view m : x86::detail::move_table()) add(m, "assign");
  add("CMOV<cc>", "assign");
  add("MOVSD", "assign_or_string_move");
  add("LEA", "assign_address_expr");
  for (const auto& [m, op] : x86::detail::bin_table())
    add(m, "assign_binop_" + std::string(to_token(op)));
  add("PADD*", "assign_binop_+");
  add("PSUB*", "assign_binop_-");
  add("PMUL*", "assign_binop_*");
  add("INC", "assign_binop_+");
  add("DEC", "assign_binop_+");
  add("NEG", "assign_unary");
  add("NOT", "assign_unary");
  add("PUSH", "stack_push");
  add("POP", "stack_pop");
  for (std::string_view m : {"PUSHF", "PUSHFD", "PUSHFQ"}) add(m, "flags_push");
  for (std::string_view m : {"POPF", "POPFD", "POPFQ"}) add(m, "flags_pop");
  add("LAHF", "flags_load");
  add("SAHF", "flags_store");
  add("CALL", "call");
  add("CALLQ", "call");
  for (std::string_view m : {"RET", "RETN", "RETF", "IRET", "IRETD", "IRETQ"})
    add(m, "return_jump");
  add("CMP", "compare_libcall");
  add("TEST", "test");
  add("JMP", "jump");
  add("JMPQ", "jump");
  add("J<cc>", "control_jump");
  for (std::string_view m : {"JCXZ", "JECXZ", "JRCXZ"}) add(m, "control_jump_cx");
  for (std::string_view m : {"LOOP", "LOOPE", "LOOPZ", "LOOPNE", "LOOPNZ"})
    add(m, "control_jump_loop");
  add("SET<cc>", "control_assign");
  add("XCHG", "exchange");
  add("XADD", "exchange_add");
  for (std::string_view m :
       {"MOVSX", "MOVZX", "MOVSXD", "CVT*", "CBW", "CWDE", "CDQE", "CWD", "CDQ", "CQO"})
    add(m, "convert_libcall");
  for (std::string_view m : {"CLD", "STD", "CLC", "STC"}) add(m, "flag_assign");
  add("HLT", "halt");
  add("LOCK", "lock_prefix");
  for (std::string_view m : {"REP", "REPE", "REPZ", "REPNE", "REPNZ"}) add(m, "rep_prefix");
  add("INT", "ignore_int3_else_unknown");
  for (std::string_view m : {"CMPS", "CMPSB", "CMPSW", "CMPSQ"}) add(m, "string_compare");
  for (std::string_view m : {"SCAS", "SCASB", "SCASW", "SCASD", "SCASQ"})
    add(m, "string_compare");
  for (std::string_view m : {"MOVS", "MOVSB", "MOVSW", "MOVSQ"}) add(m, "string_move");
  for (std::string_view m : {"LODS", "LODSB", "LODSW", "LODSD", "LODSQ"})
    add(m, "string_load");
  for (std::string_view m : {"STOS", "STOSB", "STOSW", "STOSD", "STOSQ"})
    add(m, "string_store");
  add("BT", "bit_libcall");
  add("BTS", "bit_libcall");
  add("BTR", "bit_libcall");
  add("BTC", "bit_libcall");
  add("BSF", "bit_libcall");
  add("BSR", "bit_libcall");
  add("POPCNT", "bit_libcall");
  add("BSWAP", "bit_libcall");
  for (const auto& [m, fn] : x86::detail::sse_lib_table())
    add(m, "lib_assign_" + std::string(fn));
  for (std::string_view m : {"SQRTPS", "SQRTPD", "SQRTSS", "SQRTSD"})
    add(m, "lib_assign_sqrt");
  for (std::string_view m : {"ROUNDPS", "ROUNDPD", "ROUNDSS", "ROUNDSD"})
    add(m, "lib_assign_round");
  for (std::string_view m : {"PABSB", "PABSW", "PABSD"}) add(m, "lib_assign_abs");
  for (std::string_view m :
       {"FLD", "FILD", "FLD1", "FLDZ", "FST", "FSTP", "FIST", "FISTP", "FADD", "FADDP",
        "FIADD", "FSUB", "FSUBP", "FISUB", "FMUL", "FMULP", "FIMUL", "FDIV", "FDIVP",
        "FIDIV", "FSIN", "FCOS", "FSINCOS", "FPTAN", "FPATAN", "FSQRT", "FABS", "FCHS",
        "FRNDINT", "FXCH", "FCOM", "FCOMP", "FCOMPP", "FCOMI", "FCOMIP", "FUCOM",
        "FUCOMP", "FUCOMPP", "FUCOMI", "FUCOMIP", "FICOM", "FICOMP", "FTST"})
    add(m, "x87");
  add("*", "unknown");
  std::sort(t.begin(), t.end());
  return t;
}

inline LiftingTable lifting_table_arm() {
  LiftingTable t;
  auto add = [&](std::string_view m, std::string_view rule) {
    t.push_back({std::string(m), std::string(rule)});
  };
  for (std::string_view m : arm::detail::ignore_set()) add(m, "ignore");
  add("NOP", "drop");
  for (std::string_view m : {"MOV", "MOVW", "MOVT"}) add(m, "assign");
  add("MVN", "assign_unary");
  add("MRS", "flags_load");
  add("MSR", "flags_store");
  for (std::string_view m : {"LDR", "LDRB", "LDRH", "LDRSB", "LDRSH", "LDRD"})
    add(m, "assign_load");
  for (std::string_view m : {"STR", "STRB", "STRH", "STRD"}) add(m, "assign_store");
  for (std::string_view m : {"ADD", "ADC"}) add(m, "assign_binop_+");
  for (std::string_view m : {"SUB", "SBC", "RSB", "RSC"}) add(m, "assign_binop_-");
  for (std::string_view m : {"MUL", "MLA", "MLS", "UMULL", "SMULL"}) add(m, "assign_binop_*");
  for (std::string_view m : {"SDIV", "UDIV"}) add(m, "assign_binop_/");
  add("LSL", "assign_binop_<<");
  for (std::string_view m : {"LSR", "ASR", "ROR"}) add(m, "assign_binop_>>");
  for (std::string_view m : {"AND", "BIC"}) add(m, "assign_binop_and");
  add("ORR", "assign_binop_or");
  add("EOR", "assign_binop_xor");
  add("CMP", "compare_libcall");
  add("CMN", "compare_libcall");
  add("TST", "test");
  add("TEQ", "test");
  add("B", "jump");
  add("BX", "jump_unknown");
  add("BL", "call");
  add("BLX", "call");
  add("PUSH", "stack_push");
  add("POP", "stack_pop");
  for (std::string_view m : {"STMFD", "STMDB"}) add(m, "stack_push");
  for (std::string_view m : {"LDMFD", "LDMIA"}) add(m, "stack_pop");
  add("<insn><cc>", "control_wrap");
  add("<insn>S", "assign_flags_dropped");
  add("*", "unknown");
  std::sort(t.begin(), t.end());
  return t;
}

inline std::string render_lifting_table(const LiftingTable& table) {
  std::string out;
  for (const auto& [m, rule] : table) out += m + "\t" + rule + "\n";
  return out;
}

}  // namespace mail

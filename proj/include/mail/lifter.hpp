// Whole-program lifting: wraps each disassembly function span in
// start_function_N / end_function_N markers and keys every lifted statement
// by its source instruction address.
#pragma once

#include <algorithm>

#include "mail/disasm.hpp"
#include "mail/lifter_arm.hpp"
#include "mail/lifter_x86.hpp"

namespace mail {

inline LiftResult lift_any(const AsmInstruction& insn, LiftContext& ctx) {
  return insn.arch == Arch::Arm ? lift_instruction_arm(insn, ctx)
                                : lift_instruction(insn, ctx);
}

inline MailProgram lift_program(const std::vector<DisasmFunction>& spans,
                                const ClassifyOptions& classify = {}) {
  MailProgram program;
  std::uint32_t index = 0;
  for (const auto& span : spans) {
    FunctionSpan fs;
    fs.index = index;
    fs.name = span.name.empty() ? "f" + std::to_string(index) : span.name;
    fs.start_addr = span.start_addr;
    fs.end_addr = span.end_addr;
    fs.first_stmt = program.statements.size();

    program.statements.push_back(
        {span.start_addr, MailStatement{FunctionMarkerStmt{true, index}}});
    LiftContext ctx;  // gr_<k> temporaries restart per function
    ctx.classify = classify;
    for (const auto& insn : span.instructions) {
      program.instruction_addrs.push_back(insn.address);
      LiftResult lifted = lift_any(insn, ctx);
      for (auto& stmt : lifted.statements)
        program.statements.push_back({insn.address, std::move(stmt)});
    }
    program.statements.push_back(
        {span.end_addr, MailStatement{FunctionMarkerStmt{false, index}}});

    fs.stmt_count = program.statements.size() - fs.first_stmt;
    program.functions.push_back(std::move(fs));
    ++index;
  }
  std::sort(program.instruction_addrs.begin(), program.instruction_addrs.end());
  program.instruction_addrs.erase(
      std::unique(program.instruction_addrs.begin(), program.instruction_addrs.end()),
      program.instruction_addrs.end());
  return program;
}

// ARM listings go through the same driver; the per-instruction dispatch is
// keyed by AsmInstruction::arch.
inline MailProgram lift_program_arm(const std::vector<DisasmFunction>& spans,
                                    const ClassifyOptions& classify = {}) {
  return lift_program(spans, classify);
}

}  // namespace mail

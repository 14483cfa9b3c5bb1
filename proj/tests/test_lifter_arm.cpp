#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "mail/lifter.hpp"
#include "mail/loops.hpp"
#include "mail/printer.hpp"

using namespace mail;

namespace {

AsmInstruction insn(std::string mnemonic, std::vector<std::string> operands = {}) {
  AsmInstruction i;
  i.address = 0x8000;
  i.mnemonic = std::move(mnemonic);
  i.operands = std::move(operands);
  i.arch = Arch::Arm;
  return i;
}

std::vector<std::string> lift_texts(const AsmInstruction& i) {
  LiftContext ctx;
  LiftResult r = lift_instruction_arm(i, ctx);
  std::vector<std::string> out;
  for (const auto& s : r.statements) out.push_back(to_text(s));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST(LiftArm, SpecExamples) {
  EXPECT_EQ(lift_texts(insn("CMP", {"R0", "R1"})),
            (std::vector<std::string>{"compare(R0, R1);"}));
  EXPECT_TRUE(lift_texts(insn("NOP")).empty());
  EXPECT_EQ(lift_texts(insn("B", {"0x8000"})), (std::vector<std::string>{"jmp 0x8000;"}));
}

TEST(LiftArm, ConditionalMoveBecomesControl) {
  LiftContext ctx;
  auto r = lift_instruction_arm(insn("MOVLE", {"R0", "#0x1"}), ctx);
  ASSERT_EQ(r.statements.size(), 1u);
  EXPECT_EQ(to_text(r.statements[0]), "if (ZF == 0x1 or SF != OF) R0 = 0x1;");
  EXPECT_EQ(r.statements[0].pattern, Pattern::ControlConstant);
}

TEST(LiftArm, ConditionCodesAndSuffixes) {
  EXPECT_EQ(lift_texts(insn("BNE", {"0x8018"})),
            (std::vector<std::string>{"if (ZF == 0x0) jmp 0x8018;"}));
  EXPECT_EQ(lift_texts(insn("BLE", {"0x8018"})),
            (std::vector<std::string>{"if (ZF == 0x1 or SF != OF) jmp 0x8018;"}));
  EXPECT_EQ(lift_texts(insn("BLS", {"0x8018"})),
            (std::vector<std::string>{"if (CF == 0x0 or ZF == 0x1) jmp 0x8018;"}));
  // Flag-setting 'S' suffix peels to the plain instruction.
  EXPECT_EQ(lift_texts(insn("ADDS", {"R0", "R1", "R2"})),
            (std::vector<std::string>{"R0 = R1 + R2;"}));
  EXPECT_EQ(lift_texts(insn("MOVS", {"R0", "R1"})),
            (std::vector<std::string>{"R0 = R1;"}));
}

TEST(LiftArm, LoadsStoresAndArithmetic) {
  EXPECT_EQ(lift_texts(insn("LDR", {"R0", "[R1, #0x4]"})),
            (std::vector<std::string>{"R0 = [R1+0x4];"}));
  EXPECT_EQ(lift_texts(insn("STR", {"R0", "[R1]"})),
            (std::vector<std::string>{"[R1] = R0;"}));
  EXPECT_EQ(lift_texts(insn("LDR", {"R0", "=0x8000"})),
            (std::vector<std::string>{"R0 = 0x8000;"}));
  EXPECT_EQ(lift_texts(insn("RSB", {"R0", "R1", "R2"})),
            (std::vector<std::string>{"R0 = R2 - R1;"}));
  EXPECT_EQ(lift_texts(insn("EOR", {"R0", "R0", "R0"})),
            (std::vector<std::string>{"R0 = R0 xor R0;"}));
  EXPECT_EQ(lift_texts(insn("MVN", {"R0", "R1"})),
            (std::vector<std::string>{"R0 = not R1;"}));
}

TEST(LiftArm, BranchesAndCalls) {
  EXPECT_EQ(lift_texts(insn("BX", {"LR"})), (std::vector<std::string>{"jmp UNKNOWN;"}));
  EXPECT_EQ(lift_texts(insn("BL", {"0x9000"})), (std::vector<std::string>{"call 0x9000;"}));
  EXPECT_EQ(lift_texts(insn("BLX", {"R3"})), (std::vector<std::string>{"call UNKNOWN;"}));
}

TEST(LiftArm, PushPopRegisterLists) {
  EXPECT_EQ(lift_texts(insn("PUSH", {"{R4, LR}"})),
            (std::vector<std::string>{"[SP=SP+0x1] = R4;", "[SP=SP+0x1] = LR;"}));
  EXPECT_EQ(lift_texts(insn("POP", {"{R4, PC}"})),
            (std::vector<std::string>{"R4 = [SP=SP-0x1];", "jmp [SP=SP-0x8];"}));
}

// Every mnemonic the shipped table marks "ignore" lifts to zero statements.
TEST(LiftArm, IgnoreSetTotality) {
  std::ifstream table(std::string(MAIL_DATA_DIR) + "/lifting_arm.tsv");
  ASSERT_TRUE(table);
  std::string line;
  int checked = 0;
  while (std::getline(table, line)) {
    auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    std::string mnemonic = line.substr(0, tab);
    if (line.substr(tab + 1) != "ignore") continue;
    LiftContext ctx;
    EXPECT_TRUE(lift_instruction_arm(insn(mnemonic, {"R0", "R1"}), ctx).statements.empty())
        << mnemonic;
    ++checked;
  }
  EXPECT_GT(checked, 70);
}

TEST(LiftArm, UnknownFallback) {
  for (const char* m : {"VORN", "SMLAL", "QADD"}) {
    LiftContext ctx;
    auto r = lift_instruction_arm(insn(m, {"R0", "R1"}), ctx);
    ASSERT_EQ(r.statements.size(), 1u) << m;
    EXPECT_EQ(r.statements[0].pattern, Pattern::Unknown) << m;
  }
}

TEST(LiftProgramArm, EmptySpanHasOnlyMarkers) {
  auto spans = parse_disasm("ARCH arm\nFUNC f 8000 8000\n", Arch::Arm);
  // No instructions at all: the declared span still wraps into markers.
  MailProgram p = lift_program(spans);
  ASSERT_EQ(p.statements.size(), 2u);
  EXPECT_EQ(p.statements[0].stmt.kind(), StatementKind::FunctionMarker);
  EXPECT_EQ(p.statements[1].stmt.kind(), StatementKind::FunctionMarker);
}

TEST(LiftProgramArm, SingleBranchFunction) {
  auto spans = parse_disasm("ARCH arm\nFUNC f 8000 8000\n8000 ea000000 B 0x8000\n");
  MailProgram p = lift_program(spans);
  ASSERT_EQ(p.statements.size(), 3u);
  EXPECT_EQ(to_text(p.statements[1].stmt), "jmp 0x8000;");
  EXPECT_EQ(p.statements[1].stmt.pattern, Pattern::JumpConstant);
}

// Cross-architecture structural agreement on the shared sort fixture: the
// x86 and ARM builds of the same function produce ACFGs with the same loop
// count and nesting depth.
TEST(LiftProgramArm, CrossArchLoopAgreement) {
  MailProgram x86_prog = lift_program(
      parse_disasm(read_file(std::string(MAIL_TEST_DATA_DIR) + "/merge_sort_x86.asm")));
  MailProgram arm_prog = lift_program(
      parse_disasm(read_file(std::string(MAIL_TEST_DATA_DIR) + "/merge_sort_arm.asm")));

  Acfg x86_g = build_function_acfg(x86_prog, x86_prog.functions.at(0));
  Acfg arm_g = build_function_acfg(arm_prog, arm_prog.functions.at(0));
  LoopInfo x86_loops = find_loops(x86_g);
  LoopInfo arm_loops = find_loops(arm_g);

  EXPECT_EQ(arm_loops.loops.size(), x86_loops.loops.size());
  EXPECT_EQ(arm_loops.outer_count(), x86_loops.outer_count());
  EXPECT_EQ(arm_loops.inner_count(), x86_loops.inner_count());
  EXPECT_EQ(arm_loops.max_depth(), x86_loops.max_depth());

  EXPECT_EQ(arm_loops.outer_count(), 1);
  EXPECT_EQ(arm_loops.inner_count(), 2);
}

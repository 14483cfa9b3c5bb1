#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "mail/lifter.hpp"
#include "mail/lifting_tables.hpp"
#include "mail/printer.hpp"

using namespace mail;

namespace {

AsmInstruction insn(std::string mnemonic, std::vector<std::string> operands = {},
                    std::uint64_t addr = 0x401000) {
  AsmInstruction i;
  i.address = addr;
  i.mnemonic = std::move(mnemonic);
  i.operands = std::move(operands);
  i.arch = Arch::X86;
  return i;
}

std::vector<std::string> lift_texts(const AsmInstruction& i) {
  LiftContext ctx;
  LiftResult r = lift_instruction(i, ctx);
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

TEST(ParseDisasm, BasicLine) {
  auto spans = parse_disasm("4010a2 8b45bc MOV EAX, [RBP-0x44]\n");
  ASSERT_EQ(spans.size(), 1u);
  ASSERT_EQ(spans[0].instructions.size(), 1u);
  const AsmInstruction& i = spans[0].instructions[0];
  EXPECT_EQ(i.address, 0x4010a2u);
  EXPECT_EQ(i.bytes, "8b45bc");
  EXPECT_EQ(i.mnemonic, "MOV");
  ASSERT_EQ(i.operands.size(), 2u);
  EXPECT_EQ(i.operands[0], "EAX");
  EXPECT_EQ(i.operands[1], "[RBP-0x44]");
}

TEST(ParseDisasm, EmptyInput) {
  EXPECT_TRUE(parse_disasm("").empty());
  EXPECT_TRUE(parse_disasm("# only comments\n\n").empty());
}

TEST(ParseDisasm, ConstantOperandJump) {
  auto spans = parse_disasm("4011c0 0f85fdfeffff JNZ 0x4010c3\n");
  ASSERT_EQ(spans[0].instructions.size(), 1u);
  EXPECT_EQ(spans[0].instructions[0].operands.size(), 1u);
}

TEST(ParseDisasm, FuncSpansAndImplicitSpan) {
  const char* text =
      "FUNC alpha 1000 1004\n"
      "1000 90 NOP\n"
      "1004 c3 RET\n"
      "2000 c3 RET\n";
  auto spans = parse_disasm(text);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].name, "alpha");
  EXPECT_EQ(spans[0].instructions.size(), 2u);
  EXPECT_FALSE(spans[1].declared);
  EXPECT_EQ(spans[1].name, "sub_2000");
  EXPECT_EQ(spans[1].instructions.size(), 1u);
}

TEST(ParseDisasm, Errors) {
  EXPECT_THROW(parse_disasm("zz45 8b MOV EAX, EBX\n"), DisasmError);
  EXPECT_THROW(parse_disasm("4010a2 8bq5 MOV EAX, EBX\n"), DisasmError);
  EXPECT_THROW(parse_disasm("4010a2 8b\n"), DisasmError);
  try {
    parse_disasm("1000 90 NOP\nbadline\n");
    FAIL();
  } catch (const DisasmError& e) {
    EXPECT_EQ(e.line, 2u);
  }
  try {
    parse_disasm("1000 90 NOP\n1001 8b MOV EAX, [RBP-0x4\n");
    FAIL();
  } catch (const DisasmError& e) {
    EXPECT_EQ(e.line, 2u);
    EXPECT_NE(std::string(e.what()).find("unbalanced"), std::string::npos);
  }
}

TEST(ParseDisasm, BytesPlaceholder) {
  auto spans = parse_disasm("1000 - MOV EAX, EBX\n");
  EXPECT_TRUE(spans[0].instructions[0].bytes.empty());
}

TEST(LiftX86, SpecExamples) {
  EXPECT_EQ(lift_texts(insn("SUB", {"EAX", "[RBP-0x18]"})),
            (std::vector<std::string>{"EAX = EAX - [RBP-0x18];"}));
  EXPECT_EQ(lift_texts(insn("XOR", {"EAX", "EAX"})),
            (std::vector<std::string>{"EAX = 0x0;"}));
  EXPECT_EQ(lift_texts(insn("XCHG", {"EAX", "EBX"})),
            (std::vector<std::string>{"gr_0 = EAX;", "EAX = EBX;", "EBX = gr_0;"}));
  EXPECT_EQ(lift_texts(insn("CMP", {"EAX", "0x0"})),
            (std::vector<std::string>{"compare(EAX, 0x0);"}));
  EXPECT_EQ(lift_texts(insn("JZ", {"0x401267"})),
            (std::vector<std::string>{"if (ZF == 0x1) jmp 0x401267;"}));
}

TEST(LiftX86, PatternsAssignedImmediately) {
  LiftContext ctx;
  auto r = lift_instruction(insn("XOR", {"EAX", "EAX"}), ctx);
  ASSERT_EQ(r.statements.size(), 1u);
  EXPECT_EQ(r.statements[0].pattern, Pattern::AssignConstant);
  r = lift_instruction(insn("CMP", {"EAX", "0x0"}), ctx);
  EXPECT_EQ(r.statements[0].pattern, Pattern::LibcallConstant);
  r = lift_instruction(insn("JZ", {"0x401267"}), ctx);
  EXPECT_EQ(r.statements[0].pattern, Pattern::ControlConstant);
  r = lift_instruction(insn("PUSH", {"RBP"}), ctx);
  EXPECT_EQ(r.statements[0].pattern, Pattern::Stack);
  r = lift_instruction(insn("RET"), ctx);
  EXPECT_EQ(r.statements[0].pattern, Pattern::JumpStack);
}

TEST(LiftX86, CanonicalGroupings) {
  EXPECT_EQ(lift_texts(insn("SUB", {"EBX", "EBX"})),
            (std::vector<std::string>{"EBX = 0x0;"}));
  EXPECT_EQ(lift_texts(insn("ADD", {"EAX", "0x0"})),
            (std::vector<std::string>{"EAX = EAX;"}));
  EXPECT_EQ(lift_texts(insn("PXOR", {"XMM0", "XMM0"})),
            (std::vector<std::string>{"XMM0 = 0x0;"}));
}

TEST(LiftX86, StackAndCalls) {
  EXPECT_EQ(lift_texts(insn("PUSH", {"QWORD 0x4011e5"})),
            (std::vector<std::string>{"[SP=SP+0x1] = 0x4011e5;"}));
  EXPECT_EQ(lift_texts(insn("POP", {"RBX"})),
            (std::vector<std::string>{"RBX = [SP=SP-0x1];"}));
  EXPECT_EQ(lift_texts(insn("CALL", {"0x400f32"})),
            (std::vector<std::string>{"call 0x400f32;"}));
  // Indirect call targets are not computable statically.
  EXPECT_EQ(lift_texts(insn("CALL", {"RBX"})),
            (std::vector<std::string>{"call UNKNOWN;"}));
  EXPECT_EQ(lift_texts(insn("RET")), (std::vector<std::string>{"jmp [SP=SP-0x8];"}));
  EXPECT_EQ(lift_texts(insn("POPF")), (std::vector<std::string>{"EFLAGS = [SP=SP-0x1];"}));
}

TEST(LiftX86, ControlForms) {
  EXPECT_EQ(lift_texts(insn("JMP", {"0x4011b5"})),
            (std::vector<std::string>{"jmp 0x4011b5;"}));
  EXPECT_EQ(lift_texts(insn("JMP", {"RAX"})), (std::vector<std::string>{"jmp UNKNOWN;"}));
  EXPECT_EQ(lift_texts(insn("JLE", {"0x4010f5"})),
            (std::vector<std::string>{"if (ZF == 0x1 or SF != OF) jmp 0x4010f5;"}));
  EXPECT_EQ(lift_texts(insn("SETG", {"AL"})),
            (std::vector<std::string>{
                "if (ZF == 0x0 and SF == OF) AL = 0x1; else AL = 0x0;"}));
  EXPECT_EQ(lift_texts(insn("TEST", {"AL", "AL"})),
            (std::vector<std::string>{"AL and AL;"}));
  EXPECT_EQ(lift_texts(insn("LOOP", {"0x401000"})),
            (std::vector<std::string>{"if (ECX != 0x0) jmp 0x401000;"}));
}

TEST(LiftX86, ConversionsAndFlags) {
  EXPECT_EQ(lift_texts(insn("CDQE")), (std::vector<std::string>{"RAX = convert(EAX);"}));
  EXPECT_EQ(lift_texts(insn("CDQ")),
            (std::vector<std::string>{"EDX:EAX = convert(EAX);"}));
  EXPECT_EQ(lift_texts(insn("MOVSXD", {"RDX", "EAX"})),
            (std::vector<std::string>{"RDX = convert(EAX);"}));
  EXPECT_EQ(lift_texts(insn("CLD")), (std::vector<std::string>{"DF = 0x0;"}));
  EXPECT_EQ(lift_texts(insn("STD")), (std::vector<std::string>{"DF = 0x1;"}));
  EXPECT_EQ(lift_texts(insn("HLT")), (std::vector<std::string>{"halt;"}));
}

TEST(LiftX86, PrefixWrappers) {
  EXPECT_EQ(lift_texts(insn("LOCK", {"ADD [RBP-0x4]", "EAX"})),
            (std::vector<std::string>{"lock;", "[RBP-0x4] = [RBP-0x4] + EAX;"}));
  EXPECT_EQ(lift_texts(insn("REP", {"MOVSB"})),
            (std::vector<std::string>{"[RDI] = [RSI];"}));
  EXPECT_EQ(lift_texts(insn("REPNE", {"SCASB"})),
            (std::vector<std::string>{"compare(AL, [RDI]);"}));
}

TEST(LiftX86, LeaFamilies) {
  EXPECT_EQ(lift_texts(insn("LEA", {"EAX", "[RDX+RAX]"})),
            (std::vector<std::string>{"EAX = RDX + RAX;"}));
  EXPECT_EQ(lift_texts(insn("LEA", {"EAX", "[EBX+0x2000]"})),
            (std::vector<std::string>{"EAX = EBX + 0x2000;"}));
  EXPECT_EQ(lift_texts(insn("LEA", {"RAX", "[RDX+RAX*0x4+0x10]"})),
            (std::vector<std::string>{"RAX = [RDX+RAX*0x4+0x10];"}));
}

TEST(LiftX86, LibraryBackedInstructions) {
  EXPECT_EQ(lift_texts(insn("BSF", {"EAX", "EBX"})),
            (std::vector<std::string>{"scanf(EBX, EAX);"}));
  EXPECT_EQ(lift_texts(insn("POPCNT", {"EAX", "EBX"})),
            (std::vector<std::string>{"EAX = count(EBX);"}));
  EXPECT_EQ(lift_texts(insn("BT", {"EAX", "0x3"})),
            (std::vector<std::string>{"CF = bit(EAX, 0x3, 0x1);"}));
  EXPECT_EQ(lift_texts(insn("FSIN")), (std::vector<std::string>{"fr_0 = sin(fr_0);"}));
  EXPECT_EQ(lift_texts(insn("FLD", {"ST(1)"})),
            (std::vector<std::string>{"fr_0 = fr_1;"}));
  EXPECT_EQ(lift_texts(insn("MAXSS", {"XMM0", "XMM1"})),
            (std::vector<std::string>{"XMM0 = max(XMM0, XMM1);"}));
}

TEST(LiftX86, UnknownFallbackIsExactlyOneStatement) {
  for (const char* m : {"FROBNICATE", "ENDBR64", "INC_A", "JMP_A", "CTR_A", "UD2"}) {
    LiftContext ctx;
    auto r = lift_instruction(insn(m, {"EAX"}), ctx);
    ASSERT_EQ(r.statements.size(), 1u) << m;
    EXPECT_EQ(r.statements[0].pattern, Pattern::Unknown) << m;
  }
}

// Every mnemonic the shipped table marks "ignore" lifts to zero statements.
TEST(LiftX86, IgnoreSetTotality) {
  std::ifstream table(std::string(MAIL_DATA_DIR) + "/lifting_x86.tsv");
  ASSERT_TRUE(table);
  std::string line;
  int checked = 0;
  while (std::getline(table, line)) {
    auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    std::string mnemonic = line.substr(0, tab);
    std::string rule = line.substr(tab + 1);
    if (rule != "ignore") continue;
    if (mnemonic.back() == '*') mnemonic = mnemonic.substr(0, mnemonic.size() - 1) + "T0";
    LiftContext ctx;
    auto r = lift_instruction(insn(mnemonic, {"EAX", "EBX"}), ctx);
    EXPECT_TRUE(r.statements.empty()) << mnemonic;
    ++checked;
  }
  EXPECT_GT(checked, 100);  // the x86 ignore list is large
  // "INT 3" is on the ignore list; other interrupts are not translatable.
  EXPECT_TRUE(lift_texts(insn("INT", {"3"})).empty());
  EXPECT_TRUE(lift_texts(insn("INT3")).empty());
  EXPECT_EQ(lift_texts(insn("INT", {"0x80"})).size(), 1u);
}

// The shipped data files stay in sync with the in-code tables.
TEST(LiftX86, ShippedTableMatchesCode) {
  EXPECT_EQ(read_file(std::string(MAIL_DATA_DIR) + "/lifting_x86.tsv"),
            render_lifting_table(lifting_table_x86()));
  EXPECT_EQ(read_file(std::string(MAIL_DATA_DIR) + "/lifting_arm.tsv"),
            render_lifting_table(lifting_table_arm()));
}

TEST(LiftProgram, SingleRetFunction) {
  auto spans = parse_disasm("FUNC f 1000 1000\n1000 c3 RET\n");
  MailProgram p = lift_program(spans);
  ASSERT_EQ(p.statements.size(), 3u);
  EXPECT_EQ(p.statements[0].stmt.kind(), StatementKind::FunctionMarker);
  EXPECT_EQ(to_text(p.statements[1].stmt), "jmp [SP=SP-0x8];");
  EXPECT_EQ(p.statements[2].stmt.kind(), StatementKind::FunctionMarker);
  ASSERT_EQ(p.functions.size(), 1u);
  EXPECT_EQ(p.functions[0].name, "f");
}

TEST(LiftProgram, FixtureAddressCoverage) {
  MailProgram p = lift_program(
      parse_disasm(read_file(std::string(MAIL_TEST_DATA_DIR) + "/merge_sort_x86.asm")));
  ASSERT_EQ(p.functions.size(), 1u);
  EXPECT_EQ(p.instruction_addrs.size(), 104u);
  EXPECT_EQ(p.instruction_addrs.front(), 0x40108eu);
  EXPECT_EQ(p.instruction_addrs.back(), 0x4011e4u);
  // Statement addresses are non-decreasing within the span.
  for (std::size_t i = 1; i < p.statements.size(); ++i)
    EXPECT_LE(p.statements[i - 1].addr, p.statements[i].addr);
}

TEST(LiftProgram, TemporariesResetPerFunction) {
  const char* text =
      "FUNC a 1000 1002\n"
      "1000 87d8 XCHG EAX, EBX\n"
      "FUNC b 2000 2002\n"
      "2000 87ca XCHG ECX, EDX\n";
  MailProgram p = lift_program(parse_disasm(text));
  std::vector<std::string> grs;
  for (const auto& as : p.statements) {
    std::string s = to_text(as.stmt);
    if (s.rfind("gr_", 0) == 0) grs.push_back(s);
  }
  ASSERT_EQ(grs.size(), 2u);
  EXPECT_EQ(grs[0], "gr_0 = EAX;");
  EXPECT_EQ(grs[1], "gr_0 = ECX;");  // counter restarts in the second function
}

// Consistent register renaming preserves the pattern-tag sequence.
TEST(LiftProgram, RenamingInvariance) {
  const char* original =
      "FUNC f 1000 1020\n"
      "1000 55 PUSH RBP\n"
      "1001 31c0 XOR EAX, EAX\n"
      "1003 8b45bc MOV EAX, [RBP-0x44]\n"
      "1006 01d8 ADD EAX, EBX\n"
      "1008 3d05000000 CMP EAX, 0x5\n"
      "100d 0f84 JZ 0x1000\n"
      "1013 87d8 XCHG EAX, EBX\n"
      "1015 c3 RET\n";
  std::string renamed = original;
  auto replace_all = [&](const std::string& from, const std::string& to) {
    std::size_t at = 0;
    while ((at = renamed.find(from, at)) != std::string::npos) {
      renamed.replace(at, from.size(), to);
      at += to.size();
    }
  };
  // eax -> edx, ebx -> esi, rbp -> r9 (consistent renaming).
  replace_all("EAX", "EDX");
  replace_all("EBX", "ESI");
  replace_all("RBP", "R9");

  MailProgram a = lift_program(parse_disasm(original));
  MailProgram b = lift_program(parse_disasm(renamed));
  ASSERT_EQ(a.statements.size(), b.statements.size());
  for (std::size_t i = 0; i < a.statements.size(); ++i)
    EXPECT_EQ(a.statements[i].stmt.pattern, b.statements[i].stmt.pattern) << i;
}

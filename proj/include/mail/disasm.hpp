// Textual disassembly input. One instruction per line:
//
//   <hex-addr> <hex-bytes> <MNEMONIC> [op1, op2, ...]
//
// The bytes column is mandatory; "-" stands for no bytes. Optional lines
// "FUNC <name> <hex-start> <hex-end>" declare function spans (instructions
// are assigned by address range), "ARCH x86|arm" selects the architecture
// for the whole listing, "#" starts a comment. Instructions outside every
// FUNC range form one implicit span. See README for examples.
#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mail/core.hpp"

namespace mail {

enum class Arch : std::uint8_t { X86, Arm };

struct DisasmError : std::runtime_error {
  std::size_t line;
  DisasmError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
};

struct AsmInstruction {
  std::uint64_t address = 0;
  std::string bytes;             // may be empty
  std::string mnemonic;          // uppercase
  std::vector<std::string> operands;
  Arch arch = Arch::X86;
  std::size_t line = 0;          // source line, for diagnostics
};

struct DisasmFunction {
  std::string name;
  std::uint64_t start_addr = 0;
  std::uint64_t end_addr = 0;
  bool declared = false;         // false for the implicit span
  std::vector<AsmInstruction> instructions;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool parse_hex_u64(std::string_view s, std::uint64_t& out) {
  if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) s.remove_prefix(2);
  if (s.empty()) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
    std::uint64_t nibble = std::isdigit(static_cast<unsigned char>(c))
                               ? static_cast<std::uint64_t>(c - '0')
                               : static_cast<std::uint64_t>(std::tolower(c) - 'a' + 10);
    v = (v << 4) | nibble;
  }
  out = v;
  return true;
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Split an operand list on top-level commas; brackets, parens and braces
// nest (ARM writes "[R1, #4]" and "{R0, R1}").
inline std::vector<std::string> split_operands(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || (s[i] == ',' && depth == 0)) {
      std::string_view piece = trim(s.substr(start, i - start));
      if (!piece.empty()) out.emplace_back(piece);
      start = i + 1;
      continue;
    }
    char c = s[i];
    if (c == '[' || c == '(' || c == '{') ++depth;
    if (c == ']' || c == ')' || c == '}') --depth;
  }
  return out;
}

}  // namespace detail

inline std::vector<DisasmFunction> parse_disasm(std::string_view text,
                                                Arch default_arch = Arch::X86) {
  using namespace detail;
  std::vector<DisasmFunction> declared;
  std::vector<AsmInstruction> instructions;
  Arch arch = default_arch;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      if (pos > text.size()) break;
      continue;
    }

    // Tokenize on whitespace up to the operand field.
    std::vector<std::string_view> head;
    std::size_t i = 0;
    while (i < line.size() && head.size() < 3) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > start) head.push_back(line.substr(start, i - start));
    }
    std::string_view rest = trim(line.substr(i));

    if (head.empty()) continue;
    if (head[0] == "ARCH") {
      if (head.size() < 2) throw DisasmError(line_no, "ARCH needs an argument");
      std::string a = upper(head[1]);
      if (a == "X86") arch = Arch::X86;
      else if (a == "ARM") arch = Arch::Arm;
      else throw DisasmError(line_no, "unknown architecture '" + std::string(head[1]) + "'");
      continue;
    }
    if (head[0] == "FUNC") {
      if (head.size() < 3) throw DisasmError(line_no, "FUNC needs <name> <start> <end>");
      DisasmFunction f;
      f.name = std::string(head[1]);
      std::uint64_t start_a = 0, end_a = 0;
      std::string_view end_tok = head.size() >= 3 ? head[2] : std::string_view{};
      // head holds at most 3 tokens; the end address may have landed in rest.
      std::string_view start_tok = head[2];
      if (!rest.empty() && head.size() == 3) {
        end_tok = rest;
        // rest may contain trailing comment-free token only
        std::size_t sp = end_tok.find_first_of(" \t");
        if (sp != std::string_view::npos) end_tok = end_tok.substr(0, sp);
      } else {
        throw DisasmError(line_no, "FUNC needs <name> <start> <end>");
      }
      if (!parse_hex_u64(start_tok, start_a) || !parse_hex_u64(end_tok, end_a))
        throw DisasmError(line_no, "malformed FUNC address");
      if (end_a < start_a) throw DisasmError(line_no, "FUNC end before start");
      f.start_addr = start_a;
      f.end_addr = end_a;
      f.declared = true;
      declared.push_back(std::move(f));
      continue;
    }

    if (head.size() < 3)
      throw DisasmError(line_no, "expected <addr> <bytes> <mnemonic> [operands]");
    AsmInstruction insn;
    if (!parse_hex_u64(head[0], insn.address))
      throw DisasmError(line_no, "malformed address '" + std::string(head[0]) + "'");
    if (head[1] != "-") {
      for (char c : head[1])
        if (!std::isxdigit(static_cast<unsigned char>(c)))
          throw DisasmError(line_no, "malformed bytes '" + std::string(head[1]) + "'");
      insn.bytes = std::string(head[1]);
    }
    insn.mnemonic = upper(head[2]);
    if (insn.mnemonic.empty()) throw DisasmError(line_no, "empty mnemonic");
    int depth = 0;
    for (char c : rest) {
      if (c == '[' || c == '(' || c == '{') ++depth;
      if (c == ']' || c == ')' || c == '}') --depth;
      if (depth < 0) break;
    }
    if (depth != 0)
      throw DisasmError(line_no, "unbalanced brackets in operands '" + std::string(rest) + "'");
    insn.operands = split_operands(rest);
    insn.arch = arch;
    insn.line = line_no;
    instructions.push_back(std::move(insn));

    if (pos > text.size()) break;
  }

  // Assign instructions to declared spans by address range; leftovers form
  // one implicit span.
  std::vector<DisasmFunction> result = declared;
  DisasmFunction implicit;
  for (auto& insn : instructions) {
    DisasmFunction* owner = nullptr;
    for (auto& f : result)
      if (insn.address >= f.start_addr && insn.address <= f.end_addr) {
        owner = &f;
        break;
      }
    (owner ? *owner : implicit).instructions.push_back(std::move(insn));
  }
  if (!implicit.instructions.empty()) {
    implicit.start_addr = implicit.instructions.front().address;
    implicit.end_addr = implicit.instructions.back().address;
    char buf[32];
    std::snprintf(buf, sizeof buf, "sub_%llx",
                  static_cast<unsigned long long>(implicit.start_addr));
    implicit.name = buf;
    result.push_back(std::move(implicit));
  }
  return result;
}

}  // namespace mail

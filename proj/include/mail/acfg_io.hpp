// Line-oriented ACFG text format:
//
//   ACFG <name> <n_blocks> <n_edges>
//   B <id> <tag,tag,...>          one per block, id order
//   S <id> <MAIL statement>       optional, one per statement of block <id>
//   E <src> <dst>                 one per edge, sorted
//
// Lines starting '#' are ignored. Blocks are numbered 0..n_blocks-1 and the
// entry is block 0 (normalize() makes that canonical). Round trip is exact:
// deserialize(serialize(g)) == g.
#pragma once

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mail/cfg.hpp"
#include "mail/parser.hpp"
#include "mail/printer.hpp"

namespace mail {

struct AcfgFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string serialize(const Acfg& g, bool with_statements = true) {
  std::string name = g.name.empty() ? "f" : g.name;
  for (char& c : name)
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  std::string out = "ACFG " + name + " " + std::to_string(g.blocks.size()) + " " +
                    std::to_string(g.edges.size()) + "\n";
  for (const auto& b : g.blocks) {
    out += "B " + std::to_string(b.id);
    for (std::size_t i = 0; i < b.pattern_seq.size(); ++i) {
      out += i == 0 ? " " : ",";
      out += to_string(b.pattern_seq[i]);
    }
    out += '\n';
    if (with_statements)
      for (const auto& s : b.statements)
        out += "S " + std::to_string(b.id) + " " + to_text(s) + "\n";
  }
  for (const auto& [src, dst] : g.edges)
    out += "E " + std::to_string(src) + " " + std::to_string(dst) + "\n";
  return out;
}

namespace iodetail {

inline std::vector<std::string_view> fields(std::string_view line, std::size_t max_fields) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size() && out.size() + 1 < max_fields) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  while (i < line.size() && line[i] == ' ') ++i;
  if (i < line.size()) out.push_back(line.substr(i));
  return out;
}

inline std::uint32_t parse_u32(std::string_view s, const char* what) {
  std::uint32_t v = 0;
  if (s.empty()) throw AcfgFormatError(std::string("missing ") + what);
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw AcfgFormatError(std::string("malformed ") + what + " '" + std::string(s) + "'");
    v = v * 10 + static_cast<std::uint32_t>(c - '0');
  }
  return v;
}

}  // namespace iodetail

// Read one or more serialized ACFGs from a text stream.
inline std::vector<Acfg> deserialize_all(std::string_view text) {
  using namespace iodetail;
  std::vector<Acfg> out;
  Acfg* current = nullptr;
  std::size_t expect_blocks = 0, expect_edges = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    bool last = eol == text.size();
    pos = eol + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (last) break;
      continue;
    }

    if (line.rfind("ACFG ", 0) == 0) {
      auto f = fields(line, 4);
      if (f.size() != 4) throw AcfgFormatError("malformed ACFG header");
      Acfg g;
      g.name = std::string(f[1]);
      expect_blocks = parse_u32(f[2], "block count");
      expect_edges = parse_u32(f[3], "edge count");
      g.blocks.resize(expect_blocks);
      for (std::size_t i = 0; i < expect_blocks; ++i)
        g.blocks[i].id = static_cast<std::uint32_t>(i);
      g.entry = 0;
      out.push_back(std::move(g));
      current = &out.back();
    } else if (line.rfind("B ", 0) == 0) {
      if (!current) throw AcfgFormatError("B line before ACFG header");
      auto f = fields(line, 3);
      std::uint32_t id = parse_u32(f[1], "block id");
      if (id >= current->blocks.size()) throw AcfgFormatError("block id out of range");
      BasicBlock& b = current->blocks[id];
      if (f.size() >= 3) {
        std::string_view tags = f[2];
        std::size_t i = 0;
        while (i <= tags.size()) {
          std::size_t comma = tags.find(',', i);
          if (comma == std::string_view::npos) comma = tags.size();
          std::string_view tag = tags.substr(i, comma - i);
          if (!tag.empty()) {
            auto p = pattern_from_string(tag);
            if (!p) throw AcfgFormatError("unknown pattern tag '" + std::string(tag) + "'");
            b.pattern_seq.push_back(*p);
          }
          i = comma + 1;
          if (comma == tags.size()) break;
        }
      }
    } else if (line.rfind("S ", 0) == 0) {
      if (!current) throw AcfgFormatError("S line before ACFG header");
      auto f = fields(line, 3);
      if (f.size() < 3) throw AcfgFormatError("malformed S line");
      std::uint32_t id = parse_u32(f[1], "block id");
      if (id >= current->blocks.size()) throw AcfgFormatError("block id out of range");
      try {
        current->blocks[id].statements.push_back(parse_mail_statement(f[2]));
      } catch (const ParseError& e) {
        throw AcfgFormatError("bad statement in block " + std::to_string(id) + ": " + e.what());
      }
    } else if (line.rfind("E ", 0) == 0) {
      if (!current) throw AcfgFormatError("E line before ACFG header");
      auto f = fields(line, 3);
      if (f.size() < 3) throw AcfgFormatError("malformed E line");
      std::uint32_t src = parse_u32(f[1], "edge source");
      std::uint32_t dst = parse_u32(f[2], "edge target");
      if (src >= current->blocks.size() || dst >= current->blocks.size())
        throw AcfgFormatError("dangling edge " + std::to_string(src) + " -> " +
                              std::to_string(dst));
      current->edges.push_back({src, dst});
    } else {
      throw AcfgFormatError("unrecognized line '" + std::string(line.substr(0, 32)) + "'");
    }
    if (last) break;
  }

  for (Acfg& g : out) {
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    // Statement tags follow the block's pattern sequence when both are given.
    for (auto& b : g.blocks)
      for (std::size_t i = 0; i < b.statements.size() && i < b.pattern_seq.size(); ++i)
        b.statements[i].pattern = b.pattern_seq[i];
    (void)expect_edges;
  }
  return out;
}

inline Acfg deserialize(std::string_view text) {
  auto all = deserialize_all(text);
  if (all.size() != 1)
    throw AcfgFormatError("expected exactly one ACFG, found " + std::to_string(all.size()));
  return std::move(all.front());
}

// Graphviz rendering for visual inspection.
inline std::string to_dot(const Acfg& g) {
  std::ostringstream out;
  out << "digraph \"" << (g.name.empty() ? "f" : g.name) << "\" {\n";
  out << "  node [shape=box, fontname=\"monospace\"];\n";
  for (const auto& b : g.blocks) {
    out << "  n" << b.id << " [label=\"" << b.id;
    if (!b.pattern_seq.empty()) {
      out << "\\n";
      for (std::size_t i = 0; i < b.pattern_seq.size(); ++i) {
        if (i > 0) out << "\\n";
        out << to_string(b.pattern_seq[i]);
      }
    }
    out << "\"];\n";
  }
  for (const auto& [src, dst] : g.edges) out << "  n" << src << " -> n" << dst << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace mail

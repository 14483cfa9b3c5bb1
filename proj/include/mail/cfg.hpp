// Basic-block partitioning, CFG construction, pattern annotation and
// normalization.
//
// Leader rules: the function entry, every resolvable constant branch target,
// and every statement following a jump-bearing control, jump or halt start a
// block. A control statement whose arms are assignments (SETcc-style) does
// not transfer control anywhere and therefore does not end its block.
// Branches whose target is UNKNOWN contribute no edge.
#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mail/core.hpp"

namespace mail {

struct BasicBlock {
  std::uint32_t id = 0;
  std::vector<MailStatement> statements;
  std::uint64_t start_addr = 0;
  std::uint64_t end_addr = 0;
  std::vector<Pattern> pattern_seq;
};

struct Acfg {
  std::string name;
  std::vector<BasicBlock> blocks;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // sorted, unique
  std::uint32_t entry = 0;

  bool empty() const { return blocks.empty(); }
};

using Diagnostics = std::vector<std::string>;

namespace cfgdetail {

inline void diag(Diagnostics* sink, const std::string& message) {
  if (sink) sink->push_back(message);
}

// Jump-bearing terminators end a block; assignment-armed controls do not.
inline bool arm_is_jump(const ControlStmt::Arm& arm) {
  return std::holds_alternative<JumpStmt>(arm);
}

inline bool ends_block(const MailStatement& stmt) {
  switch (stmt.kind()) {
    case StatementKind::Jump:
    case StatementKind::Halt:
      return true;
    case StatementKind::Control: {
      const auto& c = *stmt.as<ControlStmt>();
      return arm_is_jump(c.then_arm) || (c.else_arm && arm_is_jump(*c.else_arm));
    }
    default:
      return false;
  }
}

// True when control can never reach the next statement: unconditional jumps
// and halt. A control statement always has a fall-through path unless both
// arms jump.
inline bool no_fall_through(const MailStatement& stmt) {
  switch (stmt.kind()) {
    case StatementKind::Jump:
    case StatementKind::Halt:
      return true;
    case StatementKind::Control: {
      const auto& c = *stmt.as<ControlStmt>();
      return arm_is_jump(c.then_arm) && c.else_arm && arm_is_jump(*c.else_arm);
    }
    default:
      return false;
  }
}

// Constant branch targets carried by a statement (jump or control arms).
inline std::vector<std::uint64_t> const_targets(const MailStatement& stmt) {
  std::vector<std::uint64_t> out;
  auto from_target = [&](const Address& a) {
    if (const ConstAddr* c = std::get_if<ConstAddr>(&a)) out.push_back(c->value);
  };
  if (const JumpStmt* j = stmt.as<JumpStmt>()) from_target(j->target);
  if (const ControlStmt* c = stmt.as<ControlStmt>()) {
    if (const JumpStmt* j = std::get_if<JumpStmt>(&c->then_arm)) from_target(j->target);
    if (c->else_arm)
      if (const JumpStmt* j = std::get_if<JumpStmt>(&*c->else_arm)) from_target(j->target);
  }
  return out;
}

struct FunctionView {
  const MailProgram* program = nullptr;
  const FunctionSpan* span = nullptr;
  std::vector<std::size_t> stmt_indices;      // into program->statements, markers excluded
  std::map<std::uint64_t, std::size_t> first_at_addr;  // address -> position in stmt_indices

  static FunctionView make(const MailProgram& program, const FunctionSpan& span) {
    FunctionView v;
    v.program = &program;
    v.span = &span;
    std::size_t end = span.first_stmt + span.stmt_count;
    for (std::size_t i = span.first_stmt; i < end && i < program.statements.size(); ++i) {
      const auto& as = program.statements[i];
      if (as.stmt.kind() == StatementKind::FunctionMarker) continue;
      if (!v.first_at_addr.count(as.addr)) v.first_at_addr[as.addr] = v.stmt_indices.size();
      v.stmt_indices.push_back(i);
    }
    return v;
  }

  const MailStatement& stmt(std::size_t pos) const {
    return program->statements[stmt_indices[pos]].stmt;
  }
  std::uint64_t addr(std::size_t pos) const {
    return program->statements[stmt_indices[pos]].addr;
  }
  bool in_span(std::uint64_t a) const {
    return a >= span->start_addr && a <= span->end_addr;
  }

  // Resolve a constant branch target to a statement position. Targets on an
  // instruction boundary whose instruction lifted to nothing snap forward to
  // the next statement; targets off every boundary are unknown.
  std::optional<std::size_t> resolve(std::uint64_t target, Diagnostics* sink) const {
    if (!in_span(target)) return std::nullopt;  // inter-function branch: dropped
    auto it = first_at_addr.lower_bound(target);
    if (!program->has_instruction_at(target)) {
      char buf[96];
      std::snprintf(buf, sizeof buf,
                    "branch target 0x%llx is not on an instruction boundary",
                    static_cast<unsigned long long>(target));
      diag(sink, buf);
      return std::nullopt;
    }
    if (it == first_at_addr.end()) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "branch target 0x%llx has no lifted statement",
                    static_cast<unsigned long long>(target));
      diag(sink, buf);
      return std::nullopt;
    }
    return it->second;
  }
};

}  // namespace cfgdetail

inline std::vector<BasicBlock> partition_blocks(const MailProgram& program,
                                                const FunctionSpan& span,
                                                Diagnostics* diagnostics = nullptr) {
  using namespace cfgdetail;
  FunctionView view = FunctionView::make(program, span);
  std::size_t n = view.stmt_indices.size();
  if (n == 0) return {};

  std::set<std::size_t> leaders;
  leaders.insert(0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const MailStatement& s = view.stmt(pos);
    if (ends_block(s) && pos + 1 < n) leaders.insert(pos + 1);
    for (std::uint64_t target : const_targets(s))
      if (auto hit = view.resolve(target, diagnostics)) leaders.insert(*hit);
  }

  std::vector<BasicBlock> blocks;
  auto it = leaders.begin();
  while (it != leaders.end()) {
    std::size_t begin = *it;
    ++it;
    std::size_t end = it != leaders.end() ? *it : n;
    BasicBlock b;
    b.id = static_cast<std::uint32_t>(blocks.size());
    b.start_addr = view.addr(begin);
    b.end_addr = view.addr(end - 1);
    for (std::size_t pos = begin; pos < end; ++pos) b.statements.push_back(view.stmt(pos));
    blocks.push_back(std::move(b));
  }
  return blocks;
}

inline Acfg build_cfg(const MailProgram& program, const FunctionSpan& span,
                      std::vector<BasicBlock> blocks,
                      Diagnostics* diagnostics = nullptr) {
  using namespace cfgdetail;
  Acfg g;
  g.name = span.name;
  g.entry = 0;
  g.blocks = std::move(blocks);
  if (g.blocks.empty()) return g;

  FunctionView view = FunctionView::make(program, span);
  // Map statement position -> block id via block start addresses.
  std::map<std::uint64_t, std::uint32_t> block_at_addr;
  for (const auto& b : g.blocks) block_at_addr[b.start_addr] = b.id;

  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& b : g.blocks) {
    if (b.statements.empty()) continue;
    const MailStatement& last = b.statements.back();
    for (std::uint64_t target : const_targets(last)) {
      if (auto hit = view.resolve(target, diagnostics)) {
        std::uint64_t target_addr = view.addr(*hit);
        auto found = block_at_addr.find(target_addr);
        if (found != block_at_addr.end()) {
          edges.insert({b.id, found->second});
        } else {
          char buf[96];
          std::snprintf(buf, sizeof buf, "branch target 0x%llx lands inside a block",
                        static_cast<unsigned long long>(target_addr));
          diag(diagnostics, buf);
        }
      }
    }
    if (!no_fall_through(last) && b.id + 1 < g.blocks.size())
      edges.insert({b.id, b.id + 1});
  }
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

// Fill every block's pattern sequence. Re-classification makes this total
// and idempotent whether or not the lifter tagged the statements.
inline Acfg annotate(Acfg g, const ClassifyOptions& opts = {}) {
  for (auto& b : g.blocks) {
    b.pattern_seq.clear();
    for (auto& s : b.statements) {
      s.pattern = classify_pattern(s, opts);
      b.pattern_seq.push_back(s.pattern);
    }
  }
  return g;
}

namespace cfgdetail {

inline void redensify(Acfg& g) {
  // Entry block first, remaining blocks keep their relative order.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < g.blocks.size(); ++i)
    if (g.blocks[i].id == g.entry) order.push_back(i);
  for (std::size_t i = 0; i < g.blocks.size(); ++i)
    if (g.blocks[i].id != g.entry) order.push_back(i);

  std::map<std::uint32_t, std::uint32_t> renumber;
  std::vector<BasicBlock> blocks;
  for (std::size_t i = 0; i < order.size(); ++i) {
    BasicBlock b = std::move(g.blocks[order[i]]);
    renumber[b.id] = static_cast<std::uint32_t>(i);
    b.id = static_cast<std::uint32_t>(i);
    blocks.push_back(std::move(b));
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& [src, dst] : g.edges) edges.insert({renumber.at(src), renumber.at(dst)});
  g.blocks = std::move(blocks);
  g.edges.assign(edges.begin(), edges.end());
  g.entry = g.blocks.empty() ? 0 : renumber.at(g.entry);
}

}  // namespace cfgdetail

// Normalization: (a) drop unreachable blocks, (b) merge a block into its
// single successor when that successor has it as the single predecessor and
// the block does not end in a control statement, (c) bypass empty blocks.
// Idempotent; preserves loop count and nesting depth.
inline Acfg normalize(Acfg g) {
  using Edge = std::pair<std::uint32_t, std::uint32_t>;
  if (g.blocks.empty()) return g;

  // Work on id-indexed structures; ids stay stable until the final
  // renumbering pass.
  std::map<std::uint32_t, BasicBlock> blocks;
  for (auto& b : g.blocks) blocks.emplace(b.id, std::move(b));
  std::set<Edge> edges(g.edges.begin(), g.edges.end());
  std::uint32_t entry = g.entry;

  auto successors = [&](std::uint32_t id) {
    std::vector<std::uint32_t> out;
    for (const auto& [s, d] : edges)
      if (s == id) out.push_back(d);
    return out;
  };
  auto predecessors = [&](std::uint32_t id) {
    std::vector<std::uint32_t> out;
    for (const auto& [s, d] : edges)
      if (d == id) out.push_back(s);
    return out;
  };

  bool changed = true;
  while (changed) {
    changed = false;

    // (a) unreachable removal.
    std::set<std::uint32_t> reachable;
    std::vector<std::uint32_t> work{entry};
    while (!work.empty()) {
      std::uint32_t id = work.back();
      work.pop_back();
      if (!blocks.count(id) || !reachable.insert(id).second) continue;
      for (std::uint32_t s : successors(id)) work.push_back(s);
    }
    for (auto it = blocks.begin(); it != blocks.end();) {
      if (!reachable.count(it->first)) {
        std::uint32_t id = it->first;
        it = blocks.erase(it);
        for (auto e = edges.begin(); e != edges.end();)
          e = (e->first == id || e->second == id) ? edges.erase(e) : std::next(e);
        changed = true;
      } else {
        ++it;
      }
    }

    // (c) bypass empty blocks (at most one successor: an empty block cannot
    // branch). The entry moves forward if it is itself empty.
    for (auto it = blocks.begin(); it != blocks.end();) {
      std::uint32_t id = it->first;
      if (!it->second.statements.empty()) {
        ++it;
        continue;
      }
      auto succs = successors(id);
      if (succs.size() > 1 || (succs.size() == 1 && succs[0] == id)) {
        ++it;
        continue;
      }
      std::optional<std::uint32_t> succ =
          succs.empty() ? std::nullopt : std::optional<std::uint32_t>(succs[0]);
      if (id == entry && !succ) break;  // nothing left to point at
      for (std::uint32_t p : predecessors(id)) {
        edges.erase({p, id});
        if (succ) edges.insert({p, *succ});
      }
      if (succ) edges.erase({id, *succ});
      if (id == entry) entry = *succ;
      it = blocks.erase(it);
      changed = true;
    }

    // (b) linear-chain merging.
    bool merged = true;
    while (merged) {
      merged = false;
      for (auto& [id, b] : blocks) {
        if (!b.statements.empty() &&
            b.statements.back().kind() == StatementKind::Control)
          continue;
        auto succs = successors(id);
        if (succs.size() != 1 || succs[0] == id) continue;
        std::uint32_t s = succs[0];
        if (s == entry) continue;
        if (predecessors(s).size() != 1) continue;
        BasicBlock& tail = blocks.at(s);
        for (auto& st : tail.statements) b.statements.push_back(std::move(st));
        for (Pattern p : tail.pattern_seq) b.pattern_seq.push_back(p);
        b.end_addr = tail.end_addr;
        edges.erase({id, s});
        for (std::uint32_t t : successors(s)) {
          edges.erase({s, t});
          edges.insert({t == s ? id : id, t == s ? id : t});
        }
        blocks.erase(s);
        merged = true;
        changed = true;
        break;
      }
    }
  }

  Acfg out;
  out.name = std::move(g.name);
  out.entry = entry;
  for (auto& [id, b] : blocks) out.blocks.push_back(std::move(b));
  out.edges.assign(edges.begin(), edges.end());
  if (out.blocks.empty()) {
    out.entry = 0;
    return out;
  }
  cfgdetail::redensify(out);
  return out;
}

// Whole pipeline for one function: partition, edges, annotation.
inline Acfg build_function_acfg(const MailProgram& program, const FunctionSpan& span,
                                const ClassifyOptions& opts = {},
                                Diagnostics* diagnostics = nullptr) {
  auto blocks = partition_blocks(program, span, diagnostics);
  return annotate(build_cfg(program, span, std::move(blocks), diagnostics), opts);
}

// Structural equality used by the serializer round-trip: name, entry, edge
// set, per-block pattern sequences and statement syntax. Addresses are
// pipeline metadata the text format does not carry.
inline bool operator==(const BasicBlock& a, const BasicBlock& b) {
  if (a.id != b.id || a.pattern_seq != b.pattern_seq) return false;
  if (a.statements.size() != b.statements.size()) return false;
  for (std::size_t i = 0; i < a.statements.size(); ++i)
    if (!structurally_equal(a.statements[i], b.statements[i])) return false;
  return true;
}

inline bool operator==(const Acfg& a, const Acfg& b) {
  return a.name == b.name && a.entry == b.entry && a.edges == b.edges &&
         a.blocks == b.blocks;
}

}  // namespace mail

// Back-edge and natural-loop detection over an ACFG. Immediate dominators
// are computed with the iterative data-flow scheme over reverse postorder
// (Cooper/Harvey/Kennedy); a back edge (u,v) has v dominating u, and its
// natural loop is v plus everything that reaches u without passing v.
// Retreating edges whose target does not dominate the source witness an
// irreducible region and are reported without a loop body.
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mail/cfg.hpp"

namespace mail {

struct Loop {
  std::uint32_t header = 0;
  std::vector<std::uint32_t> members;  // sorted, includes the header
  int parent = -1;                     // index into LoopInfo::loops, -1 = outermost
};

struct LoopInfo {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> back_edges;
  std::vector<Loop> loops;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> irreducible_edges;

  int outer_count() const {
    int n = 0;
    for (const auto& l : loops) n += l.parent < 0;
    return n;
  }
  int inner_count() const { return static_cast<int>(loops.size()) - outer_count(); }
  int max_depth() const {
    int best = 0;
    for (std::size_t i = 0; i < loops.size(); ++i) {
      int depth = 1;
      int p = loops[i].parent;
      while (p >= 0) {
        ++depth;
        p = loops[static_cast<std::size_t>(p)].parent;
      }
      best = std::max(best, depth);
    }
    return best;
  }
};

inline LoopInfo find_loops(const Acfg& g) {
  LoopInfo info;
  std::size_t n = g.blocks.size();
  if (n == 0) return info;

  std::vector<std::vector<std::uint32_t>> succ(n), pred(n);
  for (const auto& [s, d] : g.edges) {
    succ[s].push_back(d);
    pred[d].push_back(s);
  }

  // Reverse postorder from the entry; unreachable blocks get no number and
  // take no part in dominance.
  constexpr std::uint32_t kUnset = ~0u;
  std::vector<std::uint32_t> postorder;
  std::vector<std::uint8_t> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{g.entry, 0}};
  state[g.entry] = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < succ[node].size()) {
      std::uint32_t s = succ[node][next++];
      if (state[s] == 0) {
        state[s] = 1;
        stack.push_back({s, 0});
      } else if (state[s] == 1) {
        // Cycle edge; classified below once dominators are known.
      }
      continue;
    }
    state[node] = 2;
    postorder.push_back(node);
    stack.pop_back();
  }
  std::vector<std::uint32_t> rpo_index(n, kUnset);
  for (std::size_t i = 0; i < postorder.size(); ++i)
    rpo_index[postorder[i]] = static_cast<std::uint32_t>(postorder.size() - 1 - i);

  std::vector<std::uint32_t> idom(n, kUnset);
  idom[g.entry] = g.entry;
  auto intersect = [&](std::uint32_t a, std::uint32_t b) {
    while (a != b) {
      while (rpo_index[a] > rpo_index[b]) a = idom[a];
      while (rpo_index[b] > rpo_index[a]) b = idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
      std::uint32_t node = *it;
      if (node == g.entry) continue;
      std::uint32_t new_idom = kUnset;
      for (std::uint32_t p : pred[node]) {
        if (idom[p] == kUnset) continue;
        new_idom = new_idom == kUnset ? p : intersect(new_idom, p);
      }
      if (new_idom != kUnset && idom[node] != new_idom) {
        idom[node] = new_idom;
        changed = true;
      }
    }
  }

  auto dominates = [&](std::uint32_t a, std::uint32_t b) {
    // Walk b's dominator chain up to the entry.
    if (idom[b] == kUnset) return false;
    std::uint32_t x = b;
    for (;;) {
      if (x == a) return true;
      if (x == g.entry) return false;
      x = idom[x];
    }
  };

  // Classify cycle edges. A DFS from the entry marks which edges close a
  // cycle; dominance splits them into back edges and irreducible ones.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> cycle_edges;
  {
    std::vector<std::uint8_t> st(n, 0);
    std::vector<std::pair<std::uint32_t, std::size_t>> dfs{{g.entry, 0}};
    st[g.entry] = 1;
    while (!dfs.empty()) {
      auto& [node, next] = dfs.back();
      if (next < succ[node].size()) {
        std::uint32_t s = succ[node][next++];
        if (st[s] == 0) {
          st[s] = 1;
          dfs.push_back({s, 0});
        } else if (st[s] == 1) {
          cycle_edges.push_back({node, s});
        }
        continue;
      }
      st[node] = 2;
      dfs.pop_back();
    }
  }
  for (const auto& [u, v] : cycle_edges) {
    if (dominates(v, u))
      info.back_edges.push_back({u, v});
    else
      info.irreducible_edges.push_back({u, v});
  }
  std::sort(info.back_edges.begin(), info.back_edges.end());
  std::sort(info.irreducible_edges.begin(), info.irreducible_edges.end());

  // Natural loops, one per header; bodies of back edges sharing a header
  // are merged.
  std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> by_header;
  for (const auto& [u, v] : info.back_edges) {
    std::vector<std::uint32_t>* body = nullptr;
    for (auto& [h, b] : by_header)
      if (h == v) body = &b;
    if (!body) {
      by_header.push_back({v, {v}});
      body = &by_header.back().second;
    }
    // Reverse reachability from u, stopping at the header.
    std::vector<std::uint32_t> work{u};
    while (!work.empty()) {
      std::uint32_t x = work.back();
      work.pop_back();
      if (std::find(body->begin(), body->end(), x) != body->end()) continue;
      body->push_back(x);
      for (std::uint32_t p : pred[x]) work.push_back(p);
    }
  }
  for (auto& [header, body] : by_header) {
    std::sort(body.begin(), body.end());
    info.loops.push_back(Loop{header, std::move(body), -1});
  }
  // Containment nesting: the parent is the smallest strictly larger loop
  // whose members include all of ours.
  std::sort(info.loops.begin(), info.loops.end(),
            [](const Loop& a, const Loop& b) { return a.members.size() < b.members.size(); });
  for (std::size_t i = 0; i < info.loops.size(); ++i) {
    for (std::size_t j = i + 1; j < info.loops.size(); ++j) {
      if (info.loops[j].members.size() <= info.loops[i].members.size()) continue;
      if (std::includes(info.loops[j].members.begin(), info.loops[j].members.end(),
                        info.loops[i].members.begin(), info.loops[i].members.end())) {
        info.loops[i].parent = static_cast<int>(j);
        break;
      }
    }
  }
  return info;
}

}  // namespace mail

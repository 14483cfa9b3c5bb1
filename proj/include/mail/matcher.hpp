// Subgraph isomorphism between a template ACFG and a target ACFG.
//
// Semantics: a mapping m is valid when it is injective, every template edge
// (u,v) has (m(u),m(v)) in the target (plain subgraph, not induced: extra
// target edges are fine), and, with the pattern filter on, every mapped pair
// has equal pattern sequences. The search is a VF2-style state space walk
// with degree pruning; candidate order is lowest-id-first so results are
// deterministic. A configurable expansion budget turns pathological cases
// into an explicit Inconclusive outcome instead of an open-ended search.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mail/cfg.hpp"

namespace mail {

using Mapping = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

enum class MatchStatus : std::uint8_t { Match, NoMatch, Inconclusive };

struct MatchResult {
  MatchStatus status = MatchStatus::NoMatch;
  std::optional<Mapping> mapping;
  std::uint64_t expansions = 0;

  bool matched() const { return status == MatchStatus::Match; }
};

struct MatchOptions {
  bool use_patterns = true;
  std::uint64_t budget = 10'000'000;  // candidate-pair expansions per query
};

inline bool node_compatible(const BasicBlock& tmpl, const BasicBlock& target) {
  return tmpl.pattern_seq == target.pattern_seq;
}

// Linear-time soundness check for a claimed mapping.
inline bool verify_mapping(const Acfg& tmpl, const Acfg& target, const Mapping& m,
                           bool use_patterns) {
  if (m.size() != tmpl.blocks.size()) return false;
  std::vector<std::int64_t> image(tmpl.blocks.size(), -1);
  std::vector<std::uint8_t> used(target.blocks.size(), 0);
  for (const auto& [t, g] : m) {
    if (t >= tmpl.blocks.size() || g >= target.blocks.size()) return false;
    if (image[t] >= 0 || used[g]) return false;  // totality + injectivity
    image[t] = g;
    used[g] = 1;
    if (use_patterns && !node_compatible(tmpl.blocks[t], target.blocks[g])) return false;
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> target_edges = target.edges;
  std::sort(target_edges.begin(), target_edges.end());
  for (const auto& [u, v] : tmpl.edges) {
    std::pair<std::uint32_t, std::uint32_t> want{static_cast<std::uint32_t>(image[u]),
                                                 static_cast<std::uint32_t>(image[v])};
    if (!std::binary_search(target_edges.begin(), target_edges.end(), want)) return false;
  }
  return true;
}

namespace matchdetail {

struct Graph {
  std::vector<std::vector<std::uint32_t>> succ, pred;
  std::vector<std::uint32_t> outdeg, indeg;

  explicit Graph(const Acfg& g)
      : succ(g.blocks.size()),
        pred(g.blocks.size()),
        outdeg(g.blocks.size(), 0),
        indeg(g.blocks.size(), 0) {
    for (const auto& [s, d] : g.edges) {
      succ[s].push_back(d);
      pred[d].push_back(s);
      ++outdeg[s];
      ++indeg[d];
    }
    for (auto& v : succ) std::sort(v.begin(), v.end());
    for (auto& v : pred) std::sort(v.begin(), v.end());
  }

  bool has_edge(std::uint32_t s, std::uint32_t d) const {
    return std::binary_search(succ[s].begin(), succ[s].end(), d);
  }
};

// Template nodes ordered connected-first: after the first node, prefer the
// lowest-id node adjacent to one already placed. Keeps the search frontier
// connected on connected templates.
inline std::vector<std::uint32_t> match_order(const Graph& t) {
  std::size_t n = t.succ.size();
  std::vector<std::uint32_t> order;
  std::vector<std::uint8_t> placed(n, 0);
  while (order.size() < n) {
    std::int64_t best = -1;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      bool adjacent = false;
      for (std::uint32_t q : order) {
        if (t.has_edge(q, i) || t.has_edge(i, q)) {
          adjacent = true;
          break;
        }
      }
      if (adjacent) {
        best = i;
        break;
      }
      if (best < 0) best = i;  // fallback: lowest unplaced id
    }
    placed[static_cast<std::size_t>(best)] = 1;
    order.push_back(static_cast<std::uint32_t>(best));
  }
  return order;
}

struct Search {
  const Acfg& tmpl_acfg;
  const Acfg& target_acfg;
  Graph tmpl;
  Graph target;
  MatchOptions opts;
  std::vector<std::uint32_t> order;
  std::vector<std::int64_t> map;      // template -> target, -1 unset
  std::vector<std::uint8_t> used;     // target usage
  std::uint64_t expansions = 0;
  bool out_of_budget = false;

  Search(const Acfg& t, const Acfg& g, MatchOptions o)
      : tmpl_acfg(t), target_acfg(g), tmpl(t), target(g), opts(o),
        order(match_order(tmpl)),
        map(t.blocks.size(), -1),
        used(g.blocks.size(), 0) {}

  bool feasible(std::uint32_t n, std::uint32_t c) {
    if (opts.use_patterns &&
        !node_compatible(tmpl_acfg.blocks[n], target_acfg.blocks[c]))
      return false;
    if (target.outdeg[c] < tmpl.outdeg[n] || target.indeg[c] < tmpl.indeg[n]) return false;
    // Every already-mapped neighbour must be consistent.
    for (std::uint32_t s : tmpl.succ[n])
      if (map[s] >= 0 && !target.has_edge(c, static_cast<std::uint32_t>(map[s]))) return false;
    for (std::uint32_t p : tmpl.pred[n])
      if (map[p] >= 0 && !target.has_edge(static_cast<std::uint32_t>(map[p]), c)) return false;
    return true;
  }

  bool run(std::size_t depth) {
    if (depth == order.size()) return true;
    std::uint32_t n = order[depth];
    for (std::uint32_t c = 0; c < target.succ.size(); ++c) {
      if (used[c]) continue;
      if (++expansions > opts.budget) {
        out_of_budget = true;
        return false;
      }
      if (!feasible(n, c)) continue;
      map[n] = c;
      used[c] = 1;
      if (run(depth + 1)) return true;
      map[n] = -1;
      used[c] = 0;
      if (out_of_budget) return false;
    }
    return false;
  }
};

}  // namespace matchdetail

inline MatchResult subgraph_match(const Acfg& tmpl, const Acfg& target,
                                  MatchOptions opts = {}) {
  MatchResult result;
  if (tmpl.blocks.size() > target.blocks.size()) {
    result.status = MatchStatus::NoMatch;
    return result;
  }
  if (tmpl.blocks.empty()) {  // the empty graph embeds anywhere
    result.status = MatchStatus::Match;
    result.mapping = Mapping{};
    return result;
  }
  matchdetail::Search search(tmpl, target, opts);
  bool found = search.run(0);
  result.expansions = search.expansions;
  if (found) {
    Mapping m;
    for (std::uint32_t i = 0; i < search.map.size(); ++i)
      m.push_back({i, static_cast<std::uint32_t>(search.map[i])});
    result.status = MatchStatus::Match;
    result.mapping = std::move(m);
  } else if (search.out_of_budget) {
    result.status = MatchStatus::Inconclusive;
  } else {
    result.status = MatchStatus::NoMatch;
  }
  return result;
}

// Exhaustive oracle over all injective template->target maps, lexicographic
// order. Only sensible for tiny graphs; the precondition is enforced.
inline MatchResult brute_force_match(const Acfg& tmpl, const Acfg& target,
                                     MatchOptions opts = {}) {
  if (tmpl.blocks.size() > 8)
    throw std::invalid_argument("brute_force_match: template exceeds 8 blocks");
  MatchResult result;
  std::size_t tn = tmpl.blocks.size(), gn = target.blocks.size();
  if (tn > gn) return result;
  if (tn == 0) {
    result.status = MatchStatus::Match;
    result.mapping = Mapping{};
    return result;
  }

  std::vector<std::uint32_t> pick(tn, 0);
  std::vector<std::uint8_t> used(gn, 0);
  // Depth-first enumeration of k-permutations in lexicographic order.
  std::size_t depth = 0;
  std::vector<std::uint32_t> cursor(tn, 0);
  while (true) {
    if (cursor[depth] >= gn) {
      if (depth == 0) break;
      --depth;
      used[pick[depth]] = 0;
      ++cursor[depth];
      continue;
    }
    std::uint32_t c = cursor[depth];
    if (used[c]) {
      ++cursor[depth];
      continue;
    }
    pick[depth] = c;
    if (depth + 1 == tn) {
      Mapping m;
      for (std::uint32_t i = 0; i < tn; ++i) m.push_back({i, pick[i]});
      if (verify_mapping(tmpl, target, m, opts.use_patterns)) {
        result.status = MatchStatus::Match;
        result.mapping = std::move(m);
        return result;
      }
      ++cursor[depth];
      continue;
    }
    used[c] = 1;
    ++depth;
    cursor[depth] = 0;
  }
  result.status = MatchStatus::NoMatch;
  return result;
}

}  // namespace mail

// Malware template store and classification.
//
// A template is the set of normalized, annotated per-function ACFGs of one
// known sample. Exact mode flags a program when any template ACFG embeds
// (subgraph + patterns) in the program's whole-program graph or one of its
// function graphs. Threshold mode scores each template by the fraction of
// its function ACFGs that embed in some sample function ACFG and flags the
// sample when the best fraction reaches the threshold (default 0.25).
//
// Everything here is deterministic: fixed seed and fixed inputs produce
// byte-identical stores and reports. The persisted store carries no
// wall-clock timestamps for exactly that reason.
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mail/acfg_io.hpp"
#include "mail/cfg.hpp"
#include "mail/lifter.hpp"
#include "mail/matcher.hpp"

namespace mail {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string_view to_string(Arch a) { return a == Arch::Arm ? "arm" : "x86"; }

inline std::optional<Arch> arch_from_string(std::string_view s) {
  if (s == "x86") return Arch::X86;
  if (s == "arm") return Arch::Arm;
  return std::nullopt;
}

struct SampleSpec {
  std::string name;
  std::string text;  // disassembly listing
  Arch arch = Arch::X86;
};

struct SampleGraphs {
  std::string name;
  std::vector<Acfg> functions;  // normalized, annotated, non-empty
  Acfg whole;                   // disjoint union of the function graphs
};

struct MalwareTemplate {
  std::string name;
  Arch arch = Arch::X86;
  std::string source;  // provenance: input path or label
  std::vector<Acfg> acfgs;
};

struct TemplateStore {
  std::vector<MalwareTemplate> templates;
};

// ---------------------------------------------------------------------------
// Sample pipeline
// ---------------------------------------------------------------------------

inline Acfg union_graph(const std::string& name, const std::vector<Acfg>& parts) {
  Acfg whole;
  whole.name = name;
  std::uint32_t offset = 0;
  for (const Acfg& g : parts) {
    for (BasicBlock b : g.blocks) {
      b.id += offset;
      whole.blocks.push_back(std::move(b));
    }
    for (auto [s, d] : g.edges) whole.edges.push_back({s + offset, d + offset});
    offset += static_cast<std::uint32_t>(g.blocks.size());
  }
  whole.entry = 0;
  return whole;
}

inline SampleGraphs build_sample_graphs(const SampleSpec& spec,
                                        const ClassifyOptions& classify = {},
                                        Diagnostics* diagnostics = nullptr) {
  SampleGraphs out;
  out.name = spec.name;
  auto spans = parse_disasm(spec.text, spec.arch);
  MailProgram program = lift_program(spans, classify);
  for (const FunctionSpan& span : program.functions) {
    Acfg g = normalize(build_function_acfg(program, span, classify, diagnostics));
    if (g.blocks.empty()) continue;  // data-only spans contribute no graph
    out.functions.push_back(std::move(g));
  }
  out.whole = union_graph(spec.name, out.functions);
  return out;
}

// ---------------------------------------------------------------------------
// Store construction and persistence
// ---------------------------------------------------------------------------

inline TemplateStore build_templates(const std::vector<SampleSpec>& samples,
                                     const ClassifyOptions& classify = {},
                                     Diagnostics* diagnostics = nullptr) {
  TemplateStore store;
  for (const SampleSpec& spec : samples) {
    try {
      SampleGraphs graphs = build_sample_graphs(spec, classify, diagnostics);
      MalwareTemplate t;
      t.name = spec.name;
      t.arch = spec.arch;
      t.source = spec.name;
      t.acfgs = std::move(graphs.functions);
      if (t.acfgs.empty() && diagnostics)
        diagnostics->push_back("template '" + spec.name + "' has no non-empty function graphs");
      store.templates.push_back(std::move(t));
    } catch (const std::exception& e) {
      if (diagnostics)
        diagnostics->push_back("sample '" + spec.name + "' skipped: " + e.what());
    }
  }
  return store;
}

namespace storedetail {

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string digest_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string sanitize(std::string_view name) {
  std::string out;
  for (char c : name)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')
               ? c
               : '_';
  return out.empty() ? std::string("t") : out;
}

}  // namespace storedetail

// Layout: <dir>/index.txt plus one directory per template holding one
// serialized ACFG per function. Rebuilding over the same inputs is
// byte-identical.
inline void save_store(const TemplateStore& store, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string index = "MAILSTORE 1\n";
  std::map<std::string, std::string> seen;  // sanitized -> original
  for (const MalwareTemplate& t : store.templates) {
    std::string tdir_name = storedetail::sanitize(t.name);
    auto [it, fresh] = seen.emplace(tdir_name, t.name);
    if (!fresh)
      throw StoreError("template name collision: '" + t.name + "' and '" + it->second + "'");
    fs::path tdir = dir / tdir_name;
    fs::remove_all(tdir);
    fs::create_directories(tdir);
    std::uint64_t digest = storedetail::fnv1a("");
    for (std::size_t i = 0; i < t.acfgs.size(); ++i) {
      std::string body = serialize(t.acfgs[i]);
      digest = storedetail::fnv1a(body, digest);
      char fname[32];
      std::snprintf(fname, sizeof fname, "f%04zu.acfg", i);
      std::ofstream out(tdir / fname, std::ios::binary | std::ios::trunc);
      if (!out) throw StoreError("cannot write " + (tdir / fname).string());
      out << body;
    }
    index += "TEMPLATE " + tdir_name + " " + std::string(to_string(t.arch)) + " " +
             std::to_string(t.acfgs.size()) + " " + storedetail::digest_hex(digest) + " " +
             t.source + "\n";
  }
  std::ofstream out(dir / "index.txt", std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write " + (dir / "index.txt").string());
  out << index;
}

inline TemplateStore load_store(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(dir / "index.txt", std::ios::binary);
  if (!in) throw StoreError("no template store at " + dir.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("MAILSTORE 1", 0) != 0)
    throw StoreError("unrecognized store format in " + (dir / "index.txt").string());
  TemplateStore store;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string kw, name, arch_s, count_s, digest_s, source;
    fields >> kw >> name >> arch_s >> count_s >> digest_s;
    std::getline(fields, source);
    if (!source.empty() && source.front() == ' ') source.erase(0, 1);
    if (kw != "TEMPLATE") throw StoreError("malformed index line: " + line);
    auto arch = arch_from_string(arch_s);
    if (!arch) throw StoreError("unknown arch in index: " + arch_s);
    MalwareTemplate t;
    t.name = name;
    t.arch = *arch;
    t.source = source;
    std::size_t count = std::stoul(count_s);
    std::uint64_t digest = storedetail::fnv1a("");
    for (std::size_t i = 0; i < count; ++i) {
      char fname[32];
      std::snprintf(fname, sizeof fname, "f%04zu.acfg", i);
      std::ifstream acfg_in(dir / name / fname, std::ios::binary);
      if (!acfg_in) throw StoreError("missing " + (dir / name / fname).string());
      std::string body((std::istreambuf_iterator<char>(acfg_in)),
                       std::istreambuf_iterator<char>());
      digest = storedetail::fnv1a(body, digest);
      t.acfgs.push_back(deserialize(body));
    }
    if (storedetail::digest_hex(digest) != digest_s)
      throw StoreError("digest mismatch for template '" + name + "'");
    store.templates.push_back(std::move(t));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

enum class Verdict : std::uint8_t { Malware, Benign, Inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Malware: return "malware";
    case Verdict::Benign: return "benign";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "benign";
}

enum class Granularity : std::uint8_t { Whole, Functions, Both };

struct DetectOptions {
  MatchOptions match;
  Granularity granularity = Granularity::Both;  // exact mode only
};

struct WitnessRef {
  std::string template_name;
  std::size_t template_func = 0;
  bool whole_program = false;  // matched against the union graph
  std::size_t sample_func = 0;
  Mapping mapping;
};

struct TemplateEvidence {
  std::string template_name;
  std::size_t matched = 0;
  std::size_t total = 0;
  double fraction = 0.0;
  bool any_inconclusive = false;
};

struct DetectionReport {
  std::string sample;
  Verdict verdict = Verdict::Benign;
  std::string best_template;  // empty when nothing matched
  double best_fraction = 0.0;
  std::vector<TemplateEvidence> evidence;
  std::vector<WitnessRef> witnesses;
  std::vector<std::string> notes;
  std::chrono::microseconds elapsed{0};
};

namespace detectdetail {

struct ScoreState {
  DetectionReport report;
  bool any_match = false;
  bool any_inconclusive = false;
};

inline void finish_report(ScoreState& state, bool flagged) {
  DetectionReport& r = state.report;
  if (flagged)
    r.verdict = Verdict::Malware;
  else if (state.any_inconclusive)
    r.verdict = Verdict::Inconclusive;
  else
    r.verdict = Verdict::Benign;
  for (const TemplateEvidence& e : r.evidence) {
    if (e.total == 0 || e.fraction <= 0.0) continue;
    if (e.fraction > r.best_fraction) {
      r.best_fraction = e.fraction;
      r.best_template = e.template_name;
    }
  }
}

}  // namespace detectdetail

inline DetectionReport detect_exact(const TemplateStore& store, const SampleGraphs& sample,
                                    const DetectOptions& opts = {}) {
  auto t0 = std::chrono::steady_clock::now();
  detectdetail::ScoreState state;
  state.report.sample = sample.name;
  bool flagged = false;

  for (const MalwareTemplate& t : store.templates) {
    TemplateEvidence ev;
    ev.template_name = t.name;
    ev.total = t.acfgs.size();
    if (ev.total == 0) {
      state.report.notes.push_back("template '" + t.name + "' is empty; excluded");
      continue;
    }
    for (std::size_t ti = 0; ti < t.acfgs.size(); ++ti) {
      bool matched = false;
      if (opts.granularity != Granularity::Functions && !sample.whole.blocks.empty()) {
        MatchResult r = subgraph_match(t.acfgs[ti], sample.whole, opts.match);
        if (r.status == MatchStatus::Inconclusive) ev.any_inconclusive = true;
        if (r.matched()) {
          matched = true;
          state.report.witnesses.push_back({t.name, ti, true, 0, *r.mapping});
        }
      }
      if (!matched && opts.granularity != Granularity::Whole) {
        for (std::size_t si = 0; si < sample.functions.size(); ++si) {
          MatchResult r = subgraph_match(t.acfgs[ti], sample.functions[si], opts.match);
          if (r.status == MatchStatus::Inconclusive) ev.any_inconclusive = true;
          if (r.matched()) {
            matched = true;
            state.report.witnesses.push_back({t.name, ti, false, si, *r.mapping});
            break;
          }
        }
      }
      if (matched) ++ev.matched;
    }
    ev.fraction = ev.total ? static_cast<double>(ev.matched) / static_cast<double>(ev.total) : 0.0;
    if (ev.matched > 0) flagged = true;
    if (ev.any_inconclusive) state.any_inconclusive = true;
    state.report.evidence.push_back(std::move(ev));
  }
  detectdetail::finish_report(state, flagged);
  state.report.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - t0);
  return state.report;
}

inline DetectionReport detect_threshold(const TemplateStore& store,
                                        const SampleGraphs& sample, double threshold,
                                        const DetectOptions& opts = {}) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must be in (0, 1]");
  auto t0 = std::chrono::steady_clock::now();
  detectdetail::ScoreState state;
  state.report.sample = sample.name;
  bool flagged = false;

  for (const MalwareTemplate& t : store.templates) {
    TemplateEvidence ev;
    ev.template_name = t.name;
    ev.total = t.acfgs.size();
    if (ev.total == 0) {
      state.report.notes.push_back("template '" + t.name + "' is empty; excluded");
      continue;
    }
    // Each template function independently seeks any matching sample
    // function; one sample function may serve several template functions.
    for (std::size_t ti = 0; ti < t.acfgs.size(); ++ti) {
      bool matched = false;
      for (std::size_t si = 0; si < sample.functions.size(); ++si) {
        MatchResult r = subgraph_match(t.acfgs[ti], sample.functions[si], opts.match);
        if (r.status == MatchStatus::Inconclusive) ev.any_inconclusive = true;
        if (r.matched()) {
          matched = true;
          state.report.witnesses.push_back({t.name, ti, false, si, *r.mapping});
          break;
        }
      }
      if (matched) ++ev.matched;
    }
    ev.fraction = static_cast<double>(ev.matched) / static_cast<double>(ev.total);
    if (ev.fraction >= threshold) flagged = true;
    if (ev.any_inconclusive) state.any_inconclusive = true;
    state.report.evidence.push_back(std::move(ev));
  }
  detectdetail::finish_report(state, flagged);
  state.report.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - t0);
  return state.report;
}

// One line per sample: name, verdict, best template, matched fraction.
inline std::string render_record(const DetectionReport& r) {
  char frac[32];
  std::snprintf(frac, sizeof frac, "%.6f", r.best_fraction);
  return r.sample + "\t" + std::string(to_string(r.verdict)) + "\t" +
         (r.best_template.empty() ? "-" : r.best_template) + "\t" + frac;
}

// ---------------------------------------------------------------------------
// Cross-validation and threshold sweeps
// ---------------------------------------------------------------------------

struct LabeledSample {
  SampleSpec spec;
  bool is_malware = false;
};

struct CvFold {
  std::vector<std::string> train;          // template names
  std::size_t tested_malware = 0, flagged_malware = 0;
  std::size_t tested_benign = 0, flagged_benign = 0;
  std::optional<double> detection_rate;    // empty when nothing to test
  std::optional<double> fp_rate;
};

struct CvReport {
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  std::size_t train_size = 0;
  double threshold = 0.25;
  std::vector<CvFold> fold_results;
  std::optional<double> detection_rate;    // mean over defined folds
  std::optional<double> fp_rate;
};

namespace detectdetail {

// Explicit Fisher-Yates so shuffles are identical across standard library
// implementations.
inline void deterministic_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  std::uint64_t state = seed ? seed : 0x9e3779b97f4a7c15ull;
  auto next = [&]() {
    // xorshift64*; quality is irrelevant, stability is not.
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    return state * 2685821657736338717ull;
  };
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[next() % i]);
}

}  // namespace detectdetail

inline CvReport cross_validate(const std::vector<LabeledSample>& samples, std::size_t folds,
                               std::size_t train_size, double threshold, std::uint64_t seed,
                               const DetectOptions& opts = {},
                               const ClassifyOptions& classify = {}) {
  if (folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
  std::vector<std::size_t> malware_idx;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].is_malware) malware_idx.push_back(i);
  if (folds * train_size > malware_idx.size())
    throw std::invalid_argument("cross_validate: insufficient malware samples for " +
                                std::to_string(folds) + " disjoint folds of " +
                                std::to_string(train_size));

  // Lift every sample once.
  std::vector<SampleGraphs> graphs;
  graphs.reserve(samples.size());
  for (const auto& s : samples) graphs.push_back(build_sample_graphs(s.spec, classify));

  detectdetail::deterministic_shuffle(malware_idx, seed);

  CvReport report;
  report.seed = seed;
  report.folds = folds;
  report.train_size = train_size;
  report.threshold = threshold;

  double det_sum = 0.0, fp_sum = 0.0;
  std::size_t det_n = 0, fp_n = 0;
  for (std::size_t fold = 0; fold < folds; ++fold) {
    std::vector<std::size_t> train(malware_idx.begin() + fold * train_size,
                                   malware_idx.begin() + (fold + 1) * train_size);
    std::sort(train.begin(), train.end());
    TemplateStore store;
    for (std::size_t idx : train) {
      MalwareTemplate t;
      t.name = samples[idx].spec.name;
      t.arch = samples[idx].spec.arch;
      t.source = samples[idx].spec.name;
      t.acfgs = graphs[idx].functions;
      store.templates.push_back(std::move(t));
    }

    CvFold result;
    for (std::size_t idx : train) result.train.push_back(samples[idx].spec.name);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      bool in_train = std::binary_search(train.begin(), train.end(), i);
      if (in_train) continue;
      DetectionReport r = detect_threshold(store, graphs[i], threshold, opts);
      bool hit = r.verdict == Verdict::Malware;
      if (samples[i].is_malware) {
        ++result.tested_malware;
        result.flagged_malware += hit;
      } else {
        ++result.tested_benign;
        result.flagged_benign += hit;
      }
    }
    if (result.tested_malware)
      result.detection_rate = static_cast<double>(result.flagged_malware) /
                              static_cast<double>(result.tested_malware);
    if (result.tested_benign)
      result.fp_rate = static_cast<double>(result.flagged_benign) /
                       static_cast<double>(result.tested_benign);
    if (result.detection_rate) {
      det_sum += *result.detection_rate;
      ++det_n;
    }
    if (result.fp_rate) {
      fp_sum += *result.fp_rate;
      ++fp_n;
    }
    report.fold_results.push_back(std::move(result));
  }
  if (det_n) report.detection_rate = det_sum / static_cast<double>(det_n);
  if (fp_n) report.fp_rate = fp_sum / static_cast<double>(fp_n);
  return report;
}

inline std::string render_cv_report(const CvReport& r) {
  auto fmt_rate = [](const std::optional<double>& v) -> std::string {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  char head[160];
  std::snprintf(head, sizeof head, "CVREPORT seed=%llu folds=%zu train=%zu threshold=%.6f\n",
                static_cast<unsigned long long>(r.seed), r.folds, r.train_size, r.threshold);
  std::string out = head;
  for (std::size_t i = 0; i < r.fold_results.size(); ++i) {
    const CvFold& f = r.fold_results[i];
    out += "fold " + std::to_string(i) + ": detection=" + fmt_rate(f.detection_rate) +
           " fp=" + fmt_rate(f.fp_rate) + " (malware " + std::to_string(f.flagged_malware) +
           "/" + std::to_string(f.tested_malware) + ", benign " +
           std::to_string(f.flagged_benign) + "/" + std::to_string(f.tested_benign) +
           ", train";
    for (const auto& name : f.train) out += " " + name;
    out += ")\n";
  }
  out += "aggregate: detection=" + fmt_rate(r.detection_rate) +
         " fp=" + fmt_rate(r.fp_rate) + "\n";
  return out;
}

struct SweepRow {
  double threshold = 0.0;
  std::optional<double> detection_rate;
  std::optional<double> fp_rate;
};

// Per-sample best fractions are computed once; every threshold row reuses
// them, which also makes the detection-rate column non-increasing by
// construction.
inline std::vector<SweepRow> sweep_threshold(const TemplateStore& store,
                                             const std::vector<std::pair<SampleGraphs, bool>>& corpus,
                                             const std::vector<double>& thresholds,
                                             const DetectOptions& opts = {}) {
  std::vector<std::pair<double, bool>> best;  // (best fraction, is_malware)
  for (const auto& [graphs, is_malware] : corpus) {
    DetectionReport r = detect_threshold(store, graphs, 1.0, opts);
    best.push_back({r.best_fraction, is_malware});
  }
  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    SweepRow row;
    row.threshold = t;
    std::size_t m = 0, m_hit = 0, b = 0, b_hit = 0;
    for (const auto& [fraction, is_malware] : best) {
      bool hit = fraction >= t;
      if (is_malware) {
        ++m;
        m_hit += hit;
      } else {
        ++b;
        b_hit += hit;
      }
    }
    if (m) row.detection_rate = static_cast<double>(m_hit) / static_cast<double>(m);
    if (b) row.fp_rate = static_cast<double>(b_hit) / static_cast<double>(b);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mail

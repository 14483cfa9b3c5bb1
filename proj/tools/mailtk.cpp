// mailtk: lift disassembly to MAIL, build and match annotated CFGs, and run
// the template-store detector. One binary, subcommands per pipeline stage.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mail/acfg_io.hpp"
#include "mail/detector.hpp"
#include "mail/lifting_tables.hpp"
#include "mail/loops.hpp"
#include "mail/printer.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string sample_name(const std::string& path) {
  std::filesystem::path p(path);
  std::string stem = p.stem().string();
  return stem.empty() ? path : stem;
}

mail::Arch parse_arch(const std::string& s) {
  auto a = mail::arch_from_string(s);
  if (!a) throw CLI::ValidationError("--arch", "expected 'x86' or 'arm'");
  return *a;
}

void print_diagnostics(const mail::Diagnostics& diags, bool verbose) {
  if (!verbose) return;
  for (const auto& d : diags) std::cerr << "note: " << d << "\n";
}

// Order-preserving parallel map over sample indices.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  unsigned count = std::min<std::size_t>(workers, n);
  for (unsigned w = 0; w < count; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

struct CommonOptions {
  std::string arch = "x86";
  bool compat_call_tags = false;
  bool verbose = false;

  mail::ClassifyOptions classify() const { return {compat_call_tags}; }
};

std::vector<mail::LabeledSample> load_labeled(const std::vector<std::string>& malware,
                                              const std::vector<std::string>& benign,
                                              mail::Arch arch) {
  std::vector<mail::LabeledSample> samples;
  for (const auto& path : malware)
    samples.push_back({{sample_name(path), read_file(path), arch}, true});
  for (const auto& path : benign)
    samples.push_back({{sample_name(path), read_file(path), arch}, false});
  return samples;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAIL toolkit: disassembly lifting, ACFG matching, malware detection"};
  app.require_subcommand(1);

  CommonOptions common;
  app.add_flag("--compat-call-tags", common.compat_call_tags,
               "tag library calls CALL/CALL_CONSTANT instead of LIBCALL*");
  app.add_flag("-v,--verbose", common.verbose, "diagnostics on stderr");

  std::string default_store;
  if (const char* env = std::getenv("MAILTK_STORE")) default_store = env;

  // --- translate ---
  auto* translate = app.add_subcommand("translate", "disassembly -> MAIL text");
  std::vector<std::string> tr_inputs;
  std::string tr_out;
  translate->add_option("inputs", tr_inputs, "disassembly listings")->required();
  translate->add_option("--arch", common.arch, "x86 or arm")->capture_default_str();
  translate->add_option("-o,--output", tr_out, "output path (default stdout)");

  // --- cfg ---
  auto* cfg = app.add_subcommand("cfg", "disassembly -> serialized ACFGs");
  std::vector<std::string> cfg_inputs;
  std::string cfg_out;
  bool cfg_normalize = false, cfg_loops = false, cfg_dot = false, cfg_no_statements = false;
  cfg->add_option("inputs", cfg_inputs, "disassembly listings")->required();
  cfg->add_option("--arch", common.arch, "x86 or arm")->capture_default_str();
  cfg->add_flag("--normalize", cfg_normalize, "normalize the graphs");
  cfg->add_flag("--loops", cfg_loops, "append '# loops' summary lines");
  cfg->add_flag("--dot", cfg_dot, "emit Graphviz instead of the ACFG format");
  cfg->add_flag("--no-statements", cfg_no_statements, "omit S lines");
  cfg->add_option("-o,--output", cfg_out, "output path (default stdout)");

  // --- match ---
  auto* match = app.add_subcommand("match", "template ACFG vs target ACFG");
  std::string match_template, match_target;
  bool match_no_patterns = false;
  std::uint64_t match_budget = mail::MatchOptions{}.budget;
  match->add_option("template", match_template, "serialized template ACFG")->required();
  match->add_option("target", match_target, "serialized target ACFG")->required();
  match->add_flag("--no-patterns", match_no_patterns, "structure-only matching");
  match->add_option("--budget", match_budget, "candidate expansion budget")
      ->capture_default_str();

  // --- build-templates ---
  auto* build = app.add_subcommand("build-templates", "build a template store");
  std::vector<std::string> build_inputs;
  std::string build_store = default_store;
  build->add_option("inputs", build_inputs, "malware disassembly listings")->required();
  build->add_option("--arch", common.arch, "x86 or arm")->capture_default_str();
  build->add_option("--store", build_store, "store directory (or $MAILTK_STORE)")
      ->required(default_store.empty());

  // --- detect ---
  auto* detect = app.add_subcommand("detect", "classify samples against a store");
  std::vector<std::string> detect_inputs;
  std::string detect_store = default_store;
  bool detect_exact_mode = false, detect_no_patterns = false;
  double detect_thresh = 0.25;
  std::string detect_granularity = "both";
  unsigned detect_workers = std::thread::hardware_concurrency();
  std::string detect_out;
  detect->add_option("samples", detect_inputs, "disassembly listings")->required();
  detect->add_option("--arch", common.arch, "x86 or arm")->capture_default_str();
  detect->add_option("--store", detect_store, "store directory (or $MAILTK_STORE)")
      ->required(default_store.empty());
  detect->add_flag("--exact", detect_exact_mode, "exact mode (any template graph embeds)");
  detect->add_option("--threshold", detect_thresh, "matched-fraction threshold")
      ->capture_default_str();
  detect->add_option("--granularity", detect_granularity,
                     "exact mode scope: whole, functions or both")
      ->capture_default_str();
  detect->add_flag("--no-patterns", detect_no_patterns, "structure-only matching");
  detect->add_option("--workers", detect_workers, "parallel samples")->capture_default_str();
  detect->add_option("-o,--output", detect_out, "record stream path (default stdout)");

  // --- xval ---
  auto* xval = app.add_subcommand("xval", "k-fold cross validation");
  std::vector<std::string> xval_malware, xval_benign;
  std::size_t xval_folds = 10, xval_train = 25;
  std::uint64_t xval_seed = 0;
  double xval_thresh = 0.25;
  std::string xval_out;
  xval->add_option("--malware", xval_malware, "malware listings")->required();
  xval->add_option("--benign", xval_benign, "benign listings");
  xval->add_option("--arch", common.arch, "x86 or arm")->capture_default_str();
  xval->add_option("--folds", xval_folds, "number of folds")->capture_default_str();
  xval->add_option("--train", xval_train, "training samples per fold")->capture_default_str();
  xval->add_option("--seed", xval_seed, "RNG seed")->required();
  xval->add_option("--threshold", xval_thresh, "matched-fraction threshold")
      ->capture_default_str();
  xval->add_option("-o,--output", xval_out, "report path (default stdout)");

  // --- sweep ---
  auto* sweep = app.add_subcommand("sweep", "threshold sweep over a labeled corpus");
  std::vector<std::string> sweep_malware, sweep_benign;
  std::string sweep_store = default_store, sweep_thresholds = "0.1,0.2,0.25,0.3,0.5,0.75,1.0";
  std::string sweep_out;
  sweep->add_option("--store", sweep_store, "store directory (or $MAILTK_STORE)")
      ->required(default_store.empty());
  sweep->add_option("--malware", sweep_malware, "malware listings");
  sweep->add_option("--benign", sweep_benign, "benign listings");
  sweep->add_option("--arch", common.arch, "x86 or arm")->capture_default_str();
  sweep->add_option("--thresholds", sweep_thresholds, "comma-separated list")
      ->capture_default_str();
  sweep->add_option("-o,--output", sweep_out, "table path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    mail::Arch arch = parse_arch(common.arch);
    mail::ClassifyOptions classify = common.classify();

    if (*translate) {
      std::string out;
      for (const auto& path : tr_inputs) {
        auto spans = mail::parse_disasm(read_file(path), arch);
        out += mail::emit_mail(mail::lift_program(spans, classify));
      }
      write_output(tr_out, out);
      return 0;
    }

    if (*cfg) {
      std::string out;
      for (const auto& path : cfg_inputs) {
        auto spans = mail::parse_disasm(read_file(path), arch);
        mail::MailProgram program = mail::lift_program(spans, classify);
        mail::Diagnostics diags;
        for (const auto& span : program.functions) {
          mail::Acfg g = mail::build_function_acfg(program, span, classify, &diags);
          if (cfg_normalize) g = mail::normalize(std::move(g));
          out += cfg_dot ? mail::to_dot(g) : mail::serialize(g, !cfg_no_statements);
          if (cfg_loops) {
            mail::LoopInfo loops = mail::find_loops(g);
            out += "# loops " + g.name + ": " + std::to_string(loops.outer_count()) +
                   " outer, " + std::to_string(loops.inner_count()) + " inner\n";
          }
        }
        print_diagnostics(diags, common.verbose);
      }
      write_output(cfg_out, out);
      return 0;
    }

    if (*match) {
      mail::Acfg tmpl = mail::deserialize(read_file(match_template));
      mail::Acfg target = mail::deserialize(read_file(match_target));
      mail::MatchOptions opts{!match_no_patterns, match_budget};
      mail::MatchResult r = mail::subgraph_match(tmpl, target, opts);
      switch (r.status) {
        case mail::MatchStatus::Match: {
          std::string line = "match";
          for (const auto& [t, g] : *r.mapping)
            line += " " + std::to_string(t) + ":" + std::to_string(g);
          std::cout << line << "\n";
          break;
        }
        case mail::MatchStatus::NoMatch:
          std::cout << "no-match\n";
          break;
        case mail::MatchStatus::Inconclusive:
          std::cout << "inconclusive\n";
          break;
      }
      return 0;
    }

    if (*build) {
      std::vector<mail::SampleSpec> specs;
      for (const auto& path : build_inputs)
        specs.push_back({sample_name(path), read_file(path), arch});
      mail::Diagnostics diags;
      mail::TemplateStore store = mail::build_templates(specs, classify, &diags);
      mail::save_store(store, build_store);
      print_diagnostics(diags, common.verbose);
      std::cerr << "stored " << store.templates.size() << " template(s) in " << build_store
                << "\n";
      return 0;
    }

    if (*detect) {
      mail::TemplateStore store = mail::load_store(detect_store);
      mail::DetectOptions opts;
      opts.match.use_patterns = !detect_no_patterns;
      if (detect_granularity == "whole") opts.granularity = mail::Granularity::Whole;
      else if (detect_granularity == "functions") opts.granularity = mail::Granularity::Functions;
      else if (detect_granularity == "both") opts.granularity = mail::Granularity::Both;
      else throw CLI::ValidationError("--granularity", "expected whole, functions or both");

      std::vector<std::string> records(detect_inputs.size());
      std::vector<std::string> errors(detect_inputs.size());
      parallel_for(detect_inputs.size(), detect_workers, [&](std::size_t i) {
        try {
          mail::SampleSpec spec{sample_name(detect_inputs[i]), read_file(detect_inputs[i]),
                                arch};
          mail::SampleGraphs graphs = mail::build_sample_graphs(spec, classify);
          mail::DetectionReport r =
              detect_exact_mode ? mail::detect_exact(store, graphs, opts)
                                : mail::detect_threshold(store, graphs, detect_thresh, opts);
          records[i] = mail::render_record(r) + "\n";
        } catch (const std::exception& e) {
          errors[i] = std::string(e.what());
        }
      });
      std::string out;
      bool failed = false;
      for (std::size_t i = 0; i < records.size(); ++i) {
        out += records[i];
        if (!errors[i].empty()) {
          std::cerr << "error: " << detect_inputs[i] << ": " << errors[i] << "\n";
          failed = true;
        }
      }
      write_output(detect_out, out);
      return failed ? 1 : 0;
    }

    if (*xval) {
      auto samples = load_labeled(xval_malware, xval_benign, arch);
      mail::CvReport report = mail::cross_validate(samples, xval_folds, xval_train,
                                                   xval_thresh, xval_seed, {}, classify);
      write_output(xval_out, mail::render_cv_report(report));
      return 0;
    }

    if (*sweep) {
      mail::TemplateStore store = mail::load_store(sweep_store);
      std::vector<std::pair<mail::SampleGraphs, bool>> corpus;
      for (const auto& path : sweep_malware)
        corpus.push_back(
            {mail::build_sample_graphs({sample_name(path), read_file(path), arch}, classify),
             true});
      for (const auto& path : sweep_benign)
        corpus.push_back(
            {mail::build_sample_graphs({sample_name(path), read_file(path), arch}, classify),
             false});
      std::vector<double> thresholds;
      std::stringstream ss(sweep_thresholds);
      std::string item;
      while (std::getline(ss, item, ',')) thresholds.push_back(std::stod(item));
      auto rows = mail::sweep_threshold(store, corpus, thresholds);
      std::string out;
      for (const auto& row : rows) {
        char buf[96];
        auto fmt = [](const std::optional<double>& v) -> std::string {
          if (!v) return "n/a";
          char b[32];
          std::snprintf(b, sizeof b, "%.6f", *v);
          return b;
        };
        std::snprintf(buf, sizeof buf, "%.6f\t%s\t%s\n", row.threshold,
                      fmt(row.detection_rate).c_str(), fmt(row.fp_rate).c_str());
        out += buf;
      }
      write_output(sweep_out, out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

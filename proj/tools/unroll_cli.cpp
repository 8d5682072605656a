#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "unroll/cost.hpp"
#include "unroll/explore.hpp"
#include "unroll/kernel.hpp"
#include "unroll/rtl.hpp"
#include "unroll/sim.hpp"
#include "unroll/tensor.hpp"

namespace fs = std::filesystem;
using namespace unroll;

namespace {

constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
  std::vector<std::string> presets;
  double sparsity = 0.0;
  int bits = 8;
  int trials = 20;
  std::string arch = "K6";
  std::string trace;
  std::string weights_file;
  std::string inputs_file;
  std::string top = "kernel_top";
  bool active_low = false;
  bool generic = false;
  bool no_testbench = false;
  int workers = 0;
  int seeds = 0;
  std::string target = "vtr_like";
  std::string designs;
};

KernelConfig kernel_from(const Options& o) {
  if (o.presets.size() != 1) throw UsageError("exactly one --preset is required");
  if (!is_preset(o.presets.front())) throw UsageError("unknown preset '" + o.presets.front() + "'");
  KernelConfig c = preset(o.presets.front(), o.bits);
  c.specialize = !o.generic;
  c.validate();
  return c;
}

WeightTensor weights_for(const Options& o, const KernelConfig& c) {
  if (!o.weights_file.empty()) {
    std::ifstream f(o.weights_file);
    if (!f) throw UsageError("cannot read " + o.weights_file);
    WeightTensor w = read_weights(f);
    if (w.shape != c.weight_shape() || w.bits != c.bits) throw UsageError("weights file does not match the kernel");
    return w;
  }
  return generate_weights(c.weight_shape(), o.sparsity, o.bits, o.seed);
}

InputStimulus inputs_for(const Options& o, const KernelConfig& c) {
  if (!o.inputs_file.empty()) {
    std::ifstream f(o.inputs_file);
    if (!f) throw UsageError("cannot read " + o.inputs_file);
    InputStimulus x = read_inputs(f);
    if (x.shape != c.input_shape() || x.bits != c.bits) throw UsageError("inputs file does not match the kernel");
    return x;
  }
  return generate_inputs(c.input_shape(), o.bits, o.seed);
}

ArchParams arch_from(const std::string& spec) {
  if (fs::exists(spec)) {
    std::ifstream f(spec);
    std::stringstream ss;
    ss << f.rdbuf();
    auto archs = load_archs_json(ss.str());
    if (archs.size() != 1) throw UsageError("architecture file must hold exactly one entry for estimate");
    return archs.front();
  }
  return arch_preset(spec);
}

EmissionConfig emission_for(const Options& o, const KernelConfig& c) {
  EmissionConfig ec;
  ec.top_module_name = o.top;
  ec.reset = o.active_low ? ResetPolarity::active_low : ResetPolarity::active_high;
  ec.include_testbench = !o.no_testbench;
  std::ostringstream h;
  h << c.describe() << "\nsparsity " << o.sparsity << " seed " << o.seed;
  ec.header = h.str();
  return ec;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  f << text;
}

int cmd_generate(const Options& o) {
  const KernelConfig c = kernel_from(o);
  const WeightTensor w = weights_for(o, c);
  const InputStimulus x = inputs_for(o, c);
  const DataflowGraph g = build_kernel(c, w);
  const fs::path dir = o.out.empty() ? fs::path("designs") / design_directory(c, o.sparsity, o.seed) : fs::path(o.out);
  const EmissionConfig ec = emission_for(o, c);
  ArtifactSet set = emit(g, ec);
  if (ec.include_testbench) set.push_back(emit_testbench(g, ec, c, x, golden_outputs(c, w, x)));
  std::ostringstream ws, xs, gs;
  write_tensor(ws, w);
  write_tensor(xs, x);
  export_text(gs, g);
  set.push_back({"weights.txt", ws.str()});
  set.push_back({"inputs.txt", xs.str()});
  set.push_back({"graph.txt", gs.str()});
  write_artifacts(set, dir);
  std::cout << dir.string() << '\n';
  for (const auto& a : set) std::cout << "  " << a.path << '\n';
  return 0;
}

int cmd_simulate(const Options& o) {
  const KernelConfig c = kernel_from(o);
  const WeightTensor w = weights_for(o, c);
  const InputStimulus x = inputs_for(o, c);
  const DataflowGraph g = build_kernel(c, w);
  const auto schedule = make_schedule(c, x);
  const SimTrace trace = run(g, schedule);
  const auto got = collect_outputs(c, g, trace);
  const auto expected = golden_outputs(c, w, x);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < got.size(); ++i) mismatches += got[i] != expected[i];
  if (!o.trace.empty()) {
    std::ostringstream ts;
    write_trace_csv(ts, trace);
    write_text(o.trace, ts.str());
  }
  std::cout << "cycles " << trace.cycles << " latency " << trace.latency << " outputs " << got.size()
            << " mismatches " << mismatches << '\n';
  return mismatches == 0 ? 0 : kVerifyFailed;
}

int cmd_verify(const Options& o) {
  if (o.trials < 1) throw UsageError("--trials must be at least 1");
  const KernelConfig c = kernel_from(o);
  const WeightTensor w = weights_for(o, c);
  const auto r = check_equivalence(c, w, o.trials, o.seed);
  if (r.equivalent) {
    std::cout << "PASS " << c.describe() << " trials " << r.trials_run << '\n';
    return 0;
  }
  const auto& ce = *r.counterexample;
  std::cout << "FAIL " << c.describe() << " trial " << ce.trial << " output " << ce.first_mismatch << " expected "
            << ce.expected[ce.first_mismatch] << " got " << ce.got[ce.first_mismatch] << '\n';
  return kVerifyFailed;
}

int cmd_estimate(const Options& o) {
  const KernelConfig c = kernel_from(o);
  const WeightTensor w = weights_for(o, c);
  const DataflowGraph g = build_kernel(c, w);
  const CostReport r = estimate(g, arch_from(o.arch));
  const std::string json = to_json(r);
  if (!o.out.empty()) write_text(o.out, json + '\n');
  std::cout << json << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  if (o.config.empty()) throw UsageError("sweep needs --config <json>");
  if (!fs::exists(o.config)) throw UsageError("config file '" + o.config + "' not found");
  SweepConfig cfg = load_sweep_config(o.config);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.workers > 0) cfg.workers = o.workers;
  const SweepResult r = run_sweep(cfg);
  write_sweep_outputs(r, cfg.output_dir);
  std::cout << r.rows.size() << " rows written to " << cfg.output_dir.string() << '\n';
  for (const auto& n : r.trend.notices) std::cout << "note: " << n << '\n';
  return r.all_verified ? 0 : kVerifyFailed;
}

int cmd_case_study(const Options& o) {
  CaseStudyConfig cfg;
  if (o.seeds > 0) cfg.seeds = o.seeds;
  if (o.workers > 0) cfg.workers = o.workers;
  cfg.base_seed = o.seed;
  const CaseStudy study = case_study(cfg);
  write_case_study(study, o.out.empty() ? fs::path("case_study") : fs::path(o.out));
  std::cout << study.table;
  return 0;
}

int cmd_emit_flow(const Options& o) {
  const FlowTarget target = o.target == "quartus_like" ? FlowTarget::quartus_like
                            : o.target == "vtr_like"   ? FlowTarget::vtr_like
                                                       : throw UsageError("--target must be quartus_like or vtr_like");
  const fs::path out = o.out.empty() ? fs::path("flow") : fs::path(o.out);
  std::vector<DesignRef> designs;
  if (!o.designs.empty()) {
    if (!fs::is_directory(o.designs)) throw UsageError("'" + o.designs + "' is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(o.designs)) {
      if (e.is_directory() && fs::exists(e.path() / (o.top + ".sv"))) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) designs.push_back({d.filename().string(), o.top, (d / (o.top + ".sv")).string()});
  }
  for (const auto& name : o.presets) {
    Options one = o;
    one.presets = {name};
    const KernelConfig c = kernel_from(one);
    const WeightTensor w = weights_for(one, c);
    const DataflowGraph g = build_kernel(c, w);
    const std::string dir = design_directory(c, o.sparsity, o.seed);
    write_artifacts(emit(g, emission_for(one, c)), out / dir);
    designs.push_back({dir, o.top, dir + "/" + o.top + ".sv"});
  }
  const ArtifactSet scripts = emit_flow_scripts(designs, target);
  write_artifacts(scripts, out);
  std::cout << designs.size() << " designs, manifest " << (out / "flow_manifest.txt").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unrolled DNN kernel generator, verifier and FPGA cost explorer"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--out", o.out, "Output file or directory");
  app.add_option("--config", o.config, "Sweep configuration JSON");
  app.add_option("--preset", o.presets, "Kernel preset name (repeatable for emit-flow)");
  app.add_option("--sparsity", o.sparsity, "Weight sparsity in [0, 1]")->check(CLI::Range(0.0, 1.0));
  app.add_option("--bits", o.bits, "Precision in bits")->check(CLI::Range(1, kMaxPrecisionBits));
  app.add_option("--trials", o.trials, "Random input trials");
  app.add_option("--arch", o.arch, "Architecture preset or JSON file");
  app.add_option("--trace", o.trace, "Write a cycle trace CSV");
  app.add_option("--weights", o.weights_file, "Load weights from a tensor file");
  app.add_option("--inputs", o.inputs_file, "Load inputs from a tensor file");
  app.add_option("--top", o.top, "Top module name");
  app.add_flag("--active-low-reset", o.active_low, "Use an active-low rst_n");
  app.add_flag("--generic", o.generic, "Generic multipliers instead of constant-specialized ones");
  app.add_flag("--no-testbench", o.no_testbench, "Skip the self-checking testbench");
  app.add_option("--workers", o.workers, "Worker threads");
  app.add_option("--seeds", o.seeds, "Seeds per point");
  app.add_option("--target", o.target, "Flow target: quartus_like or vtr_like");
  app.add_option("--designs", o.designs, "Directory of emitted designs for emit-flow");
  app.fallthrough();

  int (*handler)(const Options&) = nullptr;
  auto sub = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    app.add_subcommand(name, help)->callback([&handler, fn] { handler = fn; });
  };
  sub("generate", "Generate tensors, netlist, RTL and testbench", cmd_generate);
  sub("simulate", "Simulate one random input set against the golden model", cmd_simulate);
  sub("verify", "Randomized equivalence check", cmd_verify);
  sub("estimate", "FPGA cost report as JSON", cmd_estimate);
  sub("sweep", "Design-space sweep from a JSON config", cmd_sweep);
  sub("case-study", "LUT-size case study over the study architectures", cmd_case_study);
  sub("emit-flow", "Emit CAD flow scripts", cmd_emit_flow);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  try {
    return handler(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const CostError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kVerifyFailed;
  }
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "unroll/graph.hpp"
#include "unroll/kernel.hpp"
#include "unroll/sim.hpp"

namespace unroll {

class EmitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ResetPolarity { active_high, active_low };

struct EmissionConfig {
  std::string top_module_name = "kernel_top";
  ResetPolarity reset = ResetPolarity::active_high;
  bool include_testbench = false;
  /// Free text copied into the file banner, one comment line per text line.
  std::string header;
};

struct Artifact {
  std::string path;  // relative to the design directory
  std::string content;
};
using ArtifactSet = std::vector<Artifact>;

bool is_legal_identifier(std::string_view name);

/// Flat SystemVerilog module `<top>.sv`: clk, reset, an input bus `x` of
/// input_lanes x b bits and an output bus `y` of output_lanes x lane width.
/// Internal signals are named n<node id>.
ArtifactSet emit(const DataflowGraph& graph, const EmissionConfig& cfg);

/// Self-checking bench `<top>_tb.sv` that drives the kernel schedule and
/// compares every output element at its aligned cycle.
Artifact emit_testbench(const DataflowGraph& graph, const EmissionConfig& cfg, const KernelConfig& kernel,
                        const InputStimulus& stimulus, std::span<const std::int64_t> expected);

enum class FlowTarget { quartus_like, vtr_like };

struct DesignRef {
  std::string name;    // design directory name
  std::string top;     // top module
  std::string source;  // path of the emitted .sv relative to the flow directory
};

/// One script per design plus a manifest listing them in input order.
ArtifactSet emit_flow_scripts(std::span<const DesignRef> designs, FlowTarget target);

/// "<family>-<unroll>-b<bits>-s<sparsity%>-<16 hex digits>", stable per config.
std::string design_directory(const KernelConfig& cfg, double sparsity, std::uint64_t seed);

void write_artifacts(const ArtifactSet& artifacts, const std::filesystem::path& dir);

struct PortDecl {
  std::string name;
  bool is_input = true;
  int width = 1;
};
/// Port declarations recovered from emitted module text.
std::vector<PortDecl> parse_ports(std::string_view sv);

struct BenchCheck {
  int cycle;
  int lane;
  std::int64_t value;
};
struct BenchVectors {
  std::vector<Beat> beats;  // input bus contents per cycle
  std::vector<BenchCheck> checks;
};
BenchVectors parse_testbench(std::string_view tb, std::size_t input_lanes);

/// Executes a bench produced by emit_testbench against the graph with the
/// built-in simulator. Returns true when every check passes.
bool replay_testbench(const DataflowGraph& graph, std::string_view tb, std::string* report = nullptr);

}  // namespace unroll

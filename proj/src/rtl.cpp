#include "unroll/rtl.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace unroll {

namespace {

constexpr std::string_view kKeywords[] = {
    "module", "endmodule", "input", "output", "inout", "logic", "wire", "reg", "assign", "always",
    "always_ff", "always_comb", "begin", "end", "if", "else", "for", "genvar", "generate", "endgenerate",
    "initial", "int", "signed", "unsigned", "posedge", "negedge", "case", "endcase", "function", "task"};

std::string sig(NodeId id) { return "n" + std::to_string(id); }

std::string decl_range(const Node& n) {
  std::string s = n.is_signed ? "logic signed " : "logic ";
  if (n.width > 1 || n.is_signed) s += "[" + std::to_string(n.width - 1) + ":0] ";
  return s;
}

std::string literal(std::int64_t v, int width, bool is_signed) {
  const std::uint64_t mag = v < 0 ? ~static_cast<std::uint64_t>(v) + 1 : static_cast<std::uint64_t>(v);
  std::string s = std::to_string(width) + (is_signed ? "'sd" : "'d") + std::to_string(mag);
  return v < 0 ? "-" + s : s;
}

/// Operand in signed arithmetic context.
std::string operand(const DataflowGraph& g, NodeId id) {
  if (g.node(id).is_signed) return sig(id);
  return "$signed({1'b0, " + sig(id) + "})";
}

std::string reset_expr(const EmissionConfig& cfg) {
  return cfg.reset == ResetPolarity::active_high ? "rst" : "!rst_n";
}

std::string reset_port(const EmissionConfig& cfg) {
  return cfg.reset == ResetPolarity::active_high ? "rst" : "rst_n";
}

void check_top_name(const EmissionConfig& cfg) {
  const std::string& t = cfg.top_module_name;
  if (!is_legal_identifier(t)) throw EmitError("illegal module identifier '" + t + "'");
  static const std::regex internal("n[0-9]+(_sr|_mem)?");
  if (t == "clk" || t == "rst" || t == "rst_n" || t == "x" || t == "y" || t == "errors" ||
      std::regex_match(t, internal)) {
    throw EmitError("module name '" + t + "' collides with a generated signal name");
  }
}

int lane_width_in(const DataflowGraph& g) {
  const auto ins = g.inputs();
  return ins.empty() ? 1 : g.node(ins.front()).width;
}

int lane_width_out(const DataflowGraph& g) {
  const auto outs = g.outputs();
  return outs.empty() ? 1 : g.node(outs.front()).width;
}

void banner(std::ostringstream& os, const std::string& header) {
  std::istringstream hs(header);
  std::string line;
  while (std::getline(hs, line)) os << "// " << line << '\n';
}

}  // namespace

bool is_legal_identifier(std::string_view name) {
  static const std::regex ident("[A-Za-z_][A-Za-z0-9_$]*");
  if (!std::regex_match(name.begin(), name.end(), ident)) return false;
  return std::find(std::begin(kKeywords), std::end(kKeywords), name) == std::end(kKeywords);
}

ArtifactSet emit(const DataflowGraph& g, const EmissionConfig& cfg) {
  check_top_name(cfg);
  try {
    validate(g);
  } catch (const GraphError& e) {
    throw EmitError(std::string("graph fails validation: ") + e.what());
  }
  const auto ins = g.inputs();
  const auto outs = g.outputs();
  const int in_w = lane_width_in(g);
  const int out_w = lane_width_out(g);
  for (NodeId o : outs) {
    if (g.node(o).width != out_w) throw EmitError("output lanes must share one width");
  }
  const std::size_t in_bits = std::max<std::size_t>(1, ins.size() * static_cast<std::size_t>(in_w));
  const std::size_t out_bits = std::max<std::size_t>(1, outs.size() * static_cast<std::size_t>(out_w));
  const std::string rst = reset_expr(cfg);

  std::ostringstream os;
  banner(os, cfg.header);
  os << "// " << g.size() << " nodes, pipeline latency " << g.meta.latency << " cycles\n";
  os << "`timescale 1ns/1ps\n";
  os << "module " << cfg.top_module_name << " (\n"
     << "  input  logic clk,\n"
     << "  input  logic " << reset_port(cfg) << ",\n"
     << "  input  logic [" << in_bits - 1 << ":0] x,\n"
     << "  output logic [" << out_bits - 1 << ":0] y\n"
     << ");\n\n";

  for (NodeId id = 0; id < g.size(); ++id) {
    const Node& n = g.node(id);
    if (static_cast<int>(n.kind) > static_cast<int>(NodeKind::compare)) {
      throw EmitError("no emission rule for node " + std::to_string(id) + " ('" + n.label + "')");
    }
    os << "  " << decl_range(n) << sig(id) << ";\n";
    if (n.kind == NodeKind::shift_register_chain) {
      os << "  " << decl_range(n) << sig(id) << "_sr [0:" << n.param - 1 << "];\n";
    } else if (n.kind == NodeKind::memory) {
      os << "  " << decl_range(n) << sig(id) << "_mem [0:" << n.param - 1 << "];\n";
    }
  }

  // Statements grouped by label in order of first appearance.
  std::map<std::string, std::size_t> first_seen;
  std::vector<NodeId> order(g.size());
  for (NodeId id = 0; id < g.size(); ++id) {
    order[id] = id;
    first_seen.try_emplace(g.node(id).label, id);
  }
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return first_seen[g.node(a).label] < first_seen[g.node(b).label];
  });

  std::string current_label = "\x01";
  for (NodeId id : order) {
    const Node& n = g.node(id);
    if (n.label != current_label) {
      current_label = n.label;
      os << "\n  // ---- " << (n.label.empty() ? "misc" : n.label) << " ----\n";
    }
    const std::string s = sig(id);
    auto op = [&](std::size_t k) { return operand(g, n.operands[k]); };
    auto raw = [&](std::size_t k) { return sig(n.operands[k]); };
    switch (n.kind) {
      case NodeKind::input_port:
        if (n.is_signed) {
          os << "  assign " << s << " = $signed(x[" << n.param * in_w << " +: " << in_w << "]);\n";
        } else {
          os << "  assign " << s << " = x[" << n.param * in_w << " +: " << in_w << "];\n";
        }
        break;
      case NodeKind::output_port:
        os << "  assign " << s << " = " << op(0) << ";\n";
        break;
      case NodeKind::constant:
        os << "  assign " << s << " = " << literal(n.param, n.width, n.is_signed) << ";\n";
        break;
      case NodeKind::shift:
        os << "  assign " << s << " = " << op(0) << " <<< " << n.param << ";\n";
        break;
      case NodeKind::add:
        os << "  assign " << s << " = " << op(0) << " + " << op(1) << ";\n";
        break;
      case NodeKind::sub:
        os << "  assign " << s << " = " << op(0) << " - " << op(1) << ";\n";
        break;
      case NodeKind::and_gate:
        os << "  assign " << s << " = " << raw(0) << " & " << raw(1) << ";\n";
        break;
      case NodeKind::multiply:
        os << "  assign " << s << " = " << op(0) << " * " << op(1) << ";\n";
        break;
      case NodeKind::mux:
        os << "  assign " << s << " = " << raw(0) << " ? " << op(1) << " : " << op(2) << ";\n";
        break;
      case NodeKind::compare:
        os << "  assign " << s << " = (" << op(0) << " == " << op(1) << ");\n";
        break;
      case NodeKind::reg:
        os << "  always_ff @(posedge clk) " << s << " <= " << rst << " ? '0 : " << raw(0) << ";\n";
        break;
      case NodeKind::shift_register_chain:
        os << "  always_ff @(posedge clk) " << s << "_sr[0] <= " << rst << " ? '0 : " << raw(0) << ";\n";
        if (n.param > 1) {
          os << "  for (genvar i = 1; i < " << n.param << "; i++) begin : g_" << s << "\n"
             << "    always_ff @(posedge clk) " << s << "_sr[i] <= " << rst << " ? '0 : " << s << "_sr[i-1];\n"
             << "  end\n";
        }
        os << "  assign " << s << " = " << s << "_sr[" << n.param - 1 << "];\n";
        break;
      case NodeKind::memory:
        // Write-first port: the word written this cycle is read back next cycle.
        os << "  always_ff @(posedge clk) begin\n"
           << "    " << s << "_mem[" << raw(1) << "] <= " << raw(0) << ";\n"
           << "    " << s << " <= " << raw(0) << ";\n"
           << "  end\n";
        break;
      case NodeKind::counter:
        os << "  always_ff @(posedge clk) " << s << " <= " << rst << " ? '0 : (" << s << " == "
           << literal(n.param - 1, n.width, false) << " ? '0 : " << s << " + 1'b1);\n";
        break;
    }
  }

  os << "\n  // ---- output bus ----\n";
  for (std::size_t lane = 0; lane < outs.size(); ++lane) {
    os << "  assign y[" << lane * static_cast<std::size_t>(out_w) << " +: " << out_w << "] = " << sig(outs[lane]) << ";\n";
  }
  if (outs.empty()) os << "  assign y = '0;\n";
  os << "endmodule\n";
  return {Artifact{cfg.top_module_name + ".sv", os.str()}};
}

Artifact emit_testbench(const DataflowGraph& g, const EmissionConfig& cfg, const KernelConfig& kernel,
                        const InputStimulus& stimulus, std::span<const std::int64_t> expected) {
  check_top_name(cfg);
  if (stimulus.shape != kernel.input_shape()) throw EmitError("stimulus shape does not match kernel");
  if (expected.size() != element_count(kernel.output_shape())) {
    throw EmitError("expected output count does not match kernel");
  }
  const auto schedule = make_schedule(kernel, stimulus);
  const auto ins = g.inputs();
  if (!schedule.empty() && schedule.front().size() != ins.size()) {
    throw EmitError("stimulus beats do not match graph input lanes");
  }
  const int in_w = lane_width_in(g);
  const int out_w = lane_width_out(g);
  const bool in_signed = ins.empty() || g.node(ins.front()).is_signed;
  const std::size_t in_bits = std::max<std::size_t>(1, ins.size() * static_cast<std::size_t>(in_w));
  const std::size_t out_bits = std::max<std::size_t>(1, g.outputs().size() * static_cast<std::size_t>(out_w));

  std::map<int, std::vector<std::pair<int, std::int64_t>>> checks;
  int last = static_cast<int>(schedule.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto loc = output_location(kernel, g, i);
    checks[loc.cycle].push_back({loc.lane, expected[i]});
    last = std::max(last, loc.cycle + 1);
  }

  const bool high = cfg.reset == ResetPolarity::active_high;
  const std::string rport = reset_port(cfg);
  std::ostringstream os;
  banner(os, cfg.header);
  os << "`timescale 1ns/1ps\n"
     << "module " << cfg.top_module_name << "_tb;\n"
     << "  logic clk = 1'b0;\n"
     << "  logic " << rport << ";\n"
     << "  logic [" << in_bits - 1 << ":0] x;\n"
     << "  logic [" << out_bits - 1 << ":0] y;\n"
     << "  int errors = 0;\n\n"
     << "  " << cfg.top_module_name << " dut (.clk(clk), ." << rport << "(" << rport << "), .x(x), .y(y));\n\n"
     << "  always #5 clk = ~clk;\n\n"
     << "  initial begin\n"
     << "    " << rport << " = 1'b" << (high ? 1 : 0) << ";\n"
     << "    x = '0;\n"
     << "    repeat (2) @(posedge clk);\n"
     << "    #1 " << rport << " = 1'b" << (high ? 0 : 1) << ";\n";
  for (int c = 0; c < last; ++c) {
    os << "    // cycle " << c << "\n";
    if (c < static_cast<int>(schedule.size())) {
      const Beat& b = schedule[static_cast<std::size_t>(c)];
      for (std::size_t lane = 0; lane < b.size(); ++lane) {
        os << "    x[" << lane * static_cast<std::size_t>(in_w) << " +: " << in_w << "] = "
           << literal(b[lane], in_w, in_signed) << ";\n";
      }
    } else if (c == static_cast<int>(schedule.size())) {
      os << "    x = '0;\n";
    }
    os << "    #1;\n";
    if (auto it = checks.find(c); it != checks.end()) {
      for (const auto& [lane, value] : it->second) {
        const std::string slice = "$signed(y[" + std::to_string(lane * out_w) + " +: " + std::to_string(out_w) + "])";
        os << "    if (" << slice << " !== " << literal(value, out_w, true) << ") begin errors++; "
           << "$display(\"FAIL cycle " << c << " lane " << lane << ": got %0d expected " << value << "\", " << slice
           << "); end\n";
      }
    }
    os << "    @(posedge clk); #1;\n";
  }
  os << "    if (errors == 0) $display(\"PASS\");\n"
     << "    else $display(\"FAIL: %0d mismatches\", errors);\n"
     << "    $finish;\n"
     << "  end\n"
     << "endmodule\n";
  return {cfg.top_module_name + "_tb.sv", os.str()};
}

ArtifactSet emit_flow_scripts(std::span<const DesignRef> designs, FlowTarget target) {
  ArtifactSet out;
  std::ostringstream manifest;
  manifest << "# flow manifest (" << (target == FlowTarget::quartus_like ? "quartus_like" : "vtr_like") << ")\n";
  for (const DesignRef& d : designs) {
    std::ostringstream s;
    std::string path;
    if (target == FlowTarget::quartus_like) {
      path = d.name + ".tcl";
      s << "# Quartus-style compile script for " << d.name << "\n"
        << "project_new " << d.name << " -overwrite\n"
        << "set_global_assignment -name FAMILY \"@FAMILY@\"\n"
        << "set_global_assignment -name DEVICE @DEVICE@\n"
        << "set_global_assignment -name TOP_LEVEL_ENTITY " << d.top << "\n"
        << "set_global_assignment -name SYSTEMVERILOG_FILE " << d.source << "\n"
        << "execute_flow -compile\n"
        << "project_close\n";
    } else {
      path = d.name + "_vtr.sh";
      s << "#!/bin/sh\n"
        << "# VTR-style flow for " << d.name << "\n"
        << "set -e\n"
        << "\"${VTR_ROOT:?set VTR_ROOT}/vtr_flow/scripts/run_vtr_flow.py\" \\\n"
        << "  " << d.source << " \\\n"
        << "  \"${ARCH_XML:-@ARCH_XML@}\" \\\n"
        << "  -top " << d.top << " \\\n"
        << "  -temp_dir " << d.name << "_run \\\n"
        << "  --route_chan_width \"${CHANNEL_WIDTH:-@CHANNEL_WIDTH@}\"\n";
    }
    manifest << path << ' ' << d.top << ' ' << d.source << '\n';
    out.push_back({path, s.str()});
  }
  out.push_back({"flow_manifest.txt", manifest.str()});
  return out;
}

std::string design_directory(const KernelConfig& cfg, double sparsity, std::uint64_t seed) {
  std::ostringstream key;
  key << cfg.describe() << " sparsity=" << sparsity << " seed=" << seed;
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : key.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  std::ostringstream name;
  name << to_string(cfg.family) << '-' << unroll_tag(cfg.unroll) << "-b" << cfg.bits << "-s"
       << static_cast<int>(sparsity * 100 + 0.5) << '-' << hex;
  return name.str();
}

void write_artifacts(const ArtifactSet& artifacts, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& a : artifacts) {
    std::ofstream f(dir / a.path, std::ios::binary);
    if (!f) throw EmitError("cannot write " + (dir / a.path).string());
    f << a.content;
  }
}

std::vector<PortDecl> parse_ports(std::string_view sv) {
  static const std::regex port(R"((input|output)\s+logic\s+(?:\[(\d+):0\]\s+)?(\w+)\s*[,\n)])");
  std::vector<PortDecl> ports;
  const std::string text(sv.substr(0, sv.find(");")));
  for (auto it = std::sregex_iterator(text.begin(), text.end(), port); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    ports.push_back({m[3].str(), m[1].str() == "input", m[2].matched ? std::stoi(m[2].str()) + 1 : 1});
  }
  return ports;
}

BenchVectors parse_testbench(std::string_view tb, std::size_t input_lanes) {
  static const std::regex cycle_re(R"(^\s*// cycle (\d+)$)");
  static const std::regex drive_re(R"(^\s*x\[(\d+) \+: (\d+)\] = (-?)\d+'s?d(\d+);)");
  static const std::regex clear_re(R"(^\s*x = '0;)");
  static const std::regex check_re(R"(^\s*if \(\$signed\(y\[(\d+) \+: (\d+)\]\) !== (-?)\d+'sd(\d+)\))");
  BenchVectors v;
  Beat x(input_lanes, 0);
  int cycle = -1;
  std::istringstream is{std::string(tb)};
  std::string line;
  std::smatch m;
  auto value_of = [](const std::smatch& mm) {
    const auto mag = static_cast<std::int64_t>(std::stoull(mm[4].str()));
    return mm[3].str() == "-" ? -mag : mag;
  };
  auto close_cycle = [&] {
    if (cycle >= 0) v.beats.push_back(x);
  };
  while (std::getline(is, line)) {
    if (std::regex_search(line, m, cycle_re)) {
      close_cycle();
      cycle = std::stoi(m[1].str());
    } else if (std::regex_search(line, m, drive_re)) {
      const std::size_t lane = std::stoul(m[1].str()) / std::stoul(m[2].str());
      if (lane >= x.size()) throw EmitError("bench drives lane outside the input bus");
      x[lane] = value_of(m);
    } else if (std::regex_search(line, m, clear_re)) {
      std::fill(x.begin(), x.end(), 0);
    } else if (std::regex_search(line, m, check_re)) {
      const int lane = std::stoi(m[1].str()) / std::stoi(m[2].str());
      v.checks.push_back({cycle, lane, value_of(m)});
    }
  }
  close_cycle();
  return v;
}

bool replay_testbench(const DataflowGraph& graph, std::string_view tb, std::string* report) {
  const BenchVectors v = parse_testbench(tb, graph.inputs().size());
  Simulator sim(graph);
  std::vector<Beat> outputs;
  for (const Beat& b : v.beats) outputs.push_back(sim.step(b));
  int errors = 0;
  std::ostringstream rs;
  for (const auto& c : v.checks) {
    const std::int64_t got = outputs.at(static_cast<std::size_t>(c.cycle)).at(static_cast<std::size_t>(c.lane));
    if (got != c.value) {
      if (errors++ == 0) {
        rs << "FAIL cycle " << c.cycle << " lane " << c.lane << ": got " << got << " expected " << c.value;
      }
    }
  }
  if (errors == 0) rs << "PASS (" << v.checks.size() << " checks)";
  if (report) *report = rs.str();
  return errors == 0;
}

}  // namespace unroll

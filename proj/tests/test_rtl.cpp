#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "unroll/kernel.hpp"
#include "unroll/rtl.hpp"
#include "unroll/sim.hpp"

using namespace unroll;

namespace {

KernelConfig gemmt_rp(int n, int p, int bits) {
  KernelConfig c;
  c.family = Family::gemmt;
  c.unroll = Unroll::row_parallel;
  c.m = 3;
  c.n = n;
  c.p = p;
  c.bits = bits;
  return c;
}

const Artifact& find(const ArtifactSet& set, const std::string& path) {
  for (const auto& a : set) {
    if (a.path == path) return a;
  }
  FAIL("missing artifact " << path);
  throw std::logic_error("unreachable");
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("emission is deterministic") {
  const auto cfg = gemmt_rp(6, 4, 4);
  const auto w = generate_weights(cfg.weight_shape(), 0.5, 4, 2);
  const auto a = emit(build_kernel(cfg, w), {});
  const auto b = emit(build_kernel(cfg, w), {});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].path == b[i].path);
    CHECK(a[i].content == b[i].content);
  }
  CHECK(a.front().path == "kernel_top.sv");
}

TEST_CASE("port widths follow the throughput contract") {
  const auto cfg = gemmt_rp(32, 32, 8);
  const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.0, 8, 1));
  const auto sv = find(emit(g, {}), "kernel_top.sv").content;
  const auto ports = parse_ports(sv);
  std::map<std::string, PortDecl> by_name;
  for (const auto& p : ports) by_name[p.name] = p;
  REQUIRE(by_name.count("x"));
  REQUIRE(by_name.count("y"));
  const auto c = throughput_contract(g);
  CHECK(by_name["x"].is_input);
  CHECK(by_name["x"].width == static_cast<int>(c.input_port_lanes) * 8);
  CHECK(by_name["x"].width == 256);
  CHECK_FALSE(by_name["y"].is_input);
  CHECK(by_name["y"].width == static_cast<int>(c.output_port_lanes) * g.meta.output_width);
  CHECK(by_name["y"].width == 32 * 21);
  CHECK(by_name["clk"].width == 1);
  CHECK(by_name.count("rst") == 1);
}

TEST_CASE("every internal signal is declared and driven once") {
  for (const auto& [f, u] : kernel_pairs()) {
    KernelConfig cfg;
    cfg.family = f;
    cfg.unroll = u;
    cfg.bits = 4;
    if (cfg.is_gemm()) {
      cfg.n = 4;
      cfg.p = 3;
    } else {
      cfg.iw = 5;
      cfg.ih = f == Family::conv1d ? 1 : 4;
      cfg.ic = 2;
      cfg.fw = 2;
      cfg.fh = f == Family::conv1d ? 1 : 2;
      cfg.oc = 2;
    }
    const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.5, 4, 3));
    const auto sv = emit(g, {}).front().content;
    CAPTURE(cfg.describe());
    for (NodeId id = 0; id < g.size(); ++id) {
      const std::string s = "n" + std::to_string(id);
      const std::regex decl("(^|\\n)  logic (signed )?(\\[\\d+:0\\] )?" + s + ";\\n");
      CHECK(std::distance(std::sregex_iterator(sv.begin(), sv.end(), decl), std::sregex_iterator()) == 1);
      const std::size_t drives = count_of(sv, "assign " + s + " =") + count_of(sv, " " + s + " <=");
      CHECK(drives == 1);
    }
    CHECK(sv.find("module kernel_top (") != std::string::npos);
    CHECK(count_of(sv, "endmodule") == 1);
  }
}

TEST_CASE("minimal graph emits a complete module") {
  DataflowGraph g;
  const NodeId x = g.add(NodeKind::input_port, 3, true, {}, 0, "input");
  g.add(NodeKind::output_port, 3, true, {x}, 0, "output");
  g.meta.output_width = 3;
  g.meta.input_bits = 3;
  const auto sv = emit(g, {}).front().content;
  CHECK(sv.find("input  logic [2:0] x") != std::string::npos);
  CHECK(sv.find("output logic [2:0] y") != std::string::npos);
  CHECK(sv.find("assign y[0 +: 3] = n1;") != std::string::npos);
}

TEST_CASE("reset polarity and header banner") {
  const auto cfg = gemmt_rp(3, 2, 2);
  const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.0, 2, 1));
  EmissionConfig e;
  e.reset = ResetPolarity::active_low;
  e.top_module_name = "tiny";
  e.header = "line one\nline two";
  const auto sv = emit(g, e).front();
  CHECK(sv.path == "tiny.sv");
  CHECK(sv.content.find("rst_n") != std::string::npos);
  CHECK(sv.content.find("// line one\n") != std::string::npos);
  CHECK(sv.content.find("// line two\n") != std::string::npos);
}

TEST_CASE("testbench replays against the simulator") {
  for (double s : {0.0, 0.9}) {
    const auto cfg = gemmt_rp(5, 3, 4);
    const auto w = generate_weights(cfg.weight_shape(), s, 4, 6);
    const auto g = build_kernel(cfg, w);
    const auto x = generate_inputs(cfg.input_shape(), 4, 7);
    const auto expected = golden_outputs(cfg, w, x);
    const auto tb = emit_testbench(g, {}, cfg, x, expected);
    CHECK(tb.path == "kernel_top_tb.sv");
    std::string report;
    CHECK(replay_testbench(g, tb.content, &report));
    const auto v = parse_testbench(tb.content, g.inputs().size());
    CHECK(v.checks.size() == expected.size());

    auto wrong = expected;
    wrong[1] += 1;
    const auto bad = emit_testbench(g, {}, cfg, x, wrong);
    CHECK_FALSE(replay_testbench(g, bad.content, &report));
    CHECK_FALSE(report.empty());
  }
}

TEST_CASE("testbench replay for convolution schedules") {
  KernelConfig cfg;
  cfg.family = Family::conv2d;
  cfg.unroll = Unroll::row_parallel;
  cfg.iw = 5;
  cfg.ih = 4;
  cfg.ic = 2;
  cfg.fw = 3;
  cfg.fh = 2;
  cfg.oc = 2;
  cfg.bits = 2;
  const auto w = generate_weights(cfg.weight_shape(), 0.5, 2, 1);
  const auto g = build_kernel(cfg, w);
  const auto x = generate_inputs(cfg.input_shape(), 2, 2);
  const auto tb = emit_testbench(g, {}, cfg, x, golden_outputs(cfg, w, x));
  CHECK(replay_testbench(g, tb.content));
}

TEST_CASE("flow scripts and manifest") {
  const std::vector<DesignRef> one = {{"d0", "kernel_top", "d0/kernel_top.sv"}};
  const auto q = emit_flow_scripts(one, FlowTarget::quartus_like);
  REQUIRE(q.size() == 2);
  CHECK(q[0].path == "d0.tcl");
  CHECK(q[0].content.find("TOP_LEVEL_ENTITY kernel_top") != std::string::npos);
  CHECK(q[1].path == "flow_manifest.txt");

  std::vector<DesignRef> four;
  for (int i = 0; i < 4; ++i) {
    four.push_back({"d" + std::to_string(i), "top" + std::to_string(i), "d" + std::to_string(i) + "/x.sv"});
  }
  const auto v = emit_flow_scripts(four, FlowTarget::vtr_like);
  REQUIRE(v.size() == 5);
  for (int i = 0; i < 4; ++i) CHECK(v[static_cast<std::size_t>(i)].path == "d" + std::to_string(i) + "_vtr.sh");
  const auto& manifest = v.back().content;
  CHECK(count_of(manifest, "\n") == 5);
  CHECK(manifest.find("d2_vtr.sh top2 d2/x.sv\n") != std::string::npos);

  const auto empty = emit_flow_scripts({}, FlowTarget::vtr_like);
  REQUIRE(empty.size() == 1);
  CHECK(count_of(empty[0].content, "\n") == 1);
}

TEST_CASE("design directory names are stable and distinct") {
  const auto cfg = gemmt_rp(4, 4, 8);
  const auto a = design_directory(cfg, 0.5, 1);
  CHECK(a == design_directory(cfg, 0.5, 1));
  CHECK(a != design_directory(cfg, 0.5, 2));
  CHECK(a.starts_with("gemmt-RP-b8-s50-"));
  CHECK(a.size() == std::string("gemmt-RP-b8-s50-").size() + 16);
}

TEST_CASE("illegal or colliding module names are rejected") {
  const auto cfg = gemmt_rp(2, 2, 2);
  const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.0, 2, 1));
  for (const char* bad : {"", "3abc", "has space", "module", "always_ff", "clk", "x", "y", "n12", "n4_sr"}) {
    EmissionConfig e;
    e.top_module_name = bad;
    CAPTURE(bad);
    CHECK_THROWS_AS(emit(g, e), EmitError);
  }
  EmissionConfig ok;
  ok.top_module_name = "fine_name_2";
  CHECK_NOTHROW(emit(g, ok));
  CHECK(is_legal_identifier("abc_1"));
  CHECK_FALSE(is_legal_identifier("wire"));
}

TEST_CASE("artifacts land on disk") {
  const auto cfg = gemmt_rp(2, 2, 2);
  const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.0, 2, 1));
  const auto dir = std::filesystem::temp_directory_path() / "unroll_test_rtl_artifacts";
  std::filesystem::remove_all(dir);
  const auto set = emit(g, {});
  write_artifacts(set, dir);
  std::ifstream f(dir / "kernel_top.sv");
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == set.front().content);
  std::filesystem::remove_all(dir);
}

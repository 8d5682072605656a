#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "unroll/graph.hpp"
#include "unroll/kernel.hpp"
#include "unroll/tensor.hpp"

using namespace unroll;

namespace {

DataflowGraph small_adder() {
  DataflowGraph g;
  const NodeId a = g.add(NodeKind::input_port, 4, true, {}, 0, "in");
  const NodeId b = g.add(NodeKind::input_port, 4, true, {}, 1, "in");
  const NodeId s = g.add(NodeKind::add, 5, true, {a, b}, 0, "sum");
  g.add(NodeKind::output_port, 5, true, {s}, 0, "out");
  return g;
}

}  // namespace

TEST_CASE("kind names round trip") {
  for (int k = 0; k <= static_cast<int>(NodeKind::compare); ++k) {
    const auto kind = static_cast<NodeKind>(k);
    CHECK(node_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(node_kind_from_string("flux_capacitor"), GraphError);
}

TEST_CASE("validate accepts a well formed graph") {
  const auto g = small_adder();
  CHECK_NOTHROW(validate(g));
  CHECK(g.inputs().size() == 2);
  CHECK(g.outputs().size() == 1);
  CHECK(g.arithmetic_count() == 1);
  CHECK(g.register_bits() == 0);
}

TEST_CASE("validate rejects bad operands and widths") {
  {
    auto g = small_adder();
    g.node(2).operands = {0};
    CHECK_THROWS_AS(validate(g), GraphError);
  }
  {
    auto g = small_adder();
    g.node(2).operands = {0, 99};
    CHECK_THROWS_AS(validate(g), GraphError);
  }
  {
    auto g = small_adder();
    g.node(2).width = 0;
    CHECK_THROWS_AS(validate(g), GraphError);
  }
  {
    auto g = small_adder();
    g.node(2).width = 65;
    CHECK_THROWS_AS(validate(g), GraphError);
  }
}

TEST_CASE("combinational cycle is rejected, cycle through a register is not") {
  DataflowGraph g;
  const NodeId a = g.add(NodeKind::input_port, 8, true, {}, 0);
  const NodeId s = g.add(NodeKind::add, 8, true, {a, a});
  g.node(s).operands[1] = s;
  CHECK_THROWS_AS(validate(g), GraphError);

  DataflowGraph h;
  const NodeId x = h.add(NodeKind::input_port, 8, true, {}, 0);
  const NodeId acc = h.add(NodeKind::add, 8, true, {x, x});
  const NodeId r = h.add(NodeKind::reg, 8, true, {acc});
  h.node(acc).operands[1] = r;
  h.add(NodeKind::output_port, 8, true, {r}, 0);
  CHECK_NOTHROW(validate(h));
  CHECK(h.register_bits() == 8);
}

TEST_CASE("text export round trips every field") {
  const KernelConfig cfg{.family = Family::conv2d,
                         .unroll = Unroll::row_parallel,
                         .iw = 5,
                         .ih = 4,
                         .ic = 2,
                         .fw = 3,
                         .fh = 2,
                         .oc = 2,
                         .bits = 4};
  const auto w = generate_weights(cfg.weight_shape(), 0.5, 4, 9);
  const auto g = pipeline(build_kernel(cfg, w));

  std::stringstream ss;
  export_text(ss, g);
  const auto back = import_text(ss);
  REQUIRE(back.size() == g.size());
  for (NodeId i = 0; i < g.size(); ++i) {
    const Node& a = g.node(i);
    const Node& b = back.node(i);
    CHECK(a.kind == b.kind);
    CHECK(a.width == b.width);
    CHECK(a.is_signed == b.is_signed);
    CHECK(a.operands == b.operands);
    CHECK(a.param == b.param);
    CHECK(a.aux == b.aux);
    CHECK(a.stage == b.stage);
    CHECK(a.window == b.window);
    CHECK(a.label == b.label);
  }
  CHECK(back.meta.multiplier_count == g.meta.multiplier_count);
  CHECK(back.meta.latency == g.meta.latency);
  CHECK(back.meta.warmup_cycles == g.meta.warmup_cycles);
  CHECK(back.meta.output_latency == g.meta.output_latency);
  CHECK(back.meta.inputs_per_cycle == g.meta.inputs_per_cycle);
  CHECK(back.meta.outputs_per_cycle == g.meta.outputs_per_cycle);
  CHECK(back.meta.reduction_length == g.meta.reduction_length);
  CHECK(back.meta.pipelined == g.meta.pipelined);

  std::stringstream again;
  export_text(again, back);
  std::stringstream first;
  export_text(first, g);
  CHECK(again.str() == first.str());
}

TEST_CASE("import rejects malformed text") {
  std::istringstream bad("graph 2 0\nnode 0 input_port w=4\n");
  CHECK_THROWS(import_text(bad));
  std::istringstream unknown("graph 1 0\nnode 0 teleporter w=4 s=1 p=0 a=0 stage=0 \"\"\n");
  CHECK_THROWS(import_text(unknown));
}

TEST_CASE("single stage check sees combinational arithmetic chains") {
  auto g = small_adder();
  const NodeId extra = g.add(NodeKind::add, 6, true, {2, 2});
  g.node(3).operands = {extra};
  std::string why;
  CHECK_FALSE(single_stage_between_registers(g, &why));
  CHECK_FALSE(why.empty());
  CHECK(single_stage_between_registers(pipeline(g)));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "unroll/csd.hpp"
#include "unroll/kernel.hpp"

using namespace unroll;

namespace {

KernelConfig gemm(Family f, Unroll u, int m, int n, int p, int bits = 8) {
  KernelConfig c;
  c.family = f;
  c.unroll = u;
  c.m = m;
  c.n = n;
  c.p = p;
  c.bits = bits;
  return c;
}

KernelConfig conv(Family f, Unroll u, int iw, int ih, int ic, int fw, int fh, int oc, int bits = 8) {
  KernelConfig c;
  c.family = f;
  c.unroll = u;
  c.iw = iw;
  c.ih = ih;
  c.ic = ic;
  c.fw = fw;
  c.fh = fh;
  c.oc = oc;
  c.bits = bits;
  return c;
}

std::size_t count_nonzero(const WeightTensor& w) {
  std::size_t k = 0;
  for (auto v : w.values) k += v != 0;
  return k;
}

bool has_label_prefix(const Node& n, std::string_view prefix) { return n.label.starts_with(prefix); }

NodeId skip_regs(const DataflowGraph& g, NodeId id) {
  while (g.node(id).kind == NodeKind::reg) id = g.node(id).operands[0];
  return id;
}

}  // namespace

TEST_CASE("gemmt row-parallel dense 32x32") {
  const auto cfg = gemm(Family::gemmt, Unroll::row_parallel, 1, 32, 32);
  const auto w = generate_weights(cfg.weight_shape(), 0.0, 8, 1);
  const auto g = build_gemmt(cfg, w);
  CHECK(g.meta.multiplier_count == 1024);
  CHECK(g.inputs().size() == 32);
  CHECK(g.outputs().size() == 32);
  CHECK(g.meta.output_width == 21);
  for (NodeId o : g.outputs()) CHECK(g.node(o).width == 21);
  CHECK(g.meta.outputs_per_cycle == std::vector<int>{1, 32});
}

TEST_CASE("gemmt fully-unrolled duplicates the weights per row") {
  const auto cfg = gemm(Family::gemmt, Unroll::fully_unrolled, 2, 10, 20);
  const auto w = generate_weights(cfg.weight_shape(), 0.5, 8, 4);
  REQUIRE(w.nnz() == 100);
  const auto g = build_gemmt(cfg, w);
  CHECK(g.meta.multiplier_count == 200);
  CHECK(g.meta.duplication_factor == 2);
  CHECK(g.outputs().size() == 40);
}

TEST_CASE("an all-zero weight column yields a constant zero output") {
  const auto cfg = gemm(Family::gemmt, Unroll::row_parallel, 1, 6, 3, 4);
  auto w = generate_weights(cfg.weight_shape(), 0.0, 4, 2);
  for (int i = 0; i < 6; ++i) w.values[static_cast<std::size_t>(i) * 3 + 1] = 0;
  const auto g = build_gemmt(cfg, w);
  const NodeId src = skip_regs(g, g.node(g.outputs()[1]).operands[0]);
  CHECK(g.node(src).kind == NodeKind::constant);
  CHECK(g.node(src).param == 0);
  CHECK(g.meta.multiplier_count == 12);
}

TEST_CASE("gemms 16x16 pruning keeps the systolic registers") {
  const auto cfg = gemm(Family::gemms, Unroll::row_parallel, 1, 16, 16);
  const auto dense_w = generate_weights(cfg.weight_shape(), 0.0, 8, 3);
  const auto sparse_w = generate_weights(cfg.weight_shape(), 0.9, 8, 3);
  const auto dense = build_gemms(cfg, dense_w);
  const auto sparse = build_gemms(cfg, sparse_w);
  CHECK(dense.meta.multiplier_count == 256);
  CHECK(sparse.meta.multiplier_count == 26);
  // x forwarding between columns survives pruning.
  CHECK(sparse.register_bits() >= 16u * 15u * 8u);
  CHECK(sparse.register_bits() < dense.register_bits());
}

TEST_CASE("gemms PE register count matches the structural oracle") {
  // Per PE: a forwarding register for x except in the last column, and one
  // register behind every adder. A PE has d-1 CSD adders for a weight with d
  // digits plus the accumulating adder below row 0; its partial-sum register
  // doubles as the last adder's register and stays when the PE is pruned.
  // Skew chains hold n(n-1)/2 stages.
  for (double s : {0.0, 0.3, 0.5, 0.9, 1.0}) {
    for (int n : {1, 3, 5, 8}) {
      const int p = n + 1;
      const auto cfg = gemm(Family::gemms, Unroll::row_parallel, 1, n, p, 6);
      const auto w = generate_weights(cfg.weight_shape(), s, 6, 17 + static_cast<std::uint64_t>(n));
      const auto g = build_gemms(cfg, w);
      std::size_t expected = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) {
          const std::size_t d = csd_digits(w.values[static_cast<std::size_t>(i * p + j)]).size();
          const std::size_t adders = (d > 0 ? d - 1 : 0) + (i > 0 && d > 0 ? 1 : 0);
          expected += (j + 1 < p ? 1 : 0) + std::max<std::size_t>(adders, 1);
        }
      }
      std::size_t pe_regs = 0;
      std::int64_t chain_stages = 0;
      for (const Node& node : g.nodes()) {
        if (node.kind == NodeKind::reg && has_label_prefix(node, "pe row")) ++pe_regs;
        if (node.kind == NodeKind::shift_register_chain) chain_stages += node.param;
      }
      CAPTURE(s);
      CAPTURE(n);
      CHECK(pe_regs == expected);
      CHECK(chain_stages == static_cast<std::int64_t>(n) * (n - 1) / 2);
    }
  }
}

TEST_CASE("conv shapes and duplication") {
  SUBCASE("conv2d pixelwise small preset shape") {
    const auto cfg = conv(Family::conv2d, Unroll::pixelwise, 25, 25, 32, 3, 3, 64, 2);
    CHECK(cfg.output_shape() == std::vector<int>{23, 23, 64});
    const auto w = generate_weights(cfg.weight_shape(), 0.5, 2, 1);
    const auto g = build_conv(cfg, w);
    CHECK(g.outputs().size() == 64);
    CHECK(g.meta.duplication_factor == 1);
    CHECK(g.meta.multiplier_count == w.nnz());
    CHECK(g.count(NodeKind::memory) == 3 * 3 * 32);
    CHECK(g.count(NodeKind::counter) == 1);
  }
  SUBCASE("conv2d fully-unrolled 8x8x4") {
    const auto cfg = conv(Family::conv2d, Unroll::fully_unrolled, 8, 8, 4, 3, 3, 4, 4);
    const auto w = generate_weights(cfg.weight_shape(), 0.5, 4, 2);
    const auto g = build_conv(cfg, w);
    CHECK(cfg.output_shape() == std::vector<int>{6, 6, 4});
    CHECK(g.meta.duplication_factor == 36);
    CHECK(g.meta.multiplier_count == 36 * w.nnz());
  }
  SUBCASE("conv1d output width") {
    const auto cfg = conv(Family::conv1d, Unroll::fully_unrolled, 32, 1, 2, 3, 1, 2, 4);
    CHECK(cfg.ow() == 30);
    const auto g = build_conv(cfg, generate_weights(cfg.weight_shape(), 0.0, 4, 3));
    CHECK(g.meta.duplication_factor == 30);
    CHECK(g.outputs().size() == 60);
  }
  SUBCASE("conv2d row-parallel warmup") {
    const auto cfg = conv(Family::conv2d, Unroll::row_parallel, 6, 5, 2, 3, 3, 2, 4);
    const auto g = build_conv(cfg, generate_weights(cfg.weight_shape(), 0.0, 4, 3));
    CHECK(g.meta.warmup_cycles == 2);
    CHECK(g.inputs().size() == 12);
  }
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(gemm(Family::gemms, Unroll::fully_unrolled, 2, 2, 2).validate(), ParameterError);
  CHECK_THROWS_AS(gemm(Family::gemmt, Unroll::pixelwise, 1, 2, 2).validate(), ParameterError);
  CHECK_THROWS_AS(gemm(Family::gemmt, Unroll::row_parallel, 1, 0, 2).validate(), ParameterError);
  CHECK_THROWS_AS(conv(Family::conv1d, Unroll::pixelwise, 8, 2, 1, 3, 1, 1).validate(), ParameterError);
  CHECK_THROWS_AS(conv(Family::conv2d, Unroll::pixelwise, 2, 2, 1, 3, 3, 1).validate(), ParameterError);
  CHECK_THROWS_AS(conv(Family::conv1d, Unroll::row_parallel, 8, 1, 1, 3, 1, 1).validate(), ParameterError);
  auto bad_bits = gemm(Family::gemmt, Unroll::row_parallel, 1, 2, 2, 17);
  CHECK_THROWS_AS(bad_bits.validate(), ParameterError);

  const auto cfg = gemm(Family::gemmt, Unroll::row_parallel, 1, 4, 4);
  const auto wrong_shape = generate_weights(std::vector<int>{4, 5}, 0.0, 8, 1);
  CHECK_THROWS_AS(build_gemmt(cfg, wrong_shape), ParameterError);
  const auto wrong_bits = generate_weights(std::vector<int>{4, 4}, 0.0, 4, 1);
  CHECK_THROWS_AS(build_gemmt(cfg, wrong_bits), ParameterError);
}

TEST_CASE("specialized constant multipliers") {
  {
    const auto g = specialize_multiplier(0, 8, 8);
    CHECK(g.arithmetic_count() == 0);
    CHECK(g.count(NodeKind::shift) == 0);
    const NodeId src = g.node(g.outputs()[0]).operands[0];
    CHECK(g.node(src).kind == NodeKind::constant);
  }
  {
    const auto g = specialize_multiplier(4, 8, 8);
    CHECK(g.arithmetic_count() == 0);
    CHECK(g.count(NodeKind::shift) == 1);
    const NodeId src = g.node(g.outputs()[0]).operands[0];
    CHECK(g.node(src).kind == NodeKind::shift);
    CHECK(g.node(src).param == 2);
  }
  {
    const auto g = specialize_multiplier(7, 8, 8);
    CHECK(g.count(NodeKind::shift) == 1);
    CHECK(g.count(NodeKind::sub) == 1);
    CHECK(g.count(NodeKind::add) == 0);
  }
  for (std::int64_t w = -128; w <= 127; ++w) {
    const auto g = specialize_multiplier(w, 8, 8);
    const std::size_t digits = csd_digits(w).size();
    CAPTURE(w);
    if (digits == 0) {
      CHECK(g.arithmetic_count() == 0);
    } else {
      // One extra subtractor only when the whole sum ends up negated.
      CHECK(g.arithmetic_count() >= digits - 1);
      CHECK(g.arithmetic_count() <= digits);
    }
  }
  CHECK_THROWS_AS(specialize_multiplier(128, 8, 8), ParameterError);
}

TEST_CASE("throughput contracts follow the kernel table") {
  struct Row {
    KernelConfig cfg;
    ThroughputContract want;
  };
  const std::vector<Row> rows = {
      {gemm(Family::gemmt, Unroll::row_parallel, 1, 5, 7), {{1, 5}, {1, 7}, 1, 5, 7}},
      {gemm(Family::gemmt, Unroll::fully_unrolled, 3, 5, 7), {{3, 5}, {3, 7}, 3, 15, 21}},
      {gemm(Family::gemms, Unroll::row_parallel, 1, 5, 7), {{1, 5}, {1, 7}, 1, 5, 7}},
      {conv(Family::conv1d, Unroll::pixelwise, 9, 1, 2, 3, 1, 4), {{3, 1, 2}, {1, 1, 4}, 1, 6, 4}},
      {conv(Family::conv1d, Unroll::fully_unrolled, 9, 1, 2, 3, 1, 4), {{9, 1, 2}, {7, 1, 4}, 7, 18, 28}},
      {conv(Family::conv2d, Unroll::pixelwise, 6, 5, 2, 3, 2, 3), {{3, 2, 2}, {1, 1, 3}, 1, 12, 3}},
      {conv(Family::conv2d, Unroll::row_parallel, 6, 5, 2, 3, 2, 3), {{6, 2, 2}, {4, 1, 3}, 4, 12, 12}},
      {conv(Family::conv2d, Unroll::fully_unrolled, 6, 5, 2, 3, 2, 3), {{6, 5, 2}, {4, 4, 3}, 16, 60, 48}},
  };
  for (const auto& r : rows) {
    const auto w = generate_weights(r.cfg.weight_shape(), 0.5, r.cfg.bits, 5);
    CAPTURE(r.cfg.describe());
    CHECK(throughput_contract(build_kernel(r.cfg, w)) == r.want);
  }
}

TEST_CASE("generic node counts do not depend on weight values") {
  for (const auto& [f, u] : kernel_pairs()) {
    KernelConfig cfg = f == Family::gemmt || f == Family::gemms ? gemm(f, u, 2, 4, 3, 4)
                                                                : conv(f, u, 5, f == Family::conv1d ? 1 : 4, 2, 2,
                                                                       f == Family::conv1d ? 1 : 2, 2, 4);
    cfg.specialize = false;
    const auto a = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.0, 4, 1));
    const auto b = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.9, 4, 2));
    CAPTURE(cfg.describe());
    CHECK(a.size() == b.size());
    for (int k = 0; k <= static_cast<int>(NodeKind::compare); ++k) {
      CHECK(a.count(static_cast<NodeKind>(k)) == b.count(static_cast<NodeKind>(k)));
    }
  }
}

TEST_CASE("arithmetic count is non-increasing in sparsity") {
  for (const auto& [f, u] : kernel_pairs()) {
    const KernelConfig cfg = f == Family::gemmt || f == Family::gemms
                                 ? gemm(f, u, 2, 8, 6)
                                 : conv(f, u, 7, f == Family::conv1d ? 1 : 5, 3, 3, f == Family::conv1d ? 1 : 3, 3);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double s : sparsity_grid()) {
      const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), s, 8, 21));
      CAPTURE(cfg.describe());
      CAPTURE(s);
      CHECK(g.arithmetic_count() <= prev);
      prev = g.arithmetic_count();
    }
  }
}

TEST_CASE("multiplier count equals duplication times nnz on random shapes") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto [f, u] = kernel_pairs()[static_cast<std::size_t>(trial) % 8];
    auto dim = [&](int hi) { return 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(hi)); };
    KernelConfig cfg;
    if (f == Family::gemmt || f == Family::gemms) {
      cfg = gemm(f, u, dim(6), dim(12), dim(12));
    } else {
      const int fw = dim(3), fh = f == Family::conv1d ? 1 : dim(3);
      cfg = conv(f, u, fw + dim(6) - 1, f == Family::conv1d ? 1 : fh + dim(6) - 1, dim(4), fw, fh, dim(4));
    }
    const double s = static_cast<double>(rng() % 10) / 10.0;
    const auto w = generate_weights(cfg.weight_shape(), s, 8, rng());
    const auto g = build_kernel(cfg, w);
    CAPTURE(cfg.describe());
    CHECK(g.meta.multiplier_count == g.meta.duplication_factor * count_nonzero(w));
    CHECK(single_stage_between_registers(g));
  }
}

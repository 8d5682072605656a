#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "unroll/golden.hpp"
#include "unroll/kernel.hpp"
#include "unroll/sim.hpp"

using namespace unroll;

namespace {

std::vector<std::int64_t> loop_gemm(const KernelConfig& c, const InputStimulus& x, const WeightTensor& w) {
  std::vector<std::int64_t> y(static_cast<std::size_t>(c.m * c.p), 0);
  for (int i = 0; i < c.m; ++i)
    for (int j = 0; j < c.p; ++j)
      for (int k = 0; k < c.n; ++k)
        y[static_cast<std::size_t>(i * c.p + j)] +=
            x.values[static_cast<std::size_t>(i * c.n + k)] * w.values[static_cast<std::size_t>(k * c.p + j)];
  return y;
}

std::vector<std::int64_t> loop_conv(const KernelConfig& c, const InputStimulus& x, const WeightTensor& w) {
  std::vector<std::int64_t> y(static_cast<std::size_t>(c.ow() * c.oh() * c.oc), 0);
  for (int ox = 0; ox < c.ow(); ++ox)
    for (int oy = 0; oy < c.oh(); ++oy)
      for (int o = 0; o < c.oc; ++o) {
        std::int64_t acc = 0;
        for (int fx = 0; fx < c.fw; ++fx)
          for (int fy = 0; fy < c.fh; ++fy)
            for (int ch = 0; ch < c.ic; ++ch) {
              const auto xi = static_cast<std::size_t>(((ox + fx) * c.ih + (oy + fy)) * c.ic + ch);
              const auto wi = static_cast<std::size_t>(((fx * c.fh + fy) * c.ic + ch) * c.oc + o);
              acc += x.values[xi] * w.values[wi];
            }
        y[static_cast<std::size_t>((ox * c.oh() + oy) * c.oc + o)] = acc;
      }
  return y;
}

std::vector<std::int64_t> oracle(const KernelConfig& c, const InputStimulus& x, const WeightTensor& w) {
  return c.is_gemm() ? loop_gemm(c, x, w) : loop_conv(c, x, w);
}

KernelConfig sample(Family f, Unroll u, int bits) {
  KernelConfig c;
  c.family = f;
  c.unroll = u;
  c.bits = bits;
  if (c.is_gemm()) {
    c.m = 3;
    c.n = 6;
    c.p = 4;
  } else {
    c.iw = 6;
    c.ih = f == Family::conv1d ? 1 : 5;
    c.ic = 2;
    c.fw = 3;
    c.fh = f == Family::conv1d ? 1 : 2;
    c.oc = 3;
  }
  return c;
}

}  // namespace

TEST_CASE("golden models agree with loop oracles") {
  for (const auto& [f, u] : kernel_pairs()) {
    const auto cfg = sample(f, u, 8);
    const auto w = generate_weights(cfg.weight_shape(), 0.3, 8, 5);
    const auto x = generate_inputs(cfg.input_shape(), 8, 6);
    CHECK(golden_outputs(cfg, w, x) == oracle(cfg, x, w));
  }
}

TEST_CASE("simulation matches the loop oracle for every kernel pair") {
  for (const auto& [f, u] : kernel_pairs()) {
    for (int bits : {1, 2, 4, 8, 16}) {
      for (double s : {0.0, 0.5, 0.9}) {
        const auto cfg = sample(f, u, bits);
        const auto w = generate_weights(cfg.weight_shape(), s, bits, 11);
        const auto x = generate_inputs(cfg.input_shape(), bits, 12);
        const auto g = build_kernel(cfg, w);
        const auto got = collect_outputs(cfg, g, run(g, make_schedule(cfg, x)));
        CAPTURE(cfg.describe());
        CAPTURE(s);
        CHECK(got == oracle(cfg, x, w));
      }
    }
  }
}

TEST_CASE("generic multipliers simulate exactly too") {
  for (const auto& [f, u] : kernel_pairs()) {
    auto cfg = sample(f, u, 4);
    cfg.specialize = false;
    const auto w = generate_weights(cfg.weight_shape(), 0.5, 4, 2);
    const auto r = check_equivalence(cfg, w, 3, 9);
    CAPTURE(cfg.describe());
    CHECK(r.equivalent);
    CHECK(r.trials_run == 3);
  }
}

TEST_CASE("identity weights pass inputs through") {
  KernelConfig cfg;
  cfg.family = Family::gemms;
  cfg.n = cfg.p = 4;
  cfg.m = 5;
  cfg.bits = 4;
  auto w = generate_weights(cfg.weight_shape(), 0.0, 4, 1);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) w.values[static_cast<std::size_t>(i * 4 + j)] = i == j;
  const auto x = generate_inputs(cfg.input_shape(), 4, 3);
  const auto g = build_gemms(cfg, w);
  CHECK(collect_outputs(cfg, g, run(g, make_schedule(cfg, x))) == x.values);

  cfg.family = Family::gemmt;
  const auto t = build_gemmt(cfg, w);
  CHECK(collect_outputs(cfg, t, run(t, make_schedule(cfg, x))) == x.values);
}

TEST_CASE("observed latency equals the metadata latency") {
  for (const auto& [f, u] : kernel_pairs()) {
    if (u == Unroll::pixelwise) continue;  // the line buffer is addressed by a free-running counter
    const auto cfg = sample(f, u, 8);
    auto w = generate_weights(cfg.weight_shape(), 0.0, 8, 4);
    const auto g = build_kernel(cfg, w);
    Beat pulse(g.inputs().size(), 0);
    pulse[0] = 1;
    const int seen = observed_latency(g, pulse);
    int shallowest = g.meta.output_latency.front();
    for (int l : g.meta.output_latency) shallowest = std::min(shallowest, l);
    CAPTURE(cfg.describe());
    CHECK(seen == shallowest);
  }
}

TEST_CASE("fully sparse kernels are trivially equivalent") {
  for (const auto& [f, u] : kernel_pairs()) {
    const auto cfg = sample(f, u, 4);
    const auto w = generate_weights(cfg.weight_shape(), 1.0, 4, 1);
    const auto g = build_kernel(cfg, w);
    CHECK(g.meta.multiplier_count == 0);
    CHECK(check_equivalence(g, cfg, w, 2, 3).equivalent);
  }
}

TEST_CASE("systolic 4x4 over 20 trials") {
  KernelConfig cfg;
  cfg.family = Family::gemms;
  cfg.m = 4;
  cfg.n = cfg.p = 4;
  for (double s : {0.0, 0.5, 0.9}) {
    const auto w = generate_weights(cfg.weight_shape(), s, 8, 77);
    const auto r = check_equivalence(cfg, w, 20, 5);
    CHECK(r.equivalent);
    CHECK(r.trials_run == 20);
  }
}

TEST_CASE("a mutated graph is caught") {
  SUBCASE("adder turned into subtractor") {
    const auto cfg = sample(Family::gemmt, Unroll::row_parallel, 8);
    const auto w = generate_weights(cfg.weight_shape(), 0.0, 8, 4);
    auto g = build_kernel(cfg, w);
    for (NodeId i = 0; i < g.size(); ++i) {
      if (g.node(i).kind == NodeKind::add) {
        g.node(i).kind = NodeKind::sub;
        break;
      }
    }
    const auto r = check_equivalence(g, cfg, w, 5, 1);
    CHECK_FALSE(r.equivalent);
    REQUIRE(r.counterexample.has_value());
    CHECK(r.counterexample->expected != r.counterexample->got);
    CHECK(r.counterexample->expected[r.counterexample->first_mismatch] !=
          r.counterexample->got[r.counterexample->first_mismatch]);
  }
  SUBCASE("generic weight constant with a flipped bit") {
    auto cfg = sample(Family::conv2d, Unroll::fully_unrolled, 8);
    cfg.specialize = false;
    const auto w = generate_weights(cfg.weight_shape(), 0.0, 8, 4);
    auto g = build_kernel(cfg, w);
    for (NodeId i = 0; i < g.size(); ++i) {
      if (g.node(i).kind == NodeKind::constant && g.node(i).width == 8) {
        g.node(i).param ^= 1;
        break;
      }
    }
    CHECK_FALSE(check_equivalence(g, cfg, w, 5, 1).equivalent);
  }
}

TEST_CASE("row-parallel streams one output row per cycle") {
  auto cfg = sample(Family::gemmt, Unroll::row_parallel, 4);
  cfg.m = 8;
  const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.0, 4, 1));
  for (int r = 0; r < cfg.m; ++r) {
    for (int j = 0; j < cfg.p; ++j) {
      const auto loc = output_location(cfg, g, static_cast<std::size_t>(r * cfg.p + j));
      CHECK(loc.cycle == g.meta.latency + r);
      CHECK(loc.lane == j);
    }
  }
  const auto x = generate_inputs(cfg.input_shape(), 4, 2);
  const auto trace = run(g, make_schedule(cfg, x));
  CHECK(trace.cycles == cfg.m + g.meta.latency + 1);
}

TEST_CASE("trace CSV lists every port per cycle") {
  const auto cfg = sample(Family::gemmt, Unroll::row_parallel, 2);
  const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.0, 2, 1));
  const auto trace = run(g, make_schedule(cfg, generate_inputs(cfg.input_shape(), 2, 1)));
  std::ostringstream os;
  write_trace_csv(os, trace);
  const std::string text = os.str();
  CHECK(text.starts_with("cycle,port,value\n"));
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == 1 + static_cast<std::size_t>(trace.cycles) * (g.inputs().size() + g.outputs().size()));
  CHECK(text.find("\n0,x0,") != std::string::npos);
  CHECK(text.find(",y3,") != std::string::npos);
}

TEST_CASE("simulator argument errors") {
  const auto cfg = sample(Family::gemmt, Unroll::row_parallel, 2);
  const auto g = build_kernel(cfg, generate_weights(cfg.weight_shape(), 0.0, 2, 1));
  Simulator sim(g);
  CHECK_THROWS_AS(sim.step(Beat(2, 0)), SimError);
  CHECK_THROWS_AS(make_schedule(cfg, generate_inputs(std::vector<int>{2, 2}, 2, 1)), SimError);
  CHECK_THROWS_AS(check_equivalence(g, cfg, generate_weights(cfg.weight_shape(), 0.0, 2, 1), 0, 1),
                  ParameterError);
}

#include "unroll/sim.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "unroll/golden.hpp"
#include "unroll/rng.hpp"

namespace unroll {

namespace {

bool fits(std::int64_t v, int width, bool is_signed) {
  if (width >= 64) return is_signed || v >= 0;
  if (!is_signed) return v >= 0 && v < (std::int64_t{1} << width);
  const std::int64_t half = std::int64_t{1} << (width - 1);
  return v >= -half && v < half;
}

std::string describe(const DataflowGraph& g, NodeId id) {
  const Node& n = g.node(id);
  return "node " + std::to_string(id) + " (" + std::string(to_string(n.kind)) + ", '" + n.label + "')";
}

}  // namespace

Simulator::Simulator(const DataflowGraph& graph) : g_(graph) {
  try {
    validate(graph);
  } catch (const GraphError& e) {
    throw SimError(std::string("cannot simulate: ") + e.what());
  }
  order_ = graph.topological_order();
  inputs_ = graph.inputs();
  outputs_ = graph.outputs();
  value_.assign(graph.size(), 0);
  state_.assign(graph.size(), 0);
  storage_.resize(graph.size());
  head_.assign(graph.size(), 0);
  for (NodeId i = 0; i < graph.size(); ++i) {
    const Node& n = graph.node(i);
    if (n.kind == NodeKind::shift_register_chain || n.kind == NodeKind::memory) {
      storage_[i].assign(static_cast<std::size_t>(n.param), 0);
    }
  }
}

Beat Simulator::step(const Beat& in) {
  if (in.size() != inputs_.size()) {
    throw SimError("beat has " + std::to_string(in.size()) + " values, graph has " +
                   std::to_string(inputs_.size()) + " input lanes");
  }
  for (std::size_t lane = 0; lane < inputs_.size(); ++lane) value_[inputs_[lane]] = in[lane];

  for (NodeId id : order_) {
    const Node& n = g_.node(id);
    auto op = [&](std::size_t k) { return value_[n.operands[k]]; };
    std::int64_t v = 0;
    switch (n.kind) {
      case NodeKind::input_port: v = value_[id]; break;
      case NodeKind::constant: v = n.param; break;
      case NodeKind::shift: v = op(0) * (std::int64_t{1} << n.param); break;
      case NodeKind::add: v = op(0) + op(1); break;
      case NodeKind::sub: v = op(0) - op(1); break;
      case NodeKind::and_gate: v = op(0) & op(1); break;
      case NodeKind::multiply: v = op(0) * op(1); break;
      case NodeKind::reg:
      case NodeKind::memory:
      case NodeKind::counter: v = state_[id]; break;
      case NodeKind::shift_register_chain: v = storage_[id][head_[id]]; break;
      case NodeKind::mux: v = op(0) != 0 ? op(1) : op(2); break;
      case NodeKind::compare: v = op(0) == op(1) ? 1 : 0; break;
      case NodeKind::output_port: v = op(0); break;
      default: throw SimError("no simulation rule for " + describe(g_, id));
    }
    if (!fits(v, n.width, n.is_signed)) {
      throw SimError("value " + std::to_string(v) + " overflows " + std::to_string(n.width) + "-bit " + describe(g_, id));
    }
    value_[id] = v;
  }

  Beat out(outputs_.size());
  for (std::size_t lane = 0; lane < outputs_.size(); ++lane) out[lane] = value_[outputs_[lane]];

  for (NodeId id = 0; id < g_.size(); ++id) {
    const Node& n = g_.node(id);
    switch (n.kind) {
      case NodeKind::reg: state_[id] = value_[n.operands[0]]; break;
      case NodeKind::shift_register_chain: {
        // Ring buffer: head holds the oldest entry.
        storage_[id][head_[id]] = value_[n.operands[0]];
        head_[id] = (head_[id] + 1) % storage_[id].size();
        break;
      }
      case NodeKind::memory: {
        const std::int64_t addr = value_[n.operands[1]];
        if (addr < 0 || addr >= n.param) throw SimError("address out of range at " + describe(g_, id));
        storage_[id][static_cast<std::size_t>(addr)] = value_[n.operands[0]];
        state_[id] = storage_[id][static_cast<std::size_t>(addr)];  // write-first read port
        break;
      }
      case NodeKind::counter: state_[id] = (state_[id] + 1) % n.param; break;
      default: break;
    }
  }
  return out;
}

SimTrace run(const DataflowGraph& graph, std::span<const Beat> schedule, int extra_cycles) {
  Simulator sim(graph);
  SimTrace trace;
  trace.latency = graph.meta.latency;
  const int drain = extra_cycles >= 0 ? extra_cycles : graph.meta.latency + 1;
  const int cycles = static_cast<int>(schedule.size()) + drain;
  const Beat idle(sim.input_lanes(), 0);
  for (int c = 0; c < cycles; ++c) {
    const Beat& in = c < static_cast<int>(schedule.size()) ? schedule[static_cast<std::size_t>(c)] : idle;
    trace.inputs.push_back(in);
    trace.outputs.push_back(sim.step(in));
  }
  trace.cycles = cycles;
  return trace;
}

int observed_latency(const DataflowGraph& graph, const Beat& pulse, int max_cycles) {
  Simulator quiet(graph);
  Simulator driven(graph);
  const Beat zero(quiet.input_lanes(), 0);
  for (int c = 0; c < max_cycles; ++c) {
    const Beat a = quiet.step(zero);
    const Beat b = driven.step(c == 0 ? pulse : zero);
    if (a != b) return c;
  }
  return -1;
}

std::vector<Beat> make_schedule(const KernelConfig& cfg, const InputStimulus& x) {
  if (x.shape != cfg.input_shape()) throw SimError("stimulus shape does not match kernel configuration");
  std::vector<Beat> beats;
  if (cfg.is_gemm()) {
    if (cfg.unroll == Unroll::fully_unrolled) return {x.values};
    for (int r = 0; r < cfg.m; ++r) {
      const auto first = x.values.begin() + static_cast<std::ptrdiff_t>(r) * cfg.n;
      beats.emplace_back(first, first + cfg.n);
    }
    return beats;
  }
  auto at = [&](int w, int h, int c) {
    return x.values[(static_cast<std::size_t>(w) * cfg.ih + h) * cfg.ic + c];
  };
  switch (cfg.unroll) {
    case Unroll::pixelwise:
      for (int ox = 0; ox < cfg.ow(); ++ox) {
        for (int oy = 0; oy < cfg.oh(); ++oy) {
          Beat b;
          for (int fx = 0; fx < cfg.fw; ++fx) {
            for (int fy = 0; fy < cfg.fh; ++fy) {
              for (int c = 0; c < cfg.ic; ++c) b.push_back(at(ox + fx, oy + fy, c));
            }
          }
          beats.push_back(std::move(b));
        }
      }
      break;
    case Unroll::row_parallel:
      for (int h = 0; h < cfg.ih; ++h) {
        Beat b;
        for (int w = 0; w < cfg.iw; ++w) {
          for (int c = 0; c < cfg.ic; ++c) b.push_back(at(w, h, c));
        }
        beats.push_back(std::move(b));
      }
      break;
    case Unroll::fully_unrolled:
      beats.push_back(x.values);
      break;
  }
  return beats;
}

OutputLocation output_location(const KernelConfig& cfg, const DataflowGraph& graph, std::size_t idx) {
  const auto& lat = graph.meta.output_latency;
  auto at = [&](int lane) {
    if (lane < 0 || static_cast<std::size_t>(lane) >= lat.size()) throw SimError("output lane out of range");
    return lat[static_cast<std::size_t>(lane)];
  };
  const int i = static_cast<int>(idx);
  if (cfg.is_gemm()) {
    const int r = i / cfg.p, j = i % cfg.p;
    if (cfg.unroll == Unroll::fully_unrolled) return {at(i), i};
    return {r + at(j), j};
  }
  const int o = i % cfg.oc;
  const int pixel = i / cfg.oc;  // ox * oh + oy
  const int ox = pixel / cfg.oh(), oy = pixel % cfg.oh();
  switch (cfg.unroll) {
    case Unroll::pixelwise: return {pixel + at(o), o};
    case Unroll::row_parallel: {
      const int lane = ox * cfg.oc + o;
      return {oy + graph.meta.warmup_cycles + at(lane), lane};
    }
    case Unroll::fully_unrolled: return {at(i), i};
  }
  throw SimError("unreachable unrolling factor");
}

std::vector<std::int64_t> collect_outputs(const KernelConfig& cfg, const DataflowGraph& graph,
                                          const SimTrace& trace) {
  const std::size_t n = element_count(cfg.output_shape());
  std::vector<std::int64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto loc = output_location(cfg, graph, i);
    if (loc.cycle >= trace.cycles) throw SimError("trace too short for output alignment");
    out[i] = trace.outputs[static_cast<std::size_t>(loc.cycle)][static_cast<std::size_t>(loc.lane)];
  }
  return out;
}

std::vector<std::int64_t> golden_outputs(const KernelConfig& cfg, const WeightTensor& w, const InputStimulus& x) {
  if (cfg.is_gemm()) {
    return flatten(golden_gemm(as_matrix(x.values, cfg.m, cfg.n), as_matrix(w.values, cfg.n, cfg.p)));
  }
  return golden_conv(x.values, w.values, {cfg.iw, cfg.ih, cfg.ic, cfg.fw, cfg.fh, cfg.oc});
}

EquivalenceResult check_equivalence(const KernelConfig& cfg, const WeightTensor& weights, int n_trials,
                                    std::uint64_t seed) {
  return check_equivalence(build_kernel(cfg, weights), cfg, weights, n_trials, seed);
}

EquivalenceResult check_equivalence(const DataflowGraph& graph, const KernelConfig& cfg,
                                    const WeightTensor& weights, int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw ParameterError("n_trials must be >= 1");
  EquivalenceResult result;
  Rng trial_seeds(seed, Stream::trial);
  for (int t = 0; t < n_trials; ++t) {
    const InputStimulus x = generate_inputs(cfg.input_shape(), cfg.bits, trial_seeds.next());
    const auto expected = golden_outputs(cfg, weights, x);
    const auto schedule = make_schedule(cfg, x);
    const auto got = collect_outputs(cfg, graph, run(graph, schedule));
    ++result.trials_run;
    const auto [e, g] = std::mismatch(expected.begin(), expected.end(), got.begin());
    if (e != expected.end()) {
      result.equivalent = false;
      result.counterexample = Counterexample{t, x, expected, got, static_cast<std::size_t>(e - expected.begin())};
      break;
    }
  }
  return result;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << "cycle,port,value\n";
  for (int c = 0; c < trace.cycles; ++c) {
    const auto& in = trace.inputs[static_cast<std::size_t>(c)];
    for (std::size_t l = 0; l < in.size(); ++l) os << c << ",x" << l << ',' << in[l] << '\n';
    const auto& out = trace.outputs[static_cast<std::size_t>(c)];
    for (std::size_t l = 0; l < out.size(); ++l) os << c << ",y" << l << ',' << out[l] << '\n';
  }
}

}  // namespace unroll

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "unroll/graph.hpp"
#include "unroll/kernel.hpp"
#include "unroll/tensor.hpp"

namespace unroll {

using Beat = std::vector<std::int64_t>;

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimTrace {
  std::vector<Beat> inputs;   // per cycle, one value per input lane
  std::vector<Beat> outputs;  // per cycle, one value per output lane
  int latency = 0;            // pipeline latency from graph metadata
  int cycles = 0;
};

/// Two-phase cycle simulator: each cycle settles combinational logic from
/// the current inputs and state, samples the outputs, then updates all
/// sequential nodes at once. Registers and counters start at zero.
class Simulator {
 public:
  explicit Simulator(const DataflowGraph& graph);

  /// Advance one cycle; returns the outputs sampled before the clock edge.
  Beat step(const Beat& inputs);

  std::size_t input_lanes() const { return inputs_.size(); }
  std::size_t output_lanes() const { return outputs_.size(); }

 private:
  const DataflowGraph& g_;
  std::vector<NodeId> order_;
  std::vector<NodeId> inputs_;
  std::vector<NodeId> outputs_;
  std::vector<std::int64_t> value_;
  std::vector<std::int64_t> state_;
  std::vector<std::vector<std::int64_t>> storage_;  // chains (FIFO) and memories
  std::vector<std::size_t> head_;
};

/// Runs the schedule, then zero beats until every output has drained
/// (schedule length + latency + 1 cycles unless extra_cycles >= 0).
SimTrace run(const DataflowGraph& graph, std::span<const Beat> schedule, int extra_cycles = -1);

/// First cycle at which any output differs from the all-zero response when
/// `pulse` is applied at cycle 0 and zeros afterwards; -1 if never.
int observed_latency(const DataflowGraph& graph, const Beat& pulse, int max_cycles = 4096);

/// Input beats for a kernel: GEMM rows, pixel windows, or input image rows,
/// depending on the unrolling factor.
std::vector<Beat> make_schedule(const KernelConfig& cfg, const InputStimulus& inputs);

struct OutputLocation {
  int cycle;
  int lane;
};

/// Where golden output element `flat_index` (row-major output tensor)
/// appears in the simulation trace, including systolic column skew.
OutputLocation output_location(const KernelConfig& cfg, const DataflowGraph& graph, std::size_t flat_index);

std::vector<std::int64_t> collect_outputs(const KernelConfig& cfg, const DataflowGraph& graph,
                                          const SimTrace& trace);

std::vector<std::int64_t> golden_outputs(const KernelConfig& cfg, const WeightTensor& weights,
                                         const InputStimulus& inputs);

struct Counterexample {
  int trial = 0;
  InputStimulus inputs;
  std::vector<std::int64_t> expected;
  std::vector<std::int64_t> got;
  std::size_t first_mismatch = 0;
};

struct EquivalenceResult {
  bool equivalent = true;
  int trials_run = 0;
  std::optional<Counterexample> counterexample;
};

/// Builds the kernel and compares simulation with the golden model over
/// n_trials random input sets, stopping at the first mismatch.
EquivalenceResult check_equivalence(const KernelConfig& cfg, const WeightTensor& weights, int n_trials,
                                    std::uint64_t seed);
/// Same, against an existing (possibly modified) graph.
EquivalenceResult check_equivalence(const DataflowGraph& graph, const KernelConfig& cfg,
                                    const WeightTensor& weights, int n_trials, std::uint64_t seed);

/// CSV rows: cycle,port,value with ports named x<lane> and y<lane>.
void write_trace_csv(std::ostream& os, const SimTrace& trace);

}  // namespace unroll

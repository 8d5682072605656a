#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "unroll/graph.hpp"
#include "unroll/tensor.hpp"

namespace unroll {

enum class Family { gemmt, gemms, conv1d, conv2d };
enum class Unroll { pixelwise, row_parallel, fully_unrolled };

std::string_view to_string(Family f);
std::string_view to_string(Unroll u);
/// Short unroll tag used in preset names: PW, RP, FU.
std::string_view unroll_tag(Unroll u);
Family family_from_string(std::string_view s);
Unroll unroll_from_string(std::string_view s);

/// One design point.
struct KernelConfig {
  Family family = Family::gemmt;
  Unroll unroll = Unroll::row_parallel;
  // GEMM: x is m x n, w is n x p.
  int m = 1, n = 1, p = 1;
  // Convolution: input I_W x I_h x I_c, filter F_w x F_h x I_c x O_c.
  int iw = 1, ih = 1, ic = 1;
  int fw = 1, fh = 1, oc = 1;
  int bits = 8;
  bool specialize = true;

  bool is_gemm() const { return family == Family::gemmt || family == Family::gemms; }
  int ow() const { return iw - fw + 1; }
  int oh() const { return ih - fh + 1; }

  std::vector<int> weight_shape() const;
  std::vector<int> input_shape() const;
  std::vector<int> output_shape() const;
  /// Multiply-accumulates per output element.
  int reduction_length() const;

  /// Throws ParameterError unless (family, unroll) is a supported kernel and
  /// all dimensions are valid.
  void validate() const;
  /// Canonical single-line description, stable across runs.
  std::string describe() const;
};

/// Supported (family, unroll) pairs, in table order.
std::vector<std::pair<Family, Unroll>> kernel_pairs();

struct ThroughputContract {
  std::vector<int> inputs_per_cycle;
  std::vector<int> outputs_per_cycle;
  /// 1 means no duplication.
  std::size_t weight_duplication = 1;
  /// Physical input lanes at the module boundary. Differs from the product of
  /// inputs_per_cycle only where a shift-register network widens the stream.
  std::size_t input_port_lanes = 0;
  std::size_t output_port_lanes = 0;

  bool operator==(const ThroughputContract&) const = default;
};

DataflowGraph build_gemmt(const KernelConfig& cfg, const WeightTensor& weights);
DataflowGraph build_gemms(const KernelConfig& cfg, const WeightTensor& weights);
DataflowGraph build_conv(const KernelConfig& cfg, const WeightTensor& weights);
/// Dispatches on cfg.family.
DataflowGraph build_kernel(const KernelConfig& cfg, const WeightTensor& weights);

/// Stand-alone constant multiplier: one input port of operand_width bits,
/// one output port of operand_width + weight_bits bits. Weight 0 yields a
/// graph with no arithmetic and a constant-zero output. Not pipelined.
DataflowGraph specialize_multiplier(std::int64_t weight, int operand_width, int weight_bits);

/// Inserts a register after every arithmetic node that is not already
/// registered, then latency-balances every reconvergent path and every
/// output group with shared delay registers. Fills stage annotations and
/// latency metadata. Idempotent.
DataflowGraph pipeline(DataflowGraph graph);

ThroughputContract throughput_contract(const DataflowGraph& graph);

/// Output lane width b_in + b_w + ceil(log2(max(reduction, 1))).
int accumulator_width(int bits, int reduction);
int ceil_log2(std::uint64_t v);

}  // namespace unroll

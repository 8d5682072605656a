#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unroll {

using NodeId = std::uint32_t;
constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class NodeKind : std::uint8_t {
  input_port,            // param = lane
  output_port,           // param = lane, aux = latency balancing group
  constant,              // param = value
  shift,                 // operand << param (wiring)
  add,
  sub,                   // operands[0] - operands[1]
  and_gate,
  multiply,              // generic (non-specialized) multiplier
  reg,
  shift_register_chain,  // param = length
  memory,                // operands = {data, address}; param = depth; 1-cycle read latency
  counter,               // param = modulus
  mux,                   // operands = {select, if_true, if_false}
  compare,               // equality
};

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view name);

/// Arithmetic/logic nodes that form one pipeline stage.
bool is_arithmetic(NodeKind kind);
/// Nodes whose output is state rather than a function of current operands.
bool is_sequential(NodeKind kind);
/// Required operand count for a kind.
std::size_t operand_count(NodeKind kind);

struct Node {
  NodeKind kind = NodeKind::constant;
  int width = 1;
  bool is_signed = true;
  std::vector<NodeId> operands;
  std::int64_t param = 0;
  int aux = 0;
  /// Register count from the inputs (timeless nodes report 0).
  int stage = 0;
  /// Low bits known to be zero (from constant shifts).
  int known_zero_lsbs = 0;
  /// Temporal tap register of an input window; shifts data in time rather
  /// than adding a pipeline stage, so latency balancing ignores it.
  bool window = false;
  std::string label;
};

struct GraphMetadata {
  std::size_t multiplier_count = 0;
  std::size_t nnz_used = 0;
  std::size_t duplication_factor = 1;
  /// Longest register count from any input to any output.
  int latency = 0;
  /// Cycles of input needed before the first valid output beat.
  int warmup_cycles = 0;
  std::vector<int> output_latency;  // per output lane
  std::vector<int> inputs_per_cycle;   // logical shape delivered to the engines
  std::vector<int> outputs_per_cycle;  // logical shape produced per cycle
  /// Operand precision and output lane width.
  int input_bits = 0;
  int output_width = 0;
  /// Multiply-accumulates per output element.
  int reduction_length = 0;
  bool pipelined = false;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataflowGraph {
 public:
  NodeId add(Node node);
  NodeId add(NodeKind kind, int width, bool is_signed, std::vector<NodeId> operands,
             std::int64_t param = 0, std::string label = {});

  const Node& node(NodeId id) const { return nodes_.at(id); }
  Node& node(NodeId id) { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// Port nodes ordered by lane.
  std::vector<NodeId> inputs() const;
  std::vector<NodeId> outputs() const;

  /// consumers[i] lists nodes that use node i as an operand.
  std::vector<std::vector<NodeId>> consumers() const;
  /// Topological order over operand edges. Throws GraphError on a cycle that
  /// does not pass through a sequential node.
  std::vector<NodeId> topological_order() const;

  std::size_t count(NodeKind kind) const;
  /// add + sub + and_gate + multiply nodes.
  std::size_t arithmetic_count() const;
  /// Flip-flop bits held by reg, chain and counter nodes.
  std::size_t register_bits() const;

  GraphMetadata meta;

 private:
  std::vector<Node> nodes_;
};

/// Structural checks: operand ids and counts, widths within [1, 64],
/// acyclic except through sequential nodes. Throws GraphError.
void validate(const DataflowGraph& g);

/// After pipelining every arithmetic node feeds only registers and never
/// reads another arithmetic node combinationally (shifts are wiring).
bool single_stage_between_registers(const DataflowGraph& g, std::string* why = nullptr);

/// Text netlist:
///   graph <nodes> <edges>
///   meta key=value ...
///   node <id> <kind> w=<width> s=<0|1> p=<param> a=<aux> stage=<k> [win] "<label>"
///   edge <from> <to> <operand index>
void export_text(std::ostream& os, const DataflowGraph& g);
DataflowGraph import_text(std::istream& is);

}  // namespace unroll

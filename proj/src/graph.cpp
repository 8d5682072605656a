#include "unroll/graph.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace unroll {

namespace {

constexpr std::array<std::pair<NodeKind, std::string_view>, 14> kKindNames{{
    {NodeKind::input_port, "input_port"},
    {NodeKind::output_port, "output_port"},
    {NodeKind::constant, "constant"},
    {NodeKind::shift, "shift"},
    {NodeKind::add, "add"},
    {NodeKind::sub, "sub"},
    {NodeKind::and_gate, "and_gate"},
    {NodeKind::multiply, "multiply"},
    {NodeKind::reg, "register"},
    {NodeKind::shift_register_chain, "shift_register_chain"},
    {NodeKind::memory, "memory"},
    {NodeKind::counter, "counter"},
    {NodeKind::mux, "mux"},
    {NodeKind::compare, "compare"},
}};

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s.empty() ? "-" : s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  if (s == "-") return out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

NodeKind node_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw GraphError("unknown node kind '" + std::string(name) + "'");
}

bool is_arithmetic(NodeKind kind) {
  switch (kind) {
    case NodeKind::add:
    case NodeKind::sub:
    case NodeKind::and_gate:
    case NodeKind::multiply:
    case NodeKind::mux:
    case NodeKind::compare:
      return true;
    default:
      return false;
  }
}

bool is_sequential(NodeKind kind) {
  return kind == NodeKind::reg || kind == NodeKind::shift_register_chain ||
         kind == NodeKind::memory || kind == NodeKind::counter;
}

std::size_t operand_count(NodeKind kind) {
  switch (kind) {
    case NodeKind::input_port:
    case NodeKind::constant:
    case NodeKind::counter:
      return 0;
    case NodeKind::output_port:
    case NodeKind::shift:
    case NodeKind::reg:
    case NodeKind::shift_register_chain:
      return 1;
    case NodeKind::mux:
      return 3;
    default:
      return 2;
  }
}

NodeId DataflowGraph::add(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId DataflowGraph::add(NodeKind kind, int width, bool is_signed, std::vector<NodeId> operands,
                          std::int64_t param, std::string label) {
  Node n;
  n.kind = kind;
  n.width = width;
  n.is_signed = is_signed;
  n.operands = std::move(operands);
  n.param = param;
  n.label = std::move(label);
  return add(std::move(n));
}

std::vector<NodeId> DataflowGraph::inputs() const {
  std::vector<NodeId> ids;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::input_port) ids.push_back(i);
  }
  std::stable_sort(ids.begin(), ids.end(),
                   [&](NodeId a, NodeId b) { return nodes_[a].param < nodes_[b].param; });
  return ids;
}

std::vector<NodeId> DataflowGraph::outputs() const {
  std::vector<NodeId> ids;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::output_port) ids.push_back(i);
  }
  std::stable_sort(ids.begin(), ids.end(),
                   [&](NodeId a, NodeId b) { return nodes_[a].param < nodes_[b].param; });
  return ids;
}

std::vector<std::vector<NodeId>> DataflowGraph::consumers() const {
  std::vector<std::vector<NodeId>> out(nodes_.size());
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    for (NodeId op : nodes_[i].operands) {
      if (op < nodes_.size()) out[op].push_back(i);
    }
  }
  return out;
}

std::vector<NodeId> DataflowGraph::topological_order() const {
  const std::size_t n = nodes_.size();
  std::vector<int> pending(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId op : nodes_[i].operands) {
      if (op >= n) throw GraphError("node " + std::to_string(i) + " references missing operand");
    }
    pending[i] = static_cast<int>(nodes_[i].operands.size());
  }
  const auto cons = consumers();
  std::vector<NodeId> order;
  order.reserve(n);
  for (NodeId i = 0; i < n; ++i) {
    if (pending[i] == 0) order.push_back(i);
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (NodeId c : cons[order[head]]) {
      if (--pending[c] == 0) order.push_back(c);
    }
  }
  if (order.size() == n) return order;

  // A cycle remains. It is legal only if every cycle crosses a sequential
  // node: retry with edges into sequential nodes removed.
  std::vector<int> comb_pending(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    comb_pending[i] = is_sequential(nodes_[i].kind) ? 0 : static_cast<int>(nodes_[i].operands.size());
  }
  std::vector<NodeId> comb;
  for (NodeId i = 0; i < n; ++i) {
    if (comb_pending[i] == 0) comb.push_back(i);
  }
  for (std::size_t head = 0; head < comb.size(); ++head) {
    for (NodeId c : cons[comb[head]]) {
      if (!is_sequential(nodes_[c].kind) && --comb_pending[c] == 0) comb.push_back(c);
    }
  }
  if (comb.size() != n) throw GraphError("combinational cycle in dataflow graph");
  return comb;
}

std::size_t DataflowGraph::count(NodeKind kind) const {
  std::size_t c = 0;
  for (const auto& n : nodes_) c += n.kind == kind;
  return c;
}

std::size_t DataflowGraph::arithmetic_count() const {
  return count(NodeKind::add) + count(NodeKind::sub) + count(NodeKind::and_gate) +
         count(NodeKind::multiply);
}

std::size_t DataflowGraph::register_bits() const {
  std::size_t bits = 0;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::reg || n.kind == NodeKind::counter) {
      bits += static_cast<std::size_t>(n.width);
    } else if (n.kind == NodeKind::shift_register_chain) {
      bits += static_cast<std::size_t>(n.width) * static_cast<std::size_t>(n.param);
    }
  }
  return bits;
}

void validate(const DataflowGraph& g) {
  for (NodeId i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    const std::string where = "node " + std::to_string(i) + " (" + std::string(to_string(n.kind)) + ")";
    if (n.operands.size() != operand_count(n.kind)) {
      throw GraphError(where + " has " + std::to_string(n.operands.size()) + " operands, expected " +
                       std::to_string(operand_count(n.kind)));
    }
    for (NodeId op : n.operands) {
      if (op >= g.size()) throw GraphError(where + " has an unconnected operand");
    }
    if (n.width < 1 || n.width > 64) throw GraphError(where + " has width outside [1, 64]");
    if (n.kind == NodeKind::shift && (n.param < 0 || n.param > 63)) {
      throw GraphError(where + " has an invalid shift amount");
    }
    if ((n.kind == NodeKind::shift_register_chain || n.kind == NodeKind::memory ||
         n.kind == NodeKind::counter) && n.param < 1) {
      throw GraphError(where + " needs a positive length/depth");
    }
  }
  (void)g.topological_order();
}

bool single_stage_between_registers(const DataflowGraph& g, std::string* why) {
  const auto cons = g.consumers();
  auto fail = [&](NodeId id, const char* msg) {
    if (why) *why = "node " + std::to_string(id) + ": " + msg;
    return false;
  };
  // Resolve through shift wiring to the driving node.
  auto driver = [&](NodeId id) {
    while (g.node(id).kind == NodeKind::shift) id = g.node(id).operands[0];
    return id;
  };
  for (NodeId i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    if (!is_arithmetic(n.kind)) continue;
    for (NodeId c : cons[i]) {
      const NodeKind k = g.node(c).kind;
      if (k != NodeKind::reg && k != NodeKind::shift_register_chain) {
        return fail(i, "arithmetic output not registered");
      }
    }
    for (NodeId op : n.operands) {
      if (is_arithmetic(g.node(driver(op)).kind)) {
        return fail(i, "two arithmetic stages between registers");
      }
    }
  }
  return true;
}

void export_text(std::ostream& os, const DataflowGraph& g) {
  std::size_t edges = 0;
  for (const auto& n : g.nodes()) edges += n.operands.size();
  const auto& m = g.meta;
  os << "graph " << g.size() << ' ' << edges << '\n';
  os << "meta multipliers=" << m.multiplier_count << " nnz=" << m.nnz_used
     << " duplication=" << m.duplication_factor << " latency=" << m.latency
     << " warmup=" << m.warmup_cycles << " input_bits=" << m.input_bits
     << " output_width=" << m.output_width << " reduction=" << m.reduction_length << " pipelined=" << (m.pipelined ? 1 : 0)
     << " in_shape=" << join(m.inputs_per_cycle) << " out_shape=" << join(m.outputs_per_cycle)
     << " out_latency=" << join(m.output_latency) << '\n';
  for (NodeId i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    os << "node " << i << ' ' << to_string(n.kind) << " w=" << n.width << " s=" << (n.is_signed ? 1 : 0)
       << " p=" << n.param << " a=" << n.aux << " z=" << n.known_zero_lsbs << " stage=" << n.stage
       << (n.window ? " win" : "") << " \"" << n.label << "\"\n";
  }
  for (NodeId i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    for (std::size_t k = 0; k < n.operands.size(); ++k) {
      os << "edge " << n.operands[k] << ' ' << i << ' ' << k << '\n';
    }
  }
}

DataflowGraph import_text(std::istream& is) {
  DataflowGraph g;
  std::string line;
  std::vector<std::vector<std::pair<std::size_t, NodeId>>> pending_edges;
  std::size_t declared_nodes = 0, declared_edges = 0, edges = 0;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "graph") {
      if (!(ls >> declared_nodes >> declared_edges)) throw GraphError("malformed graph header");
      header = true;
      pending_edges.resize(declared_nodes);
    } else if (key == "meta") {
      std::string kv;
      auto& m = g.meta;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw GraphError("malformed meta field '" + kv + "'");
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "multipliers") m.multiplier_count = std::stoull(v);
        else if (k == "nnz") m.nnz_used = std::stoull(v);
        else if (k == "duplication") m.duplication_factor = std::stoull(v);
        else if (k == "latency") m.latency = std::stoi(v);
        else if (k == "warmup") m.warmup_cycles = std::stoi(v);
        else if (k == "input_bits") m.input_bits = std::stoi(v);
        else if (k == "output_width") m.output_width = std::stoi(v);
        else if (k == "reduction") m.reduction_length = std::stoi(v);
        else if (k == "pipelined") m.pipelined = v == "1";
        else if (k == "in_shape") m.inputs_per_cycle = split_ints(v);
        else if (k == "out_shape") m.outputs_per_cycle = split_ints(v);
        else if (k == "out_latency") m.output_latency = split_ints(v);
      }
    } else if (key == "node") {
      Node n;
      std::size_t id = 0;
      std::string kind;
      ls >> id >> kind;
      if (id != g.size()) throw GraphError("node ids must be dense and ordered");
      n.kind = node_kind_from_string(kind);
      std::string tok;
      while (ls >> tok) {
        if (tok.rfind("w=", 0) == 0) n.width = std::stoi(tok.substr(2));
        else if (tok.rfind("s=", 0) == 0) n.is_signed = tok.substr(2) == "1";
        else if (tok.rfind("p=", 0) == 0) n.param = std::stoll(tok.substr(2));
        else if (tok.rfind("a=", 0) == 0) n.aux = std::stoi(tok.substr(2));
        else if (tok.rfind("z=", 0) == 0) n.known_zero_lsbs = std::stoi(tok.substr(2));
        else if (tok.rfind("stage=", 0) == 0) n.stage = std::stoi(tok.substr(6));
        else if (tok == "win") n.window = true;
        else if (!tok.empty() && tok.front() == '"') {
          const auto open = line.find('"');
          const auto close = line.rfind('"');
          if (close > open) n.label = line.substr(open + 1, close - open - 1);
          break;
        }
      }
      g.add(std::move(n));
    } else if (key == "edge") {
      NodeId from = 0, to = 0;
      std::size_t index = 0;
      if (!(ls >> from >> to >> index)) throw GraphError("malformed edge record");
      if (to >= pending_edges.size() || from >= declared_nodes) throw GraphError("edge endpoint out of range");
      pending_edges[to].push_back({index, from});
      ++edges;
    } else {
      throw GraphError("unknown netlist record '" + key + "'");
    }
  }
  if (!header) throw GraphError("netlist has no graph header");
  if (g.size() != declared_nodes || edges != declared_edges) {
    throw GraphError("netlist declares " + std::to_string(declared_nodes) + " nodes and " +
                     std::to_string(declared_edges) + " edges, found " + std::to_string(g.size()) + " and " +
                     std::to_string(edges));
  }
  for (NodeId i = 0; i < g.size(); ++i) {
    auto& ops = g.node(i).operands;
    ops.assign(pending_edges[i].size(), kNoNode);
    for (const auto& [index, from] : pending_edges[i]) {
      if (index >= ops.size()) throw GraphError("edge operand index out of range");
      ops[index] = from;
    }
  }
  validate(g);
  return g;
}

}  // namespace unroll

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>

#include "unroll/kernel.hpp"

namespace unroll {

namespace {

constexpr int kTimeless = -1;

NodeId add_register(DataflowGraph& g, NodeId src, std::string label) {
  const Node s = g.node(src);
  Node r;
  r.kind = NodeKind::reg;
  r.width = s.width;
  r.is_signed = s.is_signed;
  r.operands = {src};
  r.known_zero_lsbs = s.known_zero_lsbs;
  r.label = std::move(label);
  return g.add(std::move(r));
}

}  // namespace

DataflowGraph pipeline(DataflowGraph g) {
  validate(g);

  // Register every arithmetic stage.
  {
    const auto cons = g.consumers();
    const NodeId original = static_cast<NodeId>(g.size());
    for (NodeId i = 0; i < original; ++i) {
      if (!is_arithmetic(g.node(i).kind)) continue;
      const auto& users = cons[i];
      if (users.size() == 1 && g.node(users[0]).kind == NodeKind::reg && !g.node(users[0]).window) continue;
      const NodeId r = add_register(g, i, g.node(i).label);
      for (NodeId u : users) {
        for (NodeId& op : g.node(u).operands) {
          if (op == i) op = r;
        }
      }
    }
  }

  // Earliest arrival of every node, counted in registers from the inputs.
  const auto order = g.topological_order();
  const NodeId original = static_cast<NodeId>(g.size());
  std::vector<int> lat(original, kTimeless);
  auto own_delay = [&](const Node& n) {
    switch (n.kind) {
      case NodeKind::reg: return n.window ? 0 : 1;
      case NodeKind::shift_register_chain: return static_cast<int>(n.param);
      case NodeKind::memory: return 1;
      default: return 0;
    }
  };
  for (NodeId id : order) {
    const Node& n = g.node(id);
    if (n.kind == NodeKind::input_port) {
      lat[id] = 0;
      continue;
    }
    if (n.kind == NodeKind::constant || n.kind == NodeKind::counter) continue;
    int latest = kTimeless;
    if (n.kind == NodeKind::memory) {
      latest = lat[n.operands[0]];
    } else {
      for (NodeId op : n.operands) latest = std::max(latest, lat[op]);
    }
    lat[id] = latest == kTimeless ? kTimeless : latest + own_delay(n);
  }

  std::map<int, int> group_latency;
  const auto outs = g.outputs();
  for (NodeId o : outs) {
    auto [it, inserted] = group_latency.try_emplace(g.node(o).aux, kTimeless);
    it->second = std::max(it->second, lat[o]);
  }

  // Schedule every node as late as its consumers allow, so balancing delay
  // collects near the inputs where one shared line serves many consumers.
  const auto cons = g.consumers();
  std::vector<int> when(original, kTimeless);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId id = *it;
    if (lat[id] == kTimeless) continue;
    const Node& n = g.node(id);
    if (n.kind == NodeKind::output_port) {
      when[id] = group_latency[n.aux];
      continue;
    }
    if (n.kind == NodeKind::input_port) {
      when[id] = 0;
      continue;
    }
    int required = std::numeric_limits<int>::max();
    for (NodeId c : cons[id]) {
      if (when[c] == kTimeless) continue;
      const Node& cn = g.node(c);
      if (cn.kind == NodeKind::memory && cn.operands[0] != id) continue;
      required = std::min(required, when[c] - own_delay(cn));
    }
    when[id] = required == std::numeric_limits<int>::max() ? lat[id] : required;
  }

  std::unordered_map<NodeId, std::vector<NodeId>> lines;
  auto delayed = [&](NodeId src, int cycles) {
    auto& line = lines[src];
    if (line.empty()) line.push_back(src);
    while (static_cast<int>(line.size()) <= cycles) {
      const NodeId r = add_register(g, line.back(), "balance");
      when.push_back(when[line.back()] + 1);
      line.push_back(r);
    }
    return line[static_cast<std::size_t>(cycles)];
  };
  for (NodeId id : order) {
    if (when[id] == kTimeless) continue;
    const int arrive = when[id] - own_delay(g.node(id));
    const auto operands = g.node(id).operands;
    for (std::size_t k = 0; k < operands.size(); ++k) {
      const NodeId op = operands[k];
      if (when[op] == kTimeless || when[op] >= arrive) continue;
      if (g.node(id).kind == NodeKind::memory && k != 0) continue;
      const NodeId d = delayed(op, arrive - when[op]);
      g.node(id).operands[k] = d;
    }
  }
  for (NodeId i = 0; i < g.size(); ++i) g.node(i).stage = std::max(when[i], 0);
  auto& meta = g.meta;
  meta.output_latency.clear();
  meta.latency = 0;
  for (NodeId o : outs) {
    const int l = std::max(group_latency[g.node(o).aux], 0);
    meta.output_latency.push_back(l);
    meta.latency = std::max(meta.latency, l);
  }
  meta.pipelined = true;
  return g;
}

}  // namespace unroll

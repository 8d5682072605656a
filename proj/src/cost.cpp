#include "unroll/cost.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace unroll {

namespace {

using Net = std::uint64_t;
constexpr Net kNoNet = ~Net{0};
constexpr Net kSyntheticTag = Net{1} << 62;

Net node_net(NodeId id, int bit) { return (static_cast<Net>(id) << 6) | static_cast<Net>(bit); }

struct TableRow {
  int K;
  int W;
  double tile_area;
};
constexpr TableRow kStudy[] = {{3, 102, 1664.0}, {4, 96, 2053.0}, {5, 90, 2520.0}, {6, 90, 3420.0}};

ArchParams study_arch(const TableRow& row) {
  ArchParams a;
  a.name = "K" + std::to_string(row.K);
  a.K = row.K;
  a.N = 10;
  a.I = arch_pins(row.K, a.N);
  a.W = row.W;
  a.tile_area = row.tile_area;
  a.t_lut_ps = lut_delay_ps(row.K);
  return a;
}

class Mapper {
 public:
  Mapper(const DataflowGraph& g, const ArchParams& arch) : g_(g), arch_(arch), users_(g.consumers()) {
    if (arch.K < 2 || arch.N < 1 || arch.I < 1) throw CostError("architecture needs K >= 2, N >= 1, I >= 1");
    tz_.assign(g.size(), 0);
    fused_into_.assign(g.size(), kNoNode);
    fused_reg_.assign(g.size(), kNoNode);
    order_ = g.topological_order();
    for (NodeId id : order_) tz_[id] = trailing_zeros(id);
    for (NodeId id = 0; id < g.size(); ++id) {
      const Node& n = g.node(id);
      if (n.kind != NodeKind::reg || n.window) continue;
      const NodeId src = n.operands[0];
      const Node& s = g.node(src);
      if (is_arithmetic(s.kind) && users_[src].size() == 1 && s.width == n.width) {
        fused_into_[id] = src;
        fused_reg_[src] = id;
      }
    }
  }

  BleNetlist run() {
    for (NodeId id = 0; id < g_.size(); ++id) map_node(id);
    for (std::size_t i = 0; i < ff_bits_.size(); i += 2) {
      Ble b;
      b.mode = BleMode::storage;
      b.node = ff_bits_[i].node;
      for (std::size_t k = i; k < std::min(i + 2, ff_bits_.size()); ++k) {
        if (ff_bits_[k].d != kNoNet) b.inputs.push_back(ff_bits_[k].d);
        b.outputs.push_back(ff_bits_[k].q);
      }
      dedupe(b.inputs);
      out_.bles.push_back(std::move(b));
      ++out_.storage_bles;
    }
    return std::move(out_);
  }

 private:
  struct FfBit {
    NodeId node;
    Net d;
    Net q;
  };

  int trailing_zeros(NodeId id) const {
    const Node& n = g_.node(id);
    switch (n.kind) {
      case NodeKind::constant:
        return n.param == 0 ? 64 : std::countr_zero(static_cast<std::uint64_t>(n.param));
      case NodeKind::shift:
        return std::min(64, tz_[n.operands[0]] + static_cast<int>(n.param));
      case NodeKind::add:
      case NodeKind::sub:
        return std::min(tz_[n.operands[0]], tz_[n.operands[1]]);
      case NodeKind::reg:
      case NodeKind::shift_register_chain:
      case NodeKind::output_port:
        return tz_[n.operands[0]];
      default:
        return 0;
    }
  }

  /// First bit an adder or subtractor actually computes; lower bits are
  /// copies of one operand or zero.
  int hard_start(const Node& n) const {
    const int ta = tz_[n.operands[0]], tb = tz_[n.operands[1]];
    const int start = n.kind == NodeKind::add ? std::max(ta, tb) : tb;
    return std::min(start, n.width);
  }

  /// Net carrying bit `bit` of node `id`, looking through wiring.
  Net net(NodeId id, int bit) const {
    for (;;) {
      const Node& n = g_.node(id);
      if (bit >= n.width) {
        if (!n.is_signed) return kNoNet;
        bit = n.width - 1;
      }
      switch (n.kind) {
        case NodeKind::constant:
          return kNoNet;
        case NodeKind::shift:
          if (bit < n.param) return kNoNet;
          bit -= static_cast<int>(n.param);
          id = n.operands[0];
          continue;
        case NodeKind::output_port:
          id = n.operands[0];
          continue;
        case NodeKind::add:
        case NodeKind::sub:
          if (bit < hard_start(n)) {
            const NodeId a = n.operands[0], b = n.operands[1];
            if (n.kind == NodeKind::sub || bit < tz_[b]) {
              id = a;
            } else {
              id = b;
            }
            continue;
          }
          break;
        default:
          break;
      }
      if (bit >= tz_[id]) return driven_net(id, bit);
      return kNoNet;
    }
  }

  /// Arithmetic outputs registered in place appear as the register's nets.
  Net driven_net(NodeId id, int bit) const {
    if (fused_reg_[id] != kNoNode) return node_net(fused_reg_[id], bit);
    return node_net(id, bit);
  }

  Net synthetic() { return kSyntheticTag | next_synthetic_++; }

  static void dedupe(std::vector<Net>& v) {
    std::erase(v, kNoNet);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  std::uint32_t push(Ble b) {
    dedupe(b.inputs);
    const BleMode mode = b.mode;
    out_.bles.push_back(std::move(b));
    (mode == BleMode::arithmetic ? out_.arithmetic_bles : out_.logic_bles)++;
    return static_cast<std::uint32_t>(out_.bles.size() - 1);
  }

  void note_delay(NodeId id, double ps) {
    if (ps > out_.critical_path_ps) {
      out_.critical_path_ps = ps;
      out_.critical_node = id;
    }
  }

  double lut_stage() const { return arch_.t_lut_ps + arch_.t_route_ps; }

  /// LUT tree over `inputs`, final output on `out`. Returns the LUT count.
  int lut_tree(NodeId id, std::vector<Net> inputs, Net out) {
    std::erase(inputs, kNoNet);
    const int luts = lut_count(static_cast<int>(inputs.size()), arch_.K);
    std::size_t next = 0;
    Net carry = kNoNet;
    for (int l = 0; l < luts; ++l) {
      Ble b;
      b.mode = BleMode::logic;
      b.node = id;
      const std::size_t take = static_cast<std::size_t>(carry == kNoNet ? arch_.K : arch_.K - 1);
      if (carry != kNoNet) b.inputs.push_back(carry);
      for (std::size_t k = 0; k < take && next < inputs.size(); ++k) b.inputs.push_back(inputs[next++]);
      carry = l + 1 == luts ? out : synthetic();
      b.outputs.push_back(carry);
      push(std::move(b));
    }
    return luts;
  }

  void add_ff(NodeId id, Net d, Net q) { ff_bits_.push_back({id, d, q}); }

  void map_node(NodeId id) {
    const Node& n = g_.node(id);
    switch (n.kind) {
      case NodeKind::input_port:
      case NodeKind::output_port:
      case NodeKind::constant:
      case NodeKind::shift:
        return;
      case NodeKind::add:
      case NodeKind::sub:
        map_adder(id);
        return;
      case NodeKind::and_gate:
        map_and(id);
        return;
      case NodeKind::multiply:
        map_multiply(id);
        return;
      case NodeKind::mux:
        for (int bit = 0; bit < n.width; ++bit) {
          lut_tree(id, {net(n.operands[0], 0), net(n.operands[1], bit), net(n.operands[2], bit)}, driven_net(id, bit));
        }
        note_delay(id, lut_levels(3, arch_.K) * lut_stage());
        return;
      case NodeKind::compare: {
        std::vector<Net> ins;
        const int w = std::max(g_.node(n.operands[0]).width, g_.node(n.operands[1]).width);
        for (int bit = 0; bit < w; ++bit) {
          ins.push_back(net(n.operands[0], bit));
          ins.push_back(net(n.operands[1], bit));
        }
        lut_tree(id, std::move(ins), driven_net(id, 0));
        note_delay(id, lut_levels(2 * w, arch_.K) * lut_stage());
        return;
      }
      case NodeKind::reg:
        if (fused_into_[id] != kNoNode) {
          // Bits below the computed range of the fused adder need plain FFs.
          const Node& s = g_.node(fused_into_[id]);
          const int low = (s.kind == NodeKind::add || s.kind == NodeKind::sub) ? hard_start(s) : 0;
          for (int bit = tz_[id]; bit < low; ++bit) add_ff(id, net(fused_into_[id], bit), node_net(id, bit));
          return;
        }
        for (int bit = tz_[id]; bit < n.width; ++bit) add_ff(id, net(n.operands[0], bit), node_net(id, bit));
        return;
      case NodeKind::shift_register_chain:
        for (int bit = tz_[id]; bit < n.width; ++bit) {
          Net d = net(n.operands[0], bit);
          for (std::int64_t s = 0; s < n.param; ++s) {
            const Net q = s + 1 == n.param ? node_net(id, bit) : synthetic();
            add_ff(id, d, q);
            d = q;
          }
        }
        return;
      case NodeKind::memory:
        out_.memory_bits += static_cast<std::size_t>(n.param) * static_cast<std::size_t>(n.width);
        return;
      case NodeKind::counter:
        map_counter(id);
        return;
    }
    throw CostError("no mapping rule for node " + std::to_string(id) + " ('" + n.label + "')");
  }

  void map_adder(NodeId id) {
    const Node& n = g_.node(id);
    const int start = hard_start(n);
    const int hard = n.width - start;
    std::uint32_t prev = kNoBle;
    const int per = arch_.hard_adder_bits_per_ble;
    for (int bit = start; bit < n.width; bit += per) {
      Ble b;
      b.mode = BleMode::arithmetic;
      b.node = id;
      b.carry_from = prev;
      for (int k = bit; k < std::min(bit + per, n.width); ++k) {
        b.inputs.push_back(net(n.operands[0], k));
        b.inputs.push_back(net(n.operands[1], k));
        b.outputs.push_back(driven_net(id, k));
      }
      prev = push(std::move(b));
    }
    if (hard > 0) note_delay(id, lut_stage() + hard * arch_.t_carry_ps);
  }

  /// Weight bits held in FFs next to a generic multiplier.
  std::vector<Net> weight_storage(NodeId id, NodeId weight) {
    std::vector<Net> bits;
    if (g_.node(weight).kind != NodeKind::constant) {
      for (int bit = 0; bit < g_.node(weight).width; ++bit) bits.push_back(net(weight, bit));
      return bits;
    }
    for (int bit = 0; bit < g_.node(weight).width; ++bit) {
      bits.push_back(synthetic());
      add_ff(id, kNoNet, bits.back());
    }
    return bits;
  }

  void map_and(NodeId id) {
    const Node& n = g_.node(id);
    const std::vector<Net> w = weight_storage(id, n.operands[1]);
    const int group = std::max(1, arch_.K / 2);
    for (int bit = 0; bit < n.width; bit += group) {
      Ble b;
      b.mode = BleMode::logic;
      b.node = id;
      for (int k = bit; k < std::min(bit + group, n.width); ++k) {
        b.inputs.push_back(net(n.operands[0], k));
        b.inputs.push_back(w[std::min(static_cast<std::size_t>(k), w.size() - 1)]);
        b.outputs.push_back(driven_net(id, k));
      }
      push(std::move(b));
    }
    note_delay(id, lut_stage());
  }

  /// Array multiplier: one carry-chain row per weight bit after the first.
  void map_multiply(NodeId id) {
    const Node& n = g_.node(id);
    const NodeId a = n.operands[0];
    const int wa = g_.node(a).width;
    const std::vector<Net> w = weight_storage(id, n.operands[1]);
    const int wb = static_cast<int>(w.size());
    if (wb <= 1) {
      for (int bit = 0; bit < n.width; bit += std::max(1, arch_.K / 2)) {
        Ble b;
        b.mode = BleMode::logic;
        b.node = id;
        for (int k = bit; k < std::min(bit + std::max(1, arch_.K / 2), n.width); ++k) {
          b.inputs.push_back(net(a, k));
          if (!w.empty()) b.inputs.push_back(w[0]);
          b.outputs.push_back(driven_net(id, k));
        }
        push(std::move(b));
      }
      note_delay(id, lut_stage());
      return;
    }
    const int per_row = (wa + 1 + arch_.hard_adder_bits_per_ble - 1) / arch_.hard_adder_bits_per_ble;
    std::vector<Net> prev_row;
    for (int r = 1; r < wb; ++r) {
      std::vector<Net> row_out;
      std::uint32_t prev = kNoBle;
      for (int j = 0; j < per_row; ++j) {
        Ble b;
        b.mode = BleMode::arithmetic;
        b.node = id;
        b.carry_from = prev;
        for (int k = 2 * j; k < std::min(2 * j + 2, wa); ++k) b.inputs.push_back(net(a, k));
        b.inputs.push_back(w[static_cast<std::size_t>(r)]);
        if (r == 1) b.inputs.push_back(w[0]);
        for (std::size_t k = 2 * static_cast<std::size_t>(j); k < std::min(prev_row.size(), 2 * static_cast<std::size_t>(j) + 2); ++k) {
          b.inputs.push_back(prev_row[k]);
        }
        // Rows before the last each retire one low product bit.
        for (int k = 0; k < 2; ++k) {
          int pbit = -1;
          if (r == wb - 1) {
            pbit = wb - 2 + 2 * j + k;
          } else if (j == 0 && k == 0) {
            pbit = r - 1;
          }
          const Net o = pbit >= 0 && pbit < n.width ? driven_net(id, pbit) : synthetic();
          b.outputs.push_back(o);
          row_out.push_back(o);
        }
        prev = push(std::move(b));
      }
      prev_row = std::move(row_out);
    }
    note_delay(id, (wb - 1) * lut_stage() + (wa + 1) * arch_.t_carry_ps);
  }

  void map_counter(NodeId id) {
    const Node& n = g_.node(id);
    const auto modulus = static_cast<std::uint64_t>(n.param);
    Net wrap = kNoNet;
    // The terminal-count compare looks ahead one count per LUT level and
    // registers each level, so it never lengthens the increment stage.
    const double delay = lut_stage() + n.width * arch_.t_carry_ps;
    if (!std::has_single_bit(modulus)) {
      std::vector<Net> ins;
      for (int bit = 0; bit < n.width; ++bit) ins.push_back(node_net(id, bit));
      wrap = synthetic();
      lut_tree(id, std::move(ins), wrap);
    }
    std::uint32_t prev = kNoBle;
    for (int bit = 0; bit < n.width; bit += arch_.hard_adder_bits_per_ble) {
      Ble b;
      b.mode = BleMode::arithmetic;
      b.node = id;
      b.carry_from = prev;
      if (wrap != kNoNet) b.inputs.push_back(wrap);
      for (int k = bit; k < std::min(bit + arch_.hard_adder_bits_per_ble, n.width); ++k) {
        b.outputs.push_back(node_net(id, k));
      }
      prev = push(std::move(b));
    }
    note_delay(id, delay);
  }

  const DataflowGraph& g_;
  const ArchParams& arch_;
  std::vector<std::vector<NodeId>> users_;
  std::vector<NodeId> order_;
  std::vector<int> tz_;
  std::vector<NodeId> fused_into_;
  std::vector<NodeId> fused_reg_;
  std::vector<FfBit> ff_bits_;
  Net next_synthetic_ = 0;
  BleNetlist out_;
};

/// Dense net numbering with per-net driver and sink lists.
struct NetIndex {
  std::vector<std::vector<std::uint32_t>> ble_in;
  std::vector<std::vector<std::uint32_t>> ble_out;
  std::vector<std::uint32_t> driver;
  std::vector<std::vector<std::uint32_t>> sinks;

  explicit NetIndex(const BleNetlist& nl) {
    std::unordered_map<Net, std::uint32_t> ids;
    ids.reserve(nl.bles.size() * 4);
    auto id_of = [&](Net n) {
      auto [it, fresh] = ids.try_emplace(n, static_cast<std::uint32_t>(driver.size()));
      if (fresh) {
        driver.push_back(kNoBle);
        sinks.emplace_back();
      }
      return it->second;
    };
    ble_in.resize(nl.bles.size());
    ble_out.resize(nl.bles.size());
    for (std::uint32_t b = 0; b < nl.bles.size(); ++b) {
      for (Net n : nl.bles[b].outputs) {
        const auto d = id_of(n);
        driver[d] = b;
        ble_out[b].push_back(d);
      }
    }
    for (std::uint32_t b = 0; b < nl.bles.size(); ++b) {
      for (Net n : nl.bles[b].inputs) {
        const auto d = id_of(n);
        sinks[d].push_back(b);
        ble_in[b].push_back(d);
      }
    }
  }
};

constexpr std::size_t kGainFanoutLimit = 32;

}  // namespace

int arch_pins(int K, int N) { return (K * (N + 1) + 1) / 2; }

double lut_delay_ps(int K) {
  switch (K) {
    case 3: return 150.0;
    case 4: return 180.0;
    case 5: return 210.0;
    case 6: return 250.0;
    default: return 150.0 + 33.0 * (K - 3);
  }
}

std::vector<ArchParams> study_archs() {
  std::vector<ArchParams> out;
  for (const auto& row : kStudy) out.push_back(study_arch(row));
  return out;
}

std::vector<std::string> arch_preset_names() { return {"K3", "K4", "K5", "K6", "study-33", "baseline-52"}; }

ArchParams arch_preset(std::string_view name) {
  for (const auto& row : kStudy) {
    if (name == "K" + std::to_string(row.K)) return study_arch(row);
  }
  if (name == "study-33") {
    ArchParams a = study_arch(kStudy[3]);
    a.name = "study-33";
    return a;
  }
  if (name == "baseline-52") {
    ArchParams a = study_arch(kStudy[3]);
    a.name = "baseline-52";
    a.I = 52;
    return a;
  }
  throw CostError("unknown architecture preset '" + std::string(name) + "'");
}

std::vector<ArchParams> load_archs_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw CostError(std::string("malformed architecture JSON: ") + e.what());
  }
  auto one = [](const nlohmann::json& j) {
    if (!j.is_object()) throw CostError("architecture entry must be an object");
    ArchParams a = arch_preset(j.value("preset", std::string("K6")));
    a.name = j.value("name", j.value("preset", a.name));
    a.K = j.value("K", a.K);
    a.N = j.value("N", a.N);
    a.t_lut_ps = j.value("t_lut_ps", j.contains("K") ? lut_delay_ps(a.K) : a.t_lut_ps);
    a.I = j.value("I", j.contains("K") || j.contains("N") ? arch_pins(a.K, a.N) : a.I);
    a.W = j.value("W", a.W);
    a.tile_area = j.value("tile_area", a.tile_area);
    a.ffs_per_ble = j.value("ffs_per_ble", a.ffs_per_ble);
    a.hard_adder_bits_per_ble = j.value("hard_adder_bits_per_ble", a.hard_adder_bits_per_ble);
    a.t_route_ps = j.value("t_route_ps", a.t_route_ps);
    a.t_carry_ps = j.value("t_carry_ps", a.t_carry_ps);
    if (a.K < 2 || a.N < 1 || a.I < 1 || a.tile_area < 0 || a.hard_adder_bits_per_ble < 1 || a.ffs_per_ble < 1) {
      throw CostError("architecture '" + a.name + "' has out-of-range parameters");
    }
    return a;
  };
  std::vector<ArchParams> out;
  try {
    if (doc.is_array()) {
      for (const auto& j : doc) out.push_back(one(j));
    } else {
      out.push_back(one(doc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CostError(std::string("bad architecture field: ") + e.what());
  }
  return out;
}

std::string arch_to_json(const ArchParams& a) {
  nlohmann::ordered_json j;
  j["name"] = a.name;
  j["K"] = a.K;
  j["N"] = a.N;
  j["I"] = a.I;
  j["W"] = a.W;
  j["tile_area"] = a.tile_area;
  j["ffs_per_ble"] = a.ffs_per_ble;
  j["hard_adder_bits_per_ble"] = a.hard_adder_bits_per_ble;
  j["t_lut_ps"] = a.t_lut_ps;
  j["t_route_ps"] = a.t_route_ps;
  j["t_carry_ps"] = a.t_carry_ps;
  return j.dump();
}

int lut_count(int fanin, int K) {
  if (fanin <= 0) return 0;
  if (fanin <= K) return 1;
  return (fanin - 1 + K - 2) / (K - 1);
}

int lut_levels(int fanin, int K) {
  int levels = 1;
  for (long long reach = K; reach < fanin; reach *= K) ++levels;
  return fanin <= 0 ? 0 : levels;
}

BleNetlist decompose(const DataflowGraph& graph, const ArchParams& arch) { return Mapper(graph, arch).run(); }

Packing pack(const BleNetlist& nl, const ArchParams& arch) {
  const NetIndex idx(nl);
  const std::size_t count = nl.bles.size();
  Packing p;
  p.lb_of.assign(count, kNoBle);
  std::vector<std::uint32_t> carry_next(count, kNoBle);
  for (std::uint32_t b = 0; b < count; ++b) {
    if (nl.bles[b].carry_from != kNoBle) carry_next[nl.bles[b].carry_from] = b;
  }

  std::uint32_t lb = 0;
  std::uint32_t cursor = 0;
  std::vector<std::uint32_t> ext;         // external input nets of the open LB
  std::vector<std::uint32_t> members;
  std::unordered_map<std::uint32_t, int> gain;
  std::vector<std::uint32_t> rejected;

  auto driven_inside = [&](std::uint32_t net) {
    const auto d = idx.driver[net];
    return d != kNoBle && p.lb_of[d] == lb;
  };
  auto in_ext = [&](std::uint32_t net) { return std::find(ext.begin(), ext.end(), net) != ext.end(); };
  auto inputs_after = [&](std::uint32_t c) {
    int n = static_cast<int>(ext.size());
    const auto& outs = idx.ble_out[c];
    for (auto net : idx.ble_in[c]) {
      if (!in_ext(net) && !driven_inside(net) && std::find(outs.begin(), outs.end(), net) == outs.end()) ++n;
    }
    for (auto net : outs) {
      if (in_ext(net)) --n;
    }
    return n;
  };
  auto place = [&](std::uint32_t c) {
    p.lb_of[c] = lb;
    members.push_back(c);
    const auto& outs = idx.ble_out[c];
    std::erase_if(ext, [&](std::uint32_t net) { return std::find(outs.begin(), outs.end(), net) != outs.end(); });
    for (auto net : idx.ble_in[c]) {
      if (!in_ext(net) && !driven_inside(net)) ext.push_back(net);
    }
    gain.erase(c);
    auto bump = [&](std::uint32_t net) {
      const auto& s = idx.sinks[net];
      if (s.size() + 1 > kGainFanoutLimit) return;
      const auto d = idx.driver[net];
      if (d != kNoBle && p.lb_of[d] == kNoBle) ++gain[d];
      for (auto o : s) {
        if (p.lb_of[o] == kNoBle) ++gain[o];
      }
    };
    for (auto net : idx.ble_in[c]) bump(net);
    for (auto net : outs) bump(net);
    if (carry_next[c] != kNoBle && p.lb_of[carry_next[c]] == kNoBle) ++gain[carry_next[c]];
  };

  for (;;) {
    while (cursor < count && p.lb_of[cursor] != kNoBle) ++cursor;
    if (cursor == count) break;
    ext.clear();
    members.clear();
    gain.clear();
    rejected.clear();
    place(cursor);
    while (members.size() < static_cast<std::size_t>(arch.N)) {
      std::uint32_t pick = kNoBle;
      for (;;) {
        std::uint32_t best = kNoBle;
        int best_gain = 0;
        for (const auto& [c, g] : gain) {
          if (g > best_gain || (g == best_gain && c < best)) {
            best = c;
            best_gain = g;
          }
        }
        if (best == kNoBle) break;
        if (inputs_after(best) <= arch.I) {
          pick = best;
          break;
        }
        gain.erase(best);
        rejected.push_back(best);
      }
      if (pick == kNoBle) {
        std::uint32_t next = cursor;
        while (next < count && p.lb_of[next] != kNoBle) ++next;
        if (next < count && inputs_after(next) <= arch.I) pick = next;
      }
      if (pick == kNoBle) break;
      place(pick);
    }
    p.max_inputs_used = std::max(p.max_inputs_used, static_cast<int>(ext.size()));
    ++lb;
  }
  p.lb_count = lb;
  return p;
}

bool check_packing(const BleNetlist& nl, const Packing& packing, const ArchParams& arch, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (packing.lb_of.size() != nl.bles.size()) return fail("packing does not cover the netlist");
  const NetIndex idx(nl);
  std::vector<std::vector<std::uint32_t>> lbs(packing.lb_count);
  for (std::uint32_t b = 0; b < nl.bles.size(); ++b) {
    if (packing.lb_of[b] >= packing.lb_count) return fail("BLE " + std::to_string(b) + " is unplaced");
    lbs[packing.lb_of[b]].push_back(b);
  }
  for (std::size_t l = 0; l < lbs.size(); ++l) {
    if (lbs[l].size() > static_cast<std::size_t>(arch.N)) {
      return fail("LB " + std::to_string(l) + " holds " + std::to_string(lbs[l].size()) + " BLEs");
    }
    std::vector<std::uint32_t> ext;
    for (auto b : lbs[l]) {
      for (auto net : idx.ble_in[b]) {
        const auto d = idx.driver[net];
        if (d == kNoBle || packing.lb_of[d] != l) ext.push_back(net);
      }
    }
    std::sort(ext.begin(), ext.end());
    ext.erase(std::unique(ext.begin(), ext.end()), ext.end());
    if (ext.size() > static_cast<std::size_t>(arch.I)) {
      return fail("LB " + std::to_string(l) + " uses " + std::to_string(ext.size()) + " input pins");
    }
  }
  return true;
}

CostReport estimate(const DataflowGraph& graph, const ArchParams& arch) {
  const BleNetlist nl = decompose(graph, arch);
  const Packing p = pack(nl, arch);
  CostReport r;
  r.arch = arch.name;
  r.ble_count = nl.bles.size();
  r.arithmetic_bles = nl.arithmetic_bles;
  r.logic_bles = nl.logic_bles;
  r.storage_bles = nl.storage_bles;
  r.lb_count = p.lb_count;
  r.max_lb_inputs = p.max_inputs_used;
  r.logic_area_um2 = static_cast<double>(p.lb_count) * arch.tile_area;
  r.memory_bits = nl.memory_bits;
  r.critical_path_ns = nl.critical_path_ps / 1000.0;
  r.fmax_mhz = r.critical_path_ns > 0 ? 1000.0 / r.critical_path_ns : 0.0;
  r.adp = r.logic_area_um2 * r.critical_path_ns;
  double outputs = 1.0;
  for (int d : graph.meta.outputs_per_cycle) outputs *= d;
  r.ops_per_cycle = graph.meta.outputs_per_cycle.empty() ? 0.0 : outputs * graph.meta.reduction_length;
  return r;
}

std::string to_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["arch"] = r.arch;
  j["ble_count"] = r.ble_count;
  j["arithmetic_bles"] = r.arithmetic_bles;
  j["logic_bles"] = r.logic_bles;
  j["storage_bles"] = r.storage_bles;
  j["lb_count"] = r.lb_count;
  j["logic_area_um2"] = r.logic_area_um2;
  j["memory_bits"] = r.memory_bits;
  j["critical_path_ns"] = r.critical_path_ns;
  j["fmax_mhz"] = r.fmax_mhz;
  j["adp"] = r.adp;
  j["ops_per_cycle"] = r.ops_per_cycle;
  j["max_lb_inputs"] = r.max_lb_inputs;
  return j.dump(2);
}

std::string cost_csv_header() {
  return "arch,ble_count,arithmetic_bles,logic_bles,storage_bles,lb_count,logic_area_um2,memory_bits,"
         "critical_path_ns,fmax_mhz,adp,ops_per_cycle,max_lb_inputs";
}

std::string to_csv_row(const CostReport& r) {
  std::ostringstream os;
  os << std::setprecision(10) << r.arch << ',' << r.ble_count << ',' << r.arithmetic_bles << ',' << r.logic_bles
     << ',' << r.storage_bles << ',' << r.lb_count << ',' << r.logic_area_um2 << ',' << r.memory_bits << ','
     << r.critical_path_ns << ',' << r.fmax_mhz << ',' << r.adp << ',' << r.ops_per_cycle << ','
     << r.max_lb_inputs;
  return os.str();
}

std::vector<AdpEntry> adp_table(std::span<const CostReport> reports, std::span<const ArchParams> archs) {
  if (reports.size() != archs.size()) throw CostError("reports and architectures must be parallel");
  if (reports.size() < 2) throw CostError("ADP comparison needs at least two architectures");
  std::size_t anchor = reports.size() - 1;
  for (std::size_t i = 0; i < archs.size(); ++i) {
    if (archs[i].K == 6) anchor = i;
  }
  const double base = reports[anchor].adp;
  std::vector<AdpEntry> out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out.push_back({archs[i].name, archs[i].K, reports[i].adp, base > 0 ? reports[i].adp / base : 1.0});
  }
  return out;
}

}  // namespace unroll

#include "unroll/kernel.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "unroll/csd.hpp"

namespace unroll {

namespace {

constexpr std::pair<Family, std::string_view> kFamilies[] = {
    {Family::gemmt, "gemmt"}, {Family::gemms, "gemms"}, {Family::conv1d, "conv1d"}, {Family::conv2d, "conv2d"}};
constexpr std::pair<Unroll, std::string_view> kUnrolls[] = {
    {Unroll::pixelwise, "pixelwise"}, {Unroll::row_parallel, "row_parallel"}, {Unroll::fully_unrolled, "fully_unrolled"}};

/// Signed width needed to hold a node's value.
int signed_width(const Node& n) { return n.width + (n.is_signed ? 0 : 1); }

/// A product or partial sum whose true value is (negative ? -v : v), where v
/// is the value of node id. Carrying the sign lets subtractors absorb
/// negative CSD digits and negative weights without explicit negation.
struct Term {
  NodeId id = kNoNode;
  bool negative = false;
  bool empty() const { return id == kNoNode; }
};

class Builder {
 public:
  Builder(DataflowGraph& g, int bits, bool specialize, int product_width = 0)
      : g_(g), bits_(bits), product_width_(product_width > 0 ? product_width : 2 * bits),
        specialize_(specialize) {}

  NodeId input(int lane) {
    return g_.add(NodeKind::input_port, bits_, bits_ >= 2, {}, lane, "input");
  }

  NodeId constant(std::int64_t value, int width) {
    return g_.add(NodeKind::constant, width, true, {}, value, label_);
  }

  NodeId reg(NodeId src, bool window = false) {
    const Node& s = g_.node(src);
    Node r;
    r.kind = NodeKind::reg;
    r.width = s.width;
    r.is_signed = s.is_signed;
    r.operands = {src};
    r.known_zero_lsbs = s.known_zero_lsbs;
    r.window = window;
    r.label = label_;
    return g_.add(std::move(r));
  }

  Term reg(Term t) { return {reg(t.id), t.negative}; }

  Term reg(Term t, int width) {
    const Term r = reg(t);
    g_.node(r.id).width = std::max(g_.node(r.id).width, width);
    return r;
  }

  int product_width() const { return bits_ == 1 ? 1 : product_width_; }

  NodeId chain(NodeId src, int length) {
    const Node& s = g_.node(src);
    return g_.add(NodeKind::shift_register_chain, s.width, s.is_signed, {src}, length, label_);
  }

  /// Product of x with a fixed weight. Empty for pruned zero weights.
  Term multiply(NodeId x, std::int64_t weight) {
    if (!specialize_) {
      ++multipliers_;
      if (bits_ == 1) {
        const NodeId w = g_.add(NodeKind::constant, 1, false, {}, weight, label_);
        return {g_.add(NodeKind::and_gate, 1, false, {x, w}, 0, label_), false};
      }
      const NodeId w = constant(weight, bits_);
      return {g_.add(NodeKind::multiply, product_width_, true, {x, w}, 0, label_), false};
    }
    if (weight == 0) return {};
    ++multipliers_;
    std::vector<Term> terms;
    for (const CsdDigit& d : csd_digits(weight)) {
      terms.push_back({shift(x, d.position), d.sign < 0});
    }
    return tree(std::move(terms), product_width_);
  }

  /// Balanced binary tree over terms, pairing left to right level by level.
  Term tree(std::vector<Term> level, int cap) {
    std::erase_if(level, [](const Term& t) { return t.empty(); });
    if (level.empty()) return {};
    while (level.size() > 1) {
      std::vector<Term> next;
      for (std::size_t i = 0; i < level.size(); i += 2) {
        next.push_back(i + 1 < level.size() ? combine(level[i], level[i + 1], cap) : level[i]);
      }
      level = std::move(next);
    }
    return level.front();
  }

  Term combine(Term a, Term b, int cap) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    const Node& na = g_.node(a.id);
    const Node& nb = g_.node(b.id);
    const int width = std::min(std::max(signed_width(na), signed_width(nb)) + 1, cap);
    const int zeros = std::min(na.known_zero_lsbs, nb.known_zero_lsbs);
    NodeId out;
    bool negative = false;
    if (a.negative == b.negative) {
      out = g_.add(NodeKind::add, width, true, {a.id, b.id}, 0, label_);
      negative = a.negative;
    } else if (b.negative) {
      out = g_.add(NodeKind::sub, width, true, {a.id, b.id}, 0, label_);
    } else {
      out = g_.add(NodeKind::sub, width, true, {b.id, a.id}, 0, label_);
    }
    g_.node(out).known_zero_lsbs = zeros;
    return {out, negative};
  }

  /// Node holding the term's true value; negation if needed, constant 0 if empty.
  NodeId materialize(Term t, int cap) {
    if (t.empty()) return constant(0, 1);
    if (!t.negative) return t.id;
    const NodeId zero = constant(0, 1);
    const int width = std::min(signed_width(g_.node(t.id)) + 1, cap);
    return g_.add(NodeKind::sub, width, true, {zero, t.id}, 0, label_);
  }

  NodeId output(NodeId src, int lane, int group, int width) {
    Node o;
    o.kind = NodeKind::output_port;
    o.width = width;
    o.is_signed = true;
    o.operands = {src};
    o.param = lane;
    o.aux = group;
    o.label = "output";
    return g_.add(std::move(o));
  }

  void set_label(std::string label) { label_ = std::move(label); }
  std::size_t multipliers() const { return multipliers_; }

 private:
  NodeId shift(NodeId x, int amount) {
    if (amount == 0) return x;
    const Node& s = g_.node(x);
    Node n;
    n.kind = NodeKind::shift;
    n.width = std::min(s.width + amount, product_width_);
    n.is_signed = s.is_signed;
    n.operands = {x};
    n.param = amount;
    n.known_zero_lsbs = s.known_zero_lsbs + amount;
    n.label = label_;
    return g_.add(std::move(n));
  }

  DataflowGraph& g_;
  int bits_;
  int product_width_;
  bool specialize_;
  std::size_t multipliers_ = 0;
  std::string label_;
};

void check_weight_shape(const KernelConfig& cfg, const WeightTensor& w) {
  if (w.shape != cfg.weight_shape()) {
    throw ParameterError("weight tensor shape does not match kernel configuration");
  }
  if (w.bits != cfg.bits) throw ParameterError("weight precision does not match kernel configuration");
}

void finish_meta(DataflowGraph& g, const KernelConfig& cfg, const WeightTensor& w, std::size_t multipliers,
                 std::size_t duplication, std::vector<int> in_shape, std::vector<int> out_shape) {
  auto& m = g.meta;
  m.multiplier_count = multipliers;
  m.nnz_used = w.nnz();
  m.duplication_factor = duplication;
  m.inputs_per_cycle = std::move(in_shape);
  m.outputs_per_cycle = std::move(out_shape);
  m.input_bits = cfg.bits;
  m.output_width = accumulator_width(cfg.bits, cfg.reduction_length());
  m.reduction_length = cfg.reduction_length();
}

}  // namespace

std::string_view to_string(Family f) {
  for (const auto& [k, s] : kFamilies) {
    if (k == f) return s;
  }
  return "unknown";
}

std::string_view to_string(Unroll u) {
  for (const auto& [k, s] : kUnrolls) {
    if (k == u) return s;
  }
  return "unknown";
}

std::string_view unroll_tag(Unroll u) {
  switch (u) {
    case Unroll::pixelwise: return "PW";
    case Unroll::row_parallel: return "RP";
    case Unroll::fully_unrolled: return "FU";
  }
  return "??";
}

Family family_from_string(std::string_view s) {
  for (const auto& [k, name] : kFamilies) {
    if (name == s) return k;
  }
  throw ParameterError("unknown kernel family '" + std::string(s) + "'");
}

Unroll unroll_from_string(std::string_view s) {
  for (const auto& [k, name] : kUnrolls) {
    if (name == s) return k;
  }
  for (Unroll u : {Unroll::pixelwise, Unroll::row_parallel, Unroll::fully_unrolled}) {
    if (unroll_tag(u) == s) return u;
  }
  throw ParameterError("unknown unrolling factor '" + std::string(s) + "'");
}

int ceil_log2(std::uint64_t v) {
  int r = 0;
  while ((std::uint64_t{1} << r) < v) ++r;
  return r;
}

int accumulator_width(int bits, int reduction) {
  return 2 * bits + ceil_log2(static_cast<std::uint64_t>(std::max(reduction, 1)));
}

std::vector<std::pair<Family, Unroll>> kernel_pairs() {
  return {{Family::gemmt, Unroll::row_parallel},   {Family::gemmt, Unroll::fully_unrolled},
          {Family::gemms, Unroll::row_parallel},   {Family::conv1d, Unroll::pixelwise},
          {Family::conv1d, Unroll::fully_unrolled}, {Family::conv2d, Unroll::pixelwise},
          {Family::conv2d, Unroll::row_parallel},  {Family::conv2d, Unroll::fully_unrolled}};
}

std::vector<int> KernelConfig::weight_shape() const {
  if (is_gemm()) return {n, p};
  return {fw, fh, ic, oc};
}

std::vector<int> KernelConfig::input_shape() const {
  if (is_gemm()) return {m, n};
  return {iw, ih, ic};
}

std::vector<int> KernelConfig::output_shape() const {
  if (is_gemm()) return {m, p};
  return {ow(), oh(), oc};
}

int KernelConfig::reduction_length() const { return is_gemm() ? n : fw * fh * ic; }

void KernelConfig::validate() const {
  const auto pairs = kernel_pairs();
  if (std::find(pairs.begin(), pairs.end(), std::make_pair(family, unroll)) == pairs.end()) {
    throw ParameterError("unsupported kernel: " + std::string(to_string(family)) + " with " +
                         std::string(to_string(unroll)) + " unrolling");
  }
  if (bits < 1 || bits > kMaxPrecisionBits) throw ParameterError("precision_bits out of range");
  if (is_gemm()) {
    if (m < 1 || n < 1 || p < 1) throw ParameterError("GEMM dimensions must be >= 1");
    return;
  }
  if (iw < 1 || ih < 1 || ic < 1 || fw < 1 || fh < 1 || oc < 1) {
    throw ParameterError("convolution dimensions must be >= 1");
  }
  if (family == Family::conv1d && (ih != 1 || fh != 1)) {
    throw ParameterError("conv1d requires I_h = F_h = 1");
  }
  if (ow() < 1 || oh() < 1) throw ParameterError("convolution output dimensions must be >= 1");
}

std::string KernelConfig::describe() const {
  std::ostringstream os;
  os << to_string(family) << '-' << unroll_tag(unroll);
  if (is_gemm()) {
    os << " m=" << m << " n=" << n << " p=" << p;
  } else {
    os << " iw=" << iw << " ih=" << ih << " ic=" << ic << " fw=" << fw << " fh=" << fh << " oc=" << oc;
  }
  os << " bits=" << bits << " specialize=" << (specialize ? 1 : 0);
  return os.str();
}

DataflowGraph build_gemmt(const KernelConfig& cfg, const WeightTensor& weights) {
  cfg.validate();
  if (cfg.family != Family::gemmt) throw ParameterError("build_gemmt needs family gemmt");
  check_weight_shape(cfg, weights);
  const int rows = cfg.unroll == Unroll::fully_unrolled ? cfg.m : 1;
  const int width = accumulator_width(cfg.bits, cfg.n);

  DataflowGraph g;
  Builder b(g, cfg.bits, cfg.specialize);
  std::vector<NodeId> x(static_cast<std::size_t>(rows * cfg.n));
  for (int lane = 0; lane < rows * cfg.n; ++lane) x[lane] = b.input(lane);

  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < cfg.p; ++j) {
      b.set_label("tree row " + std::to_string(r) + " col " + std::to_string(j));
      std::vector<Term> leaves;
      for (int i = 0; i < cfg.n; ++i) {
        leaves.push_back(b.multiply(x[r * cfg.n + i], weights[static_cast<std::size_t>(i) * cfg.p + j]));
      }
      const NodeId root = b.materialize(b.tree(std::move(leaves), width), width);
      b.output(root, r * cfg.p + j, 0, width);
    }
  }
  finish_meta(g, cfg, weights, b.multipliers(), static_cast<std::size_t>(rows), {rows, cfg.n}, {rows, cfg.p});
  return pipeline(std::move(g));
}

DataflowGraph build_gemms(const KernelConfig& cfg, const WeightTensor& weights) {
  cfg.validate();
  if (cfg.family != Family::gemms) throw ParameterError("build_gemms needs family gemms");
  check_weight_shape(cfg, weights);
  const int width = accumulator_width(cfg.bits, cfg.n);

  DataflowGraph g;
  Builder b(g, cfg.bits, cfg.specialize);
  std::vector<Term> psum(static_cast<std::size_t>(cfg.p));
  for (int i = 0; i < cfg.n; ++i) {
    b.set_label("skew row " + std::to_string(i));
    NodeId xcur = b.input(i);
    if (i > 0) xcur = b.chain(xcur, i);
    for (int j = 0; j < cfg.p; ++j) {
      b.set_label("pe row " + std::to_string(i) + " col " + std::to_string(j));
      const Term product = b.multiply(xcur, weights[static_cast<std::size_t>(i) * cfg.p + j]);
      Term& acc = psum[static_cast<std::size_t>(j)];
      if (!product.empty()) {
        acc = b.reg(b.combine(acc, product, width));
      } else {
        // Pruned PE: the adder folds away, its partial-sum register stays at
        // the width a dense PE in this row would carry.
        const int dense_width = std::min(width, b.product_width() + i);
        acc = b.reg(acc.empty() ? Term{b.constant(0, 1), false} : acc, dense_width);
      }
      if (j + 1 < cfg.p) xcur = b.reg(xcur);
    }
  }
  for (int j = 0; j < cfg.p; ++j) {
    b.set_label("column " + std::to_string(j));
    b.output(b.materialize(psum[static_cast<std::size_t>(j)], width), j, j, width);
  }
  finish_meta(g, cfg, weights, b.multipliers(), 1, {1, cfg.n}, {1, cfg.p});
  return pipeline(std::move(g));
}

DataflowGraph build_conv(const KernelConfig& cfg, const WeightTensor& weights) {
  cfg.validate();
  if (cfg.is_gemm()) throw ParameterError("build_conv needs a convolution family");
  check_weight_shape(cfg, weights);
  const int width = accumulator_width(cfg.bits, cfg.reduction_length());
  const int ow = cfg.ow(), oh = cfg.oh();
  auto weight_at = [&](int fx, int fy, int c, int o) {
    return weights[((static_cast<std::size_t>(fx) * cfg.fh + fy) * cfg.ic + c) * cfg.oc + o];
  };

  DataflowGraph g;
  Builder b(g, cfg.bits, cfg.specialize);

  // One engine computes all output channels of one output pixel from a
  // source lookup (fx, fy, c) -> operand node.
  auto engine = [&](const std::string& name, int out_base, auto&& source) {
    for (int o = 0; o < cfg.oc; ++o) {
      b.set_label(name + " oc " + std::to_string(o));
      std::vector<Term> leaves;
      for (int fx = 0; fx < cfg.fw; ++fx) {
        for (int fy = 0; fy < cfg.fh; ++fy) {
          for (int c = 0; c < cfg.ic; ++c) {
            const std::int64_t w = weight_at(fx, fy, c, o);
            if (cfg.specialize && w == 0) continue;
            leaves.push_back(b.multiply(source(fx, fy, c), w));
          }
        }
      }
      const NodeId root = b.materialize(b.tree(std::move(leaves), width), width);
      b.output(root, out_base + o, 0, width);
    }
  };

  std::size_t duplication = 1;
  std::vector<int> in_shape, out_shape;
  switch (cfg.unroll) {
    case Unroll::pixelwise: {
      const int lanes = cfg.fw * cfg.fh * cfg.ic;
      const int pixels = ow * oh;
      b.set_label("line buffer");
      const NodeId addr = g.add(NodeKind::counter, std::max(1, ceil_log2(static_cast<std::uint64_t>(pixels))),
                                false, {}, pixels, "line buffer");
      std::vector<NodeId> window(static_cast<std::size_t>(lanes));
      for (int lane = 0; lane < lanes; ++lane) {
        const NodeId x = b.input(lane);
        const Node& xn = g.node(x);
        window[lane] = g.add(NodeKind::memory, xn.width, xn.is_signed, {x, addr}, pixels, "line buffer");
      }
      engine("pixel", 0, [&](int fx, int fy, int c) { return window[(fx * cfg.fh + fy) * cfg.ic + c]; });
      in_shape = {cfg.fw, cfg.fh, cfg.ic};
      out_shape = {1, 1, cfg.oc};
      break;
    }
    case Unroll::row_parallel: {
      // One input row per cycle; a shift-register network keeps the last
      // F_h rows so every engine sees an I_W x F_h x I_c window.
      std::vector<std::vector<NodeId>> taps(static_cast<std::size_t>(cfg.iw * cfg.ic));
      for (int lane = 0; lane < cfg.iw * cfg.ic; ++lane) {
        taps[lane].push_back(b.input(lane));
      }
      b.set_label("input shift network");
      for (auto& t : taps) {
        for (int d = 1; d < cfg.fh; ++d) t.push_back(b.reg(t.back(), true));
      }
      for (int ox = 0; ox < ow; ++ox) {
        engine("pixel ox " + std::to_string(ox), ox * cfg.oc, [&](int fx, int fy, int c) {
          return taps[(ox + fx) * cfg.ic + c][cfg.fh - 1 - fy];
        });
      }
      duplication = static_cast<std::size_t>(ow);
      g.meta.warmup_cycles = cfg.fh - 1;
      in_shape = {cfg.iw, cfg.fh, cfg.ic};
      out_shape = {ow, 1, cfg.oc};
      break;
    }
    case Unroll::fully_unrolled: {
      std::vector<NodeId> x(static_cast<std::size_t>(cfg.iw * cfg.ih * cfg.ic));
      for (int lane = 0; lane < static_cast<int>(x.size()); ++lane) x[lane] = b.input(lane);
      for (int ox = 0; ox < ow; ++ox) {
        for (int oy = 0; oy < oh; ++oy) {
          engine("pixel ox " + std::to_string(ox) + " oy " + std::to_string(oy), (ox * oh + oy) * cfg.oc,
                 [&](int fx, int fy, int c) { return x[((ox + fx) * cfg.ih + (oy + fy)) * cfg.ic + c]; });
        }
      }
      duplication = static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh);
      in_shape = {cfg.iw, cfg.ih, cfg.ic};
      out_shape = {ow, oh, cfg.oc};
      break;
    }
  }
  const int warmup = g.meta.warmup_cycles;
  finish_meta(g, cfg, weights, b.multipliers(), duplication, in_shape, out_shape);
  g.meta.warmup_cycles = warmup;
  return pipeline(std::move(g));
}

DataflowGraph build_kernel(const KernelConfig& cfg, const WeightTensor& weights) {
  switch (cfg.family) {
    case Family::gemmt: return build_gemmt(cfg, weights);
    case Family::gemms: return build_gemms(cfg, weights);
    default: return build_conv(cfg, weights);
  }
}

DataflowGraph specialize_multiplier(std::int64_t weight, int operand_width, int weight_bits) {
  if (!value_range(weight_bits).contains(weight)) {
    throw ParameterError("weight outside the representable range");
  }
  DataflowGraph g;
  const int product = operand_width + weight_bits;
  Builder b(g, operand_width, true, product);
  const NodeId x = b.input(0);
  b.set_label("multiplier");
  const NodeId out = b.materialize(b.multiply(x, weight), product);
  b.output(out, 0, 0, product);
  g.meta.multiplier_count = weight != 0;
  g.meta.input_bits = operand_width;
  g.meta.output_width = product;
  return g;
}

ThroughputContract throughput_contract(const DataflowGraph& graph) {
  ThroughputContract c;
  c.inputs_per_cycle = graph.meta.inputs_per_cycle;
  c.outputs_per_cycle = graph.meta.outputs_per_cycle;
  c.weight_duplication = graph.meta.duplication_factor;
  c.input_port_lanes = graph.inputs().size();
  c.output_port_lanes = graph.outputs().size();
  return c;
}

}  // namespace unroll

#include "unroll/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "unroll/rng.hpp"

namespace unroll {

namespace {

void check_bits(int bits) {
  if (bits < 1 || bits > kMaxPrecisionBits) {
    throw ParameterError("precision_bits must be in [1, " + std::to_string(kMaxPrecisionBits) +
                         "], got " + std::to_string(bits));
  }
}

void check_shape(std::span<const int> shape) {
  if (shape.empty()) throw ParameterError("tensor shape must have at least one extent");
  for (int e : shape) {
    if (e < 1) throw ParameterError("tensor extents must be >= 1");
  }
}

// Draw from the nonzero representable set.
std::int64_t draw_nonzero(Rng& rng, int bits) {
  if (bits == 1) return 1;
  const ValueRange r = value_range(bits);
  const std::int64_t v = r.lo + static_cast<std::int64_t>(rng.below(
                                    static_cast<std::uint64_t>(r.hi - r.lo)));
  return v >= 0 ? v + 1 : v;
}

void write_common(std::ostream& os, const char* kind, const IntTensor& t) {
  os << "tensor " << kind << "\nshape";
  for (int e : t.shape) os << ' ' << e;
  os << "\nbits " << t.bits << "\nseed " << t.seed << '\n';
}

void write_values(std::ostream& os, const IntTensor& t) {
  os << "values\n";
  const std::size_t row = t.shape.empty() ? t.size() : static_cast<std::size_t>(t.shape.back());
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << t.values[i] << ((i + 1) % row == 0 ? '\n' : ' ');
  }
}

struct Parsed {
  std::string kind;
  IntTensor tensor;
  double sparsity = 0.0;
};

Parsed parse(std::istream& is) {
  Parsed p;
  std::string line;
  bool in_values = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (in_values) {
      std::int64_t v;
      while (ls >> v) p.tensor.values.push_back(v);
      continue;
    }
    std::string key;
    ls >> key;
    if (key == "tensor") {
      ls >> p.kind;
    } else if (key == "shape") {
      int e;
      while (ls >> e) p.tensor.shape.push_back(e);
    } else if (key == "bits") {
      ls >> p.tensor.bits;
    } else if (key == "seed") {
      ls >> p.tensor.seed;
    } else if (key == "sparsity") {
      ls >> p.sparsity;
    } else if (key == "values") {
      in_values = true;
    } else {
      throw ParameterError("unknown tensor header key '" + key + "'");
    }
  }
  check_shape(p.tensor.shape);
  check_bits(p.tensor.bits);
  if (p.tensor.values.size() != element_count(p.tensor.shape)) {
    throw ParameterError("tensor value count does not match its shape");
  }
  return p;
}

}  // namespace

ValueRange value_range(int bits) {
  check_bits(bits);
  if (bits == 1) return {0, 1};
  const std::int64_t half = std::int64_t{1} << (bits - 1);
  return {-half, half - 1};
}

std::size_t IntTensor::zero_count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), 0));
}

std::size_t element_count(std::span<const int> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int e) { return a * static_cast<std::size_t>(e); });
}

std::size_t zero_target(double sparsity, std::size_t n) {
  // The epsilon absorbs binary representation error of grid values such as
  // 0.35 * 10 = 3.4999999999999996.
  const double z = std::floor(sparsity * static_cast<double>(n) + 0.5 + 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, z)));
}

WeightTensor generate_weights(std::span<const int> shape, double sparsity, int bits,
                              std::uint64_t seed) {
  check_shape(shape);
  check_bits(bits);
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ParameterError("sparsity must be in [0, 1]");
  }
  WeightTensor t;
  t.shape.assign(shape.begin(), shape.end());
  t.bits = bits;
  t.seed = seed;
  t.target_sparsity = sparsity;

  const std::size_t n = element_count(shape);
  // Values are drawn for every position so that zero sets are nested across
  // sparsities under one seed and surviving values never change.
  Rng values(seed, Stream::weight_values);
  t.values.resize(n);
  for (auto& v : t.values) v = draw_nonzero(values, bits);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng positions(seed, Stream::weight_positions);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[positions.below(i)]);
  }
  const std::size_t zeros = zero_target(sparsity, n);
  for (std::size_t i = 0; i < zeros; ++i) t.values[order[i]] = 0;
  return t;
}

InputStimulus generate_inputs(std::span<const int> shape, int bits, std::uint64_t seed) {
  check_shape(shape);
  const ValueRange r = value_range(bits);
  InputStimulus t;
  t.shape.assign(shape.begin(), shape.end());
  t.bits = bits;
  t.seed = seed;
  Rng rng(seed, Stream::inputs);
  t.values.resize(element_count(shape));
  for (auto& v : t.values) v = rng.between(r.lo, r.hi);
  return t;
}

std::vector<double> sparsity_grid() {
  std::vector<double> grid(10);
  for (int i = 0; i < 10; ++i) grid[i] = i / 10.0;
  return grid;
}

void write_tensor(std::ostream& os, const WeightTensor& t) {
  write_common(os, "weights", t);
  os << "sparsity " << t.target_sparsity << '\n';
  write_values(os, t);
}

void write_tensor(std::ostream& os, const InputStimulus& t) {
  write_common(os, "inputs", t);
  write_values(os, t);
}

WeightTensor read_weights(std::istream& is) {
  Parsed p = parse(is);
  if (p.kind != "weights") throw ParameterError("expected a weights tensor, got '" + p.kind + "'");
  WeightTensor t;
  static_cast<IntTensor&>(t) = std::move(p.tensor);
  t.target_sparsity = p.sparsity;
  return t;
}

InputStimulus read_inputs(std::istream& is) {
  Parsed p = parse(is);
  if (p.kind != "inputs") throw ParameterError("expected an inputs tensor, got '" + p.kind + "'");
  InputStimulus t;
  static_cast<IntTensor&>(t) = std::move(p.tensor);
  return t;
}

}  // namespace unroll

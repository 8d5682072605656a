#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace unroll {

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr int kMaxPrecisionBits = 16;

/// Inclusive representable range for a precision. b >= 2 is signed two's
/// complement; b == 1 is unsigned {0, 1}.
struct ValueRange {
  std::int64_t lo;
  std::int64_t hi;
  bool contains(std::int64_t v) const { return v >= lo && v <= hi; }
};

ValueRange value_range(int bits);

/// Dense integer tensor, row-major.
struct IntTensor {
  std::vector<int> shape;
  int bits = 8;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> values;

  std::size_t size() const { return values.size(); }
  std::size_t zero_count() const;
  std::size_t nnz() const { return size() - zero_count(); }
  std::int64_t& operator[](std::size_t i) { return values[i]; }
  std::int64_t operator[](std::size_t i) const { return values[i]; }
};

/// Fixed weights baked into a generated kernel. GEMM shape is n x p,
/// convolution is F_w x F_h x I_c x O_c.
struct WeightTensor : IntTensor {
  double target_sparsity = 0.0;
};

/// GEMM shape m x n, convolution I_W x I_h x I_c.
struct InputStimulus : IntTensor {};

std::size_t element_count(std::span<const int> shape);

/// Number of zeros for a sparsity over n elements (round half up).
std::size_t zero_target(double sparsity, std::size_t n);

WeightTensor generate_weights(std::span<const int> shape, double sparsity, int bits,
                              std::uint64_t seed);
InputStimulus generate_inputs(std::span<const int> shape, int bits, std::uint64_t seed);

/// The evaluation sparsity grid: 0.0, 0.1, ..., 0.9.
std::vector<double> sparsity_grid();

// Text format:
//   tensor <kind>
//   shape <e0> <e1> ...
//   bits <b>
//   seed <s>
//   sparsity <s>          (weights only)
//   values
//   <one row of the last extent per line>
void write_tensor(std::ostream& os, const WeightTensor& t);
void write_tensor(std::ostream& os, const InputStimulus& t);
WeightTensor read_weights(std::istream& is);
InputStimulus read_inputs(std::istream& is);

}  // namespace unroll

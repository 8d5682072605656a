#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace unroll {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using IntMatrix = RowMatrix<std::int64_t>;

/// Exact integer GEMM: (m x n) * (n x p). Accumulates in Scalar; int64 is
/// exact for every precision and shape this toolkit accepts.
template <typename Derived, typename OtherDerived>
RowMatrix<typename Derived::Scalar> golden_gemm(const Eigen::MatrixBase<Derived>& x,
                                                const Eigen::MatrixBase<OtherDerived>& w) {
  if (x.cols() != w.rows()) throw std::invalid_argument("golden_gemm: inner dimensions differ");
  return x * w;
}

/// Convolution geometry; stride 1, no padding.
struct ConvShape {
  int iw, ih, ic;
  int fw, fh, oc;
  int ow() const { return iw - fw + 1; }
  int oh() const { return ih - fh + 1; }
};

/// Cross-correlation, channel-summed. x is I_W x I_h x I_c and f is
/// F_w x F_h x I_c x O_c, both row-major flat; the result is O_w x O_h x O_c.
/// Computed as an im2col matrix times the filter matrix.
std::vector<std::int64_t> golden_conv(std::span<const std::int64_t> x, std::span<const std::int64_t> f,
                                      const ConvShape& shape);

/// Flat row-major views as matrices.
IntMatrix as_matrix(std::span<const std::int64_t> flat, int rows, int cols);
std::vector<std::int64_t> flatten(const IntMatrix& m);

}  // namespace unroll

#include "unroll/golden.hpp"

namespace unroll {

IntMatrix as_matrix(std::span<const std::int64_t> flat, int rows, int cols) {
  if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw std::invalid_argument("as_matrix: element count does not match shape");
  }
  return Eigen::Map<const IntMatrix>(flat.data(), rows, cols);
}

std::vector<std::int64_t> flatten(const IntMatrix& m) {
  return std::vector<std::int64_t>(m.data(), m.data() + m.size());
}

std::vector<std::int64_t> golden_conv(std::span<const std::int64_t> x, std::span<const std::int64_t> f,
                                      const ConvShape& s) {
  if (s.ow() < 1 || s.oh() < 1) throw std::invalid_argument("golden_conv: empty output");
  const std::size_t taps = static_cast<std::size_t>(s.fw) * s.fh * s.ic;
  if (x.size() != static_cast<std::size_t>(s.iw) * s.ih * s.ic || f.size() != taps * s.oc) {
    throw std::invalid_argument("golden_conv: tensor sizes do not match shape");
  }
  const int pixels = s.ow() * s.oh();
  // Row (ox, oy), column (fx, fy, c): the input window feeding one output pixel.
  IntMatrix patches(pixels, static_cast<Eigen::Index>(taps));
  for (int ox = 0; ox < s.ow(); ++ox) {
    for (int oy = 0; oy < s.oh(); ++oy) {
      const int row = ox * s.oh() + oy;
      for (int fx = 0; fx < s.fw; ++fx) {
        for (int fy = 0; fy < s.fh; ++fy) {
          const std::size_t src = (static_cast<std::size_t>(ox + fx) * s.ih + (oy + fy)) * s.ic;
          const std::size_t col = (static_cast<std::size_t>(fx) * s.fh + fy) * s.ic;
          patches.row(row).segment(static_cast<Eigen::Index>(col), s.ic) =
              Eigen::Map<const Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic>>(x.data() + src, s.ic);
        }
      }
    }
  }
  const IntMatrix filters = as_matrix(f, static_cast<int>(taps), s.oc);
  return flatten(golden_gemm(patches, filters));
}

}  // namespace unroll

#include "unroll/csd.hpp"

namespace unroll {

std::vector<CsdDigit> csd_digits(std::int64_t value) {
  std::vector<CsdDigit> digits;
  const bool negative = value < 0;
  // Magnitude as unsigned so INT64_MIN does not overflow.
  std::uint64_t v = negative ? ~static_cast<std::uint64_t>(value) + 1 : static_cast<std::uint64_t>(value);
  int position = 0;
  while (v != 0) {
    if (v & 1u) {
      // v mod 4 == 1 -> digit +1, v mod 4 == 3 -> digit -1
      const int d = (v & 3u) == 1u ? 1 : -1;
      digits.push_back({position, negative ? -d : d});
      if (d == 1) {
        v -= 1;
      } else {
        v += 1;
      }
    }
    v >>= 1;
    ++position;
  }
  return digits;
}

std::int64_t csd_value(const std::vector<CsdDigit>& digits) {
  std::int64_t v = 0;
  for (const auto& d : digits) v += d.sign * (std::int64_t{1} << d.position);
  return v;
}

}  // namespace unroll

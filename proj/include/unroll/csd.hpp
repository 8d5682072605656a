#pragma once

#include <cstdint>
#include <vector>

namespace unroll {

struct CsdDigit {
  int position;  // weight 2^position
  int sign;      // +1 or -1
};

/// Canonical signed digit (non-adjacent form) recoding, nonzero digits only,
/// least significant first. No two returned digits occupy adjacent
/// positions, and the digit count is minimal over all signed-digit forms.
std::vector<CsdDigit> csd_digits(std::int64_t value);

std::int64_t csd_value(const std::vector<CsdDigit>& digits);

}  // namespace unroll

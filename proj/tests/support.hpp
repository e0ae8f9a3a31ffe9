#pragma once

#include <cmath>
#include <cstdint>

namespace qkdnet::testing {

// k standard deviations of a binomial proportion.
inline double binomial_band(double p, std::uint64_t n, double k = 3.0) {
  return k * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// Reference binary entropy, written out independently of the library.
inline double entropy_oracle(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) / std::log(2.0) - (1.0 - p) * std::log(1.0 - p) / std::log(2.0);
}

}  // namespace qkdnet::testing

#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace adams {

// log(1 + e^z) without overflow. beta = 50 pushes exponents to +-100,
// so the naive form overflows long before the value does.
inline double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

// e^z / (1 + e^z), evaluated on the side that cannot overflow.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + sum_j e^{z_j}) via max-shift; the implicit 1 is treated as an
// extra element with exponent 0.
inline double log1p_sum_exp(std::span<const double> z) {
  double m = 0.0;
  for (double zi : z) m = std::max(m, zi);
  double s = std::exp(-m);
  for (double zi : z) s += std::exp(zi - m);
  return m + std::log(s);
}

}  // namespace adams

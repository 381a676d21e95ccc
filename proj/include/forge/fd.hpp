#pragma once

#include <span>
#include <vector>

namespace forge::fd {

// Fornberg weights: coefficients of the m-th derivative at x0 from the
// nodes x (any spacing). Classic recursion, no pivoting needed.
std::vector<double> weights(double x0, std::span<const double> x, int order);

// 4th-order central second derivative with uniform step h, values must be
// f(x-2h..x+2h).
inline double d2_central4(const double f[5], double h) {
  return (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) /
         (12.0 * h * h);
}

inline double d1_central4(const double f[5], double h) {
  return (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h);
}

}  // namespace forge::fd

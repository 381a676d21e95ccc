#include "forge/fd.hpp"

#include <cstddef>

namespace forge::fd {

std::vector<double> weights(double x0, std::span<const double> x, int order) {
  const int n = static_cast<int>(x.size());
  const int m = order;
  // c[j*(m+1)+k] = weight of node j for derivative k
  std::vector<double> c(static_cast<std::size_t>(n) * (m + 1), 0.0);
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[static_cast<std::size_t>(i) * (m + 1) + k] =
              c1 *
              (k * c[static_cast<std::size_t>(i - 1) * (m + 1) + k - 1] -
               c5 * c[static_cast<std::size_t>(i - 1) * (m + 1) + k]) /
              c2;
        c[static_cast<std::size_t>(i) * (m + 1)] =
            -c1 * c5 * c[static_cast<std::size_t>(i - 1) * (m + 1)] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[static_cast<std::size_t>(j) * (m + 1) + k] =
            (c4 * c[static_cast<std::size_t>(j) * (m + 1) + k] -
             k * c[static_cast<std::size_t>(j) * (m + 1) + k - 1]) /
            c3;
      c[static_cast<std::size_t>(j) * (m + 1)] =
          c4 * c[static_cast<std::size_t>(j) * (m + 1)] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j)
    w[j] = c[static_cast<std::size_t>(j) * (m + 1) + m];
  return w;
}

}  // namespace forge::fd

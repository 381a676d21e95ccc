#include "forge/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace forge::fit {

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("least_squares: need >= 2 matched samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  const double det = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

LineFit fit_rate(std::span<const double> gap, std::span<const double> values) {
  if (gap.size() < 10)
    throw std::invalid_argument("fit_rate: need >= 10 samples");
  std::vector<double> lx(gap.size()), ly(gap.size());
  for (std::size_t i = 0; i < gap.size(); ++i) {
    if (!(values[i] > 0.0) || !(gap[i] > 0.0))
      throw std::domain_error("fit_rate: samples must be positive");
    lx[i] = std::log(gap[i]);
    ly[i] = std::log(values[i]);
  }
  const double decades =
      (*std::max_element(lx.begin(), lx.end()) -
       *std::min_element(lx.begin(), lx.end())) / std::log(10.0);
  if (decades < 2.0)
    throw std::invalid_argument("fit_rate: samples must span >= 2 decades");
  return least_squares(lx, ly);
}

LineFit fit_exp_decay(std::span<const double> tau,
                      std::span<const double> values) {
  std::vector<double> ly(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0))
      throw std::domain_error("fit_exp_decay: values must be positive");
    ly[i] = std::log(values[i]);
  }
  LineFit f = least_squares(tau, ly);
  f.slope = -f.slope;  // report the decay exponent as positive
  return f;
}

}  // namespace forge::fit

#pragma once

#include <span>
#include <vector>

namespace forge::fit {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of log residuals
};

// Least-squares line through (x_i, y_i).
LineFit least_squares(std::span<const double> x, std::span<const double> y);

// Least-squares line in log-log coordinates for a positive series sampled
// against T - t: log(value) vs log(T - t). Throws on non-positive samples.
LineFit fit_rate(std::span<const double> t_minus_T_gap,
                 std::span<const double> values);

// Fitted exponent c of value ~ A e^{-c tau}.
LineFit fit_exp_decay(std::span<const double> tau,
                      std::span<const double> values);

}  // namespace forge::fit

#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "forge/grid.hpp"

namespace forge::bubble {

// Dimension and exponent are fixed by the setting: n = 5, p = 7/3.
inline constexpr int kDim = 5;
inline constexpr double kP = 7.0 / 3.0;
// alpha_5 = (n(n-2))^{(n-2)/4} = 15^{3/4}
inline constexpr double kAlpha = 7.6219912223192210442;  // 15^(3/4)

struct BubbleShape {
  int n = kDim;
  double p = kP;
  double alpha = kAlpha;
};

struct BubbleState {
  double lambda = 1.0;
  std::array<double, 5> xi{};
};

// U(y) = alpha (1+|y|^2)^{-3/2}
inline double U_radial(double r) {
  const double q = 1.0 + r * r;
  return kAlpha / (q * std::sqrt(q));
}

// U'(r) = -3 alpha r (1+r^2)^{-5/2}
inline double dU_radial(double r) {
  const double q = 1.0 + r * r;
  return -3.0 * kAlpha * r / (q * q * std::sqrt(q));
}

// U^p = alpha^p (1+r^2)^{-7/2}
inline double U_pow_p(double r) {
  const double q = 1.0 + r * r;
  return std::pow(kAlpha, kP) / (q * q * q * std::sqrt(q));
}

// p U^{p-1} = 35 (1+r^2)^{-2}; the potential of L0.
inline double pUpm1(double r) {
  const double q = 1.0 + r * r;
  return 35.0 / (q * q);
}

// W6 = (3/2)U + y.grad U = (3/2) alpha (1-r^2)(1+r^2)^{-5/2}
inline double W6_radial(double r) {
  const double q = 1.0 + r * r;
  return 1.5 * kAlpha * (1.0 - r * r) / (q * q * std::sqrt(q));
}

// Radial part of W_j (j=1..5): W_j(y) = w1(|y|) * y_j/|y|,
// w1(r) = dU/dr = -3 alpha r (1+r^2)^{-5/2}.
inline double W1_radial(double r) { return dU_radial(r); }

double eval_bubble(const std::array<double, 5>& x, const BubbleState& state);

// W_j(y): j in 1..5 translation kernels, j = 6 dilation kernel.
double eval_kernel(int j, const std::array<double, 5>& y);

// Mode-l action of L0 = d_rr + (4/r) d_r - l(l+3)/r^2 + p U^{p-1} on a
// closed-form radial function, by 4th-order central differences with
// uniform step h. At r = 0 the l = 0 Laplacian is the regularized 5 u''(0).
double apply_L0_fn(const std::function<double(double)>& f, double r, int l,
                   double h);

// Same action on a sampled profile, 5-point Fornberg stencils on the
// profile's own grid.
RadialProfile apply_L0(const RadialProfile& profile, int l);

struct NegativeMode {
  double lambda0;      // the negative eigenvalue (lambda0 < 0)
  RadialProfile w0;    // normalized with W0(0) = 1
};

// Two-sided shooting for the single decaying mode of L0:
// (d_rr + 4/r d_r + pU^{p-1}) W0 = -lambda0 W0, W0(0)=1, W0'(0)=0.
NegativeMode solve_negative_mode(double r_max, double tol);

}  // namespace forge::bubble

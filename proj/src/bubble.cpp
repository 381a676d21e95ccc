#include "forge/bubble.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "forge/fd.hpp"

namespace forge::bubble {

double eval_bubble(const std::array<double, 5>& x, const BubbleState& state) {
  if (!(state.lambda > 0.0))
    throw std::domain_error("eval_bubble: lambda must be positive");
  double r2 = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double d = (x[i] - state.xi[i]) / state.lambda;
    r2 += d * d;
  }
  return std::pow(state.lambda, -1.5) * U_radial(std::sqrt(r2));
}

double eval_kernel(int j, const std::array<double, 5>& y) {
  double r2 = 0.0;
  for (int i = 0; i < 5; ++i) r2 += y[i] * y[i];
  const double r = std::sqrt(r2);
  if (j >= 1 && j <= 5) {
    // dU/dy_j = U'(r) y_j / r; smooth through the origin.
    const double q = 1.0 + r2;
    return -3.0 * kAlpha * y[j - 1] / (q * q * std::sqrt(q));
  }
  if (j == 6) return W6_radial(r);
  throw std::domain_error("eval_kernel: j must be in 1..6");
}

double apply_L0_fn(const std::function<double(double)>& f, double r, int l,
                   double h) {
  double fs[5];
  if (l == 0 && r < 2.0 * h) {
    // Even extension through 0; regularized Laplacian 5 f''(0) at the origin.
    if (r == 0.0) {
      for (int k = -2; k <= 2; ++k) fs[k + 2] = f(std::fabs(k * h));
      return 5.0 * fd::d2_central4(fs, h) + pUpm1(0.0) * f(0.0);
    }
    for (int k = -2; k <= 2; ++k) fs[k + 2] = f(std::fabs(r + k * h));
    double d2 = fd::d2_central4(fs, h);
    double fe[5];
    for (int k = -2; k <= 2; ++k) {
      const double rr = r + k * h;
      fe[k + 2] = (rr < 0 ? f(-rr) : f(rr));
    }
    double d1 = fd::d1_central4(fe, h);
    return d2 + 4.0 / r * d1 + pUpm1(r) * f(r);
  }
  if (l == 1 && r < 2.0 * h) {
    // Odd extension; the centrifugal term needs r > 0.
    if (r == 0.0) return 0.0;
    for (int k = -2; k <= 2; ++k) {
      const double rr = r + k * h;
      fs[k + 2] = (rr < 0 ? -f(-rr) : f(rr));
    }
    const double d2 = fd::d2_central4(fs, h);
    const double d1 = fd::d1_central4(fs, h);
    return d2 + 4.0 / r * d1 - 4.0 / (r * r) * f(r) + pUpm1(r) * f(r);
  }
  for (int k = -2; k <= 2; ++k) fs[k + 2] = f(r + k * h);
  const double d2 = fd::d2_central4(fs, h);
  const double d1 = fd::d1_central4(fs, h);
  const double cent = (l == 0) ? 0.0 : l * (l + 3.0) / (r * r) * f(r);
  return d2 + 4.0 / r * d1 - cent + pUpm1(r) * f(r);
}

RadialProfile apply_L0(const RadialProfile& profile, int l) {
  const auto& x = profile.grid().nodes();
  const auto& v = profile.values();
  const std::size_t n = x.size();
  if (n < 6) throw std::runtime_error("apply_L0: grid too coarse for 5-point stencils");
  if (l == 1 && v.front() != 0.0)
    throw std::invalid_argument("apply_L0: l=1 profile must vanish at r=0");
  std::vector<double> out(n);
  const double parity = (l == 0) ? 1.0 : -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = 0.0, d1 = 0.0;
    if (i < 2 && x.front() == 0.0) {
      // Parity extension through the origin keeps the stencil centered.
      const double xs[5] = {-x[2], -x[1], x[0], x[1], x[2]};
      const double vs[5] = {parity * v[2], parity * v[1], v[0], v[1], v[2]};
      auto w2 = fd::weights(x[i], std::span<const double>(xs, 5), 2);
      auto w1 = fd::weights(x[i], std::span<const double>(xs, 5), 1);
      for (int k = 0; k < 5; ++k) {
        d2 += w2[k] * vs[k];
        d1 += w1[k] * vs[k];
      }
    } else {
      std::size_t s = (i < 2) ? 0 : (i + 2 >= n ? n - 5 : i - 2);
      std::span<const double> nodes(&x[s], 5);
      auto w2 = fd::weights(x[i], nodes, 2);
      auto w1 = fd::weights(x[i], nodes, 1);
      for (int k = 0; k < 5; ++k) {
        d2 += w2[k] * v[s + k];
        d1 += w1[k] * v[s + k];
      }
    }
    const double r = x[i];
    if (r == 0.0) {
      out[i] = (l == 0) ? 5.0 * d2 + pUpm1(0.0) * v[i] : 0.0;
    } else {
      const double cent = (l == 0) ? 0.0 : l * (l + 3.0) / (r * r) * v[i];
      out[i] = d2 + 4.0 / r * d1 - cent + pUpm1(r) * v[i];
    }
  }
  return RadialProfile(profile.grid(), std::move(out));
}

namespace {

struct ShootState {
  double w, dw;
};

// RK4 for w'' + (4/r) w' + (pU^{p-1} - mu) w = 0.
ShootState rk4_span(double mu, double r0, double r1, ShootState y, int steps) {
  auto rhs = [mu](double r, const ShootState& s) {
    return ShootState{s.dw, -4.0 / r * s.dw - (pUpm1(r) - mu) * s.w};
  };
  const double h = (r1 - r0) / steps;
  double r = r0;
  for (int i = 0; i < steps; ++i) {
    const ShootState k1 = rhs(r, y);
    const ShootState k2 = rhs(r + 0.5 * h, {y.w + 0.5 * h * k1.w, y.dw + 0.5 * h * k1.dw});
    const ShootState k3 = rhs(r + 0.5 * h, {y.w + 0.5 * h * k2.w, y.dw + 0.5 * h * k2.dw});
    const ShootState k4 = rhs(r + h, {y.w + h * k3.w, y.dw + h * k3.dw});
    y.w += h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
    y.dw += h / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
    r += h;
  }
  return y;
}

ShootState outward(double mu, double r_match, int steps_per_unit) {
  // Series start: w = 1 + c r^2, 10 c + V(0) = mu.
  const double r0 = 1e-6;
  const double c = (mu - pUpm1(0.0)) / 10.0;
  ShootState y{1.0 + c * r0 * r0, 2.0 * c * r0};
  return rk4_span(mu, r0, r_match, y, static_cast<int>(r_match * steps_per_unit));
}

ShootState inward(double mu, double r_max, double r_match, int steps_per_unit) {
  // Asymptotic seed w ~ r^{-2} e^{-sqrt(mu) r}.
  const double s = std::sqrt(mu);
  const double w = std::exp(-s * r_max) / (r_max * r_max);
  ShootState y{w, (-s - 2.0 / r_max) * w};
  return rk4_span(mu, r_max, r_match,
                  y, static_cast<int>((r_max - r_match) * steps_per_unit));
}

// Wronskian of the outward and inward solutions at r_match.  Vanishes at an
// eigenvalue and, unlike a log-derivative mismatch, changes sign across it
// even though the outward solution itself flips sign there.
double wronskian_mismatch(double mu, double r_max, double r_match, int spu) {
  const ShootState o = outward(mu, r_match, spu);
  const ShootState i = inward(mu, r_max, r_match, spu);
  const double a = o.w * i.dw, b = o.dw * i.w;
  return (a - b) / (std::fabs(a) + std::fabs(b));
}

}  // namespace

NegativeMode solve_negative_mode(double r_max, double tol) {
  if (r_max < 30.0) throw std::domain_error("solve_negative_mode: r_max >= 30 required");
  if (tol < 1e-15) tol = 1e-15;
  const double r_match = 4.0;
  const int spu = 400;  // RK4 steps per unit radius

  // Bracket the first root of the log-derivative mismatch.
  double lo = 0.5, hi = 0.0;
  double f_lo = wronskian_mismatch(lo, r_max, r_match, spu);
  bool found = false;
  for (double mu = 1.0; mu <= 34.0; mu += 0.5) {
    const double f = wronskian_mismatch(mu, r_max, r_match, spu);
    if (std::isfinite(f) && std::isfinite(f_lo) && f * f_lo < 0.0) {
      hi = mu;
      found = true;
      break;
    }
    lo = mu;
    f_lo = f;
  }
  if (!found)
    throw std::runtime_error(
        "solve_negative_mode: no Wronskian sign change bracketing an eigenvalue in (0.5, 34)");

  for (int it = 0; it < 200 && hi - lo > tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = wronskian_mismatch(mid, r_max, r_match, spu);
    if (f * f_lo < 0.0)
      hi = mid;
    else {
      lo = mid;
      f_lo = f;
    }
  }
  const double mu = 0.5 * (lo + hi);

  // Assemble the profile: outward on [0, r_match], inward beyond, matched by
  // value at r_match; normalization W0(0) = 1 holds by the outward seed.
  RadialGrid grid = RadialGrid::graded(r_max, 2500);
  std::vector<double> vals(grid.size(), 0.0);
  const ShootState om = outward(mu, r_match, spu);
  const ShootState im = inward(mu, r_max, r_match, spu);
  const double scale_in = om.w / im.w;

  {  // one outward sweep recording grid nodes up to r_match
    const double r0 = 1e-6;
    const double c = (mu - pUpm1(0.0)) / 10.0;
    ShootState y{1.0 + c * r0 * r0, 2.0 * c * r0};
    double r = r0;
    for (std::size_t i = 0; i < grid.size() && grid[i] <= r_match; ++i) {
      if (grid[i] < r) {
        vals[i] = 1.0;  // below the series start
        continue;
      }
      const int steps = std::max(4, static_cast<int>((grid[i] - r) * spu) + 1);
      y = rk4_span(mu, r, grid[i], y, steps);
      r = grid[i];
      vals[i] = y.w;
    }
  }
  {  // one inward sweep from r_max down to r_match
    const double s = std::sqrt(mu);
    const double w = std::exp(-s * r_max) / (r_max * r_max);
    ShootState y{w, (-s - 2.0 / r_max) * w};
    double r = r_max;
    for (std::size_t k = grid.size(); k-- > 0;) {
      if (grid[k] <= r_match) break;
      const int steps = std::max(4, static_cast<int>((r - grid[k]) * spu) + 1);
      y = rk4_span(mu, r, grid[k], y, steps);
      r = grid[k];
      vals[k] = scale_in * y.w;
    }
  }
  return NegativeMode{-mu, RadialProfile(std::move(grid), std::move(vals))};
}

}  // namespace forge::bubble

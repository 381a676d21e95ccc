#include "forge/inner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forge/ansatz.hpp"
#include "forge/quadrature.hpp"

namespace forge::inner {

namespace {

// Two-pass adaptive: rough absolute pass to find the scale, then a relative
// refinement; fixed absolute tolerances bottom out on badly scaled data.
double two_pass(const std::function<double(double)>& f, double a, double b,
                double rel) {
  quad::QuadratureSpec spec;
  spec.abs_tol = 1e-6;
  // scale from the integral of |f|: the signed integral can vanish by
  // cancellation, which would make a relative target unreachable
  const double scale =
      quad::adaptive([&f](double r) { return std::fabs(f(r)); }, a, b, spec);
  spec.abs_tol = rel * (1e-300 + scale);
  return quad::adaptive(f, a, b, spec);
}

double mode_kernel(int l, double r) {
  return (l == 0) ? bubble::W6_radial(r) : bubble::W1_radial(r);
}

// Solve the tridiagonal system in place (Thomas); diag/rhs are clobbered.
void thomas(std::vector<double>& sub, std::vector<double>& diag,
            std::vector<double>& sup, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t j = 1; j < n; ++j) {
    const double m = sub[j] / diag[j - 1];
    diag[j] -= m * sup[j - 1];
    rhs[j] -= m * rhs[j - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t j = n - 1; j-- > 0;)
    rhs[j] = (rhs[j] - sup[j] * rhs[j + 1]) / diag[j];
}

// Trapezoid weights with the r^4 volume factor on a uniform grid.
std::vector<double> volume_weights(const RadialGrid& grid) {
  const std::size_t n = grid.size();
  const double h = grid[1] - grid[0];
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = grid[j];
    w[j] = h * r * r * r * r;
  }
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

}  // namespace

// ---- weighted norms --------------------------------------------------------

WeightedNorm weighted_norm(const ModeField& f, NormKind kind,
                           const WeightedNormSpec& norms) {
  if (f.t.empty() || f.grid.size() == 0)
    throw std::domain_error("weighted_norm: empty sample set");
  if (!(norms.a > 0.0 && norms.a < 1.0))
    throw std::domain_error("weighted_norm: a must lie in (0,1)");
  if (!norms.lam0) throw std::domain_error("weighted_norm: missing lam0");
  WeightedNorm out;
  for (std::size_t k = 0; k < f.t.size(); ++k) {
    const double gauge = std::pow(norms.lam0(f.t[k]), -norms.nu);
    for (std::size_t j = 0; j < f.grid.size(); ++j) {
      const double r = f.grid[j];
      const double shape =
          (kind == NormKind::source)
              ? 1.0 + std::pow(r, 2.0 + norms.a)
              : (1.0 + std::pow(r, 6.0)) / std::pow(norms.R, 6.0 - norms.a);
      const double val = gauge * shape * std::fabs(f.v[k][j]);
      if (val > out.value) {
        out.value = val;
        out.t_arg = f.t[k];
        out.r_arg = r;
      }
    }
  }
  return out;
}

// ---- orthogonal projection -------------------------------------------------

ProjectedSource project_orthogonal(const std::function<double(double)>& h,
                                   int l, double R) {
  if (l != 0 && l != 1)
    throw std::domain_error("project_orthogonal: mode l must be 0 or 1");
  if (!(R > 0.0)) throw std::domain_error("project_orthogonal: R <= 0");
  auto chi = [R](double r) { return ansatz::eta_step(r / R); };
  auto K = [l](double r) { return mode_kernel(l, r); };
  const double gram = two_pass(
      [&](double r) {
        const double k = K(r);
        return k * chi(r) * k * std::pow(r, 4);
      },
      0.0, 2.0 * R, 1e-13);
  if (!(gram > 1e-12))
    throw std::runtime_error(
        "project_orthogonal: Gram matrix singular (R too small)");
  const double rhs = two_pass(
      [&](double r) { return h(r) * K(r) * std::pow(r, 4); }, 0.0, 2.0 * R,
      1e-13);
  const double c = rhs / gram;
  ProjectedSource out;
  out.coef = {c};
  out.fn = [h, c, K, chi](double r) { return h(r) - c * K(r) * chi(r); };
  return out;
}

// ---- evolution -------------------------------------------------------------

const bubble::NegativeMode& negative_mode() {
  static const bubble::NegativeMode mode = bubble::solve_negative_mode(40.0, 1e-12);
  return mode;
}

double w0_component(const ModeField& f, std::size_t k) {
  if (k >= f.v.size()) throw std::domain_error("w0_component: bad snapshot");
  const auto& w0 = negative_mode().w0;
  const double cap = w0.grid().r_max();
  const auto wts = volume_weights(f.grid);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < f.grid.size(); ++j) {
    const double r = f.grid[j];
    const double w = (r <= cap) ? w0(r) : 0.0;
    num += wts[j] * f.v[k][j] * w;
    den += wts[j] * w * w;
  }
  return num / den;
}

ModeField evolve_inner(const InnerProblem& prob, double R, double l_coef) {
  if (prob.l != 0 && prob.l != 1)
    throw std::domain_error("evolve_inner: mode l must be 0 or 1");
  if (!(prob.t1 > prob.t0))
    throw std::domain_error("evolve_inner: empty time interval");
  if (!prob.lam) throw std::domain_error("evolve_inner: missing scale law");
  for (double t : {prob.t0, 0.5 * (prob.t0 + prob.t1), prob.t1})
    if (!(prob.lam(t) > 0.0))
      throw std::domain_error("evolve_inner: lam(t) must stay positive");
  if (prob.n_r < 16) throw std::domain_error("evolve_inner: grid too coarse");

  const std::size_t n = prob.n_r;
  ModeField out;
  out.grid = RadialGrid::uniform(2.0 * R, n);
  const double hr = out.grid[1] - out.grid[0];
  const auto wts = volume_weights(out.grid);

  // kernel samples for the per-slice discrete projection
  std::vector<double> Ks(n), KXs(n);
  double gram_d = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = out.grid[j];
    Ks[j] = mode_kernel(prob.l, r);
    KXs[j] = Ks[j] * ansatz::eta_step(r / R);
    gram_d += wts[j] * Ks[j] * KXs[j];
  }

  std::vector<double> u(n, 0.0);
  if (l_coef != 0.0) {
    const auto& w0 = negative_mode().w0;
    const double cap = w0.grid().r_max();
    for (std::size_t j = 0; j < n; ++j)
      u[j] = (out.grid[j] <= cap) ? l_coef * w0(out.grid[j]) : 0.0;
    u[n - 1] = 0.0;
  }

  double t = prob.t0, s = 0.0;
  out.t.push_back(t);
  out.s.push_back(s);
  out.v.push_back(u);

  const double ll = static_cast<double>(prob.l * (prob.l + 3));
  std::vector<double> sub(n), diag(n), sup(n), rhs(n), slice(n);
  while (t < prob.t1 - 1e-15 * (prob.t1 - prob.t0)) {
    const double lam_here = prob.lam(t);
    double dt = prob.courant * lam_here * lam_here;
    dt = std::min(dt, prob.t1 - t);
    const double tn = t + dt;
    const double lam_next = prob.lam(tn);
    const double nu = dt / (lam_next * lam_next);

    // source slice at the new time, discretely re-projected so the grid's
    // own notion of orthogonality is preserved by the step
    if (prob.h) {
      for (std::size_t j = 0; j < n; ++j) slice[j] = prob.h(out.grid[j], tn);
      if (prob.reproject && gram_d > 0.0) {
        double c = 0.0;
        for (std::size_t j = 0; j < n; ++j) c += wts[j] * slice[j] * Ks[j];
        c /= gram_d;
        for (std::size_t j = 0; j < n; ++j) slice[j] -= c * KXs[j];
      }
    } else {
      std::fill(slice.begin(), slice.end(), 0.0);
    }

    // (I - nu L) u_next = u + nu h; L = d_rr + (4/r) d_r - l(l+3)/r^2 + V
    for (std::size_t j = 0; j < n; ++j) {
      const double r = out.grid[j];
      if (j == 0) {
        if (prob.l == 0) {
          // regular center: Lap -> 2*(n/2)*u''(0) = 10 (u1 - u0)/h^2
          sub[0] = 0.0;
          diag[0] = 1.0 - nu * (-10.0 / (hr * hr) + bubble::pUpm1(0.0));
          sup[0] = -nu * 10.0 / (hr * hr);
          rhs[0] = u[0] + nu * slice[0];
        } else {
          sub[0] = 0.0;
          diag[0] = 1.0;
          sup[0] = 0.0;
          rhs[0] = 0.0;
        }
        continue;
      }
      if (j == n - 1) {
        sub[j] = 0.0;
        diag[j] = 1.0;
        sup[j] = 0.0;
        rhs[j] = 0.0;
        continue;
      }
      const double L_sub = 1.0 / (hr * hr) - 2.0 / (r * hr);
      const double L_diag =
          -2.0 / (hr * hr) - ll / (r * r) + bubble::pUpm1(r);
      const double L_sup = 1.0 / (hr * hr) + 2.0 / (r * hr);
      sub[j] = -nu * L_sub;
      diag[j] = 1.0 - nu * L_diag;
      sup[j] = -nu * L_sup;
      rhs[j] = u[j] + nu * slice[j];
    }
    thomas(sub, diag, sup, rhs);
    u = rhs;
    // The continuum flow conserves the kernel component exactly when the
    // source is orthogonal; the discrete step drifts by truncation and
    // boundary-flux error, which we remove so orthogonality is maintained
    // to roundoff rather than to O(h^2) per step.
    if (prob.reproject && gram_d > 0.0) {
      double c = 0.0;
      for (std::size_t j = 0; j < n; ++j) c += wts[j] * u[j] * Ks[j];
      c /= gram_d;
      for (std::size_t j = 0; j < n; ++j) u[j] -= c * KXs[j];
    }
    t = tn;
    s += nu;
    out.t.push_back(t);
    out.s.push_back(s);
    out.v.push_back(u);
  }
  return out;
}

// ---- shooting solve --------------------------------------------------------

InnerSolution solve_inner_mode(const InnerProblem& prob,
                               const WeightedNormSpec& norms) {
  InnerSolution out;
  ModeField base = evolve_inner(prob, norms.R, 0.0);
  if (prob.l == 1) {
    // the l = 1 radial operator has no negative mode: nothing to shoot
    out.phi = std::move(base);
    return out;
  }

  InnerProblem hom = prob;
  hom.h = nullptr;
  const ModeField unit = evolve_inner(hom, norms.R, 1.0);
  const std::size_t last = base.v.size() - 1;
  const double b0 = w0_component(base, last);
  const double g = w0_component(unit, last);
  if (!(std::fabs(g) > 0.0))
    throw std::runtime_error(
        "solve_inner_mode: unstable direction degenerate; cannot shoot");
  if (b0 == 0.0) {
    out.phi = std::move(base);
    return out;
  }

  // final W0 coefficient of phi[h] + l * phi[W0] is b0 + l g; bracket the
  // root and bisect
  auto F = [&](double l) { return b0 + l * g; };
  const double scale = std::max(std::fabs(b0 / g), 1.0);
  double lo = -2.0 * scale, hi = 2.0 * scale;
  int guard = 0;
  while (F(lo) * F(hi) > 0.0) {
    lo *= 2.0;
    hi *= 2.0;
    if (++guard > 60) {
      // report the measured residual growth rate with the failure
      const double rate =
          std::log(std::fabs(w0_component(unit, last) /
                             w0_component(unit, 0))) /
          unit.s.back();
      throw std::runtime_error(
          "solve_inner_mode: bisection bracket exhausted; W0 growth rate " +
          std::to_string(rate));
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16 * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (F(lo) * F(mid) <= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  out.l_coef = 0.5 * (lo + hi);

  out.phi = std::move(base);
  for (std::size_t k = 0; k < out.phi.v.size(); ++k)
    for (std::size_t j = 0; j < out.phi.v[k].size(); ++j)
      out.phi.v[k][j] += out.l_coef * unit.v[k][j];
  out.growth_rate =
      std::log(std::fabs(w0_component(unit, last) / w0_component(unit, 0))) /
      unit.s.back();
  return out;
}

}  // namespace forge::inner

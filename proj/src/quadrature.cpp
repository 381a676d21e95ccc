#include "forge/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "forge/bubble.hpp"

namespace forge::quad {

namespace {

Rule make_gauss_legendre(int n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::map<int, Rule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

Rule gauss_hermite_rho(int n) {
  // Standard Gauss-Hermite for e^{-u^2}, then s = 2u against e^{-s^2/4}.
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pim4 = 0.75112554446494248286;  // pi^{-1/4}
  double x = 0.0, pp = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0)
      x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      x -= 1.14 * std::pow(static_cast<double>(n), 0.426) / x;
    else if (i == 2)
      x = 1.86 * x - 0.86 * rule.nodes[n - 1];
    else if (i == 3)
      x = 1.91 * x - 0.91 * rule.nodes[n - 2];
    else
      x = 2.0 * x - rule.nodes[n - i + 1];
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = x * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[n - 1 - i] = 2.0 / (pp * pp);
    rule.weights[i] = rule.weights[n - 1 - i];
  }
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] *= 2.0;
    rule.weights[i] *= 2.0;
  }
  return rule;
}

double fixed_gl(const std::function<double(double)>& f, double a, double b,
                int n) {
  const Rule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

namespace {

double adaptive_rec(const std::function<double(double)>& f, double a, double b,
                    double whole, double tol, int depth,
                    const QuadratureSpec& spec) {
  const double mid = 0.5 * (a + b);
  const double left = fixed_gl(f, a, mid, spec.panel_nodes);
  const double right = fixed_gl(f, mid, b, spec.panel_nodes);
  const double delta = left + right - whole;
  if (std::fabs(delta) <= tol || depth >= spec.max_depth) {
    if (depth >= spec.max_depth && std::fabs(delta) > 64.0 * tol)
      throw PrecisionError("adaptive quadrature: refinement did not converge",
                           left + right, whole);
    return left + right;
  }
  return adaptive_rec(f, a, mid, left, 0.5 * tol, depth + 1, spec) +
         adaptive_rec(f, mid, b, right, 0.5 * tol, depth + 1, spec);
}

}  // namespace

double adaptive(const std::function<double(double)>& f, double a, double b,
                const QuadratureSpec& spec) {
  const double whole = fixed_gl(f, a, b, spec.panel_nodes);
  return adaptive_rec(f, a, b, whole, spec.abs_tol, 0, spec);
}

double radial_integral(const std::function<double(double)>& f,
                       const QuadratureSpec& spec) {
  // r = s/(1-s) maps [0,1) to [0,inf); dr = ds/(1-s)^2.
  auto g = [&f](double s) {
    const double om = 1.0 - s;
    const double r = s / om;
    const double v = f(r);
    const double r2 = r * r;
    return v * r2 * r2 / (om * om);
  };
  return kOmega4 * adaptive(g, 0.0, 1.0 - 1e-14, spec);
}

double ball_integral(const std::function<double(double)>& f, double r_cap,
                     const QuadratureSpec& spec) {
  auto g = [&f](double r) {
    const double r2 = r * r;
    return f(r) * r2 * r2;
  };
  return kOmega4 * adaptive(g, 0.0, r_cap, spec);
}

double rho_inner_radial(const std::function<double(double)>& fg,
                        const QuadratureSpec& spec) {
  // Gaussian kills the integrand well before r = 60.
  auto g = [&fg](double r) {
    const double r2 = r * r;
    return fg(r) * std::exp(-0.25 * r2) * r2 * r2;
  };
  return kOmega4 * adaptive(g, 0.0, 60.0, spec);
}

double rho_inner_axisym(const std::function<double(double, double)>& fg,
                        const QuadratureSpec& spec) {
  // int_{R^5} F rho dz = omega3 int dx1 int_0^inf F(x1, rp) e^{-(x1^2+rp^2)/4}
  // rp^3 drp.  Outer integral by adaptive GL over [-60, 60].
  auto outer = [&fg, &spec](double x1) {
    auto inner = [&fg, x1](double rp) {
      return fg(x1, rp) * std::exp(-0.25 * rp * rp) * rp * rp * rp;
    };
    QuadratureSpec s2 = spec;
    s2.abs_tol = spec.abs_tol;
    return adaptive(inner, 0.0, 60.0, s2) * std::exp(-0.25 * x1 * x1);
  };
  return kOmega3 * adaptive(outer, -60.0, 60.0, spec);
}

double rho_inner_tensor5(const std::function<double(const double*)>& fg,
                         int n) {
  const Rule rule = gauss_hermite_rho(n);
  double z[5];
  double total = 0.0;
  for (int i0 = 0; i0 < n; ++i0) {
    z[0] = rule.nodes[i0];
    double s0 = 0.0;
    for (int i1 = 0; i1 < n; ++i1) {
      z[1] = rule.nodes[i1];
      double s1 = 0.0;
      for (int i2 = 0; i2 < n; ++i2) {
        z[2] = rule.nodes[i2];
        double s2 = 0.0;
        for (int i3 = 0; i3 < n; ++i3) {
          z[3] = rule.nodes[i3];
          double s3 = 0.0;
          for (int i4 = 0; i4 < n; ++i4) {
            z[4] = rule.nodes[i4];
            s3 += rule.weights[i4] * fg(z);
          }
          s2 += rule.weights[i3] * s3;
        }
        s1 += rule.weights[i2] * s2;
      }
      s0 += rule.weights[i1] * s1;
    }
    total += rule.weights[i0] * s0;
  }
  return total;
}

MassConstants mass_constants(const QuadratureSpec& spec) {
  MassConstants c{};
  c.I_p = radial_integral([](double r) { return bubble::U_pow_p(r); }, spec);
  c.I_6 = radial_integral(
      [](double r) {
        const double w = bubble::W6_radial(r);
        return w * w;
      },
      spec);
  // (d1 U)^2 averages to |U'|^2 r^2 <cos^2> = |U'(r)|^2 / 5 over the sphere.
  c.I_d = radial_integral(
      [](double r) {
        const double g = bubble::dU_radial(r);
        return g * g / 5.0;
      },
      spec);
  c.I_mix = radial_integral(
      [](double r) { return bubble::pUpm1(r) * bubble::W6_radial(r); }, spec);
  c.identity_defect = std::fabs(c.I_mix + 1.5 * c.I_p) / c.I_p;
  return c;
}

}  // namespace forge::quad

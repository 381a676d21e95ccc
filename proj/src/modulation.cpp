#include "forge/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "forge/bubble.hpp"
#include "forge/quadrature.hpp"

namespace forge::modulation {

double leading_lambda(int i, double t, double kappa, double T) {
  if (t >= T) throw std::domain_error("leading_lambda: t >= T");
  if (kappa <= 0.0) throw std::domain_error("leading_lambda: kappa <= 0");
  const double u = T - t;
  if (i == 1) return kappa * kappa * u * u * u * u / 16.0;
  if (i == 2) return kappa * kappa * u * u / 4.0;
  throw std::domain_error("leading_lambda: i must be 1 or 2");
}

double leading_lambda_dot(int i, double t, double kappa, double T) {
  if (t >= T) throw std::domain_error("leading_lambda_dot: t >= T");
  if (kappa <= 0.0) throw std::domain_error("leading_lambda_dot: kappa <= 0");
  const double u = T - t;
  if (i == 1) return -kappa * kappa * u * u * u / 4.0;
  if (i == 2) return -kappa * kappa * u / 2.0;
  throw std::domain_error("leading_lambda_dot: i must be 1 or 2");
}

// ---- HolderSample ---------------------------------------------------------

double HolderSample::sup_norm() const {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

double HolderSample::seminorm0(double alpha) const {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::domain_error("seminorm0: alpha in (0,1) required");
  double s = 0.0;
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      s = std::max(s, std::fabs(v[j] - v[i]) / std::pow(t[j] - t[i], alpha));
  return s;
}

std::vector<double> HolderSample::derivative() const {
  const std::size_t n = t.size();
  if (n < 3) throw std::domain_error("derivative: need >= 3 samples");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = (i == 0) ? 0 : (i == n - 1 ? n - 3 : i - 1);
    // 3-point Lagrange derivative at t[i] on a possibly nonuniform triple
    const double x0 = t[a], x1 = t[a + 1], x2 = t[a + 2], x = t[i];
    const double w0 = (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    const double w1 = (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    const double w2 = (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    d[i] = w0 * v[a] + w1 * v[a + 1] + w2 * v[a + 2];
  }
  return d;
}

double HolderSample::norm1(double alpha) const {
  HolderSample dv{t, derivative()};
  return sup_norm() + dv.sup_norm() + dv.seminorm0(alpha);
}

// ---- singular ODE ---------------------------------------------------------

HolderSample singular_ode_general(const HolderSample& h, double eps, double T,
                                  double beta) {
  if (!(eps > 0.0) || !(eps < beta + 1.0))
    throw std::domain_error("singular_ode_general: need 0 < eps < beta+1");
  const std::size_t n = h.t.size();
  if (n < 2) throw std::domain_error("singular_ode_general: need >= 2 samples");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(h.t[i] < h.t[i + 1]))
      throw std::domain_error("singular_ode_general: grid not increasing");
  if (h.t.front() < 0.0 || h.t.back() > T)
    throw std::domain_error("singular_ode_general: grid outside [0,T]");

  const double pw = beta + 1.0 - eps, pw2 = beta + 2.0 - eps;
  // Exact integral of (T-s)^{beta-eps} (ha + m (s-sa)) over [sa, sb].
  auto seg = [&](double sa, double sb, double ha, double hb) {
    const double ua = T - sa, ub = T - sb;
    const double m = (hb - ha) / (sb - sa);
    const double A = std::pow(ua, pw) - std::pow(ub, pw);
    const double B = std::pow(ua, pw2) - std::pow(ub, pw2);
    return (ha + m * ua) * A / pw - m * B / pw2;
  };

  std::vector<double> suffix(n, 0.0);
  // Beyond the last node, h is held constant up to T.
  if (h.t.back() < T)
    suffix[n - 1] = h.v.back() * std::pow(T - h.t.back(), pw) / pw;
  for (std::size_t k = n - 1; k-- > 0;)
    suffix[k] = suffix[k + 1] + seg(h.t[k], h.t[k + 1], h.v[k], h.v[k + 1]);

  HolderSample out;
  out.t = h.t;
  out.v.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    out.v[k] = -std::pow(T - h.t[k], eps) * suffix[k];
  return out;
}

HolderSample solve_singular_ode(const HolderSample& h, double eps, double T) {
  if (!(eps > 0.0 && eps < 0.5))
    throw std::domain_error("solve_singular_ode: eps in (0,1/2) required");
  return singular_ode_general(h, eps, T, 3.0);
}

// ---- truncated mass constants --------------------------------------------

TruncatedMass truncated_mass(double radius) {
  using namespace forge::bubble;
  if (radius <= 0.0) throw std::domain_error("truncated_mass: radius <= 0");
  auto line = [&](auto&& f) {
    // rough pass fixes the scale, second pass works at ~1e-12 relative;
    // a fixed absolute tolerance bottoms out in roundoff for the large
    // log-divergent integrals
    quad::QuadratureSpec rough;
    rough.abs_tol = 1e-3;
    const double est = quad::adaptive(f, 0.0, radius, rough);
    quad::QuadratureSpec spec;
    spec.abs_tol = 1e-12 * (1.0 + std::fabs(est));
    return quad::kOmega4 * quad::adaptive(f, 0.0, radius, spec);
  };
  TruncatedMass tm;
  tm.radius = radius;
  tm.I6 = line([](double r) { return W6_radial(r) * W6_radial(r) * r * r * r * r; });
  tm.Imix = line([](double r) { return pUpm1(r) * W6_radial(r) * r * r * r * r; });
  tm.J2 = line([](double r) {
    return pUpm1(r) * W6_radial(r) * r * r * r * r * r * r;
  });
  tm.Idel = line([](double r) {
    const double d = dU_radial(r);
    return d * d / 5.0 * r * r * r * r;
  });
  tm.Jw1 = line([](double r) {
    return pUpm1(r) * dU_radial(r) / 5.0 * r * r * r * r * r;
  });
  return tm;
}

// ---- trajectory -----------------------------------------------------------

std::vector<double> time_grid(const Params& par) {
  std::vector<double> t;
  const double ratio = std::pow(2.0, -1.0 / par.nodes_per_octave);
  double frac = 1.0;
  while (frac > par.terminal) {
    t.push_back(par.T * (1.0 - frac));
    frac *= ratio;
  }
  t.push_back(par.T * (1.0 - par.terminal));
  return t;
}

double PicardLog::contraction() const {
  double c = 0.0;
  for (std::size_t k = 1; k < factors.size(); ++k) c = std::max(c, factors[k]);
  return c;
}

namespace {

// Laplacian of Z2 via the heat equation when no callable is supplied.
double z2_laplacian(const Fields& f, const Point& x, double t) {
  if (f.Z2_lap) return f.Z2_lap(x, t);
  const double dt = 1e-6;
  const double tp = t + dt, tmn = std::max(t - dt, 0.0);
  return (f.Z2(x, tp) - f.Z2(x, tmn)) / (tp - tmn);
}

Point z2_gradient(const Fields& f, const Point& x, double t) {
  if (f.Z2_grad) return f.Z2_grad(x, t);
  Point g{};
  const double h = 1e-5;
  for (int j = 0; j < 5; ++j) {
    Point a = x, b = x;
    a[j] += h;
    b[j] -= h;
    g[j] = (f.Z2(a, t) - f.Z2(b, t)) / (2.0 * h);
  }
  return g;
}

// P_i(t, lambda) = int_{B_2R} pU^{p-1} W6 (Z1 + Z2 - psi)(xi_i + lambda y) dy,
// with the spherical means of the quadratic Z1 evaluated in closed form and
// Z2 expanded to second order around the center (psi omitted by design; its
// envelope is logged separately).
double source_P(int i, double t, double lam, const Params& par,
                const Fields& f, const TruncatedMass& tm) {
  const double u = par.T - t;
  double P = par.M * u * tm.Imix;
  if (f.z1_quadratic) {
    P -= par.M / 10.0 * lam * lam * tm.J2;
    if (i == 2) {
      double q2 = 0.0;
      for (double c : par.q) q2 += c * c;
      P -= par.M / 10.0 * q2 * tm.Imix;
    }
  }
  if (i == 2 && f.Z2) {
    P += f.Z2(par.q, t) * tm.Imix;
    P += lam * lam / 10.0 * z2_laplacian(f, par.q, t) * tm.J2;
  }
  return P;
}

struct Correction {
  std::vector<double> lam1;
  PicardLog log;
};

Correction picard(int i, const std::vector<double>& t,
                  const std::vector<double>& lam0,
                  const std::vector<double>& dlam0, const Params& par,
                  const Fields& f, const TruncatedMass& tm) {
  const std::size_t n = t.size();
  const double eps = (i == 1) ? par.eps1 : par.eps2;
  const double beta = (i == 1) ? 3.0 : 1.0;
  double scale = 0.0;
  for (double v : lam0) scale = std::max(scale, v);
  const double tol = par.picard_tol * scale;

  Correction out;
  out.lam1.assign(n, 0.0);
  double prev_step = 0.0, prev2_step = 0.0;
  for (int it = 0; it < par.max_iter; ++it) {
    HolderSample h;
    h.t = t;
    h.v.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = par.T - t[k];
      const double lam = std::max(lam0[k] + out.lam1[k], 0.0);
      const double rhs = std::sqrt(lam) * source_P(i, t[k], lam, par, f, tm) /
                             tm.I6 -
                         dlam0[k] + eps * out.lam1[k] / u;
      h.v[k] = rhs / std::pow(u, beta);
    }
    HolderSample bar = singular_ode_general(h, eps, par.T, beta);
    double step = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      step = std::max(step, std::fabs(bar.v[k] - out.lam1[k]));
    out.log.step_sup.push_back(step);
    if (std::getenv("FORGE_PICARD_TRACE"))
      std::fprintf(stderr, "picard i=%d it=%d step=%.6e\n", i, it, step);
    if (prev_step > 0.0) {
      // compare against the worst of the last two steps: a convergent
      // iteration may dip and bounce once, a divergent one keeps growing
      const double ref = std::max(prev_step, prev2_step);
      const double factor = step / ref;
      out.log.factors.push_back(factor);
      if (out.log.factors.size() >= 2 && factor >= 1.0)
        throw std::runtime_error(
            "picard: contraction factor " + std::to_string(factor) +
            " >= 1 (M or T too large)");
    }
    out.lam1 = bar.v;
    prev2_step = prev_step;
    prev_step = step;
    if (step <= tol) break;
  }
  return out;
}

// Interpolation helper: 4-point Lagrange on the trajectory's own grid.
double interp(const std::vector<double>& t, const std::vector<double>& v,
              double x) {
  const std::size_t n = t.size();
  auto it = std::upper_bound(t.begin(), t.end(), x);
  std::size_t i = (it == t.begin()) ? 0 : std::size_t(it - t.begin()) - 1;
  std::size_t s = (i < 1) ? 0 : (i + 2 >= n ? n - 4 : i - 1);
  double acc = 0.0;
  for (std::size_t a = s; a < s + 4; ++a) {
    double w = 1.0;
    for (std::size_t b = s; b < s + 4; ++b)
      if (b != a) w *= (x - t[b]) / (t[a] - t[b]);
    acc += w * v[a];
  }
  return acc;
}

}  // namespace

double Trajectory::lambda(int i, double time) const {
  const auto& l = (i == 1) ? lam1 : lam2;
  return interp(t, l, time);
}

double Trajectory::dlambda(int i, double time) const {
  const auto& l = (i == 1) ? dlam1 : dlam2;
  return interp(t, l, time);
}

Point Trajectory::xi(int i, double time) const {
  const auto& l = (i == 1) ? xi1 : xi2;
  Point p{};
  std::vector<double> comp(t.size());
  for (int j = 0; j < 5; ++j) {
    for (std::size_t k = 0; k < t.size(); ++k) comp[k] = l[k][j];
    p[j] = interp(t, comp, time);
  }
  return p;
}

Point Trajectory::dxi(int i, double time) const {
  const auto& l = (i == 1) ? dxi1 : dxi2;
  Point p{};
  std::vector<double> comp(t.size());
  for (int j = 0; j < 5; ++j) {
    for (std::size_t k = 0; k < t.size(); ++k) comp[k] = l[k][j];
    p[j] = interp(t, comp, time);
  }
  return p;
}

Trajectory solve_lambda1_correction(const Params& par, const Fields& fields) {
  Trajectory traj;
  traj.par = par;
  traj.tm = truncated_mass(2.0 * par.R);
  if (par.R < 10.0)
    throw std::domain_error("solve_lambda1_correction: R >= 10 required");
  traj.t = time_grid(par);
  const std::size_t n = traj.t.size();

  const auto mc = quad::mass_constants();
  if (!fields.truncation) {
    // replace the truncated integrals with their full-space values so the
    // leading law annihilates the degenerate source exactly
    traj.tm.I6 = mc.I_6;
    traj.tm.Imix = mc.I_mix;
  }
  traj.kappa1 = 1.5 * par.M * mc.I_p / mc.I_6;
  const double z2q0 = fields.Z2 ? fields.Z2(par.q, 0.0) : 1e-2;
  traj.kappa2 = 1.5 * z2q0 * mc.I_p / mc.I_6;

  traj.lam10.resize(n);
  traj.lam20.resize(n);
  std::vector<double> dlam10(n), dlam20(n);
  for (std::size_t k = 0; k < n; ++k) {
    traj.lam10[k] = leading_lambda(1, traj.t[k], traj.kappa1, par.T);
    traj.lam20[k] = leading_lambda(2, traj.t[k], traj.kappa2, par.T);
    dlam10[k] = leading_lambda_dot(1, traj.t[k], traj.kappa1, par.T);
    dlam20[k] = leading_lambda_dot(2, traj.t[k], traj.kappa2, par.T);
  }

  auto c1 = picard(1, traj.t, traj.lam10, dlam10, par, fields, traj.tm);
  auto c2 = picard(2, traj.t, traj.lam20, dlam20, par, fields, traj.tm);
  traj.lam11 = std::move(c1.lam1);
  traj.lam21 = std::move(c2.lam1);
  traj.log1 = std::move(c1.log);
  traj.log2 = std::move(c2.log);

  traj.lam1.resize(n);
  traj.lam2.resize(n);
  traj.dlam1.resize(n);
  traj.dlam2.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    traj.lam1[k] = traj.lam10[k] + traj.lam11[k];
    traj.lam2[k] = traj.lam20[k] + traj.lam21[k];
    traj.dlam1[k] = std::sqrt(std::max(traj.lam1[k], 0.0)) *
                    source_P(1, traj.t[k], traj.lam1[k], par, fields, traj.tm) /
                    traj.tm.I6;
    traj.dlam2[k] = std::sqrt(std::max(traj.lam2[k], 0.0)) *
                    source_P(2, traj.t[k], traj.lam2[k], par, fields, traj.tm) /
                    traj.tm.I6;
  }

  // Worst-case psi-envelope contribution, logged rather than solved: the
  // ratio of delta0*(T-t)*int pU^{p-1}|W6| to the leading source.
  {
    using namespace forge::bubble;
    quad::QuadratureSpec spec;
    spec.abs_tol = 1e-7;  // |W6| kink at r = 1 limits refinement
    const double K =
        quad::kOmega4 * quad::adaptive(
                            [](double r) {
                              return pUpm1(r) * std::fabs(W6_radial(r)) * r *
                                     r * r * r;
                            },
                            0.0, 2.0 * par.R, spec);
    const double delta0 = 1e-3;  // ||Z2||_inf/10 for the shipped amplitude
    traj.delta_psi = delta0 * K / (par.M * 1.5 * mc.I_p * traj.tm.I6 / mc.I_6);
  }
  return traj;
}

void solve_xi(Trajectory& traj, const Fields& fields) {
  const Params& par = traj.par;
  const std::size_t n = traj.t.size();
  traj.xi1.assign(n, Point{});
  traj.xi2.assign(n, Point{});
  traj.dxi1.assign(n, Point{});
  traj.dxi2.assign(n, Point{});
  traj.xi1_dev.assign(n, Point{});
  traj.xi2_dev.assign(n, Point{});
  traj.xi_cut = 0;

  auto lam_at = [&](int i, double time) {
    if (time >= traj.t.back()) {
      // extrapolate the correction proportionally to the leading order
      const double l0 = leading_lambda(i, std::min(time, par.T * (1.0 - 1e-14)),
                                       (i == 1) ? traj.kappa1 : traj.kappa2,
                                       par.T);
      const auto& l1 = (i == 1) ? traj.lam11 : traj.lam21;
      const auto& l0v = (i == 1) ? traj.lam10 : traj.lam20;
      return l0 * (1.0 + l1.back() / l0v.back());
    }
    return traj.lambda(i, time);
  };

  auto rhs = [&](int i, double time, const Point& xi) {
    const double lam = std::max(lam_at(i, time), 0.0);
    Point g1{};  // grad Z1 = -(M/5) x
    for (int j = 0; j < 5; ++j) g1[j] = -par.M / 5.0 * xi[j];
    Point g2{};
    if (fields.Z2) g2 = z2_gradient(fields, xi, time);
    Point d{};
    const double c = std::pow(lam, 1.5) * traj.tm.Jw1 / traj.tm.Idel;
    for (int j = 0; j < 5; ++j) d[j] = c * (g1[j] + g2[j]);
    return d;
  };

  for (int i = 1; i <= 2; ++i) {
    auto& xi = (i == 1) ? traj.xi1 : traj.xi2;
    auto& dxi = (i == 1) ? traj.dxi1 : traj.dxi2;
    auto& dev = (i == 1) ? traj.xi1_dev : traj.xi2_dev;
    const Point base = (i == 1) ? Point{} : par.q;
    // integrate the displacement from the terminal center; the increments
    // can sit 15+ orders of magnitude below |q|
    Point cur{};
    auto at = [&](const Point& d) {
      Point p;
      for (int j = 0; j < 5; ++j) p[j] = base[j] + d[j];
      return p;
    };
    // Terminal layer [t_last, T]: lambda^{3/2} integrates to a negligible
    // increment; take one RK4 step over it with the extrapolated lambda.
    double from = par.T;
    for (std::size_t k = n; k-- > 0;) {
      const double to = traj.t[k];
      const double h = to - from;  // negative (backward)
      const Point k1 = rhs(i, from, at(cur));
      Point mid1, mid2, end;
      for (int j = 0; j < 5; ++j) mid1[j] = cur[j] + 0.5 * h * k1[j];
      const Point k2 = rhs(i, from + 0.5 * h, at(mid1));
      for (int j = 0; j < 5; ++j) mid2[j] = cur[j] + 0.5 * h * k2[j];
      const Point k3 = rhs(i, from + 0.5 * h, at(mid2));
      for (int j = 0; j < 5; ++j) end[j] = cur[j] + h * k3[j];
      const Point k4 = rhs(i, to, at(end));
      for (int j = 0; j < 5; ++j)
        cur[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      dev[k] = cur;
      xi[k] = at(cur);
      dxi[k] = rhs(i, to, at(cur));
      from = to;
    }
  }
}

Trajectory build_trajectory(const Params& par, const Fields& fields) {
  Trajectory traj = solve_lambda1_correction(par, fields);
  solve_xi(traj, fields);
  return traj;
}

}  // namespace forge::modulation

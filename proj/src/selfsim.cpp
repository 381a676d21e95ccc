#include "forge/selfsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forge/quadrature.hpp"

namespace forge::selfsim {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

// ---- frame ----------------------------------------------------------------

std::pair<Point, double> SelfSimilarFrame::to_frame(const Point& x,
                                                    double t) const {
  if (t >= T) throw std::domain_error("to_frame: t >= T");
  const double s = std::sqrt(T - t);
  Point z;
  for (int j = 0; j < 5; ++j) z[j] = x[j] / s;
  return {z, -std::log(T - t)};
}

std::pair<Point, double> SelfSimilarFrame::to_physical(const Point& z,
                                                       double tau) const {
  const double s = std::exp(-0.5 * tau);
  Point x;
  for (int j = 0; j < 5; ++j) x[j] = z[j] * s;
  return {x, T - std::exp(-tau)};
}

// ---- 1-D modes ------------------------------------------------------------

std::vector<double> hermite1d(int k) {
  if (k < 0 || k > kNMax)
    throw std::domain_error("hermite1d: degree outside [0, 12]");
  std::vector<double> pm1{1.0};
  if (k == 0) return pm1;
  std::vector<double> p{0.0, 1.0};
  for (int j = 1; j < k; ++j) {
    // p_{j+1} = s p_j - 2 j p_{j-1}
    std::vector<double> nx(j + 2, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) nx[i + 1] += p[i];
    for (std::size_t i = 0; i < pm1.size(); ++i) nx[i] -= 2.0 * j * pm1[i];
    pm1 = std::move(p);
    p = std::move(nx);
  }
  return p;
}

double poly_eval(const std::vector<double>& c, double s) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * s + c[i];
  return v;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = double(i) * c[i];
  return d;
}

double hermite1d_norm2(int k) {
  double v = 2.0 * std::sqrt(kPi);
  for (int j = 1; j <= k; ++j) v *= 2.0 * j;
  return v;
}

double HermiteMode::eval(const Point& z) const {
  double v = 1.0;
  for (int j = 0; j < 5; ++j) v *= poly_eval(axis[j], z[j]);
  return v;
}

double HermiteMode::apply_Az(const Point& z) const {
  // A_z = sum_j d_jj - (z_j/2) d_j, applied axis by axis
  double vals[5], res = 0.0;
  for (int j = 0; j < 5; ++j) vals[j] = poly_eval(axis[j], z[j]);
  for (int j = 0; j < 5; ++j) {
    const auto d1 = poly_derivative(axis[j]);
    const auto d2 = poly_derivative(d1);
    double term = poly_eval(d2, z[j]) - 0.5 * z[j] * poly_eval(d1, z[j]);
    for (int i = 0; i < 5; ++i)
      if (i != j) term *= vals[i];
    res += term;
  }
  return res;
}

double HermiteMode::norm2_rho() const {
  double v = 1.0;
  for (int j = 0; j < 5; ++j) v *= hermite1d_norm2(alpha[j]);
  return v;
}

HermiteMode hermite_mode(const MultiIndex& alpha) {
  int total = 0;
  for (int a : alpha) {
    if (a < 0) throw std::domain_error("hermite_mode: negative index");
    total += a;
  }
  if (total > kNMax)
    throw std::domain_error("hermite_mode: |alpha| > 12 overflows coefficients");
  HermiteMode m;
  m.alpha = alpha;
  m.lambda = 0.5 * total;
  for (int j = 0; j < 5; ++j) m.axis[j] = hermite1d(alpha[j]);
  return m;
}

std::vector<MultiIndex> modes_up_to(int total_degree) {
  std::vector<MultiIndex> out;
  for (int n = 0; n <= total_degree; ++n) {
    MultiIndex a{};
    // graded lexicographic enumeration of compositions of n into 5 parts
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == 4) {
        a[4] = left;
        out.push_back(a);
        return;
      }
      for (int v = left; v >= 0; --v) {
        a[pos] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, n);
  }
  return out;
}

// ---- spectral fields ------------------------------------------------------

double SpectralField::eval(const Point& z) const {
  double v = 0.0;
  for (const auto& [a, co] : c) v += co * hermite_mode(a).eval(z);
  return v;
}

double SpectralField::norm_rho() const {
  double s = remainder_norm * remainder_norm;
  for (const auto& [a, co] : c) s += co * co * hermite_mode(a).norm2_rho();
  return std::sqrt(s);
}

SpectralField semigroup(const SpectralField& f, double dtau) {
  if (dtau <= 0.0) throw std::domain_error("semigroup: dtau <= 0");
  SpectralField g = f;
  for (auto& [a, co] : g.c) {
    int total = 0;
    for (int v : a) total += v;
    co *= std::exp(-0.5 * total * dtau);
  }
  return g;
}

double semigroup_eval(const std::function<double(const Point&)>& f,
                      int growth_degree, double dtau, const Point& z) {
  if (dtau <= 0.0) throw std::domain_error("semigroup_eval: dtau <= 0");
  if (growth_degree < 0 || growth_degree > 30)
    throw std::domain_error(
        "semigroup_eval: growth class beyond degree 30 is not resolvable");
  const int n = growth_degree / 2 + 3;
  const auto rule = quad::gauss_hermite_rho(n);
  // weight e^{-xi^2}: xi = s/2 against the e^{-s^2/4} rule, factor 1/2 each
  const double a = std::exp(-0.5 * dtau);
  const double b = 2.0 * std::sqrt(1.0 - std::exp(-dtau));
  const double scale = std::pow(kPi, -2.5) / 32.0;
  double acc = 0.0;
  Point y;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i3 = 0; i3 < n; ++i3)
          for (int i4 = 0; i4 < n; ++i4) {
            const int idx[5] = {i0, i1, i2, i3, i4};
            double w = 1.0;
            for (int j = 0; j < 5; ++j) {
              y[j] = a * z[j] + b * 0.5 * rule.nodes[idx[j]];
              w *= rule.weights[idx[j]];
            }
            acc += w * f(y);
          }
  return scale * acc;
}

double semigroup_eval_radial(const std::function<double(double)>& f,
                             double dtau, double r) {
  if (dtau <= 0.0) throw std::domain_error("semigroup_eval_radial: dtau <= 0");
  const double a = r * std::exp(-0.5 * dtau);
  const double b2 = 4.0 * (1.0 - std::exp(-dtau));
  const double b = std::sqrt(b2);
  // angular reduction of the 5-D Gaussian kernel:
  //   w(r) = (pi b^2)^{-5/2} omega3 int f(rho) rho^4 G(rho) drho,
  //   G = (2/c^3)[(c-1)e^{-(rho-a)^2/b^2} + (c+1)e^{-(rho+a)^2/b^2}],
  //   c = 2 a rho / b^2
  auto G = [&](double rho) {
    const double c = 2.0 * a * rho / b2;
    if (c < 1e-3) {
      const double c2 = c * c;
      return (4.0 / 3.0) * (1.0 + c2 / 10.0 + c2 * c2 / 280.0) *
             std::exp(-(rho * rho + a * a) / b2);
    }
    const double em = (rho - a) / b, ep = (rho + a) / b;
    return (2.0 / (c * c * c)) *
           ((c - 1.0) * std::exp(-em * em) + (c + 1.0) * std::exp(-ep * ep));
  };
  const double hi = a + 14.0 * b;
  auto integrand = [&](double rho) {
    return f(rho) * rho * rho * rho * rho * G(rho);
  };
  // scale-aware tolerance: a fixed absolute one bottoms out in roundoff
  // once the integrand reaches ~1e4
  quad::QuadratureSpec rough;
  rough.abs_tol = 1e-3;
  const double est = quad::adaptive(integrand, 0.0, hi, rough);
  quad::QuadratureSpec spec;
  spec.abs_tol = 1e-11 * (1.0 + std::fabs(est));
  const double integral = quad::adaptive(integrand, 0.0, hi, spec);
  return std::pow(kPi * b2, -2.5) * quad::kOmega3 * integral;
}

// ---- mode coefficients ----------------------------------------------------

namespace {

double expm1r(double x) {  // (e^x - 1)/x
  if (std::fabs(x) < 1e-8) return 1.0 + 0.5 * x + x * x / 6.0;
  return std::expm1(x) / x;
}

// int_{ta}^{tb} e^{m tau} g(tau) dtau with g interpolated exponentially when
// the endpoint values share a sign, linearly otherwise
double weighted_segment(double m, double ta, double tb, double ga, double gb) {
  const double dt = tb - ta;
  if (ga * gb > 0.0) {
    const double gam = std::log(ga / gb) / dt;
    return ga * std::exp(m * ta) * dt * expm1r((m - gam) * dt);
  }
  const double s = (gb - ga) / dt;
  if (std::fabs(m) * dt < 1e-10)
    return std::exp(m * ta) *
           (ga * dt + 0.5 * s * dt * dt + m * (0.5 * ga * dt * dt));
  const double e = std::expm1(m * dt);
  return std::exp(m * ta) *
         (ga * e / m + s * ((dt * (e + 1.0)) / m - e / (m * m)));
}

}  // namespace

BSeries mode_coefficient_b(const MultiIndex& alpha,
                           const std::vector<double>& tau,
                           const std::vector<double>& g) {
  if (tau.size() != g.size() || tau.size() < 2)
    throw std::domain_error("mode_coefficient_b: need >= 2 aligned samples");
  int total = 0;
  for (int v : alpha) total += v;
  const double lambda = 0.5 * total;
  const std::size_t n = tau.size();

  BSeries out;
  out.tau = tau;
  out.b.assign(n, 0.0);
  bool all_zero = true;
  for (double v : g) all_zero = all_zero && v == 0.0;
  if (all_zero) return out;

  // fitted tail rate from the last same-sign pair
  if (g[n - 1] == 0.0 || g[n - 2] == 0.0 || g[n - 1] * g[n - 2] < 0.0)
    throw std::domain_error("mode_coefficient_b: tail rate not identifiable");
  const double gamma =
      std::log(g[n - 2] / g[n - 1]) / (tau[n - 1] - tau[n - 2]);
  if (gamma <= 0.0)
    throw std::domain_error("mode_coefficient_b: samples do not decay");
  if (gamma < 7.0 / 6.0 - 0.05)
    throw std::domain_error(
        "mode_coefficient_b: decay slower than e^{-7 tau/6}");
  if (lambda + 1e-12 >= gamma + 1.0)
    throw std::domain_error(
        "mode_coefficient_b: lambda too large for a convergent tail");
  out.decay_rate = gamma;

  const double m = lambda - 1.0;
  // suffix integrals from the far end; tail uses the fitted exponential
  double S = g[n - 1] * std::exp(m * tau[n - 1]) / (gamma + 1.0 - lambda);
  out.b[n - 1] = -std::exp(-lambda * tau[n - 1]) * S;
  for (std::size_t k = n - 1; k-- > 0;) {
    S += weighted_segment(m, tau[k], tau[k + 1], g[k], g[k + 1]);
    out.b[k] = -std::exp(-lambda * tau[k]) * S;
  }
  return out;
}

// ---- (I + D) d = b --------------------------------------------------------

namespace {

double smoothstep_cutoff(double u) {
  if (u <= 1.0) return 1.0;
  if (u >= 2.0) return 0.0;
  const double w = u - 1.0;
  return 1.0 - w * w * (3.0 - 2.0 * w);
}

using Monomial = std::pair<std::array<int, 5>, double>;

std::vector<Monomial> expand(const HermiteMode& m) {
  std::vector<Monomial> terms{{{0, 0, 0, 0, 0}, 1.0}};
  for (int j = 0; j < 5; ++j) {
    std::vector<Monomial> nx;
    for (const auto& [e, c] : terms)
      for (std::size_t p = 0; p < m.axis[j].size(); ++p) {
        if (m.axis[j][p] == 0.0) continue;
        auto e2 = e;
        e2[j] = int(p);
        nx.emplace_back(e2, c * m.axis[j][p]);
      }
    terms = std::move(nx);
  }
  return terms;
}

// mean of prod z_j^{m_j} over the unit sphere S^4
double sphere_mean(const std::array<int, 5>& m) {
  int K = 0;
  double num = 1.0;
  for (int j = 0; j < 5; ++j) {
    if (m[j] % 2) return 0.0;
    const int k = m[j] / 2;
    K += k;
    for (int i = 1; i <= k; ++i) num *= 2.0 * i - 1.0;  // (2k-1)!!
  }
  for (int j = 0; j < K; ++j) num /= 5.0 + 2.0 * j;
  return num;
}

}  // namespace

DReport solve_d(const std::vector<double>& b, double tau0,
                const std::function<double(double)>& eta) {
  DReport rep;
  rep.modes = modes_up_to(4);
  const std::size_t n = rep.modes.size();
  if (b.size() != n)
    throw std::domain_error("solve_d: b must have one entry per |alpha|<=4 mode");
  auto cut = eta ? eta : smoothstep_cutoff;
  const double scale = std::exp(3.0 * tau0 / 8.0);

  std::vector<HermiteMode> modes(n);
  std::vector<std::vector<Monomial>> monos(n);
  std::vector<double> nrm(n);
  for (std::size_t i = 0; i < n; ++i) {
    modes[i] = hermite_mode(rep.modes[i]);
    monos[i] = expand(modes[i]);
    nrm[i] = std::sqrt(modes[i].norm2_rho());
  }

  quad::QuadratureSpec spec;
  spec.abs_tol = 1e-16;
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      // radial reduction: collect the sphere means of e_i e_j by power of r
      std::array<double, 9> radial{};  // degree <= 8, even powers only
      bool any = false;
      for (const auto& [ea, ca] : monos[i])
        for (const auto& [eb, cb] : monos[j]) {
          std::array<int, 5> e;
          int deg = 0;
          for (int kk = 0; kk < 5; ++kk) {
            e[kk] = ea[kk] + eb[kk];
            deg += e[kk];
          }
          const double mean = sphere_mean(e);
          if (mean != 0.0) {
            radial[deg / 2] += ca * cb * mean;
            any = true;
          }
        }
      if (!any) continue;
      const double lo = scale;  // (1 - eta) vanishes below |z| = e^{3tau0/8}
      const double hi = 2.0 * scale + 30.0;
      const double val =
          quad::kOmega4 *
          quad::adaptive(
              [&](double r) {
                double q = 0.0;
                const double r2 = r * r;
                for (std::size_t kk = radial.size(); kk-- > 0;)
                  q = q * r2 + radial[kk];
                return (1.0 - cut(r / scale)) * q * r2 * r2 *
                       std::exp(-0.25 * r2);
              },
              lo, hi, spec);
      A[i][j] = val / (nrm[i] * nrm[j]);
      A[j][i] = A[i][j];
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::fabs(A[i][j]);
    rep.D_inf = std::max(rep.D_inf, row);
  }
  if (rep.D_inf >= 0.5)
    throw std::runtime_error("solve_d: ||D||_inf >= 1/2, tau0 too small");

  // direct elimination with partial pivoting on (I + D)
  std::vector<std::vector<double>> M = A;
  for (std::size_t i = 0; i < n; ++i) M[i][i] += 1.0;
  std::vector<double> x = b;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(M[r][col]) > std::fabs(M[piv][col])) piv = r;
    std::swap(M[col], M[piv]);
    std::swap(x[col], x[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = M[r][col] / M[col][col];
      if (f == 0.0) continue;
      for (std::size_t cc = col; cc < n; ++cc) M[r][cc] -= f * M[col][cc];
      x[r] -= f * x[col];
    }
  }
  rep.d.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double v = x[r];
    for (std::size_t cc = r + 1; cc < n; ++cc) v -= M[r][cc] * rep.d[cc];
    rep.d[r] = v / M[r][r];
  }

  double bmax = 0.0;
  for (double v : b) bmax = std::max(bmax, std::fabs(v));
  for (std::size_t i = 0; i < n; ++i) {
    double v = rep.d[i];
    for (std::size_t j = 0; j < n; ++j) v += A[i][j] * rep.d[j];
    rep.residual = std::max(rep.residual, std::fabs(v - b[i]));
  }
  if (bmax > 0.0 && rep.residual > 1e-12 * bmax)
    throw std::runtime_error("solve_d: elimination residual too large");
  return rep;
}

// ---- complement evolution -------------------------------------------------

namespace {

std::vector<Point> envelope_grid() {
  const double dirs[6][5] = {{1, 0, 0, 0, 0},
                             {0, 1, 0, 0, 0},
                             {1, 1, 1, 1, 1},
                             {1, -1, 1, -1, 1},
                             {2, 1, 0, -1, -2},
                             {1, 2, 3, 4, 5}};
  std::vector<Point> pts;
  for (const auto& d : dirs) {
    double nn = 0.0;
    for (double v : d) nn += v * v;
    nn = std::sqrt(nn);
    for (int k = 0; k <= 10; ++k) {
      const double r = 0.8 * k;
      Point p;
      for (int j = 0; j < 5; ++j) p[j] = r * d[j] / nn;
      pts.push_back(p);
    }
  }
  return pts;
}

}  // namespace

DecayLog evolve_complement(const SpectralField& f0,
                           const std::vector<double>& dtau_schedule) {
  for (const auto& [a, co] : f0.c) {
    int total = 0;
    for (int v : a) total += v;
    if (total <= 4 &&
        std::fabs(co) * std::sqrt(hermite_mode(a).norm2_rho()) > 1e-10)
      throw std::domain_error(
          "evolve_complement: nonzero projection onto the |alpha|<=4 modes");
  }
  const auto grid = envelope_grid();
  DecayLog log;
  SpectralField f = f0;
  double tau = 0.0;
  auto record = [&]() {
    log.tau.push_back(tau);
    log.norm.push_back(f.norm_rho());
    double env = 0.0;
    for (const auto& p : grid) {
      double r2 = 0.0;
      for (double v : p) r2 += v * v;
      env = std::max(env, std::fabs(f.eval(p)) /
                              (std::exp(-2.0 * tau) * (1.0 + r2 * r2)));
    }
    log.envelope.push_back(env);
  };
  record();
  for (double d : dtau_schedule) {
    f = semigroup(f, d);
    tau += d;
    record();
  }
  // regression of log norm against tau
  double st = 0, sn = 0, stt = 0, stn = 0;
  const std::size_t n = log.tau.size();
  for (std::size_t k = 0; k < n; ++k) {
    st += log.tau[k];
    sn += std::log(log.norm[k]);
    stt += log.tau[k] * log.tau[k];
    stn += log.tau[k] * std::log(log.norm[k]);
  }
  log.fitted_exponent = -(double(n) * stn - st * sn) / (double(n) * stt - st * st);
  return log;
}

}  // namespace forge::selfsim

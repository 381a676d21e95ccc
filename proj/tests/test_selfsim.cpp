#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "forge/quadrature.hpp"
#include "forge/selfsim.hpp"

using namespace forge;
using namespace forge::selfsim;

namespace {

std::vector<Point> test_points() {
  std::vector<Point> pts;
  const double vals[5] = {-2.1, -0.7, 0.0, 0.9, 1.8};
  for (int k = 0; k < 5; ++k) {
    Point p;
    for (int j = 0; j < 5; ++j) p[j] = vals[(k + j) % 5] * (1.0 + 0.1 * j);
    pts.push_back(p);
  }
  pts.push_back(Point{0.3, -1.2, 2.0, 0.1, -0.5});
  return pts;
}

double norm2_of(const Point& p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return s;
}

}  // namespace

TEST_CASE("frame round trip and tau monotonicity") {
  SelfSimilarFrame fr;
  fr.T = 3e-2;
  const Point x{1e-3, -2e-3, 0.0, 5e-4, 2e-3};
  double prev_tau = -1e300;
  for (double t : {0.0, 1e-2, 2e-2, 2.9e-2}) {
    auto [z, tau] = fr.to_frame(x, t);
    auto [xb, tb] = fr.to_physical(z, tau);
    for (int j = 0; j < 5; ++j) CHECK(xb[j] == doctest::Approx(x[j]).epsilon(1e-14));
    CHECK(tb == doctest::Approx(t).epsilon(1e-12));
    CHECK(tau > prev_tau);
    prev_tau = tau;
  }
  CHECK_THROWS_AS(fr.to_frame(x, fr.T), std::domain_error);
}

TEST_CASE("Hermite modes: eigen relations, orthogonality, special modes") {
  const auto pts = test_points();
  const auto modes = modes_up_to(6);
  CHECK(modes.size() == 462);

  for (const auto& a : modes) {
    const auto m = hermite_mode(a);
    double sup = 0.0, res = 0.0;
    for (const auto& p : pts) {
      sup = std::max(sup, std::fabs(m.eval(p)));
      res = std::max(res, std::fabs(m.apply_Az(p) + m.lambda * m.eval(p)));
    }
    CHECK(res <= 1e-8 * (1.0 + sup));
  }

  // orthogonality factorizes over axes; 1-D Gauss-Hermite is exact here
  const auto rule = quad::gauss_hermite_rho(8);
  auto inner1d = [&](int ka, int kb) {
    const auto pa = hermite1d(ka), pb = hermite1d(kb);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      s += rule.weights[i] * poly_eval(pa, rule.nodes[i]) *
           poly_eval(pb, rule.nodes[i]);
    return s;
  };
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      double ip = 1.0;
      for (int ax = 0; ax < 5; ++ax) ip *= inner1d(modes[i][ax], modes[j][ax]);
      const double na = std::sqrt(hermite_mode(modes[i]).norm2_rho());
      const double nb = std::sqrt(hermite_mode(modes[j]).norm2_rho());
      CHECK(std::fabs(ip) <= 1e-10 * na * nb);
    }

  // ground mode
  const auto e0 = hermite_mode({0, 0, 0, 0, 0});
  CHECK(e0.lambda == 0.0);
  for (const auto& p : pts) CHECK(e0.eval(p) == 1.0);

  // -A_z(|z|^2 - 10) = (|z|^2 - 10), the Z1 profile e1 = 1 - |z|^2/10
  for (const auto& p : pts) {
    double az = 0.0;  // assemble from the five p_2(z_j) modes
    double val = 0.0;
    for (int ax = 0; ax < 5; ++ax) {
      MultiIndex a{};
      a[ax] = 2;
      const auto m = hermite_mode(a);
      az += m.apply_Az(p);
      val += m.eval(p);
    }
    CHECK(val == doctest::Approx(norm2_of(p) - 10.0).epsilon(1e-13));
    CHECK(-az == doctest::Approx(val).epsilon(1e-12));
  }

  CHECK_THROWS_AS(hermite_mode({13, 0, 0, 0, 0}), std::domain_error);
  CHECK_THROWS_AS(hermite_mode({5, 5, 5, 0, 0}), std::domain_error);
}

TEST_CASE("Parseval consistency of spectral fields") {
  SpectralField f;
  f.N = 4;
  f.c = {{{0, 0, 0, 0, 0}, 0.3},
         {{1, 0, 1, 0, 0}, -0.7},
         {{2, 0, 0, 0, 0}, 0.2},
         {{0, 3, 0, 1, 0}, 0.05}};
  const double direct = std::sqrt(quad::rho_inner_tensor5(
      [&](const double* z) {
        Point p{z[0], z[1], z[2], z[3], z[4]};
        const double v = f.eval(p);
        return v * v;
      },
      8));
  CHECK(f.norm_rho() == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("semigroup: eigen-decay, moment flow, Lemma 2.3 bound") {
  const double dtau = 0.7;
  const auto pts = test_points();

  // diagonal action matches the Mehler pullback on eigenmodes
  const MultiIndex picks[6] = {{0, 0, 0, 0, 0}, {1, 0, 0, 0, 0},
                               {2, 1, 0, 0, 0}, {0, 0, 4, 0, 0},
                               {2, 2, 1, 0, 0}, {1, 1, 1, 1, 2}};
  for (const auto& a : picks) {
    const auto m = hermite_mode(a);
    int deg = 0;
    for (int v : a) deg += v;
    for (const auto& p : pts) {
      const double got = semigroup_eval(
          [&](const Point& z) { return m.eval(z); }, deg, dtau, p);
      const double want = std::exp(-m.lambda * dtau) * m.eval(p);
      CHECK(std::fabs(got - want) <= 1e-6 * (1.0 + std::fabs(want)));
    }
  }

  // radial path: identity and moment flow
  for (double r : {0.0, 0.5, 2.0, 6.0}) {
    CHECK(semigroup_eval_radial([](double) { return 1.0; }, dtau, r) ==
          doctest::Approx(1.0).epsilon(1e-8));
    const double got =
        semigroup_eval_radial([](double rho) { return rho * rho; }, dtau, r);
    const double want = 10.0 + std::exp(-dtau) * (r * r - 10.0);
    CHECK(std::fabs(got - want) <= 1e-6 * (1.0 + std::fabs(want)));
  }

  // |e^{A dtau}|z|^{2l}| <= C (1 + e^{-l dtau}|z|^{2l}), C independent of dtau
  for (int l : {1, 2}) {
    for (double dt : {0.2, 1.0, 3.0}) {
      double worst = 0.0;
      for (double r : {0.0, 1.0, 3.0, 7.0, 12.0}) {
        const double got = semigroup_eval_radial(
            [&](double rho) { return std::pow(rho, 2 * l); }, dt, r);
        worst = std::max(
            worst, std::fabs(got) /
                       (1.0 + std::exp(-l * dt) * std::pow(r, 2 * l)));
      }
      // the dtau -> inf limit is the Gaussian moment E|Z|^{2l} (10, 140)
      CHECK(worst <= 150.0);
    }
  }

  // semigroup property on coefficients
  SpectralField f;
  f.c = {{{1, 0, 0, 0, 0}, 1.0}, {{2, 2, 0, 0, 0}, -0.4}, {{0, 0, 0, 0, 3}, 0.2}};
  const auto two = semigroup(semigroup(f, 0.4), 0.9);
  const auto one = semigroup(f, 1.3);
  for (std::size_t k = 0; k < f.c.size(); ++k)
    CHECK(two.c[k].second == doctest::Approx(one.c[k].second).epsilon(1e-8));
  CHECK_THROWS_AS(semigroup(f, 0.0), std::domain_error);
}

TEST_CASE("Lemma 2.2 smoothing bound for compactly supported data") {
  auto bump = [](double rho) {
    if (rho >= 1.0) return 0.0;
    const double w = 1.0 - rho * rho;
    return w * w;
  };
  const double norm_rho_f = std::sqrt(
      quad::rho_inner_radial([&](double rho) { return bump(rho) * bump(rho); }));
  for (double dtau : {0.1, 0.5, 2.0}) {
    const double bound =
        std::pow(1.0 - std::exp(-dtau), -1.25) * norm_rho_f;
    double sup_c = 0.0, sup_f = 0.0;
    for (int k = 0; k <= 20; ++k) {
      const double r = 0.4 * k;
      sup_c = std::max(sup_c, std::fabs(semigroup_eval_radial(bump, dtau, r)));
    }
    for (int k = 0; k <= 40; ++k) {
      const double r = 0.2 * k;
      sup_f = std::max(sup_f, std::fabs(semigroup_eval_radial(bump, dtau, r)));
    }
    const double ratio = sup_f / bound;
    CHECK(std::isfinite(ratio));
    CHECK(ratio <= 10.0);
    CHECK(sup_f == doctest::Approx(sup_c).epsilon(0.05));  // grid-stable
  }
}

TEST_CASE("mode coefficients b_alpha") {
  std::vector<double> tau, zero, g;
  for (int k = 0; k <= 400; ++k) {
    tau.push_back(6.0 + 0.025 * k);
    zero.push_back(0.0);
    g.push_back(std::exp(-7.0 * tau.back() / 6.0));
  }

  const auto bz = mode_coefficient_b({1, 0, 0, 0, 0}, tau, zero);
  for (double v : bz.b) CHECK(v == 0.0);

  // closed form: b(tau) = -e^{-13 tau/6} / (13/6 - lambda)
  for (const MultiIndex a :
       {MultiIndex{0, 0, 0, 0, 0}, MultiIndex{1, 1, 0, 0, 0},
        MultiIndex{4, 0, 0, 0, 0}}) {
    int deg = 0;
    for (int v : a) deg += v;
    const double lam = 0.5 * deg;
    const auto bs = mode_coefficient_b(a, tau, g);
    CHECK(bs.decay_rate == doctest::Approx(7.0 / 6.0).epsilon(1e-10));
    for (std::size_t k = 0; k < tau.size(); ++k) {
      const double want = -std::exp(-13.0 * tau[k] / 6.0) / (13.0 / 6.0 - lam);
      CHECK(std::fabs(bs.b[k] - want) <= 1e-8 * std::fabs(want));
      CHECK(std::fabs(bs.b[k]) <= 6.1 * std::exp(-13.0 * tau[k] / 6.0));
    }
    // derivative relation b' = -lambda b + e^{-tau} g (5-point differences)
    const double dt = tau[1] - tau[0];
    for (std::size_t k = 2; k + 2 < tau.size(); k += 25) {
      const double db = (bs.b[k - 2] - 8.0 * bs.b[k - 1] + 8.0 * bs.b[k + 1] -
                         bs.b[k + 2]) /
                        (12.0 * dt);
      const double rhs = -lam * bs.b[k] + std::exp(-tau[k]) * g[k];
      CHECK(std::fabs(db - rhs) <= 1e-5 * std::fabs(bs.b[k]));
    }
  }

  std::vector<double> grow = g;
  std::reverse(grow.begin(), grow.end());
  CHECK_THROWS_AS(mode_coefficient_b({0, 0, 0, 0, 0}, tau, grow),
                  std::domain_error);
  std::vector<double> slow;
  for (double t : tau) slow.push_back(std::exp(-0.5 * t));
  CHECK_THROWS_AS(mode_coefficient_b({0, 0, 0, 0, 0}, tau, slow),
                  std::domain_error);
}

TEST_CASE("(I+D)d = b system") {
  const auto modes = modes_up_to(4);
  CHECK(modes.size() == 126);

  std::vector<double> ones(modes.size(), 1.0);
  const auto no_cut = solve_d(ones, 6.0, [](double) { return 1.0; });
  CHECK(no_cut.D_inf == 0.0);
  for (std::size_t i = 0; i < ones.size(); ++i) CHECK(no_cut.d[i] == 1.0);

  double prev = 1e300;
  for (double tau0 : {6.0, 8.0, 10.0}) {
    const auto rep = solve_d(ones, tau0);
    CHECK(rep.D_inf < 0.5);
    CHECK(rep.D_inf < prev);
    CHECK(rep.residual <= 1e-12);
    prev = rep.D_inf;
  }

  // with the closed-form b at tau0, |d| <= C e^{-13 tau0/6}
  const double tau0 = 6.0;
  std::vector<double> b(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    int deg = 0;
    for (int v : modes[i]) deg += v;
    b[i] = -std::exp(-13.0 * tau0 / 6.0) / (13.0 / 6.0 - 0.5 * deg);
  }
  const auto rep = solve_d(b, tau0);
  double dmax = 0.0;
  for (double v : rep.d) dmax = std::max(dmax, std::fabs(v));
  CHECK(dmax <= 7.0 * std::exp(-13.0 * tau0 / 6.0));
}

TEST_CASE("complement evolution and the spectral gap") {
  std::vector<double> schedule(8, 0.5);

  SpectralField single;
  single.N = 5;
  single.c = {{{2, 1, 1, 1, 0}, 1.0}};
  const auto lg = evolve_complement(single, schedule);
  CHECK(lg.fitted_exponent == doctest::Approx(2.5).epsilon(1e-8));
  for (double e : lg.envelope) CHECK(std::isfinite(e));

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  SpectralField mix;
  mix.N = 8;
  for (const auto& a : modes_up_to(8)) {
    int deg = 0;
    for (int v : a) deg += v;
    if (deg >= 5) mix.c.emplace_back(a, un(rng));
  }
  const auto lm = evolve_complement(mix, schedule);
  CHECK(lm.fitted_exponent >= 2.5 - 0.05);

  SpectralField bad;
  bad.c = {{{0, 0, 0, 0, 0}, 1.0}};
  CHECK_THROWS_AS(evolve_complement(bad, schedule), std::domain_error);
}

TEST_CASE("(T-t)^{lambda} e_alpha solves the physical heat equation") {
  const double T = 2.0;
  for (const MultiIndex a :
       {MultiIndex{1, 0, 0, 0, 0}, MultiIndex{2, 0, 1, 0, 0},
        MultiIndex{2, 2, 0, 0, 0}, MultiIndex{0, 1, 1, 1, 1}}) {
    const auto m = hermite_mode(a);
    auto u = [&](const Point& x, double t) {
      const double s = std::sqrt(T - t);
      Point z;
      for (int j = 0; j < 5; ++j) z[j] = x[j] / s;
      return std::pow(T - t, m.lambda) * m.eval(z);
    };
    const Point x0{0.4, -0.3, 0.7, 0.1, -0.6};
    const double t0 = 1.0, h = 0.02;
    // 4th-order central differences in each coordinate
    auto d2 = [&](int ax) {
      Point xs = x0;
      double acc = -30.0 * u(xs, t0);
      const double cs[4] = {16.0, 16.0, -1.0, -1.0};
      const double os[4] = {h, -h, 2.0 * h, -2.0 * h};
      for (int k = 0; k < 4; ++k) {
        xs[ax] = x0[ax] + os[k];
        acc += cs[k] * u(xs, t0);
      }
      return acc / (12.0 * h * h);
    };
    double lap = 0.0;
    for (int ax = 0; ax < 5; ++ax) lap += d2(ax);
    const double ut = (u(x0, t0 - 2.0 * h) - 8.0 * u(x0, t0 - h) +
                       8.0 * u(x0, t0 + h) - u(x0, t0 + 2.0 * h)) /
                      (12.0 * h);
    CHECK(std::fabs(ut - lap) <= 1e-6);
  }
}

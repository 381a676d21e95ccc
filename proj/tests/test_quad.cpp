#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "forge/bubble.hpp"
#include "forge/quadrature.hpp"

using namespace forge;
using namespace forge::quad;

namespace {
// Beta-function oracle: int U^p = omega4 * alpha^{7/3} * (1/2) B(5/2, 1)
//                               = 8 pi^2 15^{3/4}
const double kIp = 8.0 * M_PI * M_PI * std::pow(15.0, 0.75);
const double kGauss5 = std::pow(4.0 * M_PI, 2.5);  // int e^{-|z|^2/4} dz
}  // namespace

TEST_CASE("mass of U^p against the Beta-function closed form") {
  const double v = radial_integral(bubble::U_pow_p);
  CHECK(std::fabs(v - kIp) / kIp <= 1e-8);
}

TEST_CASE("Gaussian normalization in five dimensions") {
  const double v = radial_integral(
      [](double r) { return std::exp(-0.25 * r * r); });
  CHECK(std::fabs(v - kGauss5) / kGauss5 <= 1e-10);
}

TEST_CASE("mass constants and the integration-by-parts identity") {
  const MassConstants c = mass_constants();
  CHECK(c.I_p > 0.0);
  CHECK(c.I_6 > 0.0);
  CHECK(c.I_d > 0.0);
  CHECK(c.identity_defect <= 1e-8);
  CHECK(std::fabs(c.I_p - kIp) / kIp <= 1e-8);
  // Independent mpmath references
  CHECK(c.I_6 == doctest::Approx(1182.1043706678340).epsilon(1e-8));
  CHECK(c.I_d == doctest::Approx(168.87205295254771).epsilon(1e-8));

  // Convergence: stable under tighter tolerance
  QuadratureSpec tight;
  tight.abs_tol = 1e-12;
  const MassConstants c2 = mass_constants(tight);
  CHECK(std::fabs(c2.I_6 - c.I_6) / c.I_6 <= 1e-8);
  CHECK(std::fabs(c2.I_d - c.I_d) / c.I_d <= 1e-8);
}

TEST_CASE("rho inner products") {
  // (1,1)_rho
  const double one = rho_inner_radial([](double) { return 1.0; });
  CHECK(std::fabs(one - kGauss5) / kGauss5 <= 1e-10);

  // (e1, z1)_rho = 0 by parity; e1 = 1 - |z|^2/10
  const double odd = rho_inner_axisym([](double x1, double rp) {
    const double z2 = x1 * x1 + rp * rp;
    return (1.0 - z2 / 10.0) * x1;
  });
  CHECK(std::fabs(odd) <= 1e-8 * kGauss5);

  // (e1, e1)_rho = 0.4 (4 pi)^{5/2}: Gaussian moment oracle with per-axis
  // variance 2 (E|z|^2 = 10, E|z|^4 = 140 under the normalized measure).
  const double e11 = rho_inner_radial([](double r) {
    const double e1 = 1.0 - r * r / 10.0;
    return e1 * e1;
  });
  CHECK(e11 == doctest::Approx(0.4 * kGauss5).epsilon(1e-9));
}

TEST_CASE("tensor Gauss-Hermite matches the reduced paths") {
  const double e11_t = rho_inner_tensor5(
      [](const double* z) {
        double z2 = 0.0;
        for (int i = 0; i < 5; ++i) z2 += z[i] * z[i];
        const double e1 = 1.0 - z2 / 10.0;
        return e1 * e1;
      },
      6);
  CHECK(e11_t == doctest::Approx(0.4 * kGauss5).epsilon(1e-12));
}

TEST_CASE("Gauss-Hermite exactness for polynomials") {
  // m nodes integrate degree <= 2m-1 exactly against e^{-s^2/4}.
  // Moments: int s^{2k} e^{-s^2/4} ds = (2k-1)!! 2^k sqrt(4 pi).
  const double s4pi = std::sqrt(4.0 * M_PI);
  for (int m : {3, 5, 8}) {
    Rule rule = gauss_hermite_rho(m);
    double dfact = 1.0, pow2 = 1.0;
    for (int k = 0; 2 * k + 1 <= 2 * m - 1; ++k) {
      if (k > 0) {
        dfact *= (2.0 * k - 1.0);
        pow2 *= 2.0;
      }
      const double exact = dfact * pow2 * s4pi;
      double q = 0.0;
      for (int i = 0; i < m; ++i)
        q += rule.weights[i] * std::pow(rule.nodes[i], 2 * k);
      const double eps = std::numeric_limits<double>::epsilon();
      CHECK(std::fabs(q - exact) <= 10.0 * eps * std::fabs(exact) + 1e-18);
    }
  }
}

TEST_CASE("adaptive refinement reports failure on pathological input") {
  QuadratureSpec spec;
  spec.abs_tol = 1e-14;
  spec.max_depth = 3;
  CHECK_THROWS_AS(
      adaptive([](double x) { return std::sin(1.0 / (x + 1e-8)); }, 0.0, 1.0,
               spec),
      PrecisionError);
}

TEST_CASE("determinism of quadrature values") {
  const double a = radial_integral(bubble::U_pow_p);
  const double b = radial_integral(bubble::U_pow_p);
  CHECK(a == b);
}

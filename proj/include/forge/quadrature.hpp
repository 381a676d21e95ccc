#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace forge::quad {

inline constexpr double kOmega4 = 26.318945069571930998;  // 8*pi^2/3, |S^4|
inline constexpr double kOmega3 = 19.739208802178717238;  // 2*pi^2,   |S^3|

struct PrecisionError : std::runtime_error {
  double last_estimate, previous_estimate;
  PrecisionError(const std::string& what, double last, double prev)
      : std::runtime_error(what), last_estimate(last), previous_estimate(prev) {}
};

struct QuadratureSpec {
  double abs_tol = 1e-10;
  int max_depth = 24;
  int panel_nodes = 15;
};

// Gauss-Legendre nodes/weights on [-1,1].
struct Rule {
  std::vector<double> nodes, weights;
};
const Rule& gauss_legendre(int n);

// Gauss-Hermite rule adapted to the weight e^{-s^2/4}:
// sum w_i f(s_i) = int f(s) e^{-s^2/4} ds, exact for deg <= 2n-1.
Rule gauss_hermite_rho(int n);

double fixed_gl(const std::function<double(double)>& f, double a, double b,
                int n);

// Adaptive Gauss-Legendre on [a,b]; deterministic left-to-right recursion.
double adaptive(const std::function<double(double)>& f, double a, double b,
                const QuadratureSpec& spec);

// int_{R^5} f dx for radial f, via omega4 * int f(r) r^4 dr with the tail
// substitution r = s/(1-s).
double radial_integral(const std::function<double(double)>& f,
                       const QuadratureSpec& spec = {});

// int_0^{r_cap} f(r) r^4 dr * omega4 (ball integral B_{r_cap}).
double ball_integral(const std::function<double(double)>& f, double r_cap,
                     const QuadratureSpec& spec = {});

// rho-weighted inner products, rho = e^{-|z|^2/4} on R^5.
// Radial inputs reduce to 1-D; axisymmetric inputs (functions of the first
// coordinate and transverse radius) reduce to 2-D.
double rho_inner_radial(const std::function<double(double)>& fg,
                        const QuadratureSpec& spec = {});
double rho_inner_axisym(const std::function<double(double, double)>& fg,
                        const QuadratureSpec& spec = {});
// Tensor Gauss-Hermite over R^5, n nodes per axis.
double rho_inner_tensor5(const std::function<double(const double*)>& fg, int n);

struct MassConstants {
  double I_p;      // int U^p
  double I_6;      // int W6^2
  double I_d;      // int (d1 U)^2
  double I_mix;    // int p U^{p-1} W6
  double identity_defect;  // |I_mix + (3/2) I_p| / I_p
};
MassConstants mass_constants(const QuadratureSpec& spec = {});

}  // namespace forge::quad

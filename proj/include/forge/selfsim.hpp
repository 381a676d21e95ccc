#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

// Self-similar frame for the heat flow: z = x / sqrt(T - t), T - t = e^{-tau}.
// The drift operator A_z = Delta - (z/2).grad is diagonalized by tensor
// Hermite polynomials adapted to the weight rho = e^{-|z|^2/4}; the heat
// semigroup acts diagonally on mode coefficients and by an exact Gaussian
// (Mehler) pullback on pointwise data.

namespace forge::selfsim {

using Point = std::array<double, 5>;
using MultiIndex = std::array<int, 5>;

inline constexpr int kNMax = 12;  // largest per-mode total degree generated

struct SelfSimilarFrame {
  double T = 1e-2;
  double tau0 = 6.0;

  std::pair<Point, double> to_frame(const Point& x, double t) const;
  std::pair<Point, double> to_physical(const Point& z, double tau) const;
};

// 1-D monic polynomials orthogonal for the weight e^{-s^2/4}:
//   p_0 = 1, p_1 = s, p_{k+1} = s p_k - 2k p_{k-1},
// satisfying p'' - (s/2) p' = -(k/2) p.
std::vector<double> hermite1d(int k);            // coefficients, low to high
std::vector<double> poly_derivative(const std::vector<double>& c);
double poly_eval(const std::vector<double>& c, double s);
double hermite1d_norm2(int k);  // int p_k^2 e^{-s^2/4} ds = 2^{k+1} sqrt(pi) k!

struct HermiteMode {
  MultiIndex alpha{};
  double lambda = 0.0;                      // |alpha| / 2
  std::array<std::vector<double>, 5> axis;  // per-axis coefficients

  double eval(const Point& z) const;
  double apply_Az(const Point& z) const;  // exact polynomial differentiation
  double norm2_rho() const;
};

HermiteMode hermite_mode(const MultiIndex& alpha);

// all multi-indices with |alpha| <= total_degree, graded lexicographic
std::vector<MultiIndex> modes_up_to(int total_degree);

struct SpectralField {
  int N = 0;  // truncation degree
  std::vector<std::pair<MultiIndex, double>> c;  // monic-mode coefficients
  double remainder_norm = 0.0;

  double eval(const Point& z) const;
  double norm_rho() const;  // sqrt(sum c^2 ||e||^2 + remainder^2)
};

// diagonal action c_alpha -> e^{-lambda_alpha dtau} c_alpha
SpectralField semigroup(const SpectralField& f, double dtau);

// pointwise e^{A_z dtau} f by the Mehler pullback
//   w(z) = pi^{-5/2} int e^{-|xi|^2} f(z e^{-dtau/2} + 2 sqrt(1-e^{-dtau}) xi)
// via tensor Gauss-Hermite; growth_degree is the polynomial growth the
// quadrature must resolve exactly (input classes beyond degree 30 rejected).
double semigroup_eval(const std::function<double(const Point&)>& f,
                      int growth_degree, double dtau, const Point& z);

// radial variant with the exact angular reduction; handles arbitrary decay
double semigroup_eval_radial(const std::function<double(double)>& f,
                             double dtau, double r);

// b_alpha(tau) = -e^{-lambda tau} int_tau^inf e^{(lambda-1)tau'} g(tau') dtau'
// from samples of g = (G, e_alpha)_rho; the tail beyond the last sample is
// the fitted exponential. Samples must decay at least like e^{-7 tau/6}.
struct BSeries {
  std::vector<double> tau, b;
  double decay_rate = 0.0;  // fitted tail rate of g
};
BSeries mode_coefficient_b(const MultiIndex& alpha,
                           const std::vector<double>& tau,
                           const std::vector<double>& g);

// (I + D) d = b(tau0) over the modes with lambda_alpha <= 2 (|alpha| <= 4),
// D_ij = (e_i, (1 - eta) e_j)_rho on rho-normalized modes, eta evaluated at
// |z| e^{-3 tau0 / 8}. eta defaults to the cubic smoothstep cutoff (1 on
// [0,1], 0 beyond 2) when no profile is supplied.
struct DReport {
  std::vector<MultiIndex> modes;
  std::vector<double> d;
  double D_inf = 0.0;      // ||D||_inf
  double residual = 0.0;   // ||(I+D)d - b||_inf
};
DReport solve_d(const std::vector<double>& b, double tau0,
                const std::function<double(double)>& eta = {});

// evolve a field supported on |alpha| >= 5 by the semigroup and log the
// rho-norm decay plus the pointwise envelope sup |f| / (e^{-2tau}(1+|z|^4))
struct DecayLog {
  std::vector<double> tau, norm, envelope;
  double fitted_exponent = 0.0;  // of the rho-norm, positive = decay
};
DecayLog evolve_complement(const SpectralField& f0,
                           const std::vector<double>& dtau_schedule);

}  // namespace forge::selfsim

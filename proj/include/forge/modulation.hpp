#pragma once
// Modulation parameter system: leading-order scaling laws, the singular
// linear ODE solved through its integral representation, the Picard
// iteration for the first corrections lambda_{i,1}, and backward
// integration of the translation parameters xi_i.

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "forge/fit.hpp"

namespace forge::modulation {

using Point = std::array<double, 5>;

// ---- leading-order laws ---------------------------------------------------

// lambda_{1,0} = kappa^2 (T-t)^4/16,  lambda_{2,0} = kappa^2 (T-t)^2/4.
double leading_lambda(int i, double t, double kappa, double T);
double leading_lambda_dot(int i, double t, double kappa, double T);

// ---- Holder samples -------------------------------------------------------

// Function samples on a time grid with C^{0,alpha}/C^{1,alpha} seminorms
// computed from the samples themselves.
struct HolderSample {
  std::vector<double> t;  // strictly increasing, inside [0, T]
  std::vector<double> v;

  double sup_norm() const;
  double seminorm0(double alpha) const;          // [v]_{0,alpha}
  double norm0(double alpha) const { return sup_norm() + seminorm0(alpha); }
  std::vector<double> derivative() const;        // second-order differences
  double norm1(double alpha) const;              // sup|v|+sup|v'|+[v']_alpha
};

// Integral representation lambda(t) = -(T-t)^eps int_t^T (T-s)^{beta-eps} h ds,
// evaluated exactly for the piecewise-linear interpolant of h. Solves
// d(lambda)/dt + eps*lambda/(T-t) = (T-t)^beta h with lambda(T) = 0.
// Requires 0 < eps < beta + 1.
HolderSample singular_ode_general(const HolderSample& h, double eps, double T,
                                  double beta);

// The Lemma-form solver: beta = 3 and eps restricted to (0, 1/2).
HolderSample solve_singular_ode(const HolderSample& h, double eps, double T);

// ---- trajectory construction ---------------------------------------------

// Mass constants truncated to the ball B_{2R}; radius is the argument (=2R).
struct TruncatedMass {
  double radius = 0.0;
  double I6 = 0.0;    // int W6^2
  double Imix = 0.0;  // int pU^{p-1} W6            (negative)
  double J2 = 0.0;    // int pU^{p-1} W6 |y|^2      (negative, log-divergent as R->inf)
  double Idel = 0.0;  // int (d_1 U)^2
  double Jw1 = 0.0;   // int pU^{p-1} W1 y_1        (-> -int U^p as R->inf)
};
TruncatedMass truncated_mass(double radius);

struct Params {
  double T = 1e-2;
  double M = 1e-2;
  double R = 40.0;     // inner radius; integrals truncated to B_{2R}
  double alpha = 0.25; // Holder exponent for diagnostics
  double delta = 0.1;  // admissible |lambda_{i,1}|/lambda_{i,0}
  Point q{1, 0, 0, 0, 0};
  double eps1 = 4.0 / 3.0;  // singular coefficient used on the lambda_1 path
  double eps2 = 1.0;        // same for the lambda_2 path
  int nodes_per_octave = 6;
  double terminal = 1e-9;   // grid stops at T - terminal*T
  int max_iter = 60;
  double picard_tol = 1e-12;  // relative to sup lambda_{i,0}
};

// Field callables; any may be empty. Z2_lap defaults to the heat-equation
// identity (time derivative by differences) when absent. psi is accepted for
// interface parity but never enters the solved source: its envelope bound is
// recorded in delta_psi of the trajectory instead.
struct Fields {
  std::function<double(const Point&, double)> Z2;
  std::function<double(const Point&, double)> Z2_lap;
  std::function<Point(const Point&, double)> Z2_grad;
  std::function<double(const Point&, double)> psi;
  bool z1_quadratic = true;  // keep the |z|^2 part of Z1
  bool truncation = true;    // use B_2R-truncated mass integrals in the source
};

struct PicardLog {
  std::vector<double> step_sup;  // sup |new - old| per iteration
  std::vector<double> factors;   // ratio of consecutive step_sup entries
  double contraction() const;    // largest factor after warm-up
};

struct Trajectory {
  Params par;
  TruncatedMass tm;
  double kappa1 = 0.0, kappa2 = 0.0;
  std::vector<double> t;
  std::vector<double> lam10, lam11, lam1, dlam1;
  std::vector<double> lam20, lam21, lam2, dlam2;
  std::vector<Point> xi1, xi2, dxi1, dxi2;
  // displacements from the terminal centers (0 and q); the raw increments
  // are far below the rounding of q + delta, so keep them separately
  std::vector<Point> xi1_dev, xi2_dev;
  PicardLog log1, log2;
  double delta_psi = 0.0;   // worst-case envelope contribution, logged only
  std::size_t xi_cut = 0;   // nodes dropped from the terminal layer, if any

  double lambda(int i, double time) const;   // interpolated full lambda_i
  double dlambda(int i, double time) const;
  Point xi(int i, double time) const;
  Point dxi(int i, double time) const;
};

// Geometric grid t_m = T(1 - 2^{-m/ppo}) down to (T-t) = terminal*T.
std::vector<double> time_grid(const Params& par);

// Full pipeline: leading orders, both Picard corrections, xi backward solve.
Trajectory build_trajectory(const Params& par, const Fields& fields);

// Spec-shaped entry points operating on an existing trajectory.
Trajectory solve_lambda1_correction(const Params& par, const Fields& fields);
void solve_xi(Trajectory& traj, const Fields& fields);

using fit::fit_rate;

}  // namespace forge::modulation

#pragma once

#include <functional>
#include <vector>

#include "forge/bubble.hpp"
#include "forge/grid.hpp"

namespace forge::inner {

// ---- weighted norms --------------------------------------------------------

// ||h||_{2+a,nu} = sup lam0(t)^{-nu} (1 + |y|^{2+a}) |h|
// ||phi||_{*a,nu} = sup lam0(t)^{-nu} (1 + |y|^6) R^{-(6-a)} |phi|
// The gauge is a power of the reference scale lam0(t), which makes the
// pointwise envelope |phi_i| <= lam_i^{nu} R^{6-a}/(1+|y|^6) a direct
// restatement of ||phi||_{*a,nu} <= const.
struct WeightedNormSpec {
  double a = 0.5;   // decay exponent, strictly in (0,1)
  double nu = 1.75; // rate exponent
  double R = 40.0;  // working ball is B_{2R}
  std::function<double(double)> lam0;  // reference scale t -> lam_{i,0}(t)
};

enum class NormKind { source, solution };

struct WeightedNorm {
  double value = 0.0;
  double t_arg = 0.0;  // where the sup is attained
  double r_arg = 0.0;
};

// ---- sampled mode fields ---------------------------------------------------

// Radial mode samples on B_{2R} x time grid; s is the fast time
// s(t) = int_{t0}^t lam(t')^{-2} dt' accumulated by the solver.
struct ModeField {
  std::vector<double> t;
  std::vector<double> s;
  RadialGrid grid;
  std::vector<std::vector<double>> v;  // v[k][j] at (t[k], grid[j])
};

WeightedNorm weighted_norm(const ModeField& f, NormKind kind,
                           const WeightedNormSpec& norms);

// ---- orthogonal projection -------------------------------------------------

// h' = h - sum_j c_j W_j chi_R with chi_R the smoothstep cutoff at |y| = R
// and the coefficients solving the Gram system of the mode-matching kernels
// (the dilation kernel W6 for l = 0, the translation kernel W1 for l = 1).
struct ProjectedSource {
  std::function<double(double)> fn;
  std::vector<double> coef;
};

ProjectedSource project_orthogonal(const std::function<double(double)>& h,
                                   int l, double R);

// ---- the linearized inner problem ------------------------------------------

// lam(t)^2 d_t phi = Lap_y phi + p U^{p-1} phi + h(y,t) on the radial mode l
// of B_{2R}, zero boundary value at |y| = 2R, phi(y,0) = l_coef W0(y).
struct InnerProblem {
  int l = 0;                                // spherical-harmonic mode, 0 or 1
  std::function<double(double, double)> h;  // h(r, t); empty means zero
  std::function<double(double)> lam;        // scale law lam(t) > 0
  double t0 = 0.0;
  double t1 = 1.0;
  double courant = 0.05;   // dt = courant * lam(t)^2 (a fixed step in s)
  std::size_t n_r = 1601;  // radial nodes on [0, 2R]
  bool reproject = true;   // re-project each source slice on the grid
};

struct InnerSolution {
  ModeField phi;
  double l_coef = 0.0;
  double growth_rate = 0.0;  // measured W0-direction rate d log|b| / ds
};

// The negative mode of L0 used for the shooting data (cached).
const bubble::NegativeMode& negative_mode();

// W0-direction coefficient of snapshot k, <phi, W0> / <W0, W0> with the
// discrete r^4 weight of the field's own grid.
double w0_component(const ModeField& f, std::size_t k);

// Backward-Euler evolution with initial data l_coef * W0; building block of
// the shooting solve and of the instability measurement.
ModeField evolve_inner(const InnerProblem& prob, double R, double l_coef);

// For l = 0, l_coef is found by bisection on the final-time W0 coefficient
// of phi[h] + l * phi[W0 data]; l = 1 carries no unstable direction and
// solves with zero data.
InnerSolution solve_inner_mode(const InnerProblem& prob,
                               const WeightedNormSpec& norms);

}  // namespace forge::inner

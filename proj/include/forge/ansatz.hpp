#pragma once
// Approximate-solution assembly: the two bubbles, the global corrections
// Z1 and Z2 with their cutoffs, the residual pieces E_i / H_i / G / N, the
// orthogonality diagnostics, the Lemma-5.1 majorant sampler, and the
// rho-weighted decay fit for the outer source.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "forge/modulation.hpp"

namespace forge::ansatz {

using Point = std::array<double, 5>;
using modulation::Trajectory;

// ---- cutoff ---------------------------------------------------------------

// C^3 step: 1 for s <= 1, 0 for s >= 2, order-3 smoothstep in between.
double eta_step(double s);
double eta_step_d1(double s);
double eta_step_d2(double s);

// ---- fields ---------------------------------------------------------------

// Z_{2,0} = amp_plus * bump(|x - center|) + amp_minus * bump(|x + center|),
// bump(r) = (1 - (r/radius)^2)^3 on [0, radius]. Oddness requires the two
// amplitudes to be exact negatives of one another. The default radius keeps
// Z2(q,t) above half its maximum through t = 1e-2 (a much narrower seed
// diffuses away too quickly in five dimensions) and keeps the time variation
// of Z2(q,t) small enough that the lambda_2 correction iteration contracts.
struct SeedPair {
  double amp_plus = 1e-2;
  double amp_minus = -1e-2;
  double radius = 0.9;
  Point center{1, 0, 0, 0, 0};
};

struct AnsatzFields {
  double T = 1e-2;
  double M = 1e-2;     // amplitude of Z1
  double R = 40.0;     // inner cutoff radius
  Point q{1, 0, 0, 0, 0};
  SeedPair seed;
  bool z1_quadratic = true;  // keep the |z|^2 part of Z1

  // Z1 = M (T-t)(1 - |z|^2/10) = M[(T-t) - |x|^2/10]; an exact heat solution.
  double Z1(const Point& x, double t) const;
  // eta1 = eta(|x| / (T-t)^{1/8}); support |z| <= 2 e^{3 tau/8}.
  double eta1(const Point& x, double t) const;
  double etaR(double r) const { return eta_step(r / R); }

  double sup_Z20() const;   // ||Z2||_inf, attained at t = 0
  double delta0() const { return sup_Z20() / 10.0; }
};

// ---- heat evolution of the seed -------------------------------------------

// 5-D heat evolution of a radial profile supported on [0, support],
// evaluated at distance r from the profile's center at time t (exact
// Gaussian convolution reduced to one dimension).
double heat_radial(const std::function<double(double)>& profile,
                   double support, double r, double t);

double eval_Z2(const Point& x, double t, const AnsatzFields& f);
Point grad_Z2(const Point& x, double t, const AnsatzFields& f);
double lap_Z2(const Point& x, double t, const AnsatzFields& f);

// Callables wired for modulation::build_trajectory.
modulation::Fields coupling_fields(const AnsatzFields& f);

// ---- modulation state -----------------------------------------------------

// Snapshot of (lambda_i, xi_i) and their time derivatives; index 0 <-> i=1.
struct ParamState {
  std::array<double, 2> lam{1.0, 1.0};
  std::array<double, 2> dlam{0.0, 0.0};
  std::array<Point, 2> xi{};
  std::array<Point, 2> dxi{};
};
using ParamProvider = std::function<ParamState(double)>;

ParamProvider provider(const Trajectory& traj);
// Frozen parameters: dlam = 0, dxi = 0, centers at 0 and q.
ParamState frozen_state(double lam1, double lam2, const Point& q);

// ---- remainder models -----------------------------------------------------

// Envelope of the psi bound with a configurable sign:
// sign * delta0 (T-t)(1+|z|^4) inside |z| <= (T-t)^{-1/4},
// sign * delta0 / (1+|x|^2) outside.
struct PsiModel {
  double delta0 = 1e-3;
  double T = 1e-2;
  double sign = 1.0;
  double value(const Point& x, double t) const;
  double dt(const Point& x, double t) const;
  double lap(const Point& x, double t) const;
};

// Inner-layer envelopes: phi_1 = C1 lam^{7/4} R^{6-a}/(1+|y|^6) and
// phi_2 = C2 lam^{3/2} R^{6-a}/(1+|y|^6); radial and smooth.
struct PhiModel {
  double C1 = 1.0, C2 = 1.0;
  double a = 0.5;
  double R = 40.0;
  double value(int i, double r, double lam) const;
  double dr(int i, double r, double lam) const;
  double lap_y(int i, double r, double lam) const;   // phi'' + 4 phi'/r
  double dt(int i, double r, double lam, double dlam) const;  // at fixed y
};

// ---- assembled objects ----------------------------------------------------

double assemble_u_app(const Point& x, double t, const ParamState& ps,
                      const AnsatzFields& f);

// E_i(y,t) = lam_i dlam_i W6(y) + lam_i dxi_i . (W1..W5)(y).
double error_E(int i, const Point& y, const ParamState& ps);

// H_i = lam^{3/2} pU^{p-1}(y) (-Z1 - Z2 + psi)(xi + lam y) + E_i.
double source_H(int i, const Point& y, double t, const ParamState& ps,
                const AnsatzFields& f, const PsiModel* psi = nullptr);

// ---- orthogonality --------------------------------------------------------

struct OrthoResult {
  double raw = 0.0;         // int_{B_2R} H_i W_j dy
  double mass = 0.0;        // int_{B_2R} |H_i| |W_j| dy
  double normalized = 0.0;  // raw / mass
};

// Independent quadrature of the kernel pairings at a trajectory node time.
// radius <= 0 selects the full-space integral instead of B_2R.
OrthoResult orthogonality_residual(int i, int j, double t,
                                   const Trajectory& traj,
                                   const AnsatzFields& f,
                                   double radius = -1.0);

// ---- the outer source -----------------------------------------------------

struct GroupValues {
  std::array<double, 2> proj{};   // p lam^{-2}(1-etaR) U^{p-1}(-Z1 eta1 - Z2 + psi)
  std::array<double, 2> A{};
  std::array<double, 2> B{};
  std::array<double, 2> Etail{};  // lam^{-7/2} E_i (1 - etaR)
  double N = 0.0;                 // nonlinear remainder + exact cutoff collision
  double total() const;
};

GroupValues outer_G(const Point& x, double t, const ParamState& ps,
                    const AnsatzFields& f, const PhiModel* phi,
                    const PsiModel* psi);

// The exact collision part of N: (d_t - Delta)(Z1 eta1), nonzero only on
// the eta1 transition shell.
double cutoff_collision(const Point& x, double t, const AnsatzFields& f);

// Inner-display term i of the regrouped residual at a physical point.
double inner_group(int i, const Point& x, double t, const ParamState& ps,
                   const AnsatzFields& f, const PhiModel* phi,
                   const PsiModel* psi);

// Full regrouped residual: sum of inner groups, the psi heat operator, and
// every group of G. Algebraically identical to S(u_app + corrections).
double grouped_S(const Point& x, double t, const ParamState& ps,
                 const AnsatzFields& f, const PhiModel* phi,
                 const PsiModel* psi);

// ---- Lemma 5.1 majorants --------------------------------------------------

struct RegionStat {
  std::string name;
  std::size_t samples = 0;
  double sup_ratio = 0.0;   // sup |G| / (sum of active majorants)
};

struct MajorantReport {
  double a = 0.5;
  std::vector<RegionStat> regions;
  double overall = 0.0;
};

// Samples each of the ten indicator regions across a tau schedule;
// n_rad radii and 2*n_dir+1 axis-plane directions per region, max-merge.
MajorantReport majorant_check(const Trajectory& traj, const AnsatzFields& f,
                              const PhiModel* phi, const PsiModel* psi,
                              double tau_lo, double tau_hi, int n_tau,
                              int n_rad, int n_dir = 2);

// ---- rho-norm decay -------------------------------------------------------

struct RhoDecay {
  std::vector<double> tau;
  std::vector<double> norm;        // ||G(., tau)||_rho
  std::vector<double> core_bound;  // bubble-core A/B contribution bound
  double fitted_exponent = 0.0;
};

// Decay fit for an arbitrary axisymmetric source sampled in the z frame.
RhoDecay rho_norm_decay(
    const std::vector<double>& taus,
    const std::function<double(const Point&, double)>& g_of_z_tau);

RhoDecay rho_norm_G(const std::vector<double>& taus, const Trajectory& traj,
                    const AnsatzFields& f, const PhiModel* phi,
                    const PsiModel* psi);

}  // namespace forge::ansatz

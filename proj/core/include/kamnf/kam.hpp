#pragma once
// Iterative normal-form scheme: one quadratic step conjugates h + f by the
// time-1 flow of the homological generator S, the schedule drives the
// analyticity / radius / truncation / divisor-threshold ladder, and run()
// loops the step and emits a convergence report.
#include <string>

#include "kamnf/flows.hpp"
#include "kamnf/homo.hpp"

namespace kamnf {

// parameter ladder: sigma_j decreases to sigma0/2 with gaps Cstar sigma0 j^-2,
// mu_j = eps_{j-1}^{2/5} mu0, N_j = gap_j^-1 ln eps_j^-1 (predicted eps),
// kappa_0 = eps0^{1/3}, kappa_j = eps_j^{1/64}.
struct Schedule {
  double eps0 = 1e-6;
  double sigma0 = 1.0;
  double mu0 = 1.0;
  int n = 2;
  double Cstar;   // (2 sum j^-2)^-1 = 3/pi^2
  double delta0;  // eps0^{1/4}
  double kappa0;  // eps0^{1/3}

  Schedule(double eps0_, double sigma0_, double mu0_, int n_);

  double gap(int j) const;    // sigma_{j-1} - sigma_j, j >= 1
  double sigma(int j) const;  // sigma0 - sum_{i<=j} gap(i), decreasing to /2
  double mu(int j, double eps_prev) const;
  double kappa(int j, double eps_j) const;
  int N(int j, double eps_pred) const;
};

// one-step error predictor used for truncation orders and cross-checks
double predicted_epsilon(double eps_prev, double eps_cur, const Schedule& sch,
                         int j, double C = 1.0);

struct StepLog {
  int j = 0;
  double eps_before = 0, eps_after = 0;
  double S_norm = 0, smallness_bound = 0;
  double phi_disp = 0;
  double predicted = 0;
  Jet S;  // generator, kept for conjugacy checks
  DivisorAudit audit;
};

struct KamState {
  int j = 0;
  NormalFormHam h;
  PolyHamiltonian f;
  double eps = 0;       // measured jet norm of f at (sigma_j, mu_j)
  double eps_prev = 0;  // eps_{j-1} (= eps0 at j = 0)
  double mu_cur = 0;
  NormalFormHam h0;  // for drift accounting
  std::vector<StepLog> log;
};

struct KamParams {
  double s = 2.0;
  double beta = 0.25;
  int M_lie = 8;
  int J_max = 6;
  double tol = 0;  // stop once eps_j < tol
  int gl_nodes = 8;
  double pred_C = 1.0;
  double drop_rel = 1e-12;  // per-term drop threshold, relative to eps_j
  double lie_rel = 1e-10;   // Lie-series stop threshold, relative to eps_j
  // divisor-threshold exponent used by the driver for j >= 1:
  // kappa_j = eps_j^kappa_exp. The schedule's asymptotic 1/64 gives
  // kappa ~ 1 at double-precision epsilons (every divisor excluded), so
  // the driver continues the eps^{1/3} rule by default. Set to 1/64 to
  // recover the schedule formula, or fix kappa directly via kappa_fixed.
  double kappa_exp = 1.0 / 3.0;
  double kappa_fixed = 0;  // > 0: use this kappa at every step
};

struct ConvergenceReport {
  std::vector<double> eps, omega_drift, A_drift, phi_disp, exponents;
  std::string status;  // converged | excluded | budget | maxiter
  int steps = 0;
  std::string detail;
  std::string to_json() const;
};

KamState kam_init(const NormalFormHam& h0, PolyHamiltonian f0,
                  const Schedule& sch, const KamParams& p);

// advances state from index j to j+1; returns false on abort and puts the
// reason ("excluded" / "smallness" / "drift") into why
bool kam_step(KamState& st, const Schedule& sch, const KamParams& p,
              std::string* why);

ConvergenceReport run(const NormalFormHam& h0, PolyHamiltonian f0,
                      const Schedule& sch, const KamParams& p);

}  // namespace kamnf
